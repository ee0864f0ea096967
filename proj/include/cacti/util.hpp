#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cacti {

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw std::runtime_error(os.str());
}

template <typename... Args>
void require(bool cond, Args&&... args) {
  if (!cond) fail(std::forward<Args>(args)...);
}

inline float clampf(float v, float lo, float hi) { return std::min(hi, std::max(lo, v)); }

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (T x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

// Runs fn(0..n-1). Work items must be independent; each writes only its own
// output slot, so the result does not depend on the number of workers.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  int nw = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// FNV-1a over bytes, one lane.
inline std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// 32-byte content fingerprint: four FNV lanes with distinct offsets. Not
// cryptographic; detects accidental content changes.
struct Fingerprint {
  std::array<std::uint8_t, 32> bytes{};

  bool operator==(const Fingerprint&) const = default;

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (std::uint8_t b : bytes) {
      s.push_back(digits[b >> 4]);
      s.push_back(digits[b & 0xf]);
    }
    return s;
  }

  static Fingerprint from_hex(const std::string& s) {
    require(s.size() == 64, "fingerprint hex must be 64 chars, got ", s.size());
    auto nib = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      fail("bad fingerprint hex char '", c, "'");
    };
    Fingerprint f;
    for (int i = 0; i < 32; ++i)
      f.bytes[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>((nib(s[static_cast<std::size_t>(2 * i)]) << 4) |
                                    nib(s[static_cast<std::size_t>(2 * i + 1)]));
    return f;
  }
};

class FingerprintBuilder {
 public:
  FingerprintBuilder() {
    static constexpr std::uint64_t offsets[4] = {0xcbf29ce484222325ull, 0x9e3779b97f4a7c15ull,
                                                 0xd6e8feb86659fd93ull, 0xa0761d6478bd642full};
    for (int i = 0; i < 4; ++i) lanes_[i] = offsets[i];
  }

  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      for (int l = 0; l < 4; ++l) {
        lanes_[l] ^= static_cast<std::uint64_t>(p[i]) + static_cast<std::uint64_t>(l) * 0x9e37ull;
        lanes_[l] *= 0x100000001b3ull;
      }
    }
  }

  template <typename T>
  void update_pod(const T& v) {
    update(&v, sizeof(T));
  }

  template <typename T>
  void update_vec(const std::vector<T>& v) {
    update(v.data(), v.size() * sizeof(T));
  }

  Fingerprint digest() const {
    Fingerprint f;
    for (int l = 0; l < 4; ++l)
      for (int b = 0; b < 8; ++b)
        f.bytes[static_cast<std::size_t>(l * 8 + b)] =
            static_cast<std::uint8_t>(lanes_[l] >> (8 * b));
    return f;
  }

 private:
  std::uint64_t lanes_[4];
};

}  // namespace cacti
