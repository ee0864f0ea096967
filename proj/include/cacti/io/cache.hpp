#pragma once

#include <algorithm>
#include <cstring>

#include "cacti/io/shard.hpp"
#include "cacti/util.hpp"

namespace cacti::io {

// Frame-level embedding store, keyed by (shard uid, episode, step) and bound
// to the producing encoder via its fingerprint. Magic "CEMB", version 1.
struct EmbeddingCache {
  static constexpr std::uint16_t kVersion = 1;

  struct Key {
    std::uint32_t shard_uid = 0;
    std::uint32_t episode = 0;
    std::uint32_t step = 0;

    auto operator<=>(const Key&) const = default;
  };

  Fingerprint fingerprint;
  std::uint16_t dim = 0;
  std::vector<Key> keys;      // sorted ascending
  std::vector<float> values;  // keys.size() * dim, row i belongs to keys[i]

  std::size_t size() const { return keys.size(); }

  const float* row(std::size_t i) const { return values.data() + i * dim; }

  void append(Key k, const float* v) {
    require(keys.empty() || keys.back() < k,
            "cache entries must be appended in strictly increasing key order");
    keys.push_back(k);
    values.insert(values.end(), v, v + dim);
  }

  const float* find(std::uint32_t shard_uid, std::uint32_t episode, std::uint32_t step) const {
    Key k{shard_uid, episode, step};
    auto it = std::lower_bound(keys.begin(), keys.end(), k);
    if (it == keys.end() || !(*it == k)) return nullptr;
    return row(static_cast<std::size_t>(it - keys.begin()));
  }

  const float* at(std::uint32_t shard_uid, std::uint32_t episode, std::uint32_t step) const {
    const float* p = find(shard_uid, episode, step);
    require(p != nullptr, "cache has no entry for shard ", shard_uid, " episode ", episode,
            " step ", step);
    return p;
  }
};

inline std::vector<std::uint8_t> serialize_cache(const EmbeddingCache& c) {
  require(c.values.size() == c.keys.size() * c.dim, "cache value array does not match key count");
  ByteWriter w;
  w.bytes("CEMB", 4);
  w.u16(EmbeddingCache::kVersion);
  w.bytes(c.fingerprint.bytes.data(), 32);
  w.u16(c.dim);
  w.u64(c.keys.size());
  for (std::size_t i = 0; i < c.keys.size(); ++i) {
    w.u32(c.keys[i].shard_uid);
    w.u32(c.keys[i].episode);
    w.u32(c.keys[i].step);
    for (std::uint16_t d = 0; d < c.dim; ++d) w.f32(c.values[i * c.dim + d]);
  }
  return w.data();
}

inline EmbeddingCache parse_cache(const std::vector<std::uint8_t>& buf, const std::string& origin) {
  ByteReader r(buf, origin);
  char magic[4];
  r.bytes(magic, 4, "magic");
  require(std::memcmp(magic, "CEMB", 4) == 0, origin, ": bad magic at byte offset 0 (expected \"CEMB\")");
  std::uint16_t version = r.u16("version");
  require(version == EmbeddingCache::kVersion, origin, ": unsupported cache version ", version,
          " at byte offset 4 (expected ", EmbeddingCache::kVersion, ")");
  EmbeddingCache c;
  r.bytes(c.fingerprint.bytes.data(), 32, "fingerprint");
  c.dim = r.u16("dim");
  std::uint64_t n = r.u64("entry_count");
  c.keys.reserve(n);
  c.values.resize(n * c.dim);
  EmbeddingCache::Key prev{};
  for (std::uint64_t i = 0; i < n; ++i) {
    EmbeddingCache::Key k;
    k.shard_uid = r.u32("entry_shard_uid");
    k.episode = r.u32("entry_episode");
    k.step = r.u32("entry_step");
    require(i == 0 || prev < k, origin, ": cache entries out of order at record ", i,
            " (byte offset ", r.offset(), ")");
    prev = k;
    c.keys.push_back(k);
    r.f32_array(c.values.data() + i * c.dim, c.dim, "entry_values");
  }
  require(r.done(), origin, ": ", buf.size() - r.offset(), " trailing bytes after the last record");
  return c;
}

inline void write_cache(const std::string& path, const EmbeddingCache& c) {
  write_file_bytes(path, serialize_cache(c));
}

inline EmbeddingCache read_cache(const std::string& path) {
  return parse_cache(read_file_bytes(path), path);
}

}  // namespace cacti::io
