#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cacti/util.hpp"

namespace cacti::io {

// Little-endian byte writer/reader with field-aware errors.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    buf_.push_back(static_cast<std::uint8_t>(v));
    buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  const std::vector<std::uint8_t>& data() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& buf, std::string origin)
      : buf_(buf), origin_(std::move(origin)) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == buf_.size(); }

  std::uint8_t u8(const char* field) {
    need(1, field);
    return buf_[pos_++];
  }
  std::uint16_t u16(const char* field) {
    need(2, field);
    std::uint16_t v = static_cast<std::uint16_t>(buf_[pos_] | (buf_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(const char* field) {
    std::uint32_t bits = u32(field);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  void bytes(void* out, std::size_t n, const char* field) {
    need(n, field);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  void f32_array(float* out, std::size_t n, const char* field) {
    need(4 * n, field);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<std::uint32_t>(buf_[pos_ + 4 * i + static_cast<std::size_t>(b)]) << (8 * b);
      std::memcpy(out + i, &bits, 4);
    }
    pos_ += 4 * n;
  }

  void need(std::size_t n, const char* field) {
    require(pos_ + n <= buf_.size(), origin_, ": truncated while reading field '", field,
            "' at byte offset ", pos_, " (need ", n, " bytes, have ", buf_.size() - pos_, ")");
  }

 private:
  const std::vector<std::uint8_t>& buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open '", path, "'");
  f.seekg(0, std::ios::end);
  auto n = static_cast<std::size_t>(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> buf(n);
  if (n) f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  require(f.good(), "failed reading ", n, " bytes from '", path, "'");
  return buf;
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& buf) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "cannot write '", path, "'");
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  require(f.good(), "failed writing ", buf.size(), " bytes to '", path, "'");
}

// One recorded step: rendered frame plus the aligned real-valued vectors.
struct ShardStep {
  std::vector<std::uint8_t> image;
  std::vector<float> proprio;
  std::vector<float> action;
  std::vector<float> state;

  bool operator==(const ShardStep&) const = default;
};

struct ShardEpisode {
  bool success = false;
  std::vector<ShardStep> steps;

  bool operator==(const ShardEpisode&) const = default;
};

// Binary episode container for one (task, layout) cell. Magic "CACT",
// version 1, little-endian throughout, 32-bit IEEE reals.
struct ShardData {
  static constexpr std::uint16_t kVersion = 1;

  std::uint16_t task_id = 0;
  std::uint16_t layout_id = 0;
  std::uint16_t height = 0, width = 0, channels = 3;
  std::uint16_t proprio_dim = 0, action_dim = 0, state_dim = 0;
  std::string provenance;  // free-form, JSON by convention
  std::vector<ShardEpisode> episodes;

  bool operator==(const ShardData&) const = default;

  std::uint32_t shard_uid() const {
    return (static_cast<std::uint32_t>(task_id) << 16) | layout_id;
  }

  std::size_t total_steps() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.steps.size();
    return n;
  }

  void validate_step(const ShardStep& s, const char* what) const {
    std::size_t img = static_cast<std::size_t>(height) * width * channels;
    require(s.image.size() == img, what, ": image has ", s.image.size(), " bytes, header says ", img);
    require(s.proprio.size() == proprio_dim, what, ": proprio dim mismatch");
    require(s.action.size() == action_dim, what, ": action dim mismatch");
    require(s.state.size() == state_dim, what, ": state dim mismatch");
  }
};

inline std::vector<std::uint8_t> serialize_shard(const ShardData& s) {
  ByteWriter w;
  w.bytes("CACT", 4);
  w.u16(ShardData::kVersion);
  w.u16(s.task_id);
  w.u16(s.layout_id);
  w.u32(static_cast<std::uint32_t>(s.episodes.size()));
  w.u16(s.height);
  w.u16(s.width);
  w.u16(s.channels);
  w.u16(s.proprio_dim);
  w.u16(s.action_dim);
  w.u16(s.state_dim);
  w.u32(static_cast<std::uint32_t>(s.provenance.size()));
  w.bytes(s.provenance.data(), s.provenance.size());
  for (const auto& ep : s.episodes) {
    require(ep.steps.size() <= 0xffff, "episode too long for 16-bit length");
    w.u16(static_cast<std::uint16_t>(ep.steps.size()));
    w.u8(ep.success ? 1 : 0);
    for (const auto& st : ep.steps) {
      s.validate_step(st, "serialize_shard");
      w.bytes(st.image.data(), st.image.size());
      for (float v : st.proprio) w.f32(v);
      for (float v : st.action) w.f32(v);
      for (float v : st.state) w.f32(v);
    }
  }
  return w.data();
}

inline ShardData parse_shard(const std::vector<std::uint8_t>& buf, const std::string& origin) {
  ByteReader r(buf, origin);
  char magic[4];
  r.bytes(magic, 4, "magic");
  require(std::memcmp(magic, "CACT", 4) == 0, origin, ": bad magic at byte offset 0 (expected \"CACT\")");
  std::uint16_t version = r.u16("version");
  require(version == ShardData::kVersion, origin, ": unsupported shard version ", version,
          " at byte offset 4 (expected ", ShardData::kVersion, ")");
  ShardData s;
  s.task_id = r.u16("task_id");
  s.layout_id = r.u16("layout_id");
  std::uint32_t n_episodes = r.u32("episode_count");
  s.height = r.u16("height");
  s.width = r.u16("width");
  s.channels = r.u16("channels");
  s.proprio_dim = r.u16("proprio_dim");
  s.action_dim = r.u16("action_dim");
  s.state_dim = r.u16("state_dim");
  std::uint32_t prov_len = r.u32("provenance_len");
  s.provenance.resize(prov_len);
  if (prov_len) r.bytes(s.provenance.data(), prov_len, "provenance");
  std::size_t img = static_cast<std::size_t>(s.height) * s.width * s.channels;
  s.episodes.reserve(n_episodes);
  for (std::uint32_t e = 0; e < n_episodes; ++e) {
    ShardEpisode ep;
    std::uint16_t len = r.u16("episode_length");
    ep.success = r.u8("success_flag") != 0;
    ep.steps.resize(len);
    for (auto& st : ep.steps) {
      st.image.resize(img);
      if (img) r.bytes(st.image.data(), img, "image");
      st.proprio.resize(s.proprio_dim);
      r.f32_array(st.proprio.data(), s.proprio_dim, "proprio");
      st.action.resize(s.action_dim);
      r.f32_array(st.action.data(), s.action_dim, "action");
      st.state.resize(s.state_dim);
      r.f32_array(st.state.data(), s.state_dim, "state");
    }
    s.episodes.push_back(std::move(ep));
  }
  require(r.done(), origin, ": ", buf.size() - r.offset(),
          " trailing bytes after the last declared episode (offset ", r.offset(), ")");
  return s;
}

inline void write_shard(const std::string& path, const ShardData& s) {
  write_file_bytes(path, serialize_shard(s));
}

inline ShardData read_shard(const std::string& path) {
  return parse_shard(read_file_bytes(path), path);
}

}  // namespace cacti::io
