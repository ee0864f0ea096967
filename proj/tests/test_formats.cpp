#include <catch2/catch_amalgamated.hpp>

#include "cacti/io/cache.hpp"
#include "cacti/io/shard.hpp"
#include "cacti/rng.hpp"

using namespace cacti;
using namespace cacti::io;

namespace {

void push_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(static_cast<std::uint8_t>(v));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
}
void push_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void push_u64(std::vector<std::uint8_t>& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void push_f32(std::vector<std::uint8_t>& b, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  push_u32(b, bits);
}

ShardData random_shard(std::uint64_t seed) {
  Rng rng(seed);
  ShardData s;
  s.task_id = static_cast<std::uint16_t>(rng.below(6));
  s.layout_id = static_cast<std::uint16_t>(rng.below(100));
  s.height = 4;
  s.width = 4;
  s.channels = 3;
  s.proprio_dim = 6;
  s.action_dim = 3;
  s.state_dim = 5;
  s.provenance = "{\"stage\":\"test\"}";
  int eps = 1 + rng.below_int(3);
  for (int e = 0; e < eps; ++e) {
    ShardEpisode ep;
    ep.success = rng.uniform() < 0.5;
    int len = 1 + rng.below_int(4);
    for (int t = 0; t < len; ++t) {
      ShardStep st;
      for (int i = 0; i < 4 * 4 * 3; ++i) st.image.push_back(static_cast<std::uint8_t>(rng.below(256)));
      for (int i = 0; i < 6; ++i) st.proprio.push_back(rng.normalf());
      for (int i = 0; i < 3; ++i) st.action.push_back(rng.uniformf(-1, 1));
      for (int i = 0; i < 5; ++i) st.state.push_back(rng.normalf());
      ep.steps.push_back(std::move(st));
    }
    s.episodes.push_back(std::move(ep));
  }
  return s;
}

}  // namespace

TEST_CASE("shard round trip is byte-identical") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = random_shard(seed);
    auto bytes = serialize_shard(s);
    auto back = parse_shard(bytes, "mem");
    REQUIRE(back == s);
    REQUIRE(serialize_shard(back) == bytes);
  }
}

// Golden-bytes fixture: a shard assembled by hand from the format layout.
// If this test breaks, the on-disk format changed and needs a version bump.
TEST_CASE("hand-assembled shard bytes parse to the expected records") {
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), {'C', 'A', 'C', 'T'});
  push_u16(bytes, 1);   // version
  push_u16(bytes, 2);   // task_id
  push_u16(bytes, 3);   // layout_id
  push_u32(bytes, 1);   // episode count
  push_u16(bytes, 2);   // H
  push_u16(bytes, 2);   // W
  push_u16(bytes, 3);   // C
  push_u16(bytes, 2);   // proprio dim
  push_u16(bytes, 1);   // action dim
  push_u16(bytes, 2);   // state dim
  push_u32(bytes, 4);   // provenance length
  bytes.insert(bytes.end(), {'t', 'e', 's', 't'});
  push_u16(bytes, 1);   // episode length
  bytes.push_back(1);   // success flag
  for (int i = 0; i < 12; ++i) bytes.push_back(static_cast<std::uint8_t>(i * 7));
  push_f32(bytes, 0.25f);
  push_f32(bytes, -1.5f);
  push_f32(bytes, 0.75f);
  push_f32(bytes, 2.0f);
  push_f32(bytes, -0.125f);

  auto s = parse_shard(bytes, "golden");
  REQUIRE(s.task_id == 2);
  REQUIRE(s.layout_id == 3);
  REQUIRE(s.shard_uid() == ((2u << 16) | 3u));
  REQUIRE(s.provenance == "test");
  REQUIRE(s.episodes.size() == 1);
  REQUIRE(s.episodes[0].success);
  REQUIRE(s.episodes[0].steps.size() == 1);
  const auto& st = s.episodes[0].steps[0];
  REQUIRE(st.image[11] == 77);
  REQUIRE(st.proprio == std::vector<float>{0.25f, -1.5f});
  REQUIRE(st.action == std::vector<float>{0.75f});
  REQUIRE(st.state == std::vector<float>{2.0f, -0.125f});

  REQUIRE(serialize_shard(s) == bytes);
}

TEST_CASE("corrupt shards produce the documented errors") {
  auto s = random_shard(1);
  auto bytes = serialize_shard(s);

  SECTION("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    REQUIRE_THROWS_WITH(parse_shard(bad, "m"), Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("unknown version") {
    auto bad = bytes;
    bad[4] = 9;
    REQUIRE_THROWS_WITH(parse_shard(bad, "m"),
                        Catch::Matchers::ContainsSubstring("unsupported shard version"));
  }
  SECTION("truncation names the missing field and offset") {
    auto bad = bytes;
    bad.resize(bad.size() - 3);
    try {
      parse_shard(bad, "m");
      FAIL("expected truncation error");
    } catch (const std::exception& e) {
      std::string msg = e.what();
      REQUIRE(msg.find("truncated") != std::string::npos);
      REQUIRE(msg.find("offset") != std::string::npos);
    }
    auto header_only = bytes;
    header_only.resize(10);
    REQUIRE_THROWS_WITH(parse_shard(header_only, "m"),
                        Catch::Matchers::ContainsSubstring("episode_count"));
  }
  SECTION("trailing bytes are rejected") {
    auto bad = bytes;
    bad.push_back(0);
    REQUIRE_THROWS_WITH(parse_shard(bad, "m"), Catch::Matchers::ContainsSubstring("trailing"));
  }
}

TEST_CASE("cache round trip and lookup") {
  EmbeddingCache c;
  c.dim = 3;
  Rng rng(4);
  for (auto& b : c.fingerprint.bytes) b = static_cast<std::uint8_t>(rng.below(256));
  for (std::uint32_t i = 0; i < 20; ++i) {
    float v[3] = {rng.normalf(), rng.normalf(), rng.normalf()};
    c.append({i / 7, i / 3, i}, v);
  }
  auto bytes = serialize_cache(c);
  auto back = parse_cache(bytes, "mem");
  REQUIRE(back.dim == 3);
  REQUIRE(back.fingerprint == c.fingerprint);
  REQUIRE(back.keys.size() == 20);
  REQUIRE(back.values == c.values);
  REQUIRE(serialize_cache(back) == bytes);
  REQUIRE(back.find(0, 0, 0) != nullptr);
  REQUIRE(back.find(9, 9, 9) == nullptr);
}

TEST_CASE("hand-assembled cache bytes parse to the expected records") {
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), {'C', 'E', 'M', 'B'});
  push_u16(bytes, 1);  // version
  for (int i = 0; i < 32; ++i) bytes.push_back(static_cast<std::uint8_t>(i));
  push_u16(bytes, 2);  // dim
  push_u64(bytes, 2);  // entries
  push_u32(bytes, 65539);  // shard uid (task 1, layout 3)
  push_u32(bytes, 0);
  push_u32(bytes, 0);
  push_f32(bytes, 1.5f);
  push_f32(bytes, -2.0f);
  push_u32(bytes, 65539);
  push_u32(bytes, 0);
  push_u32(bytes, 1);
  push_f32(bytes, 0.0f);
  push_f32(bytes, 3.0f);

  auto c = parse_cache(bytes, "golden");
  REQUIRE(c.dim == 2);
  REQUIRE(c.size() == 2);
  REQUIRE(c.fingerprint.bytes[31] == 31);
  const float* row = c.at(65539, 0, 1);
  REQUIRE(row[0] == 0.0f);
  REQUIRE(row[1] == 3.0f);
  REQUIRE(serialize_cache(c) == bytes);
}

TEST_CASE("cache rejects out-of-order and corrupt input") {
  EmbeddingCache c;
  c.dim = 1;
  float v = 1.0f;
  c.append({5, 0, 0}, &v);
  REQUIRE_THROWS(c.append({4, 0, 0}, &v));

  auto bytes = serialize_cache(c);
  auto bad = bytes;
  bad[0] = 'Z';
  REQUIRE_THROWS_WITH(parse_cache(bad, "m"), Catch::Matchers::ContainsSubstring("magic"));
  bad = bytes;
  bad.resize(bad.size() - 2);
  REQUIRE_THROWS_WITH(parse_cache(bad, "m"), Catch::Matchers::ContainsSubstring("truncated"));
}

TEST_CASE("fingerprint hex round trip") {
  FingerprintBuilder fb;
  fb.update("hello", 5);
  auto f = fb.digest();
  REQUIRE(Fingerprint::from_hex(f.hex()) == f);
  FingerprintBuilder fb2;
  fb2.update("hellp", 5);
  REQUIRE(!(fb2.digest() == f));
}
