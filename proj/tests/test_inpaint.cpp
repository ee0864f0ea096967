#include <catch2/catch_amalgamated.hpp>

#include "cacti/augment/inpaint.hpp"

using namespace cacti;
using namespace cacti::augment;

namespace {
Image random_image(std::uint64_t seed, int n = 48) {
  Rng rng(seed);
  Image img(n, n);
  for (auto& b : img.px) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}
}  // namespace

TEST_CASE("in-painting never touches out-of-mask bytes") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(trial);
    auto img = random_image(trial + 1000);
    int rh = 4 + rng.below_int(20), rw = 4 + rng.below_int(20);
    int y0 = rng.below_int(48 - rh), x0 = rng.below_int(48 - rw);
    InpaintSpec spec;
    spec.mask = Mask::rect(48, 48, y0, x0, rh, rw);
    spec.prompt = builtin_prompts()[static_cast<std::size_t>(rng.below_int(5))];
    spec.seed = trial * 31 + 7;
    auto out = inpaint(img, spec);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x)
        if (!spec.mask.at(y, x))
          for (int c = 0; c < 3; ++c) REQUIRE(out.at(y, x, c) == img.at(y, x, c));
  }
}

TEST_CASE("in-painting changes something inside the mask") {
  auto img = random_image(3);
  InpaintSpec spec{Mask::rect(48, 48, 10, 10, 14, 14), "plate", 5};
  auto out = inpaint(img, spec);
  REQUIRE(!(out == img));
}

TEST_CASE("same prompt and seed give identical sprites") {
  auto img = random_image(9);
  InpaintSpec spec{Mask::rect(48, 48, 20, 8, 12, 16), "mug", 1234};
  REQUIRE(inpaint(img, spec) == inpaint(img, spec));
  InpaintSpec other = spec;
  other.seed = 1235;
  REQUIRE(!(inpaint(img, other) == inpaint(img, spec)));
}

TEST_CASE("empty masks are rejected") {
  auto img = random_image(1);
  InpaintSpec spec{Mask(48, 48), "mug", 0};
  REQUIRE_THROWS_WITH(inpaint(img, spec), Catch::Matchers::ContainsSubstring("non-empty"));
}

TEST_CASE("unknown prompts are rejected with the pool listed") {
  auto img = random_image(2);
  InpaintSpec spec{Mask::rect(48, 48, 5, 5, 8, 8), "spaceship", 0};
  REQUIRE_THROWS_WITH(inpaint(img, spec), Catch::Matchers::ContainsSubstring("mug, plate, glass"));
}

TEST_CASE("mask dimensions must match the image") {
  auto img = random_image(4);
  InpaintSpec spec{Mask::rect(32, 32, 5, 5, 8, 8), "mug", 0};
  REQUIRE_THROWS(inpaint(img, spec));
}

TEST_CASE("every prompt in the pool renders") {
  auto img = random_image(6);
  for (const auto& prompt : builtin_prompts()) {
    InpaintSpec spec{Mask::rect(48, 48, 12, 12, 16, 16), prompt, 77};
    auto out = inpaint(img, spec);
    REQUIRE(!(out == img));
  }
}
