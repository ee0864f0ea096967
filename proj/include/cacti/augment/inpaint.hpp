#pragma once

#include <array>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cacti/image.hpp"
#include "cacti/rng.hpp"

namespace cacti::augment {

// Binary pixel mask; the region the in-painter is allowed to touch.
struct Mask {
  int h = 0, w = 0;
  std::vector<std::uint8_t> on;  // 0/1 per pixel

  Mask() = default;
  Mask(int h_, int w_) : h(h_), w(w_), on(static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_), 0) {}

  static Mask rect(int h, int w, int y0, int x0, int rh, int rw) {
    Mask m(h, w);
    for (int y = y0; y < y0 + rh; ++y)
      for (int x = x0; x < x0 + rw; ++x)
        if (y >= 0 && y < h && x >= 0 && x < w) m.at(y, x) = 1;
    return m;
  }

  std::uint8_t& at(int y, int x) { return on[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)]; }
  std::uint8_t at(int y, int x) const { return on[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)]; }

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : on) n += v ? 1 : 0;
    return n;
  }

  // tight bounding box (y0, x0, y1, x1), inclusive; requires non-empty
  std::array<int, 4> bbox() const {
    int y0 = h, x0 = w, y1 = -1, x1 = -1;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (at(y, x)) {
          y0 = std::min(y0, y);
          x0 = std::min(x0, x);
          y1 = std::max(y1, y);
          x1 = std::max(x1, x);
        }
    return {y0, x0, y1, x1};
  }
};

struct InpaintSpec {
  Mask mask;
  std::string prompt;
  std::uint64_t seed = 0;
};

namespace detail {

struct Sprite {
  // coverage in [0,1] at pixel (y, x); 0 means leave the input pixel alone
  virtual float coverage(float y, float x) const = 0;
  virtual ~Sprite() = default;
};

struct DiscSprite : Sprite {
  float cy, cx, r;
  float coverage(float y, float x) const override {
    float d = std::hypot(y - cy, x - cx);
    return d <= r ? 1.0f : 0.0f;
  }
};

struct RingSprite : Sprite {
  float cy, cx, r_outer, r_inner;
  float coverage(float y, float x) const override {
    float d = std::hypot(y - cy, x - cx);
    return (d <= r_outer && d >= r_inner) ? 1.0f : 0.0f;
  }
};

struct BoxSprite : Sprite {
  float cy, cx, hh, hw, rot;
  float coverage(float y, float x) const override {
    float cs = std::cos(rot), sn = std::sin(rot);
    float dy = y - cy, dx = x - cx;
    float ly = dy * cs + dx * sn, lx = -dy * sn + dx * cs;
    return (std::abs(ly) <= hh && std::abs(lx) <= hw) ? 1.0f : 0.0f;
  }
};

struct HalfDiscSprite : Sprite {
  float cy, cx, r;
  float coverage(float y, float x) const override {
    float d = std::hypot(y - cy, x - cx);
    return (d <= r && y >= cy) ? 1.0f : 0.0f;  // lower half (rows grow downward)
  }
};

}  // namespace detail

inline const std::vector<std::string>& builtin_prompts() {
  static const std::vector<std::string> p = {"mug", "plate", "glass", "banana", "bowl"};
  return p;
}

// Prompt-conditioned procedural sprite generator: shape family and palette
// are drawn per prompt from a seeded distribution, alpha-blended strictly
// inside the mask. Every out-of-mask byte is untouched.
inline Image inpaint(const Image& img, const InpaintSpec& spec,
                     const std::vector<std::string>& prompt_pool = builtin_prompts()) {
  require(spec.mask.h == img.h && spec.mask.w == img.w, "inpaint: mask is ", spec.mask.h, "x",
          spec.mask.w, " but image is ", img.h, "x", img.w);
  require(spec.mask.count() > 0, "inpaint: mask must be non-empty");
  bool known = false;
  for (const auto& p : prompt_pool) known = known || p == spec.prompt;
  if (!known) {
    std::string pool;
    for (const auto& p : prompt_pool) pool += (pool.empty() ? "" : ", ") + p;
    fail("inpaint: unknown prompt '", spec.prompt, "' (pool: ", pool, ")");
  }

  Rng rng(spec.seed);
  auto [y0, x0, y1, x1] = spec.mask.bbox();
  float cy = 0.5f * static_cast<float>(y0 + y1) + rng.uniformf(-1.f, 1.f);
  float cx = 0.5f * static_cast<float>(x0 + x1) + rng.uniformf(-1.f, 1.f);
  float extent = 0.5f * static_cast<float>(std::min(y1 - y0, x1 - x0));
  float size = std::max(1.5f, extent * rng.uniformf(0.65f, 0.95f));

  // seeded palette per prompt family
  auto palette = [&](float r, float g, float b, float spread) {
    std::array<float, 3> c = {r + rng.uniformf(-spread, spread), g + rng.uniformf(-spread, spread),
                              b + rng.uniformf(-spread, spread)};
    return c;
  };

  std::vector<std::pair<std::unique_ptr<detail::Sprite>, std::array<float, 3>>> parts;
  float alpha = 1.0f;
  if (spec.prompt == "mug") {
    auto body = std::make_unique<detail::DiscSprite>();
    body->cy = cy;
    body->cx = cx;
    body->r = size * 0.8f;
    auto handle = std::make_unique<detail::RingSprite>();
    handle->cy = cy;
    handle->cx = cx + size * 0.8f;
    handle->r_outer = size * 0.45f;
    handle->r_inner = size * 0.25f;
    auto color = palette(70, 90, 200, 50);
    parts.emplace_back(std::move(body), color);
    parts.emplace_back(std::move(handle), color);
  } else if (spec.prompt == "plate") {
    auto outer = std::make_unique<detail::DiscSprite>();
    outer->cy = cy;
    outer->cx = cx;
    outer->r = size;
    auto inner = std::make_unique<detail::DiscSprite>();
    inner->cy = cy;
    inner->cx = cx;
    inner->r = size * 0.6f;
    auto base = palette(210, 210, 205, 35);
    auto well = base;
    for (auto& v : well) v = std::max(0.0f, v - 30.0f);
    parts.emplace_back(std::move(outer), base);
    parts.emplace_back(std::move(inner), well);
  } else if (spec.prompt == "glass") {
    auto body = std::make_unique<detail::BoxSprite>();
    body->cy = cy;
    body->cx = cx;
    body->hh = size;
    body->hw = size * 0.55f;
    body->rot = rng.uniformf(-0.2f, 0.2f);
    parts.emplace_back(std::move(body), palette(170, 200, 220, 30));
    alpha = 0.6f;
  } else if (spec.prompt == "banana") {
    auto body = std::make_unique<detail::BoxSprite>();
    body->cy = cy;
    body->cx = cx;
    body->hh = size * 0.3f;
    body->hw = size;
    body->rot = rng.uniformf(0.0f, 3.14159265f);
    parts.emplace_back(std::move(body), palette(215, 200, 50, 30));
  } else {  // bowl
    auto body = std::make_unique<detail::HalfDiscSprite>();
    body->cy = cy - size * 0.2f;
    body->cx = cx;
    body->r = size;
    parts.emplace_back(std::move(body), palette(150, 90, 60, 45));
  }

  Image out = img;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      if (!spec.mask.at(y, x)) continue;
      for (const auto& [sprite, color] : parts) {
        float cov = sprite->coverage(static_cast<float>(y), static_cast<float>(x));
        if (cov <= 0) continue;
        float a = alpha * cov;
        for (int c = 0; c < 3; ++c) {
          float mixed = (1.0f - a) * static_cast<float>(out.at(y, x, c)) +
                        a * color[static_cast<std::size_t>(c)];
          out.set(y, x, c, quantize_channel(mixed));
        }
      }
    }
  return out;
}

}  // namespace cacti::augment
