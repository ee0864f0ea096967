#pragma once

#include "cacti/image.hpp"
#include "cacti/sim/world.hpp"

namespace cacti::sim {

// Texture modulation factor at a workspace point. Patterns are functions of
// world coordinates so they stay put as the camera never moves.
inline float texture_factor(const std::string& tag, float x, float y) {
  if (tag == "stripes") return static_cast<int>(std::floor(x / 0.02f)) % 2 == 0 ? 1.0f : 0.8f;
  if (tag == "dots")
    return (static_cast<int>(std::floor(x / 0.015f)) % 3 == 0 &&
            static_cast<int>(std::floor(y / 0.015f)) % 3 == 0)
               ? 0.75f
               : 1.0f;
  if (tag == "checker")
    return (static_cast<int>(std::floor(x / 0.025f)) + static_cast<int>(std::floor(y / 0.025f))) % 2 == 0
               ? 1.0f
               : 0.85f;
  return 1.0f;  // plain / unknown tags render flat
}

namespace detail {

struct RenderCtx {
  Image* img;
  int size;
  float lighting;

  float px_to_world(int p) const { return (static_cast<float>(p) + 0.5f) / static_cast<float>(size); }
  int world_to_px(float v) const {
    return std::clamp(static_cast<int>(std::floor(v * static_cast<float>(size))), 0, size - 1);
  }

  void put(int yrow, int xcol, const std::array<float, 3>& color, float factor) {
    for (int c = 0; c < 3; ++c)
      img->set(yrow, xcol, c, quantize_channel(color[static_cast<std::size_t>(c)] * factor * lighting));
  }
};

// y axis points up in the workspace; image rows run top-to-bottom
inline int row_of(const RenderCtx& ctx, float wy) { return ctx.size - 1 - ctx.world_to_px(wy); }

inline std::array<float, 3> themed_color(const ObjectSpec& spec, const VisualTheme& theme,
                                         std::size_t idx, float scale = 1.0f) {
  std::array<float, 3> c;
  for (int k = 0; k < 3; ++k)
    c[static_cast<std::size_t>(k)] =
        std::max(0.0f, (spec.color[static_cast<std::size_t>(k)] +
                        theme.offset[idx][static_cast<std::size_t>(k)]) *
                           scale);
  return c;
}

inline void fill_disc(RenderCtx& ctx, Vec2 center, float radius,
                      const std::array<float, 3>& color, const std::string& texture) {
  int x0 = ctx.world_to_px(center.x - radius), x1 = ctx.world_to_px(center.x + radius);
  int y0 = ctx.world_to_px(center.y - radius), y1 = ctx.world_to_px(center.y + radius);
  for (int py = y0; py <= y1; ++py)
    for (int px = x0; px <= x1; ++px) {
      float wx = ctx.px_to_world(px), wy = ctx.px_to_world(py);
      float dx = wx - center.x, dy = wy - center.y;
      if (dx * dx + dy * dy <= radius * radius)
        ctx.put(row_of(ctx, wy), px, color, texture_factor(texture, wx, wy));
    }
}

inline void fill_box(RenderCtx& ctx, Vec2 center, float hw, float hh, float rot,
                     const std::array<float, 3>& color, const std::string& texture) {
  float r = std::sqrt(hw * hw + hh * hh);
  float cs = std::cos(rot), sn = std::sin(rot);
  int x0 = ctx.world_to_px(center.x - r), x1 = ctx.world_to_px(center.x + r);
  int y0 = ctx.world_to_px(center.y - r), y1 = ctx.world_to_px(center.y + r);
  for (int py = y0; py <= y1; ++py)
    for (int px = x0; px <= x1; ++px) {
      float wx = ctx.px_to_world(px), wy = ctx.px_to_world(py);
      float dx = wx - center.x, dy = wy - center.y;
      float lx = dx * cs + dy * sn, ly = -dx * sn + dy * cs;
      if (std::abs(lx) <= hw && std::abs(ly) <= hh)
        ctx.put(row_of(ctx, wy), px, color, texture_factor(texture, wx, wy));
    }
}

inline void fill_capsule(RenderCtx& ctx, Vec2 a, Vec2 b, float radius,
                         const std::array<float, 3>& color) {
  float minx = std::min(a.x, b.x) - radius, maxx = std::max(a.x, b.x) + radius;
  float miny = std::min(a.y, b.y) - radius, maxy = std::max(a.y, b.y) + radius;
  Vec2 ab = b - a;
  float len2 = ab.x * ab.x + ab.y * ab.y;
  int x0 = ctx.world_to_px(minx), x1 = ctx.world_to_px(maxx);
  int y0 = ctx.world_to_px(miny), y1 = ctx.world_to_px(maxy);
  for (int py = y0; py <= y1; ++py)
    for (int px = x0; px <= x1; ++px) {
      float wx = ctx.px_to_world(px), wy = ctx.px_to_world(py);
      Vec2 p{wx, wy};
      float t = len2 > 0 ? clampf(((p - a).x * ab.x + (p - a).y * ab.y) / len2, 0.0f, 1.0f) : 0.0f;
      Vec2 close = a + ab * t;
      if (dist(p, close) <= radius) ctx.put(row_of(ctx, wy), px, color, 1.0f);
    }
}

}  // namespace detail

// Painter's-algorithm rasterization: background, objects in roster order
// (articulated body then door then handle), robot marker on top. Lighting
// multiplies every channel before the clamp. Never mutates SimState.
inline Image render_image(const World& w, const Layout& layout, const SimState& s,
                          const VisualTheme& theme) {
  Image img(w.image_size, w.image_size);
  detail::RenderCtx ctx{&img, w.image_size, theme.lighting};

  std::uint8_t bg = quantize_channel(theme.background * theme.lighting);
  for (auto& b : img.px) b = bg;

  for (std::size_t i = 0; i < w.roster.size(); ++i) {
    const auto& spec = w.roster[i];
    auto color = detail::themed_color(spec, theme, i);
    const std::string& tex = theme.texture[i];
    if (spec.kind == ObjectKind::free_object) {
      if (spec.shape == ShapeKind::disc)
        detail::fill_disc(ctx, s.obj_pos[i], spec.half_w, color, tex);
      else
        detail::fill_box(ctx, s.obj_pos[i], spec.half_w, spec.half_h, layout.orient[i], color, tex);
    } else {
      detail::fill_box(ctx, s.obj_pos[i], spec.half_w, spec.half_h, spec.facing, color, tex);
      Vec2 handle = w.handle_pos(static_cast<int>(i), s);
      detail::fill_capsule(ctx, s.obj_pos[i], handle, 0.008f,
                           detail::themed_color(spec, theme, i, 0.7f));
      detail::fill_disc(ctx, handle, 0.014f, detail::themed_color(spec, theme, i, 1.3f), "plain");
    }
  }

  detail::fill_disc(ctx, s.robot_pos, w.robot_radius, {250, 60, 230}, "plain");
  detail::fill_disc(ctx, s.robot_pos, w.robot_radius * (0.2f + 0.5f * s.aperture), {25, 25, 25},
                    "plain");
  return img;
}

inline Observation render(const World& w, const Layout& layout, const SimState& s,
                          const VisualTheme& theme) {
  Observation o;
  o.image = render_image(w, layout, s, theme);
  o.proprio = w.proprio(s);
  return o;
}

}  // namespace cacti::sim
