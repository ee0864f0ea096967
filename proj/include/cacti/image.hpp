#pragma once

#include <cstdint>
#include <vector>

#include "cacti/rng.hpp"
#include "cacti/util.hpp"

namespace cacti {

// Interleaved RGB, 8 bits per channel, row-major from the top-left.
struct Image {
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> px;

  Image() = default;
  Image(int h_, int w_) : h(h_), w(w_), px(static_cast<std::size_t>(h_) * static_cast<std::size_t>(w_) * 3, 0) {}

  std::size_t idx(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) * 3 +
           static_cast<std::size_t>(c);
  }
  std::uint8_t at(int y, int x, int c) const { return px[idx(y, x, c)]; }
  void set(int y, int x, int c, std::uint8_t v) { px[idx(y, x, c)] = v; }

  bool operator==(const Image&) const = default;
};

inline std::uint8_t quantize_channel(float v) {
  return static_cast<std::uint8_t>(clampf(std::round(v), 0.0f, 255.0f));
}

// Box-downsample to (oh, ow), channels scaled to [0,1].
inline std::vector<float> downsample(const Image& img, int oh, int ow) {
  std::vector<float> out(static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow) * 3, 0.0f);
  for (int oy = 0; oy < oh; ++oy) {
    int y0 = oy * img.h / oh, y1 = (oy + 1) * img.h / oh;
    for (int ox = 0; ox < ow; ++ox) {
      int x0 = ox * img.w / ow, x1 = (ox + 1) * img.w / ow;
      float sum[3] = {0, 0, 0};
      int n = 0;
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          for (int c = 0; c < 3; ++c) sum[c] += static_cast<float>(img.at(y, x, c));
          ++n;
        }
      for (int c = 0; c < 3; ++c)
        out[(static_cast<std::size_t>(oy) * static_cast<std::size_t>(ow) + static_cast<std::size_t>(ox)) * 3 +
            static_cast<std::size_t>(c)] = sum[c] / (255.0f * static_cast<float>(n));
    }
  }
  return out;
}

// Crop a (ch x cw) window at (oy, ox) and box-resize back to the source size.
inline Image crop_resize(const Image& img, int oy, int ox, int ch, int cw) {
  require(oy >= 0 && ox >= 0 && oy + ch <= img.h && ox + cw <= img.w, "crop out of bounds");
  Image out(img.h, img.w);
  for (int y = 0; y < img.h; ++y) {
    int sy = oy + y * ch / img.h;
    for (int x = 0; x < img.w; ++x) {
      int sx = ox + x * cw / img.w;
      for (int c = 0; c < 3; ++c) out.set(y, x, c, img.at(sy, sx, c));
    }
  }
  return out;
}

// Per-channel additive offset plus brightness scale, clamped.
inline Image color_jitter(const Image& img, const float offset[3], float scale) {
  Image out(img.h, img.w);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c)
        out.set(y, x, c, quantize_channel((static_cast<float>(img.at(y, x, c)) + offset[c]) * scale));
  return out;
}

// Seeded jitter + crop-shift view used by contrastive training and the
// pixel-only augmentation arm.
inline Image random_view(const Image& img, Rng& rng, float jitter_amp, int crop) {
  float off[3];
  for (float& o : off) o = rng.uniformf(-jitter_amp, jitter_amp);
  float scale = rng.uniformf(0.8f, 1.2f);
  Image jittered = color_jitter(img, off, scale);
  if (crop >= img.h || crop >= img.w) return jittered;
  int oy = rng.below_int(img.h - crop + 1);
  int ox = rng.below_int(img.w - crop + 1);
  return crop_resize(jittered, oy, ox, crop, crop);
}

}  // namespace cacti
