#include <catch2/catch_amalgamated.hpp>

#include "cacti/sim/engine.hpp"
#include "cacti/sim/render.hpp"

using namespace cacti;
using namespace cacti::sim;

namespace {
World default_world() { return build_world(PipelineConfig::defaults()); }
}  // namespace

TEST_CASE("rendering is deterministic") {
  auto w = default_world();
  auto lay = sample_layout(w, 3, 0);
  auto s = reset(w, lay, w.tasks[0], 2);
  auto theme = sample_theme(w, 9);
  REQUIRE(render_image(w, lay, s, theme) == render_image(w, lay, s, theme));
}

TEST_CASE("render never mutates the state") {
  auto w = default_world();
  auto lay = sample_layout(w, 3, 0);
  auto s = reset(w, lay, w.tasks[0], 2);
  auto copy = s;
  (void)render_image(w, lay, s, sample_theme(w, 4));
  REQUIRE(s == copy);
}

TEST_CASE("halving the lighting darkens every channel") {
  auto w = default_world();
  auto lay = sample_layout(w, 6, 0);
  auto s = reset(w, lay, w.tasks[0], 2);
  auto bright = default_theme(w);
  auto dark = bright;
  dark.lighting = 0.5f;
  auto i1 = render_image(w, lay, s, bright);
  auto i0 = render_image(w, lay, s, dark);
  for (std::size_t i = 0; i < i1.px.size(); ++i) REQUIRE(i0.px[i] <= i1.px[i]);
}

// Single-pixel rasterization oracle: the pixel under a disc's center must be
// exactly clamp(round((base + offset) * texture * lighting)).
TEST_CASE("disc center pixel equals its themed color after lighting") {
  auto w = default_world();
  Layout lay;
  lay.layout_id = 0;
  for (std::size_t i = 0; i < w.roster.size(); ++i)
    lay.pos.push_back({0.06f + 0.12f * static_cast<float>(i), 0.92f});
  lay.orient.assign(w.roster.size(), 0.0f);
  auto mug = static_cast<std::size_t>(w.object_index("mug"));
  lay.pos[mug] = {0.5f, 0.5f};  // alone in the middle; robot far at home

  auto s = reset(w, lay, w.task_by_name("drag_mug"), 1);
  VisualTheme theme = default_theme(w);
  theme.offset[mug] = {11.5f, -20.0f, 3.25f};
  theme.lighting = 1.3f;
  theme.texture[mug] = "plain";

  auto img = render_image(w, lay, s, theme);
  int px = static_cast<int>(std::floor(0.5f * 48));
  int row = 48 - 1 - px;
  const auto& base = w.roster[mug].color;
  for (int c = 0; c < 3; ++c) {
    float expect = std::max(0.0f, base[static_cast<std::size_t>(c)] +
                                      theme.offset[mug][static_cast<std::size_t>(c)]) *
                   1.0f * 1.3f;
    auto v = static_cast<std::uint8_t>(std::min(255.0f, std::max(0.0f, std::round(expect))));
    REQUIRE(img.at(row, px, c) == v);
  }
}

TEST_CASE("replaying identical actions under different themes leaves physics identical") {
  auto w = default_world();
  auto lay = sample_layout(w, 8, 0);
  const auto& task = w.tasks[1];
  Rng rng(13);
  std::vector<Action> actions;
  for (int t = 0; t < 50; ++t)
    actions.push_back({rng.uniformf(-1, 1), rng.uniformf(-1, 1), rng.uniformf(-1, 1)});

  auto s1 = reset(w, lay, task, 5);
  auto s2 = reset(w, lay, task, 5);
  auto t1 = sample_theme(w, 100), t2 = sample_theme(w, 200);
  bool any_pixel_differs = false;
  for (const auto& a : actions) {
    auto i1 = render_image(w, lay, s1, t1);
    auto i2 = render_image(w, lay, s2, t2);
    any_pixel_differs = any_pixel_differs || !(i1 == i2);
    s1 = step(w, s1, a);
    s2 = step(w, s2, a);
    REQUIRE(s1 == s2);
  }
  REQUIRE(any_pixel_differs);
}
