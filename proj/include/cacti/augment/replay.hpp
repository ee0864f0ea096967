#pragma once

#include "cacti/augment/inpaint.hpp"
#include "cacti/augment/plan.hpp"
#include "cacti/collect/scripted.hpp"
#include "cacti/sim/engine.hpp"
#include "cacti/sim/rollout.hpp"

namespace cacti::augment {

// Re-places every non-task object by rejection sampling; the task target
// (and goal object, when the goal is object-relative) keep their poses.
inline sim::Layout shuffle_distractors(const sim::World& w, const sim::Layout& layout,
                                       const sim::TaskSpec& task, Rng& rng) {
  sim::Layout out = layout;
  constexpr int kMaxRejects = 10000;
  int rejects = 0;
  for (std::size_t i = 0; i < w.roster.size(); ++i) {
    bool anchored = static_cast<int>(i) == task.target || static_cast<int>(i) == task.goal_object;
    if (anchored) continue;
    const auto& spec = w.roster[i];
    float margin = spec.footprint_radius();
    for (;;) {
      sim::Vec2 p{rng.uniformf(margin, 1.0f - margin), rng.uniformf(margin, 1.0f - margin)};
      bool ok = true;
      for (std::size_t j = 0; j < w.roster.size(); ++j) {
        if (j == i) continue;
        // already re-placed objects and anchored ones are all obstacles
        bool placed = j < i || static_cast<int>(j) == task.target ||
                      static_cast<int>(j) == task.goal_object;
        if (!placed) continue;
        float min_gap = margin + w.roster[j].footprint_radius() + 0.01f;
        if (sim::dist(p, out.pos[j]) < min_gap) {
          ok = false;
          break;
        }
      }
      if (ok && sim::dist(p, w.robot_home) < margin + w.robot_radius + 0.05f) ok = false;
      if (ok) {
        out.pos[i] = p;
        break;
      }
      require(++rejects < kMaxRejects, "shuffle_distractors: placement failed after ",
              kMaxRejects, " rejections");
    }
    if (spec.kind == sim::ObjectKind::articulated)
      out.orient[i] = clampf(rng.uniformf(spec.init_min, spec.init_max), spec.theta_min,
                             spec.theta_max);
    else
      out.orient[i] = rng.uniformf(0.0f, 3.14159265f);
  }
  return out;
}

// Executes tape actions plus seeded Gaussian noise under the given layout.
// Reset jitter comes from the tape's own recording seed, so a zero-noise
// replay on the source layout reproduces the recording exactly.
inline sim::Rollout replay_augmented(const sim::World& w, const collect::DemoTape& tape,
                                     const sim::TaskSpec& task, const sim::Layout& layout,
                                     float sigma_a, std::uint64_t noise_seed) {
  Rng noise(noise_seed);
  std::vector<sim::Action> actions = tape.actions;
  if (sigma_a > 0)
    for (auto& a : actions) {
      a.dx += sigma_a * noise.normalf();
      a.dy += sigma_a * noise.normalf();
      a.grip += sigma_a * noise.normalf();
      a = a.clamped();
    }
  return sim::replay_actions(w, layout, task, tape.recording_seed, actions);
}

// Forbidden-region bitmap for mask placement: the task-relevant objects'
// footprints and the robot marker at every frame of the episode.
inline Mask forbidden_regions(const sim::World& w, const sim::TaskSpec& task,
                              const std::vector<sim::SimState>& states) {
  int n = w.image_size;
  Mask forbid(n, n);
  auto mark_disc = [&](sim::Vec2 c, float radius) {
    float pad = radius + 2.0f / static_cast<float>(n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        float wx = (static_cast<float>(x) + 0.5f) / static_cast<float>(n);
        float wy = (static_cast<float>(n - 1 - y) + 0.5f) / static_cast<float>(n);
        if (std::hypot(wx - c.x, wy - c.y) <= pad) forbid.at(y, x) = 1;
      }
  };
  for (const auto& s : states) {
    mark_disc(s.robot_pos, w.robot_radius);
    for (int idx : {task.target, task.goal_object}) {
      if (idx < 0) continue;
      auto i = static_cast<std::size_t>(idx);
      mark_disc(s.obj_pos[i], w.roster[i].footprint_radius());
    }
  }
  return forbid;
}

// Rejection-samples a rectangular in-paint mask clear of the forbidden
// regions. Returns an empty mask when no spot fits within the try budget.
inline Mask sample_inpaint_mask(const Mask& forbid, Rng& rng, int max_tries) {
  int n = forbid.h;
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    int rh = 6 + rng.below_int(9);
    int rw = 6 + rng.below_int(9);
    int y0 = rng.below_int(n - rh);
    int x0 = rng.below_int(n - rw);
    bool clear = true;
    for (int y = y0; y < y0 + rh && clear; ++y)
      for (int x = x0; x < x0 + rw && clear; ++x) clear = !forbid.at(y, x);
    if (clear) return Mask::rect(n, n, y0, x0, rh, rw);
  }
  return Mask{};
}

}  // namespace cacti::augment
