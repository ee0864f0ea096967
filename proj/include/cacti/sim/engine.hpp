#pragma once

#include "cacti/rng.hpp"
#include "cacti/sim/world.hpp"

namespace cacti::sim {

// layout ids at or above this are reserved for heldout evaluation suites
inline constexpr int kHeldoutIdBase = 10000;

// Rejection-sampled non-overlapping placement of the whole roster. Identical
// seeds give identical layouts.
inline Layout sample_layout(const World& w, std::uint64_t seed, int layout_id) {
  require(!w.roster.empty(), "sample_layout: empty roster");
  Rng rng(seed);
  Layout lay;
  lay.layout_id = layout_id;
  lay.seed = seed;
  constexpr int kMaxRejects = 10000;
  int rejects = 0;
  for (std::size_t i = 0; i < w.roster.size(); ++i) {
    const auto& spec = w.roster[i];
    float margin = spec.footprint_radius();
    require(margin < 0.5f, "object '", spec.name, "' cannot fit the unit workspace");
    for (;;) {
      Vec2 p{rng.uniformf(margin, 1.0f - margin), rng.uniformf(margin, 1.0f - margin)};
      bool ok = true;
      for (std::size_t j = 0; j < i; ++j) {
        float min_gap = spec.footprint_radius() + w.roster[j].footprint_radius() + 0.01f;
        if (dist(p, lay.pos[j]) < min_gap) {
          ok = false;
          break;
        }
      }
      // keep a clear lane around the robot home so nothing blocks reset
      if (ok && dist(p, w.robot_home) < margin + w.robot_radius + 0.05f) ok = false;
      if (ok) {
        lay.pos.push_back(p);
        break;
      }
      require(++rejects < kMaxRejects,
              "sample_layout: gave up after ", kMaxRejects,
              " rejections; roster too dense for the workspace");
    }
    if (spec.kind == ObjectKind::articulated)
      lay.orient.push_back(clampf(rng.uniformf(spec.init_min, spec.init_max), spec.theta_min,
                                  spec.theta_max));
    else
      lay.orient.push_back(rng.uniformf(0.0f, 3.14159265f));
  }
  return lay;
}

// Training layouts and heldout layouts come from disjoint seed streams keyed
// by the id ranges, so the two sets can never collide.
inline Layout layout_for_id(const World& w, std::uint64_t master_seed, int layout_id) {
  if (layout_id >= kHeldoutIdBase)
    return sample_layout(w, derive_seed(master_seed, "layout/heldout",
                                        static_cast<std::uint64_t>(layout_id - kHeldoutIdBase)),
                         layout_id);
  return sample_layout(w, derive_seed(master_seed, "layout/train",
                                      static_cast<std::uint64_t>(layout_id)),
                       layout_id);
}

inline VisualTheme default_theme(const World& w) {
  VisualTheme t;
  t.offset.assign(w.roster.size(), {0, 0, 0});
  for (const auto& o : w.roster) t.texture.push_back(o.texture);
  t.lighting = 1.0f;
  t.background = w.background;
  return t;
}

inline VisualTheme sample_theme(const World& w, std::uint64_t seed) {
  Rng rng(seed);
  VisualTheme t;
  for (std::size_t i = 0; i < w.roster.size(); ++i) {
    std::array<float, 3> off;
    for (auto& o : off) o = rng.uniformf(-w.theme_jitter_amp, w.theme_jitter_amp);
    t.offset.push_back(off);
    t.texture.push_back(w.texture_pool[static_cast<std::size_t>(
        rng.below_int(static_cast<int>(w.texture_pool.size())))]);
  }
  t.lighting = rng.uniformf(w.light_min, w.light_max);
  t.background = std::max(0.0f, w.background + rng.uniformf(-w.background_jitter, w.background_jitter));
  return t;
}

inline void check_task_in_layout(const World& w, const TaskSpec& task, const Layout& layout) {
  require(layout.pos.size() == w.roster.size(), "layout has ", layout.pos.size(),
          " objects but roster has ", w.roster.size());
  if (task.target >= 0)
    require(static_cast<std::size_t>(task.target) < layout.pos.size(),
            "task '", task.name, "': target object missing from layout");
  if (task.goal_object >= 0)
    require(static_cast<std::size_t>(task.goal_object) < layout.pos.size(),
            "task '", task.name, "': goal object missing from layout");
}

// Robot at home plus seeded jitter, objects at their layout poses, t = 0.
inline SimState reset(const World& w, const Layout& layout, const TaskSpec& task,
                      std::uint64_t seed) {
  check_task_in_layout(w, task, layout);
  Rng rng(seed);
  SimState s;
  s.robot_pos = {clampf(w.robot_home.x + rng.uniformf(-w.reset_jitter, w.reset_jitter),
                        w.robot_radius, 1.0f - w.robot_radius),
                 clampf(w.robot_home.y + rng.uniformf(-w.reset_jitter, w.reset_jitter),
                        w.robot_radius, 1.0f - w.robot_radius)};
  s.obj_pos = layout.pos;
  s.obj_vel.assign(w.roster.size(), Vec2{});
  s.angle.assign(w.roster.size(), 0.0f);
  s.angvel.assign(w.roster.size(), 0.0f);
  for (std::size_t i = 0; i < w.roster.size(); ++i)
    if (w.roster[i].kind == ObjectKind::articulated) s.angle[i] = layout.orient[i];
  return s;
}

inline float wrap_pi(float a) {
  while (a > 3.14159265f) a -= 2 * 3.14159265f;
  while (a < -3.14159265f) a += 2 * 3.14159265f;
  return a;
}

// One deterministic physics step: velocity-command motion, grip slew,
// magnetic grasp/release, held objects track the robot, handles follow the
// articulation arc.
inline SimState step(const World& w, const SimState& prev, const Action& raw) {
  require(raw.finite(), "step: non-finite action at t=", prev.t);
  Action a = raw.clamped();
  SimState s = prev;

  // robot motion; clamp margin covers whatever is held
  float margin = w.robot_radius;
  if (s.held >= 0 && w.roster[static_cast<std::size_t>(s.held)].kind == ObjectKind::free_object)
    margin = std::max(margin, w.roster[static_cast<std::size_t>(s.held)].body_radius());
  Vec2 old_pos = s.robot_pos;
  s.robot_pos.x = clampf(old_pos.x + w.v_max * a.dx, margin, 1.0f - margin);
  s.robot_pos.y = clampf(old_pos.y + w.v_max * a.dy, margin, 1.0f - margin);
  s.robot_vel = s.robot_pos - old_pos;

  // grip aperture slews toward the commanded target; grip=+1 closes
  float target = clampf(0.5f * (1.0f - a.grip), 0.0f, 1.0f);
  s.grip_rate = clampf(target - s.aperture, -w.grip_slew, w.grip_slew);
  s.aperture += s.grip_rate;

  for (std::size_t i = 0; i < w.roster.size(); ++i) {
    s.obj_vel[i] = {0, 0};
    s.angvel[i] = 0;
  }

  if (s.held >= 0 && s.aperture > w.grip_open_thresh) s.held = -1;

  if (s.held >= 0) {
    auto hi = static_cast<std::size_t>(s.held);
    const auto& spec = w.roster[hi];
    if (spec.kind == ObjectKind::free_object) {
      s.obj_vel[hi] = s.robot_pos - s.obj_pos[hi];
      s.obj_pos[hi] = s.robot_pos;
    } else {
      Vec2 rel = s.robot_pos - s.obj_pos[hi];
      float ang = wrap_pi(std::atan2(rel.y, rel.x) - spec.facing);
      float new_angle = clampf(ang, spec.theta_min, spec.theta_max);
      s.angvel[hi] = new_angle - s.angle[hi];
      s.angle[hi] = new_angle;
      if (dist(s.robot_pos, w.handle_pos(s.held, s)) > w.handle_slip_radius) s.held = -1;
    }
  }

  if (s.held < 0 && s.aperture <= w.grip_close_thresh) {
    int best = -1;
    float best_d = w.grasp_radius;
    for (std::size_t i = 0; i < w.roster.size(); ++i) {
      Vec2 p = w.roster[i].kind == ObjectKind::free_object ? s.obj_pos[i]
                                                           : w.handle_pos(static_cast<int>(i), s);
      float d = dist(s.robot_pos, p);
      if (d <= best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      s.held = best;
      auto hi = static_cast<std::size_t>(best);
      if (w.roster[hi].kind == ObjectKind::free_object) {
        s.obj_vel[hi] = s.robot_pos - s.obj_pos[hi];
        s.obj_pos[hi] = s.robot_pos;
      }
    }
  }

  s.t = prev.t + 1;
  return s;
}

}  // namespace cacti::sim
