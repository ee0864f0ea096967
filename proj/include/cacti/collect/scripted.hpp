#pragma once

#include "cacti/sim/rollout.hpp"

namespace cacti::collect {

// Recorded action sequence, replayable under new scene variations.
struct DemoTape {
  std::vector<sim::Action> actions;
  int task_id = 0;
  int layout_id = 0;
  std::uint64_t recording_seed = 0;

  void validate(int horizon) const {
    require(static_cast<int>(actions.size()) == horizon, "tape length ", actions.size(),
            " != horizon ", horizon);
    for (const auto& a : actions)
      require(a.dx >= -1 && a.dx <= 1 && a.dy >= -1 && a.dy <= 1 && a.grip >= -1 && a.grip <= 1,
              "tape action outside [-1,1]");
  }
};

namespace detail {

// Command that covers d this step if reachable, else full speed per axis.
inline sim::Action toward(sim::Vec2 d, float v_max, float grip) {
  return sim::Action{clampf(d.x / v_max, -1.f, 1.f), clampf(d.y / v_max, -1.f, 1.f), grip};
}

// Closed-loop waypoint controller; the software analog of guiding the arm by
// hand. Phases: approach, grasp, transport (straight line or articulation
// arc), release, hold.
struct WaypointController {
  const sim::World& w;
  const sim::TaskSpec& task;
  sim::ResolvedGoal goal;

  sim::Action operator()(const sim::SimState& s) const {
    if (task.target == sim::kRobotTarget) {
      sim::Vec2 d = goal.point - s.robot_pos;
      if (d.norm() > task.tolerance * 0.3f) return toward(d, w.v_max, -1.0f);
      return {0, 0, -1.0f};
    }
    auto ti = static_cast<std::size_t>(task.target);
    const auto& spec = w.roster[ti];
    bool holding = s.held == task.target;
    if (spec.kind == sim::ObjectKind::free_object) {
      if (!holding) {
        if (sim::dist(s.obj_pos[ti], goal.point) < task.tolerance * 0.3f) return {0, 0, -1.0f};
        sim::Vec2 d = s.obj_pos[ti] - s.robot_pos;
        if (d.norm() > 0.4f * w.grasp_radius) return toward(d, w.v_max, -1.0f);
        return {0, 0, 1.0f};  // hover and close
      }
      sim::Vec2 d = goal.point - s.robot_pos;
      if (d.norm() > task.tolerance * 0.3f) return toward(d, w.v_max, 1.0f);
      return {0, 0, -1.0f};  // at goal: release
    }
    // articulated: grab the handle, then walk it along the arc
    float angle_err = goal.angle - s.angle[ti];
    if (std::abs(angle_err) < task.tolerance * 0.3f) return {0, 0, -1.0f};
    sim::Vec2 handle = w.handle_pos(task.target, s);
    if (!holding) {
      sim::Vec2 d = handle - s.robot_pos;
      if (d.norm() > 0.4f * w.grasp_radius) return toward(d, w.v_max, -1.0f);
      return {0, 0, 1.0f};
    }
    float omega_max = 0.8f * w.v_max / spec.arm;
    float dtheta = clampf(angle_err, -omega_max, omega_max);
    float next = spec.facing + s.angle[ti] + dtheta;
    sim::Vec2 target = s.obj_pos[ti] + sim::Vec2{std::cos(next), std::sin(next)} * spec.arm;
    return toward(target - s.robot_pos, w.v_max, 1.0f);
  }
};

}  // namespace detail

// Runs the waypoint controller in sim and records the executed actions as a
// tape. The tape must succeed on its own (layout, seed) or the task/layout
// pairing is considered misconfigured.
inline DemoTape script_expert(const sim::World& w, const sim::Layout& layout,
                              const sim::TaskSpec& task, std::uint64_t recording_seed) {
  detail::WaypointController ctl{w, task, w.resolve_goal(task, layout)};
  sim::Rollout r = sim::run_episode(w, layout, task, recording_seed, ctl);
  require(r.success, "script_expert: controller failed task '", task.name, "' on layout ",
          layout.layout_id, " (seed ", recording_seed, "); task/layout misconfigured");
  DemoTape tape;
  tape.actions = r.actions;
  tape.task_id = task.task_id;
  tape.layout_id = layout.layout_id;
  tape.recording_seed = recording_seed;
  tape.validate(task.horizon);
  return tape;
}

}  // namespace cacti::collect
