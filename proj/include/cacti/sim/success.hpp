#pragma once

#include <span>

#include "cacti/sim/world.hpp"

namespace cacti::sim {

// True iff some run of >= min_stable_steps consecutive states keeps the
// target pose error under the task tolerance.
inline bool check_success(const World& w, const TaskSpec& task, const ResolvedGoal& goal,
                          std::span<const SimState> states) {
  require(!states.empty(), "check_success: empty state list");
  int run = 0;
  for (const auto& s : states) {
    if (w.pose_error(task, goal, s) < task.tolerance) {
      if (++run >= task.min_stable_steps) return true;
    } else {
      run = 0;
    }
  }
  return false;
}

inline bool trajectory_success(const World& w, const TaskSpec& task, const ResolvedGoal& goal,
                               const Trajectory& traj) {
  std::vector<SimState> states;
  states.reserve(traj.steps.size() + 1);
  for (const auto& rec : traj.steps) states.push_back(rec.state);
  states.push_back(traj.final_state);
  return check_success(w, task, goal, states);
}

}  // namespace cacti::sim
