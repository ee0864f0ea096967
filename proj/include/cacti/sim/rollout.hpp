#pragma once

#include <functional>

#include "cacti/sim/engine.hpp"
#include "cacti/sim/success.hpp"

namespace cacti::sim {

// Physics-only episode: states[0] is the reset state, states[t+1] results
// from actions[t]. Rendering happens separately so replays can re-render the
// same states under any theme.
struct Rollout {
  std::vector<SimState> states;
  std::vector<Action> actions;
  bool success = false;
};

template <typename ActFn>
Rollout run_episode(const World& w, const Layout& layout, const TaskSpec& task,
                    std::uint64_t reset_seed, ActFn&& act) {
  ResolvedGoal goal = w.resolve_goal(task, layout);
  Rollout r;
  r.states.reserve(static_cast<std::size_t>(task.horizon) + 1);
  r.actions.reserve(static_cast<std::size_t>(task.horizon));
  r.states.push_back(reset(w, layout, task, reset_seed));
  for (int t = 0; t < task.horizon; ++t) {
    Action a = act(r.states.back()).clamped();
    r.actions.push_back(a);
    r.states.push_back(step(w, r.states.back(), a));
  }
  r.success = check_success(w, task, goal, r.states);
  return r;
}

// Replays a fixed action sequence; the backbone of tape-based augmentation.
inline Rollout replay_actions(const World& w, const Layout& layout, const TaskSpec& task,
                              std::uint64_t reset_seed, const std::vector<Action>& actions) {
  std::size_t i = 0;
  return run_episode(w, layout, task, reset_seed,
                     [&](const SimState&) { return actions[i++]; });
}

}  // namespace cacti::sim
