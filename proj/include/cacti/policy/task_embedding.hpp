#pragma once

#include <string>

#include "cacti/rng.hpp"
#include "cacti/sim/world.hpp"

namespace cacti::policy {

enum class TaskEmbeddingMode { context, hashed, goal_image };

inline const char* embedding_mode_name(TaskEmbeddingMode m) {
  switch (m) {
    case TaskEmbeddingMode::context: return "context";
    case TaskEmbeddingMode::hashed: return "hashed";
    case TaskEmbeddingMode::goal_image: return "goal_image";
  }
  return "?";
}

inline TaskEmbeddingMode embedding_mode_from_name(const std::string& s) {
  if (s == "context") return TaskEmbeddingMode::context;
  if (s == "hashed") return TaskEmbeddingMode::hashed;
  if (s == "goal_image") return TaskEmbeddingMode::goal_image;
  fail("unknown task embedding mode '", s, "'");
}

// Hand-crafted conditioning vector: one-hot task id, the resolved goal
// (x, y, angle), then the scene arrangement (base pose and orientation per
// roster object).
inline int context_dim(const sim::World& w) {
  return static_cast<int>(w.tasks.size()) + 3 + 3 * static_cast<int>(w.roster.size());
}

inline std::vector<float> context_embedding(const sim::World& w, const sim::TaskSpec& task,
                                            const sim::Layout& layout) {
  std::vector<float> z;
  z.reserve(static_cast<std::size_t>(context_dim(w)));
  for (std::size_t i = 0; i < w.tasks.size(); ++i)
    z.push_back(static_cast<int>(i) == task.task_id ? 1.0f : 0.0f);
  auto goal = w.resolve_goal(task, layout);
  z.push_back(goal.point.x);
  z.push_back(goal.point.y);
  z.push_back(goal.angle);
  for (std::size_t i = 0; i < w.roster.size(); ++i) {
    z.push_back(layout.pos[i].x);
    z.push_back(layout.pos[i].y);
    z.push_back(layout.orient[i]);
  }
  return z;
}

// Seeded hash of the task name string into g reals in [-1, 1]; deterministic
// in the name.
inline std::vector<float> hashed_embedding(const std::string& task_name, int g,
                                           std::uint64_t seed) {
  Rng rng(derive_seed(seed ^ fnv1a(task_name.data(), task_name.size()), "hashed_embedding"));
  std::vector<float> z(static_cast<std::size_t>(g));
  for (auto& v : z) v = rng.uniformf(-1.0f, 1.0f);
  return z;
}

}  // namespace cacti::policy
