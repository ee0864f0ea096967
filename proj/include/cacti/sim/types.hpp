#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cacti/image.hpp"
#include "cacti/util.hpp"

namespace cacti::sim {

struct Vec2 {
  float x = 0, y = 0;
  bool operator==(const Vec2&) const = default;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(float s) const { return {x * s, y * s}; }
  float norm() const { return std::sqrt(x * x + y * y); }
};

inline float dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

enum class ObjectKind { free_object, articulated };
enum class ShapeKind { disc, box };

struct ObjectSpec {
  std::string name;
  ObjectKind kind = ObjectKind::free_object;
  ShapeKind shape = ShapeKind::disc;
  float half_w = 0.04f;  // disc: radius
  float half_h = 0.04f;
  std::array<float, 3> color{128, 128, 128};
  std::string texture = "plain";
  // articulated only: door of length `arm` hinged at the base pose, world
  // door direction = facing + angle, angle clamped to [theta_min, theta_max]
  float arm = 0.0f;
  float facing = 0.0f;
  float theta_min = 0.0f, theta_max = 0.0f;
  float init_min = 0.0f, init_max = 0.0f;

  // radius of the body footprint (not counting the door sweep)
  float body_radius() const {
    return shape == ShapeKind::disc ? half_w : std::sqrt(half_w * half_w + half_h * half_h);
  }

  // radius that covers everything the object can occupy
  float footprint_radius() const {
    return kind == ObjectKind::articulated ? body_radius() + arm : body_radius();
  }

  void validate() const {
    require(half_w > 0 && half_h > 0, "object '", name, "': half-extents must be positive");
    if (kind == ObjectKind::articulated) {
      require(theta_max > theta_min, "object '", name, "': articulation range is degenerate");
      require(arm > 0, "object '", name, "': articulated object needs arm > 0");
    }
  }
};

struct Layout {
  int layout_id = 0;
  std::uint64_t seed = 0;
  std::vector<Vec2> pos;       // base pose per roster object
  std::vector<float> orient;   // free box: render rotation; articulated: initial angle

  bool operator==(const Layout&) const = default;
};

struct VisualTheme {
  std::vector<std::array<float, 3>> offset;  // per-object color offset
  std::vector<std::string> texture;          // per-object texture tag
  float lighting = 1.0f;
  float background = 72.0f;
};

struct Action {
  float dx = 0, dy = 0, grip = 0;

  Action clamped() const {
    return {clampf(dx, -1.f, 1.f), clampf(dy, -1.f, 1.f), clampf(grip, -1.f, 1.f)};
  }
  bool finite() const {
    return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(grip);
  }
};

struct SimState {
  Vec2 robot_pos, robot_vel;
  float aperture = 1.0f;   // 1 = fully open, 0 = fully closed
  float grip_rate = 0.0f;
  std::vector<Vec2> obj_pos;   // free: current pose; articulated: pivot (fixed)
  std::vector<Vec2> obj_vel;
  std::vector<float> angle;    // articulated objects only (0 elsewhere)
  std::vector<float> angvel;
  int held = -1;  // roster index of the held object, -1 if none
  int t = 0;

  bool operator==(const SimState&) const = default;
};

struct Observation {
  Image image;
  std::array<float, 6> proprio{};
};

// special target id: the task is about placing the robot itself
inline constexpr int kRobotTarget = -2;

enum class GoalMode { fixed_point, object_pose, angle };

struct TaskSpec {
  int task_id = 0;
  std::string name;
  int target = -1;                 // roster index, or kRobotTarget
  GoalMode goal_mode = GoalMode::fixed_point;
  Vec2 goal_point{};
  float goal_angle = 0.0f;
  int goal_object = -1;            // roster index for GoalMode::object_pose
  float tolerance = 0.03f;
  int min_stable_steps = 5;
  int horizon = 50;
};

// goal with object references resolved against a concrete layout
struct ResolvedGoal {
  Vec2 point{};
  float angle = 0.0f;
};

struct Provenance {
  int task_id = 0;
  int layout_id = 0;
  std::uint64_t theme_seed = 0;
  std::uint64_t noise_seed = 0;
  int source_tape = -1;
};

struct StepRecord {
  SimState state;
  Action action;
  Observation obs;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  SimState final_state;
  Provenance prov;
  bool success = false;
};

}  // namespace cacti::sim
