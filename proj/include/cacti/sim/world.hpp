#pragma once

#include <string>
#include <vector>

#include "cacti/config.hpp"
#include "cacti/sim/types.hpp"

namespace cacti::sim {

// Immutable scene/task definition shared by every stage: the object roster,
// the task table, and the physics constants, all resolved from config.
struct World {
  std::vector<ObjectSpec> roster;
  std::vector<TaskSpec> tasks;
  std::vector<std::string> texture_pool;

  int image_size = 48;
  int horizon = 50;
  int min_stable_steps = 5;
  float v_max = 0.05f;
  float grasp_radius = 0.03f;
  float grip_close_thresh = 0.35f;
  float grip_open_thresh = 0.55f;
  float grip_slew = 0.2f;
  float handle_slip_radius = 0.08f;
  float reset_jitter = 0.02f;
  Vec2 robot_home{0.5f, 0.12f};
  float robot_radius = 0.02f;

  float theme_jitter_amp = 30.0f;
  float light_min = 0.6f, light_max = 1.4f;
  float background = 72.0f;
  float background_jitter = 25.0f;

  int object_index(const std::string& name) const {
    for (std::size_t i = 0; i < roster.size(); ++i)
      if (roster[i].name == name) return static_cast<int>(i);
    fail("unknown object '", name, "' (roster: ", roster_names(), ")");
  }

  const TaskSpec& task_by_name(const std::string& name) const {
    for (const auto& t : tasks)
      if (t.name == name) return t;
    fail("unknown task '", name, "'");
  }

  std::string roster_names() const {
    std::string s;
    for (const auto& o : roster) s += (s.empty() ? "" : ",") + o.name;
    return s;
  }

  // flattened state feature length: robot(6) + 6 per object
  int state_dim() const { return 6 + 6 * static_cast<int>(roster.size()); }

  Vec2 handle_pos(int idx, const SimState& s) const {
    const auto& spec = roster[static_cast<std::size_t>(idx)];
    float a = spec.facing + s.angle[static_cast<std::size_t>(idx)];
    return s.obj_pos[static_cast<std::size_t>(idx)] + Vec2{std::cos(a), std::sin(a)} * spec.arm;
  }

  // robot pos, scaled vel, grip aperture + rate, then per object either
  // (pos, vel, offset from robot) or (angle, angvel, handle pos, handle
  // offset); velocities scaled to O(1). The robot-relative offsets matter:
  // grasp decisions live at offsets of a few hundredths of a unit.
  std::vector<float> features(const SimState& s) const {
    std::vector<float> f;
    f.reserve(static_cast<std::size_t>(state_dim()));
    f.push_back(s.robot_pos.x);
    f.push_back(s.robot_pos.y);
    f.push_back(s.robot_vel.x / v_max);
    f.push_back(s.robot_vel.y / v_max);
    f.push_back(s.aperture);
    f.push_back(s.grip_rate / grip_slew);
    for (std::size_t i = 0; i < roster.size(); ++i) {
      if (roster[i].kind == ObjectKind::free_object) {
        f.push_back(s.obj_pos[i].x);
        f.push_back(s.obj_pos[i].y);
        f.push_back(s.obj_vel[i].x / v_max);
        f.push_back(s.obj_vel[i].y / v_max);
        f.push_back(s.obj_pos[i].x - s.robot_pos.x);
        f.push_back(s.obj_pos[i].y - s.robot_pos.y);
      } else {
        Vec2 h = handle_pos(static_cast<int>(i), s);
        f.push_back(s.angle[i]);
        f.push_back(s.angvel[i]);
        f.push_back(h.x);
        f.push_back(h.y);
        f.push_back(h.x - s.robot_pos.x);
        f.push_back(h.y - s.robot_pos.y);
      }
    }
    return f;
  }

  std::array<float, 6> proprio(const SimState& s) const {
    return {s.robot_pos.x,       s.robot_pos.y, s.robot_vel.x / v_max,
            s.robot_vel.y / v_max, s.aperture,    s.grip_rate / grip_slew};
  }

  ResolvedGoal resolve_goal(const TaskSpec& task, const Layout& layout) const {
    ResolvedGoal g;
    switch (task.goal_mode) {
      case GoalMode::fixed_point: g.point = task.goal_point; break;
      case GoalMode::object_pose:
        require(task.goal_object >= 0, "task '", task.name, "' has no goal object");
        g.point = layout.pos[static_cast<std::size_t>(task.goal_object)];
        break;
      case GoalMode::angle: g.angle = task.goal_angle; break;
    }
    return g;
  }

  float pose_error(const TaskSpec& task, const ResolvedGoal& goal, const SimState& s) const {
    if (task.goal_mode == GoalMode::angle)
      return std::abs(s.angle[static_cast<std::size_t>(task.target)] - goal.angle);
    Vec2 p = task.target == kRobotTarget ? s.robot_pos
                                         : s.obj_pos[static_cast<std::size_t>(task.target)];
    return dist(p, goal.point);
  }
};

inline World build_world(const PipelineConfig& cfg) {
  World w;
  w.image_size = cfg.geti("sim", "image_size");
  w.horizon = cfg.geti("sim", "horizon");
  w.min_stable_steps = cfg.geti("sim", "min_stable_steps");
  w.v_max = cfg.getf("sim", "v_max");
  w.grasp_radius = cfg.getf("sim", "grasp_radius");
  w.grip_close_thresh = cfg.getf("sim", "grip_close_thresh");
  w.grip_open_thresh = cfg.getf("sim", "grip_open_thresh");
  w.grip_slew = cfg.getf("sim", "grip_slew");
  w.handle_slip_radius = cfg.getf("sim", "handle_slip_radius");
  w.reset_jitter = cfg.getf("sim", "reset_jitter");
  auto home = cfg.get_doubles("sim", "robot_home");
  require(home.size() == 2, "sim.robot_home must be x,y");
  w.robot_home = {static_cast<float>(home[0]), static_cast<float>(home[1])};
  w.robot_radius = cfg.getf("sim", "robot_radius");

  w.theme_jitter_amp = cfg.getf("theme", "jitter_amp");
  auto lr = cfg.get_doubles("theme", "light_range");
  require(lr.size() == 2 && lr[0] <= lr[1], "theme.light_range must be lo,hi");
  w.light_min = static_cast<float>(lr[0]);
  w.light_max = static_cast<float>(lr[1]);
  w.background = cfg.getf("theme", "background");
  w.background_jitter = cfg.getf("theme", "background_jitter");
  w.texture_pool = cfg.get_names("theme", "textures");
  require(!w.texture_pool.empty(), "theme.textures must be non-empty");

  for (const auto& name : cfg.get_names("roster", "objects")) {
    ObjectSpec o;
    o.name = name;
    std::string kind = cfg.gets("roster", name + ".kind");
    if (kind == "free") o.kind = ObjectKind::free_object;
    else if (kind == "articulated") o.kind = ObjectKind::articulated;
    else fail("roster object '", name, "': unknown kind '", kind, "'");
    std::string shape = cfg.gets("roster", name + ".shape");
    if (shape == "disc") o.shape = ShapeKind::disc;
    else if (shape == "box") o.shape = ShapeKind::box;
    else fail("roster object '", name, "': unknown shape '", shape, "'");
    auto half = cfg.get_doubles("roster", name + ".half");
    require(half.size() == 2, "roster ", name, ".half must be w,h");
    o.half_w = static_cast<float>(half[0]);
    o.half_h = static_cast<float>(half[1]);
    auto col = cfg.get_doubles("roster", name + ".color");
    require(col.size() == 3, "roster ", name, ".color must be r,g,b");
    for (int c = 0; c < 3; ++c) o.color[static_cast<std::size_t>(c)] = static_cast<float>(col[static_cast<std::size_t>(c)]);
    o.texture = cfg.gets("roster", name + ".texture");
    if (o.kind == ObjectKind::articulated) {
      o.arm = cfg.getf("roster", name + ".arm");
      o.facing = cfg.getf("roster", name + ".facing");
      auto tr = cfg.get_doubles("roster", name + ".theta_range");
      require(tr.size() == 2, "roster ", name, ".theta_range must be min,max");
      o.theta_min = static_cast<float>(tr[0]);
      o.theta_max = static_cast<float>(tr[1]);
      auto ir = cfg.get_doubles("roster", name + ".init_range");
      require(ir.size() == 2, "roster ", name, ".init_range must be min,max");
      o.init_min = static_cast<float>(ir[0]);
      o.init_max = static_cast<float>(ir[1]);
    }
    o.validate();
    w.roster.push_back(std::move(o));
  }

  int tid = 0;
  for (const auto& name : cfg.get_names("tasks", "names")) {
    TaskSpec t;
    t.task_id = tid++;
    t.name = name;
    t.horizon = w.horizon;
    t.min_stable_steps = w.min_stable_steps;
    t.tolerance = cfg.getf("tasks", name + ".tolerance");
    require(t.tolerance > 0, "task '", name, "': tolerance must be positive");
    std::string target = cfg.gets("tasks", name + ".target");
    if (target == "robot") {
      t.target = kRobotTarget;
      t.goal_mode = GoalMode::object_pose;
      t.goal_object = w.object_index(cfg.gets("tasks", name + ".goal_object"));
    } else {
      t.target = w.object_index(target);
      const auto& spec = w.roster[static_cast<std::size_t>(t.target)];
      if (spec.kind == ObjectKind::articulated) {
        t.goal_mode = GoalMode::angle;
        t.goal_angle = cfg.getf("tasks", name + ".goal_angle");
      } else if (cfg.has("tasks", name + ".goal_object")) {
        t.goal_mode = GoalMode::object_pose;
        t.goal_object = w.object_index(cfg.gets("tasks", name + ".goal_object"));
      } else {
        t.goal_mode = GoalMode::fixed_point;
        auto g = cfg.get_doubles("tasks", name + ".goal");
        require(g.size() == 2, "task ", name, ".goal must be x,y");
        t.goal_point = {static_cast<float>(g[0]), static_cast<float>(g[1])};
      }
    }
    require(t.horizon >= t.min_stable_steps, "task '", name, "': horizon < min_stable_steps");
    w.tasks.push_back(std::move(t));
  }
  require(!w.tasks.empty(), "config declares no tasks");
  return w;
}

}  // namespace cacti::sim
