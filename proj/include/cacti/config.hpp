#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cacti/util.hpp"

namespace cacti {

// Sectioned key=value configuration. Every run resolves to defaults plus
// file overrides; unknown sections or keys are errors so typos never pass
// silently. The resolved form is embedded into run outputs.
class PipelineConfig {
 public:
  static PipelineConfig defaults() {
    PipelineConfig c;
    for (const auto& e : schema()) c.values_[e.section][e.key] = e.value;
    return c;
  }

  static PipelineConfig parse(const std::string& text) {
    PipelineConfig c = defaults();
    c.merge_text(text, "<string>");
    return c;
  }

  static PipelineConfig load(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), "cannot open config file '", path, "'");
    std::stringstream ss;
    ss << f.rdbuf();
    PipelineConfig c = defaults();
    c.merge_text(ss.str(), path);
    return c;
  }

  void merge_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    std::map<std::string, std::map<std::string, std::string>> incoming;
    while (std::getline(in, line)) {
      ++lineno;
      std::string s = trim(strip_comment(line));
      if (s.empty()) continue;
      if (s.front() == '[') {
        require(s.back() == ']', origin, ":", lineno, ": malformed section header '", s, "'");
        section = s.substr(1, s.size() - 2);
        require(known_section(section), origin, ":", lineno, ": unknown section [", section, "]");
        continue;
      }
      auto eq = s.find('=');
      require(eq != std::string::npos, origin, ":", lineno, ": expected key = value, got '", s, "'");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      require(!section.empty(), origin, ":", lineno, ": key '", key, "' appears before any [section]");
      incoming[section][key] = value;
    }
    // re-declaring the roster or task list replaces the default entries for
    // names that are no longer declared
    if (incoming.count("roster") && incoming["roster"].count("objects"))
      prune_undeclared("roster", split_list(incoming["roster"]["objects"]));
    if (incoming.count("tasks") && incoming["tasks"].count("names"))
      prune_undeclared("tasks", split_list(incoming["tasks"]["names"]));
    for (const auto& [sec, kv] : incoming)
      for (const auto& [k, v] : kv) values_[sec][k] = v;
    validate(origin);
  }

  void set(const std::string& section, const std::string& key, const std::string& value) {
    values_[section][key] = value;
    validate("<set>");
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
  }

  const std::string& gets(const std::string& section, const std::string& key) const {
    auto s = values_.find(section);
    require(s != values_.end(), "config: no section [", section, "]");
    auto k = s->second.find(key);
    require(k != s->second.end(), "config: no key '", key, "' in [", section, "]");
    return k->second;
  }

  int geti(const std::string& section, const std::string& key) const {
    return parse_int(gets(section, key), section, key);
  }

  long long getll(const std::string& section, const std::string& key) const {
    const std::string& v = gets(section, key);
    try {
      return std::stoll(v);
    } catch (...) {
      fail("config: [", section, "] ", key, " = '", v, "' is not an integer");
    }
  }

  std::uint64_t getu64(const std::string& section, const std::string& key) const {
    const std::string& v = gets(section, key);
    try {
      return std::stoull(v);
    } catch (...) {
      fail("config: [", section, "] ", key, " = '", v, "' is not an unsigned integer");
    }
  }

  double getd(const std::string& section, const std::string& key) const {
    const std::string& v = gets(section, key);
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      require(pos == v.size(), "");
      return d;
    } catch (...) {
      fail("config: [", section, "] ", key, " = '", v, "' is not a number");
    }
  }

  float getf(const std::string& section, const std::string& key) const {
    return static_cast<float>(getd(section, key));
  }

  bool getb(const std::string& section, const std::string& key) const {
    const std::string& v = gets(section, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("config: [", section, "] ", key, " = '", v, "' is not a boolean");
  }

  std::vector<std::string> get_names(const std::string& section, const std::string& key) const {
    return split_list(gets(section, key));
  }

  std::vector<int> get_ints(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : split_list(gets(section, key))) out.push_back(parse_int(s, section, key));
    return out;
  }

  std::vector<double> get_doubles(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : split_list(gets(section, key))) {
      try {
        out.push_back(std::stod(s));
      } catch (...) {
        fail("config: [", section, "] ", key, ": '", s, "' is not a number");
      }
    }
    return out;
  }

  // Sorted, fully resolved dump; identical configs dump to identical text.
  std::string dump() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, kv] : values_) {
      if (!first) os << "\n";
      first = false;
      os << "[" << section << "]\n";
      for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
    }
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), "cannot write config to '", path, "'");
    f << dump();
  }

  static std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) {
      cur = trim(cur);
      if (!cur.empty()) out.push_back(cur);
    }
    return out;
  }

 private:
  struct SchemaEntry {
    const char* section;
    const char* key;
    const char* value;
  };

  static int parse_int(const std::string& v, const std::string& section, const std::string& key) {
    try {
      std::size_t pos = 0;
      int i = std::stoi(v, &pos);
      require(pos == v.size(), "");
      return i;
    } catch (...) {
      fail("config: [", section, "] ", key, " = '", v, "' is not an integer");
    }
  }

  static std::string strip_comment(const std::string& s) {
    auto p = s.find('#');
    return p == std::string::npos ? s : s.substr(0, p);
  }

  void prune_undeclared(const std::string& section, const std::vector<std::string>& names) {
    auto it = values_.find(section);
    if (it == values_.end()) return;
    std::set<std::string> keep(names.begin(), names.end());
    for (auto kv = it->second.begin(); kv != it->second.end();) {
      auto dot = kv->first.find('.');
      if (dot != std::string::npos && keep.count(kv->first.substr(0, dot)) == 0)
        kv = it->second.erase(kv);
      else
        ++kv;
    }
  }

  // Full default pipeline. The object roster and task table live here, not in
  // code paths, so alternative scenes are a config edit away.
  static const std::vector<SchemaEntry>& schema() {
    static const std::vector<SchemaEntry> s = {
        {"pipeline", "master_seed", "1"},
        {"pipeline", "jobs", "1"},
        {"pipeline", "out_root", "runs"},

        {"sim", "image_size", "48"},
        {"sim", "horizon", "50"},
        {"sim", "min_stable_steps", "5"},
        {"sim", "v_max", "0.05"},
        {"sim", "grasp_radius", "0.03"},
        {"sim", "grip_close_thresh", "0.35"},
        {"sim", "grip_open_thresh", "0.55"},
        {"sim", "grip_slew", "0.2"},
        {"sim", "handle_slip_radius", "0.08"},
        {"sim", "reset_jitter", "0.02"},
        {"sim", "robot_home", "0.5,0.12"},
        {"sim", "robot_radius", "0.02"},

        {"roster", "objects", "cabinet,microwave,kettle,mug,plate,banana,strainer,toaster"},
        {"roster", "cabinet.kind", "articulated"},
        {"roster", "cabinet.shape", "box"},
        {"roster", "cabinet.half", "0.085,0.055"},
        {"roster", "cabinet.color", "150,104,60"},
        {"roster", "cabinet.texture", "plain"},
        {"roster", "cabinet.arm", "0.10"},
        {"roster", "cabinet.facing", "0.0"},
        {"roster", "cabinet.theta_range", "0.0,1.9"},
        {"roster", "cabinet.init_range", "0.0,0.25"},
        {"roster", "microwave.kind", "articulated"},
        {"roster", "microwave.shape", "box"},
        {"roster", "microwave.half", "0.075,0.05"},
        {"roster", "microwave.color", "120,126,134"},
        {"roster", "microwave.texture", "plain"},
        {"roster", "microwave.arm", "0.085"},
        {"roster", "microwave.facing", "3.14159265"},
        {"roster", "microwave.theta_range", "0.0,1.9"},
        {"roster", "microwave.init_range", "1.5,1.85"},
        {"roster", "kettle.kind", "free"},
        {"roster", "kettle.shape", "disc"},
        {"roster", "kettle.half", "0.045,0.045"},
        {"roster", "kettle.color", "170,42,42"},
        {"roster", "kettle.texture", "plain"},
        {"roster", "mug.kind", "free"},
        {"roster", "mug.shape", "disc"},
        {"roster", "mug.half", "0.035,0.035"},
        {"roster", "mug.color", "44,84,196"},
        {"roster", "mug.texture", "plain"},
        {"roster", "plate.kind", "free"},
        {"roster", "plate.shape", "disc"},
        {"roster", "plate.half", "0.055,0.055"},
        {"roster", "plate.color", "228,228,214"},
        {"roster", "plate.texture", "plain"},
        {"roster", "banana.kind", "free"},
        {"roster", "banana.shape", "box"},
        {"roster", "banana.half", "0.045,0.018"},
        {"roster", "banana.color", "222,202,46"},
        {"roster", "banana.texture", "plain"},
        {"roster", "strainer.kind", "free"},
        {"roster", "strainer.shape", "disc"},
        {"roster", "strainer.half", "0.05,0.05"},
        {"roster", "strainer.color", "64,164,84"},
        {"roster", "strainer.texture", "plain"},
        {"roster", "toaster.kind", "free"},
        {"roster", "toaster.shape", "box"},
        {"roster", "toaster.half", "0.06,0.042"},
        {"roster", "toaster.color", "188,188,200"},
        {"roster", "toaster.texture", "plain"},

        {"tasks", "names", "reach_kettle,drag_mug,drag_plate,drag_banana,open_cabinet,close_microwave"},
        {"tasks", "reach_kettle.target", "robot"},
        {"tasks", "reach_kettle.goal_object", "kettle"},
        {"tasks", "reach_kettle.tolerance", "0.05"},
        {"tasks", "drag_mug.target", "mug"},
        {"tasks", "drag_mug.goal", "0.82,0.24"},
        {"tasks", "drag_mug.tolerance", "0.03"},
        {"tasks", "drag_plate.target", "plate"},
        {"tasks", "drag_plate.goal", "0.20,0.78"},
        {"tasks", "drag_plate.tolerance", "0.03"},
        {"tasks", "drag_banana.target", "banana"},
        {"tasks", "drag_banana.goal", "0.16,0.16"},
        {"tasks", "drag_banana.tolerance", "0.03"},
        {"tasks", "open_cabinet.target", "cabinet"},
        {"tasks", "open_cabinet.goal_angle", "1.6"},
        {"tasks", "open_cabinet.tolerance", "0.15"},
        {"tasks", "close_microwave.target", "microwave"},
        {"tasks", "close_microwave.goal_angle", "0.1"},
        {"tasks", "close_microwave.tolerance", "0.15"},

        {"theme", "jitter_amp", "30"},
        {"theme", "light_range", "0.6,1.4"},
        {"theme", "textures", "plain,stripes,dots,checker"},
        {"theme", "background", "72"},
        {"theme", "background_jitter", "25"},

        {"collect", "layouts", "10"},
        {"collect", "mode", "script"},
        {"collect", "tapes_per_cell", "5"},
        {"collect", "episodes_per_policy", "5"},
        {"collect", "filter_threshold", "0.9"},
        {"collect", "filter_episodes", "50"},
        {"collect", "success_bonus", "10.0"},
        {"collect", "grasp_bonus", "0.5"},
        {"collect", "npg_hidden", "32,32"},
        {"collect", "npg_iterations", "60"},
        {"collect", "npg_episodes_per_iter", "40"},
        {"collect", "npg_kl_delta", "0.01"},
        {"collect", "npg_cg_iters", "10"},
        {"collect", "npg_cg_damping", "0.01"},
        {"collect", "npg_gamma", "0.99"},
        {"collect", "npg_init_logstd", "-0.5"},

        {"augment", "replays_per_source", "20"},
        {"augment", "sigma_a", "0.02"},
        {"augment", "shuffle_distractors", "true"},
        {"augment", "theme_variation", "true"},
        {"augment", "inpaint_fraction", "0.5"},
        {"augment", "inpaint_prompts", "mug,plate,glass,banana,bowl"},
        {"augment", "inpaint_max_tries", "200"},
        {"augment", "pixel_jitter", "false"},
        {"augment", "pixel_crop", "44"},

        {"augment.pixel_only", "shuffle_distractors", "false"},
        {"augment.pixel_only", "theme_variation", "false"},
        {"augment.pixel_only", "inpaint_fraction", "0.0"},
        {"augment.pixel_only", "pixel_jitter", "true"},

        {"compress", "embed_dim", "64"},
        {"compress", "encoder_hidden", "128"},
        {"compress", "downsample", "16"},
        {"compress", "patch", "4"},
        {"compress", "frozen_seed", "77"},
        {"compress", "moco_queue", "1024"},
        {"compress", "moco_momentum", "0.99"},
        {"compress", "moco_tau", "0.2"},
        {"compress", "moco_steps", "1200"},
        {"compress", "moco_batch", "32"},
        {"compress", "moco_lr", "0.001"},
        {"compress", "moco_max_frames", "16000"},
        {"compress", "view_jitter", "30"},
        {"compress", "view_crop", "44"},

        {"train", "mode", "frozen"},
        {"train", "encoder", "moco"},
        {"train", "task_embedding", "context"},
        {"train", "hashed_dim", "32"},
        {"train", "loss", "mean_mse"},
        {"train", "hidden", "96,96"},
        {"train", "lr", "0.001"},
        {"train", "batch", "192"},
        {"train", "steps", "2500"},
        {"train", "init_logstd", "-1.0"},
        {"train", "sigma_clamp", "-5,2"},
        {"train", "success_filter", "true"},
        {"train", "max_frames", "120000"},

        {"eval", "episodes_per_cell", "10"},
        {"eval", "heldout_layouts", "10"},
        {"eval", "deterministic", "true"},
        {"eval", "shuffle_distractors", "false"},

        {"study", "layout_counts", "2,5,10"},
        {"study", "seeds", "3"},
        {"study", "encoders", "state,moco"},
        {"study", "keep_work", "false"},

        {"ablate", "layouts", "4"},
        {"ablate", "seeds", "3"},
        {"ablate", "keep_work", "false"},
    };
    return s;
  }

  static bool known_section(const std::string& sec) {
    if (sec.rfind("augment.", 0) == 0) return sec.size() > 8;
    static const std::set<std::string> fixed = {"pipeline", "sim",   "roster", "tasks", "theme",
                                                "collect",  "augment", "compress", "train",
                                                "eval",     "study", "ablate"};
    return fixed.count(sec) > 0;
  }

  void validate(const std::string& origin) const {
    static const std::set<std::string> roster_fields = {
        "kind", "shape", "half", "color", "texture", "arm", "facing", "theta_range", "init_range"};
    static const std::set<std::string> task_fields = {"target", "goal", "goal_object", "goal_angle",
                                                      "tolerance"};
    std::set<std::string> objects, tasks;
    if (has("roster", "objects"))
      for (const auto& n : get_names("roster", "objects")) objects.insert(n);
    if (has("tasks", "names"))
      for (const auto& n : get_names("tasks", "names")) tasks.insert(n);

    std::set<std::pair<std::string, std::string>> fixed;
    for (const auto& e : schema()) fixed.insert({e.section, e.key});

    for (const auto& [section, kv] : values_) {
      require(known_section(section), origin, ": unknown section [", section, "]");
      for (const auto& [key, value] : kv) {
        (void)value;
        if (section == "roster" || section == "tasks") {
          if (key == "objects" || key == "names") continue;
          auto dotpos = key.find('.');
          require(dotpos != std::string::npos, origin, ": [", section, "] key '", key,
                  "' must be <name>.<field>");
          std::string name = key.substr(0, dotpos);
          std::string field = key.substr(dotpos + 1);
          const auto& names = section == "roster" ? objects : tasks;
          const auto& fields = section == "roster" ? roster_fields : task_fields;
          require(names.count(name) > 0, origin, ": [", section, "] references undeclared name '",
                  name, "' in key '", key, "'");
          require(fields.count(field) > 0, origin, ": [", section, "] unknown field '", field,
                  "' in key '", key, "'");
        } else if (section.rfind("augment.", 0) == 0) {
          require(fixed.count({"augment", key}) > 0, origin, ": [", section, "] unknown key '", key,
                  "' (must be a valid augment key)");
        } else {
          require(fixed.count({section, key}) > 0, origin, ": unknown key '", key, "' in [",
                  section, "]");
        }
      }
    }
  }

  std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace cacti
