#pragma once

#include <string>
#include <vector>

#include "cacti/config.hpp"

namespace cacti::augment {

// Everything the Augment stage needs to multiply one raw dataset. A named
// plan is the [augment] section overlaid with [augment.<name>].
struct AugmentPlan {
  int replays_per_source = 20;
  float sigma_a = 0.02f;
  bool shuffle_distractors = true;
  bool theme_variation = true;
  float inpaint_fraction = 0.5f;
  std::vector<std::string> inpaint_prompts;
  int inpaint_max_tries = 200;
  bool pixel_jitter = false;
  int pixel_crop = 44;
  std::uint64_t master_seed = 0;

  int inpainted_replays() const {
    return static_cast<int>(std::lround(inpaint_fraction * replays_per_source));
  }

  void validate() const {
    require(replays_per_source >= 1, "augment plan: replays_per_source must be >= 1");
    require(sigma_a >= 0, "augment plan: sigma_a must be >= 0");
    require(inpaint_fraction >= 0 && inpaint_fraction <= 1,
            "augment plan: inpaint_fraction must be in [0,1]");
  }
};

inline AugmentPlan load_plan(const PipelineConfig& cfg, const std::string& name = "") {
  auto key = [&](const char* k) -> std::string {
    if (!name.empty() && cfg.has("augment." + name, k)) return "augment." + name;
    return "augment";
  };
  AugmentPlan p;
  p.replays_per_source = cfg.geti(key("replays_per_source"), "replays_per_source");
  p.sigma_a = cfg.getf(key("sigma_a"), "sigma_a");
  p.shuffle_distractors = cfg.getb(key("shuffle_distractors"), "shuffle_distractors");
  p.theme_variation = cfg.getb(key("theme_variation"), "theme_variation");
  p.inpaint_fraction = cfg.getf(key("inpaint_fraction"), "inpaint_fraction");
  p.inpaint_prompts = cfg.get_names(key("inpaint_prompts"), "inpaint_prompts");
  p.inpaint_max_tries = cfg.geti(key("inpaint_max_tries"), "inpaint_max_tries");
  p.pixel_jitter = cfg.getb(key("pixel_jitter"), "pixel_jitter");
  p.pixel_crop = cfg.geti(key("pixel_crop"), "pixel_crop");
  p.master_seed = static_cast<std::uint64_t>(cfg.getll("pipeline", "master_seed"));
  p.validate();
  return p;
}

}  // namespace cacti::augment
