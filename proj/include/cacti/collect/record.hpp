#pragma once

#include <json.hpp>

#include "cacti/collect/npg.hpp"
#include "cacti/collect/scripted.hpp"
#include "cacti/io/shard.hpp"
#include "cacti/sim/render.hpp"

namespace cacti::collect {

using Json = nlohmann::ordered_json;

inline io::ShardData make_empty_shard(const sim::World& w, const sim::TaskSpec& task,
                                      int layout_id) {
  io::ShardData s;
  s.task_id = static_cast<std::uint16_t>(task.task_id);
  s.layout_id = static_cast<std::uint16_t>(layout_id);
  s.height = static_cast<std::uint16_t>(w.image_size);
  s.width = static_cast<std::uint16_t>(w.image_size);
  s.channels = 3;
  s.proprio_dim = 6;
  s.action_dim = 3;
  s.state_dim = static_cast<std::uint16_t>(w.state_dim());
  return s;
}

// Renders each pre-action state of a physics rollout under the theme and
// packs the aligned (image, proprio, action, state) rows.
inline io::ShardEpisode episode_from_rollout(const sim::World& w, const sim::Layout& layout,
                                             const sim::Rollout& r, const sim::VisualTheme& theme) {
  io::ShardEpisode ep;
  ep.success = r.success;
  ep.steps.resize(r.actions.size());
  for (std::size_t t = 0; t < r.actions.size(); ++t) {
    const auto& st = r.states[t];
    auto& out = ep.steps[t];
    out.image = sim::render_image(w, layout, st, theme).px;
    auto pp = w.proprio(st);
    out.proprio.assign(pp.begin(), pp.end());
    out.action = {r.actions[t].dx, r.actions[t].dy, r.actions[t].grip};
    out.state = w.features(st);
  }
  return ep;
}

// Scripted collection for one (task, layout) cell: each tape is recorded
// once under the default theme; the Augment stage multiplies from there.
inline io::ShardData record_tapes(const sim::World& w, const sim::TaskSpec& task,
                                  const sim::Layout& layout, int n_tapes,
                                  std::uint64_t master_seed) {
  io::ShardData shard = make_empty_shard(w, task, layout.layout_id);
  sim::VisualTheme theme = sim::default_theme(w);
  Json prov;
  prov["stage"] = "collect";
  prov["mode"] = "script";
  prov["episodes"] = Json::array();
  for (int i = 0; i < n_tapes; ++i) {
    std::uint64_t rec_seed = derive_seed(master_seed, "tape", static_cast<std::uint64_t>(task.task_id),
                                         static_cast<std::uint64_t>(layout.layout_id),
                                         static_cast<std::uint64_t>(i));
    DemoTape tape = script_expert(w, layout, task, rec_seed);
    sim::Rollout replay = sim::replay_actions(w, layout, task, rec_seed, tape.actions);
    shard.episodes.push_back(episode_from_rollout(w, layout, replay, theme));
    Json e;
    e["tape"] = i;
    e["reset_seed"] = rec_seed;
    e["theme_seed"] = 0;
    e["noise_seed"] = 0;
    e["success"] = replay.success;
    prov["episodes"].push_back(e);
  }
  shard.provenance = prov.dump();
  return shard;
}

// Expert-policy collection: fresh stochastic rollouts, success flagged per
// episode.
inline io::ShardData record_policy_rollouts(const sim::World& w, const sim::TaskSpec& task,
                                            const sim::Layout& layout,
                                            const GaussianPolicy<float>& policy, int n_episodes,
                                            std::uint64_t master_seed) {
  io::ShardData shard = make_empty_shard(w, task, layout.layout_id);
  sim::VisualTheme theme = sim::default_theme(w);
  Json prov;
  prov["stage"] = "collect";
  prov["mode"] = "npg";
  prov["episodes"] = Json::array();
  for (int e = 0; e < n_episodes; ++e) {
    std::uint64_t reset_seed = derive_seed(master_seed, "npg/record/reset",
                                           static_cast<std::uint64_t>(task.task_id),
                                           static_cast<std::uint64_t>(layout.layout_id),
                                           static_cast<std::uint64_t>(e));
    Rng rng(derive_seed(master_seed, "npg/record/act", static_cast<std::uint64_t>(task.task_id),
                        static_cast<std::uint64_t>(layout.layout_id),
                        static_cast<std::uint64_t>(e)));
    auto r = sim::run_episode(w, layout, task, reset_seed, [&](const sim::SimState& s) {
      auto a = sample_action(policy, w.features(s), rng);
      return sim::Action{a[0], a[1], a[2]};
    });
    shard.episodes.push_back(episode_from_rollout(w, layout, r, theme));
    Json je;
    je["episode"] = e;
    je["reset_seed"] = reset_seed;
    je["theme_seed"] = 0;
    je["noise_seed"] = 0;
    je["success"] = r.success;
    prov["episodes"].push_back(je);
  }
  shard.provenance = prov.dump();
  return shard;
}

// Reads tapes back out of a raw shard: action sequences plus their recording
// seeds from the provenance block.
inline std::vector<DemoTape> tapes_from_shard(const io::ShardData& shard) {
  std::vector<DemoTape> tapes;
  auto prov = Json::parse(shard.provenance);
  const auto& eps = prov.at("episodes");
  require(eps.size() == shard.episodes.size(), "shard provenance lists ", eps.size(),
          " episodes but shard has ", shard.episodes.size());
  for (std::size_t i = 0; i < shard.episodes.size(); ++i) {
    DemoTape t;
    t.task_id = shard.task_id;
    t.layout_id = shard.layout_id;
    t.recording_seed = eps[i].at("reset_seed").get<std::uint64_t>();
    for (const auto& st : shard.episodes[i].steps)
      t.actions.push_back({st.action[0], st.action[1], st.action[2]});
    tapes.push_back(std::move(t));
  }
  return tapes;
}

}  // namespace cacti::collect
