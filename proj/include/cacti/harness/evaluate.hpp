#pragma once

#include <cstdio>
#include <functional>

#include "cacti/augment/replay.hpp"
#include "cacti/policy/train.hpp"
#include "cacti/sim/render.hpp"
#include "cacti/sim/rollout.hpp"

namespace cacti::harness {

inline std::string fmt_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct EvalOptions {
  std::string split = "train";  // tag recorded in the report
  std::vector<int> layout_ids;
  int episodes_per_cell = 10;
  bool deterministic = true;
  bool shuffle_distractors = false;
  bool resample_themes = false;
  std::uint64_t master_seed = 0;  // layout regeneration + conditioning
  std::uint64_t eval_seed = 0;
  int jobs = 1;
};

struct EvalCell {
  int task_id = 0;
  std::string task;
  int layout_id = 0;
  std::string split;
  int episodes = 0;
  int successes = 0;

  double rate() const { return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0; }
};

struct EvalAggregate {
  std::string name;
  std::string split;
  int cells = 0;
  int episodes = 0;
  int successes = 0;
  double mean_rate = 0;
  double stderr_rate = 0;
};

struct EvalReport {
  std::vector<EvalCell> cells;

  static EvalAggregate aggregate(const std::string& name, const std::string& split,
                                 const std::vector<const EvalCell*>& group) {
    EvalAggregate a;
    a.name = name;
    a.split = split;
    a.cells = static_cast<int>(group.size());
    double sum = 0;
    for (const auto* c : group) {
      a.episodes += c->episodes;
      a.successes += c->successes;
      sum += c->rate();
    }
    if (!group.empty()) a.mean_rate = sum / static_cast<double>(group.size());
    if (group.size() > 1) {
      double ss = 0;
      for (const auto* c : group) ss += (c->rate() - a.mean_rate) * (c->rate() - a.mean_rate);
      a.stderr_rate = std::sqrt(ss / static_cast<double>(group.size() - 1)) /
                      std::sqrt(static_cast<double>(group.size()));
    }
    return a;
  }

  std::vector<EvalAggregate> aggregates() const {
    std::vector<EvalAggregate> out;
    std::vector<std::pair<std::string, std::string>> seen;  // (task, split)
    for (const auto& c : cells) {
      std::pair<std::string, std::string> key{c.task, c.split};
      bool done = false;
      for (const auto& s : seen) done = done || s == key;
      if (done) continue;
      seen.push_back(key);
      std::vector<const EvalCell*> group;
      for (const auto& o : cells)
        if (o.task == key.first && o.split == key.second) group.push_back(&o);
      out.push_back(aggregate(key.first, key.second, group));
    }
    std::vector<std::string> splits;
    for (const auto& c : cells)
      if (std::find(splits.begin(), splits.end(), c.split) == splits.end()) splits.push_back(c.split);
    for (const auto& split : splits) {
      std::vector<const EvalCell*> group;
      for (const auto& o : cells)
        if (o.split == split) group.push_back(&o);
      out.push_back(aggregate("overall", split, group));
    }
    return out;
  }

  // mean +/- stderr presentation; aggregates are always recomputed from the
  // per-cell counts right here, never stored
  std::string csv() const {
    std::ostringstream os;
    os << "kind,task,layout,split,episodes,successes,rate,stderr\n";
    for (const auto& c : cells)
      os << "cell," << c.task << "," << c.layout_id << "," << c.split << "," << c.episodes << ","
         << c.successes << "," << fmt_rate(c.rate()) << ",\n";
    for (const auto& a : aggregates())
      os << (a.name == "overall" ? "overall," : "task,") << (a.name == "overall" ? "" : a.name)
         << ",," << a.split << "," << a.episodes << "," << a.successes << ","
         << fmt_rate(a.mean_rate) << "," << fmt_rate(a.stderr_rate) << "\n";
    return os.str();
  }

  double overall_rate(const std::string& split) const {
    for (const auto& a : aggregates())
      if (a.name == "overall" && a.split == split) return a.mean_rate;
    return 0.0;
  }
};

// Per-episode controller: sees the physics state and the rendered
// observation, returns an action. Evaluation drives it closed-loop.
using EpisodeActor = std::function<sim::Action(const sim::SimState&, const sim::Observation&)>;

// Builds a fresh actor per (task, nominal layout, episode).
using ActorFactory = std::function<EpisodeActor(const sim::TaskSpec&, const sim::Layout&, int,
                                                std::uint64_t)>;

// Evaluation protocol: for every (task, layout) cell, episodes_per_cell
// closed-loop episodes of reset -> act/step/render -> success check.
// Heldout-style runs resample themes per episode; the distractor-shuffled
// variant re-places non-task objects at reset while conditioning stays on
// the nominal layout.
inline EvalReport evaluate_actor(const sim::World& w, const EvalOptions& opts,
                                 const ActorFactory& make_actor) {
  require(!opts.layout_ids.empty(), "evaluate: no layouts given");
  struct CellJob {
    const sim::TaskSpec* task;
    int layout_id;
  };
  std::vector<CellJob> jobs;
  for (const auto& task : w.tasks)
    for (int lid : opts.layout_ids) jobs.push_back({&task, lid});

  EvalReport report;
  report.cells.resize(jobs.size());
  parallel_for(jobs.size(), opts.jobs, [&](std::size_t ji) {
    const auto& job = jobs[ji];
    const auto& task = *job.task;
    auto tid = static_cast<std::uint64_t>(task.task_id);
    auto lid = static_cast<std::uint64_t>(job.layout_id);
    sim::Layout nominal = sim::layout_for_id(w, opts.master_seed, job.layout_id);

    EvalCell cell;
    cell.task_id = task.task_id;
    cell.task = task.name;
    cell.layout_id = job.layout_id;
    cell.split = opts.split;
    cell.episodes = opts.episodes_per_cell;
    for (int ep = 0; ep < opts.episodes_per_cell; ++ep) {
      auto e = static_cast<std::uint64_t>(ep);
      sim::Layout run_layout = nominal;
      if (opts.shuffle_distractors) {
        Rng shuffle_rng(derive_seed(opts.eval_seed, "eval/shuffle", tid, lid, e));
        run_layout = augment::shuffle_distractors(w, nominal, task, shuffle_rng);
      }
      sim::VisualTheme theme =
          opts.resample_themes
              ? sim::sample_theme(w, derive_seed(opts.eval_seed, "eval/theme", tid, lid, e))
              : sim::default_theme(w);
      auto actor = make_actor(task, nominal, ep, derive_seed(opts.eval_seed, "eval/actor", tid, lid, e));
      auto goal = w.resolve_goal(task, run_layout);
      auto state = sim::reset(w, run_layout, task,
                              derive_seed(opts.eval_seed, "eval/reset", tid, lid, e));
      std::vector<sim::SimState> states{state};
      for (int t = 0; t < task.horizon; ++t) {
        auto obs = sim::render(w, run_layout, state, theme);
        state = sim::step(w, state, actor(state, obs));
        states.push_back(state);
      }
      cell.successes += sim::check_success(w, task, goal, states) ? 1 : 0;
    }
    report.cells[ji] = std::move(cell);
  });
  return report;
}

// Synthetic goal frame: the scene at reset with the target already at its
// goal pose, rendered under the default theme. Conditions goal_image
// policies on cells where no recorded episode exists.
inline Image goal_frame(const sim::World& w, const sim::TaskSpec& task, const sim::Layout& layout) {
  auto state = sim::reset(w, layout, task, layout.seed);
  auto goal = w.resolve_goal(task, layout);
  if (task.goal_mode == sim::GoalMode::angle)
    state.angle[static_cast<std::size_t>(task.target)] = goal.angle;
  else if (task.target >= 0)
    state.obj_pos[static_cast<std::size_t>(task.target)] = goal.point;
  return sim::render_image(w, layout, state, sim::default_theme(w));
}

// Actor over a trained policy bundle: resolves z_g per cell, z_t per frame
// (visual encoder or state features), task embedding fixed across the
// episode.
inline ActorFactory policy_actor(const sim::World& w, const policy::PolicyBundle& bundle,
                                 std::uint64_t master_seed, bool deterministic) {
  if (bundle.encoder_kind == policy::EncoderKind::state)
    require(bundle.encoder_fp == policy::state_feature_fingerprint(w.state_dim()),
            "policy was trained on a different state-feature schema");
  else
    require(bundle.encoder.fingerprint() == bundle.encoder_fp,
            "encoder fingerprint does not match the policy's training provenance");

  return [&w, &bundle, master_seed, deterministic](const sim::TaskSpec& task,
                                                   const sim::Layout& nominal, int episode,
                                                   std::uint64_t ep_seed) -> EpisodeActor {
    std::vector<float> z_g;
    switch (bundle.embed_mode) {
      case policy::TaskEmbeddingMode::context:
        z_g = policy::context_embedding(w, task, nominal);
        break;
      case policy::TaskEmbeddingMode::hashed:
        z_g = policy::hashed_embedding(task.name, bundle.g, master_seed);
        break;
      case policy::TaskEmbeddingMode::goal_image:
        z_g = bundle.encoder.encode(goal_frame(w, task, nominal));
        break;
    }
    require(static_cast<int>(z_g.size()) == bundle.g, "task embedding dim mismatch");
    auto rng = std::make_shared<Rng>(derive_seed(ep_seed, "policy/act", static_cast<std::uint64_t>(episode)));
    return [&w, &bundle, z_g, rng, deterministic](const sim::SimState& state,
                                                  const sim::Observation& obs) {
      std::vector<float> zt;
      if (bundle.encoder_kind == policy::EncoderKind::state) zt = w.features(state);
      else zt = bundle.encoder.encode(obs.image);
      return policy::policy_act(bundle.policy, zt, z_g, obs.proprio, deterministic, rng.get());
    };
  };
}

// Heldout layout ids live in a reserved range; identical seeds give an
// identical suite.
inline std::vector<int> make_heldout_suite(int n_layouts) {
  require(n_layouts >= 1, "heldout suite needs at least one layout");
  std::vector<int> ids;
  for (int i = 0; i < n_layouts; ++i) ids.push_back(sim::kHeldoutIdBase + i);
  return ids;
}

}  // namespace cacti::harness
