#include <catch2/catch_amalgamated.hpp>

#include "cacti/collect/record.hpp"
#include "cacti/grad_check.hpp"

using namespace cacti;
using namespace cacti::collect;
using namespace cacti::sim;

namespace {
World default_world() { return build_world(PipelineConfig::defaults()); }
}  // namespace

TEST_CASE("scripted expert succeeds on every task across layouts") {
  auto w = default_world();
  for (const auto& task : w.tasks)
    for (std::uint64_t ls = 0; ls < 3; ++ls) {
      auto lay = sample_layout(w, derive_seed(1, "layout/train", ls), static_cast<int>(ls));
      auto tape = script_expert(w, lay, task, derive_seed(2, "tape", static_cast<std::uint64_t>(task.task_id), ls));
      REQUIRE(static_cast<int>(tape.actions.size()) == task.horizon);
    }
}

TEST_CASE("tape replay on its source layout and seed is bit-identical") {
  auto w = default_world();
  auto lay = sample_layout(w, 51, 0);
  const auto& task = w.task_by_name("drag_plate");
  auto tape = script_expert(w, lay, task, 99);
  auto r1 = replay_actions(w, lay, task, tape.recording_seed, tape.actions);
  auto r2 = replay_actions(w, lay, task, tape.recording_seed, tape.actions);
  REQUIRE(r1.success);
  REQUIRE(r1.states == r2.states);
}

TEST_CASE("drag task with target already at goal still succeeds") {
  auto w = default_world();
  const auto& task = w.task_by_name("drag_mug");
  Layout lay;
  lay.layout_id = 0;
  for (std::size_t i = 0; i < w.roster.size(); ++i)
    lay.pos.push_back({0.08f + 0.12f * static_cast<float>(i), 0.92f});
  lay.orient.assign(w.roster.size(), 0.0f);
  lay.pos[static_cast<std::size_t>(w.object_index("mug"))] = task.goal_point;
  auto tape = script_expert(w, lay, task, 5);
  auto replay = replay_actions(w, lay, task, 5, tape.actions);
  REQUIRE(replay.success);
}

TEST_CASE("door tape drives the articulation monotonically toward the goal") {
  auto w = default_world();
  auto lay = sample_layout(w, 13, 0);
  const auto& task = w.task_by_name("open_cabinet");
  auto ci = static_cast<std::size_t>(w.object_index("cabinet"));
  auto tape = script_expert(w, lay, task, 21);
  auto r = replay_actions(w, lay, task, 21, tape.actions);
  REQUIRE(r.success);
  // once the handle is held, the angle should never move away from the goal
  float best = std::abs(r.states.front().angle[ci] - task.goal_angle);
  for (const auto& s : r.states) {
    float err = std::abs(s.angle[ci] - task.goal_angle);
    REQUIRE(err <= best + 1e-5f);
    best = std::min(best, err);
  }
  REQUIRE(best < task.tolerance);
}

TEST_CASE("gaussian log-prob gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = make_gaussian_policy<double>(5, {6}, 3, -0.4, seed);
    Rng rng(seed + 7);
    std::vector<double> state(5), action(3);
    for (auto& v : state) v = rng.normal();
    for (auto& v : action) v = rng.normal();

    std::vector<double> grad;
    log_prob_with_grad(p, state, action, grad);

    auto flat = p.flatten();
    num::Tensor<double> theta({static_cast<int>(flat.size())}, flat);
    auto fd = num::finite_diff_grad(
        [&](const num::Tensor<double>& t) {
          GaussianPolicy<double> probe = p;
          probe.unflatten(t.data);
          std::vector<double> g;
          return log_prob_with_grad(probe, state, action, g);
        },
        theta, 1e-4);
    num::Tensor<double> analytic({static_cast<int>(grad.size())}, grad);
    REQUIRE(num::grad_rel_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("conjugate gradient with the identity operator returns the gradient direction") {
  std::vector<double> b = {1.0, -2.0, 3.0, 0.5};
  auto x = collect::detail::conjugate_gradient([](const std::vector<double>& v) { return v; }, b, 10);
  for (std::size_t i = 0; i < b.size(); ++i) REQUIRE(x[i] == Catch::Approx(b[i]).margin(1e-12));
}

TEST_CASE("zero advantages produce a zero policy gradient") {
  std::vector<std::vector<float>> G = {{1, 2}, {3, 4}, {-1, 0.5f}};
  std::vector<double> v = {0.3, -0.7};
  auto Fv = collect::detail::fisher_vector_product(G, v, 0.0);
  // with zero advantages g = G^T a / n = 0, so the natural step vanishes
  std::vector<double> g(2, 0.0);
  for (const auto& row : G)
    for (std::size_t i = 0; i < 2; ++i) g[i] += row[i] * 0.0;
  REQUIRE(g == std::vector<double>{0.0, 0.0});
  REQUIRE(Fv.size() == 2);  // operator itself stays well-defined
}

TEST_CASE("mean KL is zero for identical policies and positive after a shift") {
  auto p = make_gaussian_policy<float>(4, {5}, 3, -0.5f, 3);
  num::Tensor<float> states({6, 4});
  Rng rng(11);
  for (auto& v : states.data) v = rng.normalf();
  REQUIRE(mean_kl(p, p, states) == Catch::Approx(0.0).margin(1e-7));
  auto q = p;
  q.log_std.fill(-0.1f);
  REQUIRE(mean_kl(p, q, states) > 0.0f);
}

TEST_CASE("npg improves the reach task and respects the KL trust region") {
  auto w = default_world();
  auto lay = layout_for_id(w, 1, 0);
  const auto& task = w.task_by_name("reach_kettle");
  NpgConfig cfg = NpgConfig::from(PipelineConfig::defaults());
  cfg.iterations = 12;
  auto [policy, log] = npg_train(w, lay, task, cfg, 5, 20);
  REQUIRE(log.iters.size() == 12);
  for (const auto& it : log.iters) REQUIRE(it.kl <= 1.5f * cfg.kl_delta + 1e-6f);
  REQUIRE(log.iters.back().mean_return > log.iters.front().mean_return);
}

TEST_CASE("filter keeps exactly the policies at or above threshold") {
  auto decisions = filter_experts({1.0f, 0.88f, 0.9f, 0.483f}, 0.9f);
  REQUIRE(decisions[0].accepted);
  REQUIRE(!decisions[1].accepted);  // 44/50 = 0.88 rejected
  REQUIRE(decisions[2].accepted);
  REQUIRE(!decisions[3].accepted);

  // recount oracle: regenerate rates from raw outcomes and compare decisions
  Rng rng(2);
  std::vector<std::vector<bool>> outcomes;
  std::vector<float> rates;
  for (int p = 0; p < 20; ++p) {
    std::vector<bool> o;
    int wins = 0;
    for (int e = 0; e < 50; ++e) {
      bool win = rng.uniform() < 0.9;
      o.push_back(win);
      wins += win ? 1 : 0;
    }
    outcomes.push_back(o);
    rates.push_back(static_cast<float>(wins) / 50.0f);
  }
  auto dec = filter_experts(rates, 0.9f);
  for (std::size_t p = 0; p < outcomes.size(); ++p) {
    int wins = 0;
    for (bool o : outcomes[p]) wins += o ? 1 : 0;
    REQUIRE(dec[p].accepted == (static_cast<float>(wins) / 50.0f >= 0.9f));
  }
}

TEST_CASE("record_tapes writes a round-trippable shard with tape semantics") {
  auto w = default_world();
  auto lay = layout_for_id(w, 3, 1);
  const auto& task = w.task_by_name("drag_banana");
  auto shard = record_tapes(w, task, lay, 3, 42);
  REQUIRE(shard.episodes.size() == 3);
  for (const auto& ep : shard.episodes) {
    REQUIRE(ep.success);
    REQUIRE(static_cast<int>(ep.steps.size()) == task.horizon);
  }
  auto bytes = io::serialize_shard(shard);
  REQUIRE(io::parse_shard(bytes, "mem") == shard);

  auto tapes = tapes_from_shard(shard);
  REQUIRE(tapes.size() == 3);
  for (std::size_t i = 0; i < tapes.size(); ++i) {
    tapes[i].validate(task.horizon);
    auto r = replay_actions(w, lay, task, tapes[i].recording_seed, tapes[i].actions);
    REQUIRE(r.success);
    // replay reproduces the recorded state features exactly
    for (std::size_t t = 0; t < shard.episodes[i].steps.size(); ++t)
      REQUIRE(w.features(r.states[t]) == shard.episodes[i].steps[t].state);
  }
}

TEST_CASE("empty shard is valid") {
  auto w = default_world();
  auto lay = layout_for_id(w, 3, 1);
  auto shard = record_tapes(w, w.tasks[0], lay, 0, 1);
  REQUIRE(shard.episodes.empty());
  auto bytes = io::serialize_shard(shard);
  auto back = io::parse_shard(bytes, "mem");
  REQUIRE(back.episodes.empty());
  REQUIRE(back.task_id == shard.task_id);
}
