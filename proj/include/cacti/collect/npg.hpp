#pragma once

#include <functional>
#include <utility>

#include "cacti/collect/gaussian_policy.hpp"
#include "cacti/config.hpp"
#include "cacti/sim/rollout.hpp"

namespace cacti::collect {

struct NpgConfig {
  std::vector<int> hidden{32, 32};
  int iterations = 60;
  int episodes_per_iter = 40;
  int cg_iters = 10;
  float kl_delta = 0.01f;
  float cg_damping = 0.01f;
  float gamma = 0.99f;
  float init_log_std = -0.5f;
  float success_bonus = 10.0f;
  float grasp_bonus = 0.5f;
  bool fisher_identity = false;  // vanilla-PG fallback, mainly for tests

  static NpgConfig from(const PipelineConfig& cfg) {
    NpgConfig n;
    n.hidden = cfg.get_ints("collect", "npg_hidden");
    n.iterations = cfg.geti("collect", "npg_iterations");
    n.episodes_per_iter = cfg.geti("collect", "npg_episodes_per_iter");
    n.cg_iters = cfg.geti("collect", "npg_cg_iters");
    n.kl_delta = cfg.getf("collect", "npg_kl_delta");
    n.cg_damping = cfg.getf("collect", "npg_cg_damping");
    n.gamma = cfg.getf("collect", "npg_gamma");
    n.init_log_std = cfg.getf("collect", "npg_init_logstd");
    n.success_bonus = cfg.getf("collect", "success_bonus");
    n.grasp_bonus = cfg.getf("collect", "grasp_bonus");
    return n;
  }
};

struct IterationLog {
  float mean_return = 0;
  float success_rate = 0;
  float kl = 0;
};

struct TrainLog {
  std::vector<IterationLog> iters;
  float final_success = 0;
  int final_episodes = 0;
};

// Shaped reward: negative distance to goal (plus an approach term while the
// target still has to be grasped), grasp bonus, success bonus inside the
// tolerance band.
inline float shaped_reward(const sim::World& w, const sim::TaskSpec& task,
                           const sim::ResolvedGoal& goal, const sim::SimState& s,
                           float grasp_bonus, float success_bonus) {
  float err = w.pose_error(task, goal, s);
  float r = -err;
  if (task.target >= 0) {
    bool holding = s.held == task.target;
    if (!holding) {
      auto ti = static_cast<std::size_t>(task.target);
      sim::Vec2 grab = w.roster[ti].kind == sim::ObjectKind::free_object
                           ? s.obj_pos[ti]
                           : w.handle_pos(task.target, s);
      r -= 0.5f * sim::dist(s.robot_pos, grab);
    } else {
      r += grasp_bonus;
    }
  }
  if (err < task.tolerance) r += success_bonus;
  return r;
}

// Success rate of a policy over fresh stochastic episodes.
inline float evaluate_policy(const sim::World& w, const sim::Layout& layout,
                             const sim::TaskSpec& task, const GaussianPolicy<float>& policy,
                             int episodes, std::uint64_t seed) {
  int ok = 0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, "npg/eval", static_cast<std::uint64_t>(e)));
    auto r = sim::run_episode(
        w, layout, task, derive_seed(seed, "npg/eval/reset", static_cast<std::uint64_t>(e)),
        [&](const sim::SimState& s) {
          auto a = sample_action(policy, w.features(s), rng);
          return sim::Action{a[0], a[1], a[2]};
        });
    ok += r.success ? 1 : 0;
  }
  return episodes > 0 ? static_cast<float>(ok) / static_cast<float>(episodes) : 0.0f;
}

namespace detail {

// y += (G^T (G v)) / n, rows of G being per-sample score gradients.
inline std::vector<double> fisher_vector_product(const std::vector<std::vector<float>>& G,
                                                 const std::vector<double>& v, double damping) {
  std::size_t P = v.size();
  std::vector<double> out(P, 0.0);
  for (const auto& row : G) {
    double s = 0;
    for (std::size_t i = 0; i < P; ++i) s += static_cast<double>(row[i]) * v[i];
    for (std::size_t i = 0; i < P; ++i) out[i] += static_cast<double>(row[i]) * s;
  }
  double n = static_cast<double>(G.size());
  for (std::size_t i = 0; i < P; ++i) out[i] = out[i] / n + damping * v[i];
  return out;
}

inline std::vector<double> conjugate_gradient(
    const std::function<std::vector<double>(const std::vector<double>&)>& Av,
    const std::vector<double>& b, int iters) {
  std::vector<double> x(b.size(), 0.0), r = b, p = b;
  double rs = 0;
  for (double v : r) rs += v * v;
  for (int it = 0; it < iters && rs > 1e-12; ++it) {
    auto Ap = Av(p);
    double pAp = 0;
    for (std::size_t i = 0; i < p.size(); ++i) pAp += p[i] * Ap[i];
    if (pAp <= 0) break;
    double alpha = rs / pAp;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    double rs_new = 0;
    for (double v : r) rs_new += v * v;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rs_new / rs) * p[i];
    rs = rs_new;
  }
  return x;
}

}  // namespace detail

// Natural policy gradient on one (task, layout) cell: on-policy Gaussian
// exploration, reward-to-go advantages against a per-timestep mean baseline,
// conjugate-gradient natural step under a KL trust region.
inline std::pair<GaussianPolicy<float>, TrainLog> npg_train(const sim::World& w,
                                                            const sim::Layout& layout,
                                                            const sim::TaskSpec& task,
                                                            const NpgConfig& cfg,
                                                            std::uint64_t seed,
                                                            int final_eval_episodes = 50) {
  require(cfg.iterations > 0 && cfg.episodes_per_iter > 0, "npg_train: budget must be positive");
  sim::ResolvedGoal goal = w.resolve_goal(task, layout);
  auto policy = make_gaussian_policy<float>(w.state_dim(), cfg.hidden, 3, cfg.init_log_std,
                                            derive_seed(seed, "npg/init"));
  TrainLog log;

  int T = task.horizon;
  int E = cfg.episodes_per_iter;
  std::size_t N = static_cast<std::size_t>(T) * static_cast<std::size_t>(E);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<std::vector<float>> feats(N);
    std::vector<std::vector<float>> acts(N);
    std::vector<float> rewards(N), advantages(N);
    float return_sum = 0;
    int success_count = 0;

    for (int e = 0; e < E; ++e) {
      Rng rng(derive_seed(seed, "npg/explore", static_cast<std::uint64_t>(iter),
                          static_cast<std::uint64_t>(e)));
      std::size_t base = static_cast<std::size_t>(e) * static_cast<std::size_t>(T);
      std::size_t t = 0;
      auto r = sim::run_episode(
          w, layout, task,
          derive_seed(seed, "npg/reset", static_cast<std::uint64_t>(iter),
                      static_cast<std::uint64_t>(e)),
          [&](const sim::SimState& s) {
            feats[base + t] = w.features(s);
            auto a = sample_action(policy, feats[base + t], rng);
            acts[base + t] = a;
            ++t;
            return sim::Action{a[0], a[1], a[2]};
          });
      for (int k = 0; k < T; ++k) {
        rewards[base + static_cast<std::size_t>(k)] =
            shaped_reward(w, task, goal, r.states[static_cast<std::size_t>(k) + 1],
                          cfg.grasp_bonus, cfg.success_bonus);
        return_sum += rewards[base + static_cast<std::size_t>(k)];
      }
      success_count += r.success ? 1 : 0;
    }

    // discounted reward-to-go, per-timestep mean baseline
    for (int e = 0; e < E; ++e) {
      std::size_t base = static_cast<std::size_t>(e) * static_cast<std::size_t>(T);
      float g = 0;
      for (int k = T - 1; k >= 0; --k) {
        g = rewards[base + static_cast<std::size_t>(k)] + cfg.gamma * g;
        advantages[base + static_cast<std::size_t>(k)] = g;
      }
    }
    for (int k = 0; k < T; ++k) {
      float mean = 0;
      for (int e = 0; e < E; ++e)
        mean += advantages[static_cast<std::size_t>(e) * static_cast<std::size_t>(T) +
                           static_cast<std::size_t>(k)];
      mean /= static_cast<float>(E);
      for (int e = 0; e < E; ++e)
        advantages[static_cast<std::size_t>(e) * static_cast<std::size_t>(T) +
                   static_cast<std::size_t>(k)] -= mean;
    }

    // per-sample score gradients and the policy gradient
    std::size_t P = policy.param_count();
    std::vector<std::vector<float>> G(N);
    std::vector<double> g(P, 0.0);
    std::vector<float> row;
    for (std::size_t i = 0; i < N; ++i) {
      float lp = log_prob_with_grad(policy, feats[i], acts[i], row);
      require(std::isfinite(lp), "npg_train: non-finite log-prob at iteration ", iter,
              " sample ", i);
      G[i] = row;
      for (std::size_t p = 0; p < P; ++p) g[p] += static_cast<double>(row[p]) * advantages[i];
    }
    for (auto& v : g) {
      v /= static_cast<double>(N);
      require(std::isfinite(v), "npg_train: non-finite policy gradient at iteration ", iter);
    }

    auto Av = [&](const std::vector<double>& v) {
      if (cfg.fisher_identity) return v;
      return detail::fisher_vector_product(G, v, cfg.cg_damping);
    };
    auto x = detail::conjugate_gradient(Av, g, cfg.cg_iters);
    auto Fx = Av(x);
    double xFx = 0;
    for (std::size_t i = 0; i < P; ++i) xFx += x[i] * Fx[i];

    float kl = 0;
    if (xFx > 1e-12) {
      double beta = std::sqrt(2.0 * cfg.kl_delta / xFx);
      num::Tensor<float> states({static_cast<int>(N), w.state_dim()});
      for (std::size_t i = 0; i < N; ++i)
        std::copy(feats[i].begin(), feats[i].end(), states.row(static_cast<int>(i)));
      auto flat = policy.flatten();
      GaussianPolicy<float> cand = policy;
      for (int tries = 0; tries < 12; ++tries) {
        std::vector<float> moved = flat;
        for (std::size_t p = 0; p < P; ++p)
          moved[p] += static_cast<float>(beta * x[p]);
        cand.unflatten(moved);
        kl = mean_kl(policy, cand, states);
        if (kl <= 1.5f * cfg.kl_delta) {
          policy = cand;
          break;
        }
        beta *= 0.5;
        kl = 0;
      }
    }

    log.iters.push_back({return_sum / static_cast<float>(E),
                         static_cast<float>(success_count) / static_cast<float>(E), kl});
  }

  log.final_episodes = final_eval_episodes;
  log.final_success = evaluate_policy(w, layout, task, policy, final_eval_episodes,
                                      derive_seed(seed, "npg/final_eval"));
  return {policy, log};
}

// Keeps exactly the policies whose measured success clears the threshold.
struct FilterDecision {
  std::size_t index = 0;
  float measured = 0;
  bool accepted = false;
};

inline std::vector<FilterDecision> filter_experts(const std::vector<float>& measured_rates,
                                                  float threshold = 0.9f) {
  std::vector<FilterDecision> out;
  for (std::size_t i = 0; i < measured_rates.size(); ++i)
    out.push_back({i, measured_rates[i], measured_rates[i] >= threshold});
  return out;
}

}  // namespace cacti::collect
