#pragma once

#include <cmath>

#include "cacti/mlp.hpp"
#include "cacti/rng.hpp"
#include "cacti/tensor.hpp"

namespace cacti::collect {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// Diagonal-Gaussian policy: MLP mean head plus a state-independent
// per-dimension log-std vector.
template <typename T = float>
struct GaussianPolicy {
  num::Mlp<T> mean;
  num::Tensor<T> log_std;

  int action_dim() const { return static_cast<int>(log_std.size()); }
  std::size_t param_count() const { return mean.param_count() + log_std.size(); }

  // flat parameter order: mean net (per layer w then b), then log_std
  std::vector<T> flatten() const {
    auto flat = num::mlp_flatten(mean);
    flat.insert(flat.end(), log_std.data.begin(), log_std.data.end());
    return flat;
  }

  void unflatten(const std::vector<T>& flat) {
    require(flat.size() == param_count(), "GaussianPolicy::unflatten: size mismatch");
    num::mlp_unflatten(mean, flat);
    std::copy(flat.end() - static_cast<long>(log_std.size()), flat.end(), log_std.data.begin());
  }

  template <typename U>
  GaussianPolicy<U> cast() const {
    return {mean.template cast<U>(), log_std.template cast<U>()};
  }
};

template <typename T>
GaussianPolicy<T> make_gaussian_policy(int state_dim, const std::vector<int>& hidden,
                                       int action_dim, T init_log_std, std::uint64_t seed) {
  GaussianPolicy<T> p;
  p.mean = num::make_mlp<T>(state_dim, hidden, action_dim, num::Activation::tanh, seed);
  p.log_std = num::Tensor<T>({action_dim});
  p.log_std.fill(init_log_std);
  return p;
}

template <typename T>
num::Tensor<T> policy_mean(const GaussianPolicy<T>& p, const num::Tensor<T>& states) {
  return num::mlp_forward(p.mean, states);
}

// Draw a (pre-clamp) action; the simulator clamps on ingestion.
template <typename T>
std::vector<T> sample_action(const GaussianPolicy<T>& p, const std::vector<T>& state, Rng& rng) {
  num::Tensor<T> x({1, static_cast<int>(state.size())}, std::vector<T>(state.begin(), state.end()));
  auto mu = policy_mean(p, x);
  std::vector<T> a(static_cast<std::size_t>(p.action_dim()));
  for (std::size_t j = 0; j < a.size(); ++j)
    a[j] = mu.data[j] + std::exp(p.log_std[j]) * static_cast<T>(rng.normal());
  return a;
}

template <typename T>
T gaussian_log_prob(const T* a, const T* mu, const num::Tensor<T>& log_std) {
  T lp = 0;
  for (std::size_t j = 0; j < log_std.size(); ++j) {
    T s = std::exp(log_std[j]);
    T z = (a[j] - mu[j]) / s;
    lp += T(-0.5) * z * z - log_std[j] - T(0.5) * static_cast<T>(kLog2Pi);
  }
  return lp;
}

// log pi(a|s) plus its exact gradient in flat parameter order. Single state.
template <typename T>
T log_prob_with_grad(const GaussianPolicy<T>& p, const std::vector<T>& state,
                     const std::vector<T>& action, std::vector<T>& grad) {
  int d = p.action_dim();
  num::Tensor<T> x({1, static_cast<int>(state.size())}, std::vector<T>(state.begin(), state.end()));
  num::MlpTrace<T> trace;
  auto mu = num::mlp_forward_trace(p.mean, x, &trace);
  T lp = gaussian_log_prob(action.data(), mu.data.data(), p.log_std);

  // dlogp/dmu_j = (a_j - mu_j) / sigma_j^2
  num::Tensor<T> gmu({1, d});
  for (int j = 0; j < d; ++j) {
    T s = std::exp(p.log_std[static_cast<std::size_t>(j)]);
    gmu.data[static_cast<std::size_t>(j)] =
        (action[static_cast<std::size_t>(j)] - mu.data[static_cast<std::size_t>(j)]) / (s * s);
  }
  auto mg = num::mlp_backward(p.mean, trace, gmu);
  grad = num::grads_flatten(mg);
  // dlogp/dlogstd_j = z_j^2 - 1
  for (int j = 0; j < d; ++j) {
    T s = std::exp(p.log_std[static_cast<std::size_t>(j)]);
    T z = (action[static_cast<std::size_t>(j)] - mu.data[static_cast<std::size_t>(j)]) / s;
    grad.push_back(z * z - T(1));
  }
  return lp;
}

// Mean KL(old || new) of diagonal Gaussians over a batch of states.
template <typename T>
T mean_kl(const GaussianPolicy<T>& oldp, const GaussianPolicy<T>& newp,
          const num::Tensor<T>& states) {
  auto mu_old = policy_mean(oldp, states);
  auto mu_new = policy_mean(newp, states);
  int n = states.rows(), d = oldp.action_dim();
  T total = 0;
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) {
      T lo = oldp.log_std[static_cast<std::size_t>(j)];
      T ln = newp.log_std[static_cast<std::size_t>(j)];
      T so2 = std::exp(2 * lo), sn2 = std::exp(2 * ln);
      T dm = mu_new.at(r, j) - mu_old.at(r, j);
      total += ln - lo + (so2 + dm * dm) / (2 * sn2) - T(0.5);
    }
  }
  return total / static_cast<T>(n);
}

}  // namespace cacti::collect
