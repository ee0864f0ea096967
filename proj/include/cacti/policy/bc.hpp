#pragma once

#include "cacti/adam.hpp"
#include "cacti/mlp.hpp"
#include "cacti/rng.hpp"

namespace cacti::policy {

inline constexpr int kActionDim = 3;

// Task-conditioned Gaussian behavior-cloning policy over [z_t | z_g | proprio]:
// MLP mean head plus a learnable per-dimension log-scale, clamped.
template <typename T = float>
struct BcPolicy {
  num::Mlp<T> net;
  num::Tensor<T> log_sigma;
  T sigma_min = static_cast<T>(-5);
  T sigma_max = static_cast<T>(2);

  int in_dim() const { return net.in_dim(); }

  T clamped_sigma(int j) const {
    return std::min(sigma_max, std::max(sigma_min, log_sigma[static_cast<std::size_t>(j)]));
  }

  template <typename U>
  BcPolicy<U> cast() const {
    return {net.template cast<U>(), log_sigma.template cast<U>(), static_cast<U>(sigma_min),
            static_cast<U>(sigma_max)};
  }
};

template <typename T>
BcPolicy<T> make_bc_policy(int in_dim, const std::vector<int>& hidden, T init_log_sigma,
                           T sigma_min, T sigma_max, std::uint64_t seed) {
  BcPolicy<T> p;
  p.net = num::make_mlp<T>(in_dim, hidden, kActionDim, num::Activation::tanh,
                           derive_seed(seed, "bc/init"));
  p.log_sigma = num::Tensor<T>({kActionDim});
  p.log_sigma.fill(init_log_sigma);
  p.sigma_min = sigma_min;
  p.sigma_max = sigma_max;
  return p;
}

// mu = net([z_t|z_g|proprio]) batch, scale = exp(clamped log-sigma).
template <typename T>
std::pair<num::Tensor<T>, std::array<T, kActionDim>> policy_forward(const BcPolicy<T>& p,
                                                                    const num::Tensor<T>& x) {
  auto mu = num::mlp_forward(p.net, x);
  std::array<T, kActionDim> scale;
  for (int j = 0; j < kActionDim; ++j) scale[static_cast<std::size_t>(j)] = std::exp(p.clamped_sigma(j));
  return {std::move(mu), scale};
}

enum class BcLossMode { mean_mse, sampled };

inline BcLossMode bc_loss_mode_from_name(const std::string& s) {
  if (s == "mean_mse") return BcLossMode::mean_mse;
  if (s == "sampled") return BcLossMode::sampled;
  fail("unknown bc loss mode '", s, "'");
}

template <typename T>
struct BcGrads {
  num::MlpGrads<T> net;
  num::Tensor<T> log_sigma;
};

// Behavior-cloning loss with exact gradients.
//   mean_mse: L = mean_i || mu_i - a_i ||^2
//   sampled:  L = mean_i || mu_i + exp(sigma) * z_i - a_i ||^2, z ~ N(0,1),
//             reparameterized; `noise` must hold the draws (n x action_dim).
template <typename T>
std::pair<T, BcGrads<T>> bc_loss(const BcPolicy<T>& p, const num::Tensor<T>& x,
                                 const num::Tensor<T>& target, BcLossMode mode,
                                 const num::Tensor<T>* noise = nullptr,
                                 num::Tensor<T>* grad_x = nullptr) {
  int n = x.rows();
  require(n > 0, "bc_loss: empty batch");
  require(target.rows() == n && target.cols() == kActionDim, "bc_loss: target shape mismatch");
  if (mode == BcLossMode::sampled)
    require(noise != nullptr && noise->shape == target.shape,
            "bc_loss: sampled mode needs a noise tensor matching the targets");

  num::MlpTrace<T> trace;
  auto mu = num::mlp_forward_trace(p.net, x, &trace);

  num::Tensor<T> grad_mu({n, kActionDim});
  num::Tensor<T> grad_sigma({kActionDim});
  T loss = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kActionDim; ++j) {
      T pred = mu.at(i, j);
      T zij = 0;
      if (mode == BcLossMode::sampled) {
        zij = noise->at(i, j);
        pred += std::exp(p.clamped_sigma(j)) * zij;
      }
      T diff = pred - target.at(i, j);
      require(std::isfinite(static_cast<double>(diff)), "bc_loss: non-finite residual at sample ",
              i, " dim ", j);
      loss += diff * diff / static_cast<T>(n);
      grad_mu.at(i, j) = T(2) * diff / static_cast<T>(n);
      if (mode == BcLossMode::sampled) {
        bool inside = p.log_sigma[static_cast<std::size_t>(j)] > p.sigma_min &&
                      p.log_sigma[static_cast<std::size_t>(j)] < p.sigma_max;
        if (inside)
          grad_sigma[static_cast<std::size_t>(j)] +=
              T(2) * diff * std::exp(p.clamped_sigma(j)) * zij / static_cast<T>(n);
      }
    }
  }
  BcGrads<T> grads{num::mlp_backward(p.net, trace, grad_mu, grad_x), std::move(grad_sigma)};
  return {loss, std::move(grads)};
}

}  // namespace cacti::policy
