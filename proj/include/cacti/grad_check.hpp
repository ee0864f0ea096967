#pragma once

#include <cmath>
#include <functional>

#include "cacti/tensor.hpp"

namespace cacti::num {

// Central-difference gradient estimate of a scalar function, one coordinate
// at a time, with per-coordinate step h_i = h_scale * max(1, |x_i|).
template <typename T, typename F>
Tensor<T> finite_diff_grad(F&& f, const Tensor<T>& x, T h_scale = static_cast<T>(1e-3)) {
  require(h_scale > T(0), "finite_diff_grad: step scale must be positive");
  Tensor<T> g(x.shape);
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    T h = h_scale * std::max(T(1), std::abs(x.data[i]));
    probe.data[i] = x.data[i] + h;
    T fp = f(probe);
    probe.data[i] = x.data[i] - h;
    T fm = f(probe);
    probe.data[i] = x.data[i];
    require(std::isfinite(static_cast<double>(fp)) && std::isfinite(static_cast<double>(fm)),
            "finite_diff_grad: non-finite function value at coordinate ", i);
    g.data[i] = (fp - fm) / (T(2) * h);
  }
  return g;
}

// Relative error between an analytic gradient and its finite-difference
// estimate; max over coordinates of |a-b| / max(1e-6, |a|, |b|).
template <typename T>
double grad_rel_error(const Tensor<T>& analytic, const Tensor<T>& fd) {
  require(analytic.size() == fd.size(), "grad_rel_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double a = static_cast<double>(analytic.data[i]);
    double b = static_cast<double>(fd.data[i]);
    double denom = std::max({1e-6, std::abs(a), std::abs(b)});
    worst = std::max(worst, std::abs(a - b) / denom);
  }
  return worst;
}

}  // namespace cacti::num
