#pragma once

#include "cacti/adam.hpp"
#include "cacti/rng.hpp"
#include "cacti/tensor.hpp"

namespace cacti::compress {

// Multinomial logistic probe on fixed embeddings; returns held-out accuracy.
// Deliberately simple: this is a representation-quality measurement, not a
// model.
inline float linear_probe_accuracy(const num::Tensor<float>& X, const std::vector<int>& labels,
                                   int n_classes, std::uint64_t seed, int steps = 250,
                                   float lr = 0.05f) {
  int n = X.rows(), d = X.cols();
  require(static_cast<std::size_t>(n) == labels.size(), "probe: label count mismatch");
  require(n >= 10, "probe: need at least 10 samples");

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(derive_seed(seed, "probe/split"));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.below_int(i + 1))]);
  int n_train = (n * 4) / 5;

  num::Tensor<float> W({n_classes, d}), b({n_classes});
  num::Tensor<float> gW({n_classes, d}), gb({n_classes});
  std::vector<num::ParamBlock<float>> blocks = {{"probe.W", &W, &gW}, {"probe.b", &b, &gb}};
  auto opt = num::make_adam<float>(blocks, lr);

  std::vector<double> logits(static_cast<std::size_t>(n_classes));
  for (int s = 0; s < steps; ++s) {
    gW.fill(0);
    gb.fill(0);
    for (int i = 0; i < n_train; ++i) {
      int row = order[static_cast<std::size_t>(i)];
      const float* x = X.row(row);
      double mx = -1e30;
      for (int c = 0; c < n_classes; ++c) {
        double v = b[static_cast<std::size_t>(c)];
        const float* wr = W.row(c);
        for (int j = 0; j < d; ++j) v += static_cast<double>(wr[j]) * x[j];
        logits[static_cast<std::size_t>(c)] = v;
        mx = std::max(mx, v);
      }
      double z = 0;
      for (int c = 0; c < n_classes; ++c) z += std::exp(logits[static_cast<std::size_t>(c)] - mx);
      for (int c = 0; c < n_classes; ++c) {
        double p = std::exp(logits[static_cast<std::size_t>(c)] - mx) / z;
        double grad = (p - (labels[static_cast<std::size_t>(row)] == c ? 1.0 : 0.0)) /
                      static_cast<double>(n_train);
        gb[static_cast<std::size_t>(c)] += static_cast<float>(grad);
        float* gw = gW.row(c);
        for (int j = 0; j < d; ++j) gw[j] += static_cast<float>(grad * x[j]);
      }
    }
    num::adam_step(opt, blocks);
  }

  int correct = 0, total = 0;
  for (int i = n_train; i < n; ++i) {
    int row = order[static_cast<std::size_t>(i)];
    const float* x = X.row(row);
    int best = 0;
    double best_v = -1e30;
    for (int c = 0; c < n_classes; ++c) {
      double v = b[static_cast<std::size_t>(c)];
      const float* wr = W.row(c);
      for (int j = 0; j < d; ++j) v += static_cast<double>(wr[j]) * x[j];
      if (v > best_v) {
        best_v = v;
        best = c;
      }
    }
    correct += best == labels[static_cast<std::size_t>(row)] ? 1 : 0;
    total += 1;
  }
  return total > 0 ? static_cast<float>(correct) / static_cast<float>(total) : 0.0f;
}

}  // namespace cacti::compress
