#pragma once

#include "cacti/adam.hpp"
#include "cacti/compress/encoder.hpp"

namespace cacti::compress {

template <typename T>
T vec_norm(const T* v, int d) {
  T s = 0;
  for (int i = 0; i < d; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

// q = e / ||e||; returns the norm for the backward pass.
template <typename T>
T normalize_embedding(T* v, int d) {
  T n = vec_norm(v, d);
  require(n > T(1e-12), "cannot normalize a zero embedding");
  for (int i = 0; i < d; ++i) v[i] /= n;
  return n;
}

// dL/de given dL/dq where q = e/||e||.
template <typename T>
void normalize_backward(const T* q, const T* grad_q, T norm, T* grad_e, int d) {
  T dot = 0;
  for (int i = 0; i < d; ++i) dot += q[i] * grad_q[i];
  for (int i = 0; i < d; ++i) grad_e[i] = (grad_q[i] - q[i] * dot) / norm;
}

// InfoNCE over one positive and the negative queue:
//   L = -log( exp(q.k+ / tau) / (exp(q.k+ / tau) + sum_i exp(q.k_i / tau)) )
// Inputs must be unit-normalized; gradients w.r.t. q are exact.
template <typename T>
std::pair<T, num::Tensor<T>> info_nce_loss(const num::Tensor<T>& q, const num::Tensor<T>& k_pos,
                                           const num::Tensor<T>& queue, T tau) {
  int d = static_cast<int>(q.size());
  require(static_cast<int>(k_pos.size()) == d, "info_nce_loss: k_pos dim mismatch");
  require(queue.size() % static_cast<std::size_t>(d) == 0, "info_nce_loss: queue dim mismatch");
  int K = static_cast<int>(queue.size()) / d;
  require(std::abs(vec_norm(q.data.data(), d) - T(1)) < T(1e-2),
          "info_nce_loss: q must be unit-normalized");
  require(std::abs(vec_norm(k_pos.data.data(), d) - T(1)) < T(1e-2),
          "info_nce_loss: k_pos must be unit-normalized");

  std::vector<T> logits(static_cast<std::size_t>(K) + 1);
  T lpos = 0;
  for (int i = 0; i < d; ++i) lpos += q.data[static_cast<std::size_t>(i)] * k_pos.data[static_cast<std::size_t>(i)];
  logits[0] = lpos / tau;
  for (int k = 0; k < K; ++k) {
    T s = 0;
    const T* row = queue.data.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(d);
    for (int i = 0; i < d; ++i) s += q.data[static_cast<std::size_t>(i)] * row[i];
    logits[static_cast<std::size_t>(k) + 1] = s / tau;
  }
  T mx = logits[0];
  for (T v : logits) mx = std::max(mx, v);
  T z = 0;
  for (T v : logits) z += std::exp(v - mx);
  T loss = -(logits[0] - mx - std::log(z));

  num::Tensor<T> grad_q(q.shape);
  for (std::size_t j = 0; j < logits.size(); ++j) {
    T p = std::exp(logits[j] - mx) / z;
    T coeff = (j == 0 ? p - T(1) : p) / tau;
    const T* row = j == 0 ? k_pos.data.data()
                          : queue.data.data() + (j - 1) * static_cast<std::size_t>(d);
    for (int i = 0; i < d; ++i) grad_q.data[static_cast<std::size_t>(i)] += coeff * row[i];
  }
  return {loss, grad_q};
}

// Composite used by training and by the gradient suite: InfoNCE through the
// normalization of a raw embedding.
template <typename T>
std::pair<T, num::Tensor<T>> info_nce_from_raw(const num::Tensor<T>& raw,
                                               const num::Tensor<T>& k_pos,
                                               const num::Tensor<T>& queue, T tau) {
  int d = static_cast<int>(raw.size());
  num::Tensor<T> q = raw;
  T norm = normalize_embedding(q.data.data(), d);
  auto [loss, grad_q] = info_nce_loss(q, k_pos, queue, tau);
  num::Tensor<T> grad_raw(raw.shape);
  normalize_backward(q.data.data(), grad_q.data.data(), norm, grad_raw.data.data(), d);
  return {loss, grad_raw};
}

// Momentum-contrast state: trainable query encoder, momentum key encoder,
// ring-buffer queue of negative keys.
struct MocoState {
  EncoderParams query;
  num::Mlp<float> key;
  num::Tensor<float> queue;  // {K, d}, unit rows
  int cursor = 0;
  float tau = 0.2f;
  float momentum = 0.99f;
  num::AdamState<float> opt;
  long long steps_done = 0;

  int dim() const { return query.dim(); }
  int queue_size() const { return queue.rows(); }
};

inline MocoState make_moco(int image_size, int downsample, int patch, int hidden, int d, int K,
                           float tau, float momentum, float lr, std::uint64_t seed) {
  MocoState m;
  m.query = make_frozen_encoder(image_size, downsample, patch, hidden, d, derive_seed(seed, "moco/q"));
  m.query.tag = EncoderTag::in_domain_moco;
  m.key = m.query.body;
  m.queue = num::Tensor<float>({K, d});
  Rng rng(derive_seed(seed, "moco/queue"));
  for (int k = 0; k < K; ++k) {
    float* row = m.queue.row(k);
    for (int i = 0; i < d; ++i) row[i] = rng.normalf();
    normalize_embedding(row, d);
  }
  m.tau = tau;
  m.momentum = momentum;
  auto grads = num::MlpGrads<float>::zeros_like(m.query.body);
  auto blocks = num::mlp_blocks(m.query.body, grads, "moco_q");
  m.opt = num::make_adam<float>(blocks, lr);
  return m;
}

// One MoCo update on a batch of (view1, view2) preprocessed pairs:
// query gradients from InfoNCE through Adam into the query body only, then
// the momentum rule on the key body, then batch keys enqueued at the cursor.
inline float moco_step(MocoState& m, const num::Tensor<float>& pre_q,
                       const num::Tensor<float>& pre_k) {
  require(pre_q.rows() == pre_k.rows() && pre_q.rows() > 0, "moco_step: empty or ragged batch");
  int B = pre_q.rows();
  int d = m.dim();

  num::MlpTrace<float> trace;
  auto raw_q = num::mlp_forward_trace(m.query.body, pre_q, &trace);
  auto raw_k = num::mlp_forward(m.key, pre_k);

  num::Tensor<float> grad_raw({B, d});
  float loss_sum = 0;
  std::vector<float> norms(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    norms[static_cast<std::size_t>(b)] = normalize_embedding(raw_q.row(b), d);
    normalize_embedding(raw_k.row(b), d);
  }
  for (int b = 0; b < B; ++b) {
    num::Tensor<float> q({d}), k({d});
    std::copy(raw_q.row(b), raw_q.row(b) + d, q.data.begin());
    std::copy(raw_k.row(b), raw_k.row(b) + d, k.data.begin());
    auto [loss, grad_q] = info_nce_loss(q, k, m.queue, m.tau);
    require(std::isfinite(loss), "moco_step: non-finite loss at batch index ", b);
    loss_sum += loss;
    // mean loss over the batch, through the normalization
    for (auto& g : grad_q.data) g /= static_cast<float>(B);
    normalize_backward(q.data.data(), grad_q.data.data(), norms[static_cast<std::size_t>(b)],
                       grad_raw.row(b), d);
  }

  auto grads = num::mlp_backward(m.query.body, trace, grad_raw);
  auto blocks = num::mlp_blocks(m.query.body, grads, "moco_q");
  num::adam_step(m.opt, blocks);

  // key encoder follows by momentum only, never by gradients
  for (std::size_t li = 0; li < m.key.layers.size(); ++li) {
    auto& kw = m.key.layers[li];
    const auto& qw = m.query.body.layers[li];
    for (std::size_t i = 0; i < kw.w.size(); ++i)
      kw.w.data[i] = m.momentum * kw.w.data[i] + (1.0f - m.momentum) * qw.w.data[i];
    for (std::size_t i = 0; i < kw.b.size(); ++i)
      kw.b.data[i] = m.momentum * kw.b.data[i] + (1.0f - m.momentum) * qw.b.data[i];
  }

  for (int b = 0; b < B; ++b) {
    std::copy(raw_k.row(b), raw_k.row(b) + d, m.queue.row(m.cursor));
    m.cursor = (m.cursor + 1) % m.queue_size();
  }
  m.steps_done += 1;
  return loss_sum / static_cast<float>(B);
}

}  // namespace cacti::compress
