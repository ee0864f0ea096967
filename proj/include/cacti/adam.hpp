#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cacti/mlp.hpp"
#include "cacti/tensor.hpp"

namespace cacti::num {

// Named view of one parameter block and its gradient. Callers assemble these
// per update so Adam can report which block carries a non-finite gradient.
template <typename T>
struct ParamBlock {
  std::string name;
  Tensor<T>* param = nullptr;
  const Tensor<T>* grad = nullptr;
};

template <typename T = float>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  long long step = 0;
  T lr = static_cast<T>(1e-3);
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T eps = static_cast<T>(1e-8);
};

template <typename T>
AdamState<T> make_adam(const std::vector<ParamBlock<T>>& blocks, T lr) {
  AdamState<T> st;
  st.lr = lr;
  for (const auto& b : blocks) {
    st.m.emplace_back(b.param->shape);
    st.v.emplace_back(b.param->shape);
  }
  return st;
}

// Standard Adam with bias correction, in-place on the parameter blocks.
template <typename T>
void adam_step(AdamState<T>& st, const std::vector<ParamBlock<T>>& blocks) {
  require(st.m.size() == blocks.size(), "adam_step: state has ", st.m.size(),
          " blocks, update has ", blocks.size());
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto& b = blocks[bi];
    require(b.grad->shape == b.param->shape, "adam_step: grad shape mismatch in block '", b.name, "'");
    require(b.grad->finite(), "adam_step: non-finite gradient in block '", b.name, "'");
  }
  st.step += 1;
  T b1t = static_cast<T>(std::pow(static_cast<double>(st.beta1), static_cast<double>(st.step)));
  T b2t = static_cast<T>(std::pow(static_cast<double>(st.beta2), static_cast<double>(st.step)));
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    auto& p = *blocks[bi].param;
    const auto& g = *blocks[bi].grad;
    auto& m = st.m[bi];
    auto& v = st.v[bi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m.data[i] = st.beta1 * m.data[i] + (T(1) - st.beta1) * g.data[i];
      v.data[i] = st.beta2 * v.data[i] + (T(1) - st.beta2) * g.data[i] * g.data[i];
      T mhat = m.data[i] / (T(1) - b1t);
      T vhat = v.data[i] / (T(1) - b2t);
      p.data[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

// Convenience for (mlp + extra vector blocks) updates.
template <typename T>
std::vector<ParamBlock<T>> mlp_blocks(Mlp<T>& m, MlpGrads<T>& g, const std::string& prefix) {
  std::vector<ParamBlock<T>> blocks;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    blocks.push_back({prefix + ".w" + std::to_string(i), &m.layers[i].w, &g.layers[i].w});
    blocks.push_back({prefix + ".b" + std::to_string(i), &m.layers[i].b, &g.layers[i].b});
  }
  return blocks;
}

}  // namespace cacti::num
