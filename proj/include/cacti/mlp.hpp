#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cacti/tensor.hpp"

namespace cacti::num {

enum class Activation { tanh, relu };

inline const char* activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  fail("unknown activation '", s, "'");
}

// Feed-forward MLP: hidden layers use `act`, the output layer is identity.
// Weight shape is {out, in}; y = W x + b.
template <typename T = float>
struct Mlp {
  struct Layer {
    Tensor<T> w;
    Tensor<T> b;
  };
  std::vector<Layer> layers;
  Activation act = Activation::tanh;

  int in_dim() const { return layers.empty() ? 0 : layers.front().w.cols(); }
  int out_dim() const { return layers.empty() ? 0 : layers.back().w.rows(); }

  void validate() const {
    require(!layers.empty(), "mlp has no layers");
    for (std::size_t i = 0; i + 1 < layers.size(); ++i)
      require(layers[i].w.rows() == layers[i + 1].w.cols(), "mlp layer ", i,
              " out dim ", layers[i].w.rows(), " != layer ", i + 1, " in dim ",
              layers[i + 1].w.cols());
    for (std::size_t i = 0; i < layers.size(); ++i)
      require(layers[i].b.size() == static_cast<std::size_t>(layers[i].w.rows()),
              "mlp layer ", i, " bias size mismatch");
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }

  template <typename U>
  Mlp<U> cast() const {
    Mlp<U> out;
    out.act = act;
    for (const auto& l : layers)
      out.layers.push_back({l.w.template cast<U>(), l.b.template cast<U>()});
    return out;
  }
};

// Glorot-uniform init, seeded.
template <typename T>
Mlp<T> make_mlp(int in_dim, const std::vector<int>& hidden, int out_dim, Activation act,
                std::uint64_t seed) {
  Mlp<T> m;
  m.act = act;
  Rng rng(seed);
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(out_dim);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    int fan_in = dims[i], fan_out = dims[i + 1];
    T a = static_cast<T>(std::sqrt(6.0 / (fan_in + fan_out)));
    typename Mlp<T>::Layer l{Tensor<T>({fan_out, fan_in}), Tensor<T>({fan_out})};
    for (auto& w : l.w.data) w = static_cast<T>(rng.uniform(-a, a));
    m.layers.push_back(std::move(l));
  }
  return m;
}

template <typename T>
T apply_act(Activation a, T x) {
  return a == Activation::tanh ? std::tanh(x) : (x > T(0) ? x : T(0));
}

// Derivative expressed through the activation output.
template <typename T>
T act_deriv_from_out(Activation a, T y) {
  return a == Activation::tanh ? T(1) - y * y : (y > T(0) ? T(1) : T(0));
}

// Per-layer inputs captured by forward_trace, consumed by mlp_backward.
template <typename T>
struct MlpTrace {
  std::vector<Tensor<T>> inputs;  // inputs[i] = input to layer i, inputs.back() = final output
};

template <typename T>
Tensor<T> mlp_forward_trace(const Mlp<T>& m, const Tensor<T>& x, MlpTrace<T>* trace) {
  m.validate();
  require(x.cols() == m.in_dim(), "mlp_forward: input dim ", x.cols(), " != expected ", m.in_dim());
  int n = x.rows();
  Tensor<T> cur = x;
  if (trace) trace->inputs.clear();
  for (std::size_t li = 0; li < m.layers.size(); ++li) {
    if (trace) trace->inputs.push_back(cur);
    const auto& l = m.layers[li];
    int in = l.w.cols(), out = l.w.rows();
    Tensor<T> next({n, out});
    bool last = li + 1 == m.layers.size();
    for (int r = 0; r < n; ++r) {
      const T* xp = cur.row(r);
      T* yp = next.row(r);
      for (int o = 0; o < out; ++o) {
        const T* wp = l.w.row(o);
        T s = l.b[static_cast<std::size_t>(o)];
        for (int i = 0; i < in; ++i) s += wp[i] * xp[i];
        yp[o] = last ? s : apply_act(m.act, s);
      }
    }
    cur = std::move(next);
  }
  if (trace) trace->inputs.push_back(cur);
  return cur;
}

template <typename T>
Tensor<T> mlp_forward(const Mlp<T>& m, const Tensor<T>& x) {
  return mlp_forward_trace(m, x, static_cast<MlpTrace<T>*>(nullptr));
}

template <typename T>
struct MlpGrads {
  std::vector<typename Mlp<T>::Layer> layers;

  static MlpGrads zeros_like(const Mlp<T>& m) {
    MlpGrads g;
    for (const auto& l : m.layers)
      g.layers.push_back({Tensor<T>(l.w.shape), Tensor<T>(l.b.shape)});
    return g;
  }

  void accumulate(const MlpGrads& o) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      axpy(T(1), o.layers[i].w, layers[i].w);
      axpy(T(1), o.layers[i].b, layers[i].b);
    }
  }

  void scale(T a) {
    for (auto& l : layers) {
      for (auto& v : l.w.data) v *= a;
      for (auto& v : l.b.data) v *= a;
    }
  }
};

// Exact reverse-mode gradients of the forward map. grad_out has the output
// shape; returns parameter grads and writes dL/dx into grad_x if non-null.
template <typename T>
MlpGrads<T> mlp_backward(const Mlp<T>& m, const MlpTrace<T>& trace, const Tensor<T>& grad_out,
                         Tensor<T>* grad_x = nullptr) {
  require(trace.inputs.size() == m.layers.size() + 1, "mlp_backward: trace does not match mlp");
  const Tensor<T>& out = trace.inputs.back();
  require(grad_out.shape == out.shape, "mlp_backward: grad_out shape mismatch");
  int n = grad_out.rows();
  MlpGrads<T> grads = MlpGrads<T>::zeros_like(m);
  Tensor<T> delta = grad_out;
  for (int li = static_cast<int>(m.layers.size()) - 1; li >= 0; --li) {
    const auto& l = m.layers[static_cast<std::size_t>(li)];
    auto& gl = grads.layers[static_cast<std::size_t>(li)];
    const Tensor<T>& input = trace.inputs[static_cast<std::size_t>(li)];
    int in = l.w.cols(), out_dim = l.w.rows();
    // delta is dL/d(pre-activation) for the last layer (identity output),
    // otherwise dL/d(activation output); fold in the activation derivative.
    if (li != static_cast<int>(m.layers.size()) - 1) {
      const Tensor<T>& y = trace.inputs[static_cast<std::size_t>(li) + 1];
      for (std::size_t i = 0; i < delta.size(); ++i)
        delta.data[i] *= act_deriv_from_out(m.act, y.data[i]);
    }
    for (int r = 0; r < n; ++r) {
      const T* dp = delta.row(r);
      const T* xp = input.row(r);
      for (int o = 0; o < out_dim; ++o) {
        T d = dp[o];
        gl.b[static_cast<std::size_t>(o)] += d;
        T* gw = gl.w.row(o);
        for (int i = 0; i < in; ++i) gw[i] += d * xp[i];
      }
    }
    if (li > 0 || grad_x) {
      Tensor<T> prev({n, in});
      for (int r = 0; r < n; ++r) {
        const T* dp = delta.row(r);
        T* pp = prev.row(r);
        for (int o = 0; o < out_dim; ++o) {
          T d = dp[o];
          const T* wp = l.w.row(o);
          for (int i = 0; i < in; ++i) pp[i] += d * wp[i];
        }
      }
      if (li == 0 && grad_x) *grad_x = std::move(prev);
      else delta = std::move(prev);
    }
  }
  return grads;
}

// Flat parameter vector view, used by the natural-gradient solver and
// fingerprinting. Order: per layer, weights row-major then biases.
template <typename T>
std::vector<T> mlp_flatten(const Mlp<T>& m) {
  std::vector<T> flat;
  flat.reserve(m.param_count());
  for (const auto& l : m.layers) {
    flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
    flat.insert(flat.end(), l.b.data.begin(), l.b.data.end());
  }
  return flat;
}

template <typename T>
void mlp_unflatten(Mlp<T>& m, const std::vector<T>& flat) {
  require(flat.size() >= m.param_count(), "mlp_unflatten: flat vector too small");
  std::size_t p = 0;
  for (auto& l : m.layers) {
    std::copy(flat.begin() + static_cast<long>(p), flat.begin() + static_cast<long>(p + l.w.size()), l.w.data.begin());
    p += l.w.size();
    std::copy(flat.begin() + static_cast<long>(p), flat.begin() + static_cast<long>(p + l.b.size()), l.b.data.begin());
    p += l.b.size();
  }
}

template <typename T>
std::vector<T> grads_flatten(const MlpGrads<T>& g) {
  std::vector<T> flat;
  for (const auto& l : g.layers) {
    flat.insert(flat.end(), l.w.data.begin(), l.w.data.end());
    flat.insert(flat.end(), l.b.data.begin(), l.b.data.end());
  }
  return flat;
}

}  // namespace cacti::num
