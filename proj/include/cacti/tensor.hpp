#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "cacti/rng.hpp"
#include "cacti/util.hpp"

namespace cacti::num {

// Dense row-major tensor. Rank is 1 or 2 everywhere in this project.
template <typename T = float>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;

  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(count(shape)), T(0));
  }

  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    require(data.size() == static_cast<std::size_t>(count(shape)),
            "tensor data size ", data.size(), " does not match shape product ", count(shape));
  }

  static long long count(const std::vector<int>& s) {
    long long n = 1;
    for (int d : s) n *= d;
    return n;
  }

  std::size_t size() const { return data.size(); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& operator[](std::size_t i) { return data[i]; }
  T operator[](std::size_t i) const { return data[i]; }

  T& at(int r, int c) { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(c)]; }
  T at(int r, int c) const { return data[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) + static_cast<std::size_t>(c)]; }

  T* row(int r) { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()); }
  const T* row(int r) const { return data.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool finite() const { return all_finite(data); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

template <typename T>
void axpy(T a, const Tensor<T>& x, Tensor<T>& y) {
  require(x.size() == y.size(), "axpy size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y.data[i] += a * x.data[i];
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.size() == b.size(), "dot size mismatch");
  T s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

}  // namespace cacti::num
