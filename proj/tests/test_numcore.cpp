#include <catch2/catch_amalgamated.hpp>

#include "cacti/adam.hpp"
#include "cacti/grad_check.hpp"
#include "cacti/mlp.hpp"
#include "cacti/rng.hpp"
#include "cacti/tensor.hpp"

using namespace cacti;
using namespace cacti::num;

TEST_CASE("tensor basics") {
  Tensor<float> t({2, 3});
  REQUIRE(t.size() == 6);
  REQUIRE(t.rows() == 2);
  REQUIRE(t.cols() == 3);
  t.at(1, 2) = 5.0f;
  REQUIRE(t.data[5] == 5.0f);
  REQUIRE_THROWS(Tensor<float>({2, 2}, {1.0f, 2.0f, 3.0f}));
}

TEST_CASE("mlp forward zero weights gives zero output") {
  Mlp<float> m;
  m.layers.push_back({Tensor<float>({4, 3}), Tensor<float>({4})});
  m.layers.push_back({Tensor<float>({2, 4}), Tensor<float>({2})});
  Tensor<float> x({2, 3}, {1, -2, 3, 0.5f, 0, -1});
  auto y = mlp_forward(m, x);
  for (float v : y.data) REQUIRE(v == 0.0f);
}

TEST_CASE("mlp forward identity single layer") {
  Mlp<float> m;
  Tensor<float> w({2, 2});
  w.at(0, 0) = 1;
  w.at(1, 1) = 1;
  m.layers.push_back({w, Tensor<float>({2})});
  Tensor<float> x({1, 2}, {0.5f, -0.5f});
  auto y = mlp_forward(m, x);
  REQUIRE(y.data[0] == 0.5f);
  REQUIRE(y.data[1] == -0.5f);
}

TEST_CASE("mlp forward matches scalar re-implementation on a 2-layer tanh net") {
  auto m = make_mlp<float>(2, {3}, 2, Activation::tanh, 0);
  Tensor<float> x({1, 2}, {1.0f, 0.0f});
  auto y = mlp_forward(m, x);

  // independent scalar-by-scalar recomputation
  float h[3];
  for (int o = 0; o < 3; ++o) {
    float s = m.layers[0].b[static_cast<std::size_t>(o)];
    for (int i = 0; i < 2; ++i) s += m.layers[0].w.at(o, i) * x.data[static_cast<std::size_t>(i)];
    h[o] = std::tanh(s);
  }
  for (int o = 0; o < 2; ++o) {
    float s = m.layers[1].b[static_cast<std::size_t>(o)];
    for (int i = 0; i < 3; ++i) s += m.layers[1].w.at(o, i) * h[i];
    REQUIRE(y.data[static_cast<std::size_t>(o)] == Catch::Approx(s).margin(1e-7));
  }
}

TEST_CASE("mlp forward is deterministic") {
  auto m = make_mlp<float>(5, {8, 8}, 3, Activation::relu, 42);
  Tensor<float> x({4, 5});
  Rng rng(7);
  for (auto& v : x.data) v = rng.normalf();
  auto y1 = mlp_forward(m, x);
  auto y2 = mlp_forward(m, x);
  REQUIRE(y1.data == y2.data);
}

TEST_CASE("mlp backward zero cotangent gives zero gradients") {
  auto m = make_mlp<float>(3, {4}, 2, Activation::tanh, 1);
  Tensor<float> x({2, 3}, {1, 2, 3, 4, 5, 6});
  MlpTrace<float> tr;
  mlp_forward_trace(m, x, &tr);
  Tensor<float> gout({2, 2});
  Tensor<float> gx;
  auto grads = mlp_backward(m, tr, gout, &gx);
  for (const auto& l : grads.layers) {
    for (float v : l.w.data) REQUIRE(v == 0.0f);
    for (float v : l.b.data) REQUIRE(v == 0.0f);
  }
  for (float v : gx.data) REQUIRE(v == 0.0f);
}

TEST_CASE("mlp backward linear case: grad_w = x, grad_x = w") {
  Mlp<float> m;
  Tensor<float> w({1, 3}, {0.3f, -0.7f, 1.1f});
  m.layers.push_back({w, Tensor<float>({1})});
  Tensor<float> x({1, 3}, {2.0f, 0.5f, -1.0f});
  MlpTrace<float> tr;
  mlp_forward_trace(m, x, &tr);
  Tensor<float> gout({1, 1}, {1.0f});
  Tensor<float> gx;
  auto grads = mlp_backward(m, tr, gout, &gx);
  for (int i = 0; i < 3; ++i) {
    REQUIRE(grads.layers[0].w.data[static_cast<std::size_t>(i)] == x.data[static_cast<std::size_t>(i)]);
    REQUIRE(gx.data[static_cast<std::size_t>(i)] == w.data[static_cast<std::size_t>(i)]);
  }
}

// Analytic gradients of a scalar head over a random 2-layer net against the
// central-difference oracle, double precision, 20 seeds.
TEST_CASE("mlp backward matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = make_mlp<double>(4, {6, 5}, 3, seed % 2 ? Activation::tanh : Activation::relu, seed);
    Rng rng(seed + 100);
    Tensor<double> x({3, 4});
    for (auto& v : x.data) v = rng.normal();
    Tensor<double> gout({3, 3});
    for (auto& v : gout.data) v = rng.normal();

    MlpTrace<double> tr;
    mlp_forward_trace(m, x, &tr);
    Tensor<double> gx;
    auto grads = mlp_backward(m, tr, gout, &gx);

    // scalar objective L = sum(gout * forward(x))
    auto loss_at = [&](const Mlp<double>& net, const Tensor<double>& input) {
      auto y = mlp_forward(net, input);
      double L = 0;
      for (std::size_t i = 0; i < y.size(); ++i) L += gout.data[i] * y.data[i];
      return L;
    };

    auto fd_x = finite_diff_grad([&](const Tensor<double>& p) { return loss_at(m, p); }, x, 1e-4);
    REQUIRE(grad_rel_error(gx, fd_x) < 1e-4);

    for (std::size_t li = 0; li < m.layers.size(); ++li) {
      auto fd_w = finite_diff_grad(
          [&](const Tensor<double>& p) {
            Mlp<double> probe = m;
            probe.layers[li].w = p;
            return loss_at(probe, x);
          },
          m.layers[li].w, 1e-4);
      REQUIRE(grad_rel_error(grads.layers[li].w, fd_w) < 1e-4);
    }
  }
}

TEST_CASE("adam with zero gradients is the identity") {
  auto m = make_mlp<float>(3, {4}, 2, Activation::tanh, 3);
  auto before = mlp_flatten(m);
  auto grads = MlpGrads<float>::zeros_like(m);
  auto blocks = mlp_blocks(m, grads, "net");
  auto st = make_adam<float>(blocks, 0.1f);
  for (int i = 0; i < 7; ++i) adam_step(st, blocks);
  REQUIRE(mlp_flatten(m) == before);
  REQUIRE(st.step == 7);
}

TEST_CASE("adam single-step hand trace") {
  // w=1, g=1, lr=0.1, step 1:
  //   m=0.1, v=0.001, mhat=1, vhat=1, w' = 1 - 0.1*1/(1+eps) ~= 0.9
  Tensor<float> w({1}, {1.0f});
  Tensor<float> g({1}, {1.0f});
  std::vector<ParamBlock<float>> blocks = {{"w", &w, &g}};
  auto st = make_adam<float>(blocks, 0.1f);
  adam_step(st, blocks);
  double eps = 1e-8;
  double expect = 1.0 - 0.1 * (1.0 / (1.0 + eps));
  REQUIRE(w.data[0] == Catch::Approx(expect).epsilon(1e-6));
}

TEST_CASE("adam updates identical blocks identically") {
  Tensor<float> a({3}, {0.5f, -1.0f, 2.0f});
  Tensor<float> b = a;
  Tensor<float> g({3}, {0.3f, 0.1f, -0.2f});
  std::vector<ParamBlock<float>> blocks = {{"a", &a, &g}, {"b", &b, &g}};
  auto st = make_adam<float>(blocks, 0.05f);
  for (int i = 0; i < 5; ++i) adam_step(st, blocks);
  REQUIRE(a.data == b.data);
}

TEST_CASE("adam rejects non-finite gradients naming the block") {
  Tensor<float> w({2}, {1.0f, 2.0f});
  Tensor<float> g({2}, {0.1f, std::numeric_limits<float>::quiet_NaN()});
  std::vector<ParamBlock<float>> blocks = {{"policy.w0", &w, &g}};
  auto st = make_adam<float>(blocks, 0.1f);
  REQUIRE_THROWS_WITH(adam_step(st, blocks), Catch::Matchers::ContainsSubstring("policy.w0"));
}

TEST_CASE("finite_diff_grad on a constant is zero") {
  Tensor<double> x({4}, {1, 2, 3, 4});
  auto g = finite_diff_grad([](const Tensor<double>&) { return 3.5; }, x);
  for (double v : g.data) REQUIRE(v == 0.0);
}

TEST_CASE("finite_diff_grad of x^2 at 3 is 6") {
  Tensor<double> x({1}, {3.0});
  auto g = finite_diff_grad([](const Tensor<double>& t) { return t.data[0] * t.data[0]; }, x, 1e-4);
  REQUIRE(g.data[0] == Catch::Approx(6.0).margin(1e-6));
}

TEST_CASE("rng streams are deterministic and derived seeds differ") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) REQUIRE(a.uniform() == b.uniform());
  REQUIRE(derive_seed(1, "x", 0) != derive_seed(1, "x", 1));
  REQUIRE(derive_seed(1, "x", 0) != derive_seed(1, "y", 0));
  REQUIRE(derive_seed(1, "x", 2, 3) != derive_seed(1, "x", 3, 2));
}
