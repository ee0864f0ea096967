#include <catch2/catch_amalgamated.hpp>

#include "cacti/collect/record.hpp"
#include "cacti/grad_check.hpp"
#include "cacti/policy/train.hpp"

using namespace cacti;
using namespace cacti::policy;

TEST_CASE("policy_forward: zero weights give zero mean and exp(sigma) scale") {
  auto p = make_bc_policy<float>(7, {4}, -1.0f, -5.0f, 2.0f, 3);
  for (auto& l : p.net.layers) {
    l.w.fill(0);
    l.b.fill(0);
  }
  num::Tensor<float> x({2, 7});
  x.fill(0.5f);
  auto [mu, scale] = policy_forward(p, x);
  for (float v : mu.data) REQUIRE(v == 0.0f);
  for (float s : scale) REQUIRE(s == Catch::Approx(std::exp(-1.0f)));
}

TEST_CASE("policy_forward is batch-equivariant") {
  auto p = make_bc_policy<float>(5, {8}, -1.0f, -5.0f, 2.0f, 4);
  num::Tensor<float> x({3, 5});
  Rng rng(5);
  for (auto& v : x.data) v = rng.normalf();
  auto [mu, scale] = policy_forward(p, x);
  num::Tensor<float> perm({3, 5});
  int order[3] = {2, 0, 1};
  for (int r = 0; r < 3; ++r)
    std::copy(x.row(order[r]), x.row(order[r]) + 5, perm.row(r));
  auto [mu2, scale2] = policy_forward(p, perm);
  for (int r = 0; r < 3; ++r)
    for (int j = 0; j < kActionDim; ++j) REQUIRE(mu2.at(r, j) == mu.at(order[r], j));
}

TEST_CASE("policy_forward matches a scalar re-implementation") {
  auto p = make_bc_policy<float>(4, {3}, -0.7f, -5.0f, 2.0f, 0);
  num::Tensor<float> x({1, 4}, {0.3f, -0.2f, 0.9f, 0.1f});
  auto [mu, scale] = policy_forward(p, x);
  float h[3];
  for (int o = 0; o < 3; ++o) {
    float s = p.net.layers[0].b[static_cast<std::size_t>(o)];
    for (int i = 0; i < 4; ++i) s += p.net.layers[0].w.at(o, i) * x.data[static_cast<std::size_t>(i)];
    h[o] = std::tanh(s);
  }
  for (int o = 0; o < kActionDim; ++o) {
    float s = p.net.layers[1].b[static_cast<std::size_t>(o)];
    for (int i = 0; i < 3; ++i) s += p.net.layers[1].w.at(o, i) * h[i];
    REQUIRE(mu.data[static_cast<std::size_t>(o)] == Catch::Approx(s).margin(1e-6));
  }
  REQUIRE(scale[0] == Catch::Approx(std::exp(-0.7f)));
}

TEST_CASE("mean_mse loss is zero when the mean hits the targets") {
  auto p = make_bc_policy<float>(3, {4}, -1.0f, -5.0f, 2.0f, 9);
  num::Tensor<float> x({5, 3});
  Rng rng(2);
  for (auto& v : x.data) v = rng.normalf();
  auto mu = num::mlp_forward(p.net, x);
  auto [loss, grads] = bc_loss(p, x, mu, BcLossMode::mean_mse);
  REQUIRE(loss == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("sampled loss approaches the mean loss as sigma shrinks") {
  auto p = make_bc_policy<double>(4, {6}, -1.0, -5.0, 2.0, 1);
  int n = 4096;
  num::Tensor<double> x({n, 4}), target({n, kActionDim});
  Rng rng(3);
  for (auto& v : x.data) v = rng.normal();
  for (auto& v : target.data) v = rng.normal();
  auto [mse, g0] = bc_loss(p, x, target, BcLossMode::mean_mse);

  num::Tensor<double> noise({n, kActionDim});
  Rng nrng(7);
  for (auto& v : noise.data) v = nrng.normal();

  double prev_gap = 1e9;
  for (double sigma : {-1.0, -2.0, -3.0}) {
    p.log_sigma.fill(sigma);
    auto [sampled, g1] = bc_loss(p, x, target, BcLossMode::sampled, &noise);
    double scale2 = std::exp(2 * sigma);
    double gap = std::abs(sampled - mse);
    REQUIRE(gap <= 3.0 * scale2 * kActionDim);
    REQUIRE(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("bc gradients match finite differences in both modes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto p = make_bc_policy<double>(3, {5}, -0.8, -5.0, 2.0, seed);
    int n = 4;
    num::Tensor<double> x({n, 3}), target({n, kActionDim}), noise({n, kActionDim});
    Rng rng(seed + 40);
    for (auto& v : x.data) v = rng.normal();
    for (auto& v : target.data) v = rng.normal();
    for (auto& v : noise.data) v = rng.normal();

    for (auto mode : {BcLossMode::mean_mse, BcLossMode::sampled}) {
      const auto* noise_ptr = mode == BcLossMode::sampled ? &noise : nullptr;
      auto [loss, grads] = bc_loss(p, x, target, mode, noise_ptr);

      for (std::size_t li = 0; li < p.net.layers.size(); ++li) {
        auto fd = num::finite_diff_grad(
            [&](const num::Tensor<double>& wp) {
              BcPolicy<double> probe = p;
              probe.net.layers[li].w = wp;
              return bc_loss(probe, x, target, mode, noise_ptr).first;
            },
            p.net.layers[li].w, 1e-4);
        REQUIRE(num::grad_rel_error(grads.net.layers[li].w, fd) < 1e-4);
      }
      auto fd_sigma = num::finite_diff_grad(
          [&](const num::Tensor<double>& sp) {
            BcPolicy<double> probe = p;
            probe.log_sigma = sp;
            return bc_loss(probe, x, target, mode, noise_ptr).first;
          },
          p.log_sigma, 1e-4);
      REQUIRE(num::grad_rel_error(grads.log_sigma, fd_sigma) < 1e-4);
    }
  }
}

TEST_CASE("loss decomposition: E_z of sampled loss = mse + sum exp(2 sigma)") {
  auto p = make_bc_policy<double>(3, {4}, -0.5, -5.0, 2.0, 11);
  num::Tensor<double> x({1, 3}, {0.2, -0.4, 0.7});
  num::Tensor<double> a({1, kActionDim}, {0.1, 0.3, -0.2});
  auto [mse, g0] = bc_loss(p, x, a, BcLossMode::mean_mse);
  double sigma_term = 0;
  for (int j = 0; j < kActionDim; ++j) sigma_term += std::exp(2 * p.clamped_sigma(j));

  int reps = 100000;
  num::Tensor<double> xs({reps, 3}), as({reps, kActionDim}), noise({reps, kActionDim});
  for (int i = 0; i < reps; ++i) {
    std::copy(x.data.begin(), x.data.end(), xs.row(i));
    std::copy(a.data.begin(), a.data.end(), as.row(i));
  }
  Rng rng(4);
  for (auto& v : noise.data) v = rng.normal();
  auto [sampled, g1] = bc_loss(p, xs, as, BcLossMode::sampled, &noise);
  REQUIRE(sampled == Catch::Approx(mse + sigma_term).epsilon(0.01));
}

TEST_CASE("sampled-mode training drives sigma toward its lower clamp") {
  auto p = make_bc_policy<float>(2, {8}, -0.5f, -5.0f, 2.0f, 6);
  int n = 64;
  num::Tensor<float> x({n, 2}), target({n, kActionDim});
  Rng rng(8);
  for (auto& v : x.data) v = rng.normalf();
  // achievable targets: a == current mu, so only the variance term remains
  target = num::mlp_forward(p.net, x);

  float sigma_start = p.log_sigma[0];
  num::AdamState<float> opt;
  bool ready = false;
  for (int step = 0; step < 100; ++step) {
    num::Tensor<float> noise({n, kActionDim});
    Rng nrng(static_cast<std::uint64_t>(step) + 100);
    for (auto& v : noise.data) v = nrng.normalf();
    auto [loss, grads] = bc_loss(p, x, target, BcLossMode::sampled, &noise);
    auto blocks = num::mlp_blocks(p.net, grads.net, "p");
    blocks.push_back({"sigma", &p.log_sigma, &grads.log_sigma});
    if (!ready) {
      opt = num::make_adam<float>(blocks, 0.01f);
      ready = true;
    }
    num::adam_step(opt, blocks);
  }
  for (int j = 0; j < kActionDim; ++j) REQUIRE(p.log_sigma[static_cast<std::size_t>(j)] < sigma_start - 0.3f);
}

TEST_CASE("task conditioning separates identical observations with different goals") {
  // two tasks, identical z_t and proprio, opposite target actions
  int n = 400;
  BcDataset ds;
  ds.zt_dim = 4;
  ds.g = 2;
  ds.zt = num::Tensor<float>({n, 4});
  ds.zg = num::Tensor<float>({n, 2});
  ds.proprio = num::Tensor<float>({n, 6});
  ds.action = num::Tensor<float>({n, kActionDim});
  ds.task_of.resize(static_cast<std::size_t>(n));
  Rng rng(10);
  for (int i = 0; i < n; ++i) {
    int task = i % 2;
    ds.task_of[static_cast<std::size_t>(i)] = task;
    for (int j = 0; j < 4; ++j) ds.zt.at(i, j) = 0.3f;  // identical observations
    ds.zg.at(i, task) = 1.0f;
    float dir = task == 0 ? 0.8f : -0.8f;
    ds.action.at(i, 0) = dir + 0.01f * rng.normalf();
    ds.action.at(i, 1) = -dir + 0.01f * rng.normalf();
    ds.action.at(i, 2) = 0.0f;
  }

  TrainSettings s;
  s.encoder_kind = EncoderKind::state;
  s.hidden = {16};
  s.steps = 400;
  s.batch = 64;
  auto result = train_bc(sim::build_world(PipelineConfig::defaults()), s, ds, nullptr, 5);

  std::vector<float> zt(4, 0.3f), prop(6, 0.0f);
  std::vector<float> zg0 = {1, 0}, zg1 = {0, 1};
  auto a0 = policy_act(result.policy, zt, zg0, prop, true, nullptr);
  auto a1 = policy_act(result.policy, zt, zg1, prop, true, nullptr);
  float between = std::abs(a0.dx - a1.dx) + std::abs(a0.dy - a1.dy);
  REQUIRE(between > 1.0f);  // intra-task spread is ~0.01, conditioning gap must dwarf it
  REQUIRE(a0.dx > 0.5f);
  REQUIRE(a1.dx < -0.5f);
}

TEST_CASE("single sample memorizes and the loss curve is reproducible") {
  BcDataset ds;
  ds.zt_dim = 3;
  ds.g = 1;
  ds.zt = num::Tensor<float>({1, 3}, {0.2f, 0.4f, -0.1f});
  ds.zg = num::Tensor<float>({1, 1}, {1.0f});
  ds.proprio = num::Tensor<float>({1, 6});
  ds.action = num::Tensor<float>({1, kActionDim}, {0.3f, -0.5f, 0.7f});
  ds.task_of = {0};

  TrainSettings s;
  s.encoder_kind = EncoderKind::state;
  s.hidden = {16};
  s.steps = 1500;
  s.batch = 1;
  auto w = sim::build_world(PipelineConfig::defaults());
  auto r1 = train_bc(w, s, ds, nullptr, 3);
  REQUIRE(r1.loss_curve.back().second < 1e-4f);
  auto r2 = train_bc(w, s, ds, nullptr, 3);
  REQUIRE(r1.loss_curve == r2.loss_curve);
  REQUIRE(num::mlp_flatten(r1.policy.net) == num::mlp_flatten(r2.policy.net));
}

TEST_CASE("frozen training leaves the encoder untouched") {
  auto enc = compress::make_frozen_encoder(48, 16, 4, 16, 8, 5);
  auto fp_before = enc.fingerprint();
  BcDataset ds;
  ds.zt_dim = 8;
  ds.g = 1;
  int n = 16;
  ds.zt = num::Tensor<float>({n, 8});
  ds.zg = num::Tensor<float>({n, 1});
  ds.proprio = num::Tensor<float>({n, 6});
  ds.action = num::Tensor<float>({n, kActionDim});
  ds.task_of.assign(static_cast<std::size_t>(n), 0);
  TrainSettings s;
  s.encoder_kind = EncoderKind::moco;
  s.hidden = {8};
  s.steps = 50;
  s.batch = 8;
  auto result = train_bc(sim::build_world(PipelineConfig::defaults()), s, ds, &enc, 2);
  REQUIRE(result.encoder.fingerprint() == fp_before);
  REQUIRE(enc.fingerprint() == fp_before);
}

TEST_CASE("act clamps, is deterministic, and reproduces stochastic draws") {
  auto p = make_bc_policy<float>(6, {8}, 1.5f, -5.0f, 2.0f, 12);
  for (auto& l : p.net.layers)
    for (auto& v : l.w.data) v *= 10.0f;  // exaggerate outputs to force clamping
  std::vector<float> zt = {2.0f, -2.0f, 1.5f}, zg = {1.0f}, prop = {0.5f, 0.5f};
  auto a1 = policy_act(p, zt, zg, prop, true, nullptr);
  auto a2 = policy_act(p, zt, zg, prop, true, nullptr);
  REQUIRE(a1.dx == a2.dx);
  REQUIRE(a1.dy == a2.dy);
  REQUIRE(a1.grip == a2.grip);

  Rng r1(9), r2(9);
  for (int i = 0; i < 20; ++i) {
    auto s1 = policy_act(p, zt, zg, prop, false, &r1);
    auto s2 = policy_act(p, zt, zg, prop, false, &r2);
    REQUIRE(s1.dx == s2.dx);
    for (float v : {s1.dx, s1.dy, s1.grip}) {
      REQUIRE(v >= -1.0f);
      REQUIRE(v <= 1.0f);
    }
  }
}

TEST_CASE("policy files round trip bitwise and verify the embedded encoder") {
  PolicyBundle b;
  b.policy = make_bc_policy<float>(10, {12, 8}, -1.2f, -5.0f, 2.0f, 77);
  b.encoder_kind = EncoderKind::random;
  b.encoder = compress::make_frozen_encoder(48, 16, 4, 16, 8, 3);
  b.encoder_fp = b.encoder.fingerprint();
  b.embed_mode = TaskEmbeddingMode::context;
  b.g = 2;
  b.zt_dim = 8;
  b.config_snapshot = PipelineConfig::defaults().dump();

  std::string path = "/tmp/cacti_test_policy.json";
  save_policy(path, b);
  auto back = load_policy(path);
  REQUIRE(num::mlp_flatten(back.policy.net) == num::mlp_flatten(b.policy.net));
  REQUIRE(back.policy.log_sigma.data == b.policy.log_sigma.data);
  REQUIRE(back.encoder_fp == b.encoder_fp);
  REQUIRE(back.encoder.fingerprint() == b.encoder_fp);
  REQUIRE(back.config_snapshot == b.config_snapshot);
  REQUIRE(back.g == 2);

  // a tampered fingerprint must be rejected on load
  auto doc = nlohmann::ordered_json::parse(std::ifstream(path));
  doc["encoder"]["body"]["layers"][0]["w"][0] = 123.0;
  std::ofstream(path) << doc.dump();
  REQUIRE_THROWS_WITH(load_policy(path), Catch::Matchers::ContainsSubstring("fingerprint"));
}

TEST_CASE("dataset assembly: success filter, coverage errors, cache checks") {
  auto cfg = PipelineConfig::defaults();
  auto w = sim::build_world(cfg);
  std::string dir = "/tmp/cacti_test_assemble";
  std::filesystem::create_directories(dir);

  std::vector<std::string> paths;
  for (std::size_t ti = 0; ti < 2; ++ti) {
    auto lay = sim::layout_for_id(w, 8, 0);
    auto shard = collect::record_tapes(w, w.tasks[ti], lay, 2, 8);
    std::string p = dir + "/t" + std::to_string(ti) + ".bin";
    io::write_shard(p, shard);
    paths.push_back(p);
  }

  auto two_task_cfg = PipelineConfig::parse(
      "[tasks]\nnames = reach_kettle,drag_mug\n"
      "reach_kettle.target = robot\nreach_kettle.goal_object = kettle\nreach_kettle.tolerance = 0.05\n"
      "drag_mug.target = mug\ndrag_mug.goal = 0.82,0.24\ndrag_mug.tolerance = 0.03\n");
  auto w2 = sim::build_world(two_task_cfg);

  auto enc = compress::make_frozen_encoder(48, 16, 4, 16, 8, 4);
  auto cache = compress::encode_shards(enc, paths);

  TrainSettings s;
  s.encoder_kind = EncoderKind::random;
  s.master_seed = 8;
  auto ds = assemble_bc_dataset(w2, s, paths, &cache, &enc);
  REQUIRE(ds.size() == 2 * 2 * w.horizon);
  REQUIRE(ds.zt_dim == 8);
  REQUIRE(ds.g == context_dim(w2));

  // wrong encoder for the cache
  auto other = compress::make_frozen_encoder(48, 16, 4, 16, 8, 99);
  REQUIRE_THROWS_WITH(assemble_bc_dataset(w2, s, paths, &cache, &other),
                      Catch::Matchers::ContainsSubstring("fingerprint"));

  // state features skip the cache entirely
  s.encoder_kind = EncoderKind::state;
  auto ds_state = assemble_bc_dataset(w2, s, paths, nullptr, nullptr);
  REQUIRE(ds_state.zt_dim == w2.state_dim());

  // a task with no data is an error
  REQUIRE_THROWS_WITH(assemble_bc_dataset(w2, s, {paths[0]}, nullptr, nullptr),
                      Catch::Matchers::ContainsSubstring("no training data"));

  // the max_frames cap subsamples deterministically
  s.max_frames = 57;
  auto capped1 = assemble_bc_dataset(w2, s, paths, nullptr, nullptr);
  auto capped2 = assemble_bc_dataset(w2, s, paths, nullptr, nullptr);
  REQUIRE(capped1.size() == 57);
  REQUIRE(capped1.zt.data == capped2.zt.data);
}

TEST_CASE("hashed embeddings are deterministic in the name") {
  auto a = hashed_embedding("drag_mug", 16, 5);
  auto b = hashed_embedding("drag_mug", 16, 5);
  auto c = hashed_embedding("drag_plate", 16, 5);
  REQUIRE(a == b);
  REQUIRE(a != c);
  for (float v : a) {
    REQUIRE(v >= -1.0f);
    REQUIRE(v <= 1.0f);
  }
}
