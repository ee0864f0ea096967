#pragma once

#include <filesystem>
#include <json.hpp>
#include <span>

#include "cacti/compress/dataset.hpp"
#include "cacti/policy/bc.hpp"
#include "cacti/policy/task_embedding.hpp"
#include "cacti/sim/engine.hpp"

namespace cacti::policy {

using Json = nlohmann::ordered_json;

enum class EncoderKind { moco, random, state };

inline const char* encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::moco: return "moco";
    case EncoderKind::random: return "random";
    case EncoderKind::state: return "state";
  }
  return "?";
}

inline EncoderKind encoder_kind_from_name(const std::string& s) {
  if (s == "moco") return EncoderKind::moco;
  if (s == "random") return EncoderKind::random;
  if (s == "state") return EncoderKind::state;
  fail("unknown encoder kind '", s, "'");
}

// State features bypass the visual encoder; their "fingerprint" pins the
// feature schema instead of weights.
inline Fingerprint state_feature_fingerprint(int state_dim) {
  FingerprintBuilder fb;
  fb.update("state-features/v1", 17);
  fb.update_pod(state_dim);
  return fb.digest();
}

struct TrainSettings {
  bool finetune = false;
  EncoderKind encoder_kind = EncoderKind::moco;
  TaskEmbeddingMode embed_mode = TaskEmbeddingMode::context;
  int hashed_dim = 32;
  BcLossMode loss_mode = BcLossMode::mean_mse;
  std::vector<int> hidden{96, 96};
  float lr = 1e-3f;
  int batch = 192;
  int steps = 2500;
  float init_logstd = -1.0f;
  float sigma_min = -5.0f, sigma_max = 2.0f;
  bool success_filter = true;
  int max_frames = 120000;
  std::uint64_t master_seed = 0;

  static TrainSettings from(const PipelineConfig& cfg) {
    TrainSettings t;
    std::string mode = cfg.gets("train", "mode");
    require(mode == "frozen" || mode == "finetune", "train.mode must be frozen or finetune");
    t.finetune = mode == "finetune";
    t.encoder_kind = encoder_kind_from_name(cfg.gets("train", "encoder"));
    require(!(t.finetune && t.encoder_kind == EncoderKind::state),
            "train.mode = finetune needs a visual encoder");
    t.embed_mode = embedding_mode_from_name(cfg.gets("train", "task_embedding"));
    t.hashed_dim = cfg.geti("train", "hashed_dim");
    t.loss_mode = bc_loss_mode_from_name(cfg.gets("train", "loss"));
    t.hidden = cfg.get_ints("train", "hidden");
    t.lr = cfg.getf("train", "lr");
    t.batch = cfg.geti("train", "batch");
    t.steps = cfg.geti("train", "steps");
    t.init_logstd = cfg.getf("train", "init_logstd");
    auto clamp = cfg.get_doubles("train", "sigma_clamp");
    require(clamp.size() == 2 && clamp[0] < clamp[1], "train.sigma_clamp must be lo,hi");
    t.sigma_min = static_cast<float>(clamp[0]);
    t.sigma_max = static_cast<float>(clamp[1]);
    t.success_filter = cfg.getb("train", "success_filter");
    t.max_frames = cfg.geti("train", "max_frames");
    t.master_seed = static_cast<std::uint64_t>(cfg.getll("pipeline", "master_seed"));
    return t;
  }
};

// Matched arrays of (z_t or preprocessed pixels, z_g, proprio, target action)
// drawn from successful episodes across all tasks and layouts.
struct BcDataset {
  num::Tensor<float> zt;
  num::Tensor<float> zg;
  num::Tensor<float> proprio;
  num::Tensor<float> action;
  std::vector<int> task_of;
  int zt_dim = 0;
  int g = 0;

  int size() const { return zt.rows(); }
};

inline int task_embedding_dim(const sim::World& w, const TrainSettings& s, int embed_dim) {
  switch (s.embed_mode) {
    case TaskEmbeddingMode::context: return context_dim(w);
    case TaskEmbeddingMode::hashed: return s.hashed_dim;
    case TaskEmbeddingMode::goal_image: return embed_dim;
  }
  return 0;
}

inline BcDataset assemble_bc_dataset(const sim::World& w, const TrainSettings& s,
                                     const std::vector<std::string>& shard_paths,
                                     const io::EmbeddingCache* cache,
                                     const compress::EncoderParams* encoder) {
  bool visual = s.encoder_kind != EncoderKind::state;
  if (visual && !s.finetune) {
    require(cache != nullptr, "frozen visual training needs an embedding cache");
    require(encoder != nullptr, "visual training needs the encoder parameters");
    require(cache->fingerprint == encoder->fingerprint(),
            "embedding cache fingerprint does not match the configured encoder");
  }
  if (s.embed_mode == TaskEmbeddingMode::goal_image)
    require(encoder != nullptr, "goal_image conditioning needs the encoder parameters");

  struct Row {
    std::uint32_t uid, ep, st;
    int task;
  };
  std::vector<Row> rows;
  std::vector<io::ShardData> shards;
  shards.reserve(shard_paths.size());
  for (const auto& path : shard_paths) shards.push_back(io::read_shard(path));
  std::sort(shards.begin(), shards.end(),
            [](const io::ShardData& a, const io::ShardData& b) { return a.shard_uid() < b.shard_uid(); });

  std::vector<int> per_task(w.tasks.size(), 0);
  for (std::size_t si = 0; si < shards.size(); ++si) {
    const auto& shard = shards[si];
    for (std::uint32_t e = 0; e < shard.episodes.size(); ++e) {
      if (s.success_filter && !shard.episodes[e].success) continue;
      for (std::uint32_t t = 0; t < shard.episodes[e].steps.size(); ++t)
        rows.push_back({static_cast<std::uint32_t>(si), e, t, shard.task_id});
      per_task[shard.task_id] += static_cast<int>(shard.episodes[e].steps.size());
    }
  }
  for (std::size_t ti = 0; ti < w.tasks.size(); ++ti)
    require(per_task[ti] > 0, "no training data for task '", w.tasks[ti].name,
            "' after success filtering");

  if (static_cast<int>(rows.size()) > s.max_frames) {
    Rng rng(derive_seed(s.master_seed, "bc/subsample"));
    for (int i = 0; i < s.max_frames; ++i) {
      int j = i + rng.below_int(static_cast<int>(rows.size()) - i);
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    }
    rows.resize(static_cast<std::size_t>(s.max_frames));
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return std::tie(a.uid, a.ep, a.st) < std::tie(b.uid, b.ep, b.st);
    });
  }

  BcDataset ds;
  int n = static_cast<int>(rows.size());
  ds.g = task_embedding_dim(w, s, encoder ? encoder->dim() : 0);
  if (!visual) ds.zt_dim = w.state_dim();
  else if (s.finetune) ds.zt_dim = encoder->input_dim();
  else ds.zt_dim = cache->dim;
  ds.zt = num::Tensor<float>({n, ds.zt_dim});
  ds.zg = num::Tensor<float>({n, ds.g});
  ds.proprio = num::Tensor<float>({n, 6});
  ds.action = num::Tensor<float>({n, kActionDim});
  ds.task_of.resize(static_cast<std::size_t>(n));

  // per-cell context embeddings; per-episode goal embeddings
  std::vector<std::vector<float>> cell_zg(shards.size());
  for (std::size_t si = 0; si < shards.size(); ++si) {
    const auto& shard = shards[si];
    const auto& task = w.tasks.at(shard.task_id);
    if (s.embed_mode == TaskEmbeddingMode::context) {
      auto layout = sim::layout_for_id(w, s.master_seed, shard.layout_id);
      cell_zg[si] = context_embedding(w, task, layout);
    } else if (s.embed_mode == TaskEmbeddingMode::hashed) {
      cell_zg[si] = hashed_embedding(task.name, s.hashed_dim, s.master_seed);
    }
  }

  for (int i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    const auto& shard = shards[r.uid];
    const auto& step = shard.episodes[r.ep].steps[r.st];
    ds.task_of[static_cast<std::size_t>(i)] = shard.task_id;

    if (!visual) {
      std::copy(step.state.begin(), step.state.end(), ds.zt.row(i));
    } else if (s.finetune) {
      Image img{shard.height, shard.width};
      img.px = step.image;
      auto pre = compress::preprocess(img, encoder->downsample, encoder->patch);
      std::copy(pre.begin(), pre.end(), ds.zt.row(i));
    } else {
      const float* z = cache->at(shard.shard_uid(), r.ep, r.st);
      std::copy(z, z + cache->dim, ds.zt.row(i));
    }

    if (s.embed_mode == TaskEmbeddingMode::goal_image) {
      auto last = static_cast<std::uint32_t>(shard.episodes[r.ep].steps.size() - 1);
      if (!s.finetune && cache) {
        const float* z = cache->at(shard.shard_uid(), r.ep, last);
        std::copy(z, z + cache->dim, ds.zg.row(i));
      } else {
        Image img{shard.height, shard.width};
        img.px = shard.episodes[r.ep].steps[last].image;
        auto z = encoder->encode(img);
        std::copy(z.begin(), z.end(), ds.zg.row(i));
      }
    } else {
      const auto& zg = cell_zg[r.uid];
      std::copy(zg.begin(), zg.end(), ds.zg.row(i));
    }

    std::copy(step.proprio.begin(), step.proprio.end(), ds.proprio.row(i));
    std::copy(step.action.begin(), step.action.end(), ds.action.row(i));
  }
  return ds;
}

struct TrainResult {
  BcPolicy<float> policy;
  compress::EncoderParams encoder;  // post-training; tag finetuned when trained
  bool has_encoder = false;
  std::vector<std::pair<int, float>> loss_curve;
};

// Adam on the behavior-cloning loss over shuffled minibatches mixing all
// tasks and layouts. Frozen mode never touches encoder weights; finetune
// mode recomputes z_t through the encoder and flows gradients into it.
inline TrainResult train_bc(const sim::World& w, const TrainSettings& s, const BcDataset& ds,
                            const compress::EncoderParams* encoder, std::uint64_t seed) {
  require(ds.size() > 0, "train_bc: empty dataset");
  TrainResult out;
  if (encoder) {
    out.encoder = *encoder;
    out.has_encoder = true;
  }
  compress::EncoderParams* enc = out.has_encoder ? &out.encoder : nullptr;
  int d = s.finetune ? enc->dim() : ds.zt_dim;
  int in_dim = d + ds.g + 6;
  out.policy = make_bc_policy<float>(in_dim, s.hidden, s.init_logstd, s.sigma_min, s.sigma_max,
                                     derive_seed(seed, "bc/policy"));

  int n = ds.size();
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng(derive_seed(seed, "bc/shuffle"));
  int pos = n;  // force an initial shuffle

  num::AdamState<float> opt;
  bool opt_ready = false;

  for (int step = 0; step < s.steps; ++step) {
    int B = std::min(s.batch, n);
    std::vector<int> batch_rows(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      if (pos >= n) {
        for (int i = n - 1; i > 0; --i) {
          int j = shuffle_rng.below_int(i + 1);
          std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        pos = 0;
      }
      batch_rows[static_cast<std::size_t>(b)] = order[static_cast<std::size_t>(pos++)];
    }

    num::MlpTrace<float> enc_trace;
    num::Tensor<float> z_batch;
    if (s.finetune) {
      num::Tensor<float> pre({B, ds.zt_dim});
      for (int b = 0; b < B; ++b)
        std::copy(ds.zt.row(batch_rows[static_cast<std::size_t>(b)]),
                  ds.zt.row(batch_rows[static_cast<std::size_t>(b)]) + ds.zt_dim, pre.row(b));
      z_batch = num::mlp_forward_trace(enc->body, pre, &enc_trace);
    }
    num::Tensor<float> x({B, in_dim});
    num::Tensor<float> target({B, kActionDim});
    for (int b = 0; b < B; ++b) {
      int r = batch_rows[static_cast<std::size_t>(b)];
      float* dst = x.row(b);
      if (s.finetune) std::copy(z_batch.row(b), z_batch.row(b) + d, dst);
      else std::copy(ds.zt.row(r), ds.zt.row(r) + d, dst);
      std::copy(ds.zg.row(r), ds.zg.row(r) + ds.g, dst + d);
      std::copy(ds.proprio.row(r), ds.proprio.row(r) + 6, dst + d + ds.g);
      std::copy(ds.action.row(r), ds.action.row(r) + kActionDim, target.row(b));
    }

    num::Tensor<float> noise;
    const num::Tensor<float>* noise_ptr = nullptr;
    if (s.loss_mode == BcLossMode::sampled) {
      noise = num::Tensor<float>({B, kActionDim});
      Rng nrng(derive_seed(seed, "bc/noise", static_cast<std::uint64_t>(step)));
      for (auto& v : noise.data) v = nrng.normalf();
      noise_ptr = &noise;
    }

    num::Tensor<float> grad_x;
    auto [loss, grads] = bc_loss(out.policy, x, target, s.loss_mode, noise_ptr,
                                 s.finetune ? &grad_x : nullptr);
    require(std::isfinite(loss), "train_bc: non-finite loss at step ", step);

    auto blocks = num::mlp_blocks(out.policy.net, grads.net, "policy");
    blocks.push_back({"policy.log_sigma", &out.policy.log_sigma, &grads.log_sigma});

    num::MlpGrads<float> enc_grads;
    if (s.finetune) {
      num::Tensor<float> grad_z({B, d});
      for (int b = 0; b < B; ++b)
        std::copy(grad_x.row(b), grad_x.row(b) + d, grad_z.row(b));
      enc_grads = num::mlp_backward(enc->body, enc_trace, grad_z);
      auto enc_blocks = num::mlp_blocks(enc->body, enc_grads, "encoder");
      blocks.insert(blocks.end(), enc_blocks.begin(), enc_blocks.end());
    }

    if (!opt_ready) {
      opt = num::make_adam<float>(blocks, s.lr);
      opt_ready = true;
    }
    num::adam_step(opt, blocks);

    if (step % 25 == 0 || step == s.steps - 1) out.loss_curve.push_back({step, loss});
  }

  if (s.finetune && enc) enc->tag = compress::EncoderTag::finetuned;
  return out;
}

// Deployment-time action: deterministic mean or reparameterized sample,
// clamped into the action box.
inline sim::Action policy_act(const BcPolicy<float>& p, std::span<const float> zt,
                              std::span<const float> zg, std::span<const float> proprio,
                              bool deterministic, Rng* rng) {
  int in_dim = static_cast<int>(zt.size() + zg.size() + proprio.size());
  require(in_dim == p.in_dim(), "policy_act: input dim ", in_dim, " != policy dim ", p.in_dim());
  num::Tensor<float> x({1, in_dim});
  std::copy(zt.begin(), zt.end(), x.data.begin());
  std::copy(zg.begin(), zg.end(), x.data.begin() + static_cast<long>(zt.size()));
  std::copy(proprio.begin(), proprio.end(),
            x.data.begin() + static_cast<long>(zt.size() + zg.size()));
  auto [mu, scale] = policy_forward(p, x);
  sim::Action a{mu.data[0], mu.data[1], mu.data[2]};
  if (!deterministic) {
    require(rng != nullptr, "policy_act: stochastic mode needs an rng");
    a.dx += scale[0] * rng->normalf();
    a.dy += scale[1] * rng->normalf();
    a.grip += scale[2] * rng->normalf();
  }
  return a.clamped();
}

// Self-contained policy artifact: parameters, sigma, encoder (where visual),
// the encoder fingerprint, conditioning mode, and the config snapshot.
struct PolicyBundle {
  BcPolicy<float> policy;
  EncoderKind encoder_kind = EncoderKind::moco;
  bool finetuned = false;
  compress::EncoderParams encoder;  // unused for state kind
  Fingerprint encoder_fp;
  TaskEmbeddingMode embed_mode = TaskEmbeddingMode::context;
  int g = 0;
  int zt_dim = 0;
  std::string config_snapshot;

  sim::Action act(const sim::Observation& obs, const std::vector<float>& z_g, bool deterministic,
                  Rng* rng) const {
    require(encoder_kind != EncoderKind::state,
            "visual act() called on a state-feature policy; evaluation supplies features directly");
    require(encoder.fingerprint() == encoder_fp,
            "encoder fingerprint does not match the policy's training provenance");
    auto zt = encoder.encode(obs.image);
    return policy_act(policy, zt, z_g, obs.proprio, deterministic, rng);
  }
};

namespace detail {

inline Json mlp_to_json(const num::Mlp<float>& m) {
  Json j;
  j["activation"] = num::activation_name(m.act);
  j["layers"] = Json::array();
  for (const auto& l : m.layers) {
    Json lj;
    lj["out"] = l.w.rows();
    lj["in"] = l.w.cols();
    lj["w"] = l.w.data;
    lj["b"] = l.b.data;
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

inline num::Mlp<float> mlp_from_json(const Json& j) {
  num::Mlp<float> m;
  m.act = num::activation_from_name(j.at("activation").get<std::string>());
  for (const auto& lj : j.at("layers")) {
    int out = lj.at("out").get<int>(), in = lj.at("in").get<int>();
    typename num::Mlp<float>::Layer l{num::Tensor<float>({out, in}), num::Tensor<float>({out})};
    l.w.data = lj.at("w").get<std::vector<float>>();
    l.b.data = lj.at("b").get<std::vector<float>>();
    require(l.w.size() == static_cast<std::size_t>(out) * static_cast<std::size_t>(in),
            "policy file: layer weight size mismatch");
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

}  // namespace detail

inline void save_policy(const std::string& path, const PolicyBundle& b) {
  Json j;
  j["format"] = "cacti-policy";
  j["version"] = 1;
  j["encoder_kind"] = encoder_kind_name(b.encoder_kind);
  j["finetuned"] = b.finetuned;
  j["encoder_fingerprint"] = b.encoder_fp.hex();
  j["task_embedding"] = embedding_mode_name(b.embed_mode);
  j["g"] = b.g;
  j["zt_dim"] = b.zt_dim;
  j["sigma_min"] = b.policy.sigma_min;
  j["sigma_max"] = b.policy.sigma_max;
  j["log_sigma"] = b.policy.log_sigma.data;
  j["net"] = detail::mlp_to_json(b.policy.net);
  if (b.encoder_kind != EncoderKind::state) {
    Json ej;
    ej["tag"] = compress::encoder_tag_name(b.encoder.tag);
    ej["image_size"] = b.encoder.image_size;
    ej["downsample"] = b.encoder.downsample;
    ej["patch"] = b.encoder.patch;
    ej["body"] = detail::mlp_to_json(b.encoder.body);
    j["encoder"] = std::move(ej);
  }
  j["config"] = b.config_snapshot;
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot write policy file '", path, "'");
  f << j.dump(1) << "\n";
}

inline PolicyBundle load_policy(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open policy file '", path, "'");
  Json j = Json::parse(f, nullptr, true);
  require(j.at("format") == "cacti-policy", "'", path, "' is not a policy file");
  require(j.at("version").get<int>() == 1, "unsupported policy file version");
  PolicyBundle b;
  b.encoder_kind = encoder_kind_from_name(j.at("encoder_kind").get<std::string>());
  b.finetuned = j.at("finetuned").get<bool>();
  b.encoder_fp = Fingerprint::from_hex(j.at("encoder_fingerprint").get<std::string>());
  b.embed_mode = embedding_mode_from_name(j.at("task_embedding").get<std::string>());
  b.g = j.at("g").get<int>();
  b.zt_dim = j.at("zt_dim").get<int>();
  b.policy.sigma_min = j.at("sigma_min").get<float>();
  b.policy.sigma_max = j.at("sigma_max").get<float>();
  b.policy.log_sigma = num::Tensor<float>({kActionDim}, j.at("log_sigma").get<std::vector<float>>());
  b.policy.net = detail::mlp_from_json(j.at("net"));
  if (b.encoder_kind != EncoderKind::state) {
    const auto& ej = j.at("encoder");
    b.encoder.tag = compress::encoder_tag_from_name(ej.at("tag").get<std::string>());
    b.encoder.image_size = ej.at("image_size").get<int>();
    b.encoder.downsample = ej.at("downsample").get<int>();
    b.encoder.patch = ej.at("patch").get<int>();
    b.encoder.body = detail::mlp_from_json(ej.at("body"));
    require(b.encoder.fingerprint() == b.encoder_fp,
            "'", path, "': embedded encoder does not match the stored fingerprint");
  }
  b.config_snapshot = j.at("config").get<std::string>();
  return b;
}

}  // namespace cacti::policy
