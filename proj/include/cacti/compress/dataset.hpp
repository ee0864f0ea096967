#pragma once

#include <algorithm>
#include <string>

#include "cacti/compress/moco.hpp"
#include "cacti/io/cache.hpp"
#include "cacti/io/shard.hpp"

namespace cacti::compress {

// Embeds every frame of every shard exactly once, in (shard uid, episode,
// step) order, stamped with the encoder fingerprint.
inline io::EmbeddingCache encode_shards(const EncoderParams& enc,
                                        const std::vector<std::string>& shard_paths,
                                        int jobs = 1) {
  io::EmbeddingCache cache;
  cache.fingerprint = enc.fingerprint();
  cache.dim = static_cast<std::uint16_t>(enc.dim());

  struct Loaded {
    std::uint32_t uid = 0;
    std::string path;
    std::vector<io::EmbeddingCache::Key> keys;
    std::vector<float> values;
  };
  std::vector<Loaded> parts(shard_paths.size());
  for (std::size_t i = 0; i < shard_paths.size(); ++i) parts[i].path = shard_paths[i];

  parallel_for(shard_paths.size(), jobs, [&](std::size_t pi) {
    auto shard = io::read_shard(parts[pi].path);
    parts[pi].uid = shard.shard_uid();
    int in_dim = enc.input_dim();
    for (std::uint32_t e = 0; e < shard.episodes.size(); ++e) {
      const auto& ep = shard.episodes[e];
      if (ep.steps.empty()) continue;
      num::Tensor<float> pre({static_cast<int>(ep.steps.size()), in_dim});
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        Image img{shard.height, shard.width};
        img.px = ep.steps[t].image;
        auto f = preprocess(img, enc.downsample, enc.patch);
        std::copy(f.begin(), f.end(), pre.row(static_cast<int>(t)));
      }
      auto z = enc.encode_batch(pre);
      for (std::uint32_t t = 0; t < ep.steps.size(); ++t) {
        parts[pi].keys.push_back({shard.shard_uid(), e, t});
        const float* row = z.row(static_cast<int>(t));
        parts[pi].values.insert(parts[pi].values.end(), row, row + enc.dim());
      }
    }
  });

  std::sort(parts.begin(), parts.end(), [](const Loaded& a, const Loaded& b) { return a.uid < b.uid; });
  for (std::size_t i = 0; i + 1 < parts.size(); ++i)
    require(parts[i].uid != parts[i + 1].uid, "duplicate shard uid ", parts[i].uid,
            " across input shards ('", parts[i].path, "' and '", parts[i + 1].path, "')");
  for (auto& p : parts) {
    for (std::size_t i = 0; i < p.keys.size(); ++i) cache.append(p.keys[i], p.values.data() + i * cache.dim);
  }
  return cache;
}

// Seeded per-shard subsample of frames, capped in total; feeds contrastive
// training without holding the whole dataset in memory.
inline std::vector<Image> sample_frames(const std::vector<std::string>& shard_paths,
                                        int max_frames, std::uint64_t seed) {
  require(!shard_paths.empty(), "sample_frames: no shards given");
  std::vector<Image> frames;
  int quota = std::max(1, max_frames / static_cast<int>(shard_paths.size()));
  for (const auto& path : shard_paths) {
    auto shard = io::read_shard(path);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> index;
    for (std::uint32_t e = 0; e < shard.episodes.size(); ++e)
      for (std::uint32_t t = 0; t < shard.episodes[e].steps.size(); ++t) index.push_back({e, t});
    Rng rng(derive_seed(seed, "frame_sample", shard.shard_uid()));
    // partial Fisher-Yates: the first `quota` slots become the sample
    int take = std::min<int>(quota, static_cast<int>(index.size()));
    for (int i = 0; i < take; ++i) {
      int j = i + rng.below_int(static_cast<int>(index.size()) - i);
      std::swap(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
      auto [e, t] = index[static_cast<std::size_t>(i)];
      Image img{shard.height, shard.width};
      img.px = shard.episodes[e].steps[t].image;
      frames.push_back(std::move(img));
    }
  }
  return frames;
}

struct MocoCurvePoint {
  int step = 0;
  float loss = 0;
};

// Contrastive pretraining driver: two seeded views (color jitter + crop
// shift) per sampled frame, `steps` MoCo updates.
inline EncoderParams train_moco(const std::vector<Image>& frames, int image_size, int downsample,
                                int patch, int hidden, int d, int K, float tau, float momentum,
                                float lr, int steps, int batch, float view_jitter, int view_crop,
                                std::uint64_t seed, std::vector<MocoCurvePoint>* curve = nullptr) {
  require(!frames.empty(), "train_moco: no frames to train on");
  MocoState m = make_moco(image_size, downsample, patch, hidden, d, K, tau, momentum, lr,
                          derive_seed(seed, "moco/init"));
  int in_dim = m.query.input_dim();
  Rng pick(derive_seed(seed, "moco/pick"));
  for (int s = 0; s < steps; ++s) {
    num::Tensor<float> pre_q({batch, in_dim}), pre_k({batch, in_dim});
    for (int b = 0; b < batch; ++b) {
      const Image& frame = frames[static_cast<std::size_t>(pick.below_int(static_cast<int>(frames.size())))];
      Rng view_rng(derive_seed(seed, "moco/view", static_cast<std::uint64_t>(s),
                               static_cast<std::uint64_t>(b)));
      auto v1 = random_view(frame, view_rng, view_jitter, view_crop);
      auto v2 = random_view(frame, view_rng, view_jitter, view_crop);
      auto f1 = preprocess(v1, downsample, patch);
      auto f2 = preprocess(v2, downsample, patch);
      std::copy(f1.begin(), f1.end(), pre_q.row(b));
      std::copy(f2.begin(), f2.end(), pre_k.row(b));
    }
    float loss = moco_step(m, pre_q, pre_k);
    if (curve && (s % 25 == 0 || s == steps - 1)) curve->push_back({s, loss});
  }
  EncoderParams out = m.query;
  out.tag = EncoderTag::in_domain_moco;
  return out;
}

}  // namespace cacti::compress
