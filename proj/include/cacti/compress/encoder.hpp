#pragma once

#include <string>

#include "cacti/image.hpp"
#include "cacti/mlp.hpp"

namespace cacti::compress {

enum class EncoderTag { frozen_random, in_domain_moco, finetuned };

inline const char* encoder_tag_name(EncoderTag t) {
  switch (t) {
    case EncoderTag::frozen_random: return "frozen_random";
    case EncoderTag::in_domain_moco: return "in_domain_moco";
    case EncoderTag::finetuned: return "finetuned";
  }
  return "?";
}

inline EncoderTag encoder_tag_from_name(const std::string& s) {
  if (s == "frozen_random") return EncoderTag::frozen_random;
  if (s == "in_domain_moco") return EncoderTag::in_domain_moco;
  if (s == "finetuned") return EncoderTag::finetuned;
  fail("unknown encoder tag '", s, "'");
}

// Fixed (untrained) image preprocessing: box-downsample to ds x ds in [0,1],
// plus per-patch channel means, flattened. Output length ds*ds*3 + (ds/patch)^2*3.
inline std::vector<float> preprocess(const Image& img, int downsample, int patch) {
  auto feat = cacti::downsample(img, downsample, downsample);
  int grid = downsample / patch;
  std::vector<float> means(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid) * 3, 0.0f);
  for (int y = 0; y < downsample; ++y)
    for (int x = 0; x < downsample; ++x)
      for (int c = 0; c < 3; ++c)
        means[(static_cast<std::size_t>(y / patch) * static_cast<std::size_t>(grid) +
               static_cast<std::size_t>(x / patch)) * 3 + static_cast<std::size_t>(c)] +=
            feat[(static_cast<std::size_t>(y) * static_cast<std::size_t>(downsample) +
                  static_cast<std::size_t>(x)) * 3 + static_cast<std::size_t>(c)] /
            static_cast<float>(patch * patch);
  feat.insert(feat.end(), means.begin(), means.end());
  return feat;
}

inline int preprocess_dim(int downsample, int patch) {
  int grid = downsample / patch;
  return downsample * downsample * 3 + grid * grid * 3;
}

// Image encoder: fixed preprocessing plus a trainable/frozen MLP body down
// to the embedding dimension.
struct EncoderParams {
  num::Mlp<float> body;
  EncoderTag tag = EncoderTag::frozen_random;
  int image_size = 48;
  int downsample = 16;
  int patch = 4;

  int dim() const { return body.out_dim(); }
  int input_dim() const { return preprocess_dim(downsample, patch); }

  Fingerprint fingerprint() const {
    FingerprintBuilder fb;
    fb.update_pod(image_size);
    fb.update_pod(downsample);
    fb.update_pod(patch);
    for (const auto& l : body.layers) {
      fb.update_pod(l.w.rows());
      fb.update_pod(l.w.cols());
      fb.update_vec(l.w.data);
      fb.update_vec(l.b.data);
    }
    return fb.digest();
  }

  std::vector<float> encode(const Image& img) const {
    auto pre = preprocess(img, downsample, patch);
    int n = static_cast<int>(pre.size());
    num::Tensor<float> x({1, n}, std::move(pre));
    return num::mlp_forward(body, x).data;
  }

  num::Tensor<float> encode_batch(const num::Tensor<float>& preprocessed) const {
    return num::mlp_forward(body, preprocessed);
  }
};

// Seeded random-weight encoder, the desk stand-in for a backbone pretrained
// on out-of-domain data.
inline EncoderParams make_frozen_encoder(int image_size, int downsample, int patch, int hidden,
                                         int d, std::uint64_t seed) {
  EncoderParams e;
  e.image_size = image_size;
  e.downsample = downsample;
  e.patch = patch;
  e.tag = EncoderTag::frozen_random;
  e.body = num::make_mlp<float>(preprocess_dim(downsample, patch), {hidden}, d,
                                num::Activation::relu, derive_seed(seed, "frozen_encoder"));
  return e;
}

}  // namespace cacti::compress
