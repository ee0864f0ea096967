#pragma once

#include <fstream>
#include <json.hpp>

#include "cacti/compress/encoder.hpp"
#include "cacti/mlp.hpp"

namespace cacti::io {

using Json = nlohmann::ordered_json;

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
            "weights json: layer size mismatch");
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

inline void save_encoder(const std::string& path, const compress::EncoderParams& e) {
  Json j;
  j["format"] = "cacti-encoder";
  j["version"] = 1;
  j["tag"] = compress::encoder_tag_name(e.tag);
  j["fingerprint"] = e.fingerprint().hex();
  j["image_size"] = e.image_size;
  j["downsample"] = e.downsample;
  j["patch"] = e.patch;
  j["body"] = mlp_to_json(e.body);
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot write encoder file '", path, "'");
  f << j.dump(1) << "\n";
}

inline compress::EncoderParams load_encoder(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open encoder file '", path, "'");
  Json j = Json::parse(f);
  require(j.at("format") == "cacti-encoder", "'", path, "' is not an encoder file");
  require(j.at("version").get<int>() == 1, "unsupported encoder file version");
  compress::EncoderParams e;
  e.tag = compress::encoder_tag_from_name(j.at("tag").get<std::string>());
  e.image_size = j.at("image_size").get<int>();
  e.downsample = j.at("downsample").get<int>();
  e.patch = j.at("patch").get<int>();
  e.body = mlp_from_json(j.at("body"));
  require(e.fingerprint() == Fingerprint::from_hex(j.at("fingerprint").get<std::string>()),
          "'", path, "': stored fingerprint does not match the weights");
  return e;
}

}  // namespace cacti::io
