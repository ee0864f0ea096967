#pragma once

#include "cacti/harness/pipeline.hpp"

namespace cacti::harness {

struct AblationCell {
  std::string arm;      // semantic | pixel_only
  std::string encoder;  // random | moco | finetuned
  int seed = 0;
  double train_rate = 0;
  double shuffled_rate = 0;
};

struct AblationResult {
  std::vector<AblationCell> raw;
  // per (seed, arm): fingerprint of the tape set each arm consumed
  std::vector<std::tuple<int, std::string, std::string>> tape_manifests;

  double mean(const std::string& arm, const std::string& encoder, bool shuffled) const {
    double sum = 0;
    int n = 0;
    for (const auto& c : raw)
      if (c.arm == arm && c.encoder == encoder) {
        sum += shuffled ? c.shuffled_rate : c.train_rate;
        ++n;
      }
    return n > 0 ? sum / n : 0.0;
  }

  std::string csv() const {
    std::ostringstream os;
    os << "arm,encoder,seed,train_rate,shuffled_rate\n";
    for (const auto& c : raw)
      os << c.arm << "," << c.encoder << "," << c.seed << "," << fmt_rate(c.train_rate) << ","
         << fmt_rate(c.shuffled_rate) << "\n";
    for (const auto& arm : {"semantic", "pixel_only"})
      for (const auto& enc : {"random", "moco", "finetuned"})
        os << arm << "," << enc << ",mean," << fmt_rate(mean(arm, enc, false)) << ","
           << fmt_rate(mean(arm, enc, true)) << "\n";
    return os.str();
  }

  std::string table() const {
    std::ostringstream os;
    os << "augmentation x representation ablation (success rate, mean over seeds)\n";
    os << "  arm         encoder     train   shuffled-distractor\n";
    for (const auto& arm : {"semantic", "pixel_only"})
      for (const auto& enc : {"random", "moco", "finetuned"}) {
        char line[160];
        std::snprintf(line, sizeof(line), "  %-11s %-11s %5.1f   %5.1f\n", arm, enc,
                      100 * mean(arm, enc, false), 100 * mean(arm, enc, true));
        os << line;
      }
    char gap[160];
    std::snprintf(gap, sizeof(gap),
                  "  semantic - pixel_only gap on shuffled eval (moco encoder): %+.1f points\n",
                  100 * (mean("semantic", "moco", true) - mean("pixel_only", "moco", true)));
    os << gap;
    return os.str();
  }
};

// Fingerprint of the tape set a dataset directory was built from, read back
// from the shard provenance blocks.
inline std::string tape_manifest_fingerprint(const std::string& raw_dir) {
  FingerprintBuilder fb;
  for (const auto& path : list_shards(raw_dir)) {
    auto shard = io::read_shard(path);
    auto tapes = collect::tapes_from_shard(shard);
    fb.update_pod(shard.shard_uid());
    for (const auto& t : tapes) fb.update_pod(t.recording_seed);
  }
  return fb.digest().hex();
}

// The 2x3 ablation matrix: {semantic augmentation, pixel jitter + crop only}
// x {frozen random, frozen in-domain contrastive, finetuned}. Both arms
// replay the identical tape set; evaluation covers the training cells and
// the distractor-shuffled variant.
inline AblationResult run_ablations(const PipelineConfig& base, const std::string& out_dir) {
  AblationResult result;
  int n_seeds = base.geti("ablate", "seeds");
  bool keep = base.getb("ablate", "keep_work");
  std::uint64_t master = base.getu64("pipeline", "master_seed");

  fs::create_directories(out_dir);
  base.save(out_dir + "/config_resolved.cfg");

  for (int seed = 0; seed < n_seeds; ++seed) {
    PipelineConfig cfg = base;
    cfg.set("pipeline", "master_seed",
            std::to_string(derive_seed(master, "ablate/run", static_cast<std::uint64_t>(seed))));
    cfg.set("collect", "layouts", base.gets("ablate", "layouts"));

    std::string work = out_dir + "/work_s" + std::to_string(seed);
    std::string raw = work + "/raw";
    run_collect(cfg, raw);

    for (const std::string arm : {"semantic", "pixel_only"}) {
      std::string aug = work + "/aug_" + arm;
      run_augment(cfg, raw, aug, arm == "semantic" ? "" : "pixel_only");
      result.tape_manifests.emplace_back(seed, arm, tape_manifest_fingerprint(raw));

      std::string cache_rand = work + "/cache_rand_" + arm + ".bin";
      std::string enc_rand = work + "/encoder_rand_" + arm + ".json";
      run_compress(cfg, "frozen", aug, cache_rand, enc_rand);
      std::string cache_moco = work + "/cache_moco_" + arm + ".bin";
      std::string enc_moco = work + "/encoder_moco_" + arm + ".json";
      run_compress(cfg, "moco", aug, cache_moco, enc_moco);

      for (const std::string enc_name : {"random", "moco", "finetuned"}) {
        PipelineConfig tcfg = cfg;
        std::string cache, encfile;
        if (enc_name == "finetuned") {
          tcfg.set("train", "mode", "finetune");
          tcfg.set("train", "encoder", "random");
          encfile = enc_rand;
        } else {
          tcfg.set("train", "mode", "frozen");
          tcfg.set("train", "encoder", enc_name);
          cache = enc_name == "moco" ? cache_moco : cache_rand;
          encfile = enc_name == "moco" ? enc_moco : enc_rand;
        }
        std::string tag = arm + "_" + enc_name + "_s" + std::to_string(seed);
        auto bundle = run_train(tcfg, aug, cache, encfile, work + "/policy_" + tag + ".json");
        auto train_report =
            run_eval(tcfg, bundle, "train", out_dir + "/eval_" + tag + "_train.csv");
        auto shuffled_report =
            run_eval(tcfg, bundle, "train", out_dir + "/eval_" + tag + "_shuffled.csv", true);
        AblationCell cell;
        cell.arm = arm;
        cell.encoder = enc_name;
        cell.seed = seed;
        cell.train_rate = train_report.overall_rate("train");
        cell.shuffled_rate = shuffled_report.overall_rate("train_shuffled");
        result.raw.push_back(cell);
      }
    }
    if (!keep) fs::remove_all(work);
  }
  write_text(out_dir + "/ablation.csv", result.csv());
  write_text(out_dir + "/ablation.txt", result.table());
  return result;
}

}  // namespace cacti::harness
