#pragma once

#include "cacti/harness/pipeline.hpp"

namespace cacti::harness {

struct StudyCell {
  std::string encoder;
  int layout_count = 0;
  int seed = 0;
  double train_rate = 0;
  double heldout_rate = 0;
};

struct StudyRow {
  std::string encoder;
  int layout_count = 0;
  int seeds = 0;
  double train_mean = 0, train_stderr = 0;
  double heldout_mean = 0, heldout_stderr = 0;
};

struct StudyResult {
  std::vector<StudyCell> raw;
  std::vector<int> layout_counts;
  std::vector<std::string> encoders;

  StudyRow row(const std::string& encoder, int count) const {
    StudyRow r;
    r.encoder = encoder;
    r.layout_count = count;
    std::vector<double> train, heldout;
    for (const auto& c : raw)
      if (c.encoder == encoder && c.layout_count == count) {
        train.push_back(c.train_rate);
        heldout.push_back(c.heldout_rate);
      }
    r.seeds = static_cast<int>(train.size());
    auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
      mean = 0;
      for (double x : v) mean += x;
      if (!v.empty()) mean /= static_cast<double>(v.size());
      se = 0;
      if (v.size() > 1) {
        double ss = 0;
        for (double x : v) ss += (x - mean) * (x - mean);
        se = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
      }
    };
    mean_se(train, r.train_mean, r.train_stderr);
    mean_se(heldout, r.heldout_mean, r.heldout_stderr);
    return r;
  }

  std::vector<StudyRow> rows() const {
    std::vector<StudyRow> out;
    for (const auto& enc : encoders)
      for (int c : layout_counts) out.push_back(row(enc, c));
    return out;
  }

  std::string csv() const {
    std::ostringstream os;
    os << "kind,encoder,layout_count,seed,train_rate,train_stderr,heldout_rate,heldout_stderr\n";
    for (const auto& c : raw)
      os << "seed," << c.encoder << "," << c.layout_count << "," << c.seed << ","
         << fmt_rate(c.train_rate) << ",," << fmt_rate(c.heldout_rate) << ",\n";
    for (const auto& r : rows())
      os << "mean," << r.encoder << "," << r.layout_count << ",," << fmt_rate(r.train_mean) << ","
         << fmt_rate(r.train_stderr) << "," << fmt_rate(r.heldout_mean) << ","
         << fmt_rate(r.heldout_stderr) << "\n";
    return os.str();
  }

  std::string table() const {
    std::ostringstream os;
    os << "layout-scaling study (success rate, mean +/- stderr over seeds)\n";
    for (const auto& enc : encoders) {
      os << "  encoder=" << enc << "\n";
      for (int c : layout_counts) {
        auto r = row(enc, c);
        char line[160];
        std::snprintf(line, sizeof(line),
                      "    layouts=%-3d  train %5.1f +/- %4.1f   heldout %5.1f +/- %4.1f\n", c,
                      100 * r.train_mean, 100 * r.train_stderr, 100 * r.heldout_mean,
                      100 * r.heldout_stderr);
        os << line;
      }
    }
    return os.str();
  }
};

// The layout-scaling trend measurement: the full Collect -> Augment ->
// Compress -> TraIn pipeline per (layout count, seed), evaluated on the
// training cells and on freshly generated heldout layouts.
inline StudyResult run_scaling_study(const PipelineConfig& base, const std::string& out_dir) {
  StudyResult result;
  result.layout_counts = base.get_ints("study", "layout_counts");
  for (std::size_t i = 0; i + 1 < result.layout_counts.size(); ++i)
    require(result.layout_counts[i] < result.layout_counts[i + 1],
            "study.layout_counts must be ascending");
  result.encoders = base.get_names("study", "encoders");
  int n_seeds = base.geti("study", "seeds");
  bool keep = base.getb("study", "keep_work");
  std::uint64_t master = base.getu64("pipeline", "master_seed");

  fs::create_directories(out_dir);
  base.save(out_dir + "/config_resolved.cfg");

  for (int seed = 0; seed < n_seeds; ++seed) {
    for (int count : result.layout_counts) {
      PipelineConfig cfg = base;
      cfg.set("pipeline", "master_seed",
              std::to_string(derive_seed(master, "study/run", static_cast<std::uint64_t>(seed))));
      cfg.set("collect", "layouts", std::to_string(count));

      std::string tag = "c" + std::to_string(count) + "_s" + std::to_string(seed);
      std::string work = out_dir + "/work_" + tag;
      std::string raw = work + "/raw", aug = work + "/aug";
      run_collect(cfg, raw);
      run_augment(cfg, raw, aug);

      for (const auto& enc_name : result.encoders) {
        PipelineConfig tcfg = cfg;
        tcfg.set("train", "mode", "frozen");
        tcfg.set("train", "encoder", enc_name == "state" ? "state" : enc_name);
        std::string policy_path = work + "/policy_" + enc_name + ".json";
        policy::PolicyBundle bundle;
        if (enc_name == "state") {
          bundle = run_train(tcfg, aug, "", "", policy_path);
        } else {
          std::string cache = work + "/cache_" + enc_name + ".bin";
          std::string encfile = work + "/encoder_" + enc_name + ".json";
          run_compress(cfg, enc_name == "moco" ? "moco" : "frozen", aug, cache, encfile);
          bundle = run_train(tcfg, aug, cache, encfile, policy_path);
        }
        auto train_report = run_eval(tcfg, bundle, "train",
                                     out_dir + "/eval_" + tag + "_" + enc_name + "_train.csv");
        auto heldout_report = run_eval(tcfg, bundle, "heldout",
                                       out_dir + "/eval_" + tag + "_" + enc_name + "_heldout.csv");
        StudyCell cell;
        cell.encoder = enc_name;
        cell.layout_count = count;
        cell.seed = seed;
        cell.train_rate = train_report.overall_rate("train");
        cell.heldout_rate = heldout_report.overall_rate("heldout");
        result.raw.push_back(cell);
      }
      if (!keep) fs::remove_all(work);
    }
  }
  write_text(out_dir + "/trend.csv", result.csv());
  write_text(out_dir + "/trend.txt", result.table());
  return result;
}

}  // namespace cacti::harness
