// Command-line front end chaining the four pipeline stages plus the
// evaluation, study, and ablation harnesses.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "cacti/harness/ablate.hpp"
#include "cacti/harness/study.hpp"

using namespace cacti;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string seed_override;
  int jobs = -1;
};

PipelineConfig load_config(const CommonOpts& c) {
  PipelineConfig cfg =
      c.config_path.empty() ? PipelineConfig::defaults() : PipelineConfig::load(c.config_path);
  if (!c.seed_override.empty()) cfg.set("pipeline", "master_seed", c.seed_override);
  if (c.jobs > 0) cfg.set("pipeline", "jobs", std::to_string(c.jobs));
  return cfg;
}

std::string out_path(const std::string& p) {
  if (p.empty() || p.front() == '/' || p.front() == '.') return p;
  const char* root = std::getenv("CACTI_OUT_ROOT");
  if (!root) return p;
  return std::string(root) + "/" + p;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path, "config file (defaults apply when omitted)");
  cmd->add_option("--seed", c.seed_override, "override pipeline.master_seed");
  cmd->add_option("--jobs", c.jobs, "worker threads within a stage");
}

void log_run(const PipelineConfig& cfg, const std::string& stage) {
  std::cout << "[" << stage << "] master_seed=" << cfg.gets("pipeline", "master_seed")
            << " jobs=" << cfg.gets("pipeline", "jobs") << "\n";
}

void inspect_file(const std::string& path) {
  auto bytes = io::read_file_bytes(path);
  require(bytes.size() >= 4, "'", path, "' is too short to carry a magic number");
  std::string magic(bytes.begin(), bytes.begin() + 4);
  if (magic == "CACT") {
    auto s = io::parse_shard(bytes, path);
    std::cout << path << ": shard v" << io::ShardData::kVersion << " task=" << s.task_id
              << " layout=" << s.layout_id << " episodes=" << s.episodes.size() << " frame="
              << s.height << "x" << s.width << "x" << s.channels << " proprio=" << s.proprio_dim
              << " action=" << s.action_dim << " state=" << s.state_dim << "\n";
    int ok = 0;
    for (const auto& ep : s.episodes) ok += ep.success ? 1 : 0;
    std::cout << "  successes: " << ok << "/" << s.episodes.size()
              << "  steps: " << s.total_steps() << "\n";
    std::cout << "  provenance: "
              << (s.provenance.size() > 160 ? s.provenance.substr(0, 160) + "..." : s.provenance)
              << "\n";
  } else if (magic == "CEMB") {
    auto c = io::parse_cache(bytes, path);
    std::cout << path << ": embedding cache v" << io::EmbeddingCache::kVersion << " d=" << c.dim
              << " entries=" << c.size() << " fingerprint=" << c.fingerprint.hex().substr(0, 16)
              << "...\n";
  } else if (magic[0] == '{') {
    auto b = policy::load_policy(path);
    std::cout << path << ": policy encoder=" << policy::encoder_kind_name(b.encoder_kind)
              << (b.finetuned ? " (finetuned)" : "") << " zt_dim=" << b.zt_dim << " g=" << b.g
              << " embedding=" << policy::embedding_mode_name(b.embed_mode)
              << " fingerprint=" << b.encoder_fp.hex().substr(0, 16) << "...\n";
  } else {
    fail("'", path, "': unrecognized magic bytes");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale multi-task visual imitation pipeline"};
  app.require_subcommand(1);

  CommonOpts copts;
  std::string in_dir, out, plan, mode = "script", split = "train";
  std::string cache_path, shards_dir, encoder_file, policy_path, tasks_csv;
  std::string compress_mode = "moco", train_mode, train_encoder;
  std::vector<std::string> inspect_paths;
  std::string layout_counts;
  int layouts = -1, seeds = -1, episodes = -1;
  bool shuffle = false;

  auto* c_collect = app.add_subcommand("collect", "record expert data per (task, layout) cell");
  add_common(c_collect, copts);
  c_collect->add_option("--out", out, "output directory")->required();
  c_collect->add_option("--mode", mode, "script | npg");
  c_collect->add_option("--tasks", tasks_csv, "comma list restricting the task table");
  c_collect->add_option("--layouts", layouts, "number of training layouts");

  auto* c_augment = app.add_subcommand("augment", "multiply a raw dataset with scene variations");
  add_common(c_augment, copts);
  c_augment->add_option("--in", in_dir, "raw shard directory")->required();
  c_augment->add_option("--out", out, "output directory")->required();
  c_augment->add_option("--plan", plan, "named plan overlay ([augment.<name>] section)");

  auto* c_compress = app.add_subcommand("compress", "train/seed an encoder and cache embeddings");
  add_common(c_compress, copts);
  c_compress->add_option("--mode", compress_mode, "moco | frozen");
  c_compress->add_option("--in", in_dir, "shard directory")->required();
  c_compress->add_option("--out", cache_path, "embedding cache output path")->required();
  c_compress->add_option("--encoder-out", encoder_file, "encoder artifact path");

  auto* c_train = app.add_subcommand("train", "behavior-clone the multi-task policy");
  add_common(c_train, copts);
  c_train->add_option("--shards", shards_dir, "training shard directory")->required();
  c_train->add_option("--cache", cache_path, "embedding cache (frozen visual modes)");
  c_train->add_option("--mode", train_mode, "frozen | finetune");
  c_train->add_option("--encoder", train_encoder, "moco | random | state");
  c_train->add_option("--encoder-file", encoder_file, "encoder artifact (visual modes)");
  c_train->add_option("--out", policy_path, "policy file output path")->required();

  auto* c_eval = app.add_subcommand("eval", "closed-loop success-rate evaluation");
  add_common(c_eval, copts);
  c_eval->add_option("--policy", policy_path, "policy file")->required();
  c_eval->add_option("--split", split, "train | heldout");
  c_eval->add_option("--out", out, "report CSV path");
  c_eval->add_option("--episodes", episodes, "episodes per (task, layout) cell");
  c_eval->add_flag("--shuffle-distractors", shuffle, "re-place non-task objects at reset");

  auto* c_study = app.add_subcommand("study", "layout-scaling trend over full pipeline runs");
  add_common(c_study, copts);
  c_study->add_option("--out", out, "output directory")->required();
  c_study->add_option("--layout-counts", layout_counts, "ascending comma list, e.g. 2,5,10");
  c_study->add_option("--seeds", seeds, "pipeline replications");

  auto* c_ablate = app.add_subcommand("ablate", "augmentation x representation ablation matrix");
  add_common(c_ablate, copts);
  c_ablate->add_option("--out", out, "output directory")->required();
  c_ablate->add_option("--seeds", seeds, "pipeline replications");

  auto* c_inspect = app.add_subcommand("inspect", "print shard/cache/policy headers");
  c_inspect->add_option("files", inspect_paths, "files to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(c_inspect)) {
      for (const auto& p : inspect_paths) inspect_file(p);
      return 0;
    }

    auto cfg = load_config(copts);
    if (app.got_subcommand(c_collect)) {
      if (!tasks_csv.empty()) cfg.set("tasks", "names", tasks_csv);
      if (layouts > 0) cfg.set("collect", "layouts", std::to_string(layouts));
      cfg.set("collect", "mode", mode);
      log_run(cfg, "collect");
      auto manifest = harness::run_collect(cfg, out_path(out));
      std::cout << "collect: wrote " << manifest["cells"].size() << " shards to " << out_path(out)
                << "\n";
    } else if (app.got_subcommand(c_augment)) {
      log_run(cfg, "augment");
      auto report = harness::run_augment(cfg, in_dir, out_path(out), plan);
      std::cout << report.table();
    } else if (app.got_subcommand(c_compress)) {
      if (encoder_file.empty()) encoder_file = cache_path + ".encoder.json";
      log_run(cfg, "compress");
      auto enc = harness::run_compress(cfg, compress_mode, in_dir, out_path(cache_path),
                                       out_path(encoder_file));
      std::cout << "compress: encoder " << compress::encoder_tag_name(enc.tag) << " fingerprint "
                << enc.fingerprint().hex().substr(0, 16) << "... cache " << out_path(cache_path)
                << "\n";
    } else if (app.got_subcommand(c_train)) {
      if (!train_mode.empty()) cfg.set("train", "mode", train_mode);
      if (!train_encoder.empty()) cfg.set("train", "encoder", train_encoder);
      log_run(cfg, "train");
      auto bundle = harness::run_train(cfg, shards_dir, cache_path, encoder_file,
                                       out_path(policy_path));
      std::cout << "train: wrote " << out_path(policy_path) << " (encoder "
                << policy::encoder_kind_name(bundle.encoder_kind)
                << (bundle.finetuned ? ", finetuned" : "") << ")\n";
    } else if (app.got_subcommand(c_eval)) {
      if (episodes > 0) cfg.set("eval", "episodes_per_cell", std::to_string(episodes));
      log_run(cfg, "eval");
      auto bundle = policy::load_policy(policy_path);
      auto report = harness::run_eval(cfg, bundle, split, out_path(out), shuffle);
      for (const auto& a : report.aggregates())
        if (a.name == "overall")
          std::cout << "eval " << a.split << ": " << harness::fmt_rate(a.mean_rate) << " +/- "
                    << harness::fmt_rate(a.stderr_rate) << " over " << a.cells << " cells\n";
    } else if (app.got_subcommand(c_study)) {
      if (!layout_counts.empty()) cfg.set("study", "layout_counts", layout_counts);
      if (seeds > 0) cfg.set("study", "seeds", std::to_string(seeds));
      log_run(cfg, "study");
      auto result = harness::run_scaling_study(cfg, out_path(out));
      std::cout << result.table();
    } else if (app.got_subcommand(c_ablate)) {
      if (seeds > 0) cfg.set("ablate", "seeds", std::to_string(seeds));
      log_run(cfg, "ablate");
      auto result = harness::run_ablations(cfg, out_path(out));
      std::cout << result.table();
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
