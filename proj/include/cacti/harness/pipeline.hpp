#pragma once

#include <filesystem>

#include "cacti/augment/multiply.hpp"
#include "cacti/collect/record.hpp"
#include "cacti/compress/dataset.hpp"
#include "cacti/harness/evaluate.hpp"
#include "cacti/io/weights_json.hpp"

namespace cacti::harness {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

inline std::string shard_filename(int task_id, int layout_id) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "shard_t%02d_l%05d.bin", task_id, layout_id);
  return buf;
}

inline std::vector<std::string> list_shards(const std::string& dir) {
  require(fs::is_directory(dir), "'", dir, "' is not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    auto name = entry.path().filename().string();
    if (name.rfind("shard_", 0) == 0 && entry.path().extension() == ".bin")
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  require(!paths.empty(), "no shard files under '", dir, "'");
  return paths;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), "cannot write '", path, "'");
  f << text;
}

// Stage 1: one shard per (task, layout) cell plus a manifest of sources and
// filter decisions. Scripted tapes by default; NPG experts with the success
// filter in npg mode.
inline Json run_collect(const PipelineConfig& cfg, const std::string& out_dir) {
  auto w = sim::build_world(cfg);
  std::uint64_t master = cfg.getu64("pipeline", "master_seed");
  int jobs = cfg.geti("pipeline", "jobs");
  std::string mode = cfg.gets("collect", "mode");
  require(mode == "script" || mode == "npg", "collect.mode must be script or npg");
  int n_layouts = cfg.geti("collect", "layouts");
  int tapes = cfg.geti("collect", "tapes_per_cell");
  int episodes_per_policy = cfg.geti("collect", "episodes_per_policy");
  float threshold = cfg.getf("collect", "filter_threshold");
  int filter_episodes = cfg.geti("collect", "filter_episodes");

  fs::create_directories(out_dir);
  cfg.save(out_dir + "/config_resolved.cfg");

  struct CellOut {
    Json manifest;
  };
  std::vector<std::pair<const sim::TaskSpec*, int>> cells;
  for (const auto& task : w.tasks)
    for (int lid = 0; lid < n_layouts; ++lid) cells.push_back({&task, lid});
  std::vector<CellOut> outs(cells.size());

  parallel_for(cells.size(), jobs, [&](std::size_t ci) {
    const auto& task = *cells[ci].first;
    int lid = cells[ci].second;
    auto layout = sim::layout_for_id(w, master, lid);
    Json m;
    m["task"] = task.name;
    m["task_id"] = task.task_id;
    m["layout_id"] = lid;
    m["mode"] = mode;
    io::ShardData shard;
    if (mode == "script") {
      shard = collect::record_tapes(w, task, layout, tapes, master);
      m["tapes"] = Json::array();
      auto prov = Json::parse(shard.provenance);
      for (const auto& e : prov.at("episodes")) m["tapes"].push_back(e.at("reset_seed"));
    } else {
      auto npg_cfg = collect::NpgConfig::from(cfg);
      auto [policy, log] = collect::npg_train(
          w, layout, task, npg_cfg,
          derive_seed(master, "npg/train", static_cast<std::uint64_t>(task.task_id),
                      static_cast<std::uint64_t>(lid)),
          filter_episodes);
      auto decisions = collect::filter_experts({log.final_success}, threshold);
      m["measured_success"] = log.final_success;
      m["accepted"] = decisions[0].accepted;
      m["final_eval_episodes"] = log.final_episodes;
      if (decisions[0].accepted)
        shard = collect::record_policy_rollouts(w, task, layout, policy, episodes_per_policy,
                                                master);
      else
        shard = collect::make_empty_shard(w, task, lid);
      if (shard.provenance.empty()) shard.provenance = "{\"stage\":\"collect\",\"mode\":\"npg\",\"episodes\":[]}";
    }
    m["episodes"] = shard.episodes.size();
    io::write_shard(out_dir + "/" + shard_filename(task.task_id, lid), shard);
    outs[ci].manifest = std::move(m);
  });

  Json manifest;
  manifest["stage"] = "collect";
  manifest["mode"] = mode;
  manifest["master_seed"] = master;
  manifest["layouts"] = n_layouts;
  manifest["cells"] = Json::array();
  for (auto& o : outs) manifest["cells"].push_back(std::move(o.manifest));
  write_text(out_dir + "/manifest.json", manifest.dump(1) + "\n");
  return manifest;
}

// Stage 2: multiplies every raw shard under the named plan and writes the
// accounting report (text + CSV).
inline augment::AugmentReport run_augment(const PipelineConfig& cfg, const std::string& in_dir,
                                          const std::string& out_dir,
                                          const std::string& plan_name = "") {
  auto w = sim::build_world(cfg);
  auto plan = augment::load_plan(cfg, plan_name);
  int jobs = cfg.geti("pipeline", "jobs");
  fs::create_directories(out_dir);
  cfg.save(out_dir + "/config_resolved.cfg");

  augment::AugmentReport report;
  report.replays_per_source = plan.replays_per_source;
  for (const auto& path : list_shards(in_dir)) {
    auto raw = io::read_shard(path);
    auto layout = sim::layout_for_id(w, plan.master_seed, raw.layout_id);
    augment::CellStats stats;
    auto out = augment::augment_shard(w, raw, layout, plan, &stats, jobs);
    io::write_shard(out_dir + "/" + shard_filename(raw.task_id, raw.layout_id), out);
    report.cells.push_back(stats);
  }
  write_text(out_dir + "/report.csv", report.csv());
  write_text(out_dir + "/report.txt", report.table());
  return report;
}

// Stage 3: trains or seeds an encoder, embeds every frame once, writes the
// cache and the encoder artifact.
inline compress::EncoderParams run_compress(const PipelineConfig& cfg, const std::string& mode,
                                            const std::string& in_dir,
                                            const std::string& cache_out,
                                            const std::string& encoder_out) {
  require(mode == "moco" || mode == "frozen", "compress mode must be moco or frozen");
  auto w = sim::build_world(cfg);
  std::uint64_t master = cfg.getu64("pipeline", "master_seed");
  int jobs = cfg.geti("pipeline", "jobs");
  auto paths = list_shards(in_dir);

  int d = cfg.geti("compress", "embed_dim");
  int hidden = cfg.geti("compress", "encoder_hidden");
  int ds = cfg.geti("compress", "downsample");
  int patch = cfg.geti("compress", "patch");

  compress::EncoderParams enc;
  if (mode == "frozen") {
    enc = compress::make_frozen_encoder(
        w.image_size, ds, patch, hidden, d,
        derive_seed(master, "encoder/frozen", cfg.getu64("compress", "frozen_seed")));
  } else {
    auto frames = compress::sample_frames(paths, cfg.geti("compress", "moco_max_frames"),
                                          derive_seed(master, "moco/frames"));
    std::vector<compress::MocoCurvePoint> curve;
    enc = compress::train_moco(frames, w.image_size, ds, patch, hidden, d,
                               cfg.geti("compress", "moco_queue"), cfg.getf("compress", "moco_tau"),
                               cfg.getf("compress", "moco_momentum"), cfg.getf("compress", "moco_lr"),
                               cfg.geti("compress", "moco_steps"), cfg.geti("compress", "moco_batch"),
                               cfg.getf("compress", "view_jitter"), cfg.geti("compress", "view_crop"),
                               derive_seed(master, "moco/train"), &curve);
    std::ostringstream os;
    os << "step,loss\n";
    for (const auto& p : curve) os << p.step << "," << fmt_rate(p.loss) << "\n";
    write_text(encoder_out + ".curve.csv", os.str());
  }
  auto cache = compress::encode_shards(enc, paths, jobs);
  io::write_cache(cache_out, cache);
  io::save_encoder(encoder_out, enc);
  return enc;
}

// Stage 4: assembles the success-filtered dataset and trains the
// task-conditioned policy; the policy file is self-contained.
inline policy::PolicyBundle run_train(const PipelineConfig& cfg, const std::string& shards_dir,
                                      const std::string& cache_path,
                                      const std::string& encoder_path,
                                      const std::string& policy_out) {
  auto w = sim::build_world(cfg);
  auto settings = policy::TrainSettings::from(cfg);
  bool visual = settings.encoder_kind != policy::EncoderKind::state;

  compress::EncoderParams enc;
  io::EmbeddingCache cache;
  const compress::EncoderParams* enc_ptr = nullptr;
  const io::EmbeddingCache* cache_ptr = nullptr;
  if (visual) {
    require(!encoder_path.empty(), "visual training needs --encoder-file");
    enc = io::load_encoder(encoder_path);
    enc_ptr = &enc;
    if (!settings.finetune) {
      require(!cache_path.empty(), "frozen training needs --cache");
      cache = io::read_cache(cache_path);
      cache_ptr = &cache;
    }
  }

  auto ds = policy::assemble_bc_dataset(w, settings, list_shards(shards_dir), cache_ptr, enc_ptr);
  auto result = policy::train_bc(w, settings, ds, enc_ptr,
                                 derive_seed(settings.master_seed, "bc/train"));

  policy::PolicyBundle bundle;
  bundle.policy = std::move(result.policy);
  bundle.encoder_kind = settings.encoder_kind;
  bundle.finetuned = settings.finetune;
  bundle.embed_mode = settings.embed_mode;
  bundle.g = ds.g;
  if (visual) {
    bundle.encoder = std::move(result.encoder);
    bundle.encoder_fp = bundle.encoder.fingerprint();
    bundle.zt_dim = bundle.encoder.dim();
  } else {
    bundle.encoder_fp = policy::state_feature_fingerprint(w.state_dim());
    bundle.zt_dim = w.state_dim();
  }
  bundle.config_snapshot = cfg.dump();
  policy::save_policy(policy_out, bundle);

  std::ostringstream os;
  os << "step,loss\n";
  for (const auto& [step, loss] : result.loss_curve) os << step << "," << fmt_rate(loss) << "\n";
  write_text(policy_out + ".curve.csv", os.str());
  return bundle;
}

inline EvalReport run_eval(const PipelineConfig& cfg, const policy::PolicyBundle& bundle,
                           const std::string& split, const std::string& csv_out,
                           bool shuffle_override = false) {
  auto w = sim::build_world(cfg);
  require(split == "train" || split == "heldout", "eval split must be train or heldout");
  EvalOptions opts;
  opts.split = shuffle_override || cfg.getb("eval", "shuffle_distractors")
                   ? split + "_shuffled"
                   : split;
  if (split == "train") {
    int n = cfg.geti("collect", "layouts");
    for (int i = 0; i < n; ++i) opts.layout_ids.push_back(i);
  } else {
    opts.layout_ids = make_heldout_suite(cfg.geti("eval", "heldout_layouts"));
  }
  opts.episodes_per_cell = cfg.geti("eval", "episodes_per_cell");
  opts.deterministic = cfg.getb("eval", "deterministic");
  opts.shuffle_distractors = shuffle_override || cfg.getb("eval", "shuffle_distractors");
  opts.resample_themes = split == "heldout" || opts.shuffle_distractors;
  opts.master_seed = cfg.getu64("pipeline", "master_seed");
  opts.eval_seed = derive_seed(opts.master_seed, "eval", fnv1a(split.data(), split.size()),
                               opts.shuffle_distractors ? 1 : 0);
  opts.jobs = cfg.geti("pipeline", "jobs");

  auto report = evaluate_actor(w, opts, policy_actor(w, bundle, opts.master_seed, opts.deterministic));
  if (!csv_out.empty()) write_text(csv_out, report.csv());
  return report;
}

}  // namespace cacti::harness
