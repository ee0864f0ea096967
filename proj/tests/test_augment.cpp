#include <catch2/catch_amalgamated.hpp>

#include "cacti/augment/multiply.hpp"

using namespace cacti;
using namespace cacti::augment;
using namespace cacti::sim;

namespace {
World default_world() { return build_world(PipelineConfig::defaults()); }
}  // namespace

TEST_CASE("shuffling a single-object roster returns the layout unchanged") {
  auto cfg = PipelineConfig::parse(
      "[roster]\nobjects = mug\nmug.kind = free\nmug.shape = disc\nmug.half = 0.035,0.035\n"
      "mug.color = 40,80,190\nmug.texture = plain\n"
      "[tasks]\nnames = drag_mug\ndrag_mug.target = mug\ndrag_mug.goal = 0.8,0.2\n"
      "drag_mug.tolerance = 0.03\n");
  auto w = build_world(cfg);
  auto lay = sample_layout(w, 4, 0);
  Rng rng(1);
  auto shuffled = shuffle_distractors(w, lay, w.tasks[0], rng);
  REQUIRE(shuffled == lay);
}

TEST_CASE("shuffle keeps the target pose and passes the overlap oracle") {
  auto w = default_world();
  auto lay = sample_layout(w, 17, 0);
  const auto& task = w.task_by_name("drag_plate");
  auto plate = static_cast<std::size_t>(task.target);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    auto shuffled = shuffle_distractors(w, lay, task, rng);
    REQUIRE(shuffled.pos[plate] == lay.pos[plate]);
    if (seed % 50 == 0) {
      for (std::size_t i = 0; i < w.roster.size(); ++i)
        for (std::size_t j = i + 1; j < w.roster.size(); ++j)
          REQUIRE(dist(shuffled.pos[i], shuffled.pos[j]) >
                  w.roster[i].footprint_radius() + w.roster[j].footprint_radius());
    }
  }
}

TEST_CASE("reach task anchors its goal object during shuffles") {
  auto w = default_world();
  auto lay = sample_layout(w, 23, 0);
  const auto& task = w.task_by_name("reach_kettle");
  auto kettle = static_cast<std::size_t>(task.goal_object);
  Rng rng(2);
  auto shuffled = shuffle_distractors(w, lay, task, rng);
  REQUIRE(shuffled.pos[kettle] == lay.pos[kettle]);
}

TEST_CASE("zero-noise replay on the source layout reproduces the recording") {
  auto w = default_world();
  auto lay = layout_for_id(w, 9, 0);
  const auto& task = w.task_by_name("drag_mug");
  auto tape = collect::script_expert(w, lay, task, 31);
  auto original = replay_actions(w, lay, task, tape.recording_seed, tape.actions);
  auto replay = replay_augmented(w, tape, task, lay, 0.0f, 999);
  REQUIRE(replay.states == original.states);
  REQUIRE(replay.success);
}

TEST_CASE("themes change pixels but not physics") {
  auto w = default_world();
  auto lay = layout_for_id(w, 9, 1);
  const auto& task = w.task_by_name("drag_banana");
  auto tape = collect::script_expert(w, lay, task, 8);
  auto r1 = replay_augmented(w, tape, task, lay, 0.0f, 1);
  auto r2 = replay_augmented(w, tape, task, lay, 0.0f, 2);
  REQUIRE(r1.states == r2.states);
  auto e1 = collect::episode_from_rollout(w, lay, r1, sample_theme(w, 100));
  auto e2 = collect::episode_from_rollout(w, lay, r2, sample_theme(w, 200));
  REQUIRE(e1.steps[0].state == e2.steps[0].state);
  REQUIRE(e1.steps[0].image != e2.steps[0].image);
}

TEST_CASE("action noise is exactly the tape plus a reproducible seeded stream") {
  auto w = default_world();
  auto lay = layout_for_id(w, 9, 2);
  const auto& task = w.task_by_name("drag_plate");
  auto tape = collect::script_expert(w, lay, task, 77);
  float sigma = 0.05f;
  std::uint64_t noise_seed = 4242;
  auto r = replay_augmented(w, tape, task, lay, sigma, noise_seed);

  // regenerate the noise stream independently and compare executed actions
  Rng noise(noise_seed);
  for (std::size_t t = 0; t < tape.actions.size(); ++t) {
    Action expect = tape.actions[t];
    expect.dx += sigma * noise.normalf();
    expect.dy += sigma * noise.normalf();
    expect.grip += sigma * noise.normalf();
    expect = expect.clamped();
    REQUIRE(r.actions[t].dx == expect.dx);
    REQUIRE(r.actions[t].dy == expect.dy);
    REQUIRE(r.actions[t].grip == expect.grip);
  }
}

TEST_CASE("identity plan reproduces the input shard except provenance") {
  auto w = default_world();
  auto lay = layout_for_id(w, 5, 0);
  const auto& task = w.task_by_name("drag_mug");
  auto raw = collect::record_tapes(w, task, lay, 2, 5);

  AugmentPlan plan;
  plan.replays_per_source = 1;
  plan.sigma_a = 0;
  plan.shuffle_distractors = false;
  plan.theme_variation = false;
  plan.inpaint_fraction = 0;
  plan.master_seed = 5;

  CellStats stats;
  auto out = augment_shard(w, raw, lay, plan, &stats);
  REQUIRE(out.episodes == raw.episodes);
  REQUIRE(out.provenance != raw.provenance);
  REQUIRE(stats.episodes_out == stats.episodes_in);
}

TEST_CASE("dataset multiplication is exact and the report recounts") {
  auto w = default_world();
  AugmentPlan plan;
  plan.replays_per_source = 4;
  plan.sigma_a = 0.02f;
  plan.shuffle_distractors = true;
  plan.theme_variation = true;
  plan.inpaint_fraction = 0.5f;
  plan.inpaint_prompts = builtin_prompts();
  plan.master_seed = 11;

  AugmentReport report;
  report.replays_per_source = plan.replays_per_source;
  int total_out = 0;
  for (int li = 0; li < 2; ++li) {
    auto lay = layout_for_id(w, 11, li);
    for (const auto& name : {"drag_mug", "reach_kettle"}) {
      const auto& task = w.task_by_name(name);
      auto raw = collect::record_tapes(w, task, lay, 3, 11);
      CellStats stats;
      auto out = augment_shard(w, raw, lay, plan, &stats);
      REQUIRE(stats.episodes_out == stats.episodes_in * plan.replays_per_source);
      REQUIRE(out.episodes.size() == static_cast<std::size_t>(stats.episodes_out));
      // recount successes and in-paints straight from the emitted records
      int successes = 0;
      for (const auto& ep : out.episodes) successes += ep.success ? 1 : 0;
      REQUIRE(successes == stats.successes);
      auto prov = collect::Json::parse(out.provenance);
      int inpainted = 0;
      for (const auto& e : prov.at("episodes")) inpainted += e.at("inpainted").get<bool>() ? 1 : 0;
      REQUIRE(inpainted == stats.inpainted);
      REQUIRE(inpainted <= 2 * 3);  // half of 4 replays per source episode
      report.cells.push_back(stats);
      total_out += stats.episodes_out;
    }
  }
  REQUIRE(report.totals().episodes_out == total_out);
  REQUIRE(report.csv().find("total,,") != std::string::npos);
  REQUIRE(AugmentReport::reference_scale_note().find("90000") != std::string::npos);
  REQUIRE(AugmentReport::reference_scale_note().find("45000") != std::string::npos);
}

TEST_CASE("augmentation is deterministic and job-count independent") {
  auto w = default_world();
  auto lay = layout_for_id(w, 21, 0);
  const auto& task = w.task_by_name("close_microwave");
  auto raw = collect::record_tapes(w, task, lay, 2, 21);

  AugmentPlan plan;
  plan.replays_per_source = 3;
  plan.inpaint_prompts = builtin_prompts();
  plan.master_seed = 21;

  auto a = augment_shard(w, raw, lay, plan, nullptr, 1);
  auto b = augment_shard(w, raw, lay, plan, nullptr, 2);
  REQUIRE(io::serialize_shard(a) == io::serialize_shard(b));
}

TEST_CASE("pixel-only plan loads from the config overlay") {
  auto cfg = PipelineConfig::defaults();
  auto base = load_plan(cfg);
  REQUIRE(base.shuffle_distractors);
  REQUIRE(!base.pixel_jitter);
  auto pixel = load_plan(cfg, "pixel_only");
  REQUIRE(!pixel.shuffle_distractors);
  REQUIRE(!pixel.theme_variation);
  REQUIRE(pixel.pixel_jitter);
  REQUIRE(pixel.inpaint_fraction == 0.0f);
  REQUIRE(pixel.replays_per_source == base.replays_per_source);
}
