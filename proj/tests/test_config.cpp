#include <catch2/catch_amalgamated.hpp>

#include "cacti/config.hpp"
#include "cacti/sim/world.hpp"

using namespace cacti;

TEST_CASE("defaults build a consistent world") {
  auto cfg = PipelineConfig::defaults();
  auto w = sim::build_world(cfg);
  REQUIRE(w.roster.size() == 8);
  REQUIRE(w.tasks.size() == 6);
  REQUIRE(w.state_dim() == 6 + 6 * 8);
  REQUIRE(w.task_by_name("reach_kettle").target == sim::kRobotTarget);
  REQUIRE(w.task_by_name("open_cabinet").goal_mode == sim::GoalMode::angle);
  REQUIRE(w.task_by_name("drag_mug").goal_mode == sim::GoalMode::fixed_point);
}

TEST_CASE("unknown keys are rejected") {
  REQUIRE_THROWS_WITH(PipelineConfig::parse("[sim]\nhorizn = 50\n"),
                      Catch::Matchers::ContainsSubstring("horizn"));
  REQUIRE_THROWS_WITH(PipelineConfig::parse("[simulate]\nhorizon = 50\n"),
                      Catch::Matchers::ContainsSubstring("simulate"));
  REQUIRE_THROWS_WITH(PipelineConfig::parse("[roster]\nghost.kind = free\n"),
                      Catch::Matchers::ContainsSubstring("ghost"));
  REQUIRE_THROWS_WITH(PipelineConfig::parse("[tasks]\ndrag_mug.targett = mug\n"),
                      Catch::Matchers::ContainsSubstring("targett"));
}

TEST_CASE("overrides apply and dump round-trips") {
  auto cfg = PipelineConfig::parse("[sim]\nhorizon = 60\n\n[train]\nlr = 0.01\n");
  REQUIRE(cfg.geti("sim", "horizon") == 60);
  REQUIRE(cfg.getd("train", "lr") == Catch::Approx(0.01));
  auto again = PipelineConfig::parse(cfg.dump());
  REQUIRE(again.dump() == cfg.dump());
}

TEST_CASE("typed getters validate") {
  auto cfg = PipelineConfig::defaults();
  REQUIRE_THROWS(cfg.geti("train", "loss"));
  REQUIRE(cfg.getb("augment", "shuffle_distractors"));
  REQUIRE(cfg.get_ints("study", "layout_counts") == std::vector<int>{2, 5, 10});
  REQUIRE_THROWS_WITH(cfg.gets("sim", "nope"), Catch::Matchers::ContainsSubstring("nope"));
}

TEST_CASE("augment overlay sections accept only augment keys") {
  auto cfg = PipelineConfig::parse("[augment.custom]\nsigma_a = 0.1\n");
  REQUIRE(cfg.getd("augment.custom", "sigma_a") == Catch::Approx(0.1));
  REQUIRE_THROWS(PipelineConfig::parse("[augment.custom]\nbogus = 1\n"));
}
