#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "hjreach/config.hpp"

using namespace hjreach;

TEST_CASE("flat key=value parsing with comments and whitespace") {
  std::istringstream is(
      "# air3d desk run\n"
      "system = air3d\n"
      "schedule=ssssl   # all sine\n"
      "\n"
      "  seed =  3\n");
  const KeyValues kv = parse_config_text(is);
  REQUIRE(kv.at("system") == "air3d");
  REQUIRE(kv.at("schedule") == "ssssl");
  REQUIRE(kv.at("seed") == "3");

  std::istringstream bad("just a line\n");
  REQUIRE_THROWS_AS(parse_config_text(bad), ConfigError);
}

TEST_CASE("make_train_config applies presets then explicit keys") {
  KeyValues kv{{"system", "air3d"}, {"preset", "desk"}, {"seed", "7"},
               {"schedule", "rrrrl"}};
  const TrainConfig cfg = make_train_config(kv);
  REQUIRE(cfg.hidden_width == 128);
  REQUIRE(cfg.batch_size == 10000);
  REQUIRE(cfg.pretrain_iters == 1000);
  REQUIRE(cfg.curriculum_iters == 14000);
  REQUIRE(cfg.seed == 7);
  REQUIRE(cfg.schedule == "rrrrl");

  // paper preset keeps the published budgets
  const TrainConfig paper =
      make_train_config({{"system", "air3d"}, {"preset", "paper"}});
  REQUIRE(paper.pretrain_iters == 10000);
  REQUIRE(paper.curriculum_iters == 110000);
  REQUIRE(paper.pretrain_iters + paper.curriculum_iters == 120000);
  const TrainConfig paper9 =
      make_train_config({{"system", "vehicles9d"}, {"preset", "paper"}});
  REQUIRE(paper9.pretrain_iters == 40000);
  REQUIRE(paper9.pretrain_iters + paper9.curriculum_iters == 150000);
}

TEST_CASE("unknown keys are rejected with the list of valid keys") {
  try {
    make_train_config({{"foo", "1"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("unknown config key 'foo'") != std::string::npos);
    REQUIRE(msg.find("schedule") != std::string::npos);
    REQUIRE(msg.find("learning_rate") != std::string::npos);
  }
}

TEST_CASE("value validation") {
  REQUIRE_THROWS_AS(make_train_config({{"seed", "abc"}}), ConfigError);
  REQUIRE_THROWS_AS(make_train_config({{"hidden_width", "0"}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(make_train_config({{"schedule", "ssrs"}}),
                    ScheduleParseError);
  REQUIRE_THROWS_AS(make_train_config({{"preset", "huge"}}), ConfigError);
  REQUIRE_THROWS_AS(make_train_config({{"game_convention", "maybe"}}),
                    ConfigError);
  REQUIRE_NOTHROW(make_train_config({{"game_convention", "reach"}}));
}

TEST_CASE("overrides and render round-trip") {
  KeyValues kv{{"system", "vehicles9d"}, {"preset", "desk"}};
  apply_override(kv, "learning_rate=2e-4");
  apply_override(kv, "v_e=0.5");
  const TrainConfig cfg = make_train_config(kv);
  REQUIRE(cfg.learning_rate == 2e-4);
  REQUIRE(cfg.overrides.v_e == 0.5);
  REQUIRE(cfg.pretrain_iters == 4000);
  REQUIRE(cfg.curriculum_iters == 20000);

  const KeyValues echo = render_train_config(cfg);
  const TrainConfig back = make_train_config(echo);
  REQUIRE(back.system == cfg.system);
  REQUIRE(back.schedule == cfg.schedule);
  REQUIRE(back.hidden_width == cfg.hidden_width);
  REQUIRE(back.seed == cfg.seed);
  REQUIRE(back.batch_size == cfg.batch_size);
  REQUIRE(back.pretrain_iters == cfg.pretrain_iters);
  REQUIRE(back.curriculum_iters == cfg.curriculum_iters);
  REQUIRE(back.learning_rate == cfg.learning_rate);
  REQUIRE(back.terminal_weight == cfg.terminal_weight);
  REQUIRE(back.terminal_fraction == cfg.terminal_fraction);
  REQUIRE(back.horizon == cfg.horizon);
  REQUIRE(back.overrides.v_e == cfg.overrides.v_e);

  REQUIRE_THROWS_AS(apply_override(kv, "nonsense"), ConfigError);
}

TEST_CASE("spec construction applies dynamics overrides") {
  KeyValues kv{{"system", "air3d"}, {"omega_max", "2.0"},
               {"collision_radius", "0.3"}, {"horizon", "1.5"}};
  const TrainConfig cfg = make_train_config(kv);
  const SystemSpec spec = cfg.make_spec();
  REQUIRE(spec.omega_max == 2.0);
  REQUIRE(spec.collision_radius == 0.3);
  REQUIRE(spec.horizon == 1.5);
}
