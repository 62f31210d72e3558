#include "doctest.h"
#include "support.hpp"

#include "gridloop/error.hpp"
#include "gridloop/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

using namespace gridloop;
using nlohmann::json;

namespace {

ExperimentConfig small_config(const std::filesystem::path& out) {
  auto cfg = experiment_config_from_json(json::parse(R"({
    "grid": {"homes": 20, "target": 20},
    "templates": {"count": 3, "days": 14},
    "train_days": 7,
    "seed": 3,
    "threads": 2
  })"));
  cfg.output_dir = out;
  return cfg;
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

} // namespace

TEST_CASE("experiment config defaults, parsing and round trip") {
  const auto d = experiment_config_from_json(json::object());
  CHECK(d.kappas == std::vector<double>{0.1, 0.9});
  CHECK(d.attack_types.size() == 3);
  CHECK(d.train_days == 28);
  CHECK(d.train_hours() == 672);
  CHECK(d.test_hours == 48);
  CHECK(d.simulated_days() == 31);
  CHECK(d.grid.homes == 200);

  const auto cfg = experiment_config_from_json(json::parse(R"({
    "grid": {"homes": 50, "kappa": 0.3, "goal": "track_target", "target": [150, 160], "forecaster": "seasonal_naive"},
    "attacks": {"sudden_level": 90, "points": {"24": 1.0}, "train_level": [10, 20]},
    "kappas": [0.2], "attack_types": ["point"], "replications": 4, "seed": 12
  })"));
  CHECK(cfg.grid.homes == 50);
  CHECK(cfg.grid.target == std::vector<double>{150, 160});
  CHECK(cfg.pricing_forecaster == ForecasterKind::seasonal_naive);
  CHECK(cfg.attacks.sudden_level == 90.0);
  CHECK(cfg.attacks.points.size() == 1);
  CHECK(cfg.attacks.train_level_max == 20.0);
  CHECK(cfg.replications == 4);

  const auto back = experiment_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  CHECK_THROWS_WITH_AS(experiment_config_from_json(json{{"replication", 3}}), doctest::Contains("replication"), Error);
  CHECK_THROWS_AS(experiment_config_from_json(json{{"train_days", 2}}), Error);
  CHECK_THROWS_AS(experiment_config_from_json(json{{"test_hours", 24}}), Error);
  CHECK_THROWS_AS(experiment_config_from_json(json{{"replications", 0}}), Error);
  CHECK_THROWS_AS(experiment_config_from_json(json{{"seed", "abc"}}), Error);

  testing::TempDir dir;
  testing::write_file(dir / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_experiment_config(dir / "bad.json"), Error);
  CHECK_THROWS_AS(load_experiment_config(dir / "missing.json"), Error);
}

TEST_CASE("seed precedence") {
  ::unsetenv("GRIDLOOP_SEED");
  CHECK(resolve_seed(std::nullopt, 5) == 5);
  ::setenv("GRIDLOOP_SEED", "77", 1);
  CHECK(resolve_seed(std::nullopt, 5) == 77);
  CHECK(resolve_seed(9, 5) == 9);
  ::setenv("GRIDLOOP_SEED", "7x", 1);
  CHECK_THROWS_AS(resolve_seed(std::nullopt, 5), Error);
  ::unsetenv("GRIDLOOP_SEED");

  CHECK(grid_seed(1, 0) != grid_seed(1, 1));
  CHECK(grid_seed(1, 0) != grid_seed(2, 0));
  CHECK(detect_seed(1, 0, 0, 0) != detect_seed(1, 0, 0, 1));
  CHECK(detect_seed(1, 0, 1, 0) != detect_seed(1, 0, 0, 1));
}

TEST_CASE("protocol attack schedules") {
  const AttackSettings a;
  const auto point = protocol_schedule(a, AttackKind::point, 100, 124);
  CHECK(point.total(100) == 250.0); // offset 24 into the final 48 hours
  CHECK(point.total(105) == 200.0);
  CHECK(point.total(122) == 150.0);
  const auto ramp = protocol_schedule(a, AttackKind::ramp, 100, 124);
  CHECK(ramp.total(123) == 120.0);
  CHECK(protocol_schedule(a, AttackKind::sudden, 100, 124).total(110) == 150.0);
  CHECK_THROWS_AS(protocol_schedule(a, AttackKind::custom, 0, 24), Error);
}

TEST_CASE("supervised training series") {
  std::vector<double> train(24 * 9);
  for (std::size_t t = 0; t < train.size(); ++t) train[t] = 300.0 + static_cast<double>(t % 24);
  const AttackSettings a;
  const auto s = supervised_training_series(train, a, 4);
  REQUIRE(s.values.size() == 2 * train.size());
  for (std::size_t t = 0; t < train.size(); ++t) {
    CHECK(s.values[t] == train[t]);
    CHECK(s.labels[t] == 0);
  }
  for (std::size_t d = 0; d < 9; ++d) {
    std::vector<double> attack(24);
    std::size_t positives = 0;
    for (std::size_t h = 0; h < 24; ++h) {
      const std::size_t t = train.size() + d * 24 + h;
      attack[h] = s.values[t] - train[d * 24 + h];
      CHECK(s.labels[t] == (attack[h] != 0.0 ? 1 : 0));
      positives += static_cast<std::size_t>(s.labels[t]);
    }
    CAPTURE(d);
    if (d < 3) {
      const double step = attack[0];
      CHECK(step >= 2.0);
      CHECK(step <= 10.0);
      for (std::size_t h = 0; h < 24; ++h) CHECK(attack[h] == doctest::Approx(step * static_cast<double>(h + 1)));
    } else if (d < 6) {
      CHECK(attack[0] >= 50.0);
      CHECK(attack[0] <= 300.0);
      for (double v : attack) CHECK(v == attack[0]);
    } else {
      CHECK(positives == 5);
      for (double v : attack)
        if (v != 0.0) {
          CHECK(v >= 50.0);
          CHECK(v <= 300.0);
        }
    }
  }
  const auto again = supervised_training_series(train, a, 4);
  CHECK(again.values == s.values);
  CHECK(supervised_training_series(train, a, 5).values != s.values);
  CHECK_THROWS_AS(supervised_training_series(std::vector<double>(50, 1.0), a, 1), Error);
}

TEST_CASE("nominal simulation at kappa zero observes the base load") {
  testing::TempDir dir;
  const auto cfg = small_config(dir.path());
  const auto grid = experiment_microgrid(cfg, grid_seed(cfg.seed, 0));
  const auto trace = simulate_nominal(cfg, grid, 0.0);
  CHECK(trace.rows.size() == cfg.train_hours() + cfg.test_hours);
  CHECK(trace.rows.front().hour == 24);
  for (const auto& r : trace.rows) CHECK(std::fabs(r.observed_load - r.base_load) <= 1e-9 * r.base_load);
}

TEST_CASE("detections files reproduce the in-memory metrics") {
  testing::TempDir dir;
  const auto cfg = small_config(dir.path());
  const auto grid = experiment_microgrid(cfg, grid_seed(cfg.seed, 0));
  const auto nominal = simulate_nominal(cfg, grid, 0.9);
  const auto trace = apply_post_hoc(nominal, protocol_schedule(cfg.attacks, AttackKind::sudden, nominal));
  const auto report = detect_trace(trace, cfg.train_hours(), cfg.detectors, cfg.attacks, 11);

  REQUIRE(report.detectors.size() == 6);
  const std::vector<std::string> names{"logreg", "gnb", "forest", "glrt", "cusum", "cusum_interval"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CHECK(report.detectors[i].name == names[i]);
    CHECK(report.detectors[i].decisions.size() == cfg.test_hours);
  }
  CHECK(report.hours.size() == cfg.test_hours);
  std::size_t attacked = 0;
  for (int y : report.labels) attacked += static_cast<std::size_t>(y);
  CHECK(attacked == 24);

  const auto table = to_table(report);
  const auto direct = evaluate(table);
  save_detections(dir / "detections.csv", table);
  save_roc(dir / "roc.csv", table);
  const auto loaded = evaluate(load_detection_table(dir / "detections.csv", dir / "roc.csv"));
  CHECK(metrics_json(loaded, 0.9, "sudden") == metrics_json(direct, 0.9, "sudden"));
  for (const auto& m : direct) {
    CHECK(m.counts.total() == cfg.test_hours);
    CHECK(m.auc >= 0.0);
    CHECK(m.auc <= 1.0);
  }
  CHECK(detect_trace(trace, cfg.train_hours(), cfg.detectors, cfg.attacks, 11).detectors[2].scores ==
        report.detectors[2].scores);
}

TEST_CASE("run_experiment artifact tree and determinism") {
  testing::TempDir a, b;
  auto cfg = small_config(a.path());
  const auto result = run_experiment(cfg);
  REQUIRE(result.scenarios.size() == 6);
  CHECK(result.all_ok());
  const auto summary = read_json(a / "summary.json");
  CHECK(summary["all_ok"] == true);
  REQUIRE(summary["scenarios"].size() == 6);
  for (const auto& s : summary["scenarios"]) {
    CHECK(s["status"] == "ok");
    for (const auto& f : s["files"]) CHECK(std::filesystem::exists(a.path() / f.get<std::string>()));
  }
  CHECK(std::filesystem::exists(a / "kappa0.1_ramp_rep000" / "metrics.json"));
  CHECK(std::filesystem::exists(a / "summary.csv"));
  const auto metrics = read_json(a / "kappa0.9_point_rep000" / "metrics.json");
  CHECK(metrics.size() == 6);
  CHECK(metrics[0]["attack_type"] == "point");

  cfg.output_dir = b.path();
  cfg.threads = 1;
  run_experiment(cfg);
  CHECK(testing::read_file(a / "summary.csv") == testing::read_file(b / "summary.csv"));
  CHECK(testing::read_file(a / "kappa0.1_sudden_rep000" / "detections.csv") ==
        testing::read_file(b / "kappa0.1_sudden_rep000" / "detections.csv"));
}

TEST_CASE("a failing scenario is recorded and the others still run") {
  testing::TempDir dir;
  auto cfg = small_config(dir.path());
  cfg.templates.synthetic = false;
  cfg.templates.dir = dir / "no_such_dir";
  cfg.kappas = {0.5};
  cfg.attack_types = {AttackKind::sudden};
  const auto result = run_experiment(cfg);
  CHECK_FALSE(result.all_ok());
  CHECK_FALSE(result.scenarios[0].error.empty());
  const auto summary = read_json(dir / "summary.json");
  CHECK(summary["scenarios"][0]["status"] == "failed");
  CHECK(summary["all_ok"] == false);
}
