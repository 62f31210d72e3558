#include "doctest.h"
#include "support.hpp"

#include "gridloop/error.hpp"
#include "gridloop/feedback.hpp"
#include "gridloop/ingest.hpp"

#include <cmath>

using namespace gridloop;

namespace {

Microgrid small_grid(std::size_t homes, std::size_t days, std::uint64_t seed) {
  return synthesize_microgrid(synthetic_templates(3, 7, seed), homes, {24, days, seed});
}

GridConfig grid_cfg(std::size_t homes, double kappa, PricingGoal goal = PricingGoal::track_target) {
  GridConfig cfg;
  cfg.homes = homes;
  cfg.kappa = {kappa};
  cfg.goal = goal;
  cfg.target = {static_cast<double>(homes)};
  return cfg;
}

} // namespace

TEST_CASE("elastic demand") {
  CHECK(elastic_demand({10000, -1, 0}, 1.0) == 10000.0);
  CHECK(elastic_demand({10000, -1, 0}, 100.0) == doctest::Approx(100.0));
  CHECK(elastic_demand({5, 0, 0}, 7.0) == 5.0);
  CHECK(elastic_demand({10, -1, 1}, 1.0) == doctest::Approx(5.0));
  CHECK_THROWS_WITH_AS(elastic_demand({1, -1, 0}, 0.0), doctest::Contains("domain error"), Error);
}

TEST_CASE("household DSM load") {
  CHECK(household_dsm_load(1.7, 0.0, 3.3, -1.0) == 1.7);
  CHECK(household_dsm_load(1.7, 0.5, 1.0, -1.0) == 1.7);
  CHECK(household_dsm_load(2.0, 0.5, 4.0, -1.0) == doctest::Approx(1.25));
  CHECK_THROWS_WITH_AS(household_dsm_load(1.0, 0.5, -1.0, -1.0), doctest::Contains("domain error"), Error);
  CHECK_THROWS_AS(household_dsm_load(1.0, 1.5, 1.0, -1.0), Error);
}

TEST_CASE("aggregate") {
  CHECK(aggregate(std::vector<double>{1, 2, 3}) == 6.0);
  CHECK(aggregate(std::vector<double>{4.5}) == 4.5);
  CHECK(aggregate(std::vector<double>(200, 1.66)) == doctest::Approx(332.0));
  CHECK_THROWS_AS(aggregate(std::vector<double>{}), Error);
}

TEST_CASE("pricing goals") {
  auto q = set_price(200, 200, 0, 400, -1, PricingGoal::track_target, 10);
  CHECK(q.price == doctest::Approx(2.0));
  CHECK(q.lstar == 200.0);
  CHECK(set_price(321, 321, 0, 321, -1, PricingGoal::track_target, 10).price == 1.0);

  q = set_price(200, 200, 300, 400, -1, PricingGoal::compensate_shortfall, 10);
  CHECK(q.lstar == 100.0);
  CHECK(q.price == doctest::Approx(4.0));

  q = set_price(50, 50, 200, 400, -1, PricingGoal::compensate_shortfall, 10);
  CHECK(q.floored);
  CHECK(q.lstar == 10.0);

  CHECK_THROWS_WITH_AS(set_price(200, 200, 0, 0, -1, PricingGoal::track_target, 10),
                       doctest::Contains("invalid forecast"), Error);
  CHECK(parse_pricing_goal("goal2") == PricingGoal::compensate_shortfall);
  CHECK_THROWS_AS(parse_pricing_goal("goal3"), Error);
}

TEST_CASE("price is strictly increasing in the forecast") {
  double prev = 0.0;
  for (double f = 50; f <= 800; f += 25) {
    const double p = set_price(200, 200, 0, f, -0.7, PricingGoal::track_target, 10).price;
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("no DSM participation reproduces the base load exactly, for both goals") {
  const auto grid = small_grid(20, 4, 3);
  for (auto goal : {PricingGoal::track_target, PricingGoal::compensate_shortfall}) {
    const auto trace = simulate(grid, grid_cfg(20, 0.0, goal), NaiveForecaster{});
    REQUIRE(trace.rows.size() == grid.hours() - 1);
    for (const auto& r : trace.rows) CHECK(r.observed_load == r.base_load);
  }
}

TEST_CASE("full participation with an exact forecast tracks the target") {
  const auto grid = small_grid(30, 3, 4);
  std::vector<double> truth(grid.hours());
  for (std::size_t t = 0; t < truth.size(); ++t) truth[t] = grid.base_load(t);
  auto cfg = grid_cfg(30, 1.0);
  cfg.target = {25.0, 30.0, 40.0};
  const auto trace = simulate(grid, cfg, OracleForecaster(truth), nullptr, Injection::closed_loop, 0);
  REQUIRE(trace.rows.size() == grid.hours());
  for (const auto& r : trace.rows) CHECK(std::fabs(r.observed_load - r.target) / r.target < 1e-9);
}

TEST_CASE("mean load decreases with participation") {
  const auto grid = small_grid(200, 7, 5);
  double prev = 1e300;
  for (double k : {0.0, 0.25, 0.5, 0.75, 0.99}) {
    auto cfg = grid_cfg(200, k);
    cfg.target = {200.0};
    const auto trace = simulate(grid, cfg, NaiveForecaster{});
    double mean = 0.0;
    for (const auto& r : trace.rows) mean += r.observed_load;
    mean /= static_cast<double>(trace.rows.size());
    CHECK(mean < prev);
    prev = mean;
    CHECK(trace.clamp_events == 0);
  }
}

TEST_CASE("simulation preconditions and per-home kappa") {
  const auto grid = small_grid(4, 2, 6);
  CHECK_THROWS_AS(simulate(grid, grid_cfg(5, 0.1), NaiveForecaster{}), Error);
  auto cfg = grid_cfg(4, 0.1);
  cfg.kappa = {0.0, 0.0, 0.0, 0.0};
  const auto trace = simulate(grid, cfg, NaiveForecaster{});
  for (const auto& r : trace.rows) CHECK(r.observed_load == r.base_load);
  cfg.kappa = {0.1, 0.2};
  CHECK_THROWS_AS(simulate(grid, cfg, NaiveForecaster{}), Error);
  CHECK_THROWS_AS(simulate(grid, grid_cfg(4, 0.1), SeasonalNaiveForecaster{}, nullptr, Injection::closed_loop, 3),
                  Error);
}

TEST_CASE("closed-loop load attack enters the next price under goal 2") {
  const auto grid = small_grid(10, 3, 7);
  auto cfg = grid_cfg(10, 0.5, PricingGoal::compensate_shortfall);
  const auto nominal = simulate(grid, cfg, NaiveForecaster{});
  const long long hour = nominal.rows[30].hour;
  const auto attack = make_schedule(SuddenParams{5.0}, AttackMode::load, hour, hour + 1, {0, 1});
  const auto attacked = simulate(grid, cfg, NaiveForecaster{}, &attack);
  for (std::size_t t = 0; t < 30; ++t) CHECK(attacked.rows[t].observed_load == nominal.rows[t].observed_load);
  CHECK(attacked.rows[30].observed_load == doctest::Approx(nominal.rows[30].observed_load + 5.0));
  CHECK(attacked.rows[30].attack_truth);
  CHECK_FALSE(attacked.rows[31].attack_truth);
  CHECK(attacked.rows[31].price > nominal.rows[31].price);
}

TEST_CASE("post-hoc attack leaves rows outside the window unchanged") {
  const auto grid = small_grid(10, 3, 8);
  const auto cfg = grid_cfg(10, 0.3);
  const auto nominal = simulate(grid, cfg, NaiveForecaster{});
  const long long start = nominal.rows.back().hour - 23;
  const auto attack = make_schedule(SuddenParams{150.0}, AttackMode::load, start, start + 24);
  const auto post = simulate(grid, cfg, NaiveForecaster{}, &attack, Injection::post_hoc);
  for (std::size_t t = 0; t < nominal.rows.size(); ++t) {
    const bool in = nominal.rows[t].hour >= start;
    CHECK(post.rows[t].attack_truth == in);
    CHECK(post.rows[t].observed_load == (in ? nominal.rows[t].observed_load + 150.0 : nominal.rows[t].observed_load));
    CHECK(post.rows[t].price == nominal.rows[t].price);
  }
  const auto neg = make_schedule(SuddenParams{-1e6}, AttackMode::load, start, start + 2);
  const auto clamped = apply_post_hoc(nominal, neg);
  CHECK(clamped.clamp_events == 2);
  CHECK(clamped.rows[clamped.rows.size() - 24].observed_load == 0.0);
}

TEST_CASE("trace CSV round trip") {
  testing::TempDir dir;
  const auto grid = small_grid(5, 2, 9);
  const auto trace = simulate(grid, grid_cfg(5, 0.4), NaiveForecaster{});
  save_trace(dir / "t.csv", trace);
  const auto back = load_trace(dir / "t.csv");
  REQUIRE(back.rows.size() == trace.rows.size());
  for (std::size_t t = 0; t < trace.rows.size(); ++t) {
    CHECK(back.rows[t].hour == trace.rows[t].hour);
    CHECK(back.rows[t].price == trace.rows[t].price);
    CHECK(back.rows[t].observed_load == trace.rows[t].observed_load);
    CHECK(back.rows[t].lstar == trace.rows[t].lstar);
  }
  save_home_loads(dir / "homes.csv", trace);
  CHECK(std::filesystem::exists(dir / "homes.csv"));
}
