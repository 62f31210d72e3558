#include "doctest.h"

#include "gridloop/attack.hpp"
#include "gridloop/error.hpp"
#include "gridloop/feedback.hpp"
#include "gridloop/rng.hpp"

#include <cmath>

using namespace gridloop;

TEST_CASE("ramp, sudden and point waveforms") {
  const auto ramp = make_schedule(RampParams{5.0}, AttackMode::load, 24, 48);
  REQUIRE(ramp.totals.size() == 24);
  for (std::size_t k = 0; k < 24; ++k) CHECK(ramp.totals[k] == 5.0 * static_cast<double>(k + 1));
  CHECK(ramp.total(23) == 0.0);
  CHECK(ramp.total(47) == 120.0);
  CHECK(ramp.total(48) == 0.0);

  const auto sudden = make_schedule(SuddenParams{150.0}, AttackMode::load, 24, 48);
  for (long long h = 0; h < 60; ++h) CHECK(sudden.total(h) == (h >= 24 && h < 48 ? 150.0 : 0.0));
  CHECK(sudden.active(30));
  CHECK_FALSE(sudden.active(10));

  const auto point = make_schedule(PointParams{{{24, 250.0}, {30, 100.0}}}, AttackMode::load, 24, 48);
  CHECK(point.total(24) == 250.0);
  CHECK(point.total(30) == 100.0);
  CHECK(point.total(25) == 0.0);
  CHECK_FALSE(point.active(25));
  CHECK(point.active(24));

  CHECK_THROWS_WITH_AS(make_schedule(PointParams{{{50, 1.0}}}, AttackMode::load, 24, 48),
                       doctest::Contains("outside the attack window"), Error);
  CHECK_THROWS_AS(make_schedule(SuddenParams{1.0}, AttackMode::load, 5, 5), Error);
}

TEST_CASE("victim split") {
  const auto s = make_schedule(SuddenParams{9.0}, AttackMode::load, 0, 2, {1, 4, 7});
  REQUIRE(s.per_home.size() == 2);
  for (const auto& row : s.per_home) {
    REQUIRE(row.size() == 3);
    for (double v : row) CHECK(v == 3.0);
  }
  const auto c = make_custom_schedule(AttackMode::load, 10, {0, 1}, {{1.0, 0.0}, {0.0, 0.0}, {2.0, -1.0}});
  CHECK(c.window_end == 13);
  CHECK(c.totals == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(c.active(10));
  CHECK_FALSE(c.active(11));
  CHECK(c.active(12));
}

TEST_CASE("schedule JSON round trip") {
  for (const auto& s : {make_schedule(RampParams{5.0}, AttackMode::load, 24, 48),
                        make_schedule(SuddenParams{2.0}, AttackMode::price, 3, 9, {0, 2}),
                        make_schedule(PointParams{{{4, 1.5}}}, AttackMode::load, 0, 10),
                        make_custom_schedule(AttackMode::load, 1, {3}, {{0.5}, {0.25}})}) {
    const auto back = schedule_from_json(to_json(s));
    CHECK(back.mode == s.mode);
    CHECK(back.kind == s.kind);
    CHECK(back.window_start == s.window_start);
    CHECK(back.window_end == s.window_end);
    CHECK(back.victims == s.victims);
    CHECK(back.totals == s.totals);
    CHECK(back.per_home == s.per_home);
  }
  CHECK_THROWS_WITH_AS(schedule_from_json(nlohmann::json{{"mode", "load"}}), doctest::Contains("malformed attack schedule"),
                       Error);
}

TEST_CASE("applying attacks") {
  CHECK(apply_price_attack(3.0, 0.0) == 3.0);
  CHECK(apply_price_attack(2.0, -1.0) == 1.0);
  CHECK_THROWS_WITH_AS(apply_price_attack(1.0, -1.0), doctest::Contains("non-physical price"), Error);

  CHECK(apply_load_attack(1.2, 0.0).load == 1.2);
  CHECK_FALSE(apply_load_attack(1.2, 0.0).clamped);
  CHECK(apply_load_attack(1.2, 0.75).load == doctest::Approx(1.95));
  const auto floored = apply_load_attack(0.5, -1.0);
  CHECK(floored.load == 0.0);
  CHECK(floored.clamped);
}

TEST_CASE("price/load attack conversion examples") {
  CHECK(equivalent_load_attack(0.0, 2.0, 0.5, 1.0, -1.0) == 0.0);
  CHECK(equivalent_load_attack(1.0, 2.0, 0.5, 1.0, -1.0) == doctest::Approx(-0.5));
  CHECK(equivalent_price_attack(0.0, 2.0, 0.5, 1.0, -1.0) == doctest::Approx(0.0));
  CHECK(equivalent_price_attack(-0.5, 2.0, 0.5, 1.0, -1.0) == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(equivalent_load_attack(1.0, 2.0, 0.0, 1.0, -1.0), doctest::Contains("modes not equivalent"), Error);
  CHECK_THROWS_WITH_AS(equivalent_price_attack(1.0, 2.0, 0.0, 1.0, -1.0), doctest::Contains("modes not equivalent"), Error);
  // a load shift below -kappa*phi*P^eps has no price counterpart
  CHECK_THROWS_WITH_AS(equivalent_price_attack(-2.0, 2.0, 0.5, 1.0, -1.0), doctest::Contains("no equivalent price"), Error);
}

TEST_CASE("converted load attack reproduces the price-attacked household load") {
  Stream rng(11, 0);
  for (int i = 0; i < 200; ++i) {
    const double phi = rng.uniform(0.1, 5.0);
    const double kappa = rng.uniform(0.01, 1.0);
    const double price = rng.uniform(0.2, 5.0);
    const double eps = -rng.uniform(0.1, 2.0);
    const double a_p = rng.uniform(-0.9 * price, 3.0);
    const double priced = household_dsm_load(phi, kappa, price + a_p, eps);
    const double a_l = equivalent_load_attack(a_p, phi, kappa, price, eps);
    CHECK(household_dsm_load(phi, kappa, price, eps) + a_l == doctest::Approx(priced).epsilon(1e-12));
    CHECK(equivalent_price_attack(a_l, phi, kappa, price, eps) == doctest::Approx(a_p).epsilon(1e-9));

    const double total = equivalent_load_attack(price + a_p, phi, kappa, price, eps, ConversionForm::total_load);
    CHECK(total == doctest::Approx(priced).epsilon(1e-12));
    CHECK(equivalent_price_attack(total, phi, kappa, price, eps, ConversionForm::total_load) ==
          doctest::Approx(price + a_p).epsilon(1e-9));
  }
}

TEST_CASE("attack name parsing") {
  CHECK(parse_attack_kind("ramp") == AttackKind::ramp);
  CHECK(parse_attack_kind(to_string(AttackKind::point)) == AttackKind::point);
  CHECK(parse_attack_mode("price") == AttackMode::price);
  CHECK_THROWS_AS(parse_attack_kind("spike"), Error);
}
