#include "doctest.h"

#include "gridloop/error.hpp"
#include "gridloop/normal.hpp"
#include "gridloop/rng.hpp"
#include "gridloop/sequential.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

using namespace gridloop;

TEST_CASE("normal quantile against an independent implementation") {
  const boost::math::normal_distribution<double> n01;
  for (double p : {1e-12, 1e-6, 0.001, 0.02275, 0.05, 0.1, 0.3, 0.5, 0.7, 0.95, 0.999, 1 - 1e-9}) {
    CHECK(std::fabs(normal_quantile(p) - boost::math::quantile(n01, p)) < 1e-9);
    CHECK(std::fabs(normal_tail_inverse(p) - boost::math::quantile(boost::math::complement(n01, p))) < 1e-9);
    CHECK(normal_tail(normal_tail_inverse(p)) == doctest::Approx(p).epsilon(1e-9));
  }
  CHECK(std::isinf(normal_quantile(0.0)));
  CHECK(std::isinf(normal_quantile(1.0)));
  CHECK_THROWS_AS(normal_quantile(1.5), Error);
}

TEST_CASE("GLRT threshold examples") {
  CHECK(glrt_threshold(1.0, 4, 0.5) == doctest::Approx(0.0));
  const boost::math::normal_distribution<double> n01;
  const double p = boost::math::cdf(boost::math::complement(n01, 2.0));
  CHECK(glrt_threshold(1.0, 25, p) == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(glrt_threshold(3.0, 9, p) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("GLRT threshold decreases in false-alarm probability and in window size") {
  double prev = glrt_threshold(1.0, 24, 0.001);
  for (double p : {0.01, 0.05, 0.1, 0.3, 0.49}) {
    const double t = glrt_threshold(1.0, 24, p);
    CHECK(t < prev);
    prev = t;
  }
  for (std::size_t n = 1; n < 30; ++n) CHECK(glrt_threshold(1.0, n + 1, 0.05) < glrt_threshold(1.0, n, 0.05));
}

TEST_CASE("GLRT scores, prefix windows and decisions") {
  const auto zero = glrt_detect(std::vector<double>(50, 0.0), {24, 0.05, 1.0});
  for (int d : zero.decision) CHECK(d == 0);

  std::vector<double> x{1, 2, 3, 4, 5, 6};
  const auto out = glrt_detect(x, {3, 0.05, 1.0});
  CHECK(out.n == std::vector<std::size_t>{1, 2, 3, 3, 3, 3});
  CHECK(out.score == std::vector<double>{1.0, 1.5, 2.0, 3.0, 4.0, 5.0});
  for (std::size_t t = 0; t < x.size(); ++t)
    CHECK(out.decision[t] == (out.score[t] > glrt_threshold(1.0, out.n[t], 0.05) ? 1 : 0));
  CHECK(glrt_decisions(out, 1.0, 0.05) == out.decision);

  auto shifted = x;
  for (auto& v : shifted) v += 2.5;
  const auto out2 = glrt_detect(shifted, {3, 0.05, 1.0});
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(out2.score[t] == doctest::Approx(out.score[t] + 2.5));

  CHECK_THROWS_AS(glrt_detect(std::vector<double>{}, {}), Error);
  CHECK_THROWS_AS(glrt_detect(x, {0, 0.05, 1.0}), Error);
  CHECK_THROWS_AS(glrt_detect(x, {3, 0.0, 1.0}), Error);
}

TEST_CASE("GLRT false-alarm calibration on Gaussian noise") {
  const double sigma = 2.0;
  const std::size_t window = 24, windows = 10000;
  Stream rng(42, 0);
  std::vector<double> x(window * windows);
  for (auto& v : x) v = sigma * rng.normal();
  for (double p : {0.01, 0.05, 0.1}) {
    const auto out = glrt_detect(x, {window, p, sigma});
    std::size_t alarms = 0;
    for (std::size_t w = 0; w < windows; ++w) alarms += static_cast<std::size_t>(out.decision[(w + 1) * window - 1]);
    CHECK(std::fabs(static_cast<double>(alarms) / windows - p) < 0.02);
  }
}

TEST_CASE("CUSUM hand recursions") {
  const auto a = cusum_detect(std::vector<double>{1, -2, 1}, {0.5, 2.0});
  CHECK(a.g == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(a.alarm == std::vector<int>{0, 0, 0});
  CHECK(a.alarm_times.empty());
  CHECK(a.change_times == std::vector<std::size_t>{1});

  const auto b = cusum_detect(std::vector<double>{0.6, 0.6}, {0.0, 1.0});
  CHECK(b.g[0] == doctest::Approx(0.6));
  CHECK(b.g[1] == doctest::Approx(1.2));
  CHECK(b.alarm == std::vector<int>{0, 1});
  CHECK(b.alarm_times == std::vector<std::size_t>{1});

  // the reset means a fresh accumulation after the alarm
  const auto c = cusum_detect(std::vector<double>{0.6, 0.6, 0.6, 0.6}, {0.0, 1.0});
  CHECK(c.alarm == std::vector<int>{0, 1, 0, 1});
  CHECK(c.g[2] == doctest::Approx(0.6));

  const auto z = cusum_detect(std::vector<double>(20, 0.0), {0.5, 2.0});
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(z.g[t] == 0.0);
    CHECK(z.alarm[t] == 0);
  }
  CHECK_THROWS_AS(cusum_detect(std::vector<double>{}, {0.5, 2.0}), Error);
  CHECK_THROWS_AS(cusum_detect(std::vector<double>{1.0}, {-1.0, 2.0}), Error);
}

TEST_CASE("CUSUM path invariants and alarm intervals") {
  Stream rng(7, 1);
  std::vector<double> x(500);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = rng.normal() + (t >= 300 ? 1.5 : 0.0);
  const CusumConfig cfg = CusumConfig::from_sigma(1.0);
  CHECK(cfg.drift == 0.5);
  CHECK(cfg.threshold == 2.0);
  const auto out = cusum_detect(x, cfg);
  double prev = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    CHECK(out.g[t] >= 0.0);
    if (x[t] <= cfg.drift && prev == 0.0) CHECK(out.g[t] == 0.0);
    CHECK(out.alarm[t] == (out.g[t] > cfg.threshold ? 1 : 0));
    prev = out.alarm[t] ? 0.0 : out.g[t];
  }
  // every alarm is covered by an interval that starts right after the last zero
  for (std::size_t a : out.alarm_times) {
    CHECK(out.interval[a] == 1);
    std::size_t t = a;
    while (t > 0 && out.g[t - 1] != 0.0 && !out.alarm[t - 1]) CHECK(out.interval[--t] == 1);
  }
  std::size_t late = 0;
  for (std::size_t t = 300; t < 500; ++t) late += out.alarm[t];
  CHECK(late > 20);
}
