#include "doctest.h"
#include "support.hpp"

#include "gridloop/error.hpp"
#include "gridloop/ingest.hpp"
#include "gridloop/loadgen.hpp"

#include <algorithm>
#include <set>

using namespace gridloop;

namespace {

LoadSeries days_of(std::initializer_list<double> day_levels) {
  LoadSeries s{"t", 0, {}};
  for (double level : day_levels)
    for (int h = 0; h < 24; ++h) s.values.push_back(level + 0.01 * h);
  return s;
}

bool day_in_template(const LoadSeries& out, std::size_t d, const LoadSeries& tmpl) {
  for (std::size_t j = 0; j * 24 < tmpl.size(); ++j)
    if (std::equal(out.values.begin() + d * 24, out.values.begin() + (d + 1) * 24, tmpl.values.begin() + j * 24))
      return true;
  return false;
}

} // namespace

TEST_CASE("bootstrap of a one-day template repeats it") {
  const auto tmpl = days_of({1.0});
  const auto out = block_bootstrap(tmpl, {24, 3, 7});
  REQUIRE(out.size() == 72);
  for (std::size_t d = 0; d < 3; ++d)
    CHECK(std::equal(tmpl.values.begin(), tmpl.values.end(), out.values.begin() + d * 24));
}

TEST_CASE("bootstrap of a constant template is constant") {
  LoadSeries c{"c", 0, std::vector<double>(96, 2.5)};
  const auto out = block_bootstrap(c, {24, 10, 1});
  CHECK(std::all_of(out.values.begin(), out.values.end(), [](double v) { return v == 2.5; }));
}

TEST_CASE("bootstrap days are verbatim template days") {
  const auto tmpl = days_of({1.0, 2.0});
  const auto out = block_bootstrap(tmpl, {24, 4, 12345});
  REQUIRE(out.size() == 96);
  std::set<double> firsts;
  for (std::size_t d = 0; d < 4; ++d) {
    CHECK(day_in_template(out, d, tmpl));
    firsts.insert(out.values[d * 24]);
  }
  // with 40 days both blocks should appear
  const auto longer = block_bootstrap(tmpl, {24, 40, 12345});
  std::set<double> seen;
  for (std::size_t d = 0; d < 40; ++d) seen.insert(longer.values[d * 24]);
  CHECK(seen.size() == 2);
}

TEST_CASE("bootstrap preconditions") {
  LoadSeries short_t{"s", 0, std::vector<double>(10, 1.0)};
  CHECK_THROWS_WITH_AS(block_bootstrap(short_t, {24, 1, 0}), doctest::Contains("shorter than one block"), Error);
  LoadSeries ragged{"r", 0, std::vector<double>(30, 1.0)};
  CHECK_THROWS_AS(block_bootstrap(ragged, {24, 1, 0}), Error);
  CHECK_THROWS_AS(block_bootstrap(days_of({1.0}), {0, 1, 0}), Error);
}

TEST_CASE("microgrid: round-robin templates, per-home streams, determinism") {
  const auto templates = synthetic_templates(7, 14, 5);
  const BootstrapConfig cfg{24, 5, 77};
  const auto grid = synthesize_microgrid(templates, 200, cfg);
  REQUIRE(grid.size() == 200);
  CHECK(grid.hours() == 120);
  for (std::size_t i : {0u, 7u, 13u, 199u})
    for (std::size_t d = 0; d < 5; ++d) CHECK(day_in_template(grid.homes[i], d, templates[i % 7]));

  const auto again = synthesize_microgrid(templates, 200, cfg);
  for (std::size_t i = 0; i < 200; ++i) CHECK(again.homes[i].values == grid.homes[i].values);

  // adding homes leaves existing ones untouched
  const auto bigger = synthesize_microgrid(templates, 250, cfg);
  for (std::size_t i = 0; i < 200; ++i) CHECK(bigger.homes[i].values == grid.homes[i].values);

  const auto one = synthesize_microgrid(std::span(templates).first(1), 1, cfg);
  CHECK(one.size() == 1);
  CHECK(one.homes[0].id == "home_0");
}

TEST_CASE("microgrid hour-of-day support stays within the template") {
  const auto templates = synthetic_templates(1, 10, 8);
  const auto grid = synthesize_microgrid(templates, 3, {24, 30, 4});
  for (int h = 0; h < 24; ++h) {
    std::set<double> allowed;
    for (std::size_t k = h; k < templates[0].size(); k += 24) allowed.insert(templates[0].values[k]);
    for (const auto& home : grid.homes)
      for (std::size_t k = h; k < home.size(); k += 24) CHECK(allowed.count(home.values[k]) == 1);
  }
}

TEST_CASE("microgrid CSV round trip") {
  testing::TempDir dir;
  const auto grid = synthesize_microgrid(synthetic_templates(2, 3, 1), 4, {24, 2, 9});
  save_microgrid(dir / "g.csv", grid);
  const auto back = load_microgrid(dir / "g.csv");
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back.homes[i].values == grid.homes[i].values);
  CHECK(back.base_load(5) == doctest::Approx(grid.base_load(5)));
  testing::write_file(dir / "bad.csv", "hour,home_1\n0,1\n");
  CHECK_THROWS_AS(load_microgrid(dir / "bad.csv"), Error);
}
