#include "gridloop/feedback.hpp"

#include "gridloop/csv.hpp"
#include "gridloop/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridloop {

double elastic_demand(const DemandCurve& curve, double price) {
  if (!(price > 0.0)) throw Error("domain error: price must be positive");
  if (!(curve.scale > 0.0)) throw Error("demand scale must be positive");
  return curve.scale * std::pow(price + curve.market_cost, curve.elasticity);
}

double household_dsm_load(double phi, double kappa, double price, double eps_dsm) {
  if (!(price > 0.0)) throw Error("domain error: price must be positive");
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw Error("DSM fraction must lie in [0, 1]");
  if (!(phi >= 0.0)) throw Error("base load must be non-negative");
  return (kappa * phi) * std::pow(price, eps_dsm) + (1.0 - kappa) * phi;
}

double aggregate(std::span<const double> loads) {
  if (loads.empty()) throw Error("aggregate of an empty set of loads");
  return std::accumulate(loads.begin(), loads.end(), 0.0);
}

PricingGoal parse_pricing_goal(const std::string& name) {
  if (name == "goal1" || name == "track_target") return PricingGoal::track_target;
  if (name == "goal2" || name == "compensate_shortfall") return PricingGoal::compensate_shortfall;
  throw Error("unknown pricing goal '" + name + "'");
}

std::string to_string(PricingGoal goal) { return goal == PricingGoal::track_target ? "goal1" : "goal2"; }

PriceQuote set_price(double target, double prev_target, double prev_load, double forecast, double eps_hat,
                     PricingGoal goal, double lstar_floor) {
  if (!(forecast > 0.0)) throw Error("invalid forecast: base-load forecast must be positive");
  if (!(eps_hat < 0.0)) throw Error("estimated DSM elasticity must be negative");
  PriceQuote q;
  q.lstar = goal == PricingGoal::track_target ? target : target + (prev_target - prev_load);
  if (q.lstar <= 0.0) {
    q.lstar = lstar_floor;
    q.floored = true;
  }
  q.price = std::pow(q.lstar / forecast, 1.0 / eps_hat);
  return q;
}

double GridConfig::target_at(long long hour) const {
  const auto n = static_cast<long long>(target.size());
  return target[static_cast<std::size_t>(((hour % n) + n) % n)];
}

void GridConfig::validate() const {
  if (homes == 0) throw Error("grid needs at least one home");
  if (kappa.size() != 1 && kappa.size() != homes)
    throw Error("kappa must be a scalar or one value per home");
  for (double k : kappa)
    if (!(k >= 0.0 && k <= 1.0)) throw Error("kappa must lie in [0, 1]");
  if (!(eps_dsm < 0.0)) throw Error("DSM elasticity must be negative");
  if (!(eps_hat() < 0.0)) throw Error("estimated DSM elasticity must be negative");
  if (target.empty()) throw Error("target schedule is empty");
  for (double v : target)
    if (!(v > 0.0)) throw Error("target loads must be positive");
  if (!(lstar_floor > 0.0)) throw Error("L* floor must be positive");
}

std::vector<double> SimulationTrace::observed() const {
  std::vector<double> out(rows.size());
  std::transform(rows.begin(), rows.end(), out.begin(), [](const TraceRow& r) { return r.observed_load; });
  return out;
}

std::vector<int> SimulationTrace::labels() const {
  std::vector<int> out(rows.size());
  std::transform(rows.begin(), rows.end(), out.begin(), [](const TraceRow& r) { return r.attack_truth ? 1 : 0; });
  return out;
}

SimulationTrace simulate(const Microgrid& grid, const GridConfig& cfg, const BaseLoadForecaster& forecaster,
                         const AttackSchedule* attack, Injection injection, std::size_t start, bool record_homes) {
  cfg.validate();
  if (grid.size() != cfg.homes)
    throw Error("grid has " + std::to_string(grid.size()) + " homes, config expects " + std::to_string(cfg.homes));
  if (grid.hours() < 2) throw Error("simulation needs at least two hours of base load");
  if (start == kAutoStart) start = std::max<std::size_t>(1, forecaster.min_history());
  if (start < forecaster.min_history() || start >= grid.hours())
    throw Error("simulation start leaves no room for the forecaster history");
  if (attack && injection == Injection::post_hoc && attack->mode == AttackMode::price)
    throw Error("price attacks can only be injected closed-loop");
  const AttackSchedule* live = injection == Injection::closed_loop ? attack : nullptr;
  if (live)
    for (auto v : live->victims)
      if (v >= grid.size()) throw Error("attack victim index out of range");

  const std::size_t T = grid.hours();
  std::vector<double> base(T);
  for (std::size_t t = 0; t < T; ++t) base[t] = grid.base_load(t);

  SimulationTrace trace;
  trace.rows.reserve(T - start);
  if (record_homes) trace.home_loads.reserve(T - start);
  std::vector<double> loads(grid.size());
  std::vector<double> prices(grid.size());

  for (std::size_t t = start; t < T; ++t) {
    TraceRow row;
    row.hour = grid.start_hour() + static_cast<long long>(t);
    row.base_load = base[t];
    row.forecast = forecaster.predict(std::span<const double>(base).first(t), t);
    row.target = cfg.target_at(row.hour);
    const double prev_target = cfg.target_at(row.hour - 1);
    const double prev_load = trace.rows.empty() ? prev_target : trace.rows.back().observed_load;
    const auto quote = set_price(row.target, prev_target, prev_load, row.forecast, cfg.eps_hat(), cfg.goal,
                                 cfg.lstar_floor);
    row.price = quote.price;
    row.lstar = quote.lstar;

    std::fill(prices.begin(), prices.end(), row.price);
    const bool attacked_now = live && live->in_window(row.hour);
    const auto k = attacked_now ? static_cast<std::size_t>(row.hour - live->window_start) : 0;
    if (attacked_now && live->mode == AttackMode::price)
      for (std::size_t v = 0; v < live->victims.size(); ++v)
        prices[live->victims[v]] = apply_price_attack(row.price, live->per_home[k][v]);

    for (std::size_t i = 0; i < grid.size(); ++i)
      loads[i] = household_dsm_load(grid.homes[i].values[t], cfg.kappa_for(i), prices[i], cfg.eps_dsm);

    if (attacked_now && live->mode == AttackMode::load)
      for (std::size_t v = 0; v < live->victims.size(); ++v) {
        auto& l = loads[live->victims[v]];
        const auto hit = apply_load_attack(l, live->per_home[k][v]);
        l = hit.load;
        row.clamped += hit.clamped ? 1 : 0;
      }

    row.observed_load = aggregate(loads);
    row.attack_truth = live && live->active(row.hour);
    trace.clamp_events += static_cast<std::size_t>(row.clamped);
    trace.rows.push_back(row);
    if (record_homes) trace.home_loads.push_back(loads);
  }

  if (attack && injection == Injection::post_hoc) return apply_post_hoc(std::move(trace), *attack);
  return trace;
}

SimulationTrace apply_post_hoc(SimulationTrace trace, const AttackSchedule& attack) {
  if (attack.mode != AttackMode::load) throw Error("only load attacks can be added to a finished trace");
  for (auto& row : trace.rows) {
    if (!attack.in_window(row.hour)) continue;
    const auto hit = apply_load_attack(row.observed_load, attack.total(row.hour));
    row.observed_load = hit.load;
    if (hit.clamped) {
      ++row.clamped;
      ++trace.clamp_events;
    }
    row.attack_truth = row.attack_truth || attack.active(row.hour);
  }
  return trace;
}

namespace {

const std::vector<std::string> kTraceHeader{"hour",   "price", "base_load",     "forecast",
                                            "target", "lstar", "observed_load", "attack_truth"};

} // namespace

void save_trace(const std::filesystem::path& path, const SimulationTrace& trace) {
  csv::Writer out(path, kTraceHeader);
  for (const auto& r : trace.rows)
    out.row({std::to_string(r.hour), csv::format(r.price), csv::format(r.base_load), csv::format(r.forecast),
             csv::format(r.target), csv::format(r.lstar), csv::format(r.observed_load), r.attack_truth ? "1" : "0"});
}

SimulationTrace load_trace(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::expect_header(table, kTraceHeader);
  SimulationTrace trace;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    TraceRow r;
    r.hour = csv::parse_int(f[0], table, i);
    r.price = csv::parse_double(f[1], table, i);
    r.base_load = csv::parse_double(f[2], table, i);
    r.forecast = csv::parse_double(f[3], table, i);
    r.target = csv::parse_double(f[4], table, i);
    r.lstar = csv::parse_double(f[5], table, i);
    r.observed_load = csv::parse_double(f[6], table, i);
    const auto truth = csv::parse_int(f[7], table, i);
    if (truth != 0 && truth != 1)
      throw Error(table.source + ":" + std::to_string(table.lines[i]) + ": attack_truth must be 0 or 1");
    r.attack_truth = truth == 1;
    if (!trace.rows.empty() && r.hour != trace.rows.back().hour + 1)
      throw Error(table.source + ":" + std::to_string(table.lines[i]) + ": hours must be consecutive");
    trace.rows.push_back(r);
  }
  if (trace.rows.empty()) throw Error(table.source + ": no data rows");
  return trace;
}

void save_home_loads(const std::filesystem::path& path, const SimulationTrace& trace) {
  if (trace.home_loads.empty()) throw Error("trace has no per-home loads recorded");
  std::vector<std::string> header{"hour"};
  for (std::size_t i = 0; i < trace.home_loads.front().size(); ++i) header.push_back("home_" + std::to_string(i));
  csv::Writer out(path, header);
  std::vector<std::string> fields(header.size());
  for (std::size_t t = 0; t < trace.rows.size(); ++t) {
    fields[0] = std::to_string(trace.rows[t].hour);
    for (std::size_t i = 0; i < trace.home_loads[t].size(); ++i) fields[i + 1] = csv::format(trace.home_loads[t][i]);
    out.row(fields);
  }
}

} // namespace gridloop
