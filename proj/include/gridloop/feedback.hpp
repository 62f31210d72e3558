#pragma once

#include "gridloop/attack.hpp"
#include "gridloop/forecast.hpp"
#include "gridloop/loadgen.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridloop {

/// Constant-elasticity demand L = a * (P + P_c)^eps.
struct DemandCurve {
  double scale = 1.0;      // a > 0, load at unit price
  double elasticity = 0.0; // eps_d
  double market_cost = 0.0;
};

double elastic_demand(const DemandCurve& curve, double price);

/// (kappa * phi) * P^eps + (1 - kappa) * phi. kappa = 1 is accepted as the full-participation limit.
double household_dsm_load(double phi, double kappa, double price, double eps_dsm);

double aggregate(std::span<const double> loads);

enum class PricingGoal {
  track_target,        // L* = L'_t
  compensate_shortfall // L* = L'_t + (L'_{t-1} - L_{t-1})
};

PricingGoal parse_pricing_goal(const std::string& name);
std::string to_string(PricingGoal goal);

struct PriceQuote {
  double price = 1.0;
  double lstar = 0.0;
  bool floored = false; // L* <= 0 was replaced by the floor
};

/// P_t = (L* / forecast)^(1 / eps_hat).
PriceQuote set_price(double target, double prev_target, double prev_load, double forecast, double eps_hat,
                     PricingGoal goal, double lstar_floor);

struct GridConfig {
  std::size_t homes = 200;
  std::vector<double> kappa{0.0};      // one value for every home, or one per home
  double eps_dsm = -1.0;
  std::optional<double> eps_dsm_hat;   // defaults to eps_dsm
  PricingGoal goal = PricingGoal::track_target;
  std::vector<double> target{200.0};   // L'_t = target[hour mod size]
  double lstar_floor = 10.0;
  std::uint64_t seed = 0;

  double kappa_for(std::size_t home) const { return kappa.size() == 1 ? kappa.front() : kappa.at(home); }
  double target_at(long long hour) const;
  double eps_hat() const noexcept { return eps_dsm_hat.value_or(eps_dsm); }
  void validate() const;
};

enum class Injection { closed_loop, post_hoc };

struct TraceRow {
  long long hour = 0;
  double price = 0.0;
  double base_load = 0.0;
  double forecast = 0.0;
  double target = 0.0;
  double lstar = 0.0;
  double observed_load = 0.0;
  bool attack_truth = false;
  int clamped = 0; // attacked loads floored at zero on this row
};

struct SimulationTrace {
  std::vector<TraceRow> rows;
  std::vector<std::vector<double>> home_loads; // [row][home], empty when not recorded
  std::size_t clamp_events = 0;

  std::vector<double> observed() const;
  std::vector<int> labels() const;
};

inline constexpr std::size_t kAutoStart = std::numeric_limits<std::size_t>::max();

/**
 * Closed price/load loop, one row per hour from `start` (default: the
 * forecaster's minimum history, at least 1) to the end of the grid.
 *
 * Price attacks are only possible closed-loop. Load attacks are added per
 * home (closed_loop) or to the finished aggregate series (post_hoc). In
 * closed-loop mode the next price sees the attacked L_{t-1}. On the first
 * simulated row the previous shortfall is taken as zero.
 */
SimulationTrace simulate(const Microgrid& grid, const GridConfig& cfg, const BaseLoadForecaster& forecaster,
                         const AttackSchedule* attack = nullptr, Injection injection = Injection::closed_loop,
                         std::size_t start = kAutoStart, bool record_homes = true);

/// Adds a load-mode schedule's waveform to the observed aggregate and sets the truth labels.
SimulationTrace apply_post_hoc(SimulationTrace trace, const AttackSchedule& attack);

void save_trace(const std::filesystem::path& path, const SimulationTrace& trace);
SimulationTrace load_trace(const std::filesystem::path& path);
void save_home_loads(const std::filesystem::path& path, const SimulationTrace& trace);

} // namespace gridloop
