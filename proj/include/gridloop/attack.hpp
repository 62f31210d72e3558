#pragma once

#include "json.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace gridloop {

enum class AttackMode { price, load };
enum class AttackKind { ramp, sudden, point, custom };

AttackMode parse_attack_mode(const std::string& name);
AttackKind parse_attack_kind(const std::string& name);
std::string to_string(AttackMode mode);
std::string to_string(AttackKind kind);

/// a_t = a_{t-1} + step inside the window, starting from a = 0 before it.
struct RampParams {
  double step = 0.0;
};
/// a_t = level on the whole window.
struct SuddenParams {
  double level = 0.0;
};
/// Explicit hour -> value map; every hour must lie inside the window.
struct PointParams {
  std::map<long long, double> values;
};

using AttackParams = std::variant<RampParams, SuddenParams, PointParams>;

/**
 * Additive attack over the hour window [window_start, window_end).
 *
 * `totals[k]` is the waveform value at hour window_start + k. In load mode it
 * is the aggregate kWh injected and each victim receives totals[k] / |victims|;
 * in price mode it is the $/kWh offset every victim receives. `per_home[k][v]`
 * holds the value applied to victims[v]. Hours are the same absolute hour
 * indices used by traces and micro-grids.
 */
struct AttackSchedule {
  AttackMode mode = AttackMode::load;
  AttackKind kind = AttackKind::sudden;
  long long window_start = 0;
  long long window_end = 0;
  std::vector<std::size_t> victims;
  std::vector<double> totals;
  std::vector<std::vector<double>> per_home;
  nlohmann::json params = nlohmann::json::object();

  bool in_window(long long hour) const noexcept { return hour >= window_start && hour < window_end; }
  /// Waveform value at `hour`, 0 outside the window.
  double total(long long hour) const noexcept;
  /// True iff some a_{hour,i} is non-zero.
  bool active(long long hour) const noexcept;
};

AttackSchedule make_schedule(const AttackParams& params, AttackMode mode, long long window_start,
                             long long window_end, std::vector<std::size_t> victims = {});

/// Schedule with explicit per-victim values; totals are the per-hour sums.
AttackSchedule make_custom_schedule(AttackMode mode, long long window_start, std::vector<std::size_t> victims,
                                    std::vector<std::vector<double>> per_home);

nlohmann::json to_json(const AttackSchedule& schedule);
AttackSchedule schedule_from_json(const nlohmann::json& j);

/// P^a = P + a_p; rejects non-positive attacked prices.
double apply_price_attack(double price, double a_p);

struct AttackedLoad {
  double load = 0.0;
  bool clamped = false;
};

/// l^a = l + a_l, floored at zero.
AttackedLoad apply_load_attack(double load, double a_l);

/**
 * How a price attack and a load attack are put in correspondence.
 *
 * `delta`: a_L is the additive change that reproduces the price-attacked
 * household load, so l + a_L equals the load under price P + a_P.
 * `total_load`: a_L is the whole compromised household load and a_P is the
 * whole received price (no additive offset on either side).
 */
enum class ConversionForm { delta, total_load };

double equivalent_load_attack(double a_p, double phi, double kappa, double price, double eps_dsm,
                              ConversionForm form = ConversionForm::delta);
double equivalent_price_attack(double a_l, double phi, double kappa, double price, double eps_dsm,
                               ConversionForm form = ConversionForm::delta);

} // namespace gridloop
