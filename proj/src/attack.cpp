#include "gridloop/attack.hpp"

#include "gridloop/error.hpp"

#include <cmath>

namespace gridloop {

AttackMode parse_attack_mode(const std::string& name) {
  if (name == "price") return AttackMode::price;
  if (name == "load") return AttackMode::load;
  throw Error("unknown attack mode '" + name + "'");
}

AttackKind parse_attack_kind(const std::string& name) {
  if (name == "ramp") return AttackKind::ramp;
  if (name == "sudden") return AttackKind::sudden;
  if (name == "point") return AttackKind::point;
  if (name == "custom") return AttackKind::custom;
  throw Error("unknown attack kind '" + name + "'");
}

std::string to_string(AttackMode mode) { return mode == AttackMode::price ? "price" : "load"; }

std::string to_string(AttackKind kind) {
  switch (kind) {
  case AttackKind::ramp: return "ramp";
  case AttackKind::sudden: return "sudden";
  case AttackKind::point: return "point";
  case AttackKind::custom: return "custom";
  }
  return "?";
}

double AttackSchedule::total(long long hour) const noexcept {
  return in_window(hour) ? totals[static_cast<std::size_t>(hour - window_start)] : 0.0;
}

bool AttackSchedule::active(long long hour) const noexcept {
  if (!in_window(hour)) return false;
  const auto k = static_cast<std::size_t>(hour - window_start);
  if (victims.empty()) return totals[k] != 0.0;
  for (double v : per_home[k])
    if (v != 0.0) return true;
  return false;
}

namespace {

void fill_per_home(AttackSchedule& s) {
  s.per_home.assign(s.totals.size(), std::vector<double>(s.victims.size(), 0.0));
  if (s.victims.empty()) return;
  const double share = s.mode == AttackMode::load ? 1.0 / static_cast<double>(s.victims.size()) : 1.0;
  for (std::size_t k = 0; k < s.totals.size(); ++k)
    for (auto& v : s.per_home[k]) v = s.totals[k] * share;
}

} // namespace

AttackSchedule make_schedule(const AttackParams& params, AttackMode mode, long long window_start,
                             long long window_end, std::vector<std::size_t> victims) {
  if (window_end <= window_start) throw Error("attack window must be non-empty");
  AttackSchedule s;
  s.mode = mode;
  s.window_start = window_start;
  s.window_end = window_end;
  s.victims = std::move(victims);
  const auto len = static_cast<std::size_t>(window_end - window_start);
  s.totals.assign(len, 0.0);

  if (const auto* ramp = std::get_if<RampParams>(&params)) {
    s.kind = AttackKind::ramp;
    s.params = {{"step", ramp->step}};
    double a = 0.0;
    for (auto& v : s.totals) v = (a += ramp->step);
  } else if (const auto* sudden = std::get_if<SuddenParams>(&params)) {
    s.kind = AttackKind::sudden;
    s.params = {{"level", sudden->level}};
    for (auto& v : s.totals) v = sudden->level;
  } else {
    const auto& point = std::get<PointParams>(params);
    s.kind = AttackKind::point;
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [hour, value] : point.values) {
      if (hour < window_start || hour >= window_end)
        throw Error("point attack hour " + std::to_string(hour) + " lies outside the attack window");
      s.totals[static_cast<std::size_t>(hour - window_start)] = value;
      values[std::to_string(hour)] = value;
    }
    s.params = {{"values", values}};
  }
  for (double v : s.totals)
    if (!std::isfinite(v)) throw Error("attack values must be finite");
  fill_per_home(s);
  return s;
}

AttackSchedule make_custom_schedule(AttackMode mode, long long window_start, std::vector<std::size_t> victims,
                                    std::vector<std::vector<double>> per_home) {
  if (per_home.empty()) throw Error("attack window must be non-empty");
  AttackSchedule s;
  s.mode = mode;
  s.kind = AttackKind::custom;
  s.window_start = window_start;
  s.window_end = window_start + static_cast<long long>(per_home.size());
  s.victims = std::move(victims);
  for (const auto& row : per_home) {
    if (row.size() != s.victims.size()) throw Error("per-home attack row width must equal the victim count");
    double sum = 0.0;
    for (double v : row) {
      if (!std::isfinite(v)) throw Error("attack values must be finite");
      sum += v;
    }
    s.totals.push_back(sum);
  }
  s.per_home = std::move(per_home);
  s.params = {{"per_home", s.per_home}};
  return s;
}

nlohmann::json to_json(const AttackSchedule& s) {
  return {{"mode", to_string(s.mode)},
          {"kind", to_string(s.kind)},
          {"window", {s.window_start, s.window_end}},
          {"victims", s.victims},
          {"params", s.params}};
}

AttackSchedule schedule_from_json(const nlohmann::json& j) {
  try {
    const auto mode = parse_attack_mode(j.at("mode").get<std::string>());
    const auto kind = parse_attack_kind(j.at("kind").get<std::string>());
    const auto& window = j.at("window");
    if (!window.is_array() || window.size() != 2) throw Error("attack window must be [start, end]");
    const auto start = window[0].get<long long>();
    const auto end = window[1].get<long long>();
    auto victims = j.value("victims", std::vector<std::size_t>{});
    const auto& params = j.at("params");
    switch (kind) {
    case AttackKind::ramp: return make_schedule(RampParams{params.at("step").get<double>()}, mode, start, end, victims);
    case AttackKind::sudden:
      return make_schedule(SuddenParams{params.at("level").get<double>()}, mode, start, end, victims);
    case AttackKind::point: {
      PointParams p;
      for (const auto& [key, value] : params.at("values").items()) p.values[std::stoll(key)] = value.get<double>();
      return make_schedule(p, mode, start, end, victims);
    }
    case AttackKind::custom: {
      auto s = make_custom_schedule(mode, start, std::move(victims),
                                    params.at("per_home").get<std::vector<std::vector<double>>>());
      if (s.window_end != end) throw Error("custom attack window does not match per_home rows");
      return s;
    }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed attack schedule: ") + e.what());
  }
  throw Error("malformed attack schedule");
}

double apply_price_attack(double price, double a_p) {
  const double attacked = price + a_p;
  if (!(attacked > 0.0)) throw Error("non-physical price: attacked price must stay positive");
  return attacked;
}

AttackedLoad apply_load_attack(double load, double a_l) {
  const double attacked = load + a_l;
  if (attacked < 0.0) return {0.0, true};
  return {attacked, false};
}

double equivalent_load_attack(double a_p, double phi, double kappa, double price, double eps_dsm,
                              ConversionForm form) {
  if (!(kappa > 0.0)) throw Error("modes not equivalent: a home without DSM participation ignores prices");
  if (form == ConversionForm::total_load) {
    if (!(a_p > 0.0)) throw Error("non-physical price: attacked price must stay positive");
    return kappa * phi * std::pow(a_p, eps_dsm) + (1.0 - kappa) * phi;
  }
  if (!(price > 0.0)) throw Error("price must be positive");
  const double attacked = apply_price_attack(price, a_p);
  return kappa * phi * (std::pow(attacked, eps_dsm) - std::pow(price, eps_dsm));
}

double equivalent_price_attack(double a_l, double phi, double kappa, double price, double eps_dsm,
                               ConversionForm form) {
  if (!(kappa > 0.0)) throw Error("modes not equivalent: a home without DSM participation ignores prices");
  if (!(phi > 0.0)) throw Error("no equivalent price exists: base load must be positive");
  if (form == ConversionForm::total_load) {
    const double ratio = (a_l - (1.0 - kappa) * phi) / (kappa * phi);
    if (!(ratio > 0.0)) throw Error("no equivalent price exists");
    return std::pow(ratio, 1.0 / eps_dsm);
  }
  if (!(price > 0.0)) throw Error("price must be positive");
  const double arg = a_l / (kappa * phi) + std::pow(price, eps_dsm);
  if (!(arg > 0.0)) throw Error("no equivalent price exists");
  return std::pow(arg, 1.0 / eps_dsm) - price;
}

} // namespace gridloop
