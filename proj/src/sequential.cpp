#include "gridloop/sequential.hpp"

#include "gridloop/error.hpp"
#include "gridloop/normal.hpp"

#include <algorithm>
#include <cmath>

namespace gridloop {

void GlrtConfig::validate() const {
  if (window == 0) throw Error("GLRT window must be at least 1");
  if (!(p_fa > 0.0 && p_fa < 1.0)) throw Error("GLRT false-alarm probability must lie in (0, 1)");
  if (!(sigma > 0.0)) throw Error("GLRT sigma must be positive");
}

double glrt_threshold(double sigma, std::size_t n, double p_fa) {
  if (n == 0) throw Error("GLRT window must hold at least one sample");
  return std::sqrt(sigma * sigma / static_cast<double>(n)) * normal_tail_inverse(p_fa);
}

GlrtOutput glrt_detect(std::span<const double> x, const GlrtConfig& cfg) {
  cfg.validate();
  if (x.empty()) throw Error("GLRT needs at least one residual");
  GlrtOutput out;
  out.score.resize(x.size());
  out.n.resize(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t n = std::min(t + 1, cfg.window);
    double sum = 0.0;
    for (std::size_t j = t + 1 - n; j <= t; ++j) sum += x[j];
    out.n[t] = n;
    out.score[t] = sum / static_cast<double>(n);
  }
  out.decision = glrt_decisions(out, cfg.sigma, cfg.p_fa);
  return out;
}

std::vector<int> glrt_decisions(const GlrtOutput& out, double sigma, double p_fa) {
  std::vector<int> decision(out.score.size());
  for (std::size_t t = 0; t < out.score.size(); ++t)
    decision[t] = out.score[t] > glrt_threshold(sigma, out.n[t], p_fa) ? 1 : 0;
  return decision;
}

void CusumConfig::validate() const {
  if (!(drift >= 0.0)) throw Error("CUSUM drift must be non-negative");
  if (!(threshold > 0.0)) throw Error("CUSUM threshold must be positive");
}

CusumOutput cusum_detect(std::span<const double> x, const CusumConfig& cfg) {
  cfg.validate();
  if (x.empty()) throw Error("CUSUM needs at least one residual");
  CusumOutput out;
  out.g.resize(x.size());
  out.alarm.assign(x.size(), 0);
  out.interval.assign(x.size(), 0);
  double g = 0.0;
  long long last_change = -1;
  for (std::size_t t = 0; t < x.size(); ++t) {
    g = std::max(0.0, g + x[t] - cfg.drift);
    out.g[t] = g;
    if (g == 0.0) {
      out.change_times.push_back(t);
      last_change = static_cast<long long>(t);
    } else if (g > cfg.threshold) {
      out.alarm[t] = 1;
      out.alarm_times.push_back(t);
      for (auto s = static_cast<std::size_t>(last_change + 1); s <= t; ++s) out.interval[s] = 1;
      g = 0.0;
      last_change = static_cast<long long>(t);
    }
  }
  return out;
}

} // namespace gridloop
