#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gridloop {

struct GlrtConfig {
  std::size_t window = 24;
  double p_fa = 0.05;
  double sigma = 1.0;

  void validate() const;
};

/// gamma' = sqrt(sigma^2 / n) * Q^{-1}(p_fa). Infinite at p_fa = 0 or 1.
double glrt_threshold(double sigma, std::size_t n, double p_fa);

struct GlrtOutput {
  std::vector<double> score;    // mean of the last min(t + 1, window) residuals
  std::vector<std::size_t> n;   // samples in that window
  std::vector<int> decision;    // score > glrt_threshold(sigma, n, p_fa)
};

/// Windowed mean-shift GLRT against a zero-mean Gaussian with known sigma.
GlrtOutput glrt_detect(std::span<const double> x, const GlrtConfig& cfg);

/// Re-thresholds existing scores at another false-alarm probability.
std::vector<int> glrt_decisions(const GlrtOutput& out, double sigma, double p_fa);

struct CusumConfig {
  double drift = 0.5;     // k
  double threshold = 2.0; // h

  static CusumConfig from_sigma(double sigma, double drift_sigmas = 0.5, double threshold_sigmas = 2.0) {
    return {drift_sigmas * sigma, threshold_sigmas * sigma};
  }
  void validate() const;
};

struct CusumOutput {
  std::vector<double> g;                  // statistic at t before any reset
  std::vector<int> alarm;                 // 1 where g_t > h (the state is then reset to 0)
  std::vector<int> interval;              // 1 on (t_c, t_a] for every alarm t_a
  std::vector<std::size_t> change_times;  // t with g_t = 0
  std::vector<std::size_t> alarm_times;
};

/// One-sided CUSUM: g_t = max(0, g_{t-1} + x_t - k); alarm and reset when g_t > h.
CusumOutput cusum_detect(std::span<const double> x, const CusumConfig& cfg);

} // namespace gridloop
