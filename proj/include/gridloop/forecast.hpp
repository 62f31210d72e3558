#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gridloop {

enum class ForecasterKind { naive, seasonal_naive, seasonal_ar };

ForecasterKind parse_forecaster_kind(const std::string& name);
std::string to_string(ForecasterKind kind);

struct ForecasterSpec {
  ForecasterKind kind = ForecasterKind::seasonal_ar;
  std::size_t ar_order = 2;
  std::size_t season = 24;
};

inline constexpr std::size_t kSeason = 24;
/// Lower bound applied to the training residual standard deviation.
inline constexpr double kSigmaFloor = 1e-6;

/// Naive holds the last value; seasonal repeats the last `kSeason` values.
std::vector<double> persistence_forecast(std::span<const double> history, std::size_t horizon, ForecasterKind kind);

/**
 * Seasonal-difference + AR(p) filter.
 *
 * d_t = y_t - y_{t-24}; d_t = sum_j phi_j d_{t-j} + e_t with phi fitted by
 * conditional least squares. When the lagged design is rank deficient the
 * order is reduced one step at a time, down to 0 (seasonal persistence).
 */
class SeasonalArModel {
public:
  static SeasonalArModel fit(std::span<const double> train, const ForecasterSpec& spec = {});

  /// Forecast `horizon` steps past the end of the training series.
  std::vector<double> forecast(std::size_t horizon) const;
  /// Same recursion, continuing an arbitrary history (at least 24 + order values).
  std::vector<double> forecast_from(std::span<const double> history, std::size_t horizon) const;
  double one_step(std::span<const double> history) const;

  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  std::size_t order() const noexcept { return coefficients_.size(); }
  std::size_t requested_order() const noexcept { return requested_order_; }
  /// Training residual std after the floor.
  double sigma() const noexcept { return sigma_; }
  double raw_sigma() const noexcept { return raw_sigma_; }
  const std::vector<double>& residuals() const noexcept { return residuals_; }
  const std::vector<std::string>& notes() const noexcept { return notes_; }

private:
  std::vector<double> history_;
  std::vector<double> coefficients_;
  std::vector<double> residuals_;
  std::vector<std::string> notes_;
  std::size_t requested_order_ = 0;
  double sigma_ = kSigmaFloor;
  double raw_sigma_ = 0.0;
};

std::vector<double> multi_step_forecast(const SeasonalArModel& model, std::size_t horizon);

/// Detector input: observation minus forecast, plus the training sigma.
struct ResidualSeries {
  std::vector<double> values;
  double sigma = kSigmaFloor;
};

ResidualSeries residuals(std::span<const double> observed, std::span<const double> forecast, double sigma);

struct JarqueBera {
  double statistic = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double p_value = 1.0; // chi-square(2) survival
};

struct QqPoint {
  double empirical = 0.0;
  double theoretical = 0.0;
};

struct Diagnostics {
  std::vector<double> acf;  // lags 0..max_lag
  std::vector<double> pacf; // lags 0..max_lag, pacf[0] = 1
  double band = 0.0;        // 1.96 / sqrt(n)
  JarqueBera jarque_bera;
  std::vector<QqPoint> qq;
};

std::vector<double> sample_acf(std::span<const double> x, std::size_t max_lag);
/// Durbin-Levinson recursion on the sample ACF.
std::vector<double> sample_pacf(std::span<const double> x, std::size_t max_lag);
JarqueBera jarque_bera(std::span<const double> x);
std::vector<QqPoint> qq_pairs(std::span<const double> x);

Diagnostics diagnostics(std::span<const double> x, std::size_t max_lag);
inline Diagnostics diagnostics(const ResidualSeries& x, std::size_t max_lag) { return diagnostics(x.values, max_lag); }

/// Writes acf.csv (lag,acf,pacf), jarque_bera.csv (stat,skew,kurtosis) and qq.csv.
void write_diagnostics(const std::filesystem::path& dir, const Diagnostics& diag);

/// Predicts Phi_t for the pricing loop from base loads Phi_0..Phi_{t-1}.
class BaseLoadForecaster {
public:
  virtual ~BaseLoadForecaster() = default;
  virtual double predict(std::span<const double> history, std::size_t t) const = 0;
  virtual std::size_t min_history() const noexcept = 0;
};

class NaiveForecaster final : public BaseLoadForecaster {
public:
  double predict(std::span<const double> history, std::size_t t) const override;
  std::size_t min_history() const noexcept override { return 1; }
};

class SeasonalNaiveForecaster final : public BaseLoadForecaster {
public:
  double predict(std::span<const double> history, std::size_t t) const override;
  std::size_t min_history() const noexcept override { return kSeason; }
};

class SeasonalArForecaster final : public BaseLoadForecaster {
public:
  explicit SeasonalArForecaster(SeasonalArModel model) : model_(std::move(model)) {}
  double predict(std::span<const double> history, std::size_t t) const override;
  std::size_t min_history() const noexcept override { return kSeason + model_.order(); }

private:
  SeasonalArModel model_;
};

/// Knows the true base load; used for identity checks.
class OracleForecaster final : public BaseLoadForecaster {
public:
  explicit OracleForecaster(std::vector<double> truth) : truth_(std::move(truth)) {}
  double predict(std::span<const double> history, std::size_t t) const override;
  std::size_t min_history() const noexcept override { return 0; }

private:
  std::vector<double> truth_;
};

std::unique_ptr<BaseLoadForecaster> make_persistence_forecaster(ForecasterKind kind);

} // namespace gridloop
