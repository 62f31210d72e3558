#include "gridloop/forecast.hpp"

#include "gridloop/csv.hpp"
#include "gridloop/error.hpp"
#include "gridloop/normal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gridloop {

ForecasterKind parse_forecaster_kind(const std::string& name) {
  if (name == "naive") return ForecasterKind::naive;
  if (name == "seasonal_naive") return ForecasterKind::seasonal_naive;
  if (name == "seasonal_ar") return ForecasterKind::seasonal_ar;
  throw Error("unknown forecaster '" + name + "'");
}

std::string to_string(ForecasterKind kind) {
  switch (kind) {
  case ForecasterKind::naive: return "naive";
  case ForecasterKind::seasonal_naive: return "seasonal_naive";
  case ForecasterKind::seasonal_ar: return "seasonal_ar";
  }
  return "?";
}

std::vector<double> persistence_forecast(std::span<const double> history, std::size_t horizon, ForecasterKind kind) {
  std::vector<double> out;
  out.reserve(horizon);
  switch (kind) {
  case ForecasterKind::naive:
    if (history.empty()) throw Error("naive forecast needs at least one observation");
    out.assign(horizon, history.back());
    break;
  case ForecasterKind::seasonal_naive: {
    if (history.size() < kSeason) throw Error("seasonal forecast needs at least 24 observations");
    const auto last_day = history.subspan(history.size() - kSeason);
    for (std::size_t h = 0; h < horizon; ++h) out.push_back(last_day[h % kSeason]);
    break;
  }
  case ForecasterKind::seasonal_ar:
    throw Error("seasonal_ar is not a persistence forecaster");
  }
  return out;
}

namespace {

double sample_std(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

} // namespace

SeasonalArModel SeasonalArModel::fit(std::span<const double> train, const ForecasterSpec& spec) {
  if (spec.season != kSeason) throw Error("season must be 24 hours");
  if (spec.ar_order > kSeason) throw Error("AR order must not exceed 24");
  if (train.size() < 3 * kSeason + spec.ar_order)
    throw Error("seasonal AR fit needs at least " + std::to_string(3 * kSeason + spec.ar_order) + " observations");

  SeasonalArModel model;
  model.history_.assign(train.begin(), train.end());
  model.requested_order_ = spec.ar_order;

  std::vector<double> diff(train.size() - kSeason);
  for (std::size_t t = kSeason; t < train.size(); ++t) diff[t - kSeason] = train[t] - train[t - kSeason];

  for (std::size_t p = spec.ar_order; p > 0; --p) {
    const std::size_t rows = diff.size() - p;
    Eigen::MatrixXd design(rows, p);
    Eigen::VectorXd target(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      target(r) = diff[r + p];
      for (std::size_t j = 0; j < p; ++j) design(r, j) = diff[r + p - 1 - j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
      model.notes_.push_back("AR(" + std::to_string(p) + ") design is singular; order reduced");
      continue;
    }
    const Eigen::VectorXd phi = qr.solve(target);
    model.coefficients_.assign(phi.data(), phi.data() + p);
    break;
  }

  const std::size_t p = model.order();
  model.residuals_.reserve(diff.size() - p);
  for (std::size_t t = p; t < diff.size(); ++t) {
    double pred = 0.0;
    for (std::size_t j = 0; j < p; ++j) pred += model.coefficients_[j] * diff[t - 1 - j];
    model.residuals_.push_back(diff[t] - pred);
  }
  model.raw_sigma_ = sample_std(model.residuals_);
  model.sigma_ = std::max(model.raw_sigma_, kSigmaFloor);
  return model;
}

std::vector<double> SeasonalArModel::forecast(std::size_t horizon) const { return forecast_from(history_, horizon); }

std::vector<double> SeasonalArModel::forecast_from(std::span<const double> history, std::size_t horizon) const {
  const std::size_t p = order();
  if (history.size() < kSeason + p)
    throw Error("seasonal AR forecast needs at least " + std::to_string(kSeason + p) + " observations");
  std::vector<double> y(history.begin(), history.end());
  // d[k] corresponds to y[k + kSeason]
  std::vector<double> d;
  d.reserve(y.size() + horizon);
  for (std::size_t t = kSeason; t < y.size(); ++t) d.push_back(y[t] - y[t - kSeason]);
  y.reserve(y.size() + horizon);

  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    double d_hat = 0.0;
    for (std::size_t j = 0; j < p; ++j) d_hat += coefficients_[j] * d[d.size() - 1 - j];
    const double y_hat = d_hat + y[y.size() - kSeason];
    d.push_back(d_hat);
    y.push_back(y_hat);
    out.push_back(y_hat);
  }
  return out;
}

double SeasonalArModel::one_step(std::span<const double> history) const {
  const std::size_t p = order();
  if (history.size() < kSeason + p)
    throw Error("seasonal AR forecast needs at least " + std::to_string(kSeason + p) + " observations");
  const std::size_t n = history.size();
  double d_hat = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t t = n - 1 - j;
    d_hat += coefficients_[j] * (history[t] - history[t - kSeason]);
  }
  return d_hat + history[n - kSeason];
}

std::vector<double> multi_step_forecast(const SeasonalArModel& model, std::size_t horizon) {
  if (horizon == 0) throw Error("forecast horizon must be at least 1");
  return model.forecast(horizon);
}

ResidualSeries residuals(std::span<const double> observed, std::span<const double> forecast, double sigma) {
  if (observed.size() != forecast.size())
    throw Error("residuals: length mismatch (" + std::to_string(observed.size()) + " observations, " +
                std::to_string(forecast.size()) + " forecasts)");
  ResidualSeries out;
  out.sigma = std::max(sigma, kSigmaFloor);
  out.values.resize(observed.size());
  for (std::size_t t = 0; t < observed.size(); ++t) out.values[t] = observed[t] - forecast[t];
  return out;
}

namespace {

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

Moments central_moments(std::span<const double> x) {
  Moments m;
  const auto n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

void require_variance(std::span<const double> x) {
  if (x.size() < 2) throw Error("degenerate residuals: fewer than two values");
  const auto m = central_moments(x);
  if (!(m.m2 > 0.0)) throw Error("degenerate residuals: zero variance");
}

} // namespace

std::vector<double> sample_acf(std::span<const double> x, std::size_t max_lag) {
  require_variance(x);
  if (max_lag >= x.size()) throw Error("ACF lag exceeds series length");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  std::vector<double> r(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = k; t < x.size(); ++t) num += (x[t] - mean) * (x[t - k] - mean);
    r[k] = num / denom;
  }
  return r;
}

std::vector<double> sample_pacf(std::span<const double> x, std::size_t max_lag) {
  const auto r = sample_acf(x, max_lag);
  std::vector<double> pacf(max_lag + 1, 0.0);
  pacf[0] = 1.0;
  std::vector<double> phi, prev;
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = r[k];
    double den = 1.0;
    for (std::size_t j = 1; j < k; ++j) {
      num -= prev[j - 1] * r[k - j];
      den -= prev[j - 1] * r[j];
    }
    const double phi_kk = num / den;
    phi.assign(k, 0.0);
    for (std::size_t j = 1; j < k; ++j) phi[j - 1] = prev[j - 1] - phi_kk * prev[k - j - 1];
    phi[k - 1] = phi_kk;
    pacf[k] = phi_kk;
    prev = phi;
  }
  return pacf;
}

JarqueBera jarque_bera(std::span<const double> x) {
  require_variance(x);
  const auto m = central_moments(x);
  JarqueBera jb;
  jb.skewness = m.m3 / std::pow(m.m2, 1.5);
  jb.kurtosis = m.m4 / (m.m2 * m.m2);
  const double excess = jb.kurtosis - 3.0;
  jb.statistic = static_cast<double>(x.size()) / 6.0 * (jb.skewness * jb.skewness + 0.25 * excess * excess);
  jb.p_value = std::exp(-0.5 * jb.statistic);
  return jb;
}

std::vector<QqPoint> qq_pairs(std::span<const double> x) {
  require_variance(x);
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
  const double sd = sample_std(sorted);
  const auto n = static_cast<double>(sorted.size());
  std::vector<QqPoint> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out[i].empirical = (sorted[i] - mean) / sd;
    out[i].theoretical = normal_quantile((static_cast<double>(i) + 0.5) / n);
  }
  return out;
}

Diagnostics diagnostics(std::span<const double> x, std::size_t max_lag) {
  if (x.size() < max_lag + 2) throw Error("diagnostics need at least max_lag + 2 residuals");
  Diagnostics d;
  d.acf = sample_acf(x, max_lag);
  d.pacf = sample_pacf(x, max_lag);
  d.band = 1.96 / std::sqrt(static_cast<double>(x.size()));
  d.jarque_bera = jarque_bera(x);
  d.qq = qq_pairs(x);
  return d;
}

void write_diagnostics(const std::filesystem::path& dir, const Diagnostics& diag) {
  {
    csv::Writer out(dir / "acf.csv", {"lag", "acf", "pacf"});
    for (std::size_t k = 0; k < diag.acf.size(); ++k)
      out.row({std::to_string(k), csv::format(diag.acf[k]), csv::format(diag.pacf[k])});
  }
  {
    csv::Writer out(dir / "jarque_bera.csv", {"stat", "skew", "kurtosis"});
    out.row({csv::format(diag.jarque_bera.statistic), csv::format(diag.jarque_bera.skewness),
             csv::format(diag.jarque_bera.kurtosis)});
  }
  csv::Writer out(dir / "qq.csv", {"empirical_q", "theoretical_q"});
  for (const auto& q : diag.qq) out.row({csv::format(q.empirical), csv::format(q.theoretical)});
}

double NaiveForecaster::predict(std::span<const double> history, std::size_t) const {
  if (history.empty()) throw Error("naive forecast needs at least one observation");
  return history.back();
}

double SeasonalNaiveForecaster::predict(std::span<const double> history, std::size_t) const {
  if (history.size() < kSeason) throw Error("seasonal forecast needs at least 24 observations");
  return history[history.size() - kSeason];
}

double SeasonalArForecaster::predict(std::span<const double> history, std::size_t) const {
  return model_.one_step(history);
}

double OracleForecaster::predict(std::span<const double>, std::size_t t) const {
  if (t >= truth_.size()) throw Error("oracle forecaster: step beyond known series");
  return truth_[t];
}

std::unique_ptr<BaseLoadForecaster> make_persistence_forecaster(ForecasterKind kind) {
  switch (kind) {
  case ForecasterKind::naive: return std::make_unique<NaiveForecaster>();
  case ForecasterKind::seasonal_naive: return std::make_unique<SeasonalNaiveForecaster>();
  case ForecasterKind::seasonal_ar: break;
  }
  throw Error("seasonal_ar forecaster must be built from a fitted model");
}

} // namespace gridloop
