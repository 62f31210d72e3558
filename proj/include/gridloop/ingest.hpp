#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace gridloop {

struct MinuteSample {
  long long minute = 0; // 0-based minute index
  double kw = 0.0;
};

/// Raw minute-resolution power readings of one template home.
struct TemplateHome {
  std::string id;
  std::vector<MinuteSample> samples; // strictly increasing minutes, kw >= 0
};

/// Hourly energy series; hour-of-day of values[k] is (start_hour + k) mod 24.
struct LoadSeries {
  std::string id;
  long long start_hour = 0;
  std::vector<double> values; // kWh, finite, >= 0

  std::size_t size() const noexcept { return values.size(); }
};

enum class TemplateFormat { minute_csv };

/// Longest run of consecutive missing minutes that is filled by linear interpolation.
inline constexpr long long kMaxInterpolatedGap = 5;

/// Energy over one bucket: period * mean(power). Requires 1..60 readings.
double resample_kw_to_kwh(std::span<const double> minutes_kw, double period_hours = 1.0);

/// Buckets minute samples by hour (minute / 60) and resamples each bucket.
LoadSeries to_hourly(const TemplateHome& home);

/// Parses a `minute,kw` file; gaps of at most kMaxInterpolatedGap minutes are interpolated.
TemplateHome load_template(const std::filesystem::path& path, TemplateFormat format = TemplateFormat::minute_csv);
void save_template(const std::filesystem::path& path, const TemplateHome& home);

LoadSeries load_hourly(const std::filesystem::path& path);
void save_hourly(const std::filesystem::path& path, const LoadSeries& series);

/// Drops leading hours up to the next midnight and trailing partial days.
LoadSeries whole_days(const LoadSeries& series, std::size_t block_len = 24);

/// Hourly templates from every `*.csv` minute file in `dir`, sorted by file name.
std::vector<LoadSeries> load_template_dir(const std::filesystem::path& dir);

/// Synthetic residential home: two-peak daily shape, log-AR(1) hourly noise and
/// a small day-level factor, rescaled so the series mean is exactly `mean_kwh`.
LoadSeries synthetic_template(std::size_t index, std::size_t days, std::uint64_t seed, double mean_kwh = 1.66);
std::vector<LoadSeries> synthetic_templates(std::size_t count, std::size_t days, std::uint64_t seed,
                                            double mean_kwh = 1.66);

} // namespace gridloop
