#include "gridloop/ingest.hpp"

#include "gridloop/csv.hpp"
#include "gridloop/error.hpp"
#include "gridloop/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace gridloop {

double resample_kw_to_kwh(std::span<const double> minutes_kw, double period_hours) {
  if (minutes_kw.empty()) throw Error("unfillable gap: empty hour bucket");
  if (minutes_kw.size() > 60) throw Error("hour bucket holds more than 60 readings");
  double sum = 0.0;
  for (double kw : minutes_kw) {
    if (!std::isfinite(kw) || kw < 0.0) throw Error("invalid reading: power must be finite and non-negative");
    sum += kw;
  }
  return period_hours * (sum / static_cast<double>(minutes_kw.size()));
}

LoadSeries to_hourly(const TemplateHome& home) {
  if (home.samples.empty()) throw Error(home.id + ": template has no samples");
  auto hour_of = [](long long minute) { return minute >= 0 ? minute / 60 : (minute - 59) / 60; };
  LoadSeries out;
  out.id = home.id;
  out.start_hour = hour_of(home.samples.front().minute);
  const long long last_hour = hour_of(home.samples.back().minute);
  out.values.reserve(static_cast<std::size_t>(last_hour - out.start_hour + 1));

  std::vector<double> bucket;
  std::size_t i = 0;
  for (long long h = out.start_hour; h <= last_hour; ++h) {
    bucket.clear();
    while (i < home.samples.size() && hour_of(home.samples[i].minute) == h) bucket.push_back(home.samples[i++].kw);
    if (bucket.empty()) throw Error(home.id + ": unfillable gap: no readings in hour " + std::to_string(h));
    out.values.push_back(resample_kw_to_kwh(bucket));
  }
  return out;
}

TemplateHome load_template(const std::filesystem::path& path, TemplateFormat format) {
  if (format != TemplateFormat::minute_csv) throw Error("unsupported template format");
  const auto table = csv::read(path);
  csv::expect_header(table, {"minute", "kw"});

  TemplateHome home;
  home.id = path.stem().string();
  home.samples.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const long long minute = csv::parse_int(table.rows[r][0], table, r);
    const double kw = csv::parse_double(table.rows[r][1], table, r);
    const std::string at = table.source + ":" + std::to_string(table.lines[r]);
    if (!std::isfinite(kw) || kw < 0.0) throw Error(at + ": invalid reading '" + table.rows[r][1] + "'");
    if (!home.samples.empty()) {
      const auto prev = home.samples.back();
      if (minute <= prev.minute) throw Error(at + ": minute indices must be strictly increasing");
      const long long missing = minute - prev.minute - 1;
      if (missing > kMaxInterpolatedGap)
        throw Error(at + ": unfillable gap of " + std::to_string(missing) + " minutes");
      for (long long m = 1; m <= missing; ++m) {
        const double w = static_cast<double>(m) / static_cast<double>(missing + 1);
        home.samples.push_back({prev.minute + m, prev.kw + w * (kw - prev.kw)});
      }
    }
    home.samples.push_back({minute, kw});
  }
  if (home.samples.empty()) throw Error(table.source + ": no data rows");
  return home;
}

void save_template(const std::filesystem::path& path, const TemplateHome& home) {
  csv::Writer out(path, {"minute", "kw"});
  for (const auto& s : home.samples) out.row({std::to_string(s.minute), csv::format(s.kw)});
}

LoadSeries load_hourly(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  csv::expect_header(table, {"hour", "kwh"});
  LoadSeries out;
  out.id = path.stem().string();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const long long hour = csv::parse_int(table.rows[r][0], table, r);
    const double kwh = csv::parse_double(table.rows[r][1], table, r);
    const std::string at = table.source + ":" + std::to_string(table.lines[r]);
    if (!std::isfinite(kwh) || kwh < 0.0) throw Error(at + ": invalid reading '" + table.rows[r][1] + "'");
    if (r == 0)
      out.start_hour = hour;
    else if (hour != out.start_hour + static_cast<long long>(r))
      throw Error(at + ": hours must be consecutive");
    out.values.push_back(kwh);
  }
  if (out.values.empty()) throw Error(table.source + ": no data rows");
  return out;
}

void save_hourly(const std::filesystem::path& path, const LoadSeries& series) {
  csv::Writer out(path, {"hour", "kwh"});
  for (std::size_t k = 0; k < series.values.size(); ++k)
    out.row({std::to_string(series.start_hour + static_cast<long long>(k)), csv::format(series.values[k])});
}

LoadSeries whole_days(const LoadSeries& series, std::size_t block_len) {
  const auto len = static_cast<long long>(block_len);
  const long long offset = ((len - series.start_hour % len) % len);
  LoadSeries out{series.id, series.start_hour + offset, {}};
  if (static_cast<std::size_t>(offset) >= series.values.size()) return out;
  const std::size_t usable = (series.values.size() - static_cast<std::size_t>(offset)) / block_len * block_len;
  out.values.assign(series.values.begin() + offset, series.values.begin() + offset + static_cast<long long>(usable));
  return out;
}

std::vector<LoadSeries> load_template_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(dir.string() + ": no template files (*.csv)");
  std::vector<LoadSeries> out;
  for (const auto& f : files) out.push_back(whole_days(to_hourly(load_template(f))));
  return out;
}

namespace {

double bump(double hour, double centre, double width) {
  double d = std::fabs(hour - centre);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / width) * (d / width));
}

} // namespace

LoadSeries synthetic_template(std::size_t index, std::size_t days, std::uint64_t seed, double mean_kwh) {
  if (days == 0) throw Error("synthetic template needs at least one day");
  Stream rng(seed, index);
  const double morning_at = 7.0 + rng.uniform(-1.0, 1.0);
  const double evening_at = 19.0 + rng.uniform(-1.5, 1.5);
  const double morning_amp = 0.35 + rng.uniform(0.0, 0.2);
  const double evening_amp = 0.7 + rng.uniform(0.0, 0.3);
  const double base = 0.45 + rng.uniform(0.0, 0.1);

  std::array<double, 24> shape{};
  for (int h = 0; h < 24; ++h)
    shape[h] = base + morning_amp * bump(h, morning_at, 1.5) + evening_amp * bump(h, evening_at, 2.5);

  constexpr double kNoisePhi = 0.5;
  constexpr double kNoiseSd = 0.35;
  constexpr double kDaySd = 0.08;
  LoadSeries out;
  out.id = "synthetic_" + std::to_string(index);
  out.values.reserve(days * 24);
  double noise = kNoiseSd * rng.normal();
  for (std::size_t d = 0; d < days; ++d) {
    const double day_factor = std::exp(kDaySd * rng.normal());
    for (int h = 0; h < 24; ++h) {
      noise = kNoisePhi * noise + kNoiseSd * std::sqrt(1.0 - kNoisePhi * kNoisePhi) * rng.normal();
      out.values.push_back(shape[h] * day_factor * std::exp(noise));
    }
  }
  const double mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / static_cast<double>(out.size());
  for (auto& v : out.values) v *= mean_kwh / mean;
  return out;
}

std::vector<LoadSeries> synthetic_templates(std::size_t count, std::size_t days, std::uint64_t seed,
                                            double mean_kwh) {
  std::vector<LoadSeries> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(synthetic_template(i, days, seed, mean_kwh));
  return out;
}

} // namespace gridloop
