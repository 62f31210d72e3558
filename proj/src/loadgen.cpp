#include "gridloop/loadgen.hpp"

#include "gridloop/csv.hpp"
#include "gridloop/error.hpp"
#include "gridloop/rng.hpp"

#include <cmath>
#include <string>

namespace gridloop {

double Microgrid::base_load(std::size_t t) const {
  double sum = 0.0;
  for (const auto& h : homes) sum += h.values[t];
  return sum;
}

LoadSeries block_bootstrap(const LoadSeries& tmpl, const BootstrapConfig& cfg, std::uint64_t stream_key) {
  if (cfg.block_len == 0) throw Error("block length must be at least 1");
  if (cfg.num_days == 0) throw Error("bootstrap needs at least one block");
  if (tmpl.size() < cfg.block_len)
    throw Error(tmpl.id + ": template shorter than one block (" + std::to_string(tmpl.size()) + " < " +
                std::to_string(cfg.block_len) + ")");
  if (tmpl.size() % cfg.block_len != 0)
    throw Error(tmpl.id + ": template length " + std::to_string(tmpl.size()) + " is not a multiple of block length " +
                std::to_string(cfg.block_len));

  const std::size_t blocks = tmpl.size() / cfg.block_len;
  Stream rng(cfg.seed, stream_key);
  LoadSeries out;
  out.id = tmpl.id;
  out.values.reserve(cfg.num_days * cfg.block_len);
  for (std::size_t d = 0; d < cfg.num_days; ++d) {
    const auto first = tmpl.values.begin() + static_cast<long long>(rng.index(blocks) * cfg.block_len);
    out.values.insert(out.values.end(), first, first + static_cast<long long>(cfg.block_len));
  }
  return out;
}

Microgrid synthesize_microgrid(std::span<const LoadSeries> templates, std::size_t homes, const BootstrapConfig& cfg) {
  if (templates.empty()) throw Error("at least one template is required");
  if (homes == 0) throw Error("micro-grid needs at least one home");
  Microgrid grid;
  grid.homes.reserve(homes);
  for (std::size_t i = 0; i < homes; ++i) {
    auto series = block_bootstrap(templates[i % templates.size()], cfg, i);
    series.id = "home_" + std::to_string(i);
    grid.homes.push_back(std::move(series));
  }
  return grid;
}

void save_microgrid(const std::filesystem::path& path, const Microgrid& grid) {
  std::vector<std::string> header{"hour"};
  for (std::size_t i = 0; i < grid.size(); ++i) header.push_back("home_" + std::to_string(i));
  csv::Writer out(path, header);
  std::vector<std::string> fields(header.size());
  for (std::size_t t = 0; t < grid.hours(); ++t) {
    fields[0] = std::to_string(grid.start_hour() + static_cast<long long>(t));
    for (std::size_t i = 0; i < grid.size(); ++i) fields[i + 1] = csv::format(grid.homes[i].values[t]);
    out.row(fields);
  }
}

Microgrid load_microgrid(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  if (table.header.size() < 2 || table.header[0] != "hour")
    throw Error(table.source + ":1: expected header 'hour,home_0,...'");
  for (std::size_t i = 1; i < table.header.size(); ++i)
    if (table.header[i] != "home_" + std::to_string(i - 1))
      throw Error(table.source + ":1: expected column 'home_" + std::to_string(i - 1) + "'");
  if (table.rows.empty()) throw Error(table.source + ": no data rows");

  Microgrid grid;
  grid.homes.resize(table.header.size() - 1);
  for (std::size_t i = 0; i < grid.homes.size(); ++i) grid.homes[i].id = table.header[i + 1];
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const long long hour = csv::parse_int(table.rows[r][0], table, r);
    if (r == 0) {
      for (auto& h : grid.homes) h.start_hour = hour;
    } else if (hour != grid.start_hour() + static_cast<long long>(r)) {
      throw Error(table.source + ":" + std::to_string(table.lines[r]) + ": hours must be consecutive");
    }
    for (std::size_t i = 0; i < grid.homes.size(); ++i) {
      const double v = csv::parse_double(table.rows[r][i + 1], table, r);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw Error(table.source + ":" + std::to_string(table.lines[r]) + ": invalid reading '" + table.rows[r][i + 1] + "'");
      grid.homes[i].values.push_back(v);
    }
  }
  return grid;
}

} // namespace gridloop
