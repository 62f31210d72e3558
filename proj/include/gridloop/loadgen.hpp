#pragma once

#include "gridloop/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gridloop {

struct BootstrapConfig {
  std::size_t block_len = 24;
  std::size_t num_days = 1;
  std::uint64_t seed = 0;
};

/// Base loads phi_{t,i} of N homes. Preferences, household elasticity and the
/// retail price level are absorbed into these series; they have no separate
/// runtime representation.
struct Microgrid {
  std::vector<LoadSeries> homes;

  std::size_t size() const noexcept { return homes.size(); }
  std::size_t hours() const noexcept { return homes.empty() ? 0 : homes.front().size(); }
  long long start_hour() const noexcept { return homes.empty() ? 0 : homes.front().start_hour; }
  /// Phi_t: sum of base loads at row t.
  double base_load(std::size_t t) const;
};

/**
 * Non-overlapping block bootstrap. Output block d is a verbatim copy of
 * template block j_d with j_d drawn uniformly with replacement from
 * Stream(cfg.seed, stream_key). Output starts at hour 0.
 */
LoadSeries block_bootstrap(const LoadSeries& tmpl, const BootstrapConfig& cfg, std::uint64_t stream_key = 0);

/// Home i bootstraps template (i mod templates.size()) with stream key i.
Microgrid synthesize_microgrid(std::span<const LoadSeries> templates, std::size_t homes, const BootstrapConfig& cfg);

void save_microgrid(const std::filesystem::path& path, const Microgrid& grid);
Microgrid load_microgrid(const std::filesystem::path& path);

} // namespace gridloop
