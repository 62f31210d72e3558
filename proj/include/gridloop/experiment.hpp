#pragma once

#include "gridloop/attack.hpp"
#include "gridloop/classifier.hpp"
#include "gridloop/eval.hpp"
#include "gridloop/feedback.hpp"
#include "gridloop/forecast.hpp"
#include "gridloop/loadgen.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridloop {

struct TemplateSource {
  bool synthetic = true;
  std::size_t count = 7;  // synthetic homes
  std::size_t days = 56;  // synthetic history length
  std::filesystem::path dir;
};

struct DetectorSettings {
  std::size_t ar_order = 2;
  std::size_t glrt_window = 24;
  double cusum_drift_sigmas = 0.5;
  std::size_t lag = kFeatureLag;
  std::size_t sweep_points = 101;
  double cusum_sweep_max_sigmas = 6.0;
  std::size_t diagnostic_lags = 24;
};

/// Attack magnitudes: the test waveform and the ranges drawn for the supervised training copy.
/// Point hours are offsets into the final 48 hours of the attacked series.
struct AttackSettings {
  double ramp_step = 5.0;
  double sudden_level = 150.0;
  std::map<long long, double> points{{24, 250.0}, {29, 200.0}, {34, 300.0}, {37, 100.0}, {46, 150.0}};
  double train_ramp_step_min = 2.0, train_ramp_step_max = 10.0;
  double train_level_min = 50.0, train_level_max = 300.0;
  std::size_t train_points_per_day = 5;
};

struct ExperimentConfig {
  GridConfig grid;
  ForecasterKind pricing_forecaster = ForecasterKind::naive;
  BootstrapConfig bootstrap;
  TemplateSource templates;
  DetectorSettings detectors;
  AttackSettings attacks;
  std::vector<double> kappas{0.1, 0.9};
  std::vector<AttackKind> attack_types{AttackKind::ramp, AttackKind::sudden, AttackKind::point};
  std::size_t train_days = 28;
  std::size_t test_hours = 48;
  std::size_t replications = 1;
  std::filesystem::path output_dir = "gridloop_out";
  std::uint64_t seed = 0;
  std::size_t threads = 0; // 0: hardware concurrency

  void validate() const;
  /// Hours simulated per scenario, including the one warm-up day before training.
  std::size_t simulated_days() const noexcept { return 1 + train_days + (test_hours + 23) / 24; }
  std::size_t train_hours() const noexcept { return train_days * 24; }
};

GridConfig grid_config_from_json(const nlohmann::json& j, GridConfig base = {});
nlohmann::json to_json(const GridConfig& grid);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Seed precedence: explicit flag, then GRIDLOOP_SEED, then the config value.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed);

// ---------------------------------------------------------------------------
// Pipeline stages. run_experiment and the CLI subcommands share these, so
// composing the subcommands reproduces a scenario exactly.

std::uint64_t grid_seed(std::uint64_t experiment_seed, std::size_t replication);
std::uint64_t detect_seed(std::uint64_t experiment_seed, std::size_t replication, std::size_t kappa_index,
                          std::size_t attack_index);

/// Template files from cfg.templates.dir, or synthetic homes generated from `grid_seed`.
std::vector<LoadSeries> experiment_templates(const ExperimentConfig& cfg, std::uint64_t grid_seed);

/// N homes over simulated_days() days, bootstrapped with `grid_seed`.
Microgrid experiment_microgrid(const ExperimentConfig& cfg, std::uint64_t grid_seed);

/// Nominal closed-loop run starting after the warm-up day with the configured grid (uniform kappa overrides it).
SimulationTrace simulate_nominal(const ExperimentConfig& cfg, const Microgrid& grid, std::optional<double> kappa = {});

/// Load-mode test attack on [window_start, window_end) using the configured magnitudes.
AttackSchedule protocol_schedule(const AttackSettings& attacks, AttackKind kind, long long window_start,
                                 long long window_end);
/// The protocol attack on the last 24 rows of a trace.
AttackSchedule protocol_schedule(const AttackSettings& attacks, AttackKind kind, const SimulationTrace& trace);

/// Nominal training series followed by an attacked copy (ramp, sudden, point thirds, one attack per day).
struct TrainingSeries {
  std::vector<double> values;
  std::vector<int> labels;
};

TrainingSeries supervised_training_series(std::span<const double> train, const AttackSettings& attacks,
                                          std::uint64_t seed);

struct DetectorResult {
  std::string name;
  std::vector<double> scores;
  std::vector<int> decisions;
  RocCurve roc;
  double threshold = 0.0;
};

struct DetectionReport {
  std::vector<long long> hours;
  std::vector<int> labels;
  ResidualSeries residuals;
  std::vector<double> forecast;
  Diagnostics train_diagnostics;
  std::size_t ar_order = 0;
  std::vector<std::string> notes;
  std::vector<DetectorResult> detectors;
};

/**
 * Fits every detector on the first `train_hours` rows of the trace and scores
 * the rest. Decisions are taken at each detector's best ROC threshold.
 */
DetectionReport detect_trace(const SimulationTrace& trace, std::size_t train_hours, const DetectorSettings& settings,
                             const AttackSettings& attacks, std::uint64_t seed);

// Files shared by `detect` and `evaluate`.
struct DetectionRow {
  long long hour = 0;
  std::string detector;
  double score = 0.0;
  int decision = 0;
  int label = 0;
};

struct RocRow {
  std::string detector;
  RocPoint point;
};

struct DetectionTable {
  std::vector<DetectionRow> detections;
  std::vector<RocRow> roc;
};

DetectionTable to_table(const DetectionReport& report);
void save_detections(const std::filesystem::path& path, const DetectionTable& table);
void save_roc(const std::filesystem::path& path, const DetectionTable& table);
DetectionTable load_detection_table(const std::filesystem::path& detections, const std::filesystem::path& roc);

struct DetectorMetrics {
  std::string detector;
  ConfusionCounts counts;
  Metrics metrics;
  double auc = 0.0;
  double best_threshold = 0.0;
};

/// Confusion metrics from the emitted decisions, AUC and best threshold from the emitted ROC points.
std::vector<DetectorMetrics> evaluate(const DetectionTable& table);
nlohmann::json metrics_json(const std::vector<DetectorMetrics>& metrics, double kappa, const std::string& attack_type);

// ---------------------------------------------------------------------------

struct ScenarioResult {
  std::string name;
  double kappa = 0.0;
  AttackKind attack = AttackKind::sudden;
  std::size_t replication = 0;
  std::uint64_t grid_seed = 0;
  std::uint64_t detect_seed = 0;
  bool ok = false;
  std::string error;
  std::size_t clamp_events = 0;
  std::vector<std::string> files;
  std::vector<DetectorMetrics> metrics;
};

struct ExperimentResult {
  std::vector<ScenarioResult> scenarios;
  bool all_ok() const noexcept;
};

std::string scenario_name(double kappa, AttackKind attack, std::size_t replication);

/// Runs every (kappa, attack, replication) scenario and writes the artifact tree.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

} // namespace gridloop
