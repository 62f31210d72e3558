// gridloop: DSM micro-grid simulation, attack injection and detection pipeline.

#include "gridloop/attack.hpp"
#include "gridloop/error.hpp"
#include "gridloop/experiment.hpp"
#include "gridloop/feedback.hpp"
#include "gridloop/ingest.hpp"
#include "gridloop/loadgen.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace gridloop;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string templates;
};

void add_common(CLI::App* app, Common& c, bool needs_config) {
  auto* opt = app->add_option("--config", c.config, "Experiment config (JSON)");
  if (needs_config) opt->required();
  opt->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Seed (overrides GRIDLOOP_SEED and the config)");
  app->add_option("--templates", c.templates, "Directory of minute-resolution template CSVs")->check(CLI::ExistingDirectory);
}

ExperimentConfig config_from(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (!c.templates.empty()) {
    cfg.templates.synthetic = false;
    cfg.templates.dir = c.templates;
  }
  return cfg;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

/// "24:250,29:200" -> {24: 250, 29: 200}
std::map<long long, double> parse_points(const std::string& text) {
  std::map<long long, double> points;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--points", "expected hour:value pairs, got '" + item + "'");
    try {
      points[std::stoll(item.substr(0, colon))] = std::stod(item.substr(colon + 1));
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--points", "malformed pair '" + item + "'");
    }
  }
  return points;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop DSM micro-grid simulator with cyber-attack injection and detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gridloop 1.0");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Resample a minute-level kW template to hourly kWh");
  std::string ingest_in, ingest_out;
  bool ingest_whole_days = false;
  ingest->add_option("--input", ingest_in, "Template CSV (minute,kw)")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Hourly CSV (hour,kwh)")->required();
  ingest->add_flag("--whole-days", ingest_whole_days, "Trim to complete days");

  // synth
  auto* synth = app.add_subcommand("synth", "Bootstrap an N-home micro-grid from templates");
  Common synth_c;
  std::string synth_out;
  std::size_t synth_rep = 0;
  add_common(synth, synth_c, false);
  synth->add_option("--out", synth_out, "Micro-grid CSV (hour,home_0,...)")->required();
  synth->add_option("--replication", synth_rep, "Replication index used with the experiment seed");
  std::optional<std::uint64_t> synth_grid_seed;
  synth->add_option("--grid-seed", synth_grid_seed, "Bootstrap seed as recorded in summary.json (skips derivation)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run the nominal price/load loop over a micro-grid");
  Common sim_c;
  std::string sim_grid, sim_out, sim_homes;
  std::optional<double> sim_kappa;
  add_common(sim, sim_c, false);
  sim->add_option("--grid", sim_grid, "Micro-grid CSV from synth")->required()->check(CLI::ExistingFile);
  sim->add_option("--kappa", sim_kappa, "Uniform DSM participation (overrides the config)")->check(CLI::Range(0.0, 1.0));
  sim->add_option("--out", sim_out, "Trace CSV")->required();
  sim->add_option("--homes-out", sim_homes, "Optional per-home load CSV");

  // attack
  auto* atk = app.add_subcommand("attack", "Add a load attack to the last 24 hours of a trace");
  Common atk_c;
  std::string atk_trace, atk_out, atk_kind, atk_schedule, atk_points, atk_schedule_out;
  std::optional<double> atk_level, atk_step;
  add_common(atk, atk_c, false);
  atk->add_option("--trace", atk_trace, "Input trace CSV")->required()->check(CLI::ExistingFile);
  atk->add_option("--out", atk_out, "Attacked trace CSV")->required();
  atk->add_option("--kind", atk_kind, "ramp | sudden | point");
  atk->add_option("--level", atk_level, "Sudden attack level (kWh)");
  atk->add_option("--step", atk_step, "Ramp increment per hour (kWh)");
  atk->add_option("--points", atk_points, "Point attack, offset:value pairs within the final 48 hours");
  atk->add_option("--schedule", atk_schedule, "Attack schedule JSON (instead of --kind)")->check(CLI::ExistingFile);
  atk->add_option("--schedule-out", atk_schedule_out, "Write the applied schedule as JSON");

  // detect
  auto* det = app.add_subcommand("detect", "Fit detectors on the training part of a trace and score the test part");
  Common det_c;
  std::string det_trace, det_out;
  std::optional<std::size_t> det_train_hours;
  add_common(det, det_c, false);
  det->add_option("--trace", det_trace, "Attacked trace CSV")->required()->check(CLI::ExistingFile);
  det->add_option("--out", det_out, "Output directory")->required();
  det->add_option("--train-hours", det_train_hours, "Leading training rows (default: all but test_hours)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Confusion metrics, AUC and best thresholds from detector output");
  std::string ev_det, ev_roc, ev_out, ev_attack = "unknown";
  double ev_kappa = 0.0;
  ev->add_option("--detections", ev_det, "detections.csv")->required()->check(CLI::ExistingFile);
  ev->add_option("--roc", ev_roc, "roc.csv (default: next to detections.csv when present)");
  ev->add_option("--kappa", ev_kappa, "DSM participation recorded in the output");
  ev->add_option("--attack-type", ev_attack, "Attack type recorded in the output");
  ev->add_option("--out", ev_out, "metrics.json (default: stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run the full kappa x attack x replication experiment");
  Common run_c;
  std::optional<std::size_t> run_reps, run_threads;
  add_common(run, run_c, true);
  run->add_option("--out", run_c.out, "Output directory (overrides the config)");
  run->add_option("--replications", run_reps, "Replications per scenario")->check(CLI::PositiveNumber);
  run->add_option("--threads", run_threads, "Worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto series = to_hourly(load_template(ingest_in));
      if (ingest_whole_days) series = whole_days(series);
      ensure_parent(ingest_out);
      save_hourly(ingest_out, series);
      std::cout << "wrote " << series.size() << " hours to " << ingest_out << '\n';
    } else if (*synth) {
      const auto cfg = config_from(synth_c);
      cfg.validate();
      const auto seed = synth_grid_seed ? *synth_grid_seed : grid_seed(resolve_seed(synth_c.seed, cfg.seed), synth_rep);
      const auto grid = experiment_microgrid(cfg, seed);
      ensure_parent(synth_out);
      save_microgrid(synth_out, grid);
      std::cout << "wrote " << grid.size() << " homes x " << grid.hours() << " hours (grid seed " << seed << ")\n";
    } else if (*sim) {
      auto cfg = config_from(sim_c);
      const auto grid = load_microgrid(sim_grid);
      cfg.grid.homes = grid.size();
      if (cfg.grid.kappa.size() != 1 && cfg.grid.kappa.size() != grid.size())
        throw Error("config kappa has " + std::to_string(cfg.grid.kappa.size()) + " values for " +
                    std::to_string(grid.size()) + " homes");
      const auto trace = simulate_nominal(cfg, grid, sim_kappa);
      ensure_parent(sim_out);
      save_trace(sim_out, trace);
      if (!sim_homes.empty()) {
        GridConfig g = cfg.grid;
        if (sim_kappa) g.kappa = {*sim_kappa};
        const auto forecaster = make_persistence_forecaster(cfg.pricing_forecaster);
        save_home_loads(sim_homes, simulate(grid, g, *forecaster, nullptr, Injection::post_hoc, kSeason, true));
      }
      std::cout << "wrote " << trace.rows.size() << " rows to " << sim_out << '\n';
    } else if (*atk) {
      const auto cfg = config_from(atk_c);
      auto trace = load_trace(atk_trace);
      AttackSchedule schedule;
      if (!atk_schedule.empty()) {
        if (!atk_kind.empty()) throw CLI::ValidationError("--schedule", "cannot be combined with --kind");
        schedule = schedule_from_json(read_json(atk_schedule));
      } else {
        if (atk_kind.empty()) throw CLI::ValidationError("--kind", "one of --kind or --schedule is required");
        AttackSettings settings = cfg.attacks;
        if (atk_level) settings.sudden_level = *atk_level;
        if (atk_step) settings.ramp_step = *atk_step;
        if (!atk_points.empty()) settings.points = parse_points(atk_points);
        schedule = protocol_schedule(settings, parse_attack_kind(atk_kind), trace);
      }
      trace = apply_post_hoc(std::move(trace), schedule);
      ensure_parent(atk_out);
      save_trace(atk_out, trace);
      if (!atk_schedule_out.empty()) write_json(atk_schedule_out, to_json(schedule));
      std::cout << "attacked hours [" << schedule.window_start << ", " << schedule.window_end << "); "
                << trace.clamp_events << " clamped\n";
    } else if (*det) {
      const auto cfg = config_from(det_c);
      const auto trace = load_trace(det_trace);
      if (!det_train_hours && trace.rows.size() <= cfg.test_hours)
        throw Error(det_trace + ": trace has no rows before the " + std::to_string(cfg.test_hours) + " test hours");
      const std::size_t train = det_train_hours ? *det_train_hours : trace.rows.size() - cfg.test_hours;
      const auto seed = resolve_seed(det_c.seed, cfg.seed);
      const auto report = detect_trace(trace, train, cfg.detectors, cfg.attacks, seed);
      const auto table = to_table(report);
      fs::create_directories(det_out);
      save_detections(fs::path(det_out) / "detections.csv", table);
      save_roc(fs::path(det_out) / "roc.csv", table);
      write_diagnostics(det_out, report.train_diagnostics);
      for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';
      std::cout << "scored " << report.hours.size() << " hours with " << report.detectors.size() << " detectors\n";
    } else if (*ev) {
      fs::path roc = ev_roc;
      if (roc.empty()) {
        const auto sibling = fs::path(ev_det).parent_path() / "roc.csv";
        if (fs::exists(sibling)) roc = sibling;
      }
      const auto table = load_detection_table(ev_det, roc);
      const auto j = metrics_json(evaluate(table), ev_kappa, ev_attack);
      if (ev_out.empty()) std::cout << j.dump(2) << '\n';
      else write_json(ev_out, j);
    } else if (*run) {
      auto cfg = config_from(run_c);
      cfg.seed = resolve_seed(run_c.seed, cfg.seed);
      if (!run_c.out.empty()) cfg.output_dir = run_c.out;
      if (run_reps) cfg.replications = *run_reps;
      if (run_threads) cfg.threads = *run_threads;
      const auto result = run_experiment(cfg);
      std::size_t failed = 0;
      for (const auto& s : result.scenarios)
        if (!s.ok) {
          ++failed;
          std::cerr << s.name << ": " << s.error << '\n';
        }
      std::cout << result.scenarios.size() - failed << "/" << result.scenarios.size() << " scenarios completed; see "
                << (cfg.output_dir / "summary.json").string() << '\n';
      return failed == 0 ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "gridloop: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
