#include "gridloop/experiment.hpp"

#include "gridloop/csv.hpp"
#include "gridloop/error.hpp"
#include "gridloop/ingest.hpp"
#include "gridloop/normal.hpp"
#include "gridloop/rng.hpp"
#include "gridloop/sequential.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>
#include <tuple>

namespace gridloop {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(where + ": unknown key '" + key + "'");
  }
}

std::vector<double> scalar_or_array(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return csv::format(v);
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration

GridConfig grid_config_from_json(const json& j, GridConfig base) {
  check_keys(j, "grid", {"homes", "kappa", "eps_dsm", "eps_dsm_hat", "goal", "target", "lstar_floor", "forecaster"});
  GridConfig g = std::move(base);
  g.homes = j.value("homes", g.homes);
  if (j.contains("kappa")) g.kappa = scalar_or_array(j["kappa"]);
  g.eps_dsm = j.value("eps_dsm", g.eps_dsm);
  if (j.contains("eps_dsm_hat") && !j["eps_dsm_hat"].is_null()) g.eps_dsm_hat = j["eps_dsm_hat"].get<double>();
  if (j.contains("goal")) g.goal = parse_pricing_goal(j["goal"].get<std::string>());
  if (j.contains("target")) g.target = scalar_or_array(j["target"]);
  g.lstar_floor = j.value("lstar_floor", g.lstar_floor);
  return g;
}

json to_json(const GridConfig& g) {
  json j{{"homes", g.homes}, {"kappa", g.kappa},  {"eps_dsm", g.eps_dsm},         {"goal", to_string(g.goal)},
         {"target", g.target}, {"lstar_floor", g.lstar_floor}};
  j["eps_dsm_hat"] = g.eps_dsm_hat ? json(*g.eps_dsm_hat) : json(nullptr);
  return j;
}

void ExperimentConfig::validate() const {
  grid.validate();
  if (train_days < 4) throw Error("train_days must be at least 4");
  if (test_hours < 48) throw Error("test_hours must be at least 48");
  if (replications == 0) throw Error("replications must be at least 1");
  if (kappas.empty()) throw Error("kappas is empty");
  for (double k : kappas)
    if (!(k >= 0.0 && k <= 1.0)) throw Error("kappa must lie in [0, 1]");
  if (attack_types.empty()) throw Error("attack_types is empty");
  for (auto a : attack_types)
    if (a == AttackKind::custom) throw Error("experiment attack types are ramp, sudden and point");
  if (bootstrap.block_len != 24) throw Error("bootstrap block_len must be 24 for day-aligned experiments");
  if (pricing_forecaster == ForecasterKind::seasonal_ar)
    throw Error("pricing forecaster must be naive or seasonal_naive");
  if (templates.synthetic && (templates.count == 0 || templates.days == 0))
    throw Error("synthetic templates need a positive count and length");
  if (!templates.synthetic && templates.dir.empty()) throw Error("templates.dir is required when synthetic is false");
  if (detectors.sweep_points < 2) throw Error("sweep_points must be at least 2");
  if (detectors.lag == 0 || detectors.lag > train_hours()) throw Error("feature lag out of range");
  if (!(detectors.cusum_drift_sigmas >= 0.0)) throw Error("CUSUM drift must be non-negative");
  if (!(detectors.cusum_sweep_max_sigmas > 0.0)) throw Error("CUSUM sweep range must be positive");
  for (const auto& [offset, value] : attacks.points)
    if (offset < 24 || offset >= 48 || !std::isfinite(value)) throw Error("point attack offsets must lie in [24, 48)");
  if (attacks.train_points_per_day == 0 || attacks.train_points_per_day > 24)
    throw Error("train_points_per_day must lie in [1, 24]");
  if (!(attacks.train_ramp_step_min <= attacks.train_ramp_step_max) ||
      !(attacks.train_level_min <= attacks.train_level_max))
    throw Error("training attack ranges must have min <= max");
}

ExperimentConfig experiment_config_from_json(const json& j) {
  try {
    check_keys(j, "config", {"grid", "bootstrap", "templates", "detectors", "attacks", "kappas", "attack_types",
                             "train_days", "test_hours", "replications", "output_dir", "seed", "threads"});
    ExperimentConfig cfg;
    if (j.contains("grid")) {
      cfg.grid = grid_config_from_json(j["grid"]);
      if (j["grid"].contains("forecaster"))
        cfg.pricing_forecaster = parse_forecaster_kind(j["grid"]["forecaster"].get<std::string>());
    }
    if (j.contains("bootstrap")) {
      const auto& b = j["bootstrap"];
      check_keys(b, "bootstrap", {"block_len"});
      cfg.bootstrap.block_len = b.value("block_len", cfg.bootstrap.block_len);
    }
    if (j.contains("templates")) {
      const auto& t = j["templates"];
      check_keys(t, "templates", {"synthetic", "count", "days", "dir"});
      cfg.templates.synthetic = t.value("synthetic", cfg.templates.synthetic);
      cfg.templates.count = t.value("count", cfg.templates.count);
      cfg.templates.days = t.value("days", cfg.templates.days);
      cfg.templates.dir = t.value("dir", std::string{});
      if (!cfg.templates.dir.empty() && !t.contains("synthetic")) cfg.templates.synthetic = false;
    }
    if (j.contains("detectors")) {
      const auto& d = j["detectors"];
      check_keys(d, "detectors",
                 {"ar_order", "glrt_window", "cusum_drift_sigmas", "lag", "sweep_points", "cusum_sweep_max_sigmas",
                  "diagnostic_lags"});
      auto& s = cfg.detectors;
      s.ar_order = d.value("ar_order", s.ar_order);
      s.glrt_window = d.value("glrt_window", s.glrt_window);
      s.cusum_drift_sigmas = d.value("cusum_drift_sigmas", s.cusum_drift_sigmas);
      s.lag = d.value("lag", s.lag);
      s.sweep_points = d.value("sweep_points", s.sweep_points);
      s.cusum_sweep_max_sigmas = d.value("cusum_sweep_max_sigmas", s.cusum_sweep_max_sigmas);
      s.diagnostic_lags = d.value("diagnostic_lags", s.diagnostic_lags);
    }
    if (j.contains("attacks")) {
      const auto& a = j["attacks"];
      check_keys(a, "attacks",
                 {"ramp_step", "sudden_level", "points", "train_ramp_step", "train_level", "train_points_per_day"});
      auto& s = cfg.attacks;
      s.ramp_step = a.value("ramp_step", s.ramp_step);
      s.sudden_level = a.value("sudden_level", s.sudden_level);
      if (a.contains("points")) {
        s.points.clear();
        for (const auto& [key, value] : a["points"].items()) s.points[std::stoll(key)] = value.get<double>();
      }
      if (a.contains("train_ramp_step")) {
        const auto r = a["train_ramp_step"].get<std::array<double, 2>>();
        s.train_ramp_step_min = r[0];
        s.train_ramp_step_max = r[1];
      }
      if (a.contains("train_level")) {
        const auto r = a["train_level"].get<std::array<double, 2>>();
        s.train_level_min = r[0];
        s.train_level_max = r[1];
      }
      s.train_points_per_day = a.value("train_points_per_day", s.train_points_per_day);
    }
    if (j.contains("kappas")) cfg.kappas = j["kappas"].get<std::vector<double>>();
    if (j.contains("attack_types")) {
      cfg.attack_types.clear();
      for (const auto& name : j["attack_types"]) cfg.attack_types.push_back(parse_attack_kind(name.get<std::string>()));
    }
    cfg.train_days = j.value("train_days", cfg.train_days);
    cfg.test_hours = j.value("test_hours", cfg.test_hours);
    cfg.replications = j.value("replications", cfg.replications);
    cfg.output_dir = j.value("output_dir", cfg.output_dir.string());
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(std::string("config: malformed value (") + e.what() + ")");
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(path.string() + ": cannot open config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  try {
    return experiment_config_from_json(j);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

json to_json(const ExperimentConfig& cfg) {
  json grid = to_json(cfg.grid);
  grid["forecaster"] = to_string(cfg.pricing_forecaster);
  json points = json::object();
  for (const auto& [offset, value] : cfg.attacks.points) points[std::to_string(offset)] = value;
  json types = json::array();
  for (auto a : cfg.attack_types) types.push_back(to_string(a));
  const auto& d = cfg.detectors;
  const auto& a = cfg.attacks;
  return {
      {"grid", grid},
      {"bootstrap", {{"block_len", cfg.bootstrap.block_len}}},
      {"templates",
       {{"synthetic", cfg.templates.synthetic},
        {"count", cfg.templates.count},
        {"days", cfg.templates.days},
        {"dir", cfg.templates.dir.string()}}},
      {"detectors",
       {{"ar_order", d.ar_order},
        {"glrt_window", d.glrt_window},
        {"cusum_drift_sigmas", d.cusum_drift_sigmas},
        {"lag", d.lag},
        {"sweep_points", d.sweep_points},
        {"cusum_sweep_max_sigmas", d.cusum_sweep_max_sigmas},
        {"diagnostic_lags", d.diagnostic_lags}}},
      {"attacks",
       {{"ramp_step", a.ramp_step},
        {"sudden_level", a.sudden_level},
        {"points", points},
        {"train_ramp_step", {a.train_ramp_step_min, a.train_ramp_step_max}},
        {"train_level", {a.train_level_min, a.train_level_max}},
        {"train_points_per_day", a.train_points_per_day}}},
      {"kappas", cfg.kappas},
      {"attack_types", types},
      {"train_days", cfg.train_days},
      {"test_hours", cfg.test_hours},
      {"replications", cfg.replications},
      {"output_dir", cfg.output_dir.string()},
      {"seed", cfg.seed},
      {"threads", cfg.threads},
  };
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GRIDLOOP_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw Error(std::string("GRIDLOOP_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return config_seed;
}

// ---------------------------------------------------------------------------
// Pipeline stages

std::uint64_t grid_seed(std::uint64_t experiment_seed, std::size_t replication) {
  return derive_seed(experiment_seed, {0, replication});
}

std::uint64_t detect_seed(std::uint64_t experiment_seed, std::size_t replication, std::size_t kappa_index,
                          std::size_t attack_index) {
  return derive_seed(experiment_seed, {1, replication, kappa_index, attack_index});
}

std::vector<LoadSeries> experiment_templates(const ExperimentConfig& cfg, std::uint64_t grid_seed) {
  if (!cfg.templates.synthetic) return load_template_dir(cfg.templates.dir);
  return synthetic_templates(cfg.templates.count, cfg.templates.days, derive_seed(grid_seed, {0}));
}

Microgrid experiment_microgrid(const ExperimentConfig& cfg, std::uint64_t grid_seed) {
  const auto templates = experiment_templates(cfg, grid_seed);
  BootstrapConfig b = cfg.bootstrap;
  b.num_days = cfg.simulated_days();
  b.seed = grid_seed;
  return synthesize_microgrid(templates, cfg.grid.homes, b);
}

SimulationTrace simulate_nominal(const ExperimentConfig& cfg, const Microgrid& grid, std::optional<double> kappa) {
  GridConfig g = cfg.grid;
  if (kappa) g.kappa = {*kappa};
  const auto forecaster = make_persistence_forecaster(cfg.pricing_forecaster);
  return simulate(grid, g, *forecaster, nullptr, Injection::post_hoc, kSeason, false);
}

AttackSchedule protocol_schedule(const AttackSettings& attacks, AttackKind kind, long long window_start,
                                 long long window_end) {
  switch (kind) {
  case AttackKind::ramp: return make_schedule(RampParams{attacks.ramp_step}, AttackMode::load, window_start, window_end);
  case AttackKind::sudden:
    return make_schedule(SuddenParams{attacks.sudden_level}, AttackMode::load, window_start, window_end);
  case AttackKind::point: {
    PointParams p;
    const long long base = window_end - 48;
    for (const auto& [offset, value] : attacks.points) p.values[base + offset] = value;
    return make_schedule(p, AttackMode::load, window_start, window_end);
  }
  case AttackKind::custom: break;
  }
  throw Error("protocol attacks are ramp, sudden or point");
}

AttackSchedule protocol_schedule(const AttackSettings& attacks, AttackKind kind, const SimulationTrace& trace) {
  if (trace.rows.size() < 24) throw Error("trace is shorter than the 24-hour attack window");
  const long long end = trace.rows.back().hour + 1;
  return protocol_schedule(attacks, kind, end - 24, end);
}

TrainingSeries supervised_training_series(std::span<const double> train, const AttackSettings& attacks,
                                          std::uint64_t seed) {
  const std::size_t days = train.size() / 24;
  if (days < 3 || train.size() % 24 != 0) throw Error("training series must hold at least three whole days");
  TrainingSeries out;
  out.values.assign(train.begin(), train.end());
  out.labels.assign(train.size(), 0);
  out.values.reserve(2 * train.size());
  out.labels.reserve(2 * train.size());

  for (std::size_t d = 0; d < days; ++d) {
    const std::size_t part = d * 3 / days; // 0 ramp, 1 sudden, 2 point
    Stream rng(seed, d);
    std::array<double, 24> a{};
    if (part == 0) {
      const double step = rng.uniform(attacks.train_ramp_step_min, attacks.train_ramp_step_max);
      for (std::size_t h = 0; h < 24; ++h) a[h] = step * static_cast<double>(h + 1);
    } else if (part == 1) {
      const double level = rng.uniform(attacks.train_level_min, attacks.train_level_max);
      a.fill(level);
    } else {
      std::array<std::size_t, 24> hours{};
      std::iota(hours.begin(), hours.end(), std::size_t{0});
      for (std::size_t k = 0; k < attacks.train_points_per_day; ++k) {
        std::swap(hours[k], hours[k + rng.index(24 - k)]);
        a[hours[k]] = rng.uniform(attacks.train_level_min, attacks.train_level_max);
      }
    }
    for (std::size_t h = 0; h < 24; ++h) {
      out.values.push_back(apply_load_attack(train[d * 24 + h], a[h]).load);
      out.labels.push_back(a[h] != 0.0 ? 1 : 0);
    }
  }
  return out;
}

namespace {

/// One operating point of a swept detector.
struct SweepPoint {
  double threshold;
  std::vector<int> decisions;
};

DetectorResult from_sweep(std::string name, std::vector<double> scores, std::vector<SweepPoint> sweep,
                          std::span<const int> labels) {
  std::vector<RocPoint> points;
  for (const auto& s : sweep) {
    const auto m = metrics(confusion(labels, s.decisions));
    points.push_back({s.threshold, m.fpr, m.recall});
  }
  DetectorResult r;
  r.name = std::move(name);
  r.roc = roc_from_points(std::move(points));
  r.threshold = best_threshold(r.roc);
  auto it = std::find_if(sweep.begin(), sweep.end(), [&](const SweepPoint& s) { return s.threshold == r.threshold; });
  if (it != sweep.end()) r.decisions = it->decisions;
  else r.decisions.assign(labels.size(), r.threshold > 0 ? 0 : 1); // added (0,0) or (1,1) corner
  r.scores = std::move(scores);
  return r;
}

DetectorResult from_scores(std::string name, std::vector<double> scores, std::span<const int> labels) {
  DetectorResult r;
  r.name = std::move(name);
  r.roc = roc_curve(scores, labels);
  r.threshold = best_threshold(r.roc);
  r.decisions.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) r.decisions[i] = scores[i] >= r.threshold ? 1 : 0;
  r.scores = std::move(scores);
  return r;
}

} // namespace

DetectionReport detect_trace(const SimulationTrace& trace, std::size_t train_hours, const DetectorSettings& settings,
                             const AttackSettings& attacks, std::uint64_t seed) {
  const std::size_t n = trace.rows.size();
  if (train_hours >= n) throw Error("trace has no rows after the training part");
  if (train_hours < settings.lag) throw Error("training part is shorter than the feature lag");
  const auto observed = trace.observed();
  const auto labels = trace.labels();
  const std::span<const double> train(observed.data(), train_hours);
  const std::span<const double> test(observed.data() + train_hours, n - train_hours);
  for (std::size_t t = 0; t < train_hours; ++t)
    if (labels[t] != 0) throw Error("training rows of the trace must be attack-free");

  DetectionReport report;
  for (std::size_t t = train_hours; t < n; ++t) report.hours.push_back(trace.rows[t].hour);
  report.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(train_hours), labels.end());
  const std::span<const int> test_labels(report.labels);

  // Sequential detectors on forecast residuals.
  const auto model = SeasonalArModel::fit(train, {ForecasterKind::seasonal_ar, settings.ar_order, kSeason});
  report.ar_order = model.order();
  report.notes = model.notes();
  report.forecast = multi_step_forecast(model, test.size());
  report.residuals = residuals(test, report.forecast, model.sigma());
  const double sigma = report.residuals.sigma;
  report.train_diagnostics =
      diagnostics(model.residuals(), std::min(settings.diagnostic_lags, model.residuals().size() - 2));

  const auto& x = report.residuals.values;
  const std::size_t grid = settings.sweep_points;

  const auto glrt = glrt_detect(x, {settings.glrt_window, 0.5, sigma});
  std::vector<double> z(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) z[t] = glrt.score[t] / std::sqrt(sigma * sigma / static_cast<double>(glrt.n[t]));
  std::vector<SweepPoint> glrt_sweep;
  for (std::size_t j = 0; j < grid; ++j) {
    const double p = static_cast<double>(j) / static_cast<double>(grid - 1);
    glrt_sweep.push_back({normal_tail_inverse(p), glrt_decisions(glrt, sigma, p)});
  }

  const double drift = settings.cusum_drift_sigmas * sigma;
  std::vector<SweepPoint> alarm_sweep, interval_sweep;
  std::vector<double> h_grid;
  std::vector<CusumOutput> cusum_runs;
  for (std::size_t j = 0; j < grid; ++j) {
    const double h = settings.cusum_sweep_max_sigmas * sigma * static_cast<double>(j) / static_cast<double>(grid - 1);
    // h = 0 means "alarm whenever g > 0"; the smallest positive double keeps the config valid
    auto run = cusum_detect(x, {drift, std::max(h, std::numeric_limits<double>::denorm_min())});
    h_grid.push_back(h);
    alarm_sweep.push_back({h, run.alarm});
    interval_sweep.push_back({h, run.interval});
    cusum_runs.push_back(std::move(run));
  }
  auto g_at = [&](double h) {
    for (std::size_t j = 0; j < grid; ++j)
      if (h_grid[j] == h) return cusum_runs[j].g;
    return std::vector<double>(x.size(), 0.0);
  };

  // Supervised detectors on lagged observed load.
  const auto training = supervised_training_series(train, attacks, derive_seed(seed, {0}));
  const auto train_set = make_features(training.values, training.labels, settings.lag);
  const std::span<const double> test_window(observed.data() + train_hours - settings.lag,
                                            test.size() + settings.lag);
  const std::span<const int> test_window_labels(labels.data() + train_hours - settings.lag,
                                                test.size() + settings.lag);
  const auto test_set = make_features(test_window, test_window_labels, settings.lag);

  const std::array<ClassifierKind, 3> kinds{ClassifierKind::logistic_regression, ClassifierKind::gaussian_nb,
                                            ClassifierKind::random_forest};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    const auto model_k = train_classifier(train_set, kinds[k], derive_seed(seed, {1, k}));
    for (const auto& w : model_k->warnings()) report.notes.push_back(to_string(kinds[k]) + ": " + w);
    report.detectors.push_back(from_scores(to_string(kinds[k]), model_k->predict_scores(test_set.features), test_labels));
  }

  report.detectors.push_back(from_sweep("glrt", z, std::move(glrt_sweep), test_labels));
  auto cusum = from_sweep("cusum", {}, std::move(alarm_sweep), test_labels);
  cusum.scores = g_at(cusum.threshold);
  report.detectors.push_back(std::move(cusum));
  auto interval = from_sweep("cusum_interval", {}, std::move(interval_sweep), test_labels);
  interval.scores = g_at(interval.threshold);
  report.detectors.push_back(std::move(interval));
  return report;
}

// ---------------------------------------------------------------------------
// Detection files and evaluation

DetectionTable to_table(const DetectionReport& report) {
  DetectionTable table;
  for (const auto& d : report.detectors) {
    for (std::size_t t = 0; t < report.hours.size(); ++t)
      table.detections.push_back({report.hours[t], d.name, d.scores[t], d.decisions[t], report.labels[t]});
    for (const auto& p : d.roc.points) table.roc.push_back({d.name, p});
  }
  return table;
}

void save_detections(const std::filesystem::path& path, const DetectionTable& table) {
  csv::Writer out(path, {"hour", "detector", "score", "decision", "label"});
  for (const auto& r : table.detections)
    out.row({std::to_string(r.hour), r.detector, csv::format(r.score), std::to_string(r.decision),
             std::to_string(r.label)});
}

void save_roc(const std::filesystem::path& path, const DetectionTable& table) {
  csv::Writer out(path, {"detector", "threshold", "fpr", "tpr"});
  for (const auto& r : table.roc)
    out.row({r.detector, csv::format(r.point.threshold), csv::format(r.point.fpr), csv::format(r.point.tpr)});
}

DetectionTable load_detection_table(const std::filesystem::path& detections, const std::filesystem::path& roc) {
  DetectionTable table;
  {
    const auto t = csv::read(detections);
    csv::expect_header(t, {"hour", "detector", "score", "decision", "label"});
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& f = t.rows[i];
      DetectionRow r{csv::parse_int(f[0], t, i), f[1], csv::parse_double(f[2], t, i),
                     static_cast<int>(csv::parse_int(f[3], t, i)), static_cast<int>(csv::parse_int(f[4], t, i))};
      if ((r.decision != 0 && r.decision != 1) || (r.label != 0 && r.label != 1))
        throw Error(t.source + ":" + std::to_string(t.lines[i]) + ": decision and label must be 0 or 1");
      table.detections.push_back(std::move(r));
    }
  }
  if (!roc.empty()) {
    const auto t = csv::read(roc);
    csv::expect_header(t, {"detector", "threshold", "fpr", "tpr"});
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const auto& f = t.rows[i];
      table.roc.push_back(
          {f[0], {csv::parse_double(f[1], t, i), csv::parse_double(f[2], t, i), csv::parse_double(f[3], t, i)}});
    }
  }
  return table;
}

std::vector<DetectorMetrics> evaluate(const DetectionTable& table) {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> decisions; // labels, decisions
  std::map<std::string, std::vector<double>> scores;
  for (const auto& r : table.detections) {
    if (!decisions.count(r.detector)) order.push_back(r.detector);
    decisions[r.detector].first.push_back(r.label);
    decisions[r.detector].second.push_back(r.decision);
    scores[r.detector].push_back(r.score);
  }
  std::map<std::string, std::vector<RocPoint>> curves;
  for (const auto& r : table.roc) curves[r.detector].push_back(r.point);

  std::vector<DetectorMetrics> out;
  for (const auto& name : order) {
    const auto& [labels, flags] = decisions[name];
    DetectorMetrics m;
    m.detector = name;
    m.counts = confusion(labels, flags);
    m.metrics = metrics(m.counts);
    RocCurve roc;
    if (auto it = curves.find(name); it != curves.end()) {
      roc.points = it->second;
      roc.auc = trapezoid_auc(roc.points);
    } else {
      roc = roc_curve(scores[name], labels);
    }
    m.auc = roc.auc;
    m.best_threshold = best_threshold(roc);
    out.push_back(std::move(m));
  }
  return out;
}

json metrics_json(const std::vector<DetectorMetrics>& metrics, double kappa, const std::string& attack_type) {
  json out = json::array();
  for (const auto& m : metrics) {
    json undefined = json::array();
    if (!m.metrics.precision_defined) undefined.push_back("precision");
    if (!m.metrics.recall_defined) undefined.push_back("recall");
    if (!m.metrics.fpr_defined) undefined.push_back("fpr");
    out.push_back({{"detector", m.detector},
                   {"kappa", kappa},
                   {"attack_type", attack_type},
                   {"accuracy", m.metrics.accuracy},
                   {"precision", m.metrics.precision_defined ? json(m.metrics.precision) : json(nullptr)},
                   {"recall", m.metrics.recall_defined ? json(m.metrics.recall) : json(nullptr)},
                   {"fpr", m.metrics.fpr_defined ? json(m.metrics.fpr) : json(nullptr)},
                   {"auc", m.auc},
                   {"best_threshold", number_or_string(m.best_threshold)},
                   {"undefined", undefined},
                   {"tp", m.counts.tp},
                   {"tn", m.counts.tn},
                   {"fp", m.counts.fp},
                   {"fn", m.counts.fn}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment driver

bool ExperimentResult::all_ok() const noexcept {
  return std::all_of(scenarios.begin(), scenarios.end(), [](const ScenarioResult& s) { return s.ok; });
}

std::string scenario_name(double kappa, AttackKind attack, std::size_t replication) {
  char rep[16];
  std::snprintf(rep, sizeof rep, "%03zu", replication);
  return "kappa" + csv::format(kappa) + "_" + to_string(attack) + "_rep" + rep;
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(path.string() + ": write failed");
}

void run_scenario(const ExperimentConfig& cfg, ScenarioResult& s) {
  const auto dir = cfg.output_dir / s.name;
  std::filesystem::create_directories(dir);

  const auto grid = experiment_microgrid(cfg, s.grid_seed);
  const auto nominal = simulate_nominal(cfg, grid, s.kappa);
  const auto schedule = protocol_schedule(cfg.attacks, s.attack, nominal);
  const auto trace = apply_post_hoc(nominal, schedule);
  s.clamp_events = trace.clamp_events;

  const auto report = detect_trace(trace, cfg.train_hours(), cfg.detectors, cfg.attacks, s.detect_seed);
  const auto table = to_table(report);
  s.metrics = evaluate(table);

  save_trace(dir / "trace.csv", trace);
  write_json(dir / "attack.json", to_json(schedule));
  save_detections(dir / "detections.csv", table);
  save_roc(dir / "roc.csv", table);
  write_json(dir / "metrics.json", metrics_json(s.metrics, s.kappa, to_string(s.attack)));
  write_diagnostics(dir, report.train_diagnostics);
  s.files = {"trace.csv",   "attack.json", "detections.csv", "roc.csv",
             "metrics.json", "acf.csv",    "jarque_bera.csv", "qq.csv"};
  for (auto& f : s.files) f = s.name + "/" + f;
}

json summary_table(const ExperimentConfig& cfg, const std::vector<ScenarioResult>& scenarios) {
  std::vector<std::string> detectors;
  std::map<std::tuple<std::string, std::string, double, std::string>, std::vector<double>> cells;
  for (const auto& s : scenarios) {
    if (!s.ok) continue;
    for (const auto& m : s.metrics) {
      if (std::find(detectors.begin(), detectors.end(), m.detector) == detectors.end())
        detectors.push_back(m.detector);
      const std::string attack = to_string(s.attack);
      auto add = [&](const char* metric, double v, bool defined) {
        if (defined) cells[{m.detector, attack, s.kappa, metric}].push_back(v);
      };
      add("accuracy", m.metrics.accuracy, true);
      add("precision", m.metrics.precision, m.metrics.precision_defined);
      add("recall", m.metrics.recall, m.metrics.recall_defined);
      add("fpr", m.metrics.fpr, m.metrics.fpr_defined);
      add("auc", m.auc, true);
    }
  }
  json rows = json::array();
  for (const auto& d : detectors)
    for (auto attack : cfg.attack_types)
      for (double kappa : cfg.kappas)
        for (const char* metric : {"accuracy", "precision", "recall", "fpr", "auc"}) {
          const auto it = cells.find({d, to_string(attack), kappa, metric});
          const std::size_t n = it == cells.end() ? 0 : it->second.size();
          double mean = std::numeric_limits<double>::quiet_NaN(), sd = mean;
          if (n > 0) {
            const auto& v = it->second;
            mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
          }
          rows.push_back({{"detector", d},
                          {"attack_type", to_string(attack)},
                          {"kappa", kappa},
                          {"metric", metric},
                          {"mean", n ? json(mean) : json(nullptr)},
                          {"std", n ? json(sd) : json(nullptr)},
                          {"n", n}});
        }
  return rows;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  {
    std::set<std::string> seen;
    for (double k : cfg.kappas)
      if (!seen.insert(csv::format(k)).second) throw Error("kappas contains a duplicate value");
    seen.clear();
    for (auto a : cfg.attack_types)
      if (!seen.insert(to_string(a)).second) throw Error("attack_types contains a duplicate");
  }
  std::filesystem::create_directories(cfg.output_dir);

  ExperimentResult result;
  for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki)
    for (std::size_t ai = 0; ai < cfg.attack_types.size(); ++ai)
      for (std::size_t r = 0; r < cfg.replications; ++r) {
        ScenarioResult s;
        s.kappa = cfg.kappas[ki];
        s.attack = cfg.attack_types[ai];
        s.replication = r;
        s.name = scenario_name(s.kappa, s.attack, r);
        s.grid_seed = grid_seed(cfg.seed, r);
        s.detect_seed = detect_seed(cfg.seed, r, ki, ai);
        result.scenarios.push_back(std::move(s));
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.scenarios.size(); i = next++) {
      auto& s = result.scenarios[i];
      try {
        run_scenario(cfg, s);
        s.ok = true;
      } catch (const std::exception& e) {
        s.ok = false;
        s.error = e.what();
        s.files.clear();
        s.metrics.clear();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, result.scenarios.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json scenarios = json::array();
  for (const auto& s : result.scenarios) {
    json e{{"name", s.name},
           {"kappa", s.kappa},
           {"attack_type", to_string(s.attack)},
           {"replication", s.replication},
           {"grid_seed", s.grid_seed},
           {"detect_seed", s.detect_seed},
           {"status", s.ok ? "ok" : "failed"},
           {"clamp_events", s.clamp_events},
           {"files", s.files}};
    if (!s.ok) e["error"] = s.error;
    scenarios.push_back(std::move(e));
  }
  const auto table = summary_table(cfg, result.scenarios);
  json config = to_json(cfg);
  write_json(cfg.output_dir / "summary.json",
             {{"config", config}, {"all_ok", result.all_ok()}, {"scenarios", scenarios}, {"table", table}});

  csv::Writer out(cfg.output_dir / "summary.csv", {"detector", "attack_type", "kappa", "metric", "mean", "std", "n"});
  for (const auto& row : table) {
    auto num = [](const json& v) { return v.is_null() ? std::string("nan") : csv::format(v.get<double>()); };
    out.row({row["detector"].get<std::string>(), row["attack_type"].get<std::string>(),
             csv::format(row["kappa"].get<double>()), row["metric"].get<std::string>(), num(row["mean"]),
             num(row["std"]), std::to_string(row["n"].get<std::size_t>())});
  }
  return result;
}

} // namespace gridloop
