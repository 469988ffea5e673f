#include "driftnn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "driftnn/checkpoint.hpp"
#include "driftnn/rng.hpp"

namespace driftnn {

namespace fs = std::filesystem;

ExperimentConfig ExperimentConfig::desk() {
  ExperimentConfig c;
  c.profile = "desk";
  c.n_list = {100, 500, 2000};
  c.d_list = {1, 2};
  c.methods = {"nn", "bspline"};
  c.reps = 5;
  c.hidden = {{16, 32, 16}};
  c.s_ratios = {0.5, 0.75};
  c.restarts = 2;
  c.knots = {1, 2, 4, 8};
  c.ridges = {0.0, 1e-6, 1e-4, 1e-2};
  c.tuning = TuningMetric::OracleRisk;
  return c;
}

ExperimentConfig ExperimentConfig::paper() {
  ExperimentConfig c;
  c.profile = "paper";
  c.n_list = {100, 200, 500, 1000, 2000, 5000};
  c.d_list = {1, 2, 10, 50};
  c.methods = {"nn", "bspline"};
  c.reps = 50;
  c.hidden = {{16, 16}, {16, 32, 16}, {16, 32, 32, 16}};
  c.s_ratios = {0.25, 0.5, 0.75};
  c.knots = {1, 2, 4, 8};
  c.ridges = {0.0, 1e-6, 1e-4, 1e-2};
  c.tuning = TuningMetric::OracleRisk;
  return c;
}

const std::vector<std::string>& experiment_config_keys() {
  static const std::vector<std::string> keys = {
      "profile",        "drift.kind",      "drift.theta",      "diffusion.kind", "diffusion.scale",
      "x0.kind",        "x0.value",        "grid.T",           "grid.M",         "component",
      "sweep.N",        "sweep.d",         "sweep.methods",    "sweep.reps",     "eval.test_paths",
      "eval.valid_paths", "seed",          "nn.arch",          "nn.s_ratio",     "nn.lr",
      "nn.batch",       "nn.max_epochs",   "nn.patience",      "nn.F",           "nn.restarts",
      "nn.strict_eq4",  "mask_mode",
      "tuning_metric",  "bspline.knots",   "bspline.ridge",    "memory_cap_bytes", "workers",
      "out",            "svg",             "save_models"};
  return keys;
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv) {
  if (auto unknown = kv.unknown_keys(experiment_config_keys()); !unknown.empty()) {
    throw ConfigError("unknown config key '" + unknown.front() + "'");
  }
  const std::string profile = kv.get_string("profile", "desk");
  ExperimentConfig c;
  if (profile == "desk") {
    c = desk();
  } else if (profile == "paper") {
    c = paper();
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected desk or paper)");
  }

  c.drift_kind = kv.get_string("drift.kind", c.drift_kind);
  c.theta = kv.get_double("drift.theta", c.theta);
  c.diffusion_kind = kv.get_string("diffusion.kind", c.diffusion_kind);
  c.diffusion_scale = kv.get_double("diffusion.scale", c.diffusion_scale);
  c.x0_kind = kv.get_string("x0.kind", c.x0_kind);
  c.x0_value = kv.get_double("x0.value", c.x0_value);
  c.horizon = kv.get_double("grid.T", c.horizon);
  c.steps = kv.get_uint("grid.M", c.steps);
  c.component = kv.get_uint("component", c.component);
  c.n_list = kv.get_sizes("sweep.N", c.n_list);
  c.d_list = kv.get_sizes("sweep.d", c.d_list);
  c.methods = kv.get_strings("sweep.methods", c.methods);
  c.reps = kv.get_uint("sweep.reps", c.reps);
  c.test_paths = kv.get_uint("eval.test_paths", c.test_paths);
  c.valid_paths = kv.get_uint("eval.valid_paths", c.valid_paths);
  c.seed = kv.get_uint("seed", c.seed);
  c.hidden = kv.get_size_lists("nn.arch", c.hidden);
  c.s_ratios = kv.get_doubles("nn.s_ratio", c.s_ratios);
  c.learning_rate = kv.get_double("nn.lr", c.learning_rate);
  c.batch_size = kv.get_uint("nn.batch", c.batch_size);
  c.max_epochs = kv.get_uint("nn.max_epochs", c.max_epochs);
  c.patience = kv.get_uint("nn.patience", c.patience);
  c.clamp = kv.get_double("nn.F", c.clamp);
  c.restarts = kv.get_uint("nn.restarts", c.restarts);
  c.strict_eq4 = kv.get_bool("nn.strict_eq4", c.strict_eq4);
  c.knots = kv.get_sizes("bspline.knots", c.knots);
  c.ridges = kv.get_doubles("bspline.ridge", c.ridges);
  c.memory_cap_bytes = kv.get_double("memory_cap_bytes", c.memory_cap_bytes);
  c.workers = kv.get_uint("workers", c.workers);
  c.out_dir = kv.get_string("out", c.out_dir);
  c.svg = kv.get_bool("svg", c.svg);
  c.save_models = kv.get_bool("save_models", c.save_models);

  const std::string mask = kv.get_string("mask_mode", c.mask_mode == MaskMode::ClassExact ? "class_exact" : "domain_only");
  if (mask == "class_exact") {
    c.mask_mode = MaskMode::ClassExact;
  } else if (mask == "domain_only") {
    c.mask_mode = MaskMode::DomainOnly;
  } else {
    throw ConfigError("mask_mode must be class_exact or domain_only");
  }
  const std::string tuning =
      kv.get_string("tuning_metric", c.tuning == TuningMetric::OracleRisk ? "oracle" : "loss");
  if (tuning == "oracle") {
    c.tuning = TuningMetric::OracleRisk;
  } else if (tuning == "loss") {
    c.tuning = TuningMetric::ValidationLoss;
  } else {
    throw ConfigError("tuning_metric must be loss or oracle");
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from(KeyValueConfig::load(path));
}

void ExperimentConfig::validate() const {
  auto positive_list = [](const auto& list, const char* name) {
    if (list.empty()) throw ConfigError(std::string(name) + " must not be empty");
    for (auto v : list) {
      if (!(v > 0)) throw ConfigError(std::string(name) + " entries must be positive");
    }
  };
  positive_list(n_list, "sweep.N");
  positive_list(d_list, "sweep.d");
  if (methods.empty()) throw ConfigError("sweep.methods must not be empty");
  for (const auto& m : methods) {
    if (m != "nn" && m != "bspline") throw ConfigError("unknown method '" + m + "'");
  }
  if (reps < 2) throw ConfigError("sweep.reps must be at least 2");
  if (test_paths == 0 || valid_paths == 0) throw ConfigError("test and validation sets must be nonempty");
  if (!(horizon > 0.0) || steps == 0) throw ConfigError("grid.T and grid.M must be positive");
  if (hidden.empty()) throw ConfigError("nn.arch must not be empty");
  for (const auto& h : hidden) positive_list(h, "nn.arch");
  positive_list(s_ratios, "nn.s_ratio");
  for (double s : s_ratios) {
    if (s > 1.0) throw ConfigError("nn.s_ratio entries must lie in (0, 1]");
  }
  if (batch_size == 0) throw ConfigError("nn.batch must be positive");
  if (patience >= max_epochs) throw ConfigError("nn.patience must be below nn.max_epochs");
  if (restarts == 0) throw ConfigError("nn.restarts must be at least 1");
  if (!(learning_rate > 0.0) || !(clamp > 0.0)) throw ConfigError("nn.lr and nn.F must be positive");
  positive_list(knots, "bspline.knots");
  if (ridges.empty()) throw ConfigError("bspline.ridge must not be empty");
  for (double r : ridges) {
    if (r < 0.0) throw ConfigError("bspline.ridge entries must be nonnegative");
  }
  if (workers == 0) throw ConfigError("workers must be positive");
  if (drift_kind != "paper_example" && drift_kind != "ou" && drift_kind != "zero") {
    throw ConfigError("drift.kind must be paper_example, ou or zero");
  }
  if (diffusion_kind != "identity" && diffusion_kind != "scaled") {
    throw ConfigError("diffusion.kind must be identity or scaled");
  }
  if (x0_kind != "normal" && x0_kind != "constant") throw ConfigError("x0.kind must be normal or constant");
  if (!(theta > 0.0)) throw ConfigError("drift.theta must be positive");
  for (std::size_t d : d_list) {
    if (component < 1 || component > d) throw ConfigError("component must lie in 1..d for every d");
  }
}

DriftSpec ExperimentConfig::drift(std::size_t d) const {
  if (drift_kind == "ou") return DriftSpec::ornstein_uhlenbeck(d);
  if (drift_kind == "zero") return DriftSpec::zero(d);
  return DriftSpec::paper_example(d, theta);
}

DiffusionSpec ExperimentConfig::diffusion(std::size_t d) const {
  if (diffusion_kind == "scaled") return DiffusionSpec::scaled_identity(d, diffusion_scale);
  return DiffusionSpec::identity(d);
}

InitialLaw ExperimentConfig::initial_law(std::size_t d) const {
  if (x0_kind == "constant") return InitialLaw::constant(std::vector<double>(d, x0_value));
  return InitialLaw::standard_normal();
}

namespace {

std::uint64_t method_tag(const std::string& method) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : method) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string model_stem(const ExperimentConfig& config, const Cell& cell) {
  fs::path dir = fs::path(config.out_dir) / "models";
  fs::create_directories(dir);
  return (dir / (cell.method + "_N" + std::to_string(cell.n) + "_d" + std::to_string(cell.d) + "_r" +
                 std::to_string(cell.rep)))
      .string();
}

void run_nn(const ExperimentConfig& config, const Cell& cell, const DatasetSplit& split,
            const ScalarField& target, ExperimentRecord& rec) {
  const SampleSet train_samples = apply_mask(make_samples(split.train, split.component), config.mask_mode);
  SampleSet valid_samples;
  std::optional<RiskEvaluator> oracle;
  if (config.tuning == TuningMetric::OracleRisk) {
    oracle.emplace(split.valid, target);
  } else {
    valid_samples = apply_mask(make_samples(split.valid, split.component), config.mask_mode);
  }

  const std::uint64_t seed = method_seed(config.seed, cell.n, cell.d, cell.method, cell.rep);
  std::optional<TrainResult> best;
  std::string best_arch, best_ratio;
  for (const auto& hidden : config.hidden) {
    for (double ratio : config.s_ratios) {
      for (std::size_t restart = 0; restart < config.restarts; ++restart) {
        TrainConfig tc;
        tc.arch = Architecture::from_hidden(cell.d, hidden, !config.strict_eq4);
        tc.s_ratio = ratio;
        tc.learning_rate = config.learning_rate;
        tc.batch_size = config.batch_size;
        tc.max_epochs = config.max_epochs;
        tc.patience = config.patience;
        tc.clamp = config.clamp;
        tc.seed = restart == 0 ? seed : derive_seed(seed, {restart});
        tc.mask_mode = config.mask_mode;
        tc.metric = config.tuning;
        TrainResult result = train(tc, train_samples, valid_samples, oracle ? &*oracle : nullptr);
        if (!best || result.report.best_validation < best->report.best_validation) {
          best = std::move(result);
          best_arch = tc.arch.to_string();
          best_ratio = short_double(ratio);
        }
      }
    }
  }

  const SparseNetwork& net = best->net;
  rec.arch = best_arch;
  rec.param = best_ratio;
  rec.epochs = best->report.epochs_run;
  rec.test_error =
      empirical_risk([&net](std::span<const double> x) { return net.forward(x); }, target, split.test).value;

  if (config.save_models && !config.out_dir.empty()) {
    const std::string stem = model_stem(config, cell);
    write_checkpoint(stem + ".ckpt", net);
    write_checkpoint_meta(stem + ".json", {best_arch, seed, best->report.best_epoch,
                                           best->report.best_validation, net.budget(), net.clamp()});
  }
}

void run_bspline(const ExperimentConfig& config, const Cell& cell, const DatasetSplit& split,
                 const ScalarField& target, ExperimentRecord& rec) {
  const SampleSet train_samples = make_samples(split.train, split.component);
  SplineFitOptions options;
  options.memory_cap_bytes = config.memory_cap_bytes;

  std::optional<RiskEvaluator> oracle;
  SampleSet valid_samples;
  if (config.tuning == TuningMetric::OracleRisk) {
    oracle.emplace(split.valid, target);
  } else {
    valid_samples = make_samples(split.valid, split.component);
  }
  SplineSelection sel =
      select_knots(train_samples, valid_samples, config.knots, config.ridges, options, oracle ? &*oracle : nullptr);
  const SplineModel& model = sel.model;
  rec.arch = "ridge=" + short_double(model.ridge_used);
  rec.param = std::to_string(model.spec.knots);
  rec.test_error =
      empirical_risk([&model](std::span<const double> x) { return model.predict(x); }, target, split.test).value;

  if (config.save_models && !config.out_dir.empty()) {
    std::ofstream out(model_stem(config, cell) + ".spline", std::ios::binary);
    write_spline_model(out, model);
  }
}

}  // namespace

std::uint64_t data_seed(std::uint64_t master, std::size_t n, std::size_t d, std::size_t rep) {
  return derive_seed(master, {0xda7aULL, n, d, rep});
}

std::uint64_t method_seed(std::uint64_t master, std::size_t n, std::size_t d, const std::string& method,
                          std::size_t rep) {
  return derive_seed(master, {0x3e7dULL, n, d, method_tag(method), rep});
}

ExperimentRecord run_single(const ExperimentConfig& config, const Cell& cell) {
  ExperimentRecord rec;
  rec.method = cell.method;
  rec.n = cell.n;
  rec.d = cell.d;
  rec.seed = data_seed(config.seed, cell.n, cell.d, cell.rep);
  const auto start = std::chrono::steady_clock::now();
  try {
    if (cell.method != "nn" && cell.method != "bspline") {
      throw std::invalid_argument("unknown method '" + cell.method + "'");
    }
    if (cell.method == "bspline") {
      // Refuse before simulating anything the fit would never use.
      const SplineBasisSpec smallest(*std::min_element(config.knots.begin(), config.knots.end()), cell.d);
      const double estimate = memory_estimate(cell.n, config.steps, smallest);
      if (estimate > config.memory_cap_bytes) throw MemoryCapExceeded(estimate, config.memory_cap_bytes);
    }
    const DriftSpec drift = config.drift(cell.d);
    const DatasetSplit split =
        make_split(drift, config.diffusion(cell.d), config.grid(),
                   SplitSizes{cell.n, config.valid_paths, config.test_paths}, config.initial_law(cell.d),
                   rec.seed, config.component);
    const ScalarField target = drift_target(drift, config.component);
    if (cell.method == "nn") {
      run_nn(config, cell, split, target, rec);
    } else {
      run_bspline(config, cell, split, target, rec);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    rec.status = "failed: " + msg;
    rec.test_error = std::nan("");
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

bool SweepResult::all_failed() const {
  return !records.empty() &&
         std::none_of(records.begin(), records.end(), [](const ExperimentRecord& r) { return r.ok(); });
}

std::vector<Cell> sweep_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (const auto& method : config.methods) {
    for (std::size_t d : config.d_list) {
      for (std::size_t n : config.n_list) {
        for (std::size_t rep = 0; rep < config.reps; ++rep) cells.push_back({method, n, d, rep});
      }
    }
  }
  return cells;
}

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  const std::vector<Cell> cells = sweep_cells(config);
  SweepResult result;
  result.records.resize(cells.size());
  const auto count = static_cast<std::int64_t>(cells.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(static_cast<int>(config.workers))
  for (std::int64_t i = 0; i < count; ++i) {
    result.records[static_cast<std::size_t>(i)] = run_single(config, cells[static_cast<std::size_t>(i)]);
  }

  // Aggregate per (method, d, N) in cell order.
  std::map<std::tuple<std::string, std::size_t, std::size_t>, std::vector<double>> groups;
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> order;
  for (const auto& rec : result.records) {
    auto key = std::make_tuple(rec.method, rec.d, rec.n);
    if (!groups.count(key)) order.push_back(key);
    auto& errs = groups[key];
    if (rec.ok()) errs.push_back(rec.test_error);
  }
  for (const auto& key : order) {
    const auto& errs = groups[key];
    if (errs.size() < 2) continue;
    result.aggregates.push_back({std::get<0>(key), std::get<2>(key), std::get<1>(key), aggregate(errs)});
  }

  std::map<std::pair<std::string, std::size_t>, std::vector<RatePoint>> series;
  std::vector<std::pair<std::string, std::size_t>> series_order;
  for (const auto& row : result.aggregates) {
    auto key = std::make_pair(row.method, row.d);
    if (!series.count(key)) series_order.push_back(key);
    series[key].push_back({static_cast<double>(row.n), row.result.mean});
  }
  for (const auto& key : series_order) {
    const auto& pts = series[key];
    if (pts.size() < 2) continue;
    try {
      result.rates.push_back({key.first, key.second, fit_rate(pts)});
    } catch (const std::invalid_argument&) {
      // nonpositive means (e.g. an exact fit) cannot be placed on a log axis
    }
  }

  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    {
      std::ofstream out(dir / "results.csv");
      write_results_csv(out, result.records);
    }
    {
      std::ofstream out(dir / "aggregates.csv");
      write_aggregates_csv(out, result.aggregates);
    }
    {
      std::ofstream out(dir / "rates.csv");
      write_rates_csv(out, result.rates);
    }
    std::map<std::size_t, std::vector<PlotSeries>> by_dim;
    for (const auto& rate : result.rates) {
      std::vector<AggregateRow> rows;
      for (const auto& row : result.aggregates) {
        if (row.method == rate.method && row.d == rate.d) rows.push_back(row);
      }
      std::ofstream out(dir / ("plot_" + rate.method + "_d" + std::to_string(rate.d) + ".csv"));
      write_plot_csv(out, rows, rate.fit.envelope_constant);
      by_dim[rate.d].push_back({rate.method, rows, rate.fit.envelope_constant});
    }
    if (config.svg) {
      for (const auto& [d, s] : by_dim) {
        std::ofstream out(dir / ("loglog_d" + std::to_string(d) + ".svg"));
        write_loglog_svg(out, s, "test error vs N, d = " + std::to_string(d));
      }
    }
  }
  return result;
}

std::string format_record(const ExperimentRecord& r) {
  char wall[64];
  std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
  std::ostringstream os;
  os << r.method << ',' << r.n << ',' << r.d << ',' << r.arch << ',' << r.param << ',' << r.seed << ','
     << r.epochs << ',' << format_double(r.test_error) << ',' << wall << ',' << r.status;
  return os.str();
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  out << "method,N,d,arch,s_ratio_or_K,seed,epochs,test_error,wall_ms,status\n";
  for (const auto& r : records) out << format_record(r) << '\n';
}

void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rates) {
  out << "method,d,slope,intercept,r2,envelope_C\n";
  for (const auto& r : rates) {
    out << r.method << ',' << r.d << ',' << format_double(r.fit.slope) << ','
        << format_double(r.fit.intercept) << ',' << format_double(r.fit.r2) << ','
        << format_double(r.fit.envelope_constant) << '\n';
  }
}

}  // namespace driftnn
