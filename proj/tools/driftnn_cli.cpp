#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "driftnn/bounds.hpp"
#include "driftnn/bspline.hpp"
#include "driftnn/checkpoint.hpp"
#include "driftnn/config.hpp"
#include "driftnn/experiment.hpp"
#include "driftnn/rng.hpp"
#include "driftnn/trainer.hpp"

using namespace driftnn;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("--config", opts.config, "key = value config file");
  app->add_option("--seed", opts.seed, "master seed (overrides the config)");
  app->add_option("--out", opts.out, "output directory (overrides the config)");
}

ExperimentConfig load_config(const CommonOptions& opts) {
  ExperimentConfig c = opts.config.empty() ? ExperimentConfig::desk() : ExperimentConfig::load(opts.config);
  if (opts.seed) c.seed = *opts.seed;
  if (!opts.out.empty()) c.out_dir = opts.out;
  c.validate();
  return c;
}

fs::path output_dir(const ExperimentConfig& c) {
  const fs::path dir = c.out_dir.empty() ? fs::path(".") : fs::path(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

int cmd_simulate(const CommonOptions& opts, std::optional<std::size_t> paths, std::optional<std::size_t> dim) {
  const auto c = load_config(opts);
  const std::size_t d = dim.value_or(c.d_list.front());
  const std::size_t n = paths.value_or(c.n_list.front());
  const auto traj = simulate(c.drift(d), c.diffusion(d), c.grid(), n, c.initial_law(d), c.seed);
  const auto dir = output_dir(c);
  write_trajectories((dir / "trajectories.bin").string(), traj);
  {
    std::ofstream out(dir / "trajectories.csv");
    write_trajectories_csv(out, traj);
  }
  {
    std::ofstream out(dir / "samples.csv");
    write_samples_csv(out, make_samples(traj, c.component));
  }
  std::cout << "simulated " << n << " paths, d = " << d << ", M = " << c.steps << " into " << dir.string() << '\n';
  return 0;
}

int cmd_train(const CommonOptions& opts, std::optional<std::size_t> paths, std::optional<std::size_t> dim) {
  const auto c = load_config(opts);
  const std::size_t d = dim.value_or(c.d_list.front());
  const std::size_t n = paths.value_or(c.n_list.front());
  const auto split = make_split(c.drift(d), c.diffusion(d), c.grid(), {n, c.valid_paths, c.test_paths},
                                c.initial_law(d), data_seed(c.seed, n, d, 0), c.component);
  const ScalarField target = drift_target(c.drift(d), c.component);

  TrainConfig tc;
  tc.arch = Architecture::from_hidden(d, c.hidden.front(), !c.strict_eq4);
  tc.s_ratio = c.s_ratios.front();
  tc.learning_rate = c.learning_rate;
  tc.batch_size = c.batch_size;
  tc.max_epochs = c.max_epochs;
  tc.patience = c.patience;
  tc.clamp = c.clamp;
  tc.seed = method_seed(c.seed, n, d, "nn", 0);
  tc.mask_mode = c.mask_mode;
  tc.metric = c.tuning;

  const auto dir = output_dir(c);
  std::ofstream progress(dir / "progress.jsonl");
  tc.progress = &progress;
  const auto result = train(tc, split, &target);
  const auto& net = result.net;
  const double test_error =
      empirical_risk([&net](std::span<const double> x) { return net.forward(x); }, target, split.test).value;

  write_checkpoint((dir / "model.ckpt").string(), net);
  write_checkpoint_meta((dir / "model.json").string(),
                        {tc.arch.to_string(), tc.seed, result.report.best_epoch, result.report.best_validation,
                         net.budget(), net.clamp()});
  const json summary = {{"arch", tc.arch.to_string()},
                        {"budget", net.budget()},
                        {"epochs", result.report.epochs_run},
                        {"best_epoch", result.report.best_epoch},
                        {"best_validation", result.report.best_validation},
                        {"optimization_gap_proxy", result.report.optimization_gap_proxy},
                        {"test_error", test_error}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& model_path, std::optional<std::size_t> paths) {
  const auto c = load_config(opts);
  ScalarField estimate;
  std::size_t d = 0;
  std::string kind;
  if (fs::path(model_path).extension() == ".spline") {
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + model_path);
    auto model = std::make_shared<SplineModel>(read_spline_model(in));
    d = model->spec.dim;
    estimate = [model](std::span<const double> x) { return model->predict(x); };
    kind = "bspline";
  } else {
    auto net = std::make_shared<SparseNetwork>(read_checkpoint(model_path).net);
    d = net->arch().input_dim();
    estimate = [net](std::span<const double> x) { return net->forward(x); };
    kind = "nn";
  }
  const std::size_t n = paths.value_or(c.test_paths);
  const auto test = simulate(c.drift(d), c.diffusion(d), c.grid(), n, c.initial_law(d), derive_seed(c.seed, {3}));
  const auto risk = empirical_risk(estimate, drift_target(c.drift(d), c.component), test);
  const json result = {{"model", model_path}, {"kind", kind}, {"d", d}, {"test_paths", n}, {"risk", risk.value}};
  if (!opts.out.empty() || !c.out_dir.empty()) {
    std::ofstream out(output_dir(c) / "evaluation.json");
    out << result.dump(2) << '\n';
  }
  std::cout << result.dump() << '\n';
  return 0;
}

int cmd_sweep(const CommonOptions& opts, bool svg, std::optional<std::size_t> workers) {
  auto c = load_config(opts);
  if (svg) c.svg = true;
  if (workers) c.workers = *workers;
  if (c.out_dir.empty()) c.out_dir = "results";
  c.validate();
  const auto result = run_sweep(c);
  std::size_t failed = 0;
  for (const auto& r : result.records) {
    if (!r.ok()) ++failed;
  }
  for (const auto& rate : result.rates) {
    std::printf("%-8s d=%-3zu slope %+.3f  r2 %.3f  C %.4g\n", rate.method.c_str(), rate.d, rate.fit.slope,
                rate.fit.r2, rate.fit.envelope_constant);
  }
  std::printf("%zu cells, %zu failed, results in %s\n", result.records.size(), failed, c.out_dir.c_str());
  return result.all_failed() ? kExitFailure : 0;
}

// Spec file keys: bound.s, bound.L, bound.d, bound.F, bound.dt, bound.delta,
// bound.psi, bound.approx, bound.c, bound.N, composition.{dims,t,beta,K}, envelope.C.
int cmd_bounds(const CommonOptions& opts) {
  const KeyValueConfig kv = opts.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(opts.config);
  const std::vector<std::string> known{"bound.s",          "bound.L",       "bound.d",        "bound.F",
                                       "bound.dt",         "bound.delta",   "bound.psi",      "bound.approx",
                                       "bound.c",          "bound.N",       "composition.dims", "composition.t",
                                       "composition.beta", "composition.K", "envelope.C"};
  if (auto unknown = kv.unknown_keys(known); !unknown.empty()) throw ConfigError("unknown key: " + unknown.front());

  const auto arch = Architecture::from_hidden(1, {16, 32, 16});
  const std::size_t s = kv.get_uint("bound.s", sparsity_budget(arch, 0.75));
  const std::size_t L = kv.get_uint("bound.L", arch.hidden_layers());
  const std::size_t d = kv.get_uint("bound.d", 1);
  const double F = kv.get_double("bound.F", 10.0);
  const double dt = kv.get_double("bound.dt", 0.01);
  const double delta = kv.get_double("bound.delta", 0.5);
  const double psi = kv.get_double("bound.psi", 0.0);
  const double approx = kv.get_double("bound.approx", 0.0);
  const double c_frak = kv.get_double("bound.c", 1.0);
  const double env_c = kv.get_double("envelope.C", 1.0);
  const auto ns = kv.get_doubles("bound.N", {100, 200, 500, 1000, 2000, 5000});
  bounds::CompositionSpec spec;
  spec.dims = kv.get_sizes("composition.dims", {1, 1});
  spec.t = kv.get_doubles("composition.t", {1});
  spec.beta = kv.get_doubles("composition.beta", {1});
  spec.K = kv.get_double("composition.K", 1.0);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::ostringstream table;
  table << "N,phi_N,envelope,optimization,approximation,discretization,complexity,sample,total,log_covering\n";
  table.precision(6);
  try {
    for (double N : ns) {
      const bounds::BoundInputs in(s, L, d, F, N, dt, delta);
      const auto t = bounds::theorem_terms(in, psi, approx, c_frak);
      table << N << ',' << bounds::phi_n(spec, N) << ',' << bounds::envelope(N, env_c) << ',' << t.optimization
            << ',' << t.approximation << ',' << t.discretization << ',' << t.complexity << ',' << t.sample << ','
            << t.total << ',' << bounds::covering_log_bound(in) << '\n';
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::cout << "s = " << s << ", L = " << L << ", d = " << d << ", F = " << F << ", dt = " << dt << '\n'
            << table.str();
  if (!opts.out.empty()) {
    fs::create_directories(opts.out);
    std::ofstream(fs::path(opts.out) / "bounds.csv") << table.str();
  }
  return 0;
}

int cmd_memory(const CommonOptions& opts, std::size_t knots) {
  const auto c = load_config(opts);
  std::ostringstream table;
  table << "d,N,basis,bspline_bytes,nn_params,nn_bytes\n";
  for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{10}, std::size_t{50}}) {
    const SplineBasisSpec spec(knots, d);
    const auto arch = Architecture::from_hidden(d, c.hidden.front(), !c.strict_eq4);
    for (std::size_t n : c.n_list) {
      char line[256];
      std::snprintf(line, sizeof line, "%zu,%zu,%.6g,%.6g,%zu,%.6g\n", d, n, spec.basis_count_real(),
                    memory_estimate(n, c.steps, spec), count_params(arch), nn_memory_estimate(arch, c.batch_size));
      table << line;
    }
  }
  std::cout << "K_N = " << knots << ", M = " << c.steps << ", batch = " << c.batch_size << '\n' << table.str();
  if (!c.out_dir.empty()) std::ofstream(output_dir(c) / "memory.csv") << table.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-network and B-spline drift estimation for diffusions"};
  app.require_subcommand(1);

  CommonOptions sim_opts, train_opts, eval_opts, sweep_opts, bounds_opts, mem_opts;
  std::optional<std::size_t> sim_n, sim_d, train_n, train_d, eval_n, workers;
  std::string model;
  bool svg = false;
  std::size_t knots = 8;

  auto* sim = app.add_subcommand("simulate", "simulate trajectories and write them with their regression samples");
  add_common(sim, sim_opts);
  sim->add_option("--paths", sim_n, "number of paths (default: first sweep.N)");
  sim->add_option("--dim", sim_d, "dimension (default: first sweep.d)");

  auto* tr = app.add_subcommand("train", "train one sparse network and save its checkpoint");
  add_common(tr, train_opts);
  tr->add_option("--paths", train_n, "training paths (default: first sweep.N)");
  tr->add_option("--dim", train_d, "dimension (default: first sweep.d)");

  auto* ev = app.add_subcommand("evaluate", "empirical risk of a saved model on fresh test paths");
  add_common(ev, eval_opts);
  ev->add_option("--model", model, "checkpoint (.ckpt) or spline model (.spline)")->required();
  ev->add_option("--paths", eval_n, "test paths (default: eval.test_paths)");

  auto* sw = app.add_subcommand("sweep", "run the (method, d, N, repetition) grid");
  add_common(sw, sweep_opts);
  sw->add_flag("--svg", svg, "also write log-log SVG charts");
  sw->add_option("--workers", workers, "worker threads over cells");

  auto* bd = app.add_subcommand("bounds", "tabulate the risk bound terms over N from a spec file");
  add_common(bd, bounds_opts);

  auto* mem = app.add_subcommand("memory", "B-spline versus network memory table");
  add_common(mem, mem_opts);
  mem->add_option("--knots", knots, "K_N for the B-spline basis")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) return cmd_simulate(sim_opts, sim_n, sim_d);
    if (*tr) return cmd_train(train_opts, train_n, train_d);
    if (*ev) return cmd_evaluate(eval_opts, model, eval_n);
    if (*sw) return cmd_sweep(sweep_opts, svg, workers);
    if (*bd) return cmd_bounds(bounds_opts);
    if (*mem) return cmd_memory(mem_opts, knots);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
