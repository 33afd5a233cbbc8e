// Command-line front end: run, sweep, best-of, metrics, presets.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "daps/harness.hpp"
#include "daps/io.hpp"
#include "daps/metrics.hpp"

namespace {

struct Common {
  std::string config;
  std::string preset;
  std::uint64_t seed = 0;
  long chains = 0;
  std::string out;
  bool dump_states = false;
  int threads = 0;
  bool serial = false;
};

void add_common(CLI::App* app, Common& c) {
  auto* cfg = app->add_option("--config", c.config, "experiment config file");
  app->add_option("--preset", c.preset, "bundled preset name")->excludes(cfg);
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--chains", c.chains, "number of chains")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output directory");
  app->add_flag("--dump-states", c.dump_states, "write full states to trajectory.csv");
  app->add_option("--threads", c.threads, "worker threads (default: DAPS_THREADS, else all cores)");
  app->add_flag("--serial", c.serial, "run chains on the serial reference path");
}

daps::KeyValueConfig load(const Common& c, const CLI::App& app) {
  daps::KeyValueConfig kv;
  if (!c.preset.empty())
    kv = daps::KeyValueConfig::parse(daps::preset_text(c.preset));
  else if (!c.config.empty())
    kv = daps::KeyValueConfig::load(c.config);
  else
    throw CLI::RequiredError("--config or --preset");
  if (app.count("--seed")) kv.set("run.seed", std::to_string(c.seed));
  if (app.count("--chains")) kv.set("run.n_chains", std::to_string(c.chains));
  if (!c.out.empty()) kv.set("run.out_dir", c.out);
  if (c.dump_states) kv.set("run.dump_states", "true");
  const int threads = daps::resolve_threads(c.threads);
  if (threads > 0) kv.set("run.threads", std::to_string(threads));
  return kv;
}

void print_summary(const daps::RunResult& r) {
  int failed = 0;
  for (const auto& c : r.chains) failed += c.ok() ? 0 : 1;
  fmt::print("{}: {} chains ({} failed) in {:.2f} s\n", r.run_id, r.chains.size(), failed, r.wall_seconds);
  for (const auto& m : r.metrics)
    if (m.step < 0) fmt::print("  {:<18} {}\n", m.metric, daps::format_double(m.value));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decoupled annealing posterior sampling"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "run an experiment");
  add_common(run, run_opts);

  Common sweep_opts;
  std::string axis;
  std::vector<double> values;
  auto* sw = app.add_subcommand("sweep", "one run per value of a numeric key");
  add_common(sw, sweep_opts);
  sw->add_option("--axis", axis, "config key, e.g. sampler.n_ode")->required();
  sw->add_option("--values", values, "values")->required()->delimiter(',');

  Common best_opts;
  long k = 4;
  auto* best = app.add_subcommand("best-of", "run k chains and keep the best");
  add_common(best, best_opts);
  best->add_option("-k", k, "chains per instance")->check(CLI::PositiveNumber);

  std::string samples_path;
  std::string reference_path;
  int projections = 0;
  std::uint64_t metric_seed = 0;
  auto* met = app.add_subcommand("metrics", "W2 between two point-cloud files");
  met->add_option("samples", samples_path, "point cloud")->required()->check(CLI::ExistingFile);
  met->add_option("reference", reference_path, "point cloud")->required()->check(CLI::ExistingFile);
  met->add_option("--sliced", projections, "use sliced W2 with this many projections");
  met->add_option("--seed", metric_seed, "projection seed");

  std::string show;
  auto* pre = app.add_subcommand("presets", "list presets or print one");
  pre->add_option("name", show, "preset to print");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = daps::ExperimentConfig::from_kv(load(run_opts, *run));
      const auto r = daps::run_experiment(cfg, run_opts.serial ? daps::Exec::kSerial : daps::Exec::kParallel);
      print_summary(r);
    } else if (*sw) {
      const auto rows = daps::sweep(load(sweep_opts, *sw), axis, values,
                                    sweep_opts.serial ? daps::Exec::kSerial : daps::Exec::kParallel);
      std::cout << daps::sweep_table(rows);
    } else if (*best) {
      const auto cfg = daps::ExperimentConfig::from_kv(load(best_opts, *best));
      const auto r = daps::best_of_k(cfg, k, best_opts.serial ? daps::Exec::kSerial : daps::Exec::kParallel);
      print_summary(r);
    } else if (*met) {
      const daps::PointCloud a{daps::read_matrix(samples_path)};
      const daps::PointCloud b{daps::read_matrix(reference_path)};
      if (projections > 0) {
        daps::Rng rng(daps::splitmix64(metric_seed));
        fmt::print("w2_sliced {}\n", daps::format_double(daps::wasserstein2_sliced(a, b, projections, rng)));
      } else {
        fmt::print("w2 {}\n", daps::format_double(daps::wasserstein2_exact(a, b)));
      }
    } else if (*pre) {
      if (show.empty())
        for (const auto& n : daps::preset_names()) fmt::print("{}\n", n);
      else
        std::cout << daps::preset_text(show);
    }
  } catch (const daps::ConfigError& e) {
    fmt::print(stderr, "config error [{}]: {}\n", e.key(), e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
