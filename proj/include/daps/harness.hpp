#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "daps/config.hpp"
#include "daps/latent.hpp"
#include "daps/oracle.hpp"
#include "daps/parallel.hpp"
#include "daps/sampler.hpp"

namespace daps {

struct PriorSpec {
  std::vector<double> weights = {1.0};
  std::vector<Vec> means;
  std::vector<Vec> cov_diags;  // used when full_covs is empty
  std::vector<Mat> full_covs;
  std::string score = "exact";  // exact | empirical
  Index empirical_size = 1000;
  std::uint64_t empirical_seed = 0;
  std::string dataset;  // optional path; overrides empirical_size/seed
};

struct OperatorSpec {
  std::string kind = "identity";  // identity mask downsample conv_blur dft_magnitude hdr_clip gauss_bumps2d
  Index rows = 1;                 // image rows; 1 for 1D signals
  Vec mask;                       // explicit 0/1 mask (optional)
  double keep_fraction = 0.7;
  std::uint64_t mask_seed = 0;
  Index factor = 2;
  double kernel_sigma = 1.0;
  Index kernel_radius = 2;
  double oversample = 2.0;
  double alpha = 2.0;
  double width = 0.05;
  double baseline = 0.0;
};

struct MeasurementSpec {
  double beta_true = 0.05;
  double beta_model = 0.01;
  bool beta_model_matches = false;  // beta_model = match
  std::optional<Vec> y;             // observed override
  std::optional<Vec> ground_truth;  // explicit x*; otherwise drawn from the prior
  std::uint64_t seed = 0;
};

struct SamplerSpec {
  std::string method = "daps";  // daps | latent_daps | dps
  double sigma_max = 100.0;
  double sigma_min = 0.1;
  int n_anneal = 200;
  double rho = 7.0;
  std::string terminal = "zero";  // zero | sigma_min
  int n_ode = 5;
  double t_min = 0.02;
  double ode_rho = 7.0;
  int langevin_steps = 100;
  double eta = 1e-4;
  std::string rt_rule = "sigma";  // sigma | constant
  double rt_constant = 0.5;
  double zeta = 1.0;
  std::string variant = "sde";         // sde | ode
  std::string grad_mode = "analytic";  // analytic | finite_difference
  double fd_step = 1e-5;
  double ratio = 0.1;
  double eta_pixel = 1e-4;
  double eta_latent = 1e-4;
  Index latent_dim = 0;  // 0: same as data
  std::uint64_t codec_seed = 0;
  std::string codec_file;  // encoder matrix, k x d
};

struct OracleSpec {
  std::string kind = "none";  // none | grid2d | conjugate
  double lo = -1.0;
  double hi = 1.5;
  Index resolution = 400;
  double mode_radius = 0.3;
};

struct RunSpec {
  std::string run_id = "run";
  Index n_chains = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  bool dump_states = false;
  std::string out_dir;
  std::string select = "auto";  // auto | residual | psnr  (best-of selection)
  double psnr_range = 2.0;
};

struct ExperimentConfig {
  RunSpec run;
  PriorSpec prior;
  OperatorSpec op;
  MeasurementSpec measurement;
  SamplerSpec sampler;
  OracleSpec oracle;

  /// Parses and validates; unknown keys and bad values raise ConfigError
  /// naming the key.
  static ExperimentConfig from_kv(const KeyValueConfig& kv);
  static ExperimentConfig parse(const std::string& text);
  /// Fully resolved key-value form (every key, defaults included).
  KeyValueConfig to_kv() const;
  std::string snapshot() const { return to_kv().to_string(); }

  Index dim() const;
};

/// Largest chain count for which per-step oracle W2 is computed.
inline constexpr Index kTrajectoryW2Cap = 512;

/// Config keys that take a single number; valid sweep axes.
const std::vector<std::string>& numeric_keys();

/// Objects built from a config.
struct Problem {
  std::shared_ptr<const GaussianMixture> prior;  // generating prior
  std::shared_ptr<const ScoreModel> score;       // what the sampler sees
  OperatorPtr op;
  Measurement meas;
  std::optional<Vec> ground_truth;
  std::shared_ptr<const PosteriorOracle> oracle;
  std::optional<Vec> oracle_mode;  // grid2d only
  std::optional<LinearCodec> codec;
  std::shared_ptr<const ScoreModel> latent_score;
};

Problem build_problem(const ExperimentConfig& cfg);

struct ChainOutcome {
  Vec x;
  SamplerTrajectory trajectory;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double psnr = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // non-empty when the chain diverged
  bool ok() const { return error.empty(); }
};

struct MetricRow {
  std::string metric;
  int step = -1;  // -1 for run-level metrics
  double value = 0.0;
};

struct RunResult {
  std::string run_id;
  std::vector<ChainOutcome> chains;
  std::vector<MetricRow> metrics;
  std::string snapshot;
  double wall_seconds = 0.0;
  std::optional<Index> selected;  // best_of_k

  /// Terminal samples of successful chains, one per row.
  Mat samples() const;
  /// First value of a run-level metric.
  std::optional<double> metric(const std::string& name) const;
  /// Per-step series of a metric, ordered by step.
  std::vector<double> series(const std::string& name) const;
};

/// Runs one chain; its random stream is make_chain_rng(seed, index).
ChainOutcome run_chain(const Problem& problem, const ExperimentConfig& cfg, Index index,
                       bool record_states);

/// Executes run.n_chains independent chains (OpenMP or serial reference),
/// computes metrics, and writes samples.csv, trajectory.csv, metrics.csv and
/// config.snapshot when run.out_dir is set. Divergent chains are recorded
/// without aborting the others.
RunResult run_experiment(const ExperimentConfig& cfg, Exec exec = Exec::kParallel);

/// Runs k chains and keeps the best one: highest PSNR when a ground truth
/// exists (run.select = auto|psnr), otherwise lowest measurement residual.
RunResult best_of_k(ExperimentConfig cfg, Index k = 4, Exec exec = Exec::kParallel);

struct SweepRow {
  double value = 0.0;
  RunResult result;
};

/// One run per value of a numeric config key ("section.key").
std::vector<SweepRow> sweep(const KeyValueConfig& base, const std::string& axis,
                            const std::vector<double>& values, Exec exec = Exec::kParallel);

/// CSV (value,metric,step,metric_value) of run-level metrics.
std::string sweep_table(const std::vector<SweepRow>& rows);

// Output files.
std::string samples_csv(const RunResult& r);
std::string trajectory_csv(const RunResult& r, bool with_states);
std::string metrics_csv(const RunResult& r);
void write_outputs(const RunResult& r, const std::string& dir, bool with_states);

/// Thread count from --threads, falling back to DAPS_THREADS, then 0 (default).
int resolve_threads(int cli_threads);

// Bundled experiment presets.
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);

}  // namespace daps
