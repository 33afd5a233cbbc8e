#include "daps/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numeric>

#include <fmt/format.h>

#include "daps/io.hpp"

namespace daps {

namespace {

std::string one_of(const KeyValueConfig& kv, const std::string& key, const std::string& fallback,
                   std::initializer_list<const char*> allowed) {
  const std::string v = kv.get_string(key, fallback);
  for (const char* a : allowed)
    if (v == a) return v;
  std::string list;
  for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
  throw ConfigError(key, "must be one of {" + list + "}, got '" + v + "'");
}

void expect(bool cond, const std::string& key, const std::string& what) {
  if (!cond) throw ConfigError(key, what);
}

int as_int(const KeyValueConfig& kv, const std::string& key, std::int64_t fallback) {
  const auto v = kv.get_int(key, fallback);
  expect(v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max(), key, "out of range");
  return static_cast<int>(v);
}

Vec flatten(const Mat& m) {
  Vec v(m.size());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
  return v;
}

}  // namespace

const std::vector<std::string>& numeric_keys() {
  static const std::vector<std::string> keys = {
      "run.n_chains",           "run.seed",                 "run.threads",
      "run.psnr_range",         "prior.empirical_size",     "prior.empirical_seed",
      "operator.rows",          "operator.keep_fraction",   "operator.mask_seed",
      "operator.factor",        "operator.kernel_sigma",    "operator.kernel_radius",
      "operator.oversample",    "operator.alpha",           "operator.width",
      "operator.baseline",      "measurement.beta_true",    "measurement.beta_model",
      "measurement.seed",       "sampler.sigma_max",        "sampler.sigma_min",
      "sampler.n_anneal",       "sampler.rho",              "sampler.n_ode",
      "sampler.t_min",          "sampler.ode_rho",          "sampler.langevin_steps",
      "sampler.eta",            "sampler.rt_constant",      "sampler.zeta",
      "sampler.fd_step",        "sampler.ratio",            "sampler.eta_pixel",
      "sampler.eta_latent",     "sampler.latent_dim",       "sampler.codec_seed",
      "oracle.lo",              "oracle.hi",                "oracle.resolution",
      "oracle.mode_radius",
  };
  return keys;
}

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
  ExperimentConfig c;

  auto& r = c.run;
  r.run_id = kv.get_string("run.run_id", r.run_id);
  r.n_chains = kv.get_int("run.n_chains", r.n_chains);
  expect(r.n_chains >= 1, "run.n_chains", "must be >= 1");
  r.seed = kv.get_u64("run.seed", r.seed);
  r.threads = as_int(kv, "run.threads", r.threads);
  r.dump_states = kv.get_bool("run.dump_states", r.dump_states);
  r.out_dir = kv.get_string("run.out_dir", r.out_dir);
  r.select = one_of(kv, "run.select", r.select, {"auto", "residual", "psnr"});
  r.psnr_range = kv.get_double("run.psnr_range", r.psnr_range);
  expect(r.psnr_range > 0.0, "run.psnr_range", "must be > 0");

  auto& p = c.prior;
  if (kv.has("prior.weights")) {
    const Vec w = kv.get_vec("prior.weights");
    p.weights.assign(w.data(), w.data() + w.size());
  }
  expect(!p.weights.empty(), "prior.weights", "needs at least one component");
  for (std::size_t j = 0; j < p.weights.size(); ++j) {
    const std::string mk = "prior.mean." + std::to_string(j);
    p.means.push_back(kv.get_vec(mk));
    const std::string dk = "prior.cov_diag." + std::to_string(j);
    const std::string fk = "prior.cov." + std::to_string(j);
    if (kv.has(fk)) {
      const Vec flat = kv.get_vec(fk);
      const Index d = p.means.back().size();
      expect(flat.size() == d * d, fk, "needs d*d row-major entries");
      Mat m(d, d);
      for (Index a = 0; a < d; ++a)
        for (Index b = 0; b < d; ++b) m(a, b) = flat[a * d + b];
      p.full_covs.push_back(m);
    } else {
      p.cov_diags.push_back(kv.get_vec(dk));
    }
  }
  expect(p.full_covs.empty() || p.full_covs.size() == p.weights.size(), "prior.cov.0",
         "give either cov.N for every component or cov_diag.N for every component");
  const Index d = p.means.front().size();
  expect(d >= 1, "prior.mean.0", "must be non-empty");
  for (std::size_t j = 0; j < p.means.size(); ++j)
    expect(p.means[j].size() == d, "prior.mean." + std::to_string(j), "dimension mismatch");
  for (std::size_t j = 0; j < p.cov_diags.size(); ++j)
    expect(p.cov_diags[j].size() == d && (p.cov_diags[j].array() > 0.0).all(),
           "prior.cov_diag." + std::to_string(j), "must have d positive entries");
  p.score = one_of(kv, "prior.score", p.score, {"exact", "empirical"});
  p.empirical_size = kv.get_int("prior.empirical_size", p.empirical_size);
  expect(p.empirical_size >= 1, "prior.empirical_size", "must be >= 1");
  p.empirical_seed = kv.get_u64("prior.empirical_seed", p.empirical_seed);
  p.dataset = kv.get_string("prior.dataset", p.dataset);

  auto& o = c.op;
  o.kind = one_of(kv, "operator.kind", o.kind,
                  {"identity", "mask", "downsample", "conv_blur", "dft_magnitude", "hdr_clip", "gauss_bumps2d"});
  o.rows = kv.get_int("operator.rows", o.rows);
  expect(o.rows >= 1 && d % o.rows == 0, "operator.rows", "must divide the signal dimension");
  if (kv.has("operator.mask")) {
    o.mask = kv.get_vec("operator.mask");
    expect(o.mask.size() == d, "operator.mask", "needs one entry per coordinate");
  }
  o.keep_fraction = kv.get_double("operator.keep_fraction", o.keep_fraction);
  o.mask_seed = kv.get_u64("operator.mask_seed", o.mask_seed);
  o.factor = kv.get_int("operator.factor", o.factor);
  o.kernel_sigma = kv.get_double("operator.kernel_sigma", o.kernel_sigma);
  o.kernel_radius = kv.get_int("operator.kernel_radius", o.kernel_radius);
  o.oversample = kv.get_double("operator.oversample", o.oversample);
  expect(o.oversample >= 1.0, "operator.oversample", "must be >= 1");
  o.alpha = kv.get_double("operator.alpha", o.alpha);
  o.width = kv.get_double("operator.width", o.width);
  o.baseline = kv.get_double("operator.baseline", o.baseline);
  expect(o.kind != "gauss_bumps2d" || d == 2, "operator.kind", "gauss_bumps2d needs a 2D prior");

  auto& m = c.measurement;
  m.beta_true = kv.get_double("measurement.beta_true", m.beta_true);
  if (kv.get_string("measurement.beta_model", "") == "match") {
    m.beta_model_matches = true;
    m.beta_model = m.beta_true;
  } else {
    m.beta_model = kv.get_double("measurement.beta_model", m.beta_model);
  }
  expect(m.beta_model > 0.0, "measurement.beta_model", "must be > 0");
  if (kv.has("measurement.y")) m.y = kv.get_vec("measurement.y");
  if (kv.has("measurement.ground_truth")) {
    m.ground_truth = kv.get_vec("measurement.ground_truth");
    expect(m.ground_truth->size() == d, "measurement.ground_truth", "dimension mismatch");
  }
  expect(m.y || m.beta_true > 0.0, "measurement.beta_true", "must be > 0 when synthesising y");
  m.seed = kv.get_u64("measurement.seed", m.seed);

  auto& s = c.sampler;
  s.method = one_of(kv, "sampler.method", s.method, {"daps", "latent_daps", "dps"});
  s.sigma_max = kv.get_double("sampler.sigma_max", s.method == "latent_daps" ? 10.0 : s.sigma_max);
  s.sigma_min = kv.get_double("sampler.sigma_min", s.sigma_min);
  expect(s.sigma_min > 0.0, "sampler.sigma_min", "must be > 0");
  expect(s.sigma_max > s.sigma_min, "sampler.sigma_max", "must exceed sigma_min");
  s.n_anneal = as_int(kv, "sampler.n_anneal", s.n_anneal);
  expect(s.n_anneal >= 1, "sampler.n_anneal", "must be >= 1");
  s.rho = kv.get_double("sampler.rho", s.rho);
  expect(s.rho > 0.0, "sampler.rho", "must be > 0");
  s.terminal = one_of(kv, "sampler.terminal", s.terminal, {"zero", "sigma_min"});
  s.n_ode = as_int(kv, "sampler.n_ode", s.n_ode);
  expect(s.n_ode >= 1, "sampler.n_ode", "must be >= 1");
  s.t_min = kv.get_double("sampler.t_min", s.t_min);
  expect(s.t_min > 0.0, "sampler.t_min", "must be > 0");
  s.ode_rho = kv.get_double("sampler.ode_rho", s.ode_rho);
  expect(s.ode_rho > 0.0, "sampler.ode_rho", "must be > 0");
  s.langevin_steps = as_int(kv, "sampler.langevin_steps", s.langevin_steps);
  expect(s.langevin_steps >= 1, "sampler.langevin_steps", "must be >= 1");
  s.eta = kv.get_double("sampler.eta", s.eta);
  expect(s.eta > 0.0, "sampler.eta", "must be > 0");
  s.rt_rule = one_of(kv, "sampler.rt_rule", s.rt_rule, {"sigma", "constant"});
  s.rt_constant = kv.get_double("sampler.rt_constant", s.rt_constant);
  expect(s.rt_constant > 0.0, "sampler.rt_constant", "must be > 0");
  s.zeta = kv.get_double("sampler.zeta", s.zeta);
  expect(s.zeta >= 0.0, "sampler.zeta", "must be >= 0");
  s.variant = one_of(kv, "sampler.variant", s.variant, {"sde", "ode"});
  s.grad_mode = one_of(kv, "sampler.grad_mode", s.grad_mode, {"analytic", "finite_difference"});
  s.fd_step = kv.get_double("sampler.fd_step", s.fd_step);
  expect(s.fd_step > 0.0, "sampler.fd_step", "must be > 0");
  s.ratio = kv.get_double("sampler.ratio", s.ratio);
  expect(s.ratio >= 0.0 && s.ratio <= 1.0, "sampler.ratio", "must lie in [0, 1]");
  s.eta_pixel = kv.get_double("sampler.eta_pixel", s.eta_pixel);
  s.eta_latent = kv.get_double("sampler.eta_latent", s.eta_latent);
  expect(s.eta_pixel > 0.0, "sampler.eta_pixel", "must be > 0");
  expect(s.eta_latent > 0.0, "sampler.eta_latent", "must be > 0");
  s.latent_dim = kv.get_int("sampler.latent_dim", s.latent_dim);
  expect(s.latent_dim >= 0 && s.latent_dim <= d, "sampler.latent_dim", "must lie in [0, d]");
  s.codec_seed = kv.get_u64("sampler.codec_seed", s.codec_seed);
  s.codec_file = kv.get_string("sampler.codec_file", s.codec_file);
  if (kv.get_string("sampler.codec", "random") == "identity") s.codec_file = "identity";
  one_of(kv, "sampler.codec", "random", {"random", "identity", "file"});
  expect(!(s.method == "latent_daps" && p.score != "exact"), "prior.score",
         "latent_daps needs the exact GMM prior");

  auto& q = c.oracle;
  q.kind = one_of(kv, "oracle.kind", q.kind, {"none", "grid2d", "conjugate"});
  q.lo = kv.get_double("oracle.lo", q.lo);
  q.hi = kv.get_double("oracle.hi", q.hi);
  expect(q.hi > q.lo, "oracle.hi", "must exceed oracle.lo");
  q.resolution = kv.get_int("oracle.resolution", q.resolution);
  expect(q.resolution >= 2, "oracle.resolution", "must be >= 2");
  q.mode_radius = kv.get_double("oracle.mode_radius", q.mode_radius);
  expect(q.kind != "grid2d" || d == 2, "oracle.kind", "grid2d needs a 2D prior");

  const auto unknown = kv.unread();
  if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown configuration key");
  return c;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  return from_kv(KeyValueConfig::parse(text));
}

Index ExperimentConfig::dim() const { return prior.means.front().size(); }

KeyValueConfig ExperimentConfig::to_kv() const {
  KeyValueConfig kv;
  auto num = [&](const std::string& k, double v) { kv.set(k, format_double(v)); };
  auto integer = [&](const std::string& k, auto v) { kv.set(k, std::to_string(v)); };

  kv.set("run.run_id", run.run_id);
  integer("run.n_chains", run.n_chains);
  integer("run.seed", run.seed);
  integer("run.threads", run.threads);
  kv.set("run.dump_states", run.dump_states ? "true" : "false");
  if (!run.out_dir.empty()) kv.set("run.out_dir", run.out_dir);
  kv.set("run.select", run.select);
  num("run.psnr_range", run.psnr_range);

  Vec w(static_cast<Index>(prior.weights.size()));
  for (std::size_t j = 0; j < prior.weights.size(); ++j) w[static_cast<Index>(j)] = prior.weights[j];
  kv.set("prior.weights", format_vec(w));
  for (std::size_t j = 0; j < prior.means.size(); ++j) {
    kv.set("prior.mean." + std::to_string(j), format_vec(prior.means[j]));
    if (prior.full_covs.empty())
      kv.set("prior.cov_diag." + std::to_string(j), format_vec(prior.cov_diags[j]));
    else
      kv.set("prior.cov." + std::to_string(j), format_vec(flatten(prior.full_covs[j])));
  }
  kv.set("prior.score", prior.score);
  integer("prior.empirical_size", prior.empirical_size);
  integer("prior.empirical_seed", prior.empirical_seed);
  if (!prior.dataset.empty()) kv.set("prior.dataset", prior.dataset);

  kv.set("operator.kind", op.kind);
  integer("operator.rows", op.rows);
  if (op.mask.size() > 0) kv.set("operator.mask", format_vec(op.mask));
  num("operator.keep_fraction", op.keep_fraction);
  integer("operator.mask_seed", op.mask_seed);
  integer("operator.factor", op.factor);
  num("operator.kernel_sigma", op.kernel_sigma);
  integer("operator.kernel_radius", op.kernel_radius);
  num("operator.oversample", op.oversample);
  num("operator.alpha", op.alpha);
  num("operator.width", op.width);
  num("operator.baseline", op.baseline);

  num("measurement.beta_true", measurement.beta_true);
  if (measurement.beta_model_matches)
    kv.set("measurement.beta_model", "match");
  else
    num("measurement.beta_model", measurement.beta_model);
  if (measurement.y) kv.set("measurement.y", format_vec(*measurement.y));
  if (measurement.ground_truth) kv.set("measurement.ground_truth", format_vec(*measurement.ground_truth));
  integer("measurement.seed", measurement.seed);

  kv.set("sampler.method", sampler.method);
  num("sampler.sigma_max", sampler.sigma_max);
  num("sampler.sigma_min", sampler.sigma_min);
  integer("sampler.n_anneal", sampler.n_anneal);
  num("sampler.rho", sampler.rho);
  kv.set("sampler.terminal", sampler.terminal);
  integer("sampler.n_ode", sampler.n_ode);
  num("sampler.t_min", sampler.t_min);
  num("sampler.ode_rho", sampler.ode_rho);
  integer("sampler.langevin_steps", sampler.langevin_steps);
  num("sampler.eta", sampler.eta);
  kv.set("sampler.rt_rule", sampler.rt_rule);
  num("sampler.rt_constant", sampler.rt_constant);
  num("sampler.zeta", sampler.zeta);
  kv.set("sampler.variant", sampler.variant);
  kv.set("sampler.grad_mode", sampler.grad_mode);
  num("sampler.fd_step", sampler.fd_step);
  num("sampler.ratio", sampler.ratio);
  num("sampler.eta_pixel", sampler.eta_pixel);
  num("sampler.eta_latent", sampler.eta_latent);
  integer("sampler.latent_dim", sampler.latent_dim);
  integer("sampler.codec_seed", sampler.codec_seed);
  if (sampler.codec_file == "identity") {
    kv.set("sampler.codec", "identity");
  } else if (!sampler.codec_file.empty()) {
    kv.set("sampler.codec", "file");
    kv.set("sampler.codec_file", sampler.codec_file);
  } else {
    kv.set("sampler.codec", "random");
  }

  kv.set("oracle.kind", oracle.kind);
  num("oracle.lo", oracle.lo);
  num("oracle.hi", oracle.hi);
  integer("oracle.resolution", oracle.resolution);
  num("oracle.mode_radius", oracle.mode_radius);
  return kv;
}

// ---------------------------------------------------------------------------
// Problem construction

Problem build_problem(const ExperimentConfig& cfg) {
  Problem pb;
  const auto& ps = cfg.prior;
  try {
    if (ps.full_covs.empty())
      pb.prior = std::make_shared<GaussianMixture>(GaussianMixture::diagonal(ps.weights, ps.means, ps.cov_diags));
    else
      pb.prior = std::make_shared<GaussianMixture>(GaussianMixture::full(ps.weights, ps.means, ps.full_covs));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("prior", e.what());
  }
  const Index d = pb.prior->dim();

  if (ps.score == "exact") {
    pb.score = pb.prior;
  } else if (!ps.dataset.empty()) {
    Mat data = read_matrix(ps.dataset);
    if (data.cols() != d) throw ConfigError("prior.dataset", "dataset dimension does not match the prior");
    pb.score = std::make_shared<EmpiricalScoreModel>(std::move(data));
  } else {
    Rng rng(splitmix64(ps.empirical_seed));
    pb.score = std::make_shared<EmpiricalScoreModel>(pb.prior->sample(rng, ps.empirical_size));
  }

  const auto& os = cfg.op;
  const Shape2 shape{os.rows, d / os.rows};
  try {
    if (os.kind == "identity") {
      pb.op = make_identity(d);
    } else if (os.kind == "mask") {
      if (os.mask.size() > 0) {
        std::vector<bool> keep(static_cast<std::size_t>(d));
        for (Index i = 0; i < d; ++i) keep[static_cast<std::size_t>(i)] = os.mask[i] != 0.0;
        pb.op = make_mask(std::move(keep));
      } else {
        Rng rng(splitmix64(os.mask_seed));
        pb.op = make_random_mask(d, os.keep_fraction, rng);
      }
    } else if (os.kind == "downsample") {
      pb.op = make_downsample(shape, os.factor);
    } else if (os.kind == "conv_blur") {
      pb.op = make_conv_blur(shape, os.kernel_sigma, os.kernel_radius);
    } else if (os.kind == "dft_magnitude") {
      pb.op = make_dft_magnitude(shape, os.oversample);
    } else if (os.kind == "hdr_clip") {
      pb.op = make_hdr_clip(d, os.alpha);
    } else {
      pb.op = make_gauss_bumps2d(os.width, os.baseline);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("operator." + os.kind, e.what());
  }

  const auto& ms = cfg.measurement;
  if (ms.y) {
    if (ms.y->size() != pb.op->out_dim()) throw ConfigError("measurement.y", "length must equal the operator output dimension");
    pb.meas = Measurement{*ms.y, ms.beta_true, ms.beta_model};
    pb.ground_truth = ms.ground_truth;
  } else {
    Rng rng(splitmix64(ms.seed));
    const Vec gt = ms.ground_truth ? *ms.ground_truth : Vec(pb.prior->sample(rng, 1).row(0).transpose());
    pb.meas = corrupt(*pb.op, gt, ms.beta_true, rng, ms.beta_model);
    pb.ground_truth = gt;
  }

  const auto& qs = cfg.oracle;
  if (qs.kind == "grid2d") {
    auto grid = std::make_shared<Grid2dOracle>(*pb.prior, *pb.op, pb.meas, Grid2dOracle::Bounds{qs.lo, qs.hi},
                                               qs.resolution);
    pb.oracle_mode = grid->mode();
    pb.oracle = std::move(grid);
  } else if (qs.kind == "conjugate") {
    if (!pb.op->is_linear()) throw ConfigError("oracle.kind", "conjugate oracle needs a linear operator");
    const Mat h = dense_matrix(*pb.op);
    const Vec y = pb.meas.y - pb.op->apply(Vec::Zero(d));
    if (pb.prior->size() == 1)
      pb.oracle = std::make_shared<ConjugateGaussian>(pb.prior->mean(0), pb.prior->covariance(0), h, y,
                                                      pb.meas.beta_model);
    else
      pb.oracle = std::make_shared<ConjugateGmm>(*pb.prior, h, y, pb.meas.beta_model);
  }

  if (cfg.sampler.method == "latent_daps") {
    const auto& ss = cfg.sampler;
    if (ss.codec_file == "identity") {
      pb.codec = LinearCodec::identity(d);
    } else if (!ss.codec_file.empty()) {
      pb.codec = LinearCodec(read_matrix(ss.codec_file));
      if (pb.codec->data_dim() != d) throw ConfigError("sampler.codec_file", "encoder width must equal d");
    } else {
      Rng rng(splitmix64(ss.codec_seed));
      pb.codec = LinearCodec::random_orthonormal(d, ss.latent_dim == 0 ? d : ss.latent_dim, rng);
    }
    pb.latent_score = std::make_shared<GaussianMixture>(pb.prior->pushforward(pb.codec->encoder()));
  }
  return pb;
}

// ---------------------------------------------------------------------------
// Execution

ChainOutcome run_chain(const Problem& pb, const ExperimentConfig& cfg, Index index, bool record_states) {
  ChainOutcome out;
  const auto& s = cfg.sampler;
  Rng rng = make_chain_rng(cfg.run.seed, static_cast<std::uint64_t>(index));
  const Terminal term = s.terminal == "zero" ? Terminal::kZero : Terminal::kSigmaMin;
  try {
    const AnnealingPlan plan = annealing_plan(s.sigma_max, s.sigma_min, s.n_anneal, s.rho, term);
    const DenoiserConfig den{s.n_ode, s.t_min, s.ode_rho};
    const LangevinConfig lang{s.langevin_steps, s.eta,
                              s.rt_rule == "sigma" ? RadiusRule::kSigma : RadiusRule::kConstant,
                              s.rt_constant};
    SampleResult res;
    if (s.method == "daps") {
      res = daps_sample(*pb.score, *pb.op, pb.meas, DapsConfig{plan, den, lang, record_states}, rng);
    } else if (s.method == "dps") {
      DpsConfig dc;
      dc.plan = plan;
      dc.zeta = s.zeta;
      dc.variant = s.variant == "sde" ? DpsVariant::kSde : DpsVariant::kOde;
      dc.grad_mode = s.grad_mode == "analytic" ? GradMode::kAnalyticJacobian : GradMode::kFiniteDifference;
      dc.fd_step = s.fd_step;
      dc.record_states = record_states;
      res = dps_sample(*pb.score, *pb.op, pb.meas, dc, rng);
    } else {
      LatentDapsConfig lc;
      lc.base = DapsConfig{plan, den, lang, record_states};
      lc.ratio = s.ratio;
      lc.eta_pixel = s.eta_pixel;
      lc.eta_latent = s.eta_latent;
      res = latent_daps_sample(*pb.latent_score, *pb.codec, *pb.op, pb.meas, lc, rng);
    }
    out.x = std::move(res.x);
    out.trajectory = std::move(res.trajectory);
    out.residual = residual_norm(*pb.op, out.x, pb.meas.y);
    if (pb.ground_truth) out.psnr = psnr(out.x, *pb.ground_truth, cfg.run.psnr_range);
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Rng oracle_rng(std::uint64_t seed, std::uint64_t step) {
  return make_chain_rng(splitmix64(seed ^ 0x6F7261636C65ULL), step);
}

void add_metrics(RunResult& r, const Problem& pb, const ExperimentConfig& cfg) {
  std::vector<double> res;
  std::vector<double> ps;
  int failed = 0;
  for (const auto& c : r.chains) {
    if (!c.ok()) {
      ++failed;
      continue;
    }
    res.push_back(c.residual);
    if (!std::isnan(c.psnr)) ps.push_back(c.psnr);
  }
  r.metrics.push_back({"n_failed", -1, static_cast<double>(failed)});
  if (!res.empty()) {
    r.metrics.push_back({"residual_mean", -1, std::accumulate(res.begin(), res.end(), 0.0) / res.size()});
    r.metrics.push_back({"residual_median", -1, median(res)});
  }
  if (!ps.empty()) {
    // +inf entries (exact recovery) dominate the mean; report the median too
    r.metrics.push_back({"psnr_mean", -1, std::accumulate(ps.begin(), ps.end(), 0.0) / ps.size()});
    r.metrics.push_back({"psnr_median", -1, median(ps)});
  }

  const Mat samples = r.samples();
  if (pb.oracle_mode && samples.rows() > 0) {
    const double rad = cfg.oracle.mode_radius;
    Index hits = 0;
    for (Index i = 0; i < samples.rows(); ++i)
      if ((samples.row(i).transpose() - *pb.oracle_mode).norm() <= rad) ++hits;
    r.metrics.push_back({"mode_fraction", -1, static_cast<double>(hits) / samples.rows()});
  }
  if (!pb.oracle || samples.rows() == 0 || samples.rows() > kExactW2Cap) return;

  const Index n = samples.rows();
  const int n_steps = cfg.sampler.n_anneal;
  const bool have_states = !r.chains.empty() && std::all_of(r.chains.begin(), r.chains.end(), [](const auto& c) {
    return !c.ok() || (!c.trajectory.steps.empty() && c.trajectory.steps.front().x_t.size() > 0);
  });
  const bool per_step = have_states && n <= kTrajectoryW2Cap && cfg.sampler.method != "latent_daps";
  if (per_step) {
    for (int i = 0; i < n_steps; ++i) {
      Mat xt(n, samples.cols());
      Index row = 0;
      double sigma = 0.0;
      for (const auto& c : r.chains) {
        if (!c.ok()) continue;
        const auto& st = c.trajectory.steps[static_cast<std::size_t>(i)];
        xt.row(row++) = st.x_t.transpose();
        sigma = st.sigma;
      }
      Rng orng = oracle_rng(cfg.run.seed, static_cast<std::uint64_t>(i));
      const PointCloud ref = pb.oracle->sample(sigma, orng, n);
      r.metrics.push_back({"w2", i, wasserstein2_exact(PointCloud{xt}, ref)});
    }
  }
  Rng orng = oracle_rng(cfg.run.seed, static_cast<std::uint64_t>(n_steps));
  const PointCloud ref = pb.oracle->sample(0.0, orng, n);
  const double w2 = wasserstein2_exact(PointCloud{samples}, ref);
  if (per_step) r.metrics.push_back({"w2", n_steps, w2});
  r.metrics.push_back({"w2_terminal", -1, w2});
}

RunResult execute(const ExperimentConfig& cfg, Exec exec) {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem pb = build_problem(cfg);
  if (cfg.run.threads > 0) set_threads(cfg.run.threads);

  RunResult r;
  r.run_id = cfg.run.run_id;
  r.snapshot = cfg.snapshot();
  const Index n = cfg.run.n_chains;
  const bool states = cfg.run.dump_states || (cfg.oracle.kind != "none" && n <= kTrajectoryW2Cap);
  r.chains.resize(static_cast<std::size_t>(n));
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (Index i = 0; i < n; ++i) r.chains[static_cast<std::size_t>(i)] = run_chain(pb, cfg, i, states);
  } else {
    for (Index i = 0; i < n; ++i) r.chains[static_cast<std::size_t>(i)] = run_chain(pb, cfg, i, states);
  }
  add_metrics(r, pb, cfg);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

Mat RunResult::samples() const {
  Index ok = 0;
  Index d = 0;
  for (const auto& c : chains)
    if (c.ok()) {
      ++ok;
      d = c.x.size();
    }
  Mat m(ok, d);
  Index row = 0;
  for (const auto& c : chains)
    if (c.ok()) m.row(row++) = c.x.transpose();
  return m;
}

std::optional<double> RunResult::metric(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.metric == name && m.step < 0) return m.value;
  return std::nullopt;
}

std::vector<double> RunResult::series(const std::string& name) const {
  std::vector<std::pair<int, double>> pts;
  for (const auto& m : metrics)
    if (m.metric == name && m.step >= 0) pts.emplace_back(m.step, m.value);
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  for (const auto& p : pts) out.push_back(p.second);
  return out;
}

RunResult run_experiment(const ExperimentConfig& cfg, Exec exec) {
  RunResult r = execute(cfg, exec);
  if (!cfg.run.out_dir.empty()) write_outputs(r, cfg.run.out_dir, cfg.run.dump_states);
  return r;
}

RunResult best_of_k(ExperimentConfig cfg, Index k, Exec exec) {
  if (k < 1) throw ConfigError("best_of.k", "must be >= 1");
  cfg.run.n_chains = k;
  RunResult r = execute(cfg, exec);
  const bool have_truth = std::any_of(r.chains.begin(), r.chains.end(),
                                      [](const auto& c) { return c.ok() && !std::isnan(c.psnr); });
  const bool by_psnr = cfg.run.select == "psnr" || (cfg.run.select == "auto" && have_truth);
  std::optional<Index> best;
  for (Index i = 0; i < k; ++i) {
    const auto& c = r.chains[static_cast<std::size_t>(i)];
    if (!c.ok()) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = r.chains[static_cast<std::size_t>(*best)];
    if (by_psnr ? c.psnr > b.psnr : c.residual < b.residual) best = i;
  }
  r.selected = best;
  if (best) {
    const auto& c = r.chains[static_cast<std::size_t>(*best)];
    r.metrics.push_back({"selected_chain", -1, static_cast<double>(*best)});
    r.metrics.push_back({"selected_residual", -1, c.residual});
    if (!std::isnan(c.psnr)) r.metrics.push_back({"selected_psnr", -1, c.psnr});
  }
  if (!cfg.run.out_dir.empty()) write_outputs(r, cfg.run.out_dir, cfg.run.dump_states);
  return r;
}

std::vector<SweepRow> sweep(const KeyValueConfig& base, const std::string& axis,
                            const std::vector<double>& values, Exec exec) {
  const auto& keys = numeric_keys();
  if (std::find(keys.begin(), keys.end(), axis) == keys.end())
    throw ConfigError(axis, "unknown sweep axis (not a numeric configuration key)");
  std::vector<SweepRow> rows;
  for (double v : values) {
    KeyValueConfig kv = base;
    kv.set(axis, format_double(v));
    ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
    if (!cfg.run.out_dir.empty())
      cfg.run.out_dir = (std::filesystem::path(cfg.run.out_dir) / (axis + "=" + format_double(v))).string();
    rows.push_back({v, run_experiment(cfg, exec)});
  }
  return rows;
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
  std::string out = "value,metric,step,metric_value\n";
  for (const auto& row : rows)
    for (const auto& m : row.result.metrics)
      if (m.step < 0)
        out += fmt::format("{},{},{},{}\n", format_double(row.value), m.metric, m.step, format_double(m.value));
  return out;
}

// ---------------------------------------------------------------------------
// Files

std::string samples_csv(const RunResult& r) {
  std::string out = "chain";
  Index d = 0;
  for (const auto& c : r.chains)
    if (c.ok()) d = c.x.size();
  for (Index j = 0; j < d; ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < r.chains.size(); ++i) {
    const auto& c = r.chains[i];
    if (!c.ok()) continue;
    out += std::to_string(i);
    for (Index j = 0; j < c.x.size(); ++j) out += "," + format_double(c.x[j]);
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const RunResult& r, bool with_states) {
  Index d = 0;
  for (const auto& c : r.chains)
    if (c.ok()) d = c.x.size();
  std::string out = "chain,step,sigma,residual_x0hat,residual_x0y";
  if (with_states) {
    for (const char* tag : {"xt", "x0hat", "x0y"})
      for (Index j = 0; j < d; ++j) out += fmt::format(",{}_{}", tag, j);
  }
  out += '\n';
  for (std::size_t i = 0; i < r.chains.size(); ++i) {
    const auto& steps = r.chains[i].trajectory.steps;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const auto& st = steps[s];
      out += fmt::format("{},{},{},{},{}", i, s, format_double(st.sigma), format_double(st.residual_x0hat),
                         format_double(st.residual_x0y));
      if (with_states) {
        for (const Vec* v : {&st.x_t, &st.x0_hat, &st.x0_y})
          for (Index j = 0; j < d; ++j) out += "," + (j < v->size() ? format_double((*v)[j]) : std::string());
      }
      out += '\n';
    }
  }
  return out;
}

std::string metrics_csv(const RunResult& r) {
  std::string out = "run_id,metric,step,value\n";
  for (const auto& m : r.metrics)
    out += fmt::format("{},{},{},{}\n", r.run_id, m.metric, m.step, format_double(m.value));
  for (std::size_t i = 0; i < r.chains.size(); ++i)
    if (!r.chains[i].ok()) out += fmt::format("{},chain_failed,{},1\n", r.run_id, i);
  return out;
}

void write_outputs(const RunResult& r, const std::string& dir, bool with_states) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p(dir);
  write_text((p / "samples.csv").string(), samples_csv(r));
  write_text((p / "trajectory.csv").string(), trajectory_csv(r, with_states));
  write_text((p / "metrics.csv").string(), metrics_csv(r));
  write_text((p / "config.snapshot").string(), r.snapshot);
}

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("DAPS_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (const std::exception&) {
    }
  }
  return 0;
}

}  // namespace daps
