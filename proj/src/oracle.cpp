#include "daps/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace daps {

namespace {

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

Vec draw_gaussian(const Vec& mean, const Mat& cov, Rng& rng) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(cov));
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return mean + es.eigenvectors() * root.cwiseProduct(standard_normal(rng, mean.size()));
}

struct Conditioned {
  Vec mean;
  Mat cov;
};

// a | b = b_obs for a jointly Gaussian pair.
Conditioned condition(const Vec& mean_a, const Vec& mean_b, const Mat& saa, const Mat& sab,
                      const Mat& sbb, const Vec& b_obs) {
  Eigen::LLT<Mat> llt(sym(sbb));
  if (llt.info() != Eigen::Success) throw std::domain_error("conditioning covariance is not SPD");
  const Mat gain = llt.solve(sab.transpose()).transpose();
  return {mean_a + gain * (b_obs - mean_b), sym(saa - gain * sab.transpose())};
}

}  // namespace

// ---------------------------------------------------------------------------

ConjugateGaussian::ConjugateGaussian(Vec prior_mean, Mat prior_cov, Mat forward_matrix, Vec y,
                                     double beta)
    : prior_mean_(std::move(prior_mean)),
      prior_cov_(std::move(prior_cov)),
      h_(std::move(forward_matrix)),
      y_(std::move(y)),
      beta_(beta) {
  const Index d = prior_mean_.size();
  if (prior_cov_.rows() != d || prior_cov_.cols() != d || h_.cols() != d || h_.rows() != y_.size())
    throw std::invalid_argument("ConjugateGaussian: shape mismatch");
  if (!(beta_ > 0.0)) throw std::invalid_argument("ConjugateGaussian: beta must be > 0");
  const Mat s = h_ * prior_cov_ * h_.transpose() + beta_ * beta_ * Mat::Identity(h_.rows(), h_.rows());
  const auto c = condition(prior_mean_, h_ * prior_mean_, prior_cov_, prior_cov_ * h_.transpose(), s, y_);
  post_mean_ = c.mean;
  post_cov_ = c.cov;
}

PointCloud ConjugateGaussian::sample(double sigma_t, Rng& rng, Index n) const {
  if (sigma_t < 0.0) throw std::invalid_argument("oracle: sigma_t must be >= 0");
  const Index d = post_mean_.size();
  const Mat cov = post_cov_ + sigma_t * sigma_t * Mat::Identity(d, d);
  PointCloud out{Mat(n, d)};
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(cov));
  const Mat root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  for (Index i = 0; i < n; ++i) out.points.row(i) = (post_mean_ + root * standard_normal(rng, d)).transpose();
  return out;
}

Vec ConjugateGaussian::sample_conditional(const Vec& x_t, double sigma_t, Rng& rng) const {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("sample_conditional: sigma_t must be > 0");
  const Index d = prior_mean_.size();
  const Index m = h_.rows();
  // observations b = [x_t; y] = [I; H] x0 + noise
  Mat g(d + m, d);
  g << Mat::Identity(d, d), h_;
  Vec noise(d + m);
  noise << Vec::Constant(d, sigma_t * sigma_t), Vec::Constant(m, beta_ * beta_);
  Vec obs(d + m);
  obs << x_t, y_;
  const Mat sbb = g * prior_cov_ * g.transpose() + Mat(noise.asDiagonal());
  const auto c = condition(prior_mean_, g * prior_mean_, prior_cov_, prior_cov_ * g.transpose(), sbb, obs);
  return draw_gaussian(c.mean, c.cov, rng);
}

Vec ConjugateGaussian::latent_marginal_mean(const Mat& encoder) const { return encoder * post_mean_; }

Mat ConjugateGaussian::latent_marginal_cov(const Mat& encoder, double sigma_t) const {
  const Index k = encoder.rows();
  return encoder * post_cov_ * encoder.transpose() + sigma_t * sigma_t * Mat::Identity(k, k);
}

Vec ConjugateGaussian::sample_conditional_from_latent(const Mat& encoder, const Vec& z_t,
                                                      double sigma_t, Rng& rng) const {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("sample_conditional_from_latent: sigma_t must be > 0");
  const Index k = encoder.rows();
  const Index m = h_.rows();
  const Index d = prior_mean_.size();
  Mat g(k + m, d);
  g << encoder, h_;
  Vec noise(k + m);
  noise << Vec::Constant(k, sigma_t * sigma_t), Vec::Constant(m, beta_ * beta_);
  Vec obs(k + m);
  obs << z_t, y_;
  const Mat sbb = g * prior_cov_ * g.transpose() + Mat(noise.asDiagonal());
  const auto c = condition(prior_mean_, g * prior_mean_, prior_cov_, prior_cov_ * g.transpose(), sbb, obs);
  return draw_gaussian(c.mean, c.cov, rng);
}

Vec ConjugateGaussian::sample_latent_conditional(const Mat& encoder, const Vec& z_t, double sigma_t,
                                                 Rng& rng) const {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("sample_latent_conditional: sigma_t must be > 0");
  const Index k = encoder.rows();
  const Index m = h_.rows();
  // joint of (z0, [z_t; y]) written in latent coordinates
  const Mat czz = encoder * prior_cov_ * encoder.transpose();
  const Mat czy = encoder * prior_cov_ * h_.transpose();
  const Mat cyy = h_ * prior_cov_ * h_.transpose() + beta_ * beta_ * Mat::Identity(m, m);
  Mat sab(k, k + m);
  sab << czz, czy;
  Mat sbb(k + m, k + m);
  sbb << czz + sigma_t * sigma_t * Mat::Identity(k, k), czy, czy.transpose(), cyy;
  const Vec mz = encoder * prior_mean_;
  Vec mb(k + m);
  mb << mz, h_ * prior_mean_;
  Vec obs(k + m);
  obs << z_t, y_;
  const auto c = condition(mz, mb, czz, sab, sbb, obs);
  return draw_gaussian(c.mean, c.cov, rng);
}

// ---------------------------------------------------------------------------

ConjugateGmm::ConjugateGmm(const GaussianMixture& prior, Mat h, const Vec& y, double beta) {
  if (h.cols() != prior.dim() || h.rows() != y.size())
    throw std::invalid_argument("ConjugateGmm: shape mismatch");
  if (!(beta > 0.0)) throw std::invalid_argument("ConjugateGmm: beta must be > 0");
  const Index m = h.rows();
  std::vector<double> logw;
  std::vector<Vec> means;
  std::vector<Mat> covs;
  for (std::size_t j = 0; j < prior.size(); ++j) {
    const Mat cj = prior.covariance(j);
    const Mat s = h * cj * h.transpose() + beta * beta * Mat::Identity(m, m);
    const auto c = condition(prior.mean(j), h * prior.mean(j), cj, cj * h.transpose(), s, y);
    // log N(y; H mu_j, S_j)
    Eigen::LLT<Mat> llt(s);
    const Vec r = y - h * prior.mean(j);
    const Mat l = llt.matrixL();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    const double quad = r.dot(llt.solve(r));
    logw.push_back(std::log(prior.weight(j)) -
                   0.5 * (static_cast<double>(m) * std::log(2.0 * M_PI) + logdet + quad));
    means.push_back(c.mean);
    covs.push_back(c.cov);
  }
  const double norm = log_sum_exp(Eigen::Map<const Vec>(logw.data(), static_cast<Index>(logw.size())));
  std::vector<double> weights;
  for (double lw : logw) weights.push_back(std::exp(lw - norm));
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  posterior_ = std::make_unique<GaussianMixture>(GaussianMixture::full(weights, means, covs));
}

PointCloud ConjugateGmm::sample(double sigma_t, Rng& rng, Index n) const {
  if (sigma_t < 0.0) throw std::invalid_argument("oracle: sigma_t must be >= 0");
  return {posterior_->smoothed(sigma_t).sample(rng, n)};
}

// ---------------------------------------------------------------------------

Grid2dOracle::Grid2dOracle(const ScoreModel& prior, const ForwardOperator& op,
                           const Measurement& meas, Bounds bounds, Index resolution, Exec exec)
    : bounds_(bounds), resolution_(resolution) {
  if (prior.dim() != 2 || op.in_dim() != 2) throw std::invalid_argument("Grid2dOracle: needs a 2D problem");
  if (resolution < 2 || !(bounds.hi > bounds.lo)) throw std::invalid_argument("Grid2dOracle: bad grid");
  width_ = (bounds.hi - bounds.lo) / static_cast<double>(resolution);
  Mat logp(resolution, resolution);
  auto cell = [&](Index i, Index j) {
    const Vec x = Eigen::Vector2d(centre(i), centre(j));
    logp(i, j) = prior.log_density(x, 0.0) - fidelity(op, x, meas);
  };
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < resolution; ++i)
      for (Index j = 0; j < resolution; ++j) cell(i, j);
  } else {
    for (Index i = 0; i < resolution; ++i)
      for (Index j = 0; j < resolution; ++j) cell(i, j);
  }
  const double top = logp.maxCoeff();
  if (!std::isfinite(top)) throw std::domain_error("Grid2dOracle: posterior density is zero on the grid");
  mass_ = (logp.array() - top).exp();
  const double total = mass_.sum();
  if (!(total > 0.0)) throw std::domain_error("Grid2dOracle: posterior density is zero on the grid");
  mass_ /= total;
  cdf_.resize(static_cast<std::size_t>(mass_.size()));
  double acc = 0.0;
  for (Index k = 0; k < mass_.size(); ++k) {
    acc += mass_.data()[k];
    cdf_[static_cast<std::size_t>(k)] = acc;
  }
  cdf_.back() = 1.0;
}

PointCloud Grid2dOracle::sample(double sigma_t, Rng& rng, Index n) const {
  if (sigma_t < 0.0) throw std::invalid_argument("oracle: sigma_t must be >= 0");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  PointCloud out{Mat(n, 2)};
  for (Index s = 0; s < n; ++s) {
    const double u = unif(rng);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const auto k = static_cast<Index>(std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()),
                                                             cdf_.size() - 1));
    // column-major storage: k = i + j * resolution
    const Index i = k % resolution_;
    const Index j = k / resolution_;
    const double x = bounds_.lo + (static_cast<double>(i) + unif(rng)) * width_;
    const double y = bounds_.lo + (static_cast<double>(j) + unif(rng)) * width_;
    out.points(s, 0) = x + sigma_t * normal(rng);
    out.points(s, 1) = y + sigma_t * normal(rng);
  }
  return out;
}

Vec Grid2dOracle::mode() const {
  Index i = 0;
  Index j = 0;
  mass_.maxCoeff(&i, &j);
  return Eigen::Vector2d(centre(i), centre(j));
}

double Grid2dOracle::mass_within(const Vec& c, double radius) const {
  double acc = 0.0;
  for (Index i = 0; i < resolution_; ++i)
    for (Index j = 0; j < resolution_; ++j) {
      const double dx = centre(i) - c[0];
      const double dy = centre(j) - c[1];
      if (dx * dx + dy * dy <= radius * radius) acc += mass_(i, j);
    }
  return acc;
}

}  // namespace daps
