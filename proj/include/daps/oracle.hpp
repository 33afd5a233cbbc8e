#pragma once

#include <array>
#include <memory>

#include "daps/forward.hpp"
#include "daps/metrics.hpp"
#include "daps/parallel.hpp"
#include "daps/score_model.hpp"

namespace daps {

/// Ground-truth p(x_t | y) for a prior/measurement pair.
class PosteriorOracle {
 public:
  virtual ~PosteriorOracle() = default;
  /// n exact (or grid-exact) draws from p(x_t | y) at noise level sigma_t >= 0.
  virtual PointCloud sample(double sigma_t, Rng& rng, Index n) const = 0;
};

/// Gaussian prior N(m0, C0) with linear measurement y = H x + N(0, beta^2 I).
/// Every noisy posterior marginal and conditional is closed form.
class ConjugateGaussian final : public PosteriorOracle {
 public:
  ConjugateGaussian(Vec prior_mean, Mat prior_cov, Mat forward_matrix, Vec y, double beta);

  const Vec& posterior_mean() const { return post_mean_; }
  const Mat& posterior_cov() const { return post_cov_; }

  PointCloud sample(double sigma_t, Rng& rng, Index n) const override;

  /// Exact draw from p(x0 | x_t, y).
  Vec sample_conditional(const Vec& x_t, double sigma_t, Rng& rng) const;

  // Latent witnesses for a linear encoder E (z = E x0 + sigma eps).
  Vec latent_marginal_mean(const Mat& encoder) const;
  /// Covariance of p(z_t | y).
  Mat latent_marginal_cov(const Mat& encoder, double sigma_t) const;
  /// Exact draw from p(x0 | z_t, y).
  Vec sample_conditional_from_latent(const Mat& encoder, const Vec& z_t, double sigma_t,
                                     Rng& rng) const;
  /// Exact draw from p(z0 | z_t, y), computed directly on the latent joint.
  Vec sample_latent_conditional(const Mat& encoder, const Vec& z_t, double sigma_t, Rng& rng) const;

 private:
  Vec prior_mean_;
  Mat prior_cov_;
  Mat h_;
  Vec y_;
  double beta_;
  Vec post_mean_;
  Mat post_cov_;
};

/// GMM prior with a linear-Gaussian measurement: the posterior is again a GMM.
class ConjugateGmm final : public PosteriorOracle {
 public:
  ConjugateGmm(const GaussianMixture& prior, Mat forward_matrix, const Vec& y, double beta);

  const GaussianMixture& posterior() const { return *posterior_; }
  PointCloud sample(double sigma_t, Rng& rng, Index n) const override;

 private:
  std::unique_ptr<GaussianMixture> posterior_;
};

/// Posterior of a 2D prior under an arbitrary operator, tabulated on a
/// regular grid of cell centres and normalised to unit mass.
struct GridBounds {
  double lo = -1.0;
  double hi = 1.5;
};

class Grid2dOracle final : public PosteriorOracle {
 public:
  using Bounds = GridBounds;

  Grid2dOracle(const ScoreModel& prior, const ForwardOperator& op, const Measurement& meas,
               Bounds bounds = {}, Index resolution = 400, Exec exec = Exec::kParallel);

  /// Inverse-CDF draw of a cell, uniform position within it, plus N(0, sigma_t^2 I).
  PointCloud sample(double sigma_t, Rng& rng, Index n) const override;

  /// Cell probabilities (sum to 1); entry (i, j) is x = centre(i), y = centre(j).
  const Mat& mass() const { return mass_; }
  double cell_width() const { return width_; }
  double centre(Index i) const { return bounds_.lo + (static_cast<double>(i) + 0.5) * width_; }
  Vec mode() const;
  double mass_within(const Vec& centre, double radius) const;

 private:
  Bounds bounds_;
  Index resolution_;
  double width_;
  Mat mass_;
  std::vector<double> cdf_;
};

}  // namespace daps
