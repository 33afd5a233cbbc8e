#pragma once

#include <memory>
#include <vector>

#include "daps/rng.hpp"
#include "daps/types.hpp"

namespace daps {

/// A prior with exact noisy log-density and score of p(x; sigma), the prior
/// convolved with N(0, sigma^2 I). Implementations are immutable and all
/// queries may be issued concurrently.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual Index dim() const = 0;
  virtual double log_density(const Vec& x, double sigma) const = 0;
  /// grad_x log p(x; sigma)
  virtual Vec score(const Vec& x, double sigma) const = 0;
  /// Hessian of log p(x; sigma), i.e. the Jacobian of score().
  virtual Mat score_jacobian(const Vec& x, double sigma) const = 0;
  /// n i.i.d. prior draws, one per row.
  virtual Mat sample(Rng& rng, Index n) const = 0;
};

/// Gaussian mixture with diagonal or full SPD covariances.
class GaussianMixture final : public ScoreModel {
 public:
  struct Component {
    double weight;
    Vec mean;
    Mat cov;  // full d x d
  };

  /// Diagonal covariances, one diagonal per component.
  static GaussianMixture diagonal(std::vector<double> weights, std::vector<Vec> means,
                                  std::vector<Vec> cov_diags);
  static GaussianMixture full(std::vector<double> weights, std::vector<Vec> means,
                              std::vector<Mat> covs);
  static GaussianMixture single(const Vec& mean, const Mat& cov);
  static GaussianMixture isotropic(const Vec& mean, double stddev);

  Index dim() const override { return dim_; }
  double log_density(const Vec& x, double sigma) const override;
  Vec score(const Vec& x, double sigma) const override;
  Mat score_jacobian(const Vec& x, double sigma) const override;
  Mat sample(Rng& rng, Index n) const override;

  std::size_t size() const { return weights_.size(); }
  double weight(std::size_t j) const { return weights_[j]; }
  const Vec& mean(std::size_t j) const { return means_[j]; }
  Mat covariance(std::size_t j) const;
  bool is_diagonal() const { return diagonal_; }

  /// Same mixture with every covariance inflated by sigma^2 I.
  GaussianMixture smoothed(double sigma) const;
  /// Image under x -> E x (means E mu, covariances E Sigma E^T).
  GaussianMixture pushforward(const Mat& encoder) const;

 private:
  GaussianMixture() = default;
  void finish();

  // Per-component log N(x; mu_j, Sigma_j + sigma^2 I) and the whitened
  // residual (Sigma_j + sigma^2 I)^{-1} (x - mu_j).
  void component_terms(const Vec& x, double sigma, std::size_t j, double& log_pdf,
                       Vec& precision_times_residual) const;
  Mat component_precision(double sigma, std::size_t j) const;

  Index dim_ = 0;
  bool diagonal_ = true;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<Vec> means_;
  std::vector<Vec> diags_;        // diagonal path
  std::vector<Mat> eigvecs_;  // full path: Sigma = U diag(lambda) U^T
  std::vector<Vec> eigvals_;
};

/// Equal-weight Gaussian kernel mixture over a point dataset:
///   p(x; sigma) = (1/n) sum_i N(x; x_i, sigma^2 I),
/// the closed-form noisy density of the empirical distribution. Only defined
/// for sigma > 0.
class EmpiricalScoreModel final : public ScoreModel {
 public:
  explicit EmpiricalScoreModel(Mat dataset);

  Index dim() const override { return data_.cols(); }
  double log_density(const Vec& x, double sigma) const override;
  Vec score(const Vec& x, double sigma) const override;
  Mat score_jacobian(const Vec& x, double sigma) const override;
  /// Uniform resampling of dataset rows.
  Mat sample(Rng& rng, Index n) const override;

  const Mat& dataset() const { return data_; }

 private:
  // Kernel responsibilities at (x, sigma); entries below 1e-300 are zero.
  Vec responsibilities(const Vec& x, double sigma, double* log_norm) const;

  Mat data_;  // n x d
};

/// E[x0 | x_t] = x_t + sigma^2 * score(x_t, sigma). Requires sigma > 0.
Vec tweedie_mean(const ScoreModel& model, const Vec& x, double sigma);

/// Jacobian of tweedie_mean with respect to x_t: I + sigma^2 * Hessian.
Mat tweedie_jacobian(const ScoreModel& model, const Vec& x, double sigma);

/// log-sum-exp of a span of values; -inf for an empty or all -inf input.
double log_sum_exp(const Vec& values);

}  // namespace daps
