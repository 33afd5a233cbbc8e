#include "daps/score_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace daps {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2 pi)
constexpr double kFlush = 1e-300;

void check_dim(const Vec& x, Index d) {
  if (x.size() != d) throw std::invalid_argument("score model: dimension mismatch");
}

}  // namespace

double log_sum_exp(const Vec& values) {
  if (values.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = values.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((values.array() - m).exp().sum());
}

// ---------------------------------------------------------------------------
// GaussianMixture

GaussianMixture GaussianMixture::diagonal(std::vector<double> weights, std::vector<Vec> means,
                                          std::vector<Vec> cov_diags) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != cov_diags.size())
    throw std::invalid_argument("GaussianMixture: weights/means/covariances size mismatch");
  GaussianMixture g;
  g.diagonal_ = true;
  g.weights_ = std::move(weights);
  g.means_ = std::move(means);
  g.diags_ = std::move(cov_diags);
  g.dim_ = g.means_.front().size();
  for (const auto& v : g.diags_) {
    if (v.size() != g.dim_) throw std::invalid_argument("GaussianMixture: dimension mismatch");
    if ((v.array() <= 0.0).any())
      throw std::invalid_argument("GaussianMixture: covariance must be positive definite");
  }
  g.finish();
  return g;
}

GaussianMixture GaussianMixture::full(std::vector<double> weights, std::vector<Vec> means,
                                      std::vector<Mat> covs) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != covs.size())
    throw std::invalid_argument("GaussianMixture: weights/means/covariances size mismatch");
  GaussianMixture g;
  g.diagonal_ = false;
  g.weights_ = std::move(weights);
  g.means_ = std::move(means);
  g.dim_ = g.means_.front().size();
  for (const auto& c : covs) {
    if (c.rows() != g.dim_ || c.cols() != g.dim_)
      throw std::invalid_argument("GaussianMixture: dimension mismatch");
    if (!c.isApprox(c.transpose(), 1e-12))
      throw std::invalid_argument("GaussianMixture: covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("GaussianMixture: covariance must be positive definite");
    g.eigvecs_.push_back(es.eigenvectors());
    g.eigvals_.push_back(es.eigenvalues());
  }
  g.finish();
  return g;
}

GaussianMixture GaussianMixture::single(const Vec& mean, const Mat& cov) {
  return full({1.0}, {mean}, {cov});
}

GaussianMixture GaussianMixture::isotropic(const Vec& mean, double stddev) {
  return diagonal({1.0}, {mean}, {Vec::Constant(mean.size(), stddev * stddev)});
}

void GaussianMixture::finish() {
  double total = 0.0;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    if (means_[j].size() != dim_) throw std::invalid_argument("GaussianMixture: dimension mismatch");
    if (!(weights_[j] >= 0.0)) throw std::invalid_argument("GaussianMixture: negative weight");
    total += weights_[j];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("GaussianMixture: weights must sum to 1");
  log_weights_.resize(weights_.size());
  for (std::size_t j = 0; j < weights_.size(); ++j) log_weights_[j] = std::log(weights_[j]);
}

Mat GaussianMixture::covariance(std::size_t j) const {
  if (diagonal_) return diags_[j].asDiagonal();
  return eigvecs_[j] * eigvals_[j].asDiagonal() * eigvecs_[j].transpose();
}

void GaussianMixture::component_terms(const Vec& x, double sigma, std::size_t j, double& log_pdf,
                                      Vec& ptr) const {
  const double s2 = sigma * sigma;
  const Vec r = x - means_[j];
  if (diagonal_) {
    const Vec var = diags_[j].array() + s2;
    ptr = r.array() / var.array();
    log_pdf = -0.5 * (dim_ * kLog2Pi + var.array().log().sum() + r.dot(ptr));
    return;
  }
  const Vec lam = eigvals_[j].array() + s2;
  if (lam.minCoeff() <= 0.0)
    throw std::domain_error("GaussianMixture: inflated covariance is not positive definite");
  const Vec proj = eigvecs_[j].transpose() * r;
  const Vec scaled = proj.array() / lam.array();
  ptr = eigvecs_[j] * scaled;
  log_pdf = -0.5 * (dim_ * kLog2Pi + lam.array().log().sum() + proj.dot(scaled));
}

Mat GaussianMixture::component_precision(double sigma, std::size_t j) const {
  const double s2 = sigma * sigma;
  if (diagonal_) return (1.0 / (diags_[j].array() + s2)).matrix().asDiagonal();
  const Vec inv = 1.0 / (eigvals_[j].array() + s2);
  return eigvecs_[j] * inv.asDiagonal() * eigvecs_[j].transpose();
}

double GaussianMixture::log_density(const Vec& x, double sigma) const {
  check_dim(x, dim_);
  Vec logs(static_cast<Index>(size()));
  Vec ptr;
  for (std::size_t j = 0; j < size(); ++j) {
    double lp = 0.0;
    component_terms(x, sigma, j, lp, ptr);
    logs[static_cast<Index>(j)] = log_weights_[j] + lp;
  }
  return log_sum_exp(logs);
}

Vec GaussianMixture::score(const Vec& x, double sigma) const {
  check_dim(x, dim_);
  const std::size_t k = size();
  if (k == 1) {
    double lp = 0.0;
    Vec ptr;
    component_terms(x, sigma, 0, lp, ptr);
    return -ptr;
  }
  Vec logs(static_cast<Index>(k));
  std::vector<Vec> ptrs(k);
  for (std::size_t j = 0; j < k; ++j) {
    double lp = 0.0;
    component_terms(x, sigma, j, lp, ptrs[j]);
    logs[static_cast<Index>(j)] = log_weights_[j] + lp;
  }
  const double norm = log_sum_exp(logs);
  Vec out = Vec::Zero(dim_);
  for (std::size_t j = 0; j < k; ++j) {
    const double resp = std::exp(logs[static_cast<Index>(j)] - norm);
    if (resp > kFlush) out -= resp * ptrs[j];
  }
  return out;
}

Mat GaussianMixture::score_jacobian(const Vec& x, double sigma) const {
  check_dim(x, dim_);
  const std::size_t k = size();
  Vec logs(static_cast<Index>(k));
  std::vector<Vec> ptrs(k);
  for (std::size_t j = 0; j < k; ++j) {
    double lp = 0.0;
    component_terms(x, sigma, j, lp, ptrs[j]);
    logs[static_cast<Index>(j)] = log_weights_[j] + lp;
  }
  const double norm = log_sum_exp(logs);
  // H = sum_j r_j (-P_j + g_j g_j^T) - g g^T,  g_j = -P_j (x - mu_j), g = sum_j r_j g_j
  Mat hess = Mat::Zero(dim_, dim_);
  Vec g = Vec::Zero(dim_);
  for (std::size_t j = 0; j < k; ++j) {
    const double resp = std::exp(logs[static_cast<Index>(j)] - norm);
    if (resp <= kFlush) continue;
    hess.noalias() -= resp * component_precision(sigma, j);
    hess.noalias() += resp * ptrs[j] * ptrs[j].transpose();
    g -= resp * ptrs[j];
  }
  hess.noalias() -= g * g.transpose();
  return hess;
}

Mat GaussianMixture::sample(Rng& rng, Index n) const {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
  Mat out(n, dim_);
  for (Index i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    const Vec z = standard_normal(rng, dim_);
    if (diagonal_) {
      out.row(i) = (means_[j].array() + diags_[j].array().sqrt() * z.array()).matrix().transpose();
    } else {
      const Vec root = eigvals_[j].cwiseMax(0.0).cwiseSqrt();
      out.row(i) = (means_[j] + eigvecs_[j] * root.cwiseProduct(z)).transpose();
    }
  }
  return out;
}

GaussianMixture GaussianMixture::smoothed(double sigma) const {
  GaussianMixture g = *this;
  const double s2 = sigma * sigma;
  for (auto& v : g.diags_) v.array() += s2;
  for (auto& v : g.eigvals_) v.array() += s2;
  return g;
}

GaussianMixture GaussianMixture::pushforward(const Mat& encoder) const {
  if (encoder.cols() != dim_) throw std::invalid_argument("pushforward: encoder width mismatch");
  GaussianMixture g;
  g.diagonal_ = false;
  g.weights_ = weights_;
  g.dim_ = encoder.rows();
  for (std::size_t j = 0; j < size(); ++j) {
    g.means_.push_back(encoder * means_[j]);
    Mat c = encoder * covariance(j) * encoder.transpose();
    c = 0.5 * (c + c.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(c);
    // rank-deficient images are kept; queries at sigma = 0 then fail
    Vec lam = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (Index i = 0; i < lam.size(); ++i)
      if (std::abs(lam[i]) < tol) lam[i] = 0.0;
    g.eigvecs_.push_back(es.eigenvectors());
    g.eigvals_.push_back(lam);
  }
  g.finish();
  return g;
}

// ---------------------------------------------------------------------------
// EmpiricalScoreModel

EmpiricalScoreModel::EmpiricalScoreModel(Mat dataset) : data_(std::move(dataset)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw std::invalid_argument("EmpiricalScoreModel: dataset must be non-empty");
  if (!data_.allFinite()) throw std::invalid_argument("EmpiricalScoreModel: non-finite data");
}

Vec EmpiricalScoreModel::responsibilities(const Vec& x, double sigma, double* log_norm) const {
  check_dim(x, dim());
  if (!(sigma > 0.0))
    throw std::domain_error("EmpiricalScoreModel: sigma must be > 0 (kernel mixture degenerates)");
  const Index n = data_.rows();
  const double inv2s2 = 0.5 / (sigma * sigma);
  Vec logs(n);
  for (Index i = 0; i < n; ++i) logs[i] = -(data_.row(i).transpose() - x).squaredNorm() * inv2s2;
  const double norm = log_sum_exp(logs);
  if (log_norm) *log_norm = norm;
  Vec resp = (logs.array() - norm).exp();
  for (Index i = 0; i < n; ++i)
    if (resp[i] < kFlush) resp[i] = 0.0;
  return resp;
}

double EmpiricalScoreModel::log_density(const Vec& x, double sigma) const {
  double norm = 0.0;
  responsibilities(x, sigma, &norm);
  const double d = static_cast<double>(dim());
  return norm - std::log(static_cast<double>(data_.rows())) -
         0.5 * d * (kLog2Pi + 2.0 * std::log(sigma));
}

Vec EmpiricalScoreModel::score(const Vec& x, double sigma) const {
  const Vec resp = responsibilities(x, sigma, nullptr);
  const Vec mean = data_.transpose() * resp;
  return (mean - x) / (sigma * sigma);
}

Mat EmpiricalScoreModel::score_jacobian(const Vec& x, double sigma) const {
  // -I / s^2 + Cov_resp(x_i) / s^4
  const Vec resp = responsibilities(x, sigma, nullptr);
  const Vec mean = data_.transpose() * resp;
  const Mat centered = data_.rowwise() - mean.transpose();
  const Mat cov = centered.transpose() * resp.asDiagonal() * centered;
  const double s2 = sigma * sigma;
  return cov / (s2 * s2) - Mat::Identity(dim(), dim()) / s2;
}

Mat EmpiricalScoreModel::sample(Rng& rng, Index n) const {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::uniform_int_distribution<Index> pick(0, data_.rows() - 1);
  Mat out(n, dim());
  for (Index i = 0; i < n; ++i) out.row(i) = data_.row(pick(rng));
  return out;
}

// ---------------------------------------------------------------------------

Vec tweedie_mean(const ScoreModel& model, const Vec& x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("tweedie_mean: sigma must be > 0");
  return x + sigma * sigma * model.score(x, sigma);
}

Mat tweedie_jacobian(const ScoreModel& model, const Vec& x, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("tweedie_jacobian: sigma must be > 0");
  return Mat::Identity(model.dim(), model.dim()) + sigma * sigma * model.score_jacobian(x, sigma);
}

}  // namespace daps
