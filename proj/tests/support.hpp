#pragma once

#include <cmath>
#include <functional>

#include "daps/forward.hpp"
#include "daps/score_model.hpp"

namespace daps::test {

/// Central finite-difference gradient of a scalar function.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vec p = x;
    Vec m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2.0 * h);
  }
  return g;
}

/// Central finite-difference Jacobian of a vector function (columns = inputs).
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  const Index m = f(x).size();
  Mat j(m, x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vec p = x;
    Vec q = x;
    p[i] += h;
    q[i] -= h;
    j.col(i) = (f(p) - f(q)) / (2.0 * h);
  }
  return j;
}

/// The two-component prior of the 2D study.
inline GaussianMixture two_mode_prior() {
  return GaussianMixture::diagonal({0.5, 0.5}, {Eigen::Vector2d(-0.3, -0.4), Eigen::Vector2d(0.6, 0.5)},
                                   {Eigen::Vector2d(0.01, 0.04), Eigen::Vector2d(0.01, 0.04)});
}

inline Vec uniform_vec(Rng& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

inline Mat sample_mean_cov(const Mat& x, Vec& mean) {
  mean = x.colwise().mean().transpose();
  const Mat c = x.rowwise() - mean.transpose();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace daps::test
