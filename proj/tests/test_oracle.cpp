#include <doctest.h>

#include <cmath>

#include "daps/oracle.hpp"
#include "support.hpp"

using namespace daps;
using daps::test::sample_mean_cov;
using daps::test::two_mode_prior;

namespace {

struct ConjugateProblem {
  Vec m0 = Eigen::Vector3d(0.2, -0.1, 0.4);
  Mat c0;
  Mat h;
  Vec y = Eigen::Vector2d(0.5, -0.3);
  double beta = 0.3;
  ConjugateProblem() : c0(3, 3), h(2, 3) {
    c0 << 0.5, 0.2, 0.0, 0.2, 0.4, 0.1, 0.0, 0.1, 0.3;
    h << 1.0, 0.0, 0.5, 0.0, 1.0, -1.0;
  }
};

struct ZeroDensity final : ScoreModel {
  Index dim() const override { return 2; }
  double log_density(const Vec&, double) const override { return -INFINITY; }
  Vec score(const Vec& x, double) const override { return Vec::Zero(x.size()); }
  Mat score_jacobian(const Vec&, double) const override { return Mat::Zero(2, 2); }
  Mat sample(Rng&, Index n) const override { return Mat::Zero(n, 2); }
};

}  // namespace

TEST_CASE("conjugate Gaussian posterior") {
  const ConjugateProblem p;
  const ConjugateGaussian o(p.m0, p.c0, p.h, p.y, p.beta);
  // information form, independently of the gain form used inside
  const Mat prec = p.c0.inverse() + p.h.transpose() * p.h / (p.beta * p.beta);
  const Mat cov = prec.inverse();
  const Vec mean = cov * (p.c0.inverse() * p.m0 + p.h.transpose() * p.y / (p.beta * p.beta));
  CHECK((o.posterior_mean() - mean).norm() <= 1e-12);
  CHECK((o.posterior_cov() - cov).norm() <= 1e-12);

  Rng rng(1);
  const Index n = 100000;
  Vec m;
  const Mat c = sample_mean_cov(o.sample(0.0, rng, n).points, m);
  for (Index i = 0; i < 3; ++i) {
    CHECK(std::abs(m[i] - mean[i]) <= 3.0 * std::sqrt(cov(i, i) / n));
    for (Index j = 0; j < 3; ++j)
      CHECK(std::abs(c(i, j) - cov(i, j)) <= 3.0 * std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n));
  }

  const double big = 50.0;
  const Mat cb = sample_mean_cov(o.sample(big, rng, 20000).points, m);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(cb(i, i) / (big * big) - 1.0) <= 0.05);
}

TEST_CASE("conjugate GMM with one component equals the Gaussian oracle") {
  const ConjugateProblem p;
  const auto prior = GaussianMixture::single(p.m0, p.c0);
  const ConjugateGmm g(prior, p.h, p.y, p.beta);
  const ConjugateGaussian o(p.m0, p.c0, p.h, p.y, p.beta);
  REQUIRE(g.posterior().size() == 1);
  CHECK((g.posterior().mean(0) - o.posterior_mean()).norm() <= 1e-12);
  CHECK((g.posterior().covariance(0) - o.posterior_cov()).norm() <= 1e-12);
}

TEST_CASE("conjugate GMM reweights components by their evidence") {
  const auto prior = two_mode_prior();
  Mat h(1, 2);
  h << 1.0, 0.0;
  const Vec y = Vec::Constant(1, 0.6);
  const double beta = 0.2;
  const ConjugateGmm g(prior, h, y, beta);
  // evidence of component j: N(y; h mu_j, h S_j h^T + beta^2)
  double ev[2];
  for (int j = 0; j < 2; ++j) {
    const double m = prior.mean(j)[0];
    const double v = prior.covariance(j)(0, 0) + beta * beta;
    ev[j] = std::exp(-0.5 * (y[0] - m) * (y[0] - m) / v) / std::sqrt(v);
  }
  CHECK(g.posterior().weight(0) == doctest::Approx(ev[0] / (ev[0] + ev[1])).epsilon(1e-10));
}

TEST_CASE("grid oracle on the two-mode study") {
  const auto prior = two_mode_prior();
  const auto op = make_gauss_bumps2d(0.05, 1.0);
  const Measurement meas{Vec::Zero(1), 0.3, 0.3};
  const Grid2dOracle grid(prior, *op, meas);
  CHECK(std::abs(grid.mass().sum() - 1.0) <= 1e-6);
  CHECK((grid.mass().array() >= 0.0).all());
  const Vec mode = grid.mode();
  // independent numpy evaluation on the same 400 x 400 cell centres
  CHECK(mode[0] == doctest::Approx(0.571875).epsilon(1e-12));
  CHECK(mode[1] == doctest::Approx(0.496875).epsilon(1e-12));
  CHECK(std::abs(grid.mass_within(mode, 0.3) - 0.9555486776041723) <= 1e-9);
  CHECK(std::abs(grid.mass_within(Vec::Zero(2), 0.2) - 0.015447178139089817) <= 1e-9);

  const Grid2dOracle serial(prior, *op, meas, {}, 400, Exec::kSerial);
  CHECK(serial.mass() == grid.mass());

  Rng rng(2);
  const Mat draws = grid.sample(0.0, rng, 200000).points;
  const Vec mean = draws.colwise().mean().transpose();
  CHECK(mean[0] == doctest::Approx(0.5231921684539316).epsilon(5e-3));
  CHECK(mean[1] == doctest::Approx(0.4728188969941429).epsilon(5e-3));

  Vec m;
  const Mat c = sample_mean_cov(grid.sample(40.0, rng, 20000).points, m);
  CHECK(std::abs(c(0, 0) / 1600.0 - 1.0) <= 0.05);
  CHECK(std::abs(c(1, 1) / 1600.0 - 1.0) <= 0.05);
  CHECK_THROWS(grid.sample(-1.0, rng, 1));
}

TEST_CASE("grid oracle errors") {
  const auto op = make_gauss_bumps2d();
  const Measurement meas{Vec::Zero(1), 0.3, 0.3};
  CHECK_THROWS_AS(Grid2dOracle(ZeroDensity{}, *op, meas), std::domain_error);
  CHECK_THROWS(Grid2dOracle(GaussianMixture::isotropic(Vec::Zero(3), 1.0), *make_identity(3), meas));
}
