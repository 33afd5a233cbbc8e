#pragma once

#include <functional>
#include <vector>

#include "daps/forward.hpp"
#include "daps/rng.hpp"
#include "daps/schedule.hpp"
#include "daps/score_model.hpp"

namespace daps {

/// Iterate norm above which samplers abort.
inline constexpr double kDivergenceNorm = 1e6;

struct DenoiserConfig {
  int n_ode = 5;
  double t_min = 0.02;
  double rho = 7.0;
};

/// x0_hat(x_t): Euler integration of the probability-flow ODE
/// dx/dt = -t * score(x, t) from t = sigma_t down the polynomial grid
/// (sigma_t .. t_min, n_ode nodes) and a final step to t = 0. Uses exactly
/// n_ode score evaluations; n_ode == 1 is Tweedie's formula. When
/// sigma_t <= t_min the grid collapses to the single node sigma_t.
Vec denoise_ode(const ScoreModel& model, const Vec& x_t, double sigma_t, const DenoiserConfig& cfg);

enum class RadiusRule { kSigma, kConstant };

struct LangevinConfig {
  int n_steps = 100;
  double eta = 1e-4;
  RadiusRule rule = RadiusRule::kSigma;
  double rt_constant = 0.5;

  /// Radius r_t of the Gaussian approximation N(x0_hat, r_t^2 I) to p(x0 | x_t).
  double rt(double sigma_t) const;
};

/// N steps of
///   x <- x - eta * grad(|x - x0_hat|^2 / (2 r_t^2) + |A(x) - y|^2 / (2 beta^2)) + sqrt(2 eta) eps
/// started at x0_hat. Throws DivergenceError if the iterate leaves the ball of
/// radius kDivergenceNorm or becomes non-finite.
Vec langevin_posterior(const Vec& x0_hat, double r_t, const ForwardOperator& op,
                       const Measurement& meas, const LangevinConfig& cfg, Rng& rng);

/// Unadjusted Langevin on an arbitrary potential gradient; shared by the
/// pixel- and latent-space samplers.
Vec langevin(const Vec& init, const std::function<Vec(const Vec&)>& grad_potential, int n_steps,
             double eta, Rng& rng);

struct TrajectoryStep {
  double sigma = 0.0;      ///< noise level of x_t
  Vec x_t;
  Vec x0_hat;              ///< unconditional denoiser output at x_t
  Vec x0_y;                ///< measurement-conditioned sample (DPS: equals x0_hat)
  double residual_x0hat = 0.0;
  double residual_x0y = 0.0;
};

struct SamplerTrajectory {
  std::vector<TrajectoryStep> steps;
};

struct SampleResult {
  Vec x;
  SamplerTrajectory trajectory;
};

/// Draws x_{0|y} ~ p(x0 | x_t, y) (approximately or exactly).
using ConditionalSampler = std::function<Vec(const Vec& x_t, double sigma_t, Rng& rng)>;

/// One decoupled annealing move: x_{0|y} ~ inner(x_t), then
/// x_next ~ N(x_{0|y}, sigma_next^2 I). Returns x_next (x_{0|y} when
/// sigma_next == 0).
Vec decoupled_step(const Vec& x_t, double sigma_t, double sigma_next,
                   const ConditionalSampler& inner, Rng& rng);

struct DapsConfig {
  AnnealingPlan plan = annealing_plan(100.0, 0.1, 200);
  DenoiserConfig denoiser;
  LangevinConfig langevin;
  bool record_states = true;  ///< keep state vectors in the trajectory
};

/// Decoupled annealing posterior sampling: x_T ~ N(0, sigma_max^2 I), then for
/// every outer step x0_hat = denoise_ode(x_t), x_{0|y} = Langevin around
/// x0_hat, x_next ~ N(x_{0|y}, sigma_next^2 I).
SampleResult daps_sample(const ScoreModel& model, const ForwardOperator& op,
                         const Measurement& meas, const DapsConfig& cfg, Rng& rng);

enum class DpsVariant { kSde, kOde };
enum class GradMode { kAnalyticJacobian, kFiniteDifference };

struct DpsConfig {
  AnnealingPlan plan = annealing_plan(100.0, 0.1, 200);
  double zeta = 1.0;
  DpsVariant variant = DpsVariant::kSde;
  GradMode grad_mode = GradMode::kAnalyticJacobian;
  double fd_step = 1e-5;
  bool record_states = true;
};

/// grad_{x_t} |y - A(E[x0 | x_t])|, with the Jacobian of the Tweedie mean taken
/// analytically or by central differences. Zero when the residual vanishes.
Vec dps_guidance(const ScoreModel& model, const ForwardOperator& op, const Vec& y, const Vec& x_t,
                 double sigma, GradMode mode, double fd_step = 1e-5);

/// DPS baseline on the annealing grid: Euler-Maruyama on the reverse SDE
/// (or Euler on the PF-ODE) plus the guidance step
/// -zeta / |y - A(x0_hat)| * dps_guidance(). The final step to sigma = 0 is
/// noiseless.
SampleResult dps_sample(const ScoreModel& model, const ForwardOperator& op, const Measurement& meas,
                        const DpsConfig& cfg, Rng& rng);

}  // namespace daps
