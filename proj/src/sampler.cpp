#include "daps/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace daps {

namespace {

void guard(const Vec& x, const char* where) {
  if (!x.allFinite() || x.norm() > kDivergenceNorm)
    throw DivergenceError(std::string(where) +
                          ": iterate diverged (norm > 1e6 or non-finite); reduce the step size");
}

}  // namespace

Vec denoise_ode(const ScoreModel& model, const Vec& x_t, double sigma_t, const DenoiserConfig& cfg) {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("denoise_ode: sigma_t must be > 0");
  if (cfg.n_ode < 1) throw std::invalid_argument("denoise_ode: n_ode must be >= 1");

  std::vector<double> grid;
  if (cfg.n_ode == 1 || sigma_t <= cfg.t_min) {
    grid = {sigma_t};
  } else {
    grid = polynomial_grid(sigma_t, cfg.t_min, cfg.n_ode, cfg.rho);
  }
  grid.push_back(0.0);

  Vec x = x_t;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double t = grid[i];
    // x <- x + (t_next - t) * dx/dt,  dx/dt = -t * score(x, t)
    x += t * (t - grid[i + 1]) * model.score(x, t);
    if (!x.allFinite())
      throw DivergenceError("denoise_ode: non-finite state at t = " + std::to_string(t));
  }
  return x;
}

double LangevinConfig::rt(double sigma_t) const {
  if (sigma_t < 0.0) throw std::invalid_argument("rt: sigma_t must be >= 0");
  return rule == RadiusRule::kSigma ? sigma_t : rt_constant;
}

Vec langevin(const Vec& init, const std::function<Vec(const Vec&)>& grad_potential, int n_steps,
             double eta, Rng& rng) {
  if (n_steps < 1) throw std::invalid_argument("langevin: n_steps must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("langevin: eta must be > 0");
  const double noise = std::sqrt(2.0 * eta);
  Vec x = init;
  for (int j = 0; j < n_steps; ++j) {
    x -= eta * grad_potential(x);
    x += noise * standard_normal(rng, x.size());
    guard(x, "langevin");
  }
  return x;
}

Vec langevin_posterior(const Vec& x0_hat, double r_t, const ForwardOperator& op,
                       const Measurement& meas, const LangevinConfig& cfg, Rng& rng) {
  if (!(r_t > 0.0)) throw std::invalid_argument("langevin_posterior: r_t must be > 0");
  if (!(meas.beta_model > 0.0))
    throw std::invalid_argument("langevin_posterior: beta_model must be > 0");
  const double inv_r2 = 1.0 / (r_t * r_t);
  return langevin(
      x0_hat,
      [&](const Vec& x) -> Vec { return (x - x0_hat) * inv_r2 + fidelity_grad(op, x, meas); },
      cfg.n_steps, cfg.eta, rng);
}

Vec decoupled_step(const Vec& x_t, double sigma_t, double sigma_next,
                   const ConditionalSampler& inner, Rng& rng) {
  Vec x0y = inner(x_t, sigma_t, rng);
  if (sigma_next > 0.0) x0y += sigma_next * standard_normal(rng, x0y.size());
  return x0y;
}

SampleResult daps_sample(const ScoreModel& model, const ForwardOperator& op,
                         const Measurement& meas, const DapsConfig& cfg, Rng& rng) {
  const auto& plan = cfg.plan;
  if (plan.grid.size() != static_cast<std::size_t>(plan.n_anneal) + 1)
    throw std::invalid_argument("daps_sample: malformed annealing plan");
  if (op.in_dim() != model.dim()) throw std::invalid_argument("daps_sample: operator/prior dimension mismatch");

  SampleResult out;
  out.trajectory.steps.reserve(static_cast<std::size_t>(plan.n_anneal));
  Vec x = plan.sigma_max * standard_normal(rng, model.dim());

  for (int i = 0; i < plan.n_anneal; ++i) {
    const double sigma = plan.from(i);
    TrajectoryStep rec;
    rec.sigma = sigma;
    const ConditionalSampler inner = [&](const Vec& xt, double s, Rng& r) -> Vec {
      Vec x0_hat = denoise_ode(model, xt, s, cfg.denoiser);
      Vec x0y = langevin_posterior(x0_hat, cfg.langevin.rt(s), op, meas, cfg.langevin, r);
      rec.residual_x0hat = residual_norm(op, x0_hat, meas.y);
      rec.residual_x0y = residual_norm(op, x0y, meas.y);
      if (cfg.record_states) {
        rec.x0_hat = std::move(x0_hat);
        rec.x0_y = x0y;
      }
      return x0y;
    };
    if (cfg.record_states) rec.x_t = x;
    x = decoupled_step(x, sigma, plan.to(i), inner, rng);
    out.trajectory.steps.push_back(std::move(rec));
  }
  out.x = std::move(x);
  return out;
}

Vec dps_guidance(const ScoreModel& model, const ForwardOperator& op, const Vec& y, const Vec& x_t,
                 double sigma, GradMode mode, double fd_step) {
  const Vec x0 = tweedie_mean(model, x_t, sigma);
  const Vec r = op.apply(x0) - y;
  const double rn = r.norm();
  if (rn == 0.0) return Vec::Zero(x_t.size());
  // grad_{x0} |A(x0) - y| = J_A^T r / |r|
  const Vec outer = op.vjp(x0, r) / rn;
  if (mode == GradMode::kAnalyticJacobian) {
    return tweedie_jacobian(model, x_t, sigma).transpose() * outer;
  }
  const Index d = x_t.size();
  Mat jac(d, d);
  for (Index j = 0; j < d; ++j) {
    Vec hi = x_t;
    Vec lo = x_t;
    hi[j] += fd_step;
    lo[j] -= fd_step;
    jac.col(j) = (tweedie_mean(model, hi, sigma) - tweedie_mean(model, lo, sigma)) / (2.0 * fd_step);
  }
  return jac.transpose() * outer;
}

SampleResult dps_sample(const ScoreModel& model, const ForwardOperator& op, const Measurement& meas,
                        const DpsConfig& cfg, Rng& rng) {
  const auto& plan = cfg.plan;
  if (!(cfg.zeta >= 0.0)) throw std::invalid_argument("dps_sample: zeta must be >= 0");
  if (plan.grid.size() != static_cast<std::size_t>(plan.n_anneal) + 1)
    throw std::invalid_argument("dps_sample: malformed annealing plan");
  if (op.in_dim() != model.dim()) throw std::invalid_argument("dps_sample: operator/prior dimension mismatch");

  SampleResult out;
  out.trajectory.steps.reserve(static_cast<std::size_t>(plan.n_anneal));
  Vec x = plan.sigma_max * standard_normal(rng, model.dim());

  for (int i = 0; i < plan.n_anneal; ++i) {
    const double s = plan.from(i);
    const double s_next = plan.to(i);
    const Vec score = model.score(x, s);
    const Vec x0_hat = x + s * s * score;
    const double res = residual_norm(op, x0_hat, meas.y);

    TrajectoryStep rec;
    rec.sigma = s;
    rec.residual_x0hat = res;
    rec.residual_x0y = res;
    if (cfg.record_states) {
      rec.x_t = x;
      rec.x0_hat = x0_hat;
      rec.x0_y = x0_hat;
    }

    Vec next;
    if (cfg.variant == DpsVariant::kSde) {
      const double dvar = s * s - s_next * s_next;
      next = x + dvar * score;
      if (s_next > 0.0) next += std::sqrt(dvar) * standard_normal(rng, x.size());
    } else {
      next = x + s * (s - s_next) * score;
    }
    if (cfg.zeta > 0.0 && res > 0.0) {
      const Vec g = dps_guidance(model, op, meas.y, x, s, cfg.grad_mode, cfg.fd_step);
      next -= (cfg.zeta / res) * g;
    }
    guard(next, "dps_sample");
    x = std::move(next);
    out.trajectory.steps.push_back(std::move(rec));
  }
  out.x = std::move(x);
  return out;
}

}  // namespace daps
