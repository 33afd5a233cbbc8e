#include "daps/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace daps {

std::vector<double> polynomial_grid(double t_max, double t_min, int n, double rho) {
  if (!(t_min > 0.0)) throw std::invalid_argument("polynomial_grid: t_min must be > 0");
  if (!(t_max > t_min)) throw std::invalid_argument("polynomial_grid: t_max must exceed t_min");
  if (n < 2) throw std::invalid_argument("polynomial_grid: n must be >= 2");
  if (!(rho > 0.0)) throw std::invalid_argument("polynomial_grid: rho must be > 0");

  const double a = std::pow(t_max, 1.0 / rho);
  const double b = std::pow(t_min, 1.0 / rho);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(n - 1);
    out[static_cast<std::size_t>(i)] = std::pow(a + frac * (b - a), rho);
  }
  // pin the endpoints; pow(pow(t, 1/rho), rho) can be off by an ulp
  out.front() = t_max;
  out.back() = t_min;
  return out;
}

AnnealingPlan annealing_plan(double sigma_max, double sigma_min, int n_anneal, double rho,
                             Terminal terminal) {
  if (n_anneal < 1) throw std::invalid_argument("annealing_plan: n_anneal must be >= 1");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("annealing_plan: sigma_min must be > 0");
  if (!(sigma_max > sigma_min))
    throw std::invalid_argument("annealing_plan: sigma_max must exceed sigma_min");

  AnnealingPlan plan;
  plan.sigma_max = sigma_max;
  plan.sigma_min = sigma_min;
  plan.n_anneal = n_anneal;
  plan.rho = rho;
  plan.terminal = terminal;
  if (terminal == Terminal::kZero) {
    if (n_anneal == 1) {
      if (!(rho > 0.0)) throw std::invalid_argument("polynomial_grid: rho must be > 0");
      plan.grid = {sigma_max};
    } else {
      plan.grid = polynomial_grid(sigma_max, sigma_min, n_anneal, rho);
    }
    plan.grid.push_back(0.0);
  } else {
    plan.grid = polynomial_grid(sigma_max, sigma_min, n_anneal + 1, rho);
  }
  return plan;
}

}  // namespace daps
