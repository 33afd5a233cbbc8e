#pragma once

#include <vector>

namespace daps {

/// Polynomial (rho-warped) interpolation between t_max and t_min:
///   t_i = (t_max^(1/rho) + i/(n-1) * (t_min^(1/rho) - t_max^(1/rho)))^rho
/// for i = 0..n-1. Strictly decreasing, t_0 = t_max, t_{n-1} = t_min.
std::vector<double> polynomial_grid(double t_max, double t_min, int n, double rho = 7.0);

/// How the outer annealing loop terminates.
enum class Terminal {
  kZero,      ///< grid ends ... sigma_min, 0: the last Langevin output is returned un-noised
  kSigmaMin,  ///< grid ends at sigma_min; the final re-noise uses sigma_min
};

struct AnnealingPlan {
  double sigma_max = 100.0;
  double sigma_min = 0.1;
  int n_anneal = 200;
  double rho = 7.0;
  Terminal terminal = Terminal::kZero;
  /// Length n_anneal + 1, strictly decreasing.
  std::vector<double> grid;

  /// Noise level the i-th outer step starts from (i = 0 .. n_anneal-1).
  double from(int step) const { return grid[static_cast<std::size_t>(step)]; }
  /// Noise level the i-th outer step re-noises to.
  double to(int step) const { return grid[static_cast<std::size_t>(step) + 1]; }
};

/// Outer annealing grid. With Terminal::kZero (default) this is
/// polynomial_grid(sigma_max, sigma_min, n_anneal, rho) followed by an exact
/// 0; with Terminal::kSigmaMin it is polynomial_grid(sigma_max, sigma_min,
/// n_anneal + 1, rho). n_anneal == 1 with kZero gives [sigma_max, 0].
AnnealingPlan annealing_plan(double sigma_max, double sigma_min, int n_anneal,
                             double rho = 7.0, Terminal terminal = Terminal::kZero);

}  // namespace daps
