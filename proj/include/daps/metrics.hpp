#pragma once

#include <limits>
#include <vector>

#include "daps/parallel.hpp"
#include "daps/rng.hpp"
#include "daps/types.hpp"

namespace daps {

/// Uniformly weighted point cloud, one point per row.
struct PointCloud {
  Mat points;
  Index size() const { return points.rows(); }
  Index dim() const { return points.cols(); }
};

/// Largest cloud accepted by wasserstein2_exact.
inline constexpr Index kExactW2Cap = 2048;

/// Pairwise squared Euclidean distances, rows of a against rows of b.
Mat squared_distances(const Mat& a, const Mat& b, Exec exec = Exec::kParallel);

/// Minimum-cost perfect assignment for a square cost matrix by shortest
/// augmenting paths with dual potentials, O(n^3). Returns row -> column.
std::vector<Index> solve_assignment(const Mat& cost);

/// Exact 2-Wasserstein distance between equal-size uniform clouds:
/// sqrt(min_perm mean |a_i - b_perm(i)|^2).
double wasserstein2_exact(const PointCloud& a, const PointCloud& b, Exec exec = Exec::kParallel);

/// Closed-form 1D W2 between equal-size samples (sorted coupling).
double wasserstein2_1d(std::vector<double> a, std::vector<double> b);

/// Sliced W2: sqrt of d times the Monte-Carlo mean, over random unit
/// directions, of the squared 1D W2 of the projections. The factor d makes it
/// agree with exact W2 for translations and in 1D; it never exceeds exact W2
/// in expectation.
double wasserstein2_sliced(const PointCloud& a, const PointCloud& b, int n_projections, Rng& rng);

/// Returned by psnr() when the inputs coincide.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(range^2 / MSE).
double psnr(const Vec& a, const Vec& b, double range);

}  // namespace daps
