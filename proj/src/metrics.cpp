#include "daps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <omp.h>

namespace daps {

void set_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

Mat squared_distances(const Mat& a, const Mat& b, Exec exec) {
  if (a.cols() != b.cols()) throw std::invalid_argument("squared_distances: dimension mismatch");
  const Index n = a.rows();
  const Index m = b.rows();
  Mat out(n, m);
  if (exec == Exec::kParallel) {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  } else {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  }
  return out;
}

std::vector<Index> solve_assignment(const Mat& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: cost matrix must be square");
  if (n == 0) return {};
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual source
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0);  // column -> row
  std::vector<Index> way(static_cast<std::size_t>(n + 1), 0);
  std::vector<double> minv(static_cast<std::size_t>(n + 1));
  std::vector<char> used(static_cast<std::size_t>(n + 1));

  for (Index row = 1; row <= n; ++row) {
    match[0] = row;
    Index col0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[static_cast<std::size_t>(col0)] = 1;
      const Index r0 = match[static_cast<std::size_t>(col0)];
      double delta = inf;
      Index col1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double reduced = cost(r0 - 1, j - 1) - u[static_cast<std::size_t>(r0)] - v[sj];
        if (reduced < minv[sj]) {
          minv[sj] = reduced;
          way[sj] = col0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          col1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      col0 = col1;
    } while (match[static_cast<std::size_t>(col0)] != 0);
    do {
      const Index col1 = way[static_cast<std::size_t>(col0)];
      match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<Index> assignment(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j)
    assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

double wasserstein2_exact(const PointCloud& a, const PointCloud& b, Exec exec) {
  if (a.size() != b.size()) throw std::invalid_argument("wasserstein2_exact: clouds must have equal size");
  if (a.dim() != b.dim()) throw std::invalid_argument("wasserstein2_exact: dimension mismatch");
  if (a.size() < 1) throw std::invalid_argument("wasserstein2_exact: empty cloud");
  if (a.size() > kExactW2Cap)
    throw std::invalid_argument("wasserstein2_exact: n exceeds 2048, use wasserstein2_sliced");
  const Mat cost = squared_distances(a.points, b.points, exec);
  const auto perm = solve_assignment(cost);
  // summing the matched costs in sorted order makes W2(a, b) == W2(b, a) bitwise
  std::vector<double> matched(static_cast<std::size_t>(a.size()));
  for (Index i = 0; i < a.size(); ++i) matched[static_cast<std::size_t>(i)] = cost(i, perm[static_cast<std::size_t>(i)]);
  std::sort(matched.begin(), matched.end());
  double total = 0.0;
  for (double c : matched) total += c;
  return std::sqrt(std::max(0.0, total / static_cast<double>(a.size())));
}

double wasserstein2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("wasserstein2_1d: samples must be equal-size and non-empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(total / static_cast<double>(a.size()));
}

double wasserstein2_sliced(const PointCloud& a, const PointCloud& b, int n_projections, Rng& rng) {
  if (n_projections < 1) throw std::invalid_argument("wasserstein2_sliced: n_projections must be >= 1");
  if (a.dim() != b.dim()) throw std::invalid_argument("wasserstein2_sliced: dimension mismatch");
  if (a.size() != b.size() || a.size() < 1)
    throw std::invalid_argument("wasserstein2_sliced: clouds must have equal, non-zero size");
  const auto n = static_cast<std::size_t>(a.size());
  std::vector<double> pa(n);
  std::vector<double> pb(n);
  double total = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    Vec dir = standard_normal(rng, a.dim());
    const double norm = dir.norm();
    if (norm == 0.0) {
      --p;
      continue;
    }
    dir /= norm;
    const Vec qa = a.points * dir;
    const Vec qb = b.points * dir;
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = qa[static_cast<Index>(i)];
      pb[i] = qb[static_cast<Index>(i)];
    }
    const double w = wasserstein2_1d(pa, pb);
    total += w * w;
  }
  return std::sqrt(static_cast<double>(a.dim()) * total / n_projections);
}

double psnr(const Vec& a, const Vec& b, double range) {
  if (!(range > 0.0)) throw std::invalid_argument("psnr: range must be > 0");
  if (a.size() != b.size() || a.size() == 0) throw std::invalid_argument("psnr: size mismatch");
  const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(range * range / mse);
}

}  // namespace daps
