#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "daps/rng.hpp"
#include "daps/types.hpp"

namespace daps {

/// Measurement map A: R^d -> R^m. Operators are immutable; apply() and
/// vjp() may be called concurrently.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;

  virtual std::string_view kind() const = 0;
  virtual Index in_dim() const = 0;
  virtual Index out_dim() const = 0;
  virtual bool is_linear() const { return false; }

  virtual Vec apply(const Vec& x) const = 0;
  /// J_A(x)^T w (a subgradient where A is not differentiable).
  virtual Vec vjp(const Vec& x, const Vec& w) const = 0;

 protected:
  void check_in(const Vec& x) const;
  void check_out(const Vec& w) const;
};

using OperatorPtr = std::shared_ptr<const ForwardOperator>;

struct Measurement {
  Vec y;
  double beta_true = 0.0;   ///< noise std used to corrupt (0 for an observed override)
  double beta_model = 0.01; ///< noise std assumed inside the samplers
};

/// 2D shape for image-like operators; a 1D signal of length d is {1, d}.
struct Shape2 {
  Index rows = 1;
  Index cols = 1;
  Index size() const { return rows * cols; }
};

// Factories. Shapes must satisfy rows * cols == in_dim.

OperatorPtr make_identity(Index d);
/// Keeps the entries where keep[i] is true; out_dim = number kept.
OperatorPtr make_mask(std::vector<bool> keep);
/// Random mask keeping round(keep_fraction * d) entries.
OperatorPtr make_random_mask(Index d, double keep_fraction, Rng& rng);
/// Block averaging by an integer factor along each axis of `shape`
/// (1D signals: shape = {1, d}, averaging along the single axis).
OperatorPtr make_downsample(Shape2 shape, Index factor);
/// "Same"-size convolution with a normalised Gaussian kernel of std
/// `kernel_sigma` truncated at `radius`, zero boundary.
OperatorPtr make_conv_blur(Shape2 shape, double kernel_sigma, Index radius);
/// y = |F P (0.5 x + 0.5)|: the signal is shifted to [0, 1], zero-padded to
/// `oversample` times its extent along each axis, transformed by the
/// unnormalised DFT, and the magnitudes are returned (row-major).
OperatorPtr make_dft_magnitude(Shape2 shape, double oversample);
/// clip(alpha x, -1, 1) elementwise.
OperatorPtr make_hdr_clip(Index d, double alpha = 2.0);
/// Scalar two-bump map on R^2:
///   exp(-|x|^2 / width) + exp(-|x - c|^2 / width) - baseline,  c = (0.5, 0.5).
OperatorPtr make_gauss_bumps2d(double width = 0.05, double baseline = 0.0);

/// Dense matrix of a linear operator (columns = images of basis vectors).
Mat dense_matrix(const ForwardOperator& op);

/// 0.5 |A(x) - y|^2 / beta_model^2
double fidelity(const ForwardOperator& op, const Vec& x, const Measurement& meas);
/// Gradient of fidelity(): J_A(x)^T (A(x) - y) / beta_model^2.
Vec fidelity_grad(const ForwardOperator& op, const Vec& x, const Measurement& meas);
/// |A(x) - y|
double residual_norm(const ForwardOperator& op, const Vec& x, const Vec& y);

/// y = A(x) + beta_true * eps; beta_model is recorded as given.
Measurement corrupt(const ForwardOperator& op, const Vec& x, double beta_true, Rng& rng,
                    double beta_model = 0.01);

}  // namespace daps
