#include "daps/forward.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace daps {

void ForwardOperator::check_in(const Vec& x) const {
  if (x.size() != in_dim()) throw std::invalid_argument(std::string(kind()) + ": input dimension mismatch");
}

void ForwardOperator::check_out(const Vec& w) const {
  if (w.size() != out_dim())
    throw std::invalid_argument(std::string(kind()) + ": cotangent dimension mismatch");
}

namespace {

void check_shape(Shape2 s) {
  if (s.rows < 1 || s.cols < 1) throw std::invalid_argument("operator shape must be positive");
}

class Identity final : public ForwardOperator {
 public:
  explicit Identity(Index d) : d_(d) {}
  std::string_view kind() const override { return "identity"; }
  Index in_dim() const override { return d_; }
  Index out_dim() const override { return d_; }
  bool is_linear() const override { return true; }
  Vec apply(const Vec& x) const override {
    check_in(x);
    return x;
  }
  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    return w;
  }

 private:
  Index d_;
};

class Mask final : public ForwardOperator {
 public:
  explicit Mask(std::vector<bool> keep) : d_(static_cast<Index>(keep.size())) {
    for (std::size_t i = 0; i < keep.size(); ++i)
      if (keep[i]) kept_.push_back(static_cast<Index>(i));
  }
  std::string_view kind() const override { return "mask"; }
  Index in_dim() const override { return d_; }
  Index out_dim() const override { return static_cast<Index>(kept_.size()); }
  bool is_linear() const override { return true; }
  Vec apply(const Vec& x) const override {
    check_in(x);
    Vec y(out_dim());
    for (Index k = 0; k < out_dim(); ++k) y[k] = x[kept_[static_cast<std::size_t>(k)]];
    return y;
  }
  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    Vec g = Vec::Zero(d_);
    for (Index k = 0; k < out_dim(); ++k) g[kept_[static_cast<std::size_t>(k)]] = w[k];
    return g;
  }

 private:
  Index d_;
  std::vector<Index> kept_;
};

class Downsample final : public ForwardOperator {
 public:
  Downsample(Shape2 shape, Index factor) : in_(shape) {
    check_shape(shape);
    if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
    fr_ = shape.rows == 1 ? 1 : factor;
    fc_ = factor;
    if (shape.rows % fr_ != 0 || shape.cols % fc_ != 0)
      throw std::invalid_argument("downsample: factor must divide the signal shape");
    out_ = {shape.rows / fr_, shape.cols / fc_};
  }
  std::string_view kind() const override { return "downsample"; }
  Index in_dim() const override { return in_.size(); }
  Index out_dim() const override { return out_.size(); }
  bool is_linear() const override { return true; }
  Vec apply(const Vec& x) const override {
    check_in(x);
    Vec y = Vec::Zero(out_dim());
    const double scale = 1.0 / static_cast<double>(fr_ * fc_);
    for (Index r = 0; r < in_.rows; ++r)
      for (Index c = 0; c < in_.cols; ++c)
        y[(r / fr_) * out_.cols + c / fc_] += scale * x[r * in_.cols + c];
    return y;
  }
  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    Vec g(in_dim());
    const double scale = 1.0 / static_cast<double>(fr_ * fc_);
    for (Index r = 0; r < in_.rows; ++r)
      for (Index c = 0; c < in_.cols; ++c)
        g[r * in_.cols + c] = scale * w[(r / fr_) * out_.cols + c / fc_];
    return g;
  }

 private:
  Shape2 in_;
  Shape2 out_;
  Index fr_ = 1;
  Index fc_ = 1;
};

class ConvBlur final : public ForwardOperator {
 public:
  ConvBlur(Shape2 shape, double kernel_sigma, Index radius) : shape_(shape) {
    check_shape(shape);
    if (!(kernel_sigma > 0.0)) throw std::invalid_argument("conv_blur: kernel_sigma must be > 0");
    if (radius < 0) throw std::invalid_argument("conv_blur: radius must be >= 0");
    rr_ = shape.rows == 1 ? 0 : radius;
    rc_ = radius;
    kernel_ = Mat(2 * rr_ + 1, 2 * rc_ + 1);
    for (Index i = -rr_; i <= rr_; ++i)
      for (Index j = -rc_; j <= rc_; ++j)
        kernel_(i + rr_, j + rc_) =
            std::exp(-0.5 * static_cast<double>(i * i + j * j) / (kernel_sigma * kernel_sigma));
    kernel_ /= kernel_.sum();
  }
  std::string_view kind() const override { return "conv_blur"; }
  Index in_dim() const override { return shape_.size(); }
  Index out_dim() const override { return shape_.size(); }
  bool is_linear() const override { return true; }
  Vec apply(const Vec& x) const override {
    check_in(x);
    Vec y = Vec::Zero(out_dim());
    for (Index r = 0; r < shape_.rows; ++r)
      for (Index c = 0; c < shape_.cols; ++c) {
        double acc = 0.0;
        for (Index i = -rr_; i <= rr_; ++i)
          for (Index j = -rc_; j <= rc_; ++j) {
            const Index sr = r - i;
            const Index sc = c - j;
            if (sr < 0 || sr >= shape_.rows || sc < 0 || sc >= shape_.cols) continue;
            acc += kernel_(i + rr_, j + rc_) * x[sr * shape_.cols + sc];
          }
        y[r * shape_.cols + c] = acc;
      }
    return y;
  }
  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    // transpose of apply(): scatter each output back through the kernel
    Vec g = Vec::Zero(in_dim());
    for (Index r = 0; r < shape_.rows; ++r)
      for (Index c = 0; c < shape_.cols; ++c) {
        const double wv = w[r * shape_.cols + c];
        for (Index i = -rr_; i <= rr_; ++i)
          for (Index j = -rc_; j <= rc_; ++j) {
            const Index sr = r - i;
            const Index sc = c - j;
            if (sr < 0 || sr >= shape_.rows || sc < 0 || sc >= shape_.cols) continue;
            g[sr * shape_.cols + sc] += kernel_(i + rr_, j + rc_) * wv;
          }
      }
    return g;
  }

 private:
  Shape2 shape_;
  Index rr_ = 0;
  Index rc_ = 0;
  Mat kernel_;
};

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanHandle = std::shared_ptr<fftw_plan_s>;

class DftMagnitude final : public ForwardOperator {
 public:
  DftMagnitude(Shape2 shape, double oversample) : shape_(shape) {
    check_shape(shape);
    if (!(oversample >= 1.0)) throw std::invalid_argument("dft_magnitude: oversample must be >= 1");
    padded_.rows = shape.rows == 1 ? 1 : static_cast<Index>(std::lround(oversample * shape.rows));
    padded_.cols = static_cast<Index>(std::lround(oversample * shape.cols));
    const int n0 = static_cast<int>(padded_.rows);
    const int n1 = static_cast<int>(padded_.cols);
    std::vector<std::complex<double>> in(static_cast<std::size_t>(padded_.size()));
    std::vector<std::complex<double>> out(in.size());
    auto* pi = reinterpret_cast<fftw_complex*>(in.data());
    auto* po = reinterpret_cast<fftw_complex*>(out.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = PlanHandle(fftw_plan_dft_2d(n0, n1, pi, po, FFTW_FORWARD, flags), PlanDeleter{});
    backward_ = PlanHandle(fftw_plan_dft_2d(n0, n1, pi, po, FFTW_BACKWARD, flags), PlanDeleter{});
  }
  std::string_view kind() const override { return "dft_magnitude"; }
  Index in_dim() const override { return shape_.size(); }
  Index out_dim() const override { return padded_.size(); }

  Vec apply(const Vec& x) const override {
    check_in(x);
    const auto z = transform(x);
    Vec y(out_dim());
    for (Index k = 0; k < out_dim(); ++k) y[k] = std::abs(z[static_cast<std::size_t>(k)]);
    return y;
  }

  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    auto z = transform(x);
    // d|z_k|/dv = Re(conj(z_k) F_k) / |z_k|; zero where |z_k| = 0
    std::vector<std::complex<double>> phase(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double mag = std::abs(z[k]);
      phase[k] = mag > 0.0 ? w[static_cast<Index>(k)] * z[k] / mag : std::complex<double>(0.0);
    }
    std::vector<std::complex<double>> back(z.size());
    fftw_execute_dft(backward_.get(), reinterpret_cast<fftw_complex*>(phase.data()),
                     reinterpret_cast<fftw_complex*>(back.data()));
    Vec g(in_dim());
    for (Index r = 0; r < shape_.rows; ++r)
      for (Index c = 0; c < shape_.cols; ++c)
        g[r * shape_.cols + c] = 0.5 * back[static_cast<std::size_t>(r * padded_.cols + c)].real();
    return g;
  }

 private:
  std::vector<std::complex<double>> transform(const Vec& x) const {
    std::vector<std::complex<double>> in(static_cast<std::size_t>(padded_.size()));
    for (Index r = 0; r < shape_.rows; ++r)
      for (Index c = 0; c < shape_.cols; ++c)
        in[static_cast<std::size_t>(r * padded_.cols + c)] = 0.5 * x[r * shape_.cols + c] + 0.5;
    std::vector<std::complex<double>> out(in.size());
    fftw_execute_dft(forward_.get(), reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  Shape2 shape_;
  Shape2 padded_;
  PlanHandle forward_;
  PlanHandle backward_;
};

class HdrClip final : public ForwardOperator {
 public:
  HdrClip(Index d, double alpha) : d_(d), alpha_(alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("hdr_clip: alpha must be > 0");
  }
  std::string_view kind() const override { return "hdr_clip"; }
  Index in_dim() const override { return d_; }
  Index out_dim() const override { return d_; }
  Vec apply(const Vec& x) const override {
    check_in(x);
    return (alpha_ * x).cwiseMax(-1.0).cwiseMin(1.0);
  }
  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    Vec g(d_);
    for (Index i = 0; i < d_; ++i) {
      const double ax = alpha_ * x[i];
      // boundary points take the interior branch
      g[i] = (ax >= -1.0 && ax <= 1.0) ? alpha_ * w[i] : 0.0;
    }
    return g;
  }

 private:
  Index d_;
  double alpha_;
};

class GaussBumps2d final : public ForwardOperator {
 public:
  GaussBumps2d(double width, double baseline) : width_(width), baseline_(baseline) {
    if (!(width > 0.0)) throw std::invalid_argument("gauss_bumps2d: width must be > 0");
  }
  std::string_view kind() const override { return "gauss_bumps2d"; }
  Index in_dim() const override { return 2; }
  Index out_dim() const override { return 1; }
  Vec apply(const Vec& x) const override {
    check_in(x);
    const auto [b0, b1] = bumps(x);
    return Vec::Constant(1, b0 + b1 - baseline_);
  }
  Vec vjp(const Vec& x, const Vec& w) const override {
    check_in(x);
    check_out(w);
    const auto [b0, b1] = bumps(x);
    const Vec c = center();
    return w[0] * (-2.0 / width_) * (b0 * x + b1 * (x - c));
  }

 private:
  static Vec center() { return Eigen::Vector2d(0.5, 0.5); }
  std::pair<double, double> bumps(const Vec& x) const {
    return {std::exp(-x.squaredNorm() / width_), std::exp(-(x - center()).squaredNorm() / width_)};
  }
  double width_;
  double baseline_;
};

}  // namespace

OperatorPtr make_identity(Index d) {
  if (d < 1) throw std::invalid_argument("identity: dimension must be >= 1");
  return std::make_shared<Identity>(d);
}

OperatorPtr make_mask(std::vector<bool> keep) {
  if (keep.empty()) throw std::invalid_argument("mask: empty mask");
  return std::make_shared<Mask>(std::move(keep));
}

OperatorPtr make_random_mask(Index d, double keep_fraction, Rng& rng) {
  if (d < 1) throw std::invalid_argument("mask: dimension must be >= 1");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw std::invalid_argument("mask: keep_fraction must be in (0, 1]");
  std::vector<Index> order(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto kept = std::max<Index>(1, static_cast<Index>(std::lround(keep_fraction * d)));
  std::vector<bool> keep(static_cast<std::size_t>(d), false);
  for (Index k = 0; k < kept; ++k) keep[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = true;
  return make_mask(std::move(keep));
}

OperatorPtr make_downsample(Shape2 shape, Index factor) {
  return std::make_shared<Downsample>(shape, factor);
}

OperatorPtr make_conv_blur(Shape2 shape, double kernel_sigma, Index radius) {
  return std::make_shared<ConvBlur>(shape, kernel_sigma, radius);
}

OperatorPtr make_dft_magnitude(Shape2 shape, double oversample) {
  return std::make_shared<DftMagnitude>(shape, oversample);
}

OperatorPtr make_hdr_clip(Index d, double alpha) { return std::make_shared<HdrClip>(d, alpha); }

OperatorPtr make_gauss_bumps2d(double width, double baseline) {
  return std::make_shared<GaussBumps2d>(width, baseline);
}

Mat dense_matrix(const ForwardOperator& op) {
  const Vec zero = Vec::Zero(op.in_dim());
  const Vec offset = op.apply(zero);
  Mat m(op.out_dim(), op.in_dim());
  for (Index j = 0; j < op.in_dim(); ++j) {
    Vec e = Vec::Zero(op.in_dim());
    e[j] = 1.0;
    m.col(j) = op.apply(e) - offset;
  }
  return m;
}

double fidelity(const ForwardOperator& op, const Vec& x, const Measurement& meas) {
  if (!(meas.beta_model > 0.0)) throw std::invalid_argument("fidelity: beta_model must be > 0");
  const double b2 = meas.beta_model * meas.beta_model;
  return 0.5 * (op.apply(x) - meas.y).squaredNorm() / b2;
}

Vec fidelity_grad(const ForwardOperator& op, const Vec& x, const Measurement& meas) {
  if (!(meas.beta_model > 0.0)) throw std::invalid_argument("fidelity_grad: beta_model must be > 0");
  const Vec r = op.apply(x) - meas.y;
  return op.vjp(x, r) / (meas.beta_model * meas.beta_model);
}

double residual_norm(const ForwardOperator& op, const Vec& x, const Vec& y) {
  return (op.apply(x) - y).norm();
}

Measurement corrupt(const ForwardOperator& op, const Vec& x, double beta_true, Rng& rng,
                    double beta_model) {
  if (!(beta_true > 0.0)) throw std::invalid_argument("corrupt: beta_true must be > 0");
  Measurement m;
  m.y = op.apply(x) + beta_true * standard_normal(rng, op.out_dim());
  m.beta_true = beta_true;
  m.beta_model = beta_model;
  return m;
}

}  // namespace daps
