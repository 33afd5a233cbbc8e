#include "daps/latent.hpp"

#include <cmath>
#include <stdexcept>

namespace daps {

LinearCodec::LinearCodec(Mat encoder) : encoder_(std::move(encoder)) {
  if (encoder_.rows() < 1 || encoder_.rows() > encoder_.cols())
    throw std::invalid_argument("LinearCodec: need 1 <= latent_dim <= data_dim");
  const Mat gram = encoder_ * encoder_.transpose();
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("LinearCodec: encoder is rank deficient");
  decoder_ = encoder_.transpose() * llt.solve(Mat::Identity(gram.rows(), gram.cols()));
}

LinearCodec::LinearCodec(Mat encoder, Mat decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  if (encoder_.rows() > encoder_.cols() || decoder_.rows() != encoder_.cols() ||
      decoder_.cols() != encoder_.rows())
    throw std::invalid_argument("LinearCodec: encoder/decoder shapes do not match");
  const Mat ed = encoder_ * decoder_;
  if ((ed - Mat::Identity(ed.rows(), ed.cols())).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("LinearCodec: E * D must be the identity");
}

LinearCodec LinearCodec::identity(Index d) {
  return LinearCodec(Mat::Identity(d, d), Mat::Identity(d, d));
}

LinearCodec LinearCodec::random_orthonormal(Index d, Index k, Rng& rng) {
  if (k < 1 || k > d) throw std::invalid_argument("LinearCodec: need 1 <= k <= d");
  Mat g(d, k);
  for (Index j = 0; j < k; ++j) g.col(j) = standard_normal(rng, d);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(d, k);
  // sign-fix so the distribution is Haar
  const Mat r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Index j = 0; j < k; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return LinearCodec(q.transpose(), q);
}

Vec latent_score(const GaussianMixture& prior, const LinearCodec& codec, const Vec& z, double sigma) {
  return prior.pushforward(codec.encoder()).score(z, sigma);
}

int pixel_steps(const LatentDapsConfig& cfg) {
  return static_cast<int>(std::lround((1.0 - cfg.ratio) * cfg.base.plan.n_anneal));
}

SampleResult latent_daps_sample(const ScoreModel& latent_prior, const LinearCodec& codec,
                                const ForwardOperator& op, const Measurement& meas,
                                const LatentDapsConfig& cfg, Rng& rng) {
  if (!(cfg.ratio >= 0.0 && cfg.ratio <= 1.0))
    throw std::invalid_argument("latent_daps_sample: ratio must lie in [0, 1]");
  if (latent_prior.dim() != codec.latent_dim())
    throw std::invalid_argument("latent_daps_sample: prior/codec latent dimension mismatch");
  if (op.in_dim() != codec.data_dim())
    throw std::invalid_argument("latent_daps_sample: operator/codec data dimension mismatch");
  if (!(meas.beta_model > 0.0)) throw std::invalid_argument("latent_daps_sample: beta_model must be > 0");

  const auto& plan = cfg.base.plan;
  const int n_pixel = pixel_steps(cfg);
  const Mat& dec = codec.decoder();

  SampleResult out;
  out.trajectory.steps.reserve(static_cast<std::size_t>(plan.n_anneal));
  Vec z = plan.sigma_max * standard_normal(rng, codec.latent_dim());

  for (int i = 0; i < plan.n_anneal; ++i) {
    const double sigma = plan.from(i);
    const bool pixel = i < n_pixel;
    TrajectoryStep rec;
    rec.sigma = sigma;
    const ConditionalSampler inner = [&](const Vec& zt, double s, Rng& r) -> Vec {
      const Vec z0_hat = denoise_ode(latent_prior, zt, s, cfg.base.denoiser);
      const double rt = cfg.base.langevin.rt(s);
      if (!(rt > 0.0)) throw std::invalid_argument("latent_daps_sample: r_t must be > 0");
      const double inv_r2 = 1.0 / (rt * rt);
      const int n = cfg.base.langevin.n_steps;
      const Vec x0_hat = codec.decode(z0_hat);
      Vec x0y;
      Vec z0y;
      if (pixel) {
        x0y = langevin(
            x0_hat,
            [&](const Vec& x) -> Vec { return (x - x0_hat) * inv_r2 + fidelity_grad(op, x, meas); },
            n, cfg.eta_pixel, r);
        z0y = codec.encode(x0y);
      } else {
        z0y = langevin(
            z0_hat,
            [&](const Vec& zz) -> Vec {
              return (zz - z0_hat) * inv_r2 + dec.transpose() * fidelity_grad(op, dec * zz, meas);
            },
            n, cfg.eta_latent, r);
        x0y = codec.decode(z0y);
      }
      rec.residual_x0hat = residual_norm(op, x0_hat, meas.y);
      rec.residual_x0y = residual_norm(op, x0y, meas.y);
      if (cfg.base.record_states) {
        rec.x0_hat = x0_hat;
        rec.x0_y = x0y;
      }
      return z0y;
    };
    if (cfg.base.record_states) rec.x_t = codec.decode(z);
    z = decoupled_step(z, sigma, plan.to(i), inner, rng);
    out.trajectory.steps.push_back(std::move(rec));
  }
  out.x = codec.decode(z);
  return out;
}

SampleResult latent_daps_sample(const GaussianMixture& prior, const LinearCodec& codec,
                                const ForwardOperator& op, const Measurement& meas,
                                const LatentDapsConfig& cfg, Rng& rng) {
  const GaussianMixture latent = prior.pushforward(codec.encoder());
  return latent_daps_sample(static_cast<const ScoreModel&>(latent), codec, op, meas, cfg, rng);
}

}  // namespace daps
