#pragma once

#include "daps/sampler.hpp"

namespace daps {

/// Linear encoder/decoder pair with E * D = I on the latent space.
class LinearCodec {
 public:
  /// Decoder is the right inverse E^T (E E^T)^{-1}. Requires full row rank.
  explicit LinearCodec(Mat encoder);
  LinearCodec(Mat encoder, Mat decoder);

  static LinearCodec identity(Index d);
  /// E with k orthonormal rows drawn from the Haar measure, D = E^T.
  static LinearCodec random_orthonormal(Index d, Index k, Rng& rng);

  Index data_dim() const { return encoder_.cols(); }
  Index latent_dim() const { return encoder_.rows(); }
  const Mat& encoder() const { return encoder_; }
  const Mat& decoder() const { return decoder_; }

  Vec encode(const Vec& x) const { return encoder_ * x; }
  Vec decode(const Vec& z) const { return decoder_ * z; }

 private:
  Mat encoder_;  // k x d
  Mat decoder_;  // d x k
};

/// Score of the latent prior: the pushforward of `prior` through the encoder,
/// smoothed by sigma^2 I.
Vec latent_score(const GaussianMixture& prior, const LinearCodec& codec, const Vec& z, double sigma);

struct LatentDapsConfig {
  DapsConfig base = {annealing_plan(10.0, 0.1, 200), {}, {}, true};
  /// Fraction of annealing steps that run latent-space Langevin. The first
  /// round((1 - ratio) * n_anneal) steps run pixel-space Langevin.
  double ratio = 0.1;
  double eta_pixel = 1e-4;
  double eta_latent = 1e-4;
};

/// Number of leading annealing steps that use pixel-space Langevin.
int pixel_steps(const LatentDapsConfig& cfg);

/// DAPS with a latent prior (Algorithm with encoder/decoder): annealing
/// happens on z; each step denoises z with the latent PF-ODE, draws a
/// posterior sample either in pixel space around D(z0_hat) (then re-encodes)
/// or directly in latent space with fidelity through A(D(z)), and re-noises z.
/// Returns D(z_0). Trajectory snapshots are decoded to pixel space.
SampleResult latent_daps_sample(const ScoreModel& latent_prior, const LinearCodec& codec,
                                const ForwardOperator& op, const Measurement& meas,
                                const LatentDapsConfig& cfg, Rng& rng);

/// Convenience overload that pushes a pixel-space GMM through the encoder.
SampleResult latent_daps_sample(const GaussianMixture& prior, const LinearCodec& codec,
                                const ForwardOperator& op, const Measurement& meas,
                                const LatentDapsConfig& cfg, Rng& rng);

}  // namespace daps
