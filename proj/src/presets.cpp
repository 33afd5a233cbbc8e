#include <stdexcept>

#include "daps/harness.hpp"

namespace daps {

namespace {

constexpr const char* kTwoModeStudy = R"(# two-mode synthetic 2D study
[run]
run_id = appendix_e_daps
n_chains = 100
seed = 1

[prior]
weights = [0.5, 0.5]
mean.0 = [-0.3, -0.4]
mean.1 = [0.6, 0.5]
cov_diag.0 = [0.01, 0.04]
cov_diag.1 = [0.01, 0.04]
score = empirical
empirical_size = 1000
empirical_seed = 11

[operator]
kind = gauss_bumps2d
width = 0.05
baseline = 1

[measurement]
y = [0]
beta_true = 0.3
beta_model = 0.3

[sampler]
method = daps
sigma_max = 100
sigma_min = 0.1
n_anneal = 200
n_ode = 5
langevin_steps = 100
eta = 1e-3

[oracle]
kind = grid2d
lo = -1
hi = 1.5
resolution = 400
mode_radius = 0.3
)";

constexpr const char* kConjugate = R"(# Gaussian prior, three of four coordinates observed
[run]
run_id = conjugate_gaussian
n_chains = 2000
seed = 3

[prior]
mean.0 = [1.0, -0.5, 0.8, 0.6]
cov.0 = [0.5, 0.2, 0.0, 0.1, 0.2, 0.4, 0.1, 0.0, 0.0, 0.1, 0.3, 0.1, 0.1, 0.0, 0.1, 0.6]

[operator]
kind = mask
mask = [1, 1, 1, 0]

[measurement]
y = [1.2, -0.4, 0.5]
beta_true = 0.1
beta_model = 0.1

[sampler]
method = daps
sigma_max = 100
sigma_min = 0.05
n_anneal = 1000
n_ode = 1
langevin_steps = 100
eta = 3e-4

[oracle]
kind = conjugate
)";

constexpr const char* kPhaseRetrieval = R"(# 1D phase retrieval from a three-component prior
[run]
run_id = phase_retrieval_desk
n_chains = 4
seed = 5
select = residual

[prior]
weights = [0.4, 0.3, 0.3]
mean.0 = [0.15, 0.48, 0.33, -0.33, -0.24, 0.45, -0.59, 0.39, 0.36, -0.04, -0.24, -0.27, -0.29, -0.07, 0.01, 0.06]
mean.1 = [0.59, 0.35, 0.15, 0.59, -0.34, -0.41, 0.14, -0.55, -0.56, 0.02, -0.04, 0.5, 0.16, 0.02, 0, -0.3]
mean.2 = [-0.59, -0.37, 0.23, -0.36, -0.16, -0.6, 0.4, -0.41, -0.28, 0.46, 0.01, 0.42, 0.17, 0.29, -0.49, 0.05]
cov_diag.0 = [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01]
cov_diag.1 = [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01]
cov_diag.2 = [0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01]

[operator]
kind = dft_magnitude
rows = 1
oversample = 2

[measurement]
beta_true = 0.05
beta_model = 0.01
seed = 0

[sampler]
method = daps
sigma_max = 100
sigma_min = 0.1
n_anneal = 100
n_ode = 5
langevin_steps = 100
eta = 1e-5
)";

std::string replace_block(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("preset template mismatch: " + from);
  return text.replace(pos, from.size(), to);
}

std::string dps_variant(const std::string& variant, const std::string& zeta) {
  std::string t = replace_block(kTwoModeStudy, "run_id = appendix_e_daps", "run_id = appendix_e_dps_" + variant);
  return replace_block(t, "method = daps\nsigma_max = 100\nsigma_min = 0.1\nn_anneal = 200\nn_ode = 5\nlangevin_steps = 100\neta = 1e-3",
                       "method = dps\nsigma_max = 100\nsigma_min = 0.1\nn_anneal = 200\nvariant = " + variant +
                           "\nzeta = " + zeta);
}

std::string latent_conjugate() {
  std::string t = replace_block(kConjugate, "run_id = conjugate_gaussian", "run_id = latent_conjugate");
  t = replace_block(t, "method = daps\nsigma_max = 100", "method = latent_daps\nsigma_max = 100");
  return replace_block(t, "eta = 3e-4", "eta = 3e-4\nratio = 0\neta_pixel = 3e-4\neta_latent = 3e-4\ncodec = identity");
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"appendix_e_daps", "appendix_e_dps_sde", "appendix_e_dps_ode",
          "conjugate_gaussian", "latent_conjugate", "phase_retrieval_desk"};
}

std::string preset_text(const std::string& name) {
  if (name == "appendix_e_daps") return kTwoModeStudy;
  if (name == "appendix_e_dps_sde") return dps_variant("sde", "0.01");
  if (name == "appendix_e_dps_ode") return dps_variant("ode", "0.003");
  if (name == "conjugate_gaussian") return kConjugate;
  if (name == "latent_conjugate") return latent_conjugate();
  if (name == "phase_retrieval_desk") return kPhaseRetrieval;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace daps
