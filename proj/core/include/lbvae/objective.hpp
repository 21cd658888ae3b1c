#pragma once

#include <cstdint>

#include "lbvae/gaussian.hpp"

namespace lbvae {

/// Population objective terms, all in nats except l2_penalty (squared observation units).
struct ObjectiveBreakdown {
    double recon_nll = 0.0;
    double kl = 0.0;
    double l2_penalty = 0.0;
    double total = 0.0;
};

/// Closed forms with E = (I - AB) Sigma_Y (I - AB)^T + A Sigma_W A^T:
///   recon_nll  = 1/2 [tr(Sigma_Z^{-1} E) + log det(2 pi Sigma_Z)]
///   kl         = 1/2 [tr Sigma_W + tr(B Sigma_Y B^T) - m - log det Sigma_W]
///   l2_penalty = tr E                      (decoder mean, Z excluded)
///   total      = recon_nll + beta kl + lambda l2_penalty
ObjectiveBreakdown objective_value(const GenerativeConfig &cfg, const ModelParams &params, double beta,
                                   double lambda);
ObjectiveBreakdown objective_value(const SpdMatrix &sigma_y, const ModelParams &params, double beta,
                                   double lambda);

struct MonteCarloObjective {
    ObjectiveBreakdown mean;
    ObjectiveBreakdown std_error;
    long samples = 0;
};

/// Sampling estimate of the objective terms: draws (V, noise, W), scores
/// log N(y; Ax, Sigma_Z), log q(x|y) - log p(x) and ||y - Ax||^2 per sample.
/// Requires n_samples >= 1000.
MonteCarloObjective monte_carlo_objective(const GenerativeConfig &cfg, const ModelParams &params, double beta,
                                          double lambda, long n_samples, std::uint64_t seed);

/// Gradients with respect to A, B and the lower Cholesky factors of Sigma_Z and Sigma_W.
struct ObjectiveGradient {
    Matrix a;
    Matrix b;
    Matrix l_z;  // lower triangular
    Matrix l_w;  // lower triangular

    [[nodiscard]] double norm() const;
};

ObjectiveGradient objective_gradient(const GenerativeConfig &cfg, const ModelParams &params, double beta,
                                     double lambda);
ObjectiveGradient objective_gradient(const SpdMatrix &sigma_y, const ModelParams &params, double beta,
                                     double lambda);

/// Gradients with respect to the symmetric covariances themselves (before the
/// Cholesky chain rule). Exposed for the optimizer and for tests.
struct CovarianceGradient {
    Matrix a;
    Matrix b;
    Matrix sigma_z;
    Matrix sigma_w;
};
CovarianceGradient objective_covariance_gradient(const SpdMatrix &sigma_y, const ModelParams &params, double beta,
                                                 double lambda);

}  // namespace lbvae
