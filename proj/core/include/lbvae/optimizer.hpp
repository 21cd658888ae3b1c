#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbvae/objective.hpp"

namespace lbvae {

struct OptimizerConfig {
    double learning_rate = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long steps = 20000;
    std::uint64_t seed = 0;
    /// Stop early once the gradient norm falls below this value (0 disables).
    double grad_tol = 0.0;
    long record_every = 100;

    void validate() const;
};

/// Unconstrained coordinates for a covariance: strict lower part of the
/// Cholesky factor plus raw diagonal r with L_ii = log(1 + e^r) + 1e-8.
struct CholeskyParam {
    Matrix raw;  // lower triangular; diagonal holds r

    static CholeskyParam from_covariance(const SpdMatrix &sigma);
    [[nodiscard]] Matrix factor() const;
    [[nodiscard]] SpdMatrix covariance() const;
    /// Chain rule from dObj/dL (lower triangular) to dObj/draw.
    [[nodiscard]] Matrix pullback(const Matrix &grad_l) const;
};

struct TracePoint {
    long step = 0;
    ObjectiveBreakdown objective;
    double grad_norm = 0.0;
};

struct OptimizeResult {
    ModelParams params;
    std::vector<TracePoint> trace;
    ObjectiveBreakdown final_objective;
    double final_grad_norm = 0.0;
    long steps = 0;
    /// With grad_tol > 0: stopped early on the gradient norm. Otherwise: ran all steps with finite values.
    bool converged = false;
};

/// Full-batch AdamW on (A, B, L_Z, L_W) using exact gradients. Throws
/// NumericalError carrying the step index if the objective becomes non-finite.
OptimizeResult optimize(const GenerativeConfig &cfg, double beta, double lambda, const OptimizerConfig &opt,
                        const ModelParams &init);

/// CSV columns: step, recon_nll, kl, l2_penalty, total, grad_norm.
void write_objective_trace_csv(const std::vector<TracePoint> &trace, const std::string &path);

}  // namespace lbvae
