#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lbvae/gaussian.hpp"

namespace lbvae {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    int n = 100;
    int m = 10;
    int s = 5;
    /// Trials per check; the defaults keep the suite well under a minute.
    int trials = 5;
    long mc_samples = 100000;
};

/// Runtime invariant suite: Sigma_W spectral bound, gain recursion, gradient vs
/// finite differences, closed form vs Monte-Carlo objective, Hungarian vs
/// brute force.
/// Relative error between the analytic gradient and central finite
/// differences over A, B and both Cholesky factors.
double gradient_check_error(const GenerativeConfig &cfg, const ModelParams &params, double beta, double lambda);

std::vector<CheckResult> run_invariant_suite(const VerifyOptions &opts);

}  // namespace lbvae
