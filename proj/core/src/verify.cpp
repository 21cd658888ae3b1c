#include "lbvae/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lbvae/matching.hpp"
#include "lbvae/objective.hpp"
#include "lbvae/random.hpp"
#include "lbvae/stationarity.hpp"
#include "lbvae/sweep.hpp"

namespace lbvae {

namespace {

constexpr std::uint64_t kVerifyStream = 0x5E1F'7E57ULL;

std::string fmt(const char *pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

Matrix random_spd(int dim, Rng &rng) {
    const Matrix g = rng.gaussian_matrix(dim, dim, 1.0);
    return g * g.transpose() / dim + 0.5 * Matrix::Identity(dim, dim);
}

ModelParams random_params(const GenerativeConfig &cfg, Rng &rng) {
    return ModelParams{rng.gaussian_matrix(cfg.n, cfg.m, 1.0 / std::sqrt(cfg.m)),
                       rng.gaussian_matrix(cfg.m, cfg.n, 1.0 / std::sqrt(cfg.n)), SpdMatrix(random_spd(cfg.n, rng)),
                       SpdMatrix(random_spd(cfg.m, rng))};
}

GenerativeConfig small_config(std::uint64_t seed, int trial) {
    return sample_generative_config(seed, trial, 8, 3, 2, {0.1, 1.0}, 0.05);
}

/// Sigma_W spectral bound and gain recursion along lambda = 0 trajectories.
std::pair<CheckResult, CheckResult> check_collapse_trajectories(const VerifyOptions &o) {
    double worst_eig = 0.0;
    double worst_gain = 0.0;
    for (int t = 0; t < o.trials; ++t) {
        const GenerativeConfig cfg = sample_generative_config(o.seed, t, o.n, o.m, o.s, {0.1, 1.0}, 0.05);
        const ModelParams init =
            random_init(cfg, derive_seed({o.seed, kVerifyStream, 1, static_cast<std::uint64_t>(t)}));
        const double beta = t % 2 == 0 ? 2.0 : 4.0;
        const FixedPointResult res = run_fixed_point(init, cfg, beta, 0.0);
        for (double e : res.diagnostics.sigma_w_max_eigenvalues) { worst_eig = std::max(worst_eig, e); }
        for (double e : res.diagnostics.gain_recursion_residuals) { worst_gain = std::max(worst_gain, e); }
    }
    return {CheckResult{"sigma_w_spectral_bound", worst_eig <= 1.0 + 1e-12,
                        fmt("max eigenvalue of Sigma_W %.17g over %g trajectories", worst_eig, o.trials)},
            CheckResult{"gain_recursion", worst_gain <= 1e-8,
                        fmt("max relative residual %.3e over %g trajectories", worst_gain, o.trials)}};
}

double objective_at(const SpdMatrix &sigma_y, const Matrix &a, const Matrix &b, const Matrix &lz, const Matrix &lw,
                    double beta, double lambda) {
    const Matrix z = lz.triangularView<Eigen::Lower>();
    const Matrix w = lw.triangularView<Eigen::Lower>();
    return objective_value(sigma_y, ModelParams{a, b, SpdMatrix(z * z.transpose()), SpdMatrix(w * w.transpose())},
                           beta, lambda)
        .total;
}

}  // namespace

/// Central finite differences over every free coordinate; returns the relative error.
double gradient_check_error(const GenerativeConfig &cfg, const ModelParams &params, double beta, double lambda) {
    const SpdMatrix sigma_y = observation_covariance(cfg);
    const ObjectiveGradient g = objective_gradient(sigma_y, params, beta, lambda);
    Matrix a = params.a;
    Matrix b = params.b;
    Matrix lz = params.sigma_z.chol();
    Matrix lw = params.sigma_w.chol();
    double err2 = 0.0;
    double ref2 = 0.0;
    auto probe = [&](Matrix &x, const Matrix &analytic, bool lower) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            for (Eigen::Index i = lower ? j : 0; i < x.rows(); ++i) {
                const double orig = x(i, j);
                const double h = 1e-6 * std::max(1.0, std::abs(orig));
                x(i, j) = orig + h;
                const double up = objective_at(sigma_y, a, b, lz, lw, beta, lambda);
                x(i, j) = orig - h;
                const double down = objective_at(sigma_y, a, b, lz, lw, beta, lambda);
                x(i, j) = orig;
                const double fd = (up - down) / (2.0 * h);
                err2 += (fd - analytic(i, j)) * (fd - analytic(i, j));
                ref2 += analytic(i, j) * analytic(i, j);
            }
        }
    };
    probe(a, g.a, false);
    probe(b, g.b, false);
    probe(lz, g.l_z, true);
    probe(lw, g.l_w, true);
    return std::sqrt(err2) / std::max(std::sqrt(ref2), 1e-300);
}

namespace {

CheckResult check_gradient(const VerifyOptions &o) {
    double worst = 0.0;
    Rng rng(derive_seed({o.seed, kVerifyStream, 2}));
    const double betas[] = {1.0, 4.0, 0.5};
    const double lambdas[] = {0.0, 8.0, 1.0};
    for (int t = 0; t < o.trials; ++t) {
        const GenerativeConfig cfg = small_config(o.seed, t);
        const ModelParams p = random_params(cfg, rng);
        worst = std::max(worst, gradient_check_error(cfg, p, betas[t % 3], lambdas[t % 3]));
    }
    return {"gradient_finite_difference", worst <= 1e-5, fmt("max relative error %.3e", worst)};
}

CheckResult check_monte_carlo(const VerifyOptions &o) {
    Rng rng(derive_seed({o.seed, kVerifyStream, 3}));
    double worst_z = 0.0;
    for (int t = 0; t < o.trials; ++t) {
        const GenerativeConfig cfg = small_config(o.seed, 1000 + t);
        const ModelParams p = random_params(cfg, rng);
        const ObjectiveBreakdown exact = objective_value(cfg, p, 1.0, 1.0);
        const MonteCarloObjective mc =
            monte_carlo_objective(cfg, p, 1.0, 1.0, o.mc_samples, derive_seed({o.seed, kVerifyStream, 4, static_cast<std::uint64_t>(t)}));
        const double zs[] = {std::abs(exact.recon_nll - mc.mean.recon_nll) / mc.std_error.recon_nll,
                             std::abs(exact.kl - mc.mean.kl) / mc.std_error.kl,
                             std::abs(exact.l2_penalty - mc.mean.l2_penalty) / mc.std_error.l2_penalty};
        for (double z : zs) { worst_z = std::max(worst_z, z); }
    }
    return {"monte_carlo_objective", worst_z <= 3.0, fmt("max |closed - MC| / SE = %.3f", worst_z)};
}

double brute_force_matching(const Matrix &w) {
    const int k = static_cast<int>(std::max(w.rows(), w.cols()));
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 0.0;
    do {
        double total = 0.0;
        for (int i = 0; i < w.rows(); ++i) {
            if (perm[i] < w.cols()) { total += w(i, perm[i]); }
        }
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

CheckResult check_matching(const VerifyOptions &o) {
    Rng rng(derive_seed({o.seed, kVerifyStream, 5}));
    double worst = 0.0;
    const int cases = std::max(20, 4 * o.trials);
    for (int t = 0; t < cases; ++t) {
        const int rows = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
        const int cols = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
        Matrix w(rows, cols);
        for (Eigen::Index i = 0; i < w.size(); ++i) { w.data()[i] = rng.uniform(0.0, 1.0); }
        worst = std::max(worst, std::abs(max_weight_matching(w).weight - brute_force_matching(w)));
    }
    return {"hungarian_vs_brute_force", worst <= 1e-12, fmt("max weight difference %.3e", worst)};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const VerifyOptions &opts) {
    std::vector<CheckResult> out;
    auto [spectral, gain] = check_collapse_trajectories(opts);
    out.push_back(std::move(spectral));
    out.push_back(std::move(gain));
    out.push_back(check_gradient(opts));
    out.push_back(check_monte_carlo(opts));
    out.push_back(check_matching(opts));
    return out;
}

}  // namespace lbvae
