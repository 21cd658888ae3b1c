#include "lbvae/objective.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "lbvae/errors.hpp"
#include "lbvae/random.hpp"

namespace lbvae {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// Quantities shared by the value and the gradient.
struct Moments {
    Matrix g;        // Sigma_Y B^T, n x m
    Matrix sigma_x;  // B Sigma_Y B^T + Sigma_W
    Matrix e;        // E[(Y - AX)(Y - AX)^T]
};

Moments moments(const SpdMatrix &sigma_y, const ModelParams &p) {
    Moments out;
    out.g = sigma_y.dense() * p.b.transpose();
    out.sigma_x = symmetrized(p.b * out.g) + p.sigma_w.dense();
    const Matrix ag = p.a * out.g.transpose();
    out.e = sigma_y.dense() - ag - ag.transpose() + p.a * out.sigma_x * p.a.transpose();
    out.e = symmetrized(out.e);
    return out;
}

void check_inputs(const SpdMatrix &sigma_y, const ModelParams &p, double beta, double lambda) {
    const auto n = sigma_y.dim();
    if (p.a.rows() != n || p.b.cols() != n || p.sigma_z.dim() != n || p.a.cols() != p.b.rows() ||
        p.sigma_w.dim() != p.b.rows()) {
        throw ConfigError("objective: parameter shapes are inconsistent with Sigma_Y");
    }
    if (!std::isfinite(beta) || !std::isfinite(lambda)) { throw ConfigError("objective: non-finite beta/lambda"); }
}

Matrix lower_times(const Matrix &g, const Matrix &l) {
    Matrix out = 2.0 * g * l;
    return out.triangularView<Eigen::Lower>();
}

}  // namespace

ObjectiveBreakdown objective_value(const SpdMatrix &sigma_y, const ModelParams &params, double beta, double lambda) {
    check_inputs(sigma_y, params, beta, lambda);
    const auto n = static_cast<double>(sigma_y.dim());
    const auto m = static_cast<double>(params.sigma_w.dim());
    const Moments mo = moments(sigma_y, params);

    ObjectiveBreakdown out;
    out.recon_nll = 0.5 * (params.sigma_z.solve(mo.e).trace() + n * kLog2Pi + params.sigma_z.log_det());
    out.kl = 0.5 * (params.sigma_w.dense().trace() + (params.b * mo.g).trace() - m - params.sigma_w.log_det());
    out.l2_penalty = mo.e.trace();
    out.total = out.recon_nll + beta * out.kl + lambda * out.l2_penalty;
    if (!std::isfinite(out.total)) { throw NumericalError("objective: non-finite value"); }
    return out;
}

ObjectiveBreakdown objective_value(const GenerativeConfig &cfg, const ModelParams &params, double beta,
                                   double lambda) {
    params.check_dims(cfg);
    return objective_value(observation_covariance(cfg), params, beta, lambda);
}

namespace {

// Gradients in A, B and Sigma_W; the Sigma_Z block is left to the caller.
CovarianceGradient shared_gradient(const SpdMatrix &sigma_y, const ModelParams &p, const Moments &mo, double beta,
                                   double lambda) {
    const auto m = p.sigma_w.dim();
    const Matrix pa = p.sigma_z.solve(p.a);  // Sigma_Z^{-1} A

    CovarianceGradient g;
    // d/dA tr(Q E), Q = Sigma_Z^{-1}/2 + lambda I:  2 Q (A Sigma_X - Sigma_Y B^T)
    const Matrix resid = p.a * mo.sigma_x - mo.g;
    g.a = p.sigma_z.solve(resid) + (2.0 * lambda) * resid;
    // d/dB: 2 A^T Q (A B - I) Sigma_Y + beta B Sigma_Y
    const Matrix qa_t = pa.transpose() + (2.0 * lambda) * p.a.transpose();
    g.b = qa_t * (p.a * mo.g.transpose() - sigma_y.dense()) + beta * mo.g.transpose();
    // d/dSigma_W: A^T Q A + beta/2 (I - Sigma_W^{-1})
    g.sigma_w = 0.5 * p.a.transpose() * pa + lambda * p.a.transpose() * p.a +
                0.5 * beta * (Matrix::Identity(m, m) - p.sigma_w.inverse());
    g.sigma_w = symmetrized(g.sigma_w);
    return g;
}

}  // namespace

CovarianceGradient objective_covariance_gradient(const SpdMatrix &sigma_y, const ModelParams &p, double beta,
                                                 double lambda) {
    check_inputs(sigma_y, p, beta, lambda);
    const Moments mo = moments(sigma_y, p);
    CovarianceGradient g = shared_gradient(sigma_y, p, mo, beta, lambda);
    // d/dSigma_Z: (P - P E P) / 2
    const Matrix pe = p.sigma_z.solve(mo.e);
    const Matrix pep = p.sigma_z.solve(pe.transpose()).transpose();
    g.sigma_z = 0.5 * symmetrized(p.sigma_z.inverse() - pep);
    return g;
}

ObjectiveGradient objective_gradient(const SpdMatrix &sigma_y, const ModelParams &params, double beta,
                                     double lambda) {
    check_inputs(sigma_y, params, beta, lambda);
    const Moments mo = moments(sigma_y, params);
    CovarianceGradient g = shared_gradient(sigma_y, params, mo, beta, lambda);
    // 2 G_Z L = (P - P E P) L = L^{-T} (I - L^{-1} E L^{-T}) with P = L^{-T} L^{-1}.
    const auto l = params.sigma_z.chol().triangularView<Eigen::Lower>();
    const Matrix w = l.solve(mo.e);
    Matrix r = -l.solve(w.transpose());
    r.diagonal().array() += 1.0;
    l.transpose().solveInPlace(r);
    return ObjectiveGradient{std::move(g.a), std::move(g.b), r.triangularView<Eigen::Lower>(),
                             lower_times(g.sigma_w, params.sigma_w.chol())};
}

ObjectiveGradient objective_gradient(const GenerativeConfig &cfg, const ModelParams &params, double beta,
                                     double lambda) {
    params.check_dims(cfg);
    return objective_gradient(observation_covariance(cfg), params, beta, lambda);
}

double ObjectiveGradient::norm() const {
    return std::sqrt(a.squaredNorm() + b.squaredNorm() + l_z.squaredNorm() + l_w.squaredNorm());
}

MonteCarloObjective monte_carlo_objective(const GenerativeConfig &cfg, const ModelParams &params, double beta,
                                          double lambda, long n_samples, std::uint64_t seed) {
    if (n_samples < 1000) { throw ConfigError("monte_carlo_objective needs at least 1000 samples"); }
    params.check_dims(cfg);
    const Eigen::Index n = cfg.n;
    const Eigen::Index m = cfg.m;
    const double half_log_det_z = 0.5 * params.sigma_z.log_det();
    const double half_log_det_w = 0.5 * params.sigma_w.log_det();
    const Vector v_std = cfg.sigma_v_diag.array().sqrt();
    const double noise_std = std::sqrt(cfg.sigma_sq);
    const auto lz = params.sigma_z.chol().triangularView<Eigen::Lower>();
    const auto lw = params.sigma_w.chol().triangularView<Eigen::Lower>();

    Rng rng(seed);
    // Running sums of value and square for recon, kl, l2, total.
    std::array<long double, 4> sum{};
    std::array<long double, 4> sum_sq{};
    constexpr Eigen::Index kBlock = 1024;
    for (long done = 0; done < n_samples;) {
        const Eigen::Index count = std::min<long>(kBlock, n_samples - done);
        Matrix v(cfg.s, count), noise(n, count), eps_w(m, count);
        for (Eigen::Index c = 0; c < count; ++c) {
            for (Eigen::Index i = 0; i < cfg.s; ++i) { v(i, c) = v_std(i) * rng.normal(); }
            for (Eigen::Index i = 0; i < n; ++i) { noise(i, c) = noise_std * rng.normal(); }
            for (Eigen::Index i = 0; i < m; ++i) { eps_w(i, c) = rng.normal(); }
        }
        const Matrix y = cfg.gamma * v + noise;
        const Matrix w = lw * eps_w;
        const Matrix x = params.b * y + w;
        const Matrix r = y - params.a * x;
        const Matrix whitened = lz.solve(r);
        for (Eigen::Index c = 0; c < count; ++c) {
            const double recon = 0.5 * whitened.col(c).squaredNorm() + 0.5 * static_cast<double>(n) * kLog2Pi +
                                 half_log_det_z;
            // log q(x|y) - log p(x); the 2 pi terms cancel.
            const double kl = -0.5 * eps_w.col(c).squaredNorm() - half_log_det_w + 0.5 * x.col(c).squaredNorm();
            const double l2 = r.col(c).squaredNorm();
            const std::array<double, 4> vals{recon, kl, l2, recon + beta * kl + lambda * l2};
            for (std::size_t k = 0; k < 4; ++k) {
                sum[k] += vals[k];
                sum_sq[k] += static_cast<long double>(vals[k]) * vals[k];
            }
        }
        done += count;
    }
    const auto nn = static_cast<long double>(n_samples);
    std::array<double, 4> mean{}, se{};
    for (std::size_t k = 0; k < 4; ++k) {
        const long double mu = sum[k] / nn;
        const long double var = std::max<long double>(0.0L, (sum_sq[k] - nn * mu * mu) / (nn - 1.0L));
        mean[k] = static_cast<double>(mu);
        se[k] = static_cast<double>(std::sqrt(var / nn));
    }
    MonteCarloObjective out;
    out.mean = {mean[0], mean[1], mean[2], mean[3]};
    out.std_error = {se[0], se[1], se[2], se[3]};
    out.samples = n_samples;
    return out;
}

}  // namespace lbvae
