#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's numerical code paths beyond plain data types.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lbvae/gaussian.hpp"
#include "lbvae/objective.hpp"

namespace lbvae::testing {

inline Matrix gaussian(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    std::normal_distribution<double> nd(0.0, sd);
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) { out(i, j) = nd(rng); }
    }
    return out;
}

/// Random SPD matrix with eigenvalues in roughly [lo, lo + spread].
inline Matrix random_spd(std::mt19937_64 &rng, Eigen::Index dim, double lo = 0.2, double spread = 1.0) {
    const Matrix g = gaussian(rng, dim, dim);
    Matrix m = spread * g * g.transpose() / static_cast<double>(dim);
    m.diagonal().array() += lo;
    return 0.5 * (m + m.transpose());
}

inline GenerativeConfig random_config(std::mt19937_64 &rng, int n, int m, int s, double sigma_sq = 0.05) {
    GenerativeConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.s = s;
    cfg.gamma = gaussian(rng, n, s, 1.0 / std::sqrt(static_cast<double>(s)));
    std::uniform_real_distribution<double> u(0.1, 1.0);
    cfg.sigma_v_diag.resize(s);
    for (int j = 0; j < s; ++j) { cfg.sigma_v_diag(j) = u(rng); }
    cfg.sigma_sq = sigma_sq;
    return cfg;
}

inline ModelParams random_params(std::mt19937_64 &rng, const GenerativeConfig &cfg, double gain_sd = 0.5) {
    return ModelParams{gaussian(rng, cfg.n, cfg.m, gain_sd), gaussian(rng, cfg.m, cfg.n, gain_sd),
                       SpdMatrix(random_spd(rng, cfg.n)), SpdMatrix(random_spd(rng, cfg.m))};
}

/// Sigma_Y written out directly.
inline Matrix sigma_y_direct(const GenerativeConfig &cfg) {
    Matrix out = cfg.gamma * cfg.sigma_v_diag.asDiagonal() * cfg.gamma.transpose();
    out.diagonal().array() += cfg.sigma_sq;
    return out;
}

/// log det through the eigenvalues rather than a Cholesky factor.
inline double logdet_eig(const Matrix &m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().array().log().sum();
}

/// Exhaustive maximum-weight matching over all injective maps of the smaller side.
inline double brute_force_matching(const Matrix &w) {
    const bool transpose = w.rows() > w.cols();
    const Matrix a = transpose ? Matrix(w.transpose()) : w;  // rows <= cols
    std::vector<int> cols(static_cast<std::size_t>(a.cols()));
    std::iota(cols.begin(), cols.end(), 0);
    double best = 0.0;
    do {
        double total = 0.0;
        for (Eigen::Index r = 0; r < a.rows(); ++r) { total += std::max(0.0, a(r, cols[static_cast<std::size_t>(r)])); }
        best = std::max(best, total);
    } while (std::next_permutation(cols.begin(), cols.end()));
    return best;
}

struct Sample {
    Matrix y;  // n x N
    Matrix v;  // s x N
    Matrix x;  // m x N
};

/// Draws N joint samples of (V, Y, X) from the generative model and encoder.
inline Sample draw(std::mt19937_64 &rng, const GenerativeConfig &cfg, const Matrix &b, const Matrix &sigma_w,
                   long count) {
    Sample out;
    out.v = gaussian(rng, cfg.s, count);
    out.v = cfg.sigma_v_diag.cwiseSqrt().asDiagonal() * out.v;
    out.y = cfg.gamma * out.v + gaussian(rng, cfg.n, count, std::sqrt(cfg.sigma_sq));
    const Matrix lw = sigma_w.llt().matrixL();
    out.x = b * out.y + lw * gaussian(rng, cfg.m, count);
    return out;
}

struct Factors {
    Matrix a, b, lz, lw;

    ModelParams params() const {
        return ModelParams{a, b, SpdMatrix(symmetrized(lz * lz.transpose())),
                           SpdMatrix(symmetrized(lw * lw.transpose()))};
    }
};

inline Factors factors_of(const ModelParams &p) {
    return Factors{p.a, p.b, p.sigma_z.chol().triangularView<Eigen::Lower>(),
                   p.sigma_w.chol().triangularView<Eigen::Lower>()};
}

// Central differences, step 1e-5 per coordinate, over every free entry.
inline ObjectiveGradient finite_difference(const GenerativeConfig &cfg, const ModelParams &p, double beta, double lambda) {
    const Factors base = factors_of(p);
    auto total = [&](const Factors &f) { return lbvae::objective_value(cfg, f.params(), beta, lambda).total; };
    auto sweep = [&](Matrix Factors::*field, bool lower) {
        const Matrix &ref = base.*field;
        Matrix g = Matrix::Zero(ref.rows(), ref.cols());
        for (Eigen::Index j = 0; j < ref.cols(); ++j) {
            for (Eigen::Index i = lower ? j : 0; i < ref.rows(); ++i) {
                const double h = 1e-5 * std::max(1.0, std::abs(ref(i, j)));
                Factors up = base;
                Factors dn = base;
                (up.*field)(i, j) += h;
                (dn.*field)(i, j) -= h;
                g(i, j) = (total(up) - total(dn)) / (2 * h);
            }
        }
        return g;
    };
    return ObjectiveGradient{sweep(&Factors::a, false), sweep(&Factors::b, false), sweep(&Factors::lz, true),
                             sweep(&Factors::lw, true)};
}

inline double relative_error(const ObjectiveGradient &fd, const ObjectiveGradient &g) {
    const double diff = std::sqrt((fd.a - g.a).squaredNorm() + (fd.b - g.b).squaredNorm() +
                                  (fd.l_z - g.l_z).squaredNorm() + (fd.l_w - g.l_w).squaredNorm());
    return diff / std::max(g.norm(), 1e-12);
}

}  // namespace lbvae::testing
