#include "lbvae/stationarity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lbvae/random.hpp"

namespace lbvae {

namespace {

struct Decoder {
    Matrix a;
    SpdMatrix sigma_z;
};

struct Encoder {
    Matrix b;
    SpdMatrix sigma_w;
};

// A = (Sigma_Y^{-1} + B^T Sigma_W^{-1} B)^{-1} B^T Sigma_W^{-1}, Sigma_Z = (...)^{-1}.
// For m < n the Woodbury form A = Sigma_Y B^T K^{-1}, Sigma_Z = Sigma_Y - A B Sigma_Y
// with K = B Sigma_Y B^T + Sigma_W keeps every factorization m x m except Sigma_Z's own.
Decoder decoder_update(const StationarityContext &ctx, const Matrix &b, const SpdMatrix &sigma_w) {
    const Matrix &sy = ctx.sigma_y().dense();
    const auto n = sy.rows();
    const auto m = b.rows();
    if (m < n) {
        const Matrix g = sy * b.transpose();
        const SpdMatrix k(b * g + sigma_w.dense());
        Matrix a = k.solve(g.transpose()).transpose();
        Matrix sz = sy - a * g.transpose();
        return {std::move(a), SpdMatrix(symmetrized(sz))};
    }
    const Matrix winv_b = sigma_w.solve(b);
    const SpdMatrix precision(ctx.sigma_y().inverse() + b.transpose() * winv_b);
    return {precision.solve(winv_b.transpose()), SpdMatrix(precision.inverse())};
}

// B = (I + A^T M A)^{-1} A^T M, Sigma_W = (I + A^T M A)^{-1},
// M = (Sigma_Z^{-1} + 2 lambda I) / beta. For m >= n the equivalent n x n form
// B = A^T (M^{-1} + A A^T)^{-1}, Sigma_W = I - A^T (M^{-1} + A A^T)^{-1} A is used.
Encoder encoder_update(const Decoder &dec, double beta, double lambda) {
    const Matrix &a = dec.a;
    const auto n = a.rows();
    const auto m = a.cols();
    if (m < n) {
        const Matrix ma = (dec.sigma_z.solve(a) + (2.0 * lambda) * a) / beta;
        Matrix h = a.transpose() * ma;
        h.diagonal().array() += 1.0;
        const SpdMatrix hs(symmetrized(h));
        return {hs.solve(ma.transpose()), SpdMatrix(hs.inverse())};
    }
    Matrix m_inv;
    if (lambda == 0.0) {
        m_inv = beta * dec.sigma_z.dense();
    } else {
        Matrix t = (2.0 * lambda) * dec.sigma_z.dense();
        t.diagonal().array() += 1.0;
        m_inv = beta * symmetrized(SpdMatrix(symmetrized(t)).solve(dec.sigma_z.dense()));
    }
    const SpdMatrix r(symmetrized(m_inv + a * a.transpose()));
    const Matrix r_inv_a = r.solve(a);
    Matrix sw = -a.transpose() * r_inv_a;
    sw.diagonal().array() += 1.0;
    return {r_inv_a.transpose(), SpdMatrix(symmetrized(sw))};
}

void check_step_args(double beta, double lambda) {
    if (!(beta > 0.0) || !std::isfinite(beta)) { throw ConfigError("beta must be a finite value > 0"); }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) { throw ConfigError("lambda must be a finite value >= 0"); }
}

FixedPointState step_impl(const FixedPointState &state, const StationarityContext &ctx, double beta, double lambda) {
    check_step_args(beta, lambda);
    const ModelParams &p = state.params;
    const long it = state.iteration + 1;
    try {
        Decoder dec = decoder_update(ctx, p.b, p.sigma_w);
        Encoder enc = encoder_update(dec, beta, lambda);

        FixedPointState next;
        next.iteration = it;
        next.residual = std::max({relative_change(p.a, dec.a), relative_change(p.b, enc.b),
                                  relative_change(p.sigma_z.dense(), dec.sigma_z.dense()),
                                  relative_change(p.sigma_w.dense(), enc.sigma_w.dense())});
        next.params = ModelParams{std::move(dec.a), std::move(enc.b), std::move(dec.sigma_z), std::move(enc.sigma_w)};
        next.history = state.history;
        return next;
    } catch (const NumericalError &e) {
        throw NumericalError(std::string("fixed-point step: ") + e.what(), it);
    }
}

}  // namespace

TrajectoryHistory::TrajectoryHistory(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 2)) {
    entries_.reserve(capacity_);
}

void TrajectoryHistory::record(const HistoryEntry &entry) {
    const long call = seen_++;
    if (call % stride_ != 0) { return; }
    if (entries_.size() == capacity_) {
        std::size_t keep = 0;
        for (std::size_t i = 0; i < entries_.size(); i += 2) { entries_[keep++] = entries_[i]; }
        entries_.resize(keep);
        stride_ *= 2;
        if (call % stride_ != 0) { return; }
    }
    entries_.push_back(entry);
}

StationarityContext::StationarityContext(const GenerativeConfig &cfg)
    : cfg_(cfg), sigma_y_(observation_covariance(cfg)) {}

FixedPointState beta_step(const FixedPointState &state, const StationarityContext &ctx, double beta) {
    return step_impl(state, ctx, beta, 0.0);
}

FixedPointState beta_step(const FixedPointState &state, const GenerativeConfig &cfg, double beta) {
    return beta_step(state, StationarityContext(cfg), beta);
}

FixedPointState lambda_beta_step(const FixedPointState &state, const StationarityContext &ctx, double beta,
                                 double lambda) {
    return step_impl(state, ctx, beta, lambda);
}

FixedPointState lambda_beta_step(const FixedPointState &state, const GenerativeConfig &cfg, double beta,
                                 double lambda) {
    return lambda_beta_step(state, StationarityContext(cfg), beta, lambda);
}

FixedPointResult run_fixed_point(const ModelParams &init, const GenerativeConfig &cfg, double beta, double lambda,
                                 const FixedPointOptions &options) {
    check_step_args(beta, lambda);
    if (!(options.tol > 0.0)) { throw ConfigError("tol must be > 0"); }
    if (options.max_iter < 1) { throw ConfigError("max_iter must be >= 1"); }
    if (options.checkpoint_every < 1) { throw ConfigError("checkpoint_every must be >= 1"); }
    init.check_dims(cfg);
    const StationarityContext ctx(cfg);

    FixedPointResult result;
    result.state.params = init;
    if (options.keep_history) { result.state.history.emplace(); }

    GainSnapshot last{0, init.b, init.sigma_w.dense()};
    if (options.keep_snapshots) { result.snapshots.push_back(last); }
    auto checkpoint = [&](const FixedPointState &st) {
        GainSnapshot snap{st.iteration, st.params.b, st.params.sigma_w.dense()};
        result.diagnostics.gain_recursion_residuals.push_back(verify_gain_recursion({last, snap}, beta).front());
        if (options.keep_snapshots) { result.snapshots.push_back(snap); }
        last = std::move(snap);
    };

    for (long it = 1; it <= options.max_iter; ++it) {
        std::optional<TrajectoryHistory> history = std::move(result.state.history);
        result.state.history.reset();
        try {
            result.state = step_impl(result.state, ctx, beta, lambda);
            result.state.history = std::move(history);
        } catch (const NumericalError &e) {
            FixedPointResult partial = result;
            partial.state.history = std::move(history);
            partial.converged = false;
            throw FixedPointError(e, std::move(partial));
        }
        const ModelParams &p = result.state.params;

        Eigen::SelfAdjointEigenSolver<Matrix> eig(p.sigma_w.dense(), Eigen::EigenvaluesOnly);
        result.diagnostics.sigma_w_max_eigenvalues.push_back(eig.eigenvalues().maxCoeff());
        result.diagnostics.sigma_w_min_eigenvalues.push_back(eig.eigenvalues().minCoeff());
        // Sigma_W is symmetric, so its spectral norm is the largest |eigenvalue|.
        const double snw = eig.eigenvalues().cwiseAbs().maxCoeff();
        result.diagnostics.sigma_w_spectral_norms.push_back(snw);

        if (lambda == 0.0 && it % options.checkpoint_every == 0) { checkpoint(result.state); }
        if (result.state.history) {
            result.state.history->record(HistoryEntry{it, norm2(p.b), result.state.residual, snw,
                                                      detect_collapse(p, ctx.sigma_y(), 1.0).trivial_distance});
        }
        if (result.state.residual < options.tol) {
            result.converged = true;
            break;
        }
    }
    if (lambda == 0.0 && result.state.iteration != last.iteration) { checkpoint(result.state); }

    const CollapseCheck cc = detect_collapse(result.state.params, ctx.sigma_y(), options.collapse_threshold);
    result.diagnostics.collapsed = cc.collapsed;
    result.diagnostics.trivial_distance = cc.trivial_distance;
    return result;
}

std::vector<double> verify_gain_recursion(const std::vector<GainSnapshot> &trajectory, double beta) {
    if (trajectory.size() < 2) { throw UsageError("verify_gain_recursion needs at least two checkpoints"); }
    if (!(beta > 0.0)) { throw ConfigError("beta must be > 0"); }
    std::vector<double> errors;
    errors.reserve(trajectory.size() - 1);
    for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
        const GainSnapshot &from = trajectory[i];
        const GainSnapshot &to = trajectory[i + 1];
        const auto steps = static_cast<double>(to.iteration - from.iteration);
        const Matrix predicted =
            std::pow(beta, -steps) * (to.sigma_w * SpdMatrix(from.sigma_w).solve(from.b));
        errors.push_back(norm2(to.b - predicted) / std::max(norm2(to.b), 1e-300));
    }
    return errors;
}

ModelParams trivial_solution(const GenerativeConfig &cfg) {
    return ModelParams{Matrix::Zero(cfg.n, cfg.m), Matrix::Zero(cfg.m, cfg.n), observation_covariance(cfg),
                       SpdMatrix::identity(cfg.m)};
}

CollapseCheck detect_collapse(const ModelParams &params, const SpdMatrix &sigma_y, double threshold) {
    if (!(threshold > 0.0)) { throw ConfigError("collapse threshold must be > 0"); }
    const auto m = params.sigma_w.dim();
    const double d = std::max({norm2(params.a), norm2(params.b), norm2(params.sigma_z.dense() - sigma_y.dense()),
                               norm2(params.sigma_w.dense() - Matrix::Identity(m, m))});
    return {d <= threshold, d};
}

CollapseCheck detect_collapse(const ModelParams &params, const GenerativeConfig &cfg, double threshold) {
    return detect_collapse(params, observation_covariance(cfg), threshold);
}

ModelParams random_init(const GenerativeConfig &cfg, std::uint64_t seed, double scale) {
    if (!(scale > 0.0)) { throw ConfigError("init scale must be > 0"); }
    Rng rng(seed);
    Matrix a = rng.gaussian_matrix(cfg.n, cfg.m, scale / std::sqrt(static_cast<double>(cfg.m)));
    Matrix b = rng.gaussian_matrix(cfg.m, cfg.n, scale / std::sqrt(static_cast<double>(cfg.n)));
    return ModelParams{std::move(a), std::move(b), observation_covariance(cfg), SpdMatrix::identity(cfg.m)};
}

void write_trajectory_csv(const TrajectoryHistory &history, const std::string &path) {
    std::ofstream out(path);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << "iteration,residual,spec_norm_B,spec_norm_sigma_w,trivial_distance\n";
    char buf[256];
    for (const HistoryEntry &e : history.entries()) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g\n", e.iteration, e.residual, e.spec_norm_b,
                      e.spec_norm_sigma_w, e.trivial_distance);
        out << buf;
    }
}

}  // namespace lbvae
