#include "lbvae/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lbvae/errors.hpp"

namespace lbvae {

namespace {

constexpr double kDiagFloor = 1e-8;

double softplus(double r) { return r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r)); }
double softplus_inverse(double x) { return x + std::log(-std::expm1(-x)); }
double sigmoid(double r) { return r >= 0.0 ? 1.0 / (1.0 + std::exp(-r)) : std::exp(r) / (1.0 + std::exp(r)); }

// First/second moment buffers for one parameter block.
struct AdamSlot {
    Matrix m1;
    Matrix m2;

    explicit AdamSlot(const Matrix &like)
        : m1(Matrix::Zero(like.rows(), like.cols())), m2(Matrix::Zero(like.rows(), like.cols())) {}

    void apply(Matrix &theta, const Matrix &grad, const OptimizerConfig &opt, long t) {
        m1 = opt.beta1 * m1 + (1.0 - opt.beta1) * grad;
        m2 = opt.beta2 * m2 + (1.0 - opt.beta2) * grad.cwiseAbs2();
        const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
        const Matrix step = (m1 / c1).array() / ((m2 / c2).array().sqrt() + opt.epsilon);
        theta -= opt.learning_rate * (step + opt.weight_decay * theta);
    }
};

}  // namespace

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0)) { throw ConfigError("learning_rate must be > 0"); }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) { throw ConfigError("epsilon must be > 0"); }
    if (!(weight_decay >= 0.0)) { throw ConfigError("weight_decay must be >= 0"); }
    if (steps < 0) { throw ConfigError("steps must be >= 0"); }
    if (record_every < 1) { throw ConfigError("record_every must be >= 1"); }
}

CholeskyParam CholeskyParam::from_covariance(const SpdMatrix &sigma) {
    CholeskyParam p;
    p.raw = sigma.chol().triangularView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < p.raw.rows(); ++i) {
        const double target = p.raw(i, i) - kDiagFloor;
        if (!(target > 0.0)) { throw NumericalError("Cholesky diagonal too small to parameterize"); }
        p.raw(i, i) = softplus_inverse(target);
    }
    return p;
}

Matrix CholeskyParam::factor() const {
    Matrix l = raw.triangularView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < l.rows(); ++i) { l(i, i) = softplus(raw(i, i)) + kDiagFloor; }
    return l;
}

SpdMatrix CholeskyParam::covariance() const { return SpdMatrix::from_cholesky(factor()); }

Matrix CholeskyParam::pullback(const Matrix &grad_l) const {
    Matrix g = grad_l.triangularView<Eigen::Lower>();
    for (Eigen::Index i = 0; i < g.rows(); ++i) { g(i, i) *= sigmoid(raw(i, i)); }
    return g;
}

OptimizeResult optimize(const GenerativeConfig &cfg, double beta, double lambda, const OptimizerConfig &opt,
                        const ModelParams &init) {
    opt.validate();
    init.check_dims(cfg);
    const SpdMatrix sigma_y = observation_covariance(cfg);

    Matrix a = init.a;
    Matrix b = init.b;
    CholeskyParam lz = CholeskyParam::from_covariance(init.sigma_z);
    CholeskyParam lw = CholeskyParam::from_covariance(init.sigma_w);
    AdamSlot sa(a), sb(b), sz(lz.raw), sw(lw.raw);

    OptimizeResult result;
    auto assemble = [&](long step) {
        try {
            return ModelParams{a, b, lz.covariance(), lw.covariance()};
        } catch (const NumericalError &e) {
            throw NumericalError(std::string("optimize: ") + e.what(), step);
        }
    };

    for (long t = 0;; ++t) {
        const ModelParams params = assemble(t);
        const ObjectiveGradient g = objective_gradient(sigma_y, params, beta, lambda);
        const Matrix gz = lz.pullback(g.l_z);
        const Matrix gw = lw.pullback(g.l_w);
        const double grad_norm =
            std::sqrt(g.a.squaredNorm() + g.b.squaredNorm() + gz.squaredNorm() + gw.squaredNorm());
        const bool stop_early = opt.grad_tol > 0.0 && grad_norm < opt.grad_tol;
        const bool last = t == opt.steps || stop_early;

        if (t % opt.record_every == 0 || last) {
            ObjectiveBreakdown obj;
            try {
                obj = objective_value(sigma_y, params, beta, lambda);
            } catch (const NumericalError &e) {
                throw NumericalError(std::string("optimize: ") + e.what(), t);
            }
            if (!std::isfinite(grad_norm)) { throw NumericalError("optimize: non-finite gradient", t); }
            result.trace.push_back(TracePoint{t, obj, grad_norm});
            if (last) {
                result.final_objective = obj;
                result.final_grad_norm = grad_norm;
            }
        }
        if (last) {
            result.params = params;
            result.steps = t;
            result.converged = opt.grad_tol > 0.0 ? stop_early : true;
            break;
        }
        if (!std::isfinite(grad_norm)) { throw NumericalError("optimize: non-finite gradient", t); }
        sa.apply(a, g.a, opt, t + 1);
        sb.apply(b, g.b, opt, t + 1);
        sz.apply(lz.raw, gz, opt, t + 1);
        sw.apply(lw.raw, gw, opt, t + 1);
    }
    return result;
}

void write_objective_trace_csv(const std::vector<TracePoint> &trace, const std::string &path) {
    std::ofstream out(path);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << "step,recon_nll,kl,l2_penalty,total,grad_norm\n";
    char buf[256];
    for (const TracePoint &p : trace) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n", p.step, p.objective.recon_nll,
                      p.objective.kl, p.objective.l2_penalty, p.objective.total, p.grad_norm);
        out << buf;
    }
}

}  // namespace lbvae
