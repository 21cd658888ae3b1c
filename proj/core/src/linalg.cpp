#include "lbvae/linalg.hpp"

#include <cmath>

#include "lbvae/errors.hpp"

namespace lbvae {

namespace {
constexpr double kSymmetryTol = 1e-12;
constexpr double kPivotTol = 1e-12;
}  // namespace

SpdMatrix::SpdMatrix(Matrix m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ConfigError("SpdMatrix: expected a non-empty square matrix, got " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
    }
    if (!m.allFinite()) { throw NumericalError("SpdMatrix: non-finite entry"); }
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol * scale) {
        throw NumericalError("SpdMatrix: asymmetry " + std::to_string(asym) + " exceeds tolerance");
    }
    dense_ = symmetrized(m);

    Eigen::LLT<Matrix> llt(dense_);
    if (llt.info() != Eigen::Success) { throw NumericalError("SpdMatrix: Cholesky factorization failed"); }
    chol_ = llt.matrixL();
    check_pivots();
}

SpdMatrix SpdMatrix::from_cholesky(const Matrix &lower) {
    if (lower.rows() != lower.cols() || lower.rows() == 0) {
        throw ConfigError("SpdMatrix: expected a non-empty square factor");
    }
    if (!lower.allFinite()) { throw NumericalError("SpdMatrix: non-finite factor entry"); }
    SpdMatrix out;
    out.chol_ = lower.triangularView<Eigen::Lower>();
    if ((out.chol_.diagonal().array() <= 0.0).any()) {
        throw NumericalError("SpdMatrix: factor diagonal must be positive");
    }
    out.dense_ = out.chol_ * out.chol_.transpose();
    out.check_pivots();
    return out;
}

void SpdMatrix::check_pivots() const {
    const double threshold = kPivotTol * dense_.trace() / static_cast<double>(dense_.rows());
    for (Eigen::Index i = 0; i < chol_.rows(); ++i) {
        const double pivot = chol_(i, i) * chol_(i, i);
        if (!(pivot > threshold)) {
            throw NumericalError("SpdMatrix: Cholesky pivot " + std::to_string(i) + " below threshold");
        }
    }
}

SpdMatrix SpdMatrix::identity(Eigen::Index dim) { return SpdMatrix(Matrix::Identity(dim, dim)); }

double SpdMatrix::log_det() const { return 2.0 * chol_.diagonal().array().log().sum(); }

Matrix SpdMatrix::solve(const Eigen::Ref<const Matrix> &rhs) const {
    Matrix x = chol_.triangularView<Eigen::Lower>().solve(rhs);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
}

Matrix SpdMatrix::inverse() const { return symmetrized(solve(Matrix::Identity(dim(), dim()))); }

bool SpdMatrix::is_spd(const Matrix &m) {
    try {
        SpdMatrix probe(m);
        return true;
    } catch (const std::exception &) {
        return false;
    }
}

SpectralNormResult spectral_norm(const Eigen::Ref<const Matrix> &m, double rel_tol, int max_iter) {
    SpectralNormResult out;
    if (m.size() == 0) { return out; }
    if (!m.allFinite()) { throw DomainError("spectral_norm: non-finite entry"); }
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) { return out; }

    // Divide rather than multiply by 1/scale: 1/scale overflows for subnormal inputs.
    const Matrix ms = m / scale;
    const Matrix gram = ms.rows() <= ms.cols() ? Matrix(ms * ms.transpose()) : Matrix(ms.transpose() * ms);

    Vector v(gram.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = 1.0 + std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
    }
    v.normalize();
    double rq = v.dot(gram * v);
    out.converged = false;
    for (int it = 1; it <= max_iter; ++it) {
        Vector w = gram * v;
        const double nrm = w.norm();
        out.iterations = it;
        if (nrm == 0.0) {
            rq = 0.0;
            out.converged = true;
            break;
        }
        v = w / nrm;
        const double next = v.dot(gram * v);
        const bool done = std::abs(next - rq) <= rel_tol * std::abs(next);
        rq = next;
        if (done) {
            out.converged = true;
            break;
        }
    }
    out.value = std::sqrt(std::max(rq, 0.0)) * scale;
    return out;
}

double norm2(const Eigen::Ref<const Matrix> &m) { return spectral_norm(m).value; }

double relative_change(const Eigen::Ref<const Matrix> &prev, const Eigen::Ref<const Matrix> &next) {
    // A plain sqrt(sum of squares) underflows near collapse; rescale only then.
    auto frob = [](const auto &x) {
        const double plain = x.norm();
        return plain > 1e-140 && std::isfinite(plain) ? plain : x.stableNorm();
    };
    return frob(next - prev) / (frob(prev) + 1e-300);
}

Matrix symmetrized(const Eigen::Ref<const Matrix> &m) { return 0.5 * (m + m.transpose()); }

}  // namespace lbvae
