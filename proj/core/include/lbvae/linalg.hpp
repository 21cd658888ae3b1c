#pragma once

#include <Eigen/Dense>

namespace lbvae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric positive-definite matrix with a validated, cached Cholesky factor.
///
/// Construction rejects matrices that are asymmetric beyond
/// 1e-12 * max|M| or whose Cholesky pivots fall below 1e-12 * trace / dim.
/// The stored matrix is the symmetrized input. Nothing is regularized.
class SpdMatrix {
public:
    SpdMatrix() = default;
    explicit SpdMatrix(Matrix m);

    static SpdMatrix identity(Eigen::Index dim);
    /// Builds L L^T from a lower-triangular factor without refactorizing.
    /// The same pivot threshold as the main constructor applies.
    static SpdMatrix from_cholesky(const Matrix &lower);

    [[nodiscard]] Eigen::Index dim() const noexcept { return dense_.rows(); }
    [[nodiscard]] const Matrix &dense() const noexcept { return dense_; }
    [[nodiscard]] const Matrix &chol() const noexcept { return chol_; }

    /// log det via the Cholesky diagonal.
    [[nodiscard]] double log_det() const;
    /// Returns M^{-1} rhs using two triangular solves.
    [[nodiscard]] Matrix solve(const Eigen::Ref<const Matrix> &rhs) const;
    /// M^{-1} formed by solving against the identity. Use sparingly.
    [[nodiscard]] Matrix inverse() const;

    /// Returns false instead of throwing when `m` is not acceptably SPD.
    static bool is_spd(const Matrix &m);

private:
    void check_pivots() const;

    Matrix dense_;
    Matrix chol_;
};

struct SpectralNormResult {
    double value = 0.0;
    bool converged = true;
    int iterations = 0;
};

/// Largest singular value by power iteration on the smaller Gram matrix
/// (M^T M or M M^T). Relative tolerance on successive Rayleigh quotients.
SpectralNormResult spectral_norm(const Eigen::Ref<const Matrix> &m, double rel_tol = 1e-12, int max_iter = 10000);

/// Shorthand for spectral_norm(m).value.
double norm2(const Eigen::Ref<const Matrix> &m);

/// Relative Frobenius change ||next - prev||_F / (||prev||_F + 1e-300).
double relative_change(const Eigen::Ref<const Matrix> &prev, const Eigen::Ref<const Matrix> &next);

/// (m + m^T) / 2
Matrix symmetrized(const Eigen::Ref<const Matrix> &m);

}  // namespace lbvae
