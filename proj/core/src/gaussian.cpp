#include "lbvae/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lbvae/errors.hpp"

namespace lbvae {

namespace {

constexpr double kClampEigen = 1e-12;
constexpr double kNegativeEigenTol = -1e-10;

void require(bool ok, const std::string &what) {
    if (!ok) { throw ConfigError(what); }
}

Matrix dense_observation_covariance(const GenerativeConfig &cfg) {
    require(cfg.gamma.rows() == cfg.n && cfg.gamma.cols() == cfg.s, "gamma must be n x s");
    require(cfg.sigma_v_diag.size() == cfg.s, "sigma_v_diag must have s entries");
    Matrix sy = cfg.gamma * cfg.sigma_v_diag.asDiagonal() * cfg.gamma.transpose();
    sy.diagonal().array() += cfg.sigma_sq;
    return symmetrized(sy);
}

// log det of a symmetric PSD matrix. Falls back to clamped eigenvalues when the
// matrix is within tolerance of singular.
double robust_log_det(const Matrix &m, bool &degenerate) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        const Vector d = Matrix(llt.matrixL()).diagonal();
        if ((d.array().square() >= kClampEigen).all()) { return 2.0 * d.array().log().sum(); }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();
    if (ev.minCoeff() < kNegativeEigenTol) {
        throw NumericalError("joint covariance is not positive semi-definite (min eigenvalue " +
                             std::to_string(ev.minCoeff()) + ")");
    }
    degenerate = true;
    return ev.array().max(kClampEigen).log().sum();
}

}  // namespace

void GenerativeConfig::validate() const {
    require(n >= 1 && m >= 1 && s >= 1, "n, m, s must all be >= 1");
    require(gamma.rows() == n && gamma.cols() == s, "gamma must be n x s");
    require(gamma.allFinite(), "gamma must be finite");
    require(sigma_v_diag.size() == s, "sigma_v_diag must have s entries");
    require(sigma_v_diag.allFinite() && (sigma_v_diag.array() > 0.0).all(), "sigma_v_diag entries must be > 0");
    require(std::isfinite(sigma_sq) && sigma_sq > 0.0, "sigma_sq must be > 0");
    for (int j = 0; j < s; ++j) {
        require(!gamma.col(j).isZero(0.0), "gamma column " + std::to_string(j) + " is all zero");
    }
}

void ModelParams::check_dims(const GenerativeConfig &cfg) const {
    require(a.rows() == cfg.n && a.cols() == cfg.m, "A must be n x m");
    require(b.rows() == cfg.m && b.cols() == cfg.n, "B must be m x n");
    require(sigma_z.dim() == cfg.n, "Sigma_Z must be n x n");
    require(sigma_w.dim() == cfg.m, "Sigma_W must be m x m");
}

Matrix JointCovariance::assembled() const {
    const auto m = sigma_x.dim();
    const auto s = sigma_v.dim();
    Matrix j(m + s, m + s);
    j.topLeftCorner(m, m) = sigma_x.dense();
    j.topRightCorner(m, s) = cross;
    j.bottomLeftCorner(s, m) = cross.transpose();
    j.bottomRightCorner(s, s) = sigma_v.dense();
    return j;
}

SpdMatrix observation_covariance(const GenerativeConfig &cfg) { return SpdMatrix(dense_observation_covariance(cfg)); }

JointCovariance joint_latent_factor_covariance(const GenerativeConfig &cfg, const SpdMatrix &sigma_y,
                                               const ModelParams &params) {
    params.check_dims(cfg);
    const Matrix &b = params.b;
    return JointCovariance{
        SpdMatrix(b * sigma_y.dense() * b.transpose() + params.sigma_w.dense()),
        b * cfg.gamma * cfg.sigma_v_diag.asDiagonal(),
        SpdMatrix(cfg.sigma_v()),
    };
}

JointCovariance joint_latent_factor_covariance(const GenerativeConfig &cfg, const ModelParams &params) {
    return joint_latent_factor_covariance(cfg, observation_covariance(cfg), params);
}

MutualInformation gaussian_mutual_information(const JointCovariance &joint) {
    if (joint.cross.isZero(0.0)) { return {}; }
    MutualInformation out;
    const double joint_log_det = robust_log_det(joint.assembled(), out.degenerate);
    out.nats = std::max(0.0, 0.5 * (joint.sigma_x.log_det() + joint.sigma_v.log_det() - joint_log_det));
    return out;
}

Matrix pairwise_correlation_matrix(const JointCovariance &joint) {
    const Vector vx = joint.sigma_x.dense().diagonal();
    const Vector vv = joint.sigma_v.dense().diagonal();
    if ((vx.array() <= 0.0).any() || (vv.array() <= 0.0).any()) {
        throw DegeneracyError("pairwise_correlation_matrix: zero variance on the diagonal");
    }
    return (joint.cross.array().square().colwise() / vx.array()).rowwise() / vv.transpose().array();
}

Matrix pairwise_correlation_matrix(const GenerativeConfig &cfg, const ModelParams &params) {
    params.check_dims(cfg);
    const Matrix sy = dense_observation_covariance(cfg);
    const Matrix cross = params.b * cfg.gamma * cfg.sigma_v_diag.asDiagonal();
    const Vector vx = (params.b * sy * params.b.transpose() + params.sigma_w.dense()).diagonal();
    if ((vx.array() <= 0.0).any() || (cfg.sigma_v_diag.array() <= 0.0).any()) {
        throw DegeneracyError("pairwise_correlation_matrix: zero variance on the diagonal");
    }
    return (cross.array().square().colwise() / vx.array()).rowwise() / cfg.sigma_v_diag.transpose().array();
}

Matrix pairwise_mi_from_correlation(const Matrix &s) {
    if (!s.allFinite() || (s.array() < 0.0).any() || (s.array() >= 1.0).any()) {
        throw DomainError("pairwise_mi_from_correlation: entries must lie in [0, 1)");
    }
    return s.unaryExpr([](double v) { return -0.5 * std::log1p(-v); });
}

double subset_mutual_information(const JointCovariance &joint, int latent, std::span<const int> factors) {
    const auto m = joint.sigma_x.dim();
    const auto s = joint.sigma_v.dim();
    require(latent >= 0 && latent < m, "latent index out of range");
    std::vector<int> idx(factors.begin(), factors.end());
    std::sort(idx.begin(), idx.end());
    require(std::adjacent_find(idx.begin(), idx.end()) == idx.end(), "duplicate factor index");
    for (int j : idx) { require(j >= 0 && j < s, "factor index out of range"); }
    if (idx.empty()) { return 0.0; }

    const auto p = static_cast<Eigen::Index>(idx.size());
    Matrix sub_cross(1, p);
    Matrix sub_v(p, p);
    for (Eigen::Index a = 0; a < p; ++a) {
        sub_cross(0, a) = joint.cross(latent, idx[a]);
        for (Eigen::Index b = 0; b < p; ++b) { sub_v(a, b) = joint.sigma_v.dense()(idx[a], idx[b]); }
    }
    const JointCovariance sub{
        SpdMatrix(Matrix::Constant(1, 1, joint.sigma_x.dense()(latent, latent))),
        sub_cross,
        SpdMatrix(sub_v),
    };
    return gaussian_mutual_information(sub).nats;
}

double subset_mutual_information(const GenerativeConfig &cfg, const ModelParams &params, int latent,
                                 std::span<const int> factors) {
    return subset_mutual_information(joint_latent_factor_covariance(cfg, params), latent, factors);
}

nlohmann::json matrix_to_json(const Matrix &m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) { row.push_back(m(i, j)); }
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json &j) {
    require(j.is_array(), "matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto &row = j.at(static_cast<std::size_t>(i));
        require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols, "ragged matrix rows");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto &v = row.at(static_cast<std::size_t>(k));
            require(v.is_number(), "matrix entries must be numbers");
            m(i, k) = v.get<double>();
            require(std::isfinite(m(i, k)), "matrix entries must be finite");
        }
    }
    return m;
}

void to_json(nlohmann::json &j, const GenerativeConfig &cfg) {
    j = nlohmann::json{
        {"n", cfg.n},
        {"m", cfg.m},
        {"s", cfg.s},
        {"gamma", matrix_to_json(cfg.gamma)},
        {"sigma_v_diag", std::vector<double>(cfg.sigma_v_diag.begin(), cfg.sigma_v_diag.end())},
        {"sigma_sq", cfg.sigma_sq},
    };
}

void from_json(const nlohmann::json &j, GenerativeConfig &cfg) {
    try {
        cfg.n = j.at("n").get<int>();
        cfg.m = j.at("m").get<int>();
        cfg.s = j.at("s").get<int>();
        cfg.gamma = matrix_from_json(j.at("gamma"));
        const auto diag = j.at("sigma_v_diag").get<std::vector<double>>();
        cfg.sigma_v_diag = Eigen::Map<const Vector>(diag.data(), static_cast<Eigen::Index>(diag.size()));
        cfg.sigma_sq = j.at("sigma_sq").get<double>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("generative config: ") + e.what());
    }
    if (cfg.gamma.rows() == 0 && cfg.n > 0) { cfg.gamma.resize(cfg.n, 0); }
    cfg.validate();
}

GenerativeConfig load_generative_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) { throw ConfigError("cannot open " + path); }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(path + ": " + e.what());
    }
    return j.get<GenerativeConfig>();
}

void save_generative_config(const GenerativeConfig &cfg, const std::string &path) {
    std::ofstream out(path);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << nlohmann::json(cfg).dump(2) << '\n';
}

}  // namespace lbvae
