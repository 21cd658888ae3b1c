#pragma once

#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "lbvae/linalg.hpp"

namespace lbvae {

/// Linear-Gaussian generative model Y = Gamma V + noise, V ~ N(0, diag(sigma_v)),
/// noise ~ N(0, sigma_sq I_n). `m` is the latent width the model will be fit with.
struct GenerativeConfig {
    int n = 0;
    int m = 0;
    int s = 0;
    Matrix gamma;         // n x s
    Vector sigma_v_diag;  // s
    double sigma_sq = 0.0;

    /// Throws ConfigError on any violated invariant.
    void validate() const;
    [[nodiscard]] Matrix sigma_v() const { return sigma_v_diag.asDiagonal(); }
};

/// Encoder X = B Y + W, W ~ N(0, sigma_w); decoder Yhat = A X + Z, Z ~ N(0, sigma_z).
struct ModelParams {
    Matrix a;  // n x m
    Matrix b;  // m x n
    SpdMatrix sigma_z;
    SpdMatrix sigma_w;

    /// Throws ConfigError when shapes disagree with `cfg`.
    void check_dims(const GenerativeConfig &cfg) const;
};

/// Covariance of (X, V): [[sigma_x, cross], [cross^T, sigma_v]].
struct JointCovariance {
    SpdMatrix sigma_x;  // m x m
    Matrix cross;       // m x s, B Gamma Sigma_V
    SpdMatrix sigma_v;  // s x s

    [[nodiscard]] Matrix assembled() const;
};

struct MutualInformation {
    double nats = 0.0;
    /// Joint covariance was within (-1e-10, 1e-12) of singular and was clamped.
    bool degenerate = false;
};

/// Sigma_Y = Gamma Sigma_V Gamma^T + sigma^2 I_n.
SpdMatrix observation_covariance(const GenerativeConfig &cfg);

JointCovariance joint_latent_factor_covariance(const GenerativeConfig &cfg, const ModelParams &params);
JointCovariance joint_latent_factor_covariance(const GenerativeConfig &cfg, const SpdMatrix &sigma_y,
                                               const ModelParams &params);

/// I(X;V) = 1/2 [log det Sigma_X + log det Sigma_V - log det Sigma_(X,V)], in nats.
/// Exactly zero when the cross block is zero. Throws NumericalError when the
/// joint block matrix has an eigenvalue below -1e-10.
MutualInformation gaussian_mutual_information(const JointCovariance &joint);

/// S_ij = (B Gamma Sigma_V)_ij^2 / ((Sigma_X)_ii (Sigma_V)_jj), shape m x s.
Matrix pairwise_correlation_matrix(const GenerativeConfig &cfg, const ModelParams &params);
Matrix pairwise_correlation_matrix(const JointCovariance &joint);

/// Elementwise -1/2 log(1 - S_ij). Throws DomainError if any entry is outside [0, 1).
Matrix pairwise_mi_from_correlation(const Matrix &s);

/// I(X_k; V_subset) from the (1 + |subset|)-dimensional joint covariance.
/// Factor indices are 0-based; an empty subset yields 0.
double subset_mutual_information(const GenerativeConfig &cfg, const ModelParams &params, int latent,
                                 std::span<const int> factors);
double subset_mutual_information(const JointCovariance &joint, int latent, std::span<const int> factors);

void to_json(nlohmann::json &j, const GenerativeConfig &cfg);
void from_json(const nlohmann::json &j, GenerativeConfig &cfg);

GenerativeConfig load_generative_config(const std::string &path);
void save_generative_config(const GenerativeConfig &cfg, const std::string &path);

nlohmann::json matrix_to_json(const Matrix &m);
Matrix matrix_from_json(const nlohmann::json &j);

}  // namespace lbvae
