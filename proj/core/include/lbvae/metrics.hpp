#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbvae/gaussian.hpp"

namespace lbvae {

/// SAP: mean over factors of the gap between the two largest entries of each
/// column of S. Ties go to the lower latent index; with one latent the
/// runner-up is 0.
double sap_score(const Matrix &s);

/// H(V_j) = 1/2 log(2 pi e var_j) in nats.
Vector gaussian_entropies(const Vector &variances);

inline constexpr double kDefaultEntropyFloor = 1e-3;

/// MIG with pairwise MI -1/2 log(1 - S_ij). Throws DegeneracyError naming the
/// first factor whose entropy is at or below `entropy_floor`.
double mig_score(const Matrix &s, const Vector &factor_entropies, double entropy_floor = kDefaultEntropyFloor);

struct MigHarnessResult {
    std::optional<double> score;      // empty when every factor was excluded
    std::vector<int> excluded_factors;
};

/// Harness variant: factors below the floor are dropped from the average.
MigHarnessResult mig_score_lenient(const Matrix &s, const Vector &factor_entropies,
                                   double entropy_floor = kDefaultEntropyFloor);

enum class ImMode { matching, partition };

struct ImResult {
    double score = 0.0;
    /// (factor, latent) pairs, 0-based, sorted by factor.
    std::vector<std::pair<int, int>> assignment;
};

inline constexpr double kPartitionEnumerationLimit = 1e7;

/// I_m. Matching mode: Hungarian on the m x s pairwise-MI matrix.
/// Partition mode: exhaustive enumeration of factor -> latent maps scored
/// with subset_mutual_information; throws ConfigError when m^s > 1e7.
ImResult im_score(const GenerativeConfig &cfg, const ModelParams &params, ImMode mode = ImMode::matching);
ImResult im_score_matching(const Matrix &pairwise_mi);

struct MetricReport {
    double sap = 0.0;
    std::optional<double> mig;
    double im = 0.0;
    double joint_mi = 0.0;
    double spec_norm_b = 0.0;
    Matrix s_matrix;
    std::vector<std::pair<int, int>> im_assignment;
    std::set<std::string> flags;
};

struct EvaluateOptions {
    ImMode im_mode = ImMode::matching;
    double entropy_floor = kDefaultEntropyFloor;
};

/// Every metric for one parameter set. Recoverable failures become flags:
/// "mig_entropy_floor:<j>", "mig_undefined", "joint_mi_degenerate",
/// "spectral_norm_unconverged".
MetricReport evaluate_all(const GenerativeConfig &cfg, const ModelParams &params, const EvaluateOptions &opts = {});

nlohmann::json to_json(const MetricReport &report);
/// Rows are latents, columns factors.
void write_matrix_csv(const Matrix &m, const std::string &path);

}  // namespace lbvae
