#include "lbvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lbvae/errors.hpp"
#include "lbvae/matching.hpp"

namespace lbvae {

namespace {

void check_correlation(const Matrix &s) {
    if (s.rows() == 0 || s.cols() == 0) { throw ConfigError("metric: empty S matrix"); }
    if (!s.allFinite() || (s.array() < 0.0).any() || (s.array() >= 1.0).any()) {
        throw DomainError("metric: S entries must lie in [0, 1)");
    }
}

// Largest and runner-up value of column j; ties keep the lower index as the winner.
std::pair<double, double> top_two(const Matrix &values, Eigen::Index j) {
    double best = values(0, j);
    double second = 0.0;
    bool have_second = false;
    for (Eigen::Index i = 1; i < values.rows(); ++i) {
        const double x = values(i, j);
        if (x > best) {
            second = best;
            best = x;
            have_second = true;
        } else if (!have_second || x > second) {
            second = x;
            have_second = true;
        }
    }
    return {best, second};
}

double gap_sum(const Matrix &values, Eigen::Index j) {
    const auto [best, second] = top_two(values, j);
    return best - second;
}

}  // namespace

double sap_score(const Matrix &s) {
    check_correlation(s);
    double total = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) { total += gap_sum(s, j); }
    return total / static_cast<double>(s.cols());
}

Vector gaussian_entropies(const Vector &variances) {
    return variances.unaryExpr([](double v) { return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * v); });
}

double mig_score(const Matrix &s, const Vector &factor_entropies, double entropy_floor) {
    check_correlation(s);
    if (factor_entropies.size() != s.cols()) { throw ConfigError("mig_score: need one entropy per factor"); }
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        if (!(factor_entropies(j) > entropy_floor)) {
            throw DegeneracyError("mig_score: entropy of factor " + std::to_string(j) + " (" +
                                      std::to_string(factor_entropies(j)) + " nats) is at or below the floor",
                                  j);
        }
    }
    const Matrix mi = pairwise_mi_from_correlation(s);
    double total = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) { total += gap_sum(mi, j) / factor_entropies(j); }
    return total / static_cast<double>(s.cols());
}

MigHarnessResult mig_score_lenient(const Matrix &s, const Vector &factor_entropies, double entropy_floor) {
    check_correlation(s);
    if (factor_entropies.size() != s.cols()) { throw ConfigError("mig_score: need one entropy per factor"); }
    const Matrix mi = pairwise_mi_from_correlation(s);
    MigHarnessResult out;
    double total = 0.0;
    long used = 0;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        if (!(factor_entropies(j) > entropy_floor)) {
            out.excluded_factors.push_back(static_cast<int>(j));
            continue;
        }
        total += gap_sum(mi, j) / factor_entropies(j);
        ++used;
    }
    if (used > 0) { out.score = total / static_cast<double>(used); }
    return out;
}

ImResult im_score_matching(const Matrix &pairwise_mi) {
    const Matching match = max_weight_matching(pairwise_mi);
    ImResult out;
    out.score = match.weight;
    for (const auto &[latent, factor] : match.pairs) { out.assignment.emplace_back(factor, latent); }
    std::sort(out.assignment.begin(), out.assignment.end());
    return out;
}

namespace {

ImResult im_partition(const JointCovariance &joint) {
    const int m = static_cast<int>(joint.sigma_x.dim());
    const int s = static_cast<int>(joint.sigma_v.dim());
    if (std::pow(static_cast<double>(m), s) > kPartitionEnumerationLimit ||
        static_cast<double>(m) * std::ldexp(1.0, s) > kPartitionEnumerationLimit) {
        throw ConfigError("im_score: partition enumeration too large (m^s > 1e7); use matching mode");
    }
    const std::size_t subsets = std::size_t{1} << s;
    // table[k * subsets + mask] = I(X_k; V_mask)
    std::vector<double> table(static_cast<std::size_t>(m) * subsets, 0.0);
    std::vector<int> members;
    for (int k = 0; k < m; ++k) {
        for (std::size_t mask = 1; mask < subsets; ++mask) {
            members.clear();
            for (int j = 0; j < s; ++j) {
                if (mask & (std::size_t{1} << j)) { members.push_back(j); }
            }
            table[static_cast<std::size_t>(k) * subsets + mask] = subset_mutual_information(joint, k, members);
        }
    }

    std::vector<int> assign(static_cast<std::size_t>(s), 0);
    std::vector<int> best_assign = assign;
    std::vector<std::size_t> masks(static_cast<std::size_t>(m), 0);
    double best = -1.0;
    // Odometer over factor -> latent maps in lexicographic order.
    while (true) {
        std::fill(masks.begin(), masks.end(), 0);
        for (int j = 0; j < s; ++j) { masks[static_cast<std::size_t>(assign[static_cast<std::size_t>(j)])] |= std::size_t{1} << j; }
        double total = 0.0;
        for (int k = 0; k < m; ++k) { total += table[static_cast<std::size_t>(k) * subsets + masks[static_cast<std::size_t>(k)]]; }
        if (total > best) {
            best = total;
            best_assign = assign;
        }
        int pos = s - 1;
        while (pos >= 0 && assign[static_cast<std::size_t>(pos)] == m - 1) { assign[static_cast<std::size_t>(pos--)] = 0; }
        if (pos < 0) { break; }
        ++assign[static_cast<std::size_t>(pos)];
    }
    ImResult out;
    out.score = std::max(best, 0.0);
    for (int j = 0; j < s; ++j) { out.assignment.emplace_back(j, best_assign[static_cast<std::size_t>(j)]); }
    return out;
}

}  // namespace

ImResult im_score(const GenerativeConfig &cfg, const ModelParams &params, ImMode mode) {
    const JointCovariance joint = joint_latent_factor_covariance(cfg, params);
    if (mode == ImMode::partition) { return im_partition(joint); }
    return im_score_matching(pairwise_mi_from_correlation(pairwise_correlation_matrix(joint)));
}

MetricReport evaluate_all(const GenerativeConfig &cfg, const ModelParams &params, const EvaluateOptions &opts) {
    const JointCovariance joint = joint_latent_factor_covariance(cfg, params);
    MetricReport r;
    r.s_matrix = pairwise_correlation_matrix(joint);
    r.sap = sap_score(r.s_matrix);

    const MigHarnessResult mig = mig_score_lenient(r.s_matrix, gaussian_entropies(cfg.sigma_v_diag), opts.entropy_floor);
    r.mig = mig.score;
    for (int j : mig.excluded_factors) { r.flags.insert("mig_entropy_floor:" + std::to_string(j)); }
    if (!mig.score) { r.flags.insert("mig_undefined"); }

    const ImResult im = opts.im_mode == ImMode::partition
                            ? im_partition(joint)
                            : im_score_matching(pairwise_mi_from_correlation(r.s_matrix));
    r.im = im.score;
    r.im_assignment = im.assignment;

    const MutualInformation mi = gaussian_mutual_information(joint);
    r.joint_mi = mi.nats;
    if (mi.degenerate) { r.flags.insert("joint_mi_degenerate"); }

    const SpectralNormResult sn = spectral_norm(params.b);
    r.spec_norm_b = sn.value;
    if (!sn.converged) { r.flags.insert("spectral_norm_unconverged"); }
    return r;
}

nlohmann::json to_json(const MetricReport &report) {
    nlohmann::json assignment = nlohmann::json::array();
    for (const auto &[factor, latent] : report.im_assignment) { assignment.push_back({factor, latent}); }
    return nlohmann::json{
        {"sap", report.sap},
        {"mig", report.mig ? nlohmann::json(*report.mig) : nlohmann::json(nullptr)},
        {"im", report.im},
        {"joint_mi", report.joint_mi},
        {"spec_norm_b", report.spec_norm_b},
        {"im_assignment", assignment},
        {"flags", report.flags},
    };
}

void write_matrix_csv(const Matrix &m, const std::string &path) {
    std::ofstream out(path);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << "latent";
    for (Eigen::Index j = 0; j < m.cols(); ++j) { out << ",V" << j; }
    out << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << 'X' << i;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", m(i, j));
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace lbvae
