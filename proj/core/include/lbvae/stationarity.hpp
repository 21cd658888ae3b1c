#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lbvae/errors.hpp"
#include "lbvae/gaussian.hpp"

namespace lbvae {

struct HistoryEntry {
    long iteration = 0;
    double spec_norm_b = 0.0;
    double residual = 0.0;
    double spec_norm_sigma_w = 0.0;
    double trivial_distance = 0.0;
};

/// Bounded trajectory record. Once `capacity` entries are held, every other
/// entry is dropped and the recording stride doubles, so a long run keeps a
/// geometrically thinned but complete-span history.
class TrajectoryHistory {
public:
    explicit TrajectoryHistory(std::size_t capacity = 4096);

    void record(const HistoryEntry &entry);
    [[nodiscard]] const std::vector<HistoryEntry> &entries() const noexcept { return entries_; }
    [[nodiscard]] long stride() const noexcept { return stride_; }

private:
    std::size_t capacity_;
    long stride_ = 1;
    long seen_ = 0;
    std::vector<HistoryEntry> entries_;
};

/// Encoder state kept at a checkpoint for gain-recursion checks.
struct GainSnapshot {
    long iteration = 0;
    Matrix b;
    Matrix sigma_w;
};

struct FixedPointState {
    ModelParams params;
    long iteration = 0;
    double residual = 0.0;
    std::optional<TrajectoryHistory> history;
};

struct CollapseDiagnostics {
    std::vector<double> sigma_w_spectral_norms;
    /// Largest eigenvalue of Sigma_W per iteration (Loewner bound evidence).
    std::vector<double> sigma_w_max_eigenvalues;
    std::vector<double> sigma_w_min_eigenvalues;
    /// One entry per checkpoint; only filled when lambda == 0, where the recursion holds.
    std::vector<double> gain_recursion_residuals;
    bool collapsed = false;
    double trivial_distance = 0.0;
};

/// Sigma_Y and its inverse action, computed once per config.
class StationarityContext {
public:
    explicit StationarityContext(const GenerativeConfig &cfg);

    [[nodiscard]] const GenerativeConfig &config() const noexcept { return cfg_; }
    [[nodiscard]] const SpdMatrix &sigma_y() const noexcept { return sigma_y_; }

private:
    GenerativeConfig cfg_;
    SpdMatrix sigma_y_;
};

/// One stationarity sweep: decoder (A, Sigma_Z) from the incoming encoder, then
/// encoder (B, Sigma_W) from the new decoder with precision Sigma_Z^{-1} / beta.
FixedPointState beta_step(const FixedPointState &state, const StationarityContext &ctx, double beta);
FixedPointState beta_step(const FixedPointState &state, const GenerativeConfig &cfg, double beta);

/// Same decoder update; encoder uses M = (Sigma_Z^{-1} + 2 lambda I_n) / beta.
FixedPointState lambda_beta_step(const FixedPointState &state, const StationarityContext &ctx, double beta,
                                 double lambda);
FixedPointState lambda_beta_step(const FixedPointState &state, const GenerativeConfig &cfg, double beta,
                                 double lambda);

struct FixedPointOptions {
    double tol = 1e-12;
    long max_iter = 10000;
    double collapse_threshold = 1e-6;
    /// Record per-iteration HistoryEntry values (includes a trivial-distance
    /// evaluation per iteration, which costs an n x n spectral norm).
    bool keep_history = false;
    /// Gain-recursion residual between consecutive checkpoints this many iterations apart.
    long checkpoint_every = 10;
    /// Also return the raw checkpoints for verify_gain_recursion.
    bool keep_snapshots = false;
};

struct FixedPointResult {
    FixedPointState state;
    CollapseDiagnostics diagnostics;
    std::vector<GainSnapshot> snapshots;
    bool converged = false;
};

/// Thrown by run_fixed_point when a step fails; carries the trajectory so far.
class FixedPointError : public NumericalError {
public:
    FixedPointError(const NumericalError &cause, FixedPointResult partial)
        : NumericalError(cause), partial_(std::move(partial)) {}

    [[nodiscard]] const FixedPointResult &partial() const noexcept { return partial_; }

private:
    FixedPointResult partial_;
};

/// Iterates beta_step (lambda == 0) or lambda_beta_step until the residual
/// drops below tol or max_iter steps have run.
FixedPointResult run_fixed_point(const ModelParams &init, const GenerativeConfig &cfg, double beta, double lambda,
                                 const FixedPointOptions &options = {});

/// For consecutive snapshot pairs (t, t+k) returns
/// ||B(t+k) - beta^-k Sigma_W(t+k) Sigma_W(t)^{-1} B(t)||_2 / max(||B(t+k)||_2, 1e-300).
/// Throws UsageError when fewer than two snapshots are supplied.
std::vector<double> verify_gain_recursion(const std::vector<GainSnapshot> &trajectory, double beta);

/// (A, B, Sigma_Z, Sigma_W) = (0, 0, Sigma_Y, I_m).
ModelParams trivial_solution(const GenerativeConfig &cfg);

struct CollapseCheck {
    bool collapsed = false;
    double trivial_distance = 0.0;
};

/// max(||A||, ||B||, ||Sigma_Z - Sigma_Y||, ||Sigma_W - I||) against `threshold`.
CollapseCheck detect_collapse(const ModelParams &params, const GenerativeConfig &cfg, double threshold = 1e-6);
CollapseCheck detect_collapse(const ModelParams &params, const SpdMatrix &sigma_y, double threshold = 1e-6);

/// A, B ~ N(0, (scale / sqrt(fan_in))^2); Sigma_Z = Sigma_Y; Sigma_W = I_m.
ModelParams random_init(const GenerativeConfig &cfg, std::uint64_t seed, double scale = 0.1);

/// CSV columns: iteration, residual, spec_norm_B, spec_norm_sigma_w, trivial_distance.
void write_trajectory_csv(const TrajectoryHistory &history, const std::string &path);

}  // namespace lbvae
