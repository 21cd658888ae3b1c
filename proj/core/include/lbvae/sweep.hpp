#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lbvae/gaussian.hpp"
#include "lbvae/optimizer.hpp"
#include "lbvae/stationarity.hpp"

namespace lbvae {

enum class Procedure { fixed_point, optimize };

std::string to_string(Procedure p);
Procedure procedure_from_string(const std::string &name);

struct SweepConfig {
    int n = 100;
    int m = 10;
    int s = 5;
    double variance_low = 0.1;
    double variance_high = 1.0;
    double sigma_sq = 0.05;
    std::vector<double> beta_grid{1, 4, 8, 16, 32, 64, 128, 256};
    std::vector<double> lambda_grid{0, 4, 8, 16, 32};
    int trials = 50;
    std::vector<Procedure> procedures{Procedure::fixed_point, Procedure::optimize};
    std::uint64_t master_seed = 0;
    double init_scale = 0.1;
    FixedPointOptions fixed_point{};
    OptimizerConfig optimizer{};
    /// 0 selects std::thread::hardware_concurrency().
    unsigned threads = 1;

    void validate() const;
};

void to_json(nlohmann::json &j, const SweepConfig &cfg);
void from_json(const nlohmann::json &j, SweepConfig &cfg);

struct SweepRecord {
    double beta = 0.0;
    double lambda = 0.0;
    int trial = 0;
    Procedure procedure = Procedure::fixed_point;
    bool converged = false;
    long iterations = 0;
    std::optional<double> recon_nll;
    std::optional<double> kl;
    std::optional<double> l2_penalty;
    std::optional<double> total;
    std::optional<double> sap;
    std::optional<double> mig;
    std::optional<double> im;
    std::optional<double> joint_mi;
    std::optional<double> spec_norm_b;
    std::optional<double> trivial_distance;
    /// ';'-separated markers such as "mig_entropy_floor:3" or "numerical_error".
    std::string flags;

    bool operator==(const SweepRecord &) const = default;
};

/// Sigma_V ~ U(variance_range) i.i.d. (variances), Gamma ~ N(0, 1/s) i.i.d.,
/// seeded by (master_seed, trial) only, so all (beta, lambda) arms of a trial share data.
GenerativeConfig sample_generative_config(std::uint64_t master_seed, int trial, int n, int m, int s,
                                          std::pair<double, double> variance_range, double sigma_sq);

/// Seed for the random initialization of (trial, procedure).
std::uint64_t init_seed(std::uint64_t master_seed, int trial, Procedure procedure);

/// Runs one cell; failures are captured in the record, never thrown.
SweepRecord run_trial(const SweepConfig &sweep, double beta, double lambda, int trial, Procedure procedure);

/// Every (beta, lambda, trial, procedure) cell, sorted in that key order.
std::vector<SweepRecord> run_sweep(const SweepConfig &sweep);

struct MetricStats {
    long count = 0;
    long excluded = 0;
    double mean = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct AggregateCell {
    double beta = 0.0;
    double lambda = 0.0;
    Procedure procedure = Procedure::fixed_point;
    long records = 0;
    long converged = 0;
    std::map<std::string, MetricStats> metrics;
};

/// Names of the aggregated numeric columns, in CSV order.
const std::vector<std::string> &record_metric_names();
std::optional<double> record_metric(const SweepRecord &r, const std::string &name);

/// Quantiles use linear interpolation between order statistics.
/// Null values are excluded per metric and counted in `excluded`.
std::vector<AggregateCell> aggregate(const std::vector<SweepRecord> &records);

nlohmann::json aggregates_to_json(const std::vector<AggregateCell> &cells);
std::vector<AggregateCell> aggregates_from_json(const nlohmann::json &j);

/// Fixed header, %.17g decimals, empty field for null.
std::string records_to_csv(const std::vector<SweepRecord> &records);
std::vector<SweepRecord> records_from_csv(const std::string &text);
void export_records(const std::vector<SweepRecord> &records, const std::string &path);
std::vector<SweepRecord> import_records(const std::string &path);

}  // namespace lbvae
