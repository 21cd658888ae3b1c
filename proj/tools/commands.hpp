#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lbvae::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerification = 3;

struct GenConfigArgs {
    std::string kind = "generative";
    int n = 100;
    int m = 10;
    int s = 5;
    double sigma_sq = 0.05;
    std::vector<double> variance_range{0.1, 1.0};
    std::uint64_t seed = 0;
    std::string out;
    // sweep only
    std::vector<double> beta_grid;
    std::vector<double> lambda_grid;
    std::optional<int> trials;
    std::vector<std::string> procedures;
};

struct SingleRunArgs {
    std::string config;
    double beta = 1.0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string trace;
    std::string out;
    bool trivial_init = false;
    double init_scale = 0.1;
    // fixed-point
    double tol = 1e-12;
    long max_iter = 10000;
    // optimize
    double lr = 1e-3;
    double weight_decay = 0.0;
    long steps = 20000;
    double grad_tol = 0.0;
    long record_every = 100;
};

struct SweepArgs {
    std::string config;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::optional<unsigned> threads;
    std::optional<int> trials;
    std::vector<std::string> procedures;
};

struct SelectArgs {
    std::string input;
    double w1 = 0.5;
    double rho = 1e-3;
    std::string metric = "im";
    std::string procedure = "fixed_point";
    std::string out_dir;
};

struct VerifyArgs {
    std::uint64_t seed = 0;
    int n = 100;
    int m = 10;
    int s = 5;
    int trials = 5;
    long mc_samples = 100000;
    std::string out;
};

int cmd_gen_config(const GenConfigArgs &a);
int cmd_fixed_point(const SingleRunArgs &a);
int cmd_optimize(const SingleRunArgs &a);
int cmd_sweep(const SweepArgs &a);
int cmd_select(const SelectArgs &a);
int cmd_verify(const VerifyArgs &a);

}  // namespace lbvae::cli
