#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "lbvae/linalg.hpp"

namespace lbvae {

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Order-sensitive hash of a tuple of integers into a 64-bit seed. Used to give
/// every (config, arm, trial, procedure) cell its own stream independent of
/// scheduling.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double low, double high) { return std::uniform_real_distribution<double>(low, high)(engine_); }

    /// rows x cols matrix of i.i.d. N(0, stddev^2).
    Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);

    std::mt19937_64 &engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lbvae
