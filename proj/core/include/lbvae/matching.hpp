#pragma once

#include <utility>
#include <vector>

#include "lbvae/linalg.hpp"

namespace lbvae {

struct Matching {
    /// (row, column) pairs in increasing row order. Only strictly positive weights are matched.
    std::vector<std::pair<int, int>> pairs;
    double weight = 0.0;
};

/// Maximum-weight one-to-one partial matching on a nonnegative rows x cols
/// weight matrix (Hungarian algorithm with potentials, O(k^3) for k = max(rows, cols)).
/// Entries below `zero_below` are treated as 0 and never matched.
Matching max_weight_matching(const Matrix &weights, double zero_below = 1e-15);

}  // namespace lbvae
