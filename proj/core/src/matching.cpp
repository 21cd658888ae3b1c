#include "lbvae/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lbvae/errors.hpp"

namespace lbvae {

Matching max_weight_matching(const Matrix &weights, double zero_below) {
    if (!weights.allFinite() || (weights.array() < 0.0).any()) {
        throw DomainError("max_weight_matching: weights must be finite and nonnegative");
    }
    Matching out;
    const auto rows = static_cast<int>(weights.rows());
    const auto cols = static_cast<int>(weights.cols());
    if (rows == 0 || cols == 0) { return out; }

    const Matrix w = weights.unaryExpr([zero_below](double x) { return x < zero_below ? 0.0 : x; });
    if (w.isZero(0.0)) { return out; }

    // Square min-cost assignment on -w, zero-padded. 1-based potentials u (rows), v (cols);
    // owner[j] is the row assigned to column j.
    const int k = std::max(rows, cols);
    auto cost = [&](int i, int j) { return (i < rows && j < cols) ? -w(i, j) : 0.0; };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
    std::vector<int> owner(k + 1, 0), way(k + 1, 0);
    for (int i = 1; i <= k; ++i) {
        owner[0] = i;
        int j0 = 0;
        std::vector<double> minv(k + 1, inf);
        std::vector<char> used(k + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = owner[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= k; ++j) {
                if (used[j]) { continue; }
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= k; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const int j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (int j = 1; j <= k; ++j) {
        const int i = owner[j] - 1;
        const int c = j - 1;
        if (i < rows && c < cols && w(i, c) > 0.0) { out.pairs.emplace_back(i, c); }
    }
    std::sort(out.pairs.begin(), out.pairs.end());
    for (const auto &[i, c] : out.pairs) { out.weight += w(i, c); }
    return out;
}

}  // namespace lbvae
