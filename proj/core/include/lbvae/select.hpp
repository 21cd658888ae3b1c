#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lbvae/sweep.hpp"

namespace lbvae {

enum class EntanglementMetric { mig, im };

struct GridCell {
    double beta = 0.0;
    double lambda = 0.0;
    double f1 = 0.0;  // reconstruction error
    double f2 = 0.0;  // entanglement score
};

struct ObjectiveGrid {
    std::vector<GridCell> cells;
    EntanglementMetric metric = EntanglementMetric::im;
    /// "constant_f1", "constant_f2", "single_cell"
    std::set<std::string> flags;

    void validate() const;
};

/// f1 = mean recon_nll, f2 = 1 - mean MIG or 1 - mean I_m / max over the grid.
/// Cells lacking the chosen metric are skipped.
ObjectiveGrid grid_from_aggregates(const std::vector<AggregateCell> &cells, Procedure procedure,
                                   EntanglementMetric metric);

/// Min-max normalization per objective; constant objectives map to 0 and set a flag.
ObjectiveGrid normalize_objectives(const ObjectiveGrid &grid);

inline constexpr double kDefaultRho = 1e-3;
inline constexpr double kWeightFloor = 1e-9;

/// max_i w_i f_i + rho sum_i w_i f_i. Zero weights are raised to 1e-9.
/// Throws ConfigError on negative weights or rho.
double tchebycheff_score(std::pair<double, double> f, std::pair<double, double> w, double rho = kDefaultRho);

struct RankedCell {
    GridCell normalized;
    GridCell raw;
    double score = 0.0;
};

struct Selection {
    double beta = 0.0;
    double lambda = 0.0;
    std::vector<RankedCell> ranked;  // ascending score, ties by (beta, lambda)
};

/// Normalizes `grid` and returns the argmin of the scalarized score.
Selection select_config(const ObjectiveGrid &grid, std::pair<double, double> w, double rho = kDefaultRho);

/// Cells not strictly dominated in (f1, f2).
std::vector<GridCell> pareto_front(const ObjectiveGrid &grid);

void write_ranked_csv(const Selection &selection, const std::string &path);
/// Heatmap of scores over (beta rows, lambda columns) with the argmin outlined.
std::string selection_heatmap_svg(const Selection &selection, const std::string &title);

}  // namespace lbvae
