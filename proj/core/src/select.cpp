#include "lbvae/select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "lbvae/errors.hpp"
#include "lbvae/svg.hpp"

namespace lbvae {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

void ObjectiveGrid::validate() const {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!std::isfinite(cells[i].f1) || !std::isfinite(cells[i].f2)) {
            throw ConfigError("objective grid: non-finite objective at beta=" + short_label(cells[i].beta) +
                              ", lambda=" + short_label(cells[i].lambda));
        }
        for (std::size_t k = 0; k < i; ++k) {
            if (cells[i].beta == cells[k].beta && cells[i].lambda == cells[k].lambda) {
                throw ConfigError("objective grid: duplicate cell beta=" + short_label(cells[i].beta) +
                                  ", lambda=" + short_label(cells[i].lambda));
            }
        }
    }
}

ObjectiveGrid grid_from_aggregates(const std::vector<AggregateCell> &cells, Procedure procedure,
                                   EntanglementMetric metric) {
    const std::string name = metric == EntanglementMetric::mig ? "mig" : "im";
    ObjectiveGrid grid;
    grid.metric = metric;
    for (const AggregateCell &c : cells) {
        if (c.procedure != procedure) { continue; }
        const auto f1 = c.metrics.find("recon_nll");
        const auto f2 = c.metrics.find(name);
        if (f1 == c.metrics.end() || f2 == c.metrics.end() || f1->second.count == 0 || f2->second.count == 0) {
            continue;
        }
        grid.cells.push_back(GridCell{c.beta, c.lambda, f1->second.mean, f2->second.mean});
    }
    if (metric == EntanglementMetric::mig) {
        for (GridCell &g : grid.cells) { g.f2 = 1.0 - g.f2; }
    } else {
        double max_im = 0.0;
        for (const GridCell &g : grid.cells) { max_im = std::max(max_im, g.f2); }
        for (GridCell &g : grid.cells) { g.f2 = max_im > 0.0 ? 1.0 - g.f2 / max_im : 1.0; }
    }
    grid.validate();
    return grid;
}

ObjectiveGrid normalize_objectives(const ObjectiveGrid &grid) {
    grid.validate();
    ObjectiveGrid out = grid;
    if (out.cells.empty()) { return out; }
    if (out.cells.size() == 1) { out.flags.insert("single_cell"); }
    auto rescale = [&](double GridCell::*field, const char *flag) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const GridCell &c : out.cells) {
            lo = std::min(lo, c.*field);
            hi = std::max(hi, c.*field);
        }
        if (!(hi > lo)) {
            out.flags.insert(flag);
            for (GridCell &c : out.cells) { c.*field = 0.0; }
            return;
        }
        for (GridCell &c : out.cells) { c.*field = (c.*field - lo) / (hi - lo); }
    };
    rescale(&GridCell::f1, "constant_f1");
    rescale(&GridCell::f2, "constant_f2");
    return out;
}

double tchebycheff_score(std::pair<double, double> f, std::pair<double, double> w, double rho) {
    if (!(w.first >= 0.0) || !(w.second >= 0.0)) { throw ConfigError("tchebycheff weights must be >= 0"); }
    if (!(rho >= 0.0)) { throw ConfigError("tchebycheff rho must be >= 0"); }
    const double w1 = std::max(w.first, kWeightFloor);
    const double w2 = std::max(w.second, kWeightFloor);
    const double a = w1 * f.first;
    const double b = w2 * f.second;
    return std::max(a, b) + rho * (a + b);
}

Selection select_config(const ObjectiveGrid &grid, std::pair<double, double> w, double rho) {
    if (grid.cells.empty()) { throw ConfigError("select_config: empty grid"); }
    const ObjectiveGrid norm = normalize_objectives(grid);
    Selection sel;
    sel.ranked.reserve(norm.cells.size());
    for (std::size_t i = 0; i < norm.cells.size(); ++i) {
        const GridCell &c = norm.cells[i];
        sel.ranked.push_back(RankedCell{c, grid.cells[i], tchebycheff_score({c.f1, c.f2}, w, rho)});
    }
    std::sort(sel.ranked.begin(), sel.ranked.end(), [](const RankedCell &a, const RankedCell &b) {
        if (a.score != b.score) { return a.score < b.score; }
        if (a.raw.beta != b.raw.beta) { return a.raw.beta < b.raw.beta; }
        return a.raw.lambda < b.raw.lambda;
    });
    sel.beta = sel.ranked.front().raw.beta;
    sel.lambda = sel.ranked.front().raw.lambda;
    return sel;
}

std::vector<GridCell> pareto_front(const ObjectiveGrid &grid) {
    std::vector<GridCell> sorted = grid.cells;
    std::sort(sorted.begin(), sorted.end(), [](const GridCell &a, const GridCell &b) {
        if (a.f1 != b.f1) { return a.f1 < b.f1; }
        return a.f2 < b.f2;
    });
    // Sweep in f1 order; a cell survives if no earlier cell dominates it.
    std::vector<GridCell> front;
    double best_f2 = std::numeric_limits<double>::infinity();
    double best_f1 = std::numeric_limits<double>::infinity();
    for (const GridCell &c : sorted) {
        const bool dominated = best_f2 < c.f2 || (best_f2 == c.f2 && best_f1 < c.f1);
        if (!dominated) { front.push_back(c); }
        if (c.f2 < best_f2 || (c.f2 == best_f2 && c.f1 < best_f1)) {
            best_f2 = c.f2;
            best_f1 = c.f1;
        }
    }
    std::sort(front.begin(), front.end(), [](const GridCell &a, const GridCell &b) {
        if (a.beta != b.beta) { return a.beta < b.beta; }
        return a.lambda < b.lambda;
    });
    return front;
}

void write_ranked_csv(const Selection &selection, const std::string &path) {
    std::ofstream out(path);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << "rank,beta,lambda,f1,f2,f1_normalized,f2_normalized,score\n";
    long rank = 1;
    for (const RankedCell &r : selection.ranked) {
        out << rank++ << ',' << fmt(r.raw.beta) << ',' << fmt(r.raw.lambda) << ',' << fmt(r.raw.f1) << ','
            << fmt(r.raw.f2) << ',' << fmt(r.normalized.f1) << ',' << fmt(r.normalized.f2) << ',' << fmt(r.score)
            << '\n';
    }
}

std::string selection_heatmap_svg(const Selection &selection, const std::string &title) {
    std::vector<double> betas;
    std::vector<double> lambdas;
    for (const RankedCell &r : selection.ranked) {
        betas.push_back(r.raw.beta);
        lambdas.push_back(r.raw.lambda);
    }
    std::sort(betas.begin(), betas.end());
    betas.erase(std::unique(betas.begin(), betas.end()), betas.end());
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());

    svg::Heatmap map;
    map.title = title;
    for (double b : betas) { map.row_labels.push_back("beta=" + short_label(b)); }
    for (double l : lambdas) { map.col_labels.push_back("lambda=" + short_label(l)); }
    map.values.assign(betas.size(), std::vector<double>(lambdas.size(), std::numeric_limits<double>::quiet_NaN()));
    auto index_of = [](const std::vector<double> &v, double x) {
        return static_cast<int>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };
    for (const RankedCell &r : selection.ranked) {
        map.values[index_of(betas, r.raw.beta)][index_of(lambdas, r.raw.lambda)] = r.score;
    }
    if (!selection.ranked.empty()) {
        map.marked_row = index_of(betas, selection.beta);
        map.marked_col = index_of(lambdas, selection.lambda);
    }
    return svg::render(map);
}

}  // namespace lbvae
