#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lbvae/errors.hpp"
#include "lbvae/metrics.hpp"
#include "lbvae/objective.hpp"
#include "lbvae/select.hpp"
#include "lbvae/sweep.hpp"
#include "lbvae/verify.hpp"
#include "manifest.hpp"

namespace lbvae::cli {

namespace fs = std::filesystem;

namespace {

std::pair<double, double> variance_pair(const std::vector<double> &v) {
    if (v.size() != 2) { throw ConfigError("--variance-range takes two values: low high"); }
    return {v[0], v[1]};
}

void write_text(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw ConfigError("cannot write " + path); }
    out << text;
}

std::string join(const fs::path &dir, const char *name) { return (dir / name).string(); }

GenerativeConfig resolve_config(const SingleRunArgs &a) {
    if (a.config.empty()) { return sample_generative_config(a.seed, 0, 100, 10, 5, {0.1, 1.0}, 0.05); }
    const nlohmann::json j = read_config_or_manifest(a.config);
    try {
        return j.get<GenerativeConfig>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(a.config + ": " + e.what());
    }
}

ModelParams resolve_init(const SingleRunArgs &a, const GenerativeConfig &cfg, Procedure p) {
    if (a.trivial_init) { return trivial_solution(cfg); }
    return random_init(cfg, init_seed(a.seed, 0, p), a.init_scale);
}

nlohmann::json objective_json(const ObjectiveBreakdown &o) {
    return {{"recon_nll", o.recon_nll}, {"kl", o.kl}, {"l2_penalty", o.l2_penalty}, {"total", o.total}};
}

void emit(const nlohmann::json &report, const std::string &out) {
    std::cout << report.dump(2) << '\n';
    if (!out.empty()) { write_text(out, report.dump(2) + "\n"); }
}

}  // namespace

int cmd_gen_config(const GenConfigArgs &a) {
    const auto range = variance_pair(a.variance_range);
    RunManifest man{"gen-config", {}, a.seed, true, {a.out}};
    if (a.kind == "generative") {
        const GenerativeConfig cfg = sample_generative_config(a.seed, 0, a.n, a.m, a.s, range, a.sigma_sq);
        save_generative_config(cfg, a.out);
        man.config = cfg;
    } else if (a.kind == "sweep") {
        SweepConfig sc;
        sc.n = a.n;
        sc.m = a.m;
        sc.s = a.s;
        sc.sigma_sq = a.sigma_sq;
        sc.variance_low = range.first;
        sc.variance_high = range.second;
        sc.master_seed = a.seed;
        if (!a.beta_grid.empty()) { sc.beta_grid = a.beta_grid; }
        if (!a.lambda_grid.empty()) { sc.lambda_grid = a.lambda_grid; }
        if (a.trials) { sc.trials = *a.trials; }
        if (!a.procedures.empty()) {
            sc.procedures.clear();
            for (const std::string &p : a.procedures) { sc.procedures.push_back(procedure_from_string(p)); }
        }
        sc.validate();
        write_text(a.out, nlohmann::json(sc).dump(2) + "\n");
        man.config = sc;
    } else {
        throw ConfigError("--kind must be 'generative' or 'sweep'");
    }
    write_sidecars(man);
    std::cout << "wrote " << a.out << '\n';
    return kExitOk;
}

int cmd_fixed_point(const SingleRunArgs &a) {
    const GenerativeConfig cfg = resolve_config(a);
    const ModelParams init = resolve_init(a, cfg, Procedure::fixed_point);
    FixedPointOptions opts;
    opts.tol = a.tol;
    opts.max_iter = a.max_iter;
    opts.keep_history = !a.trace.empty();

    FixedPointResult res;
    try {
        res = run_fixed_point(init, cfg, a.beta, a.lambda, opts);
    } catch (const FixedPointError &e) {
        if (!a.trace.empty() && e.partial().state.history) { write_trajectory_csv(*e.partial().state.history, a.trace); }
        throw;
    }
    const ModelParams &p = res.state.params;
    const auto &d = res.diagnostics;
    nlohmann::json report{
        {"converged", res.converged},
        {"iterations", res.state.iteration},
        {"residual", res.state.residual},
        {"collapsed", d.collapsed},
        {"trivial_distance", d.trivial_distance},
        {"objective", objective_json(objective_value(cfg, p, a.beta, a.lambda))},
        {"metrics", to_json(evaluate_all(cfg, p))},
    };
    if (!d.sigma_w_max_eigenvalues.empty()) {
        report["max_sigma_w_eigenvalue"] =
            *std::max_element(d.sigma_w_max_eigenvalues.begin(), d.sigma_w_max_eigenvalues.end());
    }
    if (!d.gain_recursion_residuals.empty()) {
        report["max_gain_recursion_residual"] =
            *std::max_element(d.gain_recursion_residuals.begin(), d.gain_recursion_residuals.end());
    }
    emit(report, a.out);

    RunManifest man{"fixed-point",
                    {{"config", cfg},
                     {"beta", a.beta},
                     {"lambda", a.lambda},
                     {"tol", a.tol},
                     {"max_iter", a.max_iter},
                     {"trivial_init", a.trivial_init},
                     {"init_scale", a.init_scale}},
                    a.seed,
                    true,
                    {}};
    if (!a.trace.empty()) {
        write_trajectory_csv(*res.state.history, a.trace);
        man.outputs.push_back(a.trace);
    }
    if (!a.out.empty()) { man.outputs.push_back(a.out); }
    write_sidecars(man);
    return kExitOk;
}

int cmd_optimize(const SingleRunArgs &a) {
    const GenerativeConfig cfg = resolve_config(a);
    const ModelParams init = resolve_init(a, cfg, Procedure::optimize);
    OptimizerConfig oc;
    oc.learning_rate = a.lr;
    oc.weight_decay = a.weight_decay;
    oc.steps = a.steps;
    oc.grad_tol = a.grad_tol;
    oc.record_every = a.record_every;
    oc.seed = init_seed(a.seed, 0, Procedure::optimize);
    const OptimizeResult res = optimize(cfg, a.beta, a.lambda, oc, init);

    const CollapseCheck cc = detect_collapse(res.params, cfg);
    nlohmann::json report{
        {"converged", res.converged},
        {"steps", res.steps},
        {"final_grad_norm", res.final_grad_norm},
        {"collapsed", cc.collapsed},
        {"trivial_distance", cc.trivial_distance},
        {"objective", objective_json(res.final_objective)},
        {"metrics", to_json(evaluate_all(cfg, res.params))},
    };
    emit(report, a.out);

    RunManifest man{"optimize",
                    {{"config", cfg},
                     {"beta", a.beta},
                     {"lambda", a.lambda},
                     {"learning_rate", a.lr},
                     {"weight_decay", a.weight_decay},
                     {"steps", a.steps},
                     {"grad_tol", a.grad_tol},
                     {"trivial_init", a.trivial_init},
                     {"init_scale", a.init_scale}},
                    a.seed,
                    true,
                    {}};
    if (!a.trace.empty()) {
        write_objective_trace_csv(res.trace, a.trace);
        man.outputs.push_back(a.trace);
    }
    if (!a.out.empty()) { man.outputs.push_back(a.out); }
    write_sidecars(man);
    return kExitOk;
}

int cmd_sweep(const SweepArgs &a) {
    SweepConfig sc;
    nlohmann::json j = a.config.empty() ? nlohmann::json::object() : read_config_or_manifest(a.config);
    j["master_seed"] = a.seed;
    sc = j.get<SweepConfig>();
    if (a.threads) { sc.threads = *a.threads; }
    if (a.trials) { sc.trials = *a.trials; }
    if (!a.procedures.empty()) {
        sc.procedures.clear();
        for (const std::string &p : a.procedures) { sc.procedures.push_back(procedure_from_string(p)); }
    }
    sc.validate();

    fs::create_directories(a.out_dir);
    const std::vector<SweepRecord> records = run_sweep(sc);
    const std::string records_path = join(a.out_dir, "records.csv");
    const std::string agg_path = join(a.out_dir, "aggregates.json");
    export_records(records, records_path);
    write_text(agg_path, aggregates_to_json(aggregate(records)).dump(2) + "\n");

    // Thread count does not affect results, so it is left out of the manifest.
    nlohmann::json resolved = sc;
    resolved.erase("threads");
    write_sidecars(RunManifest{"sweep", resolved, sc.master_seed, true, {records_path, agg_path}});

    long converged = 0;
    long flagged = 0;
    for (const SweepRecord &r : records) {
        converged += r.converged ? 1 : 0;
        flagged += r.flags.empty() ? 0 : 1;
    }
    std::cout << records.size() << " records, " << converged << " converged, " << flagged << " flagged\n"
              << "wrote " << records_path << "\nwrote " << agg_path << '\n';
    return kExitOk;
}

int cmd_select(const SelectArgs &a) {
    if (!(a.w1 >= 0.0 && a.w1 <= 1.0)) { throw ConfigError("--w1 must lie in [0, 1]"); }
    std::vector<AggregateCell> cells;
    if (fs::path(a.input).extension() == ".csv") {
        cells = aggregate(import_records(a.input));
    } else {
        cells = aggregates_from_json(read_config_or_manifest(a.input));
    }
    EntanglementMetric metric;
    if (a.metric == "im") {
        metric = EntanglementMetric::im;
    } else if (a.metric == "mig") {
        metric = EntanglementMetric::mig;
    } else {
        throw ConfigError("--metric must be 'im' or 'mig'");
    }
    const ObjectiveGrid grid = grid_from_aggregates(cells, procedure_from_string(a.procedure), metric);
    if (grid.cells.empty()) { throw ConfigError("no aggregate cells carry both recon_nll and " + a.metric); }
    const std::pair<double, double> w{a.w1, 1.0 - a.w1};
    const Selection sel = select_config(grid, w, a.rho);
    const std::vector<GridCell> front = pareto_front(grid);
    const bool on_front = std::any_of(front.begin(), front.end(), [&](const GridCell &c) {
        return c.beta == sel.beta && c.lambda == sel.lambda;
    });

    fs::create_directories(a.out_dir);
    const std::string ranked_path = join(a.out_dir, "ranked.csv");
    const std::string svg_path = join(a.out_dir, "heatmap.svg");
    const std::string json_path = join(a.out_dir, "selection.json");
    write_ranked_csv(sel, ranked_path);
    char title[96];
    std::snprintf(title, sizeof title, "score, w1=%g, rho=%g, f2=1-%s", a.w1, a.rho, a.metric.c_str());
    write_text(svg_path, selection_heatmap_svg(sel, title));

    nlohmann::json front_json = nlohmann::json::array();
    for (const GridCell &c : front) { front_json.push_back({{"beta", c.beta}, {"lambda", c.lambda}}); }
    const nlohmann::json flags = normalize_objectives(grid).flags;
    nlohmann::json report{{"beta", sel.beta},
                          {"lambda", sel.lambda},
                          {"score", sel.ranked.front().score},
                          {"on_pareto_front", on_front},
                          {"pareto_front", front_json},
                          {"flags", flags}};
    emit(report, json_path);
    write_sidecars(RunManifest{"select",
                               {{"input", a.input},
                                {"w1", a.w1},
                                {"rho", a.rho},
                                {"metric", a.metric},
                                {"procedure", a.procedure}},
                               0,
                               false,
                               {ranked_path, svg_path, json_path}});
    return kExitOk;
}

int cmd_verify(const VerifyArgs &a) {
    VerifyOptions o;
    o.seed = a.seed;
    o.n = a.n;
    o.m = a.m;
    o.s = a.s;
    o.trials = a.trials;
    o.mc_samples = a.mc_samples;
    if (o.trials < 1 || o.mc_samples < 1000) { throw ConfigError("--trials >= 1 and --mc-samples >= 1000 required"); }
    const std::vector<CheckResult> checks = run_invariant_suite(o);
    bool ok = true;
    nlohmann::json report = nlohmann::json::array();
    for (const CheckResult &c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
        ok = ok && c.passed;
        report.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    if (!a.out.empty()) {
        write_text(a.out, report.dump(2) + "\n");
        write_sidecars(RunManifest{"verify",
                                   {{"n", a.n}, {"m", a.m}, {"s", a.s}, {"trials", a.trials}, {"mc_samples", a.mc_samples}},
                                   a.seed,
                                   true,
                                   {a.out}});
    }
    return ok ? kExitOk : kExitVerification;
}

}  // namespace lbvae::cli
