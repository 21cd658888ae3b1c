#include "lbvae/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "lbvae/errors.hpp"
#include "lbvae/metrics.hpp"
#include "lbvae/objective.hpp"
#include "lbvae/random.hpp"

namespace lbvae {

namespace {

constexpr std::uint64_t kConfigStream = 0xC0F1'6000ULL;
constexpr std::uint64_t kInitStream = 0x1A17'0000ULL;

void require(bool ok, const std::string &what) {
    if (!ok) { throw ConfigError("sweep config: " + what); }
}

bool strictly_increasing(const std::vector<double> &v) {
    return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(a < b); }) == v.end();
}

void append_flag(std::string &flags, const std::string &flag) {
    if (!flags.empty()) { flags += ';'; }
    flags += flag;
}

void fill_from_params(SweepRecord &rec, const GenerativeConfig &cfg, const ModelParams &params) {
    try {
        const ObjectiveBreakdown obj = objective_value(cfg, params, rec.beta, rec.lambda);
        rec.recon_nll = obj.recon_nll;
        rec.kl = obj.kl;
        rec.l2_penalty = obj.l2_penalty;
        rec.total = obj.total;
    } catch (const std::exception &) {
        append_flag(rec.flags, "objective_failed");
    }
    try {
        const MetricReport report = evaluate_all(cfg, params);
        rec.sap = report.sap;
        rec.mig = report.mig;
        rec.im = report.im;
        rec.joint_mi = report.joint_mi;
        rec.spec_norm_b = report.spec_norm_b;
        for (const std::string &f : report.flags) { append_flag(rec.flags, f); }
    } catch (const std::exception &) {
        append_flag(rec.flags, "metrics_failed");
    }
    try {
        rec.trivial_distance = detect_collapse(params, cfg, 1.0).trivial_distance;
    } catch (const std::exception &) {
        append_flag(rec.flags, "trivial_distance_failed");
    }
}

}  // namespace

std::string to_string(Procedure p) { return p == Procedure::fixed_point ? "fixed_point" : "optimize"; }

Procedure procedure_from_string(const std::string &name) {
    if (name == "fixed_point") { return Procedure::fixed_point; }
    if (name == "optimize") { return Procedure::optimize; }
    throw ConfigError("unknown procedure '" + name + "'");
}

void SweepConfig::validate() const {
    require(n >= 1 && m >= 1 && s >= 1, "n, m, s must be >= 1");
    require(variance_low > 0.0 && variance_high >= variance_low, "variance_range must satisfy 0 < low <= high");
    require(sigma_sq > 0.0, "sigma_sq must be > 0");
    require(!beta_grid.empty() && strictly_increasing(beta_grid), "beta_grid must be non-empty and strictly increasing");
    require(beta_grid.front() > 0.0, "beta values must be > 0");
    require(!lambda_grid.empty() && strictly_increasing(lambda_grid),
            "lambda_grid must be non-empty and strictly increasing");
    require(lambda_grid.front() >= 0.0, "lambda values must be >= 0");
    require(trials >= 1, "trials must be >= 1");
    require(!procedures.empty(), "at least one procedure is required");
    require(init_scale > 0.0, "init_scale must be > 0");
    require(fixed_point.tol > 0.0 && fixed_point.max_iter >= 1, "fixed_point tol > 0 and max_iter >= 1 required");
    optimizer.validate();
}

void to_json(nlohmann::json &j, const SweepConfig &c) {
    nlohmann::json procs = nlohmann::json::array();
    for (Procedure p : c.procedures) { procs.push_back(to_string(p)); }
    j = nlohmann::json{
        {"n", c.n},
        {"m", c.m},
        {"s", c.s},
        {"variance_range", {c.variance_low, c.variance_high}},
        {"sigma_sq", c.sigma_sq},
        {"beta_grid", c.beta_grid},
        {"lambda_grid", c.lambda_grid},
        {"trials", c.trials},
        {"procedures", procs},
        {"master_seed", c.master_seed},
        {"init_scale", c.init_scale},
        {"fixed_point",
         {{"tol", c.fixed_point.tol},
          {"max_iter", c.fixed_point.max_iter},
          {"collapse_threshold", c.fixed_point.collapse_threshold}}},
        {"optimizer",
         {{"learning_rate", c.optimizer.learning_rate},
          {"weight_decay", c.optimizer.weight_decay},
          {"betas", {c.optimizer.beta1, c.optimizer.beta2}},
          {"epsilon", c.optimizer.epsilon},
          {"steps", c.optimizer.steps},
          {"grad_tol", c.optimizer.grad_tol}}},
        {"threads", c.threads},
    };
}

void from_json(const nlohmann::json &j, SweepConfig &c) {
    try {
        const SweepConfig d;
        c.n = j.value("n", d.n);
        c.m = j.value("m", d.m);
        c.s = j.value("s", d.s);
        if (j.contains("variance_range")) {
            const auto r = j.at("variance_range").get<std::vector<double>>();
            require(r.size() == 2, "variance_range must be [low, high]");
            c.variance_low = r[0];
            c.variance_high = r[1];
        }
        c.sigma_sq = j.value("sigma_sq", d.sigma_sq);
        c.beta_grid = j.value("beta_grid", d.beta_grid);
        c.lambda_grid = j.value("lambda_grid", d.lambda_grid);
        c.trials = j.value("trials", d.trials);
        if (j.contains("procedures")) {
            c.procedures.clear();
            for (const auto &p : j.at("procedures")) { c.procedures.push_back(procedure_from_string(p.get<std::string>())); }
        }
        require(j.contains("master_seed"), "master_seed is required");
        c.master_seed = j.at("master_seed").get<std::uint64_t>();
        c.init_scale = j.value("init_scale", d.init_scale);
        if (j.contains("fixed_point")) {
            const auto &f = j.at("fixed_point");
            c.fixed_point.tol = f.value("tol", d.fixed_point.tol);
            c.fixed_point.max_iter = f.value("max_iter", d.fixed_point.max_iter);
            c.fixed_point.collapse_threshold = f.value("collapse_threshold", d.fixed_point.collapse_threshold);
        }
        if (j.contains("optimizer")) {
            const auto &o = j.at("optimizer");
            c.optimizer.learning_rate = o.value("learning_rate", d.optimizer.learning_rate);
            c.optimizer.weight_decay = o.value("weight_decay", d.optimizer.weight_decay);
            if (o.contains("betas")) {
                const auto b = o.at("betas").get<std::vector<double>>();
                require(b.size() == 2, "optimizer.betas must have two entries");
                c.optimizer.beta1 = b[0];
                c.optimizer.beta2 = b[1];
            }
            c.optimizer.epsilon = o.value("epsilon", d.optimizer.epsilon);
            c.optimizer.steps = o.value("steps", d.optimizer.steps);
            c.optimizer.grad_tol = o.value("grad_tol", d.optimizer.grad_tol);
        }
        c.threads = j.value("threads", d.threads);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("sweep config: ") + e.what());
    }
    c.validate();
}

GenerativeConfig sample_generative_config(std::uint64_t master_seed, int trial, int n, int m, int s,
                                          std::pair<double, double> variance_range, double sigma_sq) {
    const auto [low, high] = variance_range;
    if (!(low > 0.0) || !(high >= low)) { throw ConfigError("variance_range must satisfy 0 < low <= high"); }
    Rng rng(derive_seed({master_seed, kConfigStream, static_cast<std::uint64_t>(trial)}));
    GenerativeConfig cfg;
    cfg.n = n;
    cfg.m = m;
    cfg.s = s;
    cfg.sigma_sq = sigma_sq;
    cfg.sigma_v_diag.resize(s);
    for (int j = 0; j < s; ++j) { cfg.sigma_v_diag(j) = low == high ? low : rng.uniform(low, high); }
    cfg.gamma = rng.gaussian_matrix(n, s, 1.0 / std::sqrt(static_cast<double>(s)));
    cfg.validate();
    return cfg;
}

std::uint64_t init_seed(std::uint64_t master_seed, int trial, Procedure procedure) {
    return derive_seed({master_seed, kInitStream, static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(procedure)});
}

SweepRecord run_trial(const SweepConfig &sweep, double beta, double lambda, int trial, Procedure procedure) {
    SweepRecord rec;
    rec.beta = beta;
    rec.lambda = lambda;
    rec.trial = trial;
    rec.procedure = procedure;
    try {
        const GenerativeConfig cfg = sample_generative_config(sweep.master_seed, trial, sweep.n, sweep.m, sweep.s,
                                                              {sweep.variance_low, sweep.variance_high}, sweep.sigma_sq);
        const std::uint64_t seed = init_seed(sweep.master_seed, trial, procedure);
        const ModelParams init = random_init(cfg, seed, sweep.init_scale);
        if (procedure == Procedure::fixed_point) {
            try {
                const FixedPointResult res = run_fixed_point(init, cfg, beta, lambda, sweep.fixed_point);
                rec.converged = res.converged;
                rec.iterations = res.state.iteration;
                fill_from_params(rec, cfg, res.state.params);
            } catch (const FixedPointError &e) {
                append_flag(rec.flags, "numerical_error");
                rec.iterations = e.iteration().value_or(e.partial().state.iteration);
                fill_from_params(rec, cfg, e.partial().state.params);
            }
        } else {
            OptimizerConfig opt = sweep.optimizer;
            opt.seed = seed;
            try {
                const OptimizeResult res = optimize(cfg, beta, lambda, opt, init);
                rec.converged = res.converged;
                rec.iterations = res.steps;
                fill_from_params(rec, cfg, res.params);
            } catch (const NumericalError &e) {
                append_flag(rec.flags, "numerical_error");
                rec.iterations = e.iteration().value_or(0);
            }
        }
    } catch (const std::exception &) {
        append_flag(rec.flags, "trial_failed");
    }
    return rec;
}

std::vector<SweepRecord> run_sweep(const SweepConfig &sweep) {
    sweep.validate();
    std::vector<Procedure> procs = sweep.procedures;
    std::sort(procs.begin(), procs.end());
    procs.erase(std::unique(procs.begin(), procs.end()), procs.end());

    struct Cell {
        double beta;
        double lambda;
        int trial;
        Procedure procedure;
    };
    std::vector<Cell> cells;
    cells.reserve(sweep.beta_grid.size() * sweep.lambda_grid.size() * static_cast<std::size_t>(sweep.trials) *
                  procs.size());
    for (double beta : sweep.beta_grid) {
        for (double lambda : sweep.lambda_grid) {
            for (int t = 0; t < sweep.trials; ++t) {
                for (Procedure p : procs) { cells.push_back({beta, lambda, t, p}); }
            }
        }
    }

    std::vector<SweepRecord> records(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell &c = cells[i];
            records[i] = run_trial(sweep, c.beta, c.lambda, c.trial, c.procedure);
        }
    };
    unsigned threads = sweep.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : sweep.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(cells.size(), 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) { pool.emplace_back(worker); }
    }
    return records;
}

const std::vector<std::string> &record_metric_names() {
    static const std::vector<std::string> names{"recon_nll", "kl",       "l2_penalty",  "total",
                                                "sap",       "mig",      "im",          "joint_mi",
                                                "spec_norm_b", "trivial_distance"};
    return names;
}

std::optional<double> record_metric(const SweepRecord &r, const std::string &name) {
    if (name == "recon_nll") { return r.recon_nll; }
    if (name == "kl") { return r.kl; }
    if (name == "l2_penalty") { return r.l2_penalty; }
    if (name == "total") { return r.total; }
    if (name == "sap") { return r.sap; }
    if (name == "mig") { return r.mig; }
    if (name == "im") { return r.im; }
    if (name == "joint_mi") { return r.joint_mi; }
    if (name == "spec_norm_b") { return r.spec_norm_b; }
    if (name == "trivial_distance") { return r.trivial_distance; }
    throw ConfigError("unknown record metric '" + name + "'");
}

namespace {

double quantile(const std::vector<double> &sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricStats summarize(std::vector<double> values, long excluded) {
    MetricStats st;
    st.count = static_cast<long>(values.size());
    st.excluded = excluded;
    if (values.empty()) { return st; }
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) { sum += v; }
    st.mean = sum / static_cast<double>(values.size());
    st.median = quantile(values, 0.5);
    st.q25 = quantile(values, 0.25);
    st.q75 = quantile(values, 0.75);
    return st;
}

}  // namespace

std::vector<AggregateCell> aggregate(const std::vector<SweepRecord> &records) {
    std::map<std::tuple<double, double, Procedure>, std::vector<const SweepRecord *>> groups;
    for (const SweepRecord &r : records) { groups[{r.beta, r.lambda, r.procedure}].push_back(&r); }
    std::vector<AggregateCell> cells;
    for (const auto &[key, members] : groups) {
        AggregateCell cell;
        std::tie(cell.beta, cell.lambda, cell.procedure) = key;
        cell.records = static_cast<long>(members.size());
        for (const SweepRecord *r : members) { cell.converged += r->converged ? 1 : 0; }
        for (const std::string &name : record_metric_names()) {
            std::vector<double> values;
            long excluded = 0;
            for (const SweepRecord *r : members) {
                if (const auto v = record_metric(*r, name)) {
                    values.push_back(*v);
                } else {
                    ++excluded;
                }
            }
            cell.metrics[name] = summarize(std::move(values), excluded);
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

nlohmann::json aggregates_to_json(const std::vector<AggregateCell> &cells) {
    nlohmann::json out = nlohmann::json::array();
    for (const AggregateCell &c : cells) {
        nlohmann::json metrics = nlohmann::json::object();
        for (const auto &[name, st] : c.metrics) {
            auto val = [&](double v) { return st.count > 0 ? nlohmann::json(v) : nlohmann::json(nullptr); };
            metrics[name] = {{"count", st.count},      {"excluded", st.excluded}, {"mean", val(st.mean)},
                             {"median", val(st.median)}, {"q25", val(st.q25)},       {"q75", val(st.q75)}};
        }
        out.push_back({{"beta", c.beta},
                       {"lambda", c.lambda},
                       {"procedure", to_string(c.procedure)},
                       {"records", c.records},
                       {"converged", c.converged},
                       {"metrics", metrics}});
    }
    return out;
}

std::vector<AggregateCell> aggregates_from_json(const nlohmann::json &j) {
    std::vector<AggregateCell> cells;
    try {
        for (const auto &item : j) {
            AggregateCell c;
            c.beta = item.at("beta").get<double>();
            c.lambda = item.at("lambda").get<double>();
            c.procedure = procedure_from_string(item.at("procedure").get<std::string>());
            c.records = item.at("records").get<long>();
            c.converged = item.at("converged").get<long>();
            for (const auto &[name, st] : item.at("metrics").items()) {
                MetricStats m;
                m.count = st.at("count").get<long>();
                m.excluded = st.at("excluded").get<long>();
                if (m.count > 0) {
                    m.mean = st.at("mean").get<double>();
                    m.median = st.at("median").get<double>();
                    m.q25 = st.at("q25").get<double>();
                    m.q75 = st.at("q75").get<double>();
                }
                c.metrics[name] = m;
            }
            cells.push_back(std::move(c));
        }
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("aggregate JSON: ") + e.what());
    }
    return cells;
}

}  // namespace lbvae
