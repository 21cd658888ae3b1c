#include <random>

#include <benchmark/benchmark.h>

#include "lbvae/matching.hpp"
#include "lbvae/metrics.hpp"
#include "lbvae/objective.hpp"
#include "lbvae/stationarity.hpp"
#include "lbvae/sweep.hpp"

using namespace lbvae;

namespace {

GenerativeConfig config_of(const benchmark::State &state) {
    const int n = static_cast<int>(state.range(0));
    const int m = static_cast<int>(state.range(1));
    return sample_generative_config(7, 0, n, m, m / 2 > 0 ? m / 2 : 1, {0.1, 1.0}, 0.05);
}

void BM_BetaStep(benchmark::State &state) {
    const GenerativeConfig cfg = config_of(state);
    const StationarityContext ctx(cfg);
    FixedPointState s{random_init(cfg, 11), 0, 0.0, std::nullopt};
    for (auto _ : state) {
        FixedPointState next = beta_step(s, ctx, 1.0);
        benchmark::DoNotOptimize(next.params.b.data());
    }
}
BENCHMARK(BM_BetaStep)->Args({20, 5})->Args({100, 10})->Args({400, 40});

void BM_LambdaBetaStep(benchmark::State &state) {
    const GenerativeConfig cfg = config_of(state);
    const StationarityContext ctx(cfg);
    FixedPointState s{random_init(cfg, 11), 0, 0.0, std::nullopt};
    for (auto _ : state) {
        FixedPointState next = lambda_beta_step(s, ctx, 4.0, 8.0);
        benchmark::DoNotOptimize(next.params.b.data());
    }
}
BENCHMARK(BM_LambdaBetaStep)->Args({100, 10});

void BM_ObjectiveGradient(benchmark::State &state) {
    const GenerativeConfig cfg = config_of(state);
    const SpdMatrix sigma_y = observation_covariance(cfg);
    const ModelParams p = random_init(cfg, 13);
    for (auto _ : state) {
        ObjectiveGradient g = objective_gradient(sigma_y, p, 1.0, 8.0);
        benchmark::DoNotOptimize(g.a.data());
    }
}
BENCHMARK(BM_ObjectiveGradient)->Args({20, 5})->Args({100, 10})->Args({400, 40});

void BM_Hungarian(benchmark::State &state) {
    const auto k = static_cast<Eigen::Index>(state.range(0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix w(k, k);
    for (Eigen::Index i = 0; i < w.size(); ++i) { w.data()[i] = u(rng); }
    for (auto _ : state) {
        Matching mt = max_weight_matching(w);
        benchmark::DoNotOptimize(mt.weight);
    }
}
BENCHMARK(BM_Hungarian)->RangeMultiplier(4)->Range(4, 256);

void BM_EvaluateAll(benchmark::State &state) {
    const GenerativeConfig cfg = config_of(state);
    const ModelParams p = random_init(cfg, 17, 0.5);
    for (auto _ : state) {
        MetricReport r = evaluate_all(cfg, p);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_EvaluateAll)->Args({100, 10});

}  // namespace
BENCHMARK_MAIN();
