#include "varmarank/assignment.hpp"
#include "varmarank/center_outward.hpp"
#include "varmarank/estimation.hpp"
#include "varmarank/innovations.hpp"
#include "varmarank/montecarlo.hpp"
#include "varmarank/portmanteau.hpp"

#include <benchmark/benchmark.h>

using namespace varmarank;

namespace {

Matrix residual_sample(int n) { return InnovationSampler::default_skew_t3().sample(n, 3); }

SeriesData null_series(int n) {
    return simulate(reference_null_spec(), n, make_named_sampler("normal"), 11).series;
}

void BM_Assignment(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Matrix z = residual_sample(n);
    const Grid g = make_grid(n, 2, std::nullopt, 7);
    Matrix cost(n, n);
    for (int t = 0; t < n; ++t)
        for (int k = 0; k < n; ++k) cost(t, k) = (z.row(t) - g.points.row(k)).squaredNorm();
    for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(cost).cost);
}
BENCHMARK(BM_Assignment)->Arg(100)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_AssignmentWarmStart(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Matrix z = residual_sample(n);
    const Grid g = make_grid(n, 2, std::nullopt, 7);
    const CenterOutwardMap base = compute_map(z, g);
    const Matrix moved = z * 1.01;
    for (auto _ : state) benchmark::DoNotOptimize(compute_map(moved, g, &base).total_cost);
}
BENCHMARK(BM_AssignmentWarmStart)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_ComputeMap(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Matrix z = residual_sample(n);
    const Grid g = make_grid(n, 2, std::nullopt, 7);
    for (auto _ : state) benchmark::DoNotOptimize(compute_map(z, g).total_cost);
}
BENCHMARK(BM_ComputeMap)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Qmle(benchmark::State& state) {
    const SeriesData x = null_series(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(qmle(x, 1, 1).log_det_sigma);
}
BENCHMARK(BM_Qmle)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_RankPipeline(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const SeriesData x = null_series(n);
    const QmleFit fit = qmle(x, 1, 1);
    const Grid g = make_grid(n, 2, std::nullopt, 7);
    const ScoreSpec s = with_grid_moments(ScoreSpec::named(ScoreKind::vdw, 2), g);
    for (auto _ : state) {
        const RankResiduals base = rank_residuals(x, fit.theta_hat, s, g);
        const KMatrix K = estimate_K(x, fit.theta_hat, s, g, &base);
        const REstimate est = r_estimate_one_step(x, fit.theta_hat, s, g, K, {}, &base);
        const KMatrix K_test = estimate_K(x, est.theta_tilde, s, g, &est.at_estimate);
        benchmark::DoNotOptimize(rank_stat(est, s, 8, K_test).statistic);
    }
}
BENCHMARK(BM_RankPipeline)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
