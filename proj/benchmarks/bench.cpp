// Microbenchmarks for the hot paths: the inner dual solve, the reduced
// restricted fit used by the composite statistics, confidence-interval
// inversion, and the chi-square quantile.
#include <benchmark/benchmark.h>

#include <vector>

#include "eldiv/datasets.hpp"
#include "eldiv/el_core.hpp"
#include "eldiv/inference.hpp"
#include "eldiv/model.hpp"
#include "eldiv/rng.hpp"
#include "eldiv/special.hpp"

namespace {

eldiv::Sample normal_sample(int n, unsigned rep) {
    eldiv::RepRng rng(424242u, rep);
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (auto& v : vals) v = 1.0 + rng.normal(0.0, 1.0);
    return eldiv::Sample::from_values(vals);
}

void bm_solve_t_mean(benchmark::State& state) {
    auto model = eldiv::make_mean_model();
    auto sample = normal_sample(static_cast<int>(state.range(0)), 1);
    eldiv::Vector theta(1);
    theta(0) = 0.8;
    for (auto _ : state) {
        benchmark::DoNotOptimize(eldiv::solve_t(model, sample, theta));
    }
}
BENCHMARK(bm_solve_t_mean)->Arg(30)->Arg(200)->Arg(2000);

void bm_fit_over_identified(benchmark::State& state) {
    auto model = eldiv::make_mean_variance_model();
    auto sample = normal_sample(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eldiv::fit_unrestricted(model, sample));
    }
}
BENCHMARK(bm_fit_over_identified)->Arg(30)->Arg(200);

void bm_cov_restricted_reduced(benchmark::State& state) {
    auto sample = normal_sample(static_cast<int>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(eldiv::cov_restricted_reduced(sample));
    }
}
BENCHMARK(bm_cov_restricted_reduced)->Arg(30)->Arg(200);

void bm_confidence_interval(benchmark::State& state) {
    auto model = eldiv::make_mean_model();
    eldiv::Sample sample = eldiv::Sample::from_values(eldiv::newcomb_day(2));
    auto family = eldiv::StatFamily::t_power(0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            eldiv::confidence_interval(model, sample, family, 0.95));
    }
}
BENCHMARK(bm_confidence_interval);

void bm_chi2_quantile(benchmark::State& state) {
    double alpha = 0.05;
    for (auto _ : state) {
        benchmark::DoNotOptimize(eldiv::chi2_quantile(1, alpha));
    }
}
BENCHMARK(bm_chi2_quantile);

}  // namespace

BENCHMARK_MAIN();
