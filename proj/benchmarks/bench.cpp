#include <benchmark/benchmark.h>

#include "epspline/field.hpp"
#include "epspline/regression.hpp"
#include "epspline/rng.hpp"
#include "epspline/sim.hpp"
#include "epspline/tprs.hpp"

namespace {

epspline::LocationSet make_locations(int n) {
    epspline::RngStream rng(1, "bench", 0, 0);
    return epspline::uniform_locations(n, rng);
}

void bm_matern_covariance(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto locs = make_locations(n);
    epspline::MaternSpec spec{1.5, 0.15};
    for (auto _ : state) {
        auto cov = epspline::build_covariance(locs, spec);
        benchmark::DoNotOptimize(cov.data());
    }
}
BENCHMARK(bm_matern_covariance)->Arg(250)->Arg(1000);

void bm_gp_sample(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto locs = make_locations(n);
    epspline::MaternSpec spec{1.5, 0.15};
    epspline::RngStream rng(1, "bench", 0, 1);
    for (auto _ : state) {
        auto z = epspline::sample_gp(locs, spec, rng);
        benchmark::DoNotOptimize(z.values.data());
    }
}
BENCHMARK(bm_gp_sample)->Arg(250)->Arg(1000);

void bm_tprs_basis(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    auto locs = make_locations(n);
    for (auto _ : state) {
        auto basis = epspline::build_tprs(locs, k);
        benchmark::DoNotOptimize(basis.design.data());
    }
}
BENCHMARK(bm_tprs_basis)->Args({500, 26})->Args({1000, 51})->Args({2500, 101});

void bm_select_lambda_gaussian(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int k = static_cast<int>(state.range(1));
    epspline::Scenario sc = epspline::Scenario::make(
        "bench", 0.5, 0.04, 0.6, std::nullopt,
        epspline::ExposureKind::continuous, n);
    auto data = epspline::generate_dataset(sc, 1, 0);
    auto basis = epspline::build_tprs(data.locations, k);
    Eigen::MatrixXd design(n, 2);
    design.col(0).setOnes();
    design.col(1) = data.exposure;
    for (auto _ : state) {
        epspline::ModelSpec spec;
        spec.response = data.outcome;
        spec.parametric_design = design;
        spec.basis = &basis;
        spec.family = epspline::Family::gaussian();
        auto fit = epspline::select_lambda(spec);
        benchmark::DoNotOptimize(fit.lambda);
    }
}
BENCHMARK(bm_select_lambda_gaussian)->Args({500, 26})->Args({1000, 51});

}  // namespace

BENCHMARK_MAIN();
