#include <benchmark/benchmark.h>

#include "lassotap/spectral.hpp"

using namespace lassotap;

namespace {

EnsembleSpec make_spec(EnsembleKind kind, double gamma, double kappa = 0.0) {
    EnsembleSpec spec;
    spec.kind = kind;
    spec.gamma = gamma;
    if (kind == EnsembleKind::geometric) spec.kappa = kappa;
    return spec;
}

void BM_StieltjesMP(benchmark::State& state) {
    const SpectralDensity d =
        spectral_density(make_spec(EnsembleKind::gaussian_iid, 0.5));
    double z = -0.4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(stieltjes(d, z));
        z = z < -2.0 ? -0.4 : z - 0.01;  // sweep inside the quadrature regime
    }
}
BENCHMARK(BM_StieltjesMP);

void BM_SolveZ(benchmark::State& state) {
    const SpectralDensity mp =
        spectral_density(make_spec(EnsembleKind::gaussian_iid, 0.5));
    const SpectralDensity geo =
        spectral_density(make_spec(EnsembleKind::geometric, 0.8, 8.0));
    const SpectralDensity& d = state.range(0) == 0 ? mp : geo;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_z(d, 0.25));
    }
}
BENCHMARK(BM_SolveZ)->Arg(0)->Arg(1);

void BM_SpectralState(benchmark::State& state) {
    const EnsembleSpec spec = make_spec(EnsembleKind::gaussian_iid, 0.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(spectral_state(spec, 0.25));
    }
}
BENCHMARK(BM_SpectralState);

}  // namespace

BENCHMARK_MAIN();
