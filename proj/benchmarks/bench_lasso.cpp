#include <benchmark/benchmark.h>

#include "lassotap/ensemble.hpp"
#include "lassotap/lasso.hpp"
#include "lassotap/model_selection.hpp"

using namespace lassotap;

namespace {

EnsembleSpec gaussian_spec() {
    EnsembleSpec spec;
    spec.kind = EnsembleKind::gaussian_iid;
    spec.gamma = 0.5;
    return spec;
}

void BM_FitLasso(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const ProblemInstance inst = make_instance(gaussian_spec(), n, 0.1, 0.02, 7);
    const double lambda = 0.15 * lambda_max(inst.A, inst.y);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_lasso(inst.A, inst.y, lambda));
    }
}
BENCHMARK(BM_FitLasso)->Arg(250)->Arg(500)->Arg(1000);

void BM_FitPath(benchmark::State& state) {
    const auto n = static_cast<Eigen::Index>(state.range(0));
    const ProblemInstance inst = make_instance(gaussian_spec(), n, 0.1, 0.02, 7);
    const auto grid = default_lambda_grid(inst.A, inst.y, 10, 0.05);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_path(inst.A, inst.y, grid));
    }
}
BENCHMARK(BM_FitPath)->Arg(250)->Arg(500);

void BM_GenerateMatrix(benchmark::State& state) {
    EnsembleSpec spec;
    spec.gamma = 0.5;
    spec.kind = static_cast<EnsembleKind>(state.range(0));
    const Eigen::Index n = 600;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_matrix(spec, 300, n, ++seed));
    }
}
BENCHMARK(BM_GenerateMatrix)
    ->Arg(static_cast<int>(EnsembleKind::gaussian_iid))
    ->Arg(static_cast<int>(EnsembleKind::row_orthogonal))
    ->Arg(static_cast<int>(EnsembleKind::random_dct));

}  // namespace

BENCHMARK_MAIN();
