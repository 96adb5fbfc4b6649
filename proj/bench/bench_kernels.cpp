// Serial reference against OpenMP kernels. Arg 0 selects the serial
// backend, 1 the parallel one.

#include "cdf/dataset.hpp"
#include "cdf/energy.hpp"
#include "cdf/quad.hpp"
#include "cdf/strokes.hpp"

#include <benchmark/benchmark.h>

using namespace cdf;

namespace {

struct Problem {
    DatasetSample sample;
    SurfaceGeometry geom;
    StrokeAssignment strokes;
    QuadMesh quads;
};

const Problem& problem() {
    static const Problem p = [] {
        Problem p;
        p.sample = make_sample(7, {});
        p.geom = SurfaceGeometry::build(p.sample.mesh);
        p.strokes = assign_segments(p.geom, polylines(p.sample.strokes));
        // 200 x 200 grid of slightly skew quads.
        const int n = 200;
        Rng rng(3);
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) p.quads.positions.emplace_back(i * 0.01, j * 0.01, rng.uniform(-1e-3, 1e-3));
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int a = j * (n + 1) + i;
                p.quads.quads.push_back({a, a + 1, a + n + 2, a + n + 1});
            }
        return p;
    }();
    return p;
}

Backend backend(const benchmark::State& state) { return state.range(0) ? Backend::Parallel : Backend::Serial; }

void BM_TotalEnergy(benchmark::State& state) {
    const Problem& p = problem();
    const EnergyInputs in{&p.geom, &p.sample.frame, &p.sample.gt_field, &p.strokes};
    const EnergyWeights w;
    for (auto _ : state) benchmark::DoNotOptimize(total_energy(p.sample.gt_field, in, w, backend(state)).total);
}

void BM_TotalGradient(benchmark::State& state) {
    const Problem& p = problem();
    const EnergyInputs in{&p.geom, &p.sample.frame, &p.sample.gt_field, &p.strokes};
    const EnergyWeights w;
    FieldGradient grad;
    for (auto _ : state) benchmark::DoNotOptimize(total_gradient(p.sample.gt_field, in, w, grad, backend(state)).total);
}

void BM_StrokeFeatures(benchmark::State& state) {
    const Problem& p = problem();
    const auto lines = polylines(p.sample.strokes);
    for (auto _ : state) benchmark::DoNotOptimize(stroke_projection_features(p.sample.mesh, lines, backend(state)));
}

void BM_Planarity(benchmark::State& state) {
    const Problem& p = problem();
    for (auto _ : state) benchmark::DoNotOptimize(planarity(p.quads, backend(state)).mean);
}

void BM_Planarize(benchmark::State& state) {
    const Problem& p = problem();
    PlanarizeConfig cfg;
    cfg.iters = 10;
    for (auto _ : state) benchmark::DoNotOptimize(planarize(p.quads, nullptr, cfg, backend(state)).after.mean);
}

}  // namespace

BENCHMARK(BM_TotalEnergy)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TotalGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StrokeFeatures)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Planarity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Planarize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
