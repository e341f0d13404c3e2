// Copyright Contributors to the splatview project
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths: per-view rasterization, the depth test, full and fast
// renders, and one optimizer iteration.

#include "splatview/depth_test.hpp"
#include "splatview/optimizer.hpp"
#include "splatview/parallel.hpp"
#include "splatview/renderer.hpp"
#include "splatview/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace splatview;

namespace {

Scene scene_at(int resolution, GeometryPreset preset = GeometryPreset::TwoWalls) {
    SyntheticSpec spec;
    spec.preset = preset;
    spec.resolution = resolution;
    spec.seed = 7;
    return gen_synthetic(spec).scene;
}

void BM_RasterizeView(benchmark::State &state) {
    const Scene scene = scene_at(static_cast<int>(state.range(0)));
    const CameraModel novel = scene.views[1].camera;
    for (auto _ : state) {
        ViewRaster r = rasterize_view(scene.views[0], novel);
        benchmark::DoNotOptimize(r.payload.data());
    }
    state.SetItemsProcessed(state.iterations() * scene.views[0].camera.width * scene.views[0].camera.height);
}
BENCHMARK(BM_RasterizeView)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ProbFront(benchmark::State &state) {
    const int samples = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DepthMixture> mixtures;
    for (int v = 0; v < 9; ++v) {
        std::vector<Fragment> frags(8);
        double d = 1.0;
        for (Fragment &f : frags) {
            f.alpha = 0.05 + 0.9 * u(rng);
            f.depth = d;
            d += 0.02 * u(rng);
        }
        mixtures.push_back(build_mixture(frags));
    }
    for (auto _ : state) {
        auto p = prob_front(mixtures, 0.02, samples);
        benchmark::DoNotOptimize(p.data());
    }
}
BENCHMARK(BM_ProbFront)->Arg(1)->Arg(8)->Arg(32);

void BM_RenderNovel(benchmark::State &state) {
    const Scene scene = scene_at(static_cast<int>(state.range(0)));
    const CameraModel novel = scene.views[1].camera;
    RenderOptions options;
    options.fast = state.range(1) != 0;
    const LinearHead head = LinearHead::identity();
    for (auto _ : state) {
        NovelRender r = render_novel(scene, novel, options, head);
        benchmark::DoNotOptimize(r.color.data());
    }
    state.SetLabel(options.fast ? "fast" : "full");
}
BENCHMARK(BM_RenderNovel)->Args({128, 0})->Args({128, 1})->Args({256, 0})->Args({256, 1})->Unit(benchmark::kMillisecond);

void BM_OptimizerStep(benchmark::State &state) {
    Scene scene = scene_at(128, GeometryPreset::TexturedPlane);
    LinearHead head = LinearHead::identity();
    OptimConfig config;
    config.patchSize = static_cast<int>(state.range(0));
    Trainer trainer(scene, head, config);
    std::mt19937_64 rng(3);
    for (auto _ : state) {
        auto terms = trainer.loo_step(rng);
        benchmark::DoNotOptimize(terms);
    }
}
BENCHMARK(BM_OptimizerStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace

int main(int argc, char **argv) {
    configure_threads();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) {
        return 1;
    }
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
