#include <benchmark/benchmark.h>

#include <random>

#include "cgrp/geometry.hpp"
#include "cgrp/image.hpp"
#include "cgrp/metrics.hpp"
#include "cgrp/ops.hpp"
#include "cgrp/tensor.hpp"
#include "cgrp/trainer.hpp"

namespace {

cgrp::Tensor rand_img(int64_t h, int64_t w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    return cgrp::Tensor::uniform({h, w}, rng);
}

void BM_Warp(benchmark::State& state) {
    const int64_t n = state.range(0);
    cgrp::Tensor img = rand_img(n, n, 1);
    std::mt19937_64 rng(2);
    cgrp::DeformationField field = cgrp::DeformationField::zero(n, n);
    cgrp::Tensor dx = cgrp::Tensor::uniform({n, n}, rng, -3.0, 3.0);
    cgrp::Tensor dy = cgrp::Tensor::uniform({n, n}, rng, -3.0, 3.0);
    field.dx = dx;
    field.dy = dy;
    for (auto _ : state) {
        benchmark::DoNotOptimize(cgrp::warp(img, field));
    }
    state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Warp)->Arg(64)->Arg(256);

void BM_Conv2dForward(benchmark::State& state) {
    const int64_t n = state.range(0);
    std::mt19937_64 rng(3);
    cgrp::Var x = cgrp::Var::constant(cgrp::Tensor::uniform({1, 32, n, n}, rng));
    cgrp::Var w = cgrp::Var::constant(cgrp::Tensor::normal({32, 32, 3, 3}, rng, 0.0, 0.05));
    for (auto _ : state) {
        benchmark::DoNotOptimize(cgrp::ops::conv2d(x, w, 1, 1));
    }
}
BENCHMARK(BM_Conv2dForward)->Arg(32)->Arg(64);

void BM_Conv2dTrainStep(benchmark::State& state) {
    const int64_t n = state.range(0);
    std::mt19937_64 rng(4);
    cgrp::Tensor xt = cgrp::Tensor::uniform({1, 32, n, n}, rng);
    cgrp::Tensor wt = cgrp::Tensor::normal({32, 32, 3, 3}, rng, 0.0, 0.05);
    for (auto _ : state) {
        cgrp::Var x = cgrp::Var::constant(xt);
        cgrp::Var w = cgrp::Var::leaf(wt);
        cgrp::Var loss = cgrp::ops::mean_all(cgrp::ops::square(cgrp::ops::conv2d(x, w, 1, 1)));
        cgrp::backward(loss);
        benchmark::DoNotOptimize(loss.item());
    }
}
BENCHMARK(BM_Conv2dTrainStep)->Arg(32)->Arg(64);

void BM_Ssim(benchmark::State& state) {
    const int64_t n = state.range(0);
    cgrp::Tensor a = rand_img(n, n, 5);
    cgrp::Tensor b = rand_img(n, n, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cgrp::ssim(a, b));
    }
}
BENCHMARK(BM_Ssim)->Arg(64)->Arg(256);

void BM_Vif(benchmark::State& state) {
    const int64_t n = state.range(0);
    cgrp::Tensor a = rand_img(n, n, 7);
    cgrp::Tensor b = rand_img(n, n, 8);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cgrp::vif(a, b));
    }
}
BENCHMARK(BM_Vif)->Arg(64)->Arg(256);

void BM_Mi(benchmark::State& state) {
    const int64_t n = state.range(0);
    cgrp::Tensor a = rand_img(n, n, 9);
    cgrp::Tensor b = rand_img(n, n, 10);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cgrp::mi(a, b));
    }
}
BENCHMARK(BM_Mi)->Arg(256);

void BM_PipelineInfer(benchmark::State& state) {
    const int64_t n = state.range(0);
    cgrp::TrainConfig cfg;
    cfg.weights.layers = {2};  // backbone is unused at inference, keep setup light
    cgrp::Model m(cfg);
    std::mt19937_64 rng(11);
    cgrp::GrayImage vis = cgrp::make_image(cgrp::Tensor::uniform({n, n}, rng),
                                           cgrp::Provenance::real_vis);
    cgrp::GrayImage ir = cgrp::make_image(cgrp::Tensor::uniform({n, n}, rng),
                                          cgrp::Provenance::real_ir);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cgrp::run_pipeline(m, vis, ir));
    }
}
BENCHMARK(BM_PipelineInfer)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
