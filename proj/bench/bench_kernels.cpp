// Serial-reference vs OpenMP kernel comparison. Run manually:
//   ./build/bench/bench_kernels [--benchmark_filter=conv3d]

#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "volwindow/dynunet.hpp"
#include "volwindow/kernels.hpp"
#include "volwindow/preprocess.hpp"
#include "volwindow/rng.hpp"
#include "volwindow/swinfer.hpp"

using namespace volwindow;

namespace {

Tensor4 random_tensor(int channels, std::array<int, 3> shape, std::uint64_t seed) {
    Tensor4 t(channels, shape);
    CounterRng rng(seed);
    for (auto& v : t.data) v = static_cast<float>(rng.normal());
    return t;
}

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
    std::vector<float> v(n);
    CounterRng rng(seed);
    for (auto& x : v) x = static_cast<float>(rng.normal() * 0.1);
    return v;
}

constexpr std::array<int, 3> kConvShape{48, 48, 48};
constexpr int kConvIn = 8;
constexpr int kConvOut = 8;

void bench_conv3d(benchmark::State& state, ExecMode mode) {
    const Tensor4 in = random_tensor(kConvIn, kConvShape, 1);
    const auto w = random_floats(static_cast<std::size_t>(kConvOut) * kConvIn * 27, 2);
    const std::vector<float> b(kConvOut, 0.0f);
    Tensor4 out;
    for (auto _ : state) {
        if (mode == ExecMode::serial)
            kernels::conv3d_ref(in, w.data(), b.data(), kConvOut, {3, 3, 3}, {1, 1, 1}, out);
        else
            kernels::conv3d_omp(in, w.data(), b.data(), kConvOut, {3, 3, 3}, {1, 1, 1}, out);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * out.size());
}

void bench_transposed(benchmark::State& state, ExecMode mode) {
    const Tensor4 in = random_tensor(16, {24, 24, 24}, 3);
    const auto w = random_floats(16 * 8 * 8, 4);
    const std::vector<float> b(8, 0.0f);
    Tensor4 out;
    for (auto _ : state) {
        if (mode == ExecMode::serial)
            kernels::conv3d_transposed_ref(in, w.data(), b.data(), 8, {2, 2, 2}, out);
        else
            kernels::conv3d_transposed_omp(in, w.data(), b.data(), 8, {2, 2, 2}, out);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * out.size());
}

void bench_resample(benchmark::State& state, ExecMode mode) {
    const std::array<int, 3> in_shape{96, 96, 96};
    const std::array<int, 3> out_shape{128, 128, 128};
    const std::array<double, 3> scale{0.75, 0.75, 0.75};
    const auto in = random_floats(static_cast<std::size_t>(96) * 96 * 96, 5);
    std::vector<float> out(static_cast<std::size_t>(128) * 128 * 128);
    for (auto _ : state) {
        if (mode == ExecMode::serial)
            kernels::resample_trilinear_ref(in.data(), in_shape, out.data(), out_shape, scale);
        else
            kernels::resample_trilinear_omp(in.data(), in_shape, out.data(), out_shape, scale);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(out.size()));
}

void bench_accumulate(benchmark::State& state, ExecMode mode) {
    const std::array<int, 3> vol{96, 96, 96};
    const std::array<int, 3> roi{64, 64, 64};
    const Tensor4 pred = random_tensor(2, roi, 6);
    const auto weights = gaussian_importance(roi, 0.125);
    const std::int64_t voxels = static_cast<std::int64_t>(vol[0]) * vol[1] * vol[2];
    std::vector<double> sum(2 * voxels), wsum(voxels);
    for (auto _ : state) {
        if (mode == ExecMode::serial)
            kernels::accumulate_tile_ref(pred, weights, {16, 16, 16}, vol, sum.data(),
                                         wsum.data());
        else
            kernels::accumulate_tile_omp(pred, weights, {16, 16, 16}, vol, sum.data(),
                                         wsum.data());
        benchmark::DoNotOptimize(wsum.data());
    }
    state.SetItemsProcessed(state.iterations() * pred.size());
}

// whole-pipeline comparison: toy-model sliding window over a small volume
void bench_sliding_window(benchmark::State& state, ExecMode mode) {
    ArchSpec arch;
    arch.filters = {8, 16};
    arch.strides = {{1, 1, 1}, {2, 2, 2}};
    const ModelParams params = init_params(arch, 1);
    Volume vol({48, 48, 48}, {1, 1, 1});
    CounterRng rng(7);
    for (auto& v : vol.data) v = static_cast<float>(rng.next_double());
    const PatchPredictor predictor = [&params, mode](const Tensor4& patch) {
        return softmax_channels(forward(params, patch, mode));
    };
    BlendMode blend;
    for (auto _ : state) {
        ProbVolume out = sliding_window_infer(vol, predictor, {24, 24, 24}, 0.25, blend, mode);
        benchmark::DoNotOptimize(out.probs.data.data());
    }
}

} // namespace

BENCHMARK_CAPTURE(bench_conv3d, serial, ExecMode::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_conv3d, openmp, ExecMode::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_transposed, serial, ExecMode::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_transposed, openmp, ExecMode::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_resample, serial, ExecMode::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_resample, openmp, ExecMode::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_accumulate, serial, ExecMode::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_accumulate, openmp, ExecMode::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_sliding_window, serial, ExecMode::serial)
    ->Unit(benchmark::kMillisecond)
    ->Iterations(3);
BENCHMARK_CAPTURE(bench_sliding_window, openmp, ExecMode::parallel)
    ->Unit(benchmark::kMillisecond)
    ->Iterations(3);

BENCHMARK_MAIN();
