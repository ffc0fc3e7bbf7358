// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <benchmark/benchmark.h>

#include "rtbeam/beamform.hpp"
#include "rtbeam/fastmnmf.hpp"
#include "rtbeam/room_sim.hpp"
#include "rtbeam/stft.hpp"
#include "rtbeam/wpe.hpp"

namespace rtbeam {
namespace {

// 2 s, 2 speakers, 4 mics, rt60 0.5 s.
const SimResult& Scene() {
  static const SimResult sim = [] {
    SceneSampling sm;
    sm.rt60 = 0.5;
    return Simulate(SampleScene(sm, 1));
  }();
  return sim;
}

const ComplexSpectrogram& Spec() {
  static const ComplexSpectrogram x = StftForward(Scene().mixture, 256, 64);
  return x;
}

void BM_StftForward(benchmark::State& state) {
  const int n_fft = static_cast<int>(state.range(0));
  Spec();  // build the shared scene outside the timed loop
  for (auto _ : state) benchmark::DoNotOptimize(StftForward(Scene().mixture, n_fft, n_fft / 4));
}
BENCHMARK(BM_StftForward)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_StftRoundTrip(benchmark::State& state) {
  const int len = static_cast<int>(Scene().mixture.num_samples());
  for (auto _ : state) benchmark::DoNotOptimize(StftInverse(StftForward(Scene().mixture, 256, 64), len));
}
BENCHMARK(BM_StftRoundTrip)->Unit(benchmark::kMillisecond);

void BM_Wpe(benchmark::State& state) {
  WpeOptions o;
  o.taps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(WpeDereverb(Spec(), o));
}
BENCHMARK(BM_Wpe)->Arg(8)->Arg(13)->Unit(benchmark::kMillisecond);

void BM_WpdFromMask(benchmark::State& state) {
  const TapConfig taps{3, static_cast<int>(state.range(0))};
  const Mask mask{Eigen::MatrixXd::Constant(Spec().num_bins(), Spec().num_frames(), 0.5)};
  MaskStatisticsOptions o;
  o.taps = taps;
  for (auto _ : state) {
    const auto st = MaskStatistics(Spec(), mask, o);
    benchmark::DoNotOptimize(ApplyWpd(Spec(), WpdFilterFromStatistics(st, taps, Spec().num_channels(), 0)));
  }
}
BENCHMARK(BM_WpdFromMask)->Arg(0)->Arg(8)->Arg(13)->Unit(benchmark::kMillisecond);

void BM_FastMnmfSweeps(benchmark::State& state) {
  const auto init = FastMnmfInit(Spec(), 2, 4, 0);
  for (auto _ : state) benchmark::DoNotOptimize(FastMnmfFit(Spec(), init, 10));
}
BENCHMARK(BM_FastMnmfSweeps)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace rtbeam

BENCHMARK_MAIN();
