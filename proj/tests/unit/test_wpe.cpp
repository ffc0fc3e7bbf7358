// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rtbeam/error.hpp"
#include "rtbeam/room_sim.hpp"
#include "rtbeam/stft.hpp"
#include "rtbeam/wpe.hpp"
#include "test_support.hpp"

namespace rtbeam {
namespace {

using Eigen::MatrixXcd;

double RelChange(const ComplexSpectrogram& a, const ComplexSpectrogram& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.raw().size(); ++i) {
    num += std::norm(a.raw()[i] - b.raw()[i]);
    den += std::norm(b.raw()[i]);
  }
  return std::sqrt(num / den);
}

TEST(Wpe, WhiteNoiseIsLeftAlone) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    // Long enough that estimation noise of the 22 x 2 filter stays small.
    const auto x = testing::RandomSpectrogram(3, 20000, 2, rng, 4, 1);
    const auto r = WpeDereverb(x, {});
    for (int f = 0; f < 3; ++f)
      for (int tau = 3; tau <= 13; ++tau) EXPECT_LT(r.filter.Tap(f, tau).norm(), 0.1);
    EXPECT_LT(RelChange(r.dry, x), 0.05);
  }
}

TEST(Wpe, UnitPsdMatchesOrdinaryLeastSquares) {
  std::mt19937_64 rng(1);
  const int F = 5, T = 60, M = 2, b = 2, L = 4;
  const auto x = testing::RandomSpectrogram(F, T, M, rng, 8, 2);
  const auto filter = WpeSolveFilter(x, Eigen::MatrixXd::Ones(F, T), b, L, 0.0);
  const int D = (L - b + 1) * M;
  for (int f = 0; f < F; ++f) {
    // Rows of the regression: past stack^T -> current frame^T.
    MatrixXcd A = MatrixXcd::Zero(T, D), Y(T, M);
    for (int t = 0; t < T; ++t) {
      for (int tau = b; tau <= L; ++tau)
        for (int m = 0; m < M; ++m)
          if (t - tau >= 0) A(t, (tau - b) * M + m) = std::conj(x(f, t - tau, m));
      for (int m = 0; m < M; ++m) Y(t, m) = std::conj(x(f, t, m));
    }
    const MatrixXcd G = (A.adjoint() * A).inverse() * (A.adjoint() * Y);
    EXPECT_LT((G - filter.stacked[static_cast<std::size_t>(f)]).norm(), 1e-6 * G.norm());
  }
}

TEST(Wpe, ObjectiveIsMonotone) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneSampling sm;
    sm.n_speakers = 1;
    sm.rt60 = 0.6;
    sm.duration = 1.5;
    const auto x = StftForward(Simulate(SampleScene(sm, seed)).mixture, 256, 64);
    WpeOptions o;
    o.iterations = 4;
    const auto r = WpeDereverb(x, o);
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      EXPECT_LE(r.objective[i], r.objective[i - 1] + 1e-6 * std::abs(r.objective[i - 1]));
    }
  }
}

TEST(Wpe, ScaleEquivariance) {
  std::mt19937_64 rng(2);
  const auto x = testing::RandomSpectrogram(9, 80, 2, rng, 16, 4);
  const cdouble c(2.5, -1.5);
  ComplexSpectrogram y = x;
  for (auto& v : y.raw()) v *= c;
  const auto rx = WpeDereverb(x, {}), ry = WpeDereverb(y, {});
  for (int f = 0; f < 9; ++f) {
    const auto& a = rx.filter.stacked[static_cast<std::size_t>(f)];
    EXPECT_LT((a - ry.filter.stacked[static_cast<std::size_t>(f)]).norm(), 1e-8 * (1.0 + a.norm()));
  }
  for (std::size_t i = 0; i < x.raw().size(); ++i) {
    EXPECT_LT(std::abs(c * rx.dry.raw()[i] - ry.dry.raw()[i]), 1e-8 * std::abs(c) * (1.0 + std::abs(rx.dry.raw()[i])));
  }
}

TEST(Wpe, SingleTapAndPreconditions) {
  std::mt19937_64 rng(3);
  const auto x = testing::RandomSpectrogram(9, 40, 2, rng, 16, 4);
  WpeOptions o;
  o.delay = 4;
  o.taps = 4;
  EXPECT_EQ(WpeDereverb(x, o).filter.num_taps(), 1);
  o.delay = 5;
  EXPECT_THROW(WpeDereverb(x, o), Error);
  o = {};
  o.taps = 40;
  EXPECT_THROW(WpeDereverb(x, o), Error);
}

TEST(Wpe, ImprovesDirectToReverberantRatio) {
  SceneSpec s;
  s.duration = 3.0;
  s.sources.push_back({{5.6, 4.1}, "synthetic:4"});
  s.rt60 = 0.8;
  const TimeSignal wet = Simulate(s).mixture;
  s.rt60 = 1e-3;  // direct path only
  const TimeSignal direct = Simulate(s).mixture;
  const auto dry = StftInverse(WpeDereverb(StftForward(wet, 256, 64), {}).dry, static_cast<int>(wet.num_samples()));
  auto drr = [&](const Eigen::MatrixXd& y) {
    return 10.0 * std::log10(direct.samples.squaredNorm() / (y - direct.samples).squaredNorm());
  };
  EXPECT_GT(drr(dry.samples), drr(wet.samples));
}

}  // namespace
}  // namespace rtbeam
