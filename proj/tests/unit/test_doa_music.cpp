// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rtbeam/beamform.hpp"
#include "rtbeam/doa_music.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/room_sim.hpp"
#include "rtbeam/stft.hpp"
#include "test_support.hpp"

namespace rtbeam {
namespace {

constexpr double kPi = std::numbers::pi;
double Deg(double r) { return r * 180.0 / kPi; }

// Far-field plane waves plus weak sensor noise.
ComplexSpectrogram PlaneWaves(const std::vector<double>& doas, const ArrayGeometry& g, std::mt19937_64& rng) {
  const int n_fft = 256, F = 129, T = 80, M = g.num_mics();
  ComplexSpectrogram x(F, T, M, n_fft, 64);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double doa : doas) {
    const auto sv = SteeringFromDoa(doa, g, n_fft);
    for (int f = 0; f < F; ++f)
      for (int t = 0; t < T; ++t) x.frame(f, t) += cdouble(n(rng), n(rng)) * sv.a.row(f).transpose();
  }
  for (auto& v : x.raw()) v += 1e-3 * cdouble(n(rng), n(rng));
  return x;
}

TEST(Music, SinglePlaneWave) {
  std::mt19937_64 rng(1);
  const ArrayGeometry g = CircularArray(4, 0.05);
  const auto est = DoaMusic(PlaneWaves({kPi / 2}, g, rng), g, {});
  ASSERT_EQ(est.size(), 1u);
  EXPECT_LT(Deg(AngularDistance(est[0], kPi / 2)), 5.0);
}

TEST(Music, TwoOpposedSources) {
  std::mt19937_64 rng(2);
  const ArrayGeometry g = CircularArray(4, 0.05);
  MusicOptions o;
  o.num_sources = 2;
  auto est = DoaMusic(PlaneWaves({0.0, kPi}, g, rng), g, o);
  ASSERT_EQ(est.size(), 2u);
  const bool direct = AngularDistance(est[0], 0.0) < AngularDistance(est[0], kPi);
  EXPECT_LT(Deg(AngularDistance(est[direct ? 0 : 1], 0.0)), 5.0);
  EXPECT_LT(Deg(AngularDistance(est[direct ? 1 : 0], kPi)), 5.0);
}

TEST(Music, SimulatedRoomSource) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneSampling sm;
    sm.n_speakers = 1;
    sm.rt60 = 0.3;
    sm.duration = 1.0;
    const SceneSpec spec = SampleScene(sm, seed);
    const SimResult sim = Simulate(spec);
    const auto est = DoaMusic(StftForward(sim.mixture, 256, 64), spec.Geometry(), {});
    EXPECT_LT(Deg(AngularDistance(est[0], sim.doas[0])), 5.0) << "seed " << seed;
  }
}

TEST(Music, RotationalEquivariance) {
  const ArrayGeometry g = CircularArray(5, 0.05);
  const double doa = 0.9;
  for (double rot : {0.3, 1.7, 4.0}) {
    std::mt19937_64 r1(3), r2(3);
    const double a = DoaMusic(PlaneWaves({doa}, g, r1), g, {})[0];
    const ArrayGeometry gr = g.Rotated(rot);
    const double b = DoaMusic(PlaneWaves({doa + rot}, gr, r2), gr, {})[0];
    EXPECT_LT(Deg(AngularDistance(WrapAngle(a + rot), b)), 1.0);
  }
}

TEST(Music, EstimatesInRangeAndSubspaceError) {
  std::mt19937_64 rng(4);
  const ArrayGeometry g = CircularArray(3, 0.05);
  const auto x = PlaneWaves({5.5}, g, rng);
  const double e = DoaMusic(x, g, {})[0];
  EXPECT_GE(e, 0.0);
  EXPECT_LT(e, 2 * kPi);
  MusicOptions o;
  o.num_sources = 3;
  try {
    DoaMusic(x, g, o);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::kSubspace);
  }
}

}  // namespace
}  // namespace rtbeam
