// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "rtbeam/beamform.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/mask_net.hpp"
#include "test_support.hpp"

namespace rtbeam {
namespace {

TEST(Features, IdenticalChannelsHaveZeroPhaseDifference) {
  std::mt19937_64 rng(1);
  const auto one = testing::RandomSpectrogram(17, 10, 1, rng, 32, 8);
  ComplexSpectrogram x(17, 10, 3, 32, 8);
  for (int f = 0; f < 17; ++f)
    for (int t = 0; t < 10; ++t)
      for (int m = 0; m < 3; ++m) x(f, t, m) = one(f, t, 0);
  ArrayGeometry g;
  g.mics.assign(3, Eigen::Vector2d::Zero());  // coincident mics: zero delays
  const Features ft = ExtractFeatures(x, 1.0, g);
  ASSERT_EQ(ft.dim(), FeatureDim(3));
  EXPECT_EQ(FeatureDim(3), 3 + 4 + 1);
  for (int f = 0; f < 17; ++f)
    for (int t = 0; t < 10; ++t) {
      for (int p = 3; p < 7; p += 2) {
        EXPECT_NEAR(ft(f, t, p), 1.0, 1e-12);
        EXPECT_NEAR(ft(f, t, p + 1), 0.0, 1e-12);
      }
    }
}

TEST(Features, ZeroSignalHitsLogFloor) {
  const ComplexSpectrogram x(9, 4, 2, 16, 4);
  const Features ft = ExtractFeatures(x, 0.0, CircularArray(2, 0.05));
  for (int f = 0; f < 9; ++f)
    for (int t = 0; t < 4; ++t) {
      EXPECT_EQ(ft(f, t, 0), std::log(1e-8));
      EXPECT_EQ(ft(f, t, 1), std::log(1e-8));
      EXPECT_EQ(ft(f, t, 4), std::log(1e-8));
    }
}

TEST(Features, DelaySumOnPlaneWaveIsCoherent) {
  std::mt19937_64 rng(2);
  const ArrayGeometry g = CircularArray(4, 0.05);
  const double doa = 2.2;
  const auto sv = SteeringFromDoa(doa, g, 256);
  const auto s = testing::RandomSpectrogram(129, 6, 1, rng, 256, 64);
  ComplexSpectrogram x(129, 6, 4, 256, 64);
  for (int f = 0; f < 129; ++f)
    for (int t = 0; t < 6; ++t) x.frame(f, t) = s(f, t, 0) * sv.a.row(f).transpose();
  const Features ft = ExtractFeatures(x, doa, g);
  for (int f = 0; f < 129; ++f)
    for (int t = 0; t < 6; ++t) EXPECT_NEAR(ft(f, t, ft.dim() - 1), std::log(std::abs(x(f, t, 0)) + 1e-8), 1e-6);
}

class MaskNetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(3);
    x_ = testing::RandomSpectrogram(17, 12, 3, rng, 32, 8);
    geom_ = CircularArray(3, 0.05);
    features_ = ExtractFeatures(x_, 0.4, geom_);
  }
  ComplexSpectrogram x_;
  ArrayGeometry geom_;
  Features features_;
};

TEST_F(MaskNetTest, ZeroParamsGiveHalf) {
  const MaskNetParams p(3, 8, 2);
  const Mask m = MaskNetForward(p, features_, 0.4);
  EXPECT_EQ(m.values.rows(), 17);
  EXPECT_EQ(m.values.cols(), 12);
  EXPECT_EQ((m.values.array() - 0.5).abs().maxCoeff(), 0.0);
}

TEST_F(MaskNetTest, OutputStrictlyInsideUnitInterval) {
  MaskNetParams p = InitMaskNet(3, 8, 1, 4);
  p.theta *= 200.0;  // saturate
  const Mask m = MaskNetForward(p, features_, 0.4);
  EXPECT_GT(m.values.minCoeff(), 0.0);
  EXPECT_LT(m.values.maxCoeff(), 1.0);
}

TEST_F(MaskNetTest, DoaPeriodicityIsExact) {
  const MaskNetParams p = InitMaskNet(3, 8, 1, 5);
  const double doa = 0.4;
  const Mask a = MaskNetForward(p, features_, doa);
  const Mask b = MaskNetForward(p, features_, doa + 2.0 * std::numbers::pi);
  // cos/sin of doa and doa + 2 pi may differ in the last ulp; the network
  // reduces the angle first so results match exactly.
  EXPECT_EQ(a.values, b.values);
}

TEST_F(MaskNetTest, ForwardIsDeterministic) {
  const MaskNetParams p = InitMaskNet(3, 8, 2, 6);
  EXPECT_EQ(MaskNetForward(p, features_, 1.0).values, MaskNetForward(p, features_, 1.0).values);
  EXPECT_EQ(InitMaskNet(3, 8, 2, 6).theta, p.theta);
}

TEST_F(MaskNetTest, BackwardMatchesFiniteDifferences) {
  MaskNetParams p = InitMaskNet(3, 6, 1, 7);
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd gm = testing::RandomReal(17, 12, rng);
  MaskNetCache cache;
  MaskNetForward(p, features_, 0.4, &cache);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(p.size());
  MaskNetBackward(p, cache, gm, grad);
  std::uniform_int_distribution<Eigen::Index> pick(0, p.size() - 1);
  for (int i = 0; i < 40; ++i) {
    const Eigen::Index k = pick(rng);
    const double orig = p.theta(k), h = 1e-6;
    p.theta(k) = orig + h;
    const double up = (MaskNetForward(p, features_, 0.4).values.array() * gm.array()).sum();
    p.theta(k) = orig - h;
    const double dn = (MaskNetForward(p, features_, 0.4).values.array() * gm.array()).sum();
    p.theta(k) = orig;
    const double num = (up - dn) / (2 * h);
    EXPECT_NEAR(grad(k), num, 1e-6 * std::max(1.0, std::abs(num))) << "param " << k;
  }
}

TEST_F(MaskNetTest, CheckpointRoundTrip) {
  const MaskNetParams p = InitMaskNet(3, 5, 2, 9);
  const auto path = std::filesystem::temp_directory_path() / "rtbeam_masknet_roundtrip.bin";
  SaveMaskNet(p, path);
  const MaskNetParams q = LoadMaskNet(path);
  std::filesystem::remove(path);
  EXPECT_EQ(q.num_channels(), 3);
  EXPECT_EQ(q.hidden(), 5);
  EXPECT_EQ(q.context(), 2);
  EXPECT_EQ(q.theta, p.theta);
}

TEST_F(MaskNetTest, FeatureSizeMismatchRejected) {
  const MaskNetParams p(4, 5, 1);
  EXPECT_THROW(MaskNetForward(p, features_, 0.0), Error);
}

}  // namespace
}  // namespace rtbeam
