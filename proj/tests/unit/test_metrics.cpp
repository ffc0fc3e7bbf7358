// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rtbeam/diff_grad.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/metrics.hpp"
#include "test_support.hpp"

namespace rtbeam {
namespace {

using Eigen::VectorXd;

VectorXd Vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(SiSdr, IdentityAndScaleHitCap) {
  std::mt19937_64 rng(1);
  const VectorXd r = testing::RandomReal(500, 1, rng);
  EXPECT_EQ(SiSdr(r, r), kMetricCapDb);
  EXPECT_EQ(SiSdr(3.0 * r, r), kMetricCapDb);
}

TEST(SiSdr, OrthogonalNoiseOfEqualEnergyIsZeroDb) {
  const VectorXd r = Vec({1, 0, 0, 0});
  const VectorXd n = Vec({0, 1, 0, 0});
  EXPECT_NEAR(SiSdr(r + n, r), 0.0, 1e-12);
}

TEST(SiSdr, ScaleInvariance) {
  std::mt19937_64 rng(2);
  const VectorXd r = testing::RandomReal(300, 1, rng);
  const VectorXd e = r + 0.3 * VectorXd(testing::RandomReal(300, 1, rng));
  for (double c : {0.01, 0.5, 2.0, 1000.0}) EXPECT_NEAR(SiSdr(c * e, r), SiSdr(e, r), 1e-10);
}

TEST(Sdr, KnownValues) {
  EXPECT_NEAR(Sdr(Vec({1, 0}), Vec({0, 1})), -3.0102999566398, 1e-10);
  std::mt19937_64 rng(3);
  const VectorXd r = testing::RandomReal(50, 1, rng);
  EXPECT_EQ(Sdr(r, r), kMetricCapDb);
}

TEST(Sdr, NegationMatchesLoss) {
  std::mt19937_64 rng(4);
  const VectorXd r = testing::RandomReal(400, 1, rng);
  const VectorXd e = r + 0.5 * VectorXd(testing::RandomReal(400, 1, rng));
  EXPECT_NEAR(-Sdr(e, r), SdrLoss(e, r, 0.0), 1e-9);
  EXPECT_NEAR(-Sdr(e, r), SdrLoss(e, r), 1e-6);
}

TEST(Metrics, BothDecreaseUnderAddedNoise) {
  std::mt19937_64 rng(5);
  const VectorXd r = testing::RandomReal(1000, 1, rng);
  VectorXd n = testing::RandomReal(1000, 1, rng);
  n -= n.dot(r) / r.squaredNorm() * r;
  double si = SiSdr(r, r), sd = Sdr(r, r);
  for (double level : {0.01, 0.1, 1.0}) {
    const double si2 = SiSdr(r + level * n, r), sd2 = Sdr(r + level * n, r);
    EXPECT_LT(si2, si);
    EXPECT_LT(sd2, sd);
    si = si2;
    sd = sd2;
  }
}

TEST(Metrics, Errors) {
  try {
    SiSdr(Vec({1, 2}), Vec({0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kValue);
  }
  try {
    Sdr(Vec({1, 2}), Vec({1, 2, 3}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kShape);
  }
}

}  // namespace
}  // namespace rtbeam
