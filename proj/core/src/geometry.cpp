// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/geometry.hpp"

#include <cmath>
#include <numbers>

namespace rtbeam {

ArrayGeometry ArrayGeometry::Rotated(double radians) const {
  const Eigen::Rotation2Dd rot(radians);
  ArrayGeometry out;
  out.mics.reserve(mics.size());
  for (const auto& p : mics) out.mics.push_back(rot * p);
  return out;
}

ArrayGeometry CircularArray(int n_mics, double radius, double rotation) {
  ArrayGeometry g;
  for (int m = 0; m < n_mics; ++m) {
    const double ang = rotation + 2.0 * std::numbers::pi * m / n_mics;
    g.mics.emplace_back(radius * std::cos(ang), radius * std::sin(ang));
  }
  return g;
}

double WrapAngle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double r = std::fmod(radians, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double AngularDistance(double a, double b) {
  const double d = WrapAngle(a - b);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace rtbeam
