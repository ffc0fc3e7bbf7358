// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace rtbeam {

// Microphone positions in meters relative to the array center.
struct ArrayGeometry {
  std::vector<Eigen::Vector2d> mics;

  int num_mics() const { return static_cast<int>(mics.size()); }
  ArrayGeometry Rotated(double radians) const;
};

// Uniform circular array; mic 0 sits at angle `rotation` (radians).
ArrayGeometry CircularArray(int n_mics, double radius, double rotation = 0.0);

// Wraps an angle into [0, 2 pi).
double WrapAngle(double radians);
// Smallest absolute difference between two angles, in radians.
double AngularDistance(double a, double b);

}  // namespace rtbeam
