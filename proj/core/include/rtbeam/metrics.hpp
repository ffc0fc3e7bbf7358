// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

namespace rtbeam {

inline constexpr double kMetricCapDb = 200.0;

// Scale-invariant SDR in dB, clamped to [-200, 200].
// Throws Errc::kShape on length mismatch and Errc::kValue for a zero reference.
double SiSdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

// 10 log10(|est|^2 / |est - ref|^2), clamped to [-200, 200].
double Sdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

}  // namespace rtbeam
