// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "rtbeam/error.hpp"

namespace rtbeam {
namespace {

void CheckPair(const Eigen::VectorXd& est, const Eigen::VectorXd& ref) {
  if (est.size() != ref.size() || est.size() == 0) Fail(Errc::kShape, "metric inputs differ in length");
  if (ref.squaredNorm() == 0.0) Fail(Errc::kValue, "reference is identically zero");
}

double RatioDb(double num, double den) {
  if (den <= 0.0) return num > 0.0 ? kMetricCapDb : -kMetricCapDb;
  if (num <= 0.0) return -kMetricCapDb;
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

}  // namespace

double SiSdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  CheckPair(estimate, reference);
  const double alpha = estimate.dot(reference) / reference.squaredNorm();
  const Eigen::VectorXd target = alpha * reference;
  const double err = (estimate - target).squaredNorm();
  // Residuals at rounding level count as a perfect match.
  const double tiny = 1e-24 * estimate.squaredNorm();
  return RatioDb(target.squaredNorm(), err <= tiny ? 0.0 : err);
}

double Sdr(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  CheckPair(estimate, reference);
  return RatioDb(estimate.squaredNorm(), (estimate - reference).squaredNorm());
}

}  // namespace rtbeam
