// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/wpe.hpp"

#include <cmath>

#include "rtbeam/error.hpp"
#include "rtbeam/linalg.hpp"
#include "rtbeam/parallel.hpp"

namespace rtbeam {
namespace {

// Columns are the stacked past x_{f,t-b}..x_{f,t-L}, zero before t = 0.
Eigen::MatrixXcd PastMatrix(const ComplexSpectrogram& x, int f, int delay, int taps) {
  const int M = x.num_channels(), T = x.num_frames();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero((taps - delay + 1) * M, T);
  for (int t = 0; t < T; ++t) {
    for (int tau = delay; tau <= taps && t - tau >= 0; ++tau)
      out.block((tau - delay) * M, t, M, 1) = x.frame(f, t - tau);
  }
  return out;
}

Eigen::MatrixXcd Frames(const ComplexSpectrogram& x, int f) {
  Eigen::MatrixXcd out(x.num_channels(), x.num_frames());
  for (int t = 0; t < x.num_frames(); ++t) out.col(t) = x.frame(f, t);
  return out;
}

Eigen::MatrixXd PsdFrom(const ComplexSpectrogram& d, double floor) {
  const int F = d.num_bins(), T = d.num_frames(), M = d.num_channels();
  Eigen::MatrixXd psd(F, T);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t)
      psd(f, t) = std::max(d.frame(f, t).squaredNorm() / M, floor);
  return psd;
}

}  // namespace

Eigen::MatrixXcd WpeFilter::Tap(int f, int tau) const {
  return stacked[static_cast<std::size_t>(f)].block((tau - delay) * num_channels, 0,
                                                   num_channels, num_channels);
}

WpeFilter WpeSolveFilter(const ComplexSpectrogram& x, const Eigen::MatrixXd& psd,
                         int delay, int taps, double loading) {
  const int F = x.num_bins(), T = x.num_frames();
  if (delay < 1 || taps < delay) Fail(Errc::kValue, "WPE needs 1 <= b <= L");

  WpeFilter filter;
  filter.delay = delay;
  filter.taps = taps;
  filter.num_channels = x.num_channels();
  filter.stacked.resize(static_cast<std::size_t>(F));
  ParallelFor(static_cast<std::size_t>(F), [&](std::size_t fi) {
    const int f = static_cast<int>(fi);
    const Eigen::MatrixXcd past = PastMatrix(x, f, delay, taps);
    Eigen::MatrixXcd weighted = past;
    for (int t = 0; t < T; ++t) weighted.col(t) /= psd(f, t);
    Eigen::MatrixXcd r = weighted * past.adjoint();
    const Eigen::MatrixXcd p = weighted * Frames(x, f).adjoint();
    r.diagonal().array() += loading;
    filter.stacked[fi] = HermitianCholesky(HermitianMatrix(r)).Solve(p);
  });
  return filter;
}

ComplexSpectrogram WpeApply(const ComplexSpectrogram& x, const WpeFilter& filter) {
  const int F = x.num_bins(), T = x.num_frames();
  ComplexSpectrogram d = x;
  ParallelFor(static_cast<std::size_t>(F), [&](std::size_t fi) {
    const int f = static_cast<int>(fi);
    const Eigen::MatrixXcd est =
        filter.stacked[fi].adjoint() * PastMatrix(x, f, filter.delay, filter.taps);
    for (int t = 0; t < T; ++t) d.frame(f, t) -= est.col(t);
  });
  return d;
}

WpeResult WpeDereverb(const ComplexSpectrogram& x, const WpeOptions& options) {
  if (options.iterations < 1) Fail(Errc::kValue, "WPE needs at least one iteration");
  if (options.delay < 1 || options.taps < options.delay) {
    Fail(Errc::kValue, "WPE needs 1 <= b <= L");
  }
  if (x.num_frames() <= options.taps) Fail(Errc::kSize, "WPE needs T > L");
  const int M = x.num_channels();
  const double floor = options.psd_floor_ratio * x.MeanPower();

  WpeResult out;
  out.dry = x;
  for (int it = 0; it < options.iterations; ++it) {
    const Eigen::MatrixXd psd = PsdFrom(out.dry, floor);
    out.filter = WpeSolveFilter(x, psd, options.delay, options.taps, options.loading);
    out.dry = WpeApply(x, out.filter);

    double weighted = 0.0, logs = 0.0;
    for (int f = 0; f < x.num_bins(); ++f) {
      for (int t = 0; t < x.num_frames(); ++t) {
        weighted += out.dry.frame(f, t).squaredNorm() / psd(f, t);
        logs += std::log(psd(f, t));
      }
    }
    out.weighted_power.push_back(weighted);
    out.objective.push_back(weighted + M * logs);
  }
  return out;
}

}  // namespace rtbeam
