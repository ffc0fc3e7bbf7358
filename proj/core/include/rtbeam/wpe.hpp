// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "rtbeam/types.hpp"

namespace rtbeam {

struct WpeOptions {
  int delay = 3;      // b, frames
  int taps = 13;      // L, frames
  int iterations = 3;
  // sigma^2 floor as a fraction of the input mean power.
  double psd_floor_ratio = 1e-8;
  // Added to the diagonal of the weighted normal matrix. Those entries are
  // x/sigma ratios, so an absolute value is already scale free.
  double loading = 1e-6;
};

// Prediction filter: for each frequency, L - b + 1 matrices W_{f,tau}
// (tau = b..L), stored stacked as a ((L-b+1) M) x M block column so that
// the reverberation estimate is G_f^H x_past.
struct WpeFilter {
  std::vector<Eigen::MatrixXcd> stacked;  // one per frequency
  int delay = 0;
  int taps = 0;
  int num_channels = 0;

  int num_taps() const { return taps - delay + 1; }
  // W_{f,tau} as an M x M matrix.
  Eigen::MatrixXcd Tap(int f, int tau) const;
};

struct WpeResult {
  ComplexSpectrogram dry;
  WpeFilter filter;
  // Per iteration: sum_{f,t} sum_m |d|^2 / sigma^2 with the sigma^2 used for
  // that iteration's solve.
  std::vector<double> weighted_power;
  // Per iteration: the same plus M * sum log sigma^2, the Gaussian
  // negative log-likelihood that the alternating updates descend.
  std::vector<double> objective;
};

// Iterative weighted-prediction-error dereverberation.
WpeResult WpeDereverb(const ComplexSpectrogram& x, const WpeOptions& options);

// One weighted least-squares solve for a given PSD (F x T).
WpeFilter WpeSolveFilter(const ComplexSpectrogram& x, const Eigen::MatrixXd& psd,
                         int delay, int taps, double loading);

// d_{ft} = x_{ft} - sum_tau W_{f tau}^H x_{f,t-tau}.
ComplexSpectrogram WpeApply(const ComplexSpectrogram& x, const WpeFilter& filter);

}  // namespace rtbeam
