// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "rtbeam/geometry.hpp"
#include "rtbeam/linalg.hpp"
#include "rtbeam/types.hpp"

namespace rtbeam {

// Per-frequency far-field steering vectors, row f = a_f (F x M), normalized
// to unit gain at the reference channel.
struct SteeringVector {
  Eigen::MatrixXcd a;
  int ref = 0;
};

SteeringVector SteeringFromDoa(double doa, const ArrayGeometry& geometry,
                               int n_fft, int ref = 0);

// Convolutional tap set {0} U {delay, ..., taps}. When taps < delay only the
// current frame is used and the filter degenerates to a plain beamformer.
struct TapConfig {
  int delay = 3;  // b, frames
  int taps = 8;   // L, frames
};

std::vector<int> StackedLags(const TapConfig& taps);
int StackedDim(const TapConfig& taps, int num_channels);

// x_bar_{ft}: the current frame followed by the delayed frames, zeros for
// frames before the start.
Eigen::VectorXcd StackFrames(const ComplexSpectrogram& x, int f, int t,
                             const std::vector<int>& lags);
// All x_bar_{ft} of bin f as columns (D x T). With `mask`, each delayed
// frame is scaled by its mask value first.
Eigen::MatrixXcd StackFrameMatrix(const ComplexSpectrogram& x, int f, const std::vector<int>& lags,
                                  const Eigen::MatrixXd* mask = nullptr);

struct WpdStatistics {
  Eigen::MatrixXd psd;               // sigma^2_{ft}, F x T
  std::vector<HermitianMatrix> R;    // target SCM per frequency
  std::vector<HermitianMatrix> K;    // PSD-weighted mixture SCM per frequency
  double psd_floor = 0.0;
};

struct MaskStatisticsOptions {
  TapConfig taps;
  // Replace sigma^2 by 1 (used for the plain MPDR reduction).
  bool unit_psd = false;
  double psd_floor_ratio = 1e-8;
};

// sigma^2_{ft} = (1/M) sum_m |w_{ft} x_{ftm}|^2 (floored),
// R_f = (1/T) sum_t s_{ft} s_{ft}^H with s the mask-weighted stacked vector,
// K_f = sum_t x_bar x_bar^H / sigma^2_{ft}.
// Throws Errc::kDegenerate for an all-zero mask.
WpdStatistics MaskStatistics(const ComplexSpectrogram& x, const Mask& mask,
                             const MaskStatisticsOptions& options);

// MPDR: w_f = K^{-1} a / (a^H K^{-1} a), one row per frequency (F x M).
Eigen::MatrixXcd MpdrFilter(const std::vector<HermitianMatrix>& K,
                            const SteeringVector& steering,
                            double relative_loading = kDefaultLoading);

// Sample SCM (1/T) sum_t x_{ft} x_{ft}^H per frequency.
std::vector<HermitianMatrix> MixtureScm(const ComplexSpectrogram& x);

struct WpdFilter {
  Eigen::MatrixXcd w;  // F x D, row f = w_bar_f
  TapConfig taps;
  int num_channels = 0;
};

// Intermediate quantities of one per-frequency WPD solve, kept for the
// gradient engine: w = z / c with z = A^{-1} R u_q, c = tr(A^{-1} R).
struct WpdSolve {
  HermitianCholesky chol;
  Eigen::MatrixXcd a_inv_r;  // A^{-1} R
  cdouble trace;
  Eigen::VectorXcd w;
};

WpdSolve SolveWpd(const HermitianMatrix& K, const HermitianMatrix& R,
                  int ref, double relative_loading = kDefaultLoading);

// w_bar = (K^{-1} R / tr(K^{-1} R)) u_q.
WpdFilter WpdFilterFromStatistics(const WpdStatistics& stats, const TapConfig& taps,
                                  int num_channels, int ref,
                                  double relative_loading = kDefaultLoading);

// Distortionless form w_bar = K^{-1} a_bar / (a_bar^H K^{-1} a_bar) with
// a_bar the steering vector padded with zeros over the delayed taps.
WpdFilter WpdFilterFromSteering(const std::vector<HermitianMatrix>& K,
                                const SteeringVector& steering, const TapConfig& taps,
                                double relative_loading = kDefaultLoading);

// Embeds per-frequency M-channel weights in a filter with no delayed taps.
WpdFilter WpdFilterFromBeamformer(const Eigen::MatrixXcd& weights);

// d_{ft} = w_bar_f^H x_bar_{ft}; returns an F x T x 1 spectrogram.
ComplexSpectrogram ApplyWpd(const ComplexSpectrogram& x, const WpdFilter& filter);

}  // namespace rtbeam
