// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/beamform.hpp"

#include <cmath>
#include <numbers>

#include "rtbeam/error.hpp"
#include "rtbeam/parallel.hpp"

namespace rtbeam {

SteeringVector SteeringFromDoa(double doa, const ArrayGeometry& geometry,
                               int n_fft, int ref) {
  const int M = geometry.num_mics();
  const int F = n_fft / 2 + 1;
  if (ref < 0 || ref >= M) Fail(Errc::kValue, "reference channel out of range");
  const Eigen::Vector2d u(std::cos(doa), std::sin(doa));
  SteeringVector out;
  out.ref = ref;
  out.a.resize(F, M);
  // Arrival time relative to the array center: tau_m = -(p_m . u) / c.
  std::vector<double> tau(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) tau[static_cast<std::size_t>(m)] = -geometry.mics[static_cast<std::size_t>(m)].dot(u) / kSpeedOfSound;
  for (int f = 0; f < F; ++f) {
    const double hz = static_cast<double>(f) * kSampleRate / n_fft;
    for (int m = 0; m < M; ++m) {
      const double rel = tau[static_cast<std::size_t>(m)] - tau[static_cast<std::size_t>(ref)];
      out.a(f, m) = std::polar(1.0, -2.0 * std::numbers::pi * hz * rel);
    }
  }
  return out;
}

std::vector<int> StackedLags(const TapConfig& taps) {
  std::vector<int> lags{0};
  for (int tau = std::max(taps.delay, 1); tau <= taps.taps; ++tau) lags.push_back(tau);
  return lags;
}

int StackedDim(const TapConfig& taps, int num_channels) {
  return static_cast<int>(StackedLags(taps).size()) * num_channels;
}

Eigen::VectorXcd StackFrames(const ComplexSpectrogram& x, int f, int t,
                             const std::vector<int>& lags) {
  const int M = x.num_channels();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lags.size()) * M);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const int src = t - lags[i];
    if (src >= 0) out.segment(static_cast<Eigen::Index>(i) * M, M) = x.frame(f, src);
  }
  return out;
}

Eigen::MatrixXcd StackFrameMatrix(const ComplexSpectrogram& x, int f, const std::vector<int>& lags,
                                  const Eigen::MatrixXd* mask) {
  const int M = x.num_channels(), T = x.num_frames();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(lags.size()) * M, T);
  for (int t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < lags.size(); ++i) {
      const int src = t - lags[i];
      if (src < 0) continue;
      auto block = out.block(static_cast<Eigen::Index>(i) * M, t, M, 1);
      block = x.frame(f, src);
      if (mask != nullptr) block *= (*mask)(f, src);
    }
  }
  return out;
}

WpdStatistics MaskStatistics(const ComplexSpectrogram& x, const Mask& mask,
                             const MaskStatisticsOptions& options) {
  const int F = x.num_bins(), T = x.num_frames(), M = x.num_channels();
  if (mask.num_bins() != F || mask.num_frames() != T) {
    Fail(Errc::kShape, "mask shape does not match the spectrogram");
  }
  if (!(mask.values.array().abs().maxCoeff() > 0.0)) {
    Fail(Errc::kDegenerate, "mask is identically zero");
  }
  const auto lags = StackedLags(options.taps);
  if (T <= lags.back()) Fail(Errc::kSize, "need more frames than the tap length");

  WpdStatistics st;
  st.psd_floor = options.psd_floor_ratio * x.MeanPower();
  st.psd.resize(F, T);
  for (int f = 0; f < F; ++f) {
    for (int t = 0; t < T; ++t) {
      if (options.unit_psd) {
        st.psd(f, t) = 1.0;
      } else {
        const double w = mask(f, t);
        const double p = x.frame(f, t).squaredNorm() / M;
        st.psd(f, t) = std::max(w * w * p, st.psd_floor);
      }
    }
  }

  st.R.resize(static_cast<std::size_t>(F));
  st.K.resize(static_cast<std::size_t>(F));
  ParallelFor(static_cast<std::size_t>(F), [&](std::size_t fi) {
    const int f = static_cast<int>(fi);
    const Eigen::MatrixXcd xb = StackFrameMatrix(x, f, lags);
    const Eigen::MatrixXcd sb = StackFrameMatrix(x, f, lags, &mask.values);
    Eigen::MatrixXcd weighted = xb;
    for (int t = 0; t < T; ++t) weighted.col(t) /= st.psd(f, t);
    const Eigen::MatrixXcd r = sb * sb.adjoint();
    const Eigen::MatrixXcd k = weighted * xb.adjoint();
    st.R[fi] = HermitianMatrix(r / static_cast<double>(T));
    st.K[fi] = HermitianMatrix(k);
  });
  return st;
}

std::vector<HermitianMatrix> MixtureScm(const ComplexSpectrogram& x) {
  std::vector<HermitianMatrix> out(static_cast<std::size_t>(x.num_bins()));
  for (int f = 0; f < x.num_bins(); ++f) {
    const auto bin = x.bin(f);
    out[static_cast<std::size_t>(f)] =
        HermitianMatrix(bin * bin.adjoint() / static_cast<double>(x.num_frames()));
  }
  return out;
}

Eigen::MatrixXcd MpdrFilter(const std::vector<HermitianMatrix>& K,
                            const SteeringVector& steering, double relative_loading) {
  const auto F = static_cast<Eigen::Index>(K.size());
  if (steering.a.rows() != F) Fail(Errc::kShape, "steering/SCM frequency mismatch");
  const Eigen::Index M = steering.a.cols();
  Eigen::MatrixXcd w(F, M);
  for (Eigen::Index f = 0; f < F; ++f) {
    const Eigen::VectorXcd a = steering.a.row(f).transpose();
    const HermitianCholesky chol(K[static_cast<std::size_t>(f)], relative_loading);
    const Eigen::VectorXcd kia = chol.Solve(a);
    const cdouble denom = a.dot(kia);  // a^H K^{-1} a
    w.row(f) = (kia / denom).transpose();
  }
  return w;
}

WpdSolve SolveWpd(const HermitianMatrix& K, const HermitianMatrix& R, int ref,
                  double relative_loading) {
  if (K.dim() != R.dim()) Fail(Errc::kShape, "K and R dimensions differ");
  if (ref < 0 || ref >= K.dim()) Fail(Errc::kValue, "reference index out of range");
  WpdSolve s{HermitianCholesky(K, relative_loading), {}, {}, {}};
  s.a_inv_r = s.chol.Solve(R.matrix());
  s.trace = s.a_inv_r.trace();
  if (!(s.trace.real() > 0.0) || !std::isfinite(s.trace.real())) {
    Fail(Errc::kDegenerate, "tr(K^-1 R) is not positive");
  }
  s.w = s.a_inv_r.col(ref) / s.trace;
  return s;
}

WpdFilter WpdFilterFromStatistics(const WpdStatistics& stats, const TapConfig& taps,
                                  int num_channels, int ref, double relative_loading) {
  const int F = static_cast<int>(stats.K.size());
  const int D = StackedDim(taps, num_channels);
  WpdFilter out;
  out.taps = taps;
  out.num_channels = num_channels;
  out.w.resize(F, D);
  ParallelFor(static_cast<std::size_t>(F), [&](std::size_t f) {
    const WpdSolve s = SolveWpd(stats.K[f], stats.R[f], ref, relative_loading);
    out.w.row(static_cast<Eigen::Index>(f)) = s.w.transpose();
  });
  return out;
}

WpdFilter WpdFilterFromSteering(const std::vector<HermitianMatrix>& K,
                                const SteeringVector& steering, const TapConfig& taps,
                                double relative_loading) {
  const int F = static_cast<int>(K.size());
  const int M = static_cast<int>(steering.a.cols());
  const int D = StackedDim(taps, M);
  WpdFilter out;
  out.taps = taps;
  out.num_channels = M;
  out.w.resize(F, D);
  for (int f = 0; f < F; ++f) {
    Eigen::VectorXcd abar = Eigen::VectorXcd::Zero(D);
    abar.head(M) = steering.a.row(f).transpose();
    const HermitianCholesky chol(K[static_cast<std::size_t>(f)], relative_loading);
    const Eigen::VectorXcd kia = chol.Solve(abar);
    out.w.row(f) = (kia / abar.dot(kia)).transpose();
  }
  return out;
}

WpdFilter WpdFilterFromBeamformer(const Eigen::MatrixXcd& weights) {
  WpdFilter out;
  out.w = weights;
  out.taps = TapConfig{1, 0};
  out.num_channels = static_cast<int>(weights.cols());
  return out;
}

ComplexSpectrogram ApplyWpd(const ComplexSpectrogram& x, const WpdFilter& filter) {
  const int F = x.num_bins(), T = x.num_frames(), M = x.num_channels();
  const auto lags = StackedLags(filter.taps);
  if (filter.num_channels != M || filter.w.rows() != F ||
      filter.w.cols() != static_cast<Eigen::Index>(lags.size()) * M) {
    Fail(Errc::kShape, "filter shape does not match the spectrogram");
  }
  ComplexSpectrogram out(F, T, 1, x.n_fft(), x.hop());
  for (int f = 0; f < F; ++f) {
    const Eigen::RowVectorXcd y = filter.w.row(f).conjugate() * StackFrameMatrix(x, f, lags);
    for (int t = 0; t < T; ++t) out(f, t, 0) = y(t);
  }
  return out;
}

}  // namespace rtbeam
