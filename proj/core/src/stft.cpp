// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "rtbeam/error.hpp"
#include "rtbeam/fft.hpp"

namespace rtbeam {

// ---------------------------------------------------------------------------
// RealFft

namespace {
std::mutex& PlannerMutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace

struct RealFft::Impl {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
    fftw_free(rbuf);
    fftw_free(cbuf);
  }
};

RealFft::RealFft(int n) : n_(n), impl_(std::make_unique<Impl>()) {
  if (n < 2) Fail(Errc::kSize, "FFT size must be at least 2");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  impl_->rbuf = fftw_alloc_real(static_cast<std::size_t>(n));
  impl_->cbuf = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  impl_->forward = fftw_plan_dft_r2c_1d(n, impl_->rbuf, impl_->cbuf, FFTW_ESTIMATE);
  impl_->inverse = fftw_plan_dft_c2r_1d(n, impl_->cbuf, impl_->rbuf, FFTW_ESTIMATE);
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::Forward(std::span<const double> in, std::span<cdouble> out) const {
  std::copy(in.begin(), in.end(), impl_->rbuf);
  fftw_execute(impl_->forward);
  for (int k = 0; k < num_bins(); ++k) {
    out[static_cast<std::size_t>(k)] = {impl_->cbuf[k][0], impl_->cbuf[k][1]};
  }
}

void RealFft::Inverse(std::span<const cdouble> in, std::span<double> out) const {
  for (int k = 0; k < num_bins(); ++k) {
    impl_->cbuf[k][0] = in[static_cast<std::size_t>(k)].real();
    impl_->cbuf[k][1] = in[static_cast<std::size_t>(k)].imag();
  }
  // c2r ignores these, but keep the buffer in a canonical state.
  impl_->cbuf[0][1] = 0.0;
  impl_->cbuf[n_ / 2][1] = 0.0;
  fftw_execute(impl_->inverse);
  const double scale = 1.0 / n_;
  for (int i = 0; i < n_; ++i) out[static_cast<std::size_t>(i)] = impl_->rbuf[i] * scale;
}

// ---------------------------------------------------------------------------
// ComplexSpectrogram helpers

bool ComplexSpectrogram::AllFinite() const {
  for (const auto& v : data_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

ComplexSpectrogram ComplexSpectrogram::Channel(int m) const {
  ComplexSpectrogram out(F_, T_, 1, n_fft_, hop_);
  for (int f = 0; f < F_; ++f)
    for (int t = 0; t < T_; ++t) out(f, t, 0) = (*this)(f, t, m);
  return out;
}

ComplexSpectrogram ComplexSpectrogram::Frames(int t0, int count) const {
  if (t0 < 0 || count < 1 || t0 + count > T_) Fail(Errc::kSize, "frame range out of bounds");
  ComplexSpectrogram out(F_, count, M_, n_fft_, hop_);
  for (int f = 0; f < F_; ++f)
    for (int t = 0; t < count; ++t)
      for (int m = 0; m < M_; ++m) out(f, t, m) = (*this)(f, t0 + t, m);
  return out;
}

double ComplexSpectrogram::MeanPower() const {
  if (data_.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& v : data_) acc += std::norm(v);
  return acc / static_cast<double>(data_.size());
}

// ---------------------------------------------------------------------------
// STFT

std::vector<double> SqrtHannWindow(int n_fft) {
  std::vector<double> w(static_cast<std::size_t>(n_fft));
  for (int n = 0; n < n_fft; ++n) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_fft);
    w[static_cast<std::size_t>(n)] = std::sqrt(hann);
  }
  return w;
}

int NumStftFrames(int num_samples, int hop) {
  return (num_samples + hop - 1) / hop + 1;
}

namespace {

void CheckGeometry(int n_fft, int hop) {
  if (n_fft < 4 || (n_fft & (n_fft - 1)) != 0) {
    Fail(Errc::kSize, "n_fft must be a power of two >= 4");
  }
  if (hop < 1 || n_fft % hop != 0) Fail(Errc::kSize, "hop must divide n_fft");
}

}  // namespace

ComplexSpectrogram StftForward(const TimeSignal& signal, int n_fft, int hop) {
  CheckGeometry(n_fft, hop);
  const int S = static_cast<int>(signal.num_samples());
  const int M = static_cast<int>(signal.num_channels());
  const int pad = n_fft / 2;
  if (S <= pad || M < 1) {
    Fail(Errc::kSize, "signal of " + std::to_string(S) +
                          " samples is shorter than one frame after padding");
  }
  const int T = NumStftFrames(S, hop);
  const int F = n_fft / 2 + 1;
  const int padded_len = (T - 1) * hop + n_fft;
  const auto window = SqrtHannWindow(n_fft);

  ComplexSpectrogram out(F, T, M, n_fft, hop);
  RealFft fft(n_fft);
  std::vector<double> padded(static_cast<std::size_t>(padded_len));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<cdouble> bins(static_cast<std::size_t>(F));

  for (int m = 0; m < M; ++m) {
    std::fill(padded.begin(), padded.end(), 0.0);
    for (int i = 0; i < padded_len; ++i) {
      int s = i - pad;
      if (s < 0) {
        s = -s;
      } else if (s >= S) {
        // Mirror only the n_fft / 2 samples after the end; zeros beyond.
        if (s - S >= pad) continue;
        s = 2 * (S - 1) - s;
        if (s < 0) continue;
      }
      padded[static_cast<std::size_t>(i)] = signal.samples(s, m);
    }
    for (int t = 0; t < T; ++t) {
      for (int n = 0; n < n_fft; ++n) {
        frame[static_cast<std::size_t>(n)] =
            window[static_cast<std::size_t>(n)] *
            padded[static_cast<std::size_t>(t * hop + n)];
      }
      fft.Forward(frame, bins);
      for (int f = 0; f < F; ++f) out(f, t, m) = bins[static_cast<std::size_t>(f)];
    }
  }
  return out;
}

TimeSignal StftInverse(const ComplexSpectrogram& spec, int out_len) {
  if (out_len <= 0) Fail(Errc::kSize, "out_len must be positive");
  const int n_fft = spec.n_fft();
  const int hop = spec.hop();
  CheckGeometry(n_fft, hop);
  const int F = spec.num_bins();
  const int T = spec.num_frames();
  const int M = spec.num_channels();
  if (F != n_fft / 2 + 1) Fail(Errc::kShape, "bin count does not match n_fft");
  const int pad = n_fft / 2;
  const int padded_len = (T - 1) * hop + n_fft;
  const auto window = SqrtHannWindow(n_fft);

  std::vector<double> envelope(static_cast<std::size_t>(padded_len), 0.0);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < n_fft; ++n)
      envelope[static_cast<std::size_t>(t * hop + n)] +=
          window[static_cast<std::size_t>(n)] * window[static_cast<std::size_t>(n)];

  TimeSignal out(out_len, M);
  RealFft fft(n_fft);
  std::vector<double> acc(static_cast<std::size_t>(padded_len));
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<cdouble> bins(static_cast<std::size_t>(F));
  for (int m = 0; m < M; ++m) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int t = 0; t < T; ++t) {
      for (int f = 0; f < F; ++f) bins[static_cast<std::size_t>(f)] = spec(f, t, m);
      fft.Inverse(bins, frame);
      for (int n = 0; n < n_fft; ++n) {
        acc[static_cast<std::size_t>(t * hop + n)] +=
            window[static_cast<std::size_t>(n)] * frame[static_cast<std::size_t>(n)];
      }
    }
    const int usable = std::min(out_len, padded_len - pad);
    for (int s = 0; s < usable; ++s) {
      const double env = envelope[static_cast<std::size_t>(s + pad)];
      out.samples(s, m) = env > 1e-10 ? acc[static_cast<std::size_t>(s + pad)] / env : 0.0;
    }
  }
  return out;
}

Eigen::MatrixXcd StftInverseAdjoint(const Eigen::VectorXd& grad_out,
                                    int num_bins, int num_frames, int n_fft,
                                    int hop) {
  CheckGeometry(n_fft, hop);
  const int F = num_bins;
  const int T = num_frames;
  const int pad = n_fft / 2;
  const int padded_len = (T - 1) * hop + n_fft;
  const int out_len = static_cast<int>(grad_out.size());
  const auto window = SqrtHannWindow(n_fft);

  std::vector<double> envelope(static_cast<std::size_t>(padded_len), 0.0);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < n_fft; ++n)
      envelope[static_cast<std::size_t>(t * hop + n)] +=
          window[static_cast<std::size_t>(n)] * window[static_cast<std::size_t>(n)];

  // Gradient w.r.t. the overlap-add accumulator.
  std::vector<double> g_acc(static_cast<std::size_t>(padded_len), 0.0);
  const int usable = std::min(out_len, padded_len - pad);
  for (int s = 0; s < usable; ++s) {
    const double env = envelope[static_cast<std::size_t>(s + pad)];
    if (env > 1e-10) g_acc[static_cast<std::size_t>(s + pad)] = grad_out(s) / env;
  }

  Eigen::MatrixXcd grad(F, T);
  RealFft fft(n_fft);
  std::vector<double> frame(static_cast<std::size_t>(n_fft));
  std::vector<cdouble> bins(static_cast<std::size_t>(F));
  const double inv_n = 1.0 / n_fft;
  for (int t = 0; t < T; ++t) {
    for (int n = 0; n < n_fft; ++n) {
      frame[static_cast<std::size_t>(n)] =
          window[static_cast<std::size_t>(n)] * g_acc[static_cast<std::size_t>(t * hop + n)];
    }
    fft.Forward(frame, bins);
    // y[n] = (1/N)[X_0 + (-1)^n X_{N/2} + 2 sum_k Re(X_k e^{j2pi kn/N})],
    // so dL/dRe X_k + j dL/dIm X_k = (2/N) rfft(g)_k for interior bins.
    for (int f = 0; f < F; ++f) {
      const cdouble b = bins[static_cast<std::size_t>(f)];
      if (f == 0 || f == F - 1) {
        grad(f, t) = {b.real() * inv_n, 0.0};
      } else {
        grad(f, t) = 2.0 * inv_n * b;
      }
    }
  }
  return grad;
}

}  // namespace rtbeam
