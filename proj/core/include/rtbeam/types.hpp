// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace rtbeam {

using cdouble = std::complex<double>;

inline constexpr int kSampleRate = 16000;
inline constexpr double kSpeedOfSound = 343.0;

// Multichannel time-domain signal, S samples by M channels.
struct TimeSignal {
  Eigen::MatrixXd samples;
  int sample_rate = kSampleRate;

  TimeSignal() = default;
  explicit TimeSignal(Eigen::MatrixXd s) : samples(std::move(s)) {}
  TimeSignal(Eigen::Index num_samples, Eigen::Index num_channels)
      : samples(Eigen::MatrixXd::Zero(num_samples, num_channels)) {}

  Eigen::Index num_samples() const { return samples.rows(); }
  Eigen::Index num_channels() const { return samples.cols(); }
  Eigen::VectorXd channel(Eigen::Index m) const { return samples.col(m); }
  bool AllFinite() const { return samples.allFinite(); }
};

// F x T x M complex STFT coefficients. Storage is frequency-major with the
// channel index fastest, so the M-vector x_{ft} is contiguous.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(int num_bins, int num_frames, int num_channels,
                     int n_fft = 0, int hop = 0)
      : F_(num_bins), T_(num_frames), M_(num_channels), n_fft_(n_fft),
        hop_(hop),
        data_(static_cast<std::size_t>(num_bins) * num_frames * num_channels) {}

  int num_bins() const { return F_; }
  int num_frames() const { return T_; }
  int num_channels() const { return M_; }
  int n_fft() const { return n_fft_; }
  int hop() const { return hop_; }

  cdouble& operator()(int f, int t, int m) { return data_[Index(f, t, m)]; }
  const cdouble& operator()(int f, int t, int m) const {
    return data_[Index(f, t, m)];
  }

  Eigen::Map<Eigen::VectorXcd> frame(int f, int t) {
    return {data_.data() + Index(f, t, 0), M_};
  }
  Eigen::Map<const Eigen::VectorXcd> frame(int f, int t) const {
    return {data_.data() + Index(f, t, 0), M_};
  }

  // M x T view of one frequency bin (column t is x_{ft}).
  Eigen::Map<Eigen::MatrixXcd> bin(int f) {
    return {data_.data() + Index(f, 0, 0), M_, T_};
  }
  Eigen::Map<const Eigen::MatrixXcd> bin(int f) const {
    return {data_.data() + Index(f, 0, 0), M_, T_};
  }

  std::vector<cdouble>& raw() { return data_; }
  const std::vector<cdouble>& raw() const { return data_; }

  bool AllFinite() const;
  // Copy of one channel as an F x T x 1 spectrogram.
  ComplexSpectrogram Channel(int m) const;
  // Frames [t0, t0 + count).
  ComplexSpectrogram Frames(int t0, int count) const;
  // Mean over all bins of (1/M) sum_m |x|^2.
  double MeanPower() const;

 private:
  std::size_t Index(int f, int t, int m) const {
    return (static_cast<std::size_t>(f) * T_ + t) * M_ + m;
  }

  int F_ = 0, T_ = 0, M_ = 0;
  int n_fft_ = 0, hop_ = 0;
  std::vector<cdouble> data_;
};

// Time-frequency mask, F x T, entries in [0, 1].
struct Mask {
  Eigen::MatrixXd values;

  int num_bins() const { return static_cast<int>(values.rows()); }
  int num_frames() const { return static_cast<int>(values.cols()); }
  double operator()(int f, int t) const { return values(f, t); }
};

}  // namespace rtbeam
