// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <span>

#include "rtbeam/types.hpp"

namespace rtbeam {

// Real-input FFT of fixed size n (backed by FFTW, estimate-mode plans, so the
// arithmetic is identical on every call).
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;

  int size() const { return n_; }
  int num_bins() const { return n_ / 2 + 1; }

  // out[k] = sum_n in[n] exp(-j 2 pi k n / N), k = 0..N/2.
  void Forward(std::span<const double> in, std::span<cdouble> out) const;
  // out[n] = (1/N) sum over the Hermitian extension of in. Imaginary parts
  // of the DC and Nyquist bins are ignored.
  void Inverse(std::span<const cdouble> in, std::span<double> out) const;

 private:
  struct Impl;
  int n_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rtbeam
