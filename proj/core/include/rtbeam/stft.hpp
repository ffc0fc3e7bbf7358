// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "rtbeam/types.hpp"

namespace rtbeam {

struct StftConfig {
  int n_fft = 256;
  int hop = 64;
};

// Square root of the periodic Hann window; squared, it overlap-adds to a
// constant at hop = n_fft / 4.
std::vector<double> SqrtHannWindow(int n_fft);

// Number of frames produced for a signal of num_samples samples.
int NumStftFrames(int num_samples, int hop);

// One-sided STFT of every channel. The signal is reflection-padded by
// n_fft / 2 on both ends; the output has n_fft / 2 + 1 bins and
// ceil(S / hop) + 1 frames.
ComplexSpectrogram StftForward(const TimeSignal& signal, int n_fft, int hop);
inline ComplexSpectrogram StftForward(const TimeSignal& signal,
                                      const StftConfig& cfg) {
  return StftForward(signal, cfg.n_fft, cfg.hop);
}

// Weighted overlap-add inverse. Linear in spec; the result is cut or
// zero-extended to out_len samples.
TimeSignal StftInverse(const ComplexSpectrogram& spec, int out_len);

// Adjoint of StftInverse restricted to one channel: given dL/dy for the
// real output y, returns G with G(f,t) = dL/dRe X(f,t) + j dL/dIm X(f,t).
// Used by the gradient engine.
Eigen::MatrixXcd StftInverseAdjoint(const Eigen::VectorXd& grad_out,
                                    int num_bins, int num_frames, int n_fft,
                                    int hop);

}  // namespace rtbeam
