// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>

#include "rtbeam/geometry.hpp"
#include "rtbeam/types.hpp"

namespace rtbeam {

// Per-bin features, stored as a P x (F*T) matrix; column f*T + t holds bin
// (f, t).
struct Features {
  int num_bins = 0;
  int num_frames = 0;
  Eigen::MatrixXd data;

  int dim() const { return static_cast<int>(data.rows()); }
  double operator()(int f, int t, int p) const { return data(p, static_cast<Eigen::Index>(f) * num_frames + t); }
};

int FeatureDim(int num_channels);

// Per bin: log(|x_m| + 1e-8) for each channel, cos and sin of the phase
// difference to channel 0 for m >= 1, and log(|DSB| + 1e-8) for the
// delay-and-sum output steered to doa.
Features ExtractFeatures(const ComplexSpectrogram& x, double doa, const ArrayGeometry& geometry);

// Flat parameter vector with named blocks:
//   mask path:      W1 (H x In), b1 (H), W2 (H x H), b2 (H), w3 (1 x H), b3 (1)
//   attractor path: Wa (H x 2), ba (H), Wg (H x H), bg (H), Wb (H x H), bb (H)
// with In = FeatureDim(M) * (2C + 1). Matrices are column-major.
class MaskNetParams {
 public:
  MaskNetParams() = default;
  MaskNetParams(int num_channels, int hidden, int context);

  int num_channels() const { return num_channels_; }
  int hidden() const { return hidden_; }
  int context() const { return context_; }
  int input_dim() const { return FeatureDim(num_channels_) * (2 * context_ + 1); }
  Eigen::Index size() const { return theta.size(); }

  // Offsets of each block inside theta.
  struct Layout {
    Eigen::Index w1, b1, w2, b2, w3, b3, wa, ba, wg, bg, wb, bb, total;
  };
  Layout layout() const;

  Eigen::VectorXd theta;

 private:
  int num_channels_ = 0;
  int hidden_ = 0;
  int context_ = 0;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
MaskNetParams InitMaskNet(int num_channels, int hidden, int context, std::uint64_t seed);

// Activations kept for the backward pass.
struct MaskNetCache {
  Eigen::MatrixXd z;       // In x N context inputs
  Eigen::MatrixXd h1;      // tanh(W1 z + b1)
  Eigen::MatrixXd h1c;     // gamma .* h1 + beta
  Eigen::MatrixXd h2;      // tanh(W2 h1c + b2)
  Eigen::RowVectorXd out;  // sigmoid(w3 h2 + b3)
  Eigen::Vector2d direction;
  Eigen::VectorXd e;       // attractor hidden
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
};

// Mask in (0, 1). Context frames past either edge are zero.
Mask MaskNetForward(const MaskNetParams& params, const Features& features, double doa,
                    MaskNetCache* cache = nullptr);

// Accumulates dL/dtheta into grad given dL/dmask (F x T).
void MaskNetBackward(const MaskNetParams& params, const MaskNetCache& cache,
                     const Eigen::MatrixXd& grad_mask, Eigen::VectorXd& grad);

// Layout (little-endian): "RTBMASK1", u32 version, u32 M, u32 H, u32 C,
// u32 count, then count f64 values of theta.
void SaveMaskNet(const MaskNetParams& params, const std::filesystem::path& path);
MaskNetParams LoadMaskNet(const std::filesystem::path& path);

}  // namespace rtbeam
