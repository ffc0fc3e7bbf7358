// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "rtbeam/types.hpp"

namespace rtbeam {

inline constexpr double kMnmfFloor = 1e-10;

// FastMNMF parameters. Source n has PSD lambda_n = U_n^T V_n (F x T) and
// SCM G_nf = Q_f^{-1} Diag(g_n) Q_f^{-H}.
struct FastMnmfModel {
  int num_sources = 0;  // N
  int num_bases = 0;    // K
  int num_bins = 0;     // F
  int num_frames = 0;   // T
  int num_channels = 0; // M
  std::vector<Eigen::MatrixXd> U;  // N of K x F
  std::vector<Eigen::MatrixXd> V;  // N of K x T
  std::vector<Eigen::MatrixXcd> Q; // F of M x M
  Eigen::MatrixXd G;               // N x M

  Eigen::MatrixXd Lambda(int n) const { return U[static_cast<std::size_t>(n)].transpose() * V[static_cast<std::size_t>(n)]; }
};

struct FastMnmfOptions {
  int num_sources = 2;
  int num_bases = 4;
  int iterations = 100;
  std::uint64_t seed = 0;
};

FastMnmfModel FastMnmfInit(const ComplexSpectrogram& x, int num_sources, int num_bases,
                           std::uint64_t seed);

// Runs `sweeps` update sweeps. When `trace` is given, the log-likelihood
// after each sweep is appended to it. Throws Errc::kDivergence on a
// non-finite likelihood and Errc::kSingular if a projection system is
// singular.
FastMnmfModel FastMnmfFit(const ComplexSpectrogram& x, FastMnmfModel model, int sweeps,
                          std::vector<double>* trace = nullptr);

double FastMnmfLogLikelihood(const ComplexSpectrogram& x, const FastMnmfModel& model);

// Single-channel source estimates at the reference channel; they sum to
// the reference channel of x.
std::vector<ComplexSpectrogram> FastMnmfSeparate(const ComplexSpectrogram& x,
                                                 const FastMnmfModel& model, int ref);

// Multichannel source images Q^{-1} Diag(r_n) Q x.
std::vector<ComplexSpectrogram> FastMnmfSourceImages(const ComplexSpectrogram& x,
                                                     const FastMnmfModel& model);

void SaveFastMnmfModel(const FastMnmfModel& model, const std::filesystem::path& path);
FastMnmfModel LoadFastMnmfModel(const std::filesystem::path& path);

}  // namespace rtbeam
