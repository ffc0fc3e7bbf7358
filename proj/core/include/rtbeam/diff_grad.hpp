// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtbeam/beamform.hpp"
#include "rtbeam/mask_net.hpp"
#include "rtbeam/types.hpp"

namespace rtbeam {

inline constexpr double kSdrEps = 1e-8;

// -10 log10((e^T e + eps) / ((e - r)^T (e - r) + eps)), e = estimate.
// Throws Errc::kShape on length mismatch.
double SdrLoss(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
               double eps = kSdrEps);
Eigen::VectorXd SdrLossGrad(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                            double eps = kSdrEps);

// One (mixture, DOA, reference) training triple. Features are a pure
// function of the mixture and DOA, so they are computed once.
struct TrainingExample {
  ComplexSpectrogram x;
  Features features;
  double doa = 0.0;
  Eigen::VectorXd reference;  // single-channel time signal
};

TrainingExample MakeExample(ComplexSpectrogram x, double doa, const ArrayGeometry& geometry,
                            Eigen::VectorXd reference);

struct GraphConfig {
  TapConfig taps{3, 8};
  int ref = 0;
  double relative_loading = 1e-6;
  double psd_floor_ratio = 1e-8;
  double sdr_eps = kSdrEps;
};

// Stage-level reverse-mode record of the graph
//   params -> mask -> WPD statistics -> per-frequency solve -> filtered
//   spectrogram -> inverse STFT -> negative SDR.
// Each node owns the forward values its adjoint rule needs.
class Tape {
 public:
  enum class Op { kMaskNet, kStatistics, kWpdSolve, kApplyWpd, kInverseStft, kSdrLoss };

  struct Node {
    Op op;
    int index;  // frequency for per-frequency nodes, -1 otherwise
  };

  const std::vector<Node>& nodes() const { return nodes_; }
  // Number of times the backward pass visited each node.
  const std::vector<int>& visits() const { return visits_; }

 private:
  friend class GraphEvaluation;
  std::vector<Node> nodes_;
  std::vector<int> visits_;
};

// Forward values of one example, kept for the backward pass.
class GraphEvaluation {
 public:
  GraphEvaluation(const MaskNetParams& params, const TrainingExample& example,
                  const GraphConfig& config);

  double loss() const { return loss_; }
  const Mask& mask() const { return mask_; }
  const Eigen::VectorXd& estimate() const { return estimate_; }
  const Tape& tape() const { return tape_; }

  // dL/dtheta, accumulated into grad (resized if empty).
  void Backward(Eigen::VectorXd& grad);

 private:
  const MaskNetParams& params_;
  const TrainingExample& example_;
  GraphConfig config_;
  MaskNetCache net_cache_;
  Mask mask_;
  WpdStatistics stats_;
  std::vector<WpdSolve> solves_;
  ComplexSpectrogram dhat_;
  Eigen::VectorXd estimate_;
  double loss_ = 0.0;
  Tape tape_;
};

// Forward-only loss of one example.
double EvaluateLoss(const MaskNetParams& params, const TrainingExample& example,
                    const GraphConfig& config);

struct LossAndGrad {
  double loss = 0.0;        // mean over the batch
  Eigen::VectorXd grad;     // mean over the batch
};

// Batch items may run in parallel; per-item gradients are summed in batch
// order so the result does not depend on the thread count.
LossAndGrad ComputeLossAndGrad(const MaskNetParams& params,
                               const std::vector<const TrainingExample*>& batch,
                               const GraphConfig& config);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

// Decoupled-weight-decay Adam (AdamW).
void AdamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
              const AdamOptions& options);

struct GradCheckEntry {
  Eigen::Index index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double median_rel_error = 0.0;
  double max_rel_error = 0.0;
};

// Central finite differences on `count` randomly chosen parameters.
// rel_error = |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport GradCheck(const MaskNetParams& params,
                          const std::vector<const TrainingExample*>& batch,
                          const GraphConfig& config, int count, double step,
                          std::uint64_t seed);

std::string FormatGradCheck(const GradCheckReport& report);

}  // namespace rtbeam
