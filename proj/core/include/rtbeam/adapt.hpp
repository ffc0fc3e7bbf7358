// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rtbeam/diff_grad.hpp"
#include "rtbeam/doa_music.hpp"
#include "rtbeam/fastmnmf.hpp"
#include "rtbeam/mask_net.hpp"
#include "rtbeam/room_sim.hpp"
#include "rtbeam/stft.hpp"
#include "rtbeam/wpe.hpp"

namespace rtbeam {

// Reference minted at run time from blind dereverberation and separation.
struct PseudoLabel {
  ComplexSpectrogram mixture;  // STFT of the mixture window
  Eigen::VectorXd reference;   // minted target, time domain
  double doa = 0.0;            // radians
  double quality = 0.0;        // dB
  int window = 0;              // index of the source window
  int source = 0;              // index within the separated set
};

// Everything a scorer may look at for one candidate.
struct ScoreContext {
  const Eigen::VectorXd& candidate;
  const std::vector<Eigen::VectorXd>& separated;  // includes the candidate
  int index;                 // position of the candidate in `separated`
  Eigen::Index window_begin; // first mixture sample of the window
};

class QualityScorer {
 public:
  virtual ~QualityScorer() = default;
  virtual std::string name() const = 0;
  virtual double Score(const ScoreContext& context) const = 0;
};

// Intrusive: best SI-SDR of the candidate against the known references of
// the window.
class OracleScorer final : public QualityScorer {
 public:
  explicit OracleScorer(std::vector<Eigen::VectorXd> references)
      : references_(std::move(references)) {}
  std::string name() const override { return "oracle"; }
  double Score(const ScoreContext& context) const override;

 private:
  std::vector<Eigen::VectorXd> references_;
};

// Blind: candidate energy over the energy explained by the other separated
// signals, measured block-wise.
class HeuristicScorer final : public QualityScorer {
 public:
  explicit HeuristicScorer(int block = 512) : block_(block) {}
  std::string name() const override { return "heuristic"; }
  double Score(const ScoreContext& context) const override;

 private:
  int block_;
};

// Always returns a fixed value; closes or opens the gate in tests.
class ConstantScorer final : public QualityScorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  std::string name() const override { return "constant"; }
  double Score(const ScoreContext&) const override { return value_; }

 private:
  double value_;
};

double OracleScore(const Eigen::VectorXd& candidate, const Eigen::VectorXd& reference);
double HeuristicScore(const Eigen::VectorXd& candidate,
                      const std::vector<Eigen::VectorXd>& others, int block = 512);

struct MintOptions {
  double window_s = 4.0;
  double alpha_db = 10.0;
  StftConfig stft;
  WpeOptions wpe;
  FastMnmfOptions mnmf;
  MusicOptions music;
  int ref = 0;
};

// Non-overlapping windows -> WPE -> FastMNMF -> score -> gate -> DOA.
std::vector<PseudoLabel> MintPseudoLabels(const TimeSignal& mixture, const ArrayGeometry& geometry,
                                          const QualityScorer& scorer, const MintOptions& options);

struct TrainOptions {
  int steps = 100;
  int batch = 4;
  AdamOptions adam{.lr = 4e-5};
  GraphConfig graph;
  std::uint64_t seed = 0;
  // Called after each step with (step, batch loss).
  std::function<void(int, double)> on_step;
  // Sees each batch before its update.
  std::function<void(int, const std::vector<const TrainingExample*>&)> on_batch;
  std::function<void(const std::string&)> on_warning;
};

// Plain minibatch training over a fixed example set (seeded reshuffle per
// epoch).
MaskNetParams Pretrain(MaskNetParams params, const std::vector<TrainingExample>& examples,
                       const TrainOptions& options);

// Batches take ceil(batch / 2) pseudo-labelled items and floor(batch / 2)
// replay items. An empty replay set is allowed with a warning.
MaskNetParams FineTune(MaskNetParams params, const std::vector<PseudoLabel>& labels,
                       const std::vector<TrainingExample>& replay, const ArrayGeometry& geometry,
                       const TrainOptions& options);

// One training triple per source of a simulated scene.
std::vector<TrainingExample> SceneExamples(const SimResult& sim, const ArrayGeometry& geometry,
                                           const StftConfig& stft, int ref);

// Mask -> WPD -> iSTFT estimate of the source at `doa`.
Eigen::VectorXd EnhanceSource(const MaskNetParams& params, const ComplexSpectrogram& x,
                              double doa, const ArrayGeometry& geometry, int out_len,
                              const GraphConfig& graph);

// Single-writer, many-reader parameter hand-off. Readers get a complete
// immutable snapshot; Publish replaces it atomically.
class ParamStore {
 public:
  explicit ParamStore(MaskNetParams initial)
      : current_(std::make_shared<const MaskNetParams>(std::move(initial))) {}
  std::shared_ptr<const MaskNetParams> Snapshot() const {
    std::lock_guard<std::mutex> lock(mu_);
    return current_;
  }
  void Publish(MaskNetParams next) {
    auto fresh = std::make_shared<const MaskNetParams>(std::move(next));
    std::lock_guard<std::mutex> lock(mu_);
    current_ = std::move(fresh);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const MaskNetParams> current_;
};

}  // namespace rtbeam
