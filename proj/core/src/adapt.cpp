// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include "rtbeam/error.hpp"
#include "rtbeam/metrics.hpp"

namespace rtbeam {
namespace {

double RatioToDb(double num, double den) {
  return std::clamp(10.0 * std::log10(num / den), -kMetricCapDb, kMetricCapDb);
}

}  // namespace

double OracleScore(const Eigen::VectorXd& candidate, const Eigen::VectorXd& reference) {
  return SiSdr(candidate, reference);
}

double OracleScorer::Score(const ScoreContext& ctx) const {
  const Eigen::Index n = ctx.candidate.size();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& ref : references_) {
    if (ctx.window_begin + n > ref.size()) Fail(Errc::kShape, "oracle reference shorter than window");
    const Eigen::VectorXd seg = ref.segment(ctx.window_begin, n);
    if (seg.squaredNorm() == 0.0) continue;
    best = std::max(best, OracleScore(ctx.candidate, seg));
  }
  return best;
}

double HeuristicScore(const Eigen::VectorXd& candidate, const std::vector<Eigen::VectorXd>& others,
                      int block) {
  constexpr double kEps = 1e-12;
  const double energy = candidate.squaredNorm();
  if (others.empty()) return RatioToDb(energy, kEps);
  double leakage = 0.0;
  const Eigen::Index n = candidate.size();
  const auto k = static_cast<Eigen::Index>(others.size());
  for (Eigen::Index b = 0; b < n; b += block) {
    const Eigen::Index len = std::min<Eigen::Index>(block, n - b);
    Eigen::MatrixXd basis(len, k);
    for (Eigen::Index j = 0; j < k; ++j) basis.col(j) = others[static_cast<std::size_t>(j)].segment(b, len);
    const Eigen::VectorXd seg = candidate.segment(b, len);
    // Least-squares part of the block explained by the other signals.
    const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(seg);
    leakage += (basis * coef).squaredNorm();
  }
  return RatioToDb(energy, kEps + leakage);
}

double HeuristicScorer::Score(const ScoreContext& ctx) const {
  std::vector<Eigen::VectorXd> others;
  for (std::size_t i = 0; i < ctx.separated.size(); ++i) {
    if (static_cast<int>(i) != ctx.index) others.push_back(ctx.separated[i]);
  }
  return HeuristicScore(ctx.candidate, others, block_);
}

std::vector<PseudoLabel> MintPseudoLabels(const TimeSignal& mixture, const ArrayGeometry& geometry,
                                          const QualityScorer& scorer, const MintOptions& o) {
  const auto window = static_cast<Eigen::Index>(std::llround(o.window_s * mixture.sample_rate));
  if (window < o.stft.n_fft) Fail(Errc::kValue, "window shorter than one STFT frame");
  std::vector<PseudoLabel> labels;
  const Eigen::Index num_windows = mixture.num_samples() / window;
  for (Eigen::Index wi = 0; wi < num_windows; ++wi) {
    const Eigen::Index begin = wi * window;
    TimeSignal seg(mixture.samples.middleRows(begin, window));
    seg.sample_rate = mixture.sample_rate;
    const ComplexSpectrogram x = StftForward(seg, o.stft);
    const ComplexSpectrogram dry = WpeDereverb(x, o.wpe).dry;
    FastMnmfModel model =
        FastMnmfInit(dry, o.mnmf.num_sources, o.mnmf.num_bases, o.mnmf.seed + static_cast<std::uint64_t>(wi));
    model = FastMnmfFit(dry, std::move(model), o.mnmf.iterations);
    const auto images = FastMnmfSourceImages(dry, model);

    std::vector<Eigen::VectorXd> separated;
    for (const auto& img : images) {
      separated.push_back(StftInverse(img, static_cast<int>(window)).samples.col(o.ref));
    }
    for (std::size_t n = 0; n < separated.size(); ++n) {
      const double q = scorer.Score({separated[n], separated, static_cast<int>(n), begin});
      if (!(q >= o.alpha_db)) continue;
      MusicOptions music = o.music;
      music.num_sources = 1;
      PseudoLabel label;
      label.mixture = x;
      label.reference = separated[n];
      label.doa = DoaMusic(images[n], geometry, music).front();
      label.quality = q;
      label.window = static_cast<int>(wi);
      label.source = static_cast<int>(n);
      labels.push_back(std::move(label));
    }
  }
  return labels;
}

namespace {

// Endless seeded reshuffling of [0, n).
class Sampler {
 public:
  Sampler(std::size_t n, std::mt19937_64& rng) : order_(n), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Reshuffle();
  }
  std::size_t Next() {
    if (pos_ == order_.size()) Reshuffle();
    return order_[pos_++];
  }

 private:
  void Reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    pos_ = 0;
  }
  std::vector<std::size_t> order_;
  std::mt19937_64& rng_;
  std::size_t pos_ = 0;
};

void Warn(const TrainOptions& o, const std::string& msg) {
  if (o.on_warning) {
    o.on_warning(msg);
  } else {
    std::cerr << "warning: " << msg << "\n";
  }
}

void Step(MaskNetParams& params, AdamState& state, const std::vector<const TrainingExample*>& batch,
          const TrainOptions& o, int step) {
  if (o.on_batch) o.on_batch(step, batch);
  const LossAndGrad lg = ComputeLossAndGrad(params, batch, o.graph);
  if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) Fail(Errc::kDivergence, "non-finite loss or gradient");
  AdamStep(params.theta, lg.grad, state, o.adam);
  if (o.on_step) o.on_step(step, lg.loss);
}

}  // namespace

MaskNetParams Pretrain(MaskNetParams params, const std::vector<TrainingExample>& examples,
                       const TrainOptions& o) {
  if (o.steps <= 0) return params;
  if (examples.empty()) Fail(Errc::kValue, "no training examples");
  if (o.batch < 1) Fail(Errc::kValue, "batch must be positive");
  std::mt19937_64 rng(o.seed);
  Sampler sampler(examples.size(), rng);
  AdamState state;
  std::vector<const TrainingExample*> batch;
  for (int s = 0; s < o.steps; ++s) {
    batch.clear();
    for (int b = 0; b < o.batch; ++b) batch.push_back(&examples[sampler.Next()]);
    Step(params, state, batch, o, s);
  }
  return params;
}

MaskNetParams FineTune(MaskNetParams params, const std::vector<PseudoLabel>& labels,
                       const std::vector<TrainingExample>& replay, const ArrayGeometry& geometry,
                       const TrainOptions& o) {
  if (o.steps <= 0) return params;
  if (labels.empty()) Fail(Errc::kValue, "fine-tuning needs at least one pseudo-label");
  if (o.batch < 1) Fail(Errc::kValue, "batch must be positive");
  if (replay.empty()) Warn(o, "replay set is empty; fine-tuning on pseudo-labels only");

  std::vector<TrainingExample> minted;
  minted.reserve(labels.size());
  for (const auto& l : labels) minted.push_back(MakeExample(l.mixture, l.doa, geometry, l.reference));

  std::mt19937_64 rng(o.seed);
  Sampler label_sampler(minted.size(), rng);
  Sampler replay_sampler(std::max<std::size_t>(replay.size(), 1), rng);
  const int n_replay = replay.empty() ? 0 : o.batch / 2;
  AdamState state;
  std::vector<const TrainingExample*> batch;
  for (int s = 0; s < o.steps; ++s) {
    batch.clear();
    for (int b = 0; b < o.batch - n_replay; ++b) batch.push_back(&minted[label_sampler.Next()]);
    for (int b = 0; b < n_replay; ++b) batch.push_back(&replay[replay_sampler.Next()]);
    Step(params, state, batch, o, s);
  }
  return params;
}

std::vector<TrainingExample> SceneExamples(const SimResult& sim, const ArrayGeometry& geometry,
                                           const StftConfig& stft, int ref) {
  const ComplexSpectrogram x = StftForward(sim.mixture, stft);
  std::vector<TrainingExample> out;
  for (std::size_t n = 0; n < sim.references.size(); ++n) {
    out.push_back(MakeExample(x, sim.doas[n], geometry, sim.references[n].samples.col(ref)));
  }
  return out;
}

Eigen::VectorXd EnhanceSource(const MaskNetParams& params, const ComplexSpectrogram& x, double doa,
                              const ArrayGeometry& geometry, int out_len, const GraphConfig& graph) {
  TrainingExample ex = MakeExample(x, doa, geometry, Eigen::VectorXd::Zero(out_len));
  // The loss is irrelevant here; a zero reference only affects it.
  return GraphEvaluation(params, ex, graph).estimate();
}

}  // namespace rtbeam
