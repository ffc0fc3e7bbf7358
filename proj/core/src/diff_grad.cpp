// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/diff_grad.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "rtbeam/error.hpp"
#include "rtbeam/parallel.hpp"
#include "rtbeam/stft.hpp"

namespace rtbeam {

double SdrLoss(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference, double eps) {
  if (estimate.size() != reference.size()) Fail(Errc::kShape, "SDR loss length mismatch");
  const double num = estimate.squaredNorm() + eps;
  const double den = (estimate - reference).squaredNorm() + eps;
  return -10.0 * std::log10(num / den);
}

Eigen::VectorXd SdrLossGrad(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference,
                            double eps) {
  if (estimate.size() != reference.size()) Fail(Errc::kShape, "SDR loss length mismatch");
  const Eigen::VectorXd err = estimate - reference;
  const double num = estimate.squaredNorm() + eps;
  const double den = err.squaredNorm() + eps;
  const double k = -10.0 / std::numbers::ln10;
  return k * (2.0 / num * estimate - 2.0 / den * err);
}

TrainingExample MakeExample(ComplexSpectrogram x, double doa, const ArrayGeometry& geometry,
                            Eigen::VectorXd reference) {
  TrainingExample ex;
  ex.features = ExtractFeatures(x, doa, geometry);
  ex.x = std::move(x);
  ex.doa = doa;
  ex.reference = std::move(reference);
  return ex;
}

GraphEvaluation::GraphEvaluation(const MaskNetParams& params, const TrainingExample& example,
                                 const GraphConfig& config)
    : params_(params), example_(example), config_(config) {
  const ComplexSpectrogram& x = example.x;
  const int F = x.num_bins();

  tape_.nodes_.push_back({Tape::Op::kMaskNet, -1});
  mask_ = MaskNetForward(params, example.features, example.doa, &net_cache_);

  tape_.nodes_.push_back({Tape::Op::kStatistics, -1});
  MaskStatisticsOptions opts;
  opts.taps = config.taps;
  opts.psd_floor_ratio = config.psd_floor_ratio;
  stats_ = MaskStatistics(x, mask_, opts);

  WpdFilter filter;
  filter.taps = config.taps;
  filter.num_channels = x.num_channels();
  filter.w.resize(F, StackedDim(config.taps, x.num_channels()));
  solves_.resize(static_cast<std::size_t>(F));
  for (int f = 0; f < F; ++f) tape_.nodes_.push_back({Tape::Op::kWpdSolve, f});
  ParallelFor(static_cast<std::size_t>(F), [&](std::size_t f) {
    solves_[f] = SolveWpd(stats_.K[f], stats_.R[f], config.ref, config.relative_loading);
    filter.w.row(static_cast<Eigen::Index>(f)) = solves_[f].w.transpose();
  });

  tape_.nodes_.push_back({Tape::Op::kApplyWpd, -1});
  dhat_ = ApplyWpd(x, filter);

  tape_.nodes_.push_back({Tape::Op::kInverseStft, -1});
  estimate_ = StftInverse(dhat_, static_cast<int>(example.reference.size())).samples.col(0);

  tape_.nodes_.push_back({Tape::Op::kSdrLoss, -1});
  loss_ = SdrLoss(estimate_, example.reference, config.sdr_eps);
  tape_.visits_.assign(tape_.nodes_.size(), 0);
}

void GraphEvaluation::Backward(Eigen::VectorXd& grad) {
  const ComplexSpectrogram& x = example_.x;
  const int F = x.num_bins(), T = x.num_frames(), M = x.num_channels();
  const auto lags = StackedLags(config_.taps);
  const int D = static_cast<int>(lags.size()) * M;
  const int q = config_.ref;

  Eigen::VectorXd g_est;
  Eigen::MatrixXcd g_dhat;
  Eigen::MatrixXcd g_w(F, D);
  std::vector<Eigen::MatrixXcd> g_k(static_cast<std::size_t>(F)), g_r(static_cast<std::size_t>(F));
  Eigen::MatrixXd g_mask = Eigen::MatrixXd::Zero(F, T);

  for (std::size_t i = tape_.nodes_.size(); i-- > 0;) {
    const Tape::Node node = tape_.nodes_[i];
    ++tape_.visits_[i];
    switch (node.op) {
      case Tape::Op::kSdrLoss:
        g_est = SdrLossGrad(estimate_, example_.reference, config_.sdr_eps);
        break;

      case Tape::Op::kInverseStft:
        g_dhat = StftInverseAdjoint(g_est, F, T, x.n_fft(), x.hop());
        break;

      case Tape::Op::kApplyWpd:
        // d = w^H x_bar is anti-holomorphic in w: g_w = sum_t x_bar conj(g_d).
        for (int f = 0; f < F; ++f) {
          g_w.row(f) = (StackFrameMatrix(x, f, lags) * g_dhat.row(f).adjoint()).transpose();
        }
        break;

      case Tape::Op::kWpdSolve: {
        // w = z / c, z = A^{-1} R u_q, c = tr(A^{-1} R), A = K + delta I with
        // delta = eps tr(K) / D.
        const int f = node.index;
        const WpdSolve& s = solves_[static_cast<std::size_t>(f)];
        const Eigen::VectorXcd gw = g_w.row(f).transpose();
        const Eigen::VectorXcd z = s.a_inv_r.col(q);
        const cdouble c = s.trace;
        const Eigen::VectorXcd gz = gw / std::conj(c);
        const cdouble gc = -z.dot(gw) / (std::conj(c) * std::conj(c));

        const Eigen::VectorXcd lambda = s.chol.Solve(gz);
        // A^{-1} R A^{-1} = (A^{-1} (A^{-1} R)^H)^H
        const Eigen::MatrixXcd arai = s.chol.Solve(Eigen::MatrixXcd(s.a_inv_r.adjoint())).adjoint();

        Eigen::MatrixXcd ga = -lambda * z.adjoint() - gc * arai.adjoint();
        Eigen::MatrixXcd gr = gc * s.chol.Solve(Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(D, D)));
        gr.col(q) += lambda;
        const double rel = config_.relative_loading / D;
        ga.diagonal().array() += rel * ga.trace().real();
        g_k[static_cast<std::size_t>(f)] = std::move(ga);
        g_r[static_cast<std::size_t>(f)] = std::move(gr);
        break;
      }

      case Tape::Op::kStatistics: {
        const double inv_t = 1.0 / T;
        for (int f = 0; f < F; ++f) {
          const Eigen::MatrixXcd& gk = g_k[static_cast<std::size_t>(f)];
          const Eigen::MatrixXcd h = g_r[static_cast<std::size_t>(f)] + g_r[static_cast<std::size_t>(f)].adjoint();
          const Eigen::MatrixXcd xb = StackFrameMatrix(x, f, lags);
          const Eigen::MatrixXcd gx = gk * xb;
          // R = (1/T) sum_t s s^H with s blocks = w_{t-lag} x_{t-lag}.
          const Eigen::MatrixXcd v = inv_t * (h * StackFrameMatrix(x, f, lags, &mask_.values));
          for (int t = 0; t < T; ++t) {
            // K = sum_t x_bar x_bar^H / sigma^2
            const double psd = stats_.psd(f, t);
            const double g_psd = -(xb.col(t).dot(gx.col(t))).real() / (psd * psd);
            const double w = mask_(f, t);
            const double p = x.frame(f, t).squaredNorm() / M;
            if (w * w * p > stats_.psd_floor) g_mask(f, t) += g_psd * 2.0 * w * p;
            for (std::size_t l = 0; l < lags.size(); ++l) {
              const int src = t - lags[l];
              if (src < 0) continue;
              g_mask(f, src) += v.block(static_cast<Eigen::Index>(l) * M, t, M, 1).col(0).dot(x.frame(f, src)).real();
            }
          }
        }
        break;
      }

      case Tape::Op::kMaskNet:
        MaskNetBackward(params_, net_cache_, g_mask, grad);
        break;
    }
  }
}

double EvaluateLoss(const MaskNetParams& params, const TrainingExample& example,
                    const GraphConfig& config) {
  return GraphEvaluation(params, example, config).loss();
}

LossAndGrad ComputeLossAndGrad(const MaskNetParams& params,
                               const std::vector<const TrainingExample*>& batch,
                               const GraphConfig& config) {
  if (batch.empty()) Fail(Errc::kValue, "empty batch");
  std::vector<double> losses(batch.size());
  std::vector<Eigen::VectorXd> grads(batch.size());
  ParallelFor(batch.size(), [&](std::size_t i) {
    GraphEvaluation eval(params, *batch[i], config);
    losses[i] = eval.loss();
    grads[i] = Eigen::VectorXd::Zero(params.size());
    eval.Backward(grads[i]);
  });
  LossAndGrad out;
  out.grad = Eigen::VectorXd::Zero(params.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    out.grad += grads[i];
  }
  out.loss /= static_cast<double>(batch.size());
  out.grad /= static_cast<double>(batch.size());
  return out;
}

void AdamStep(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
              const AdamOptions& o) {
  if (grad.size() != params.size()) Fail(Errc::kShape, "gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.step = 0;
  }
  ++state.step;
  state.m = o.beta1 * state.m + (1.0 - o.beta1) * grad;
  state.v = o.beta2 * state.v + (1.0 - o.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  params *= 1.0 - o.lr * o.weight_decay;
  params.array() -= o.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + o.eps);
}

GradCheckReport GradCheck(const MaskNetParams& params,
                          const std::vector<const TrainingExample*>& batch,
                          const GraphConfig& config, int count, double step,
                          std::uint64_t seed) {
  const LossAndGrad base = ComputeLossAndGrad(params, batch, config);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, params.size() - 1);

  auto batch_loss = [&](const MaskNetParams& p) {
    double acc = 0.0;
    for (const auto* ex : batch) acc += EvaluateLoss(p, *ex, config);
    return acc / static_cast<double>(batch.size());
  };

  GradCheckReport report;
  MaskNetParams probe = params;
  for (int i = 0; i < count; ++i) {
    const Eigen::Index k = pick(rng);
    const double orig = probe.theta(k);
    probe.theta(k) = orig + step;
    const double up = batch_loss(probe);
    probe.theta(k) = orig - step;
    const double down = batch_loss(probe);
    probe.theta(k) = orig;
    GradCheckEntry e;
    e.index = k;
    e.analytic = base.grad(k);
    e.numeric = (up - down) / (2.0 * step);
    e.rel_error = std::abs(e.analytic - e.numeric) /
                  std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-8});
    report.entries.push_back(e);
  }
  std::vector<double> errs;
  for (const auto& e : report.entries) errs.push_back(e.rel_error);
  if (!errs.empty()) {
    std::sort(errs.begin(), errs.end());
    const std::size_t n = errs.size();
    report.median_rel_error = n % 2 ? errs[n / 2] : 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
    report.max_rel_error = errs.back();
  }
  return report;
}

std::string FormatGradCheck(const GradCheckReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%8s %16s %16s %12s\n", "index", "analytic", "numeric", "rel_error");
  os << line;
  for (const auto& e : report.entries) {
    std::snprintf(line, sizeof line, "%8ld %16.8e %16.8e %12.3e\n", static_cast<long>(e.index),
                  e.analytic, e.numeric, e.rel_error);
    os << line;
  }
  std::snprintf(line, sizeof line, "median relative error: %.3e\nmax relative error:    %.3e\n",
                report.median_rel_error, report.max_rel_error);
  os << line;
  return os.str();
}

}  // namespace rtbeam
