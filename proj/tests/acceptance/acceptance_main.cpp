// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Runs acceptance criteria 1-10 and prints one PASS/FAIL line for each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graph_fixture.hpp"
#include "oracles.hpp"
#include "rtbeam/beamform.hpp"
#include "rtbeam/cli.hpp"
#include "rtbeam/diff_grad.hpp"
#include "rtbeam/doa_music.hpp"
#include "rtbeam/experiment.hpp"
#include "rtbeam/fastmnmf.hpp"
#include "rtbeam/metrics.hpp"
#include "rtbeam/room_sim.hpp"
#include "rtbeam/stft.hpp"
#include "rtbeam/wpe.hpp"
#include "test_support.hpp"

namespace rtbeam {
namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

double Deg(double rad) { return rad * 180.0 / std::numbers::pi; }

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void Check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

// 1. STFT perfect reconstruction.
Verdict StftReconstruction() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(600, 20000);
  const int ffts[] = {64, 256, 512, 1024};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n_fft = ffts[i % 4];
    const int n = len(rng);
    const TimeSignal s(testing::RandomReal(n, 1 + i % 3, rng));
    const auto y = StftInverse(StftForward(s, n_fft, n_fft / 4), n);
    worst = std::max(worst, (y.samples - s.samples).cwiseAbs().maxCoeff());
  }
  const double t = Seconds(start);
  Verdict v;
  v.Check(worst < 1e-6, "max |err| " + Fmt("%.2e", worst) + " < 1e-6");
  v.Check(t < 5.0, "runtime " + Fmt("%.2f", t) + " s < 5 s");
  return v;
}

// 2. MPDR closed form vs projected-gradient constrained minimization.
Verdict MpdrOracle() {
  std::mt19937_64 rng(2);
  double worst_dw = 0.0, worst_gain = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int M = 2 + i % 2;
    const VectorXcd a = testing::RandomComplex(M, 1, rng);
    SteeringVector sv;
    sv.a = a.transpose();
    const MatrixXcd k = testing::RandomPd(M, rng);
    const VectorXcd w = MpdrFilter({HermitianMatrix(k)}, sv, 0.0).row(0).transpose();
    worst_dw = std::max(worst_dw, (w - testing::ConstrainedMinPowerOracle(k, a)).norm());
    worst_gain = std::max(worst_gain, std::abs(w.dot(a) - 1.0));
  }
  Verdict v;
  v.Check(worst_dw < 1e-4, "max |dw| " + Fmt("%.2e", worst_dw) + " < 1e-4");
  v.Check(worst_gain < 1e-8, "max |w^H a - 1| " + Fmt("%.2e", worst_gain) + " < 1e-8");
  return v;
}

// 3. WPD identities on 50 random instances.
Verdict WpdIdentities() {
  const auto start = Clock::now();
  std::mt19937_64 rng(3);
  const int M = 3;
  const TapConfig taps{3, 5};
  const int D = StackedDim(taps, M);
  double forms = 0.0, scale = 0.0, reduce = 0.0;
  for (int i = 0; i < 50; ++i) {
    const HermitianMatrix K(testing::RandomPd(D, rng));
    VectorXcd abar = VectorXcd::Zero(D);
    abar.head(M) = testing::RandomComplex(M, 1, rng);
    abar(0) = 1.0;
    // Steering form vs SCM form with a rank-1 target.
    const VectorXcd w17 = SolveWpd(K, HermitianMatrix(abar * abar.adjoint()), 0, kDefaultLoading).w;
    SteeringVector sv;
    sv.a = abar.head(M).transpose();
    const VectorXcd w16 = WpdFilterFromSteering({K}, sv, taps, kDefaultLoading).w.row(0).transpose();
    forms = std::max(forms, (w17 - w16).norm() / w16.norm());

    // Scale invariance with a rank-2 target.
    const MatrixXcd g = testing::RandomComplex(D, 2, rng);
    const HermitianMatrix R(g * g.adjoint());
    const VectorXcd w = SolveWpd(K, R, 1, kDefaultLoading).w;
    for (double c : {1e-3, 7.0, 1e4}) {
      scale = std::max(scale, (SolveWpd(HermitianMatrix(c * K.matrix()), R, 1, kDefaultLoading).w - w).norm() / w.norm());
      scale = std::max(scale, (SolveWpd(K, HermitianMatrix(c * R.matrix()), 1, kDefaultLoading).w - w).norm() / w.norm());
    }

    // Tap set {0} and unit PSD reduce WPD to MPDR.
    const ArrayGeometry geom = CircularArray(M, 0.05);
    const auto x = testing::RandomSpectrogram(9, 30, M, rng, 16, 4);
    MaskStatisticsOptions o;
    o.taps = {1, 0};
    o.unit_psd = true;
    const auto st = MaskStatistics(x, Mask{Eigen::MatrixXd::Ones(9, 30)}, o);
    const auto s0 = SteeringFromDoa(0.37 * i, geom, 16);
    const MatrixXcd mpdr = MpdrFilter(st.K, s0, kDefaultLoading);
    for (int f = 0; f < 9; ++f) {
      const VectorXcd a = s0.a.row(f).transpose();
      const VectorXcd wf = SolveWpd(st.K[static_cast<std::size_t>(f)], HermitianMatrix(a * a.adjoint()), 0, kDefaultLoading).w;
      reduce = std::max(reduce, (wf - mpdr.row(f).transpose()).norm() / wf.norm());
    }
  }
  const double t = Seconds(start);
  Verdict v;
  v.Check(forms < 1e-8, "steering vs SCM form " + Fmt("%.2e", forms) + " < 1e-8");
  v.Check(scale < 1e-10, "scale invariance " + Fmt("%.2e", scale) + " < 1e-10");
  v.Check(reduce < 1e-8, "MPDR reduction " + Fmt("%.2e", reduce) + " < 1e-8");
  v.Check(t < 10.0, "runtime " + Fmt("%.2f", t) + " s < 10 s");
  return v;
}

// 4. WPE monotonicity and direct-to-reverberant improvement.
Verdict WpeMonotoneAndDrr() {
  int ml_violations = 0, wp_violations = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SceneSampling sm;
    sm.n_speakers = 1;
    sm.rt60 = 0.3 + 0.03 * static_cast<double>(seed);
    sm.duration = 1.5;
    const auto x = StftForward(Simulate(SampleScene(sm, 400 + seed)).mixture, 256, 64);
    WpeOptions o;
    o.iterations = 3;
    const auto r = WpeDereverb(x, o);
    for (std::size_t i = 1; i < r.objective.size(); ++i) {
      if (r.objective[i] > r.objective[i - 1] + 1e-6 * std::abs(r.objective[i - 1])) ++ml_violations;
      if (r.weighted_power[i] > r.weighted_power[i - 1] * (1.0 + 1e-6)) ++wp_violations;
    }
  }
  int drr_wins = 0;
  double worst_gain = 1e300;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneSampling sm;
    sm.n_speakers = 1;
    sm.rt60 = 0.8;
    sm.duration = 3.0;
    SceneSpec s = SampleScene(sm, 500 + seed);
    const TimeSignal wet = Simulate(s).mixture;
    s.rt60 = 1e-3;  // direct path only
    const TimeSignal direct = Simulate(s).mixture;
    const auto dry = StftInverse(WpeDereverb(StftForward(wet, 256, 64), {}).dry, static_cast<int>(wet.num_samples()));
    auto drr = [&](const Eigen::MatrixXd& y) {
      return 10.0 * std::log10(direct.samples.squaredNorm() / (y - direct.samples).squaredNorm());
    };
    const double gain = drr(dry.samples) - drr(wet.samples);
    worst_gain = std::min(worst_gain, gain);
    if (gain > 0.0) ++drr_wins;
  }
  Verdict v;
  v.Check(ml_violations == 0, "objective increases " + std::to_string(ml_violations) + "/40 steps");
  v.detail += "; weighted-power-only term increases " + std::to_string(wp_violations) + "/40 steps (not a gate)";
  v.Check(drr_wins == 5, "DRR improved on " + std::to_string(drr_wins) + "/5 rt60=0.8 scenes, min gain " +
                             Fmt("%.2f", worst_gain) + " dB");
  return v;
}

ComplexSpectrogram TwoSourceMixture(int F, int T, int M, std::mt19937_64& rng) {
  const MatrixXcd mix = testing::RandomComplex(M, 2, rng);
  std::gamma_distribution<double> gam(0.3, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexSpectrogram x(F, T, M, 2 * (F - 1), (F - 1) / 2);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < 2; ++s) x.frame(f, t) += std::sqrt(gam(rng)) * cdouble(n(rng), n(rng)) * mix.col(s);
      for (int m = 0; m < M; ++m) x(f, t, m) += 0.03 * cdouble(n(rng), n(rng));
    }
  return x;
}

// 5. FastMNMF.
Verdict FastMnmf() {
  const auto start = Clock::now();
  int drops = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto x = TwoSourceMixture(65, 100, 4, rng);
    std::vector<double> trace;
    FastMnmfFit(x, FastMnmfInit(x, 2, 4, seed), 100, &trace);
    for (std::size_t i = 1; i < trace.size(); ++i)
      if (trace[i] < trace[i - 1] - 1e-6 * std::abs(trace[i - 1])) ++drops;
  }

  std::mt19937_64 rng(50);
  double partition = 0.0;
  {
    const auto x = TwoSourceMixture(33, 60, 3, rng);
    const auto m = FastMnmfFit(x, FastMnmfInit(x, 3, 2, 1), 10);
    const auto parts = FastMnmfSeparate(x, m, 0);
    for (int f = 0; f < 33; ++f)
      for (int t = 0; t < 60; ++t) {
        cdouble sum = 0.0;
        for (const auto& p : parts) sum += p(f, t, 0);
        partition = std::max(partition, std::abs(sum - x(f, t, 0)) / (1.0 + std::abs(x(f, t, 0))));
      }
  }
  double dense = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto x = testing::RandomSpectrogram(3, 6, 2, rng, 4, 1);
    auto m = FastMnmfInit(x, 2, 2, 10 + rep);
    for (auto& q : m.Q) q = testing::RandomComplex(2, 2, rng) + 2.0 * MatrixXcd::Identity(2, 2);
    const double d = testing::DenseLogLikelihood(x, m);
    dense = std::max(dense, std::abs(FastMnmfLogLikelihood(x, m) - d) / std::abs(d));
  }

  // 2 speakers, M = 4, F = 129, T = 251 (1 s at hop 64).
  double sum_sisdr = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneSampling sm;
    sm.rt60 = 0.2;
    sm.duration = 1.0;
    const SimResult sim = Simulate(SampleScene(sm, 600 + seed));
    const auto x = StftForward(sim.mixture, 256, 64);
    const auto parts = FastMnmfSeparate(x, FastMnmfFit(x, FastMnmfInit(x, 2, 4, seed), 100), 0);
    const int len = static_cast<int>(sim.mixture.num_samples());
    const Eigen::VectorXd e0 = StftInverse(parts[0], len).samples.col(0), e1 = StftInverse(parts[1], len).samples.col(0);
    const Eigen::VectorXd r0 = sim.images[0].samples.col(0), r1 = sim.images[1].samples.col(0);
    const double best = std::max(0.5 * (SiSdr(e0, r0) + SiSdr(e1, r1)), 0.5 * (SiSdr(e1, r0) + SiSdr(e0, r1)));
    sum_sisdr += best;
    per_seed += (per_seed.empty() ? "" : " ") + Fmt("%.1f", best);
  }
  const double t = Seconds(start);
  Verdict v;
  v.Check(drops == 0, "likelihood drops " + std::to_string(drops) + " over 10x100 sweeps");
  v.Check(partition < 1e-9, "partition of unity " + Fmt("%.2e", partition) + " < 1e-9");
  v.Check(dense < 1e-8, "dense oracle " + Fmt("%.2e", dense) + " < 1e-8");
  v.Check(sum_sisdr / 5 >= 5.0, "mean SI-SDR " + Fmt("%.2f", sum_sisdr / 5) + " dB >= 5 (" + per_seed + ")");
  v.Check(t < 120.0, "runtime " + Fmt("%.1f", t) + " s < 120 s");
  return v;
}

// 6. Gradient engine vs central finite differences.
Verdict GradientCheck() {
  const auto start = Clock::now();
  const auto examples = testing::TinyExamples(3, 2);
  const auto report = GradCheck(InitMaskNet(3, 8, 1, 11), testing::Pointers(examples), GraphConfig{}, 50, 1e-4, 5);
  const double t = Seconds(start);
  Verdict v;
  v.Check(report.entries.size() == 50, std::to_string(report.entries.size()) + " parameters");
  v.Check(report.median_rel_error < 1e-4, "median rel err " + Fmt("%.2e", report.median_rel_error) + " < 1e-4");
  v.Check(report.max_rel_error < 1e-2, "max rel err " + Fmt("%.2e", report.max_rel_error) + " < 1e-2");
  v.Check(t < 120.0, "runtime " + Fmt("%.1f", t) + " s < 120 s");
  return v;
}

// 7. Overfit one tiny batch.
Verdict Overfit() {
  const auto examples = testing::TinyExamples(3, 2);
  const auto batch = testing::Pointers(examples);
  MaskNetParams p = InitMaskNet(3, 8, 1, 11);
  AdamState state;
  AdamOptions o;
  o.lr = 1e-2;
  const GraphConfig config;
  const double first = ComputeLossAndGrad(p, batch, config).loss;
  for (int s = 0; s < 50; ++s) AdamStep(p.theta, ComputeLossAndGrad(p, batch, config).grad, state, o);
  const double last = ComputeLossAndGrad(p, batch, config).loss;
  Verdict v;
  v.Check(last <= first - 1.0, "loss " + Fmt("%.2f", first) + " -> " + Fmt("%.2f", last) + " dB, drop >= 1 dB");
  return v;
}

// Far-field plane wave plus weak sensor noise.
ComplexSpectrogram PlaneWave(double doa, const ArrayGeometry& g, std::mt19937_64& rng) {
  const int n_fft = 256, F = 129, T = 80;
  ComplexSpectrogram x(F, T, g.num_mics(), n_fft, 64);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto sv = SteeringFromDoa(doa, g, n_fft);
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t) x.frame(f, t) += cdouble(n(rng), n(rng)) * sv.a.row(f).transpose();
  for (auto& v : x.raw()) v += 1e-3 * cdouble(n(rng), n(rng));
  return x;
}

// 8. MUSIC.
Verdict Music() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SceneSampling sm;
    sm.n_speakers = 1;
    sm.rt60 = 0.3;
    sm.duration = 1.0;
    const SceneSpec spec = SampleScene(sm, 700 + seed);
    const SimResult sim = Simulate(spec);
    const auto est = DoaMusic(StftForward(sim.mixture, 256, 64), spec.Geometry(), {});
    worst = std::max(worst, Deg(AngularDistance(est[0], sim.doas[0])));
  }
  const MusicOptions opts;
  const ArrayGeometry g = CircularArray(5, 0.05);
  double rot_err = 0.0;
  for (double rot : {0.3, 1.7, 4.0, 5.5}) {
    std::mt19937_64 r1(3), r2(3);
    const double a = DoaMusic(PlaneWave(0.9, g, r1), g, opts)[0];
    const ArrayGeometry gr = g.Rotated(rot);
    const double b = DoaMusic(PlaneWave(0.9 + rot, gr, r2), gr, opts)[0];
    rot_err = std::max(rot_err, Deg(AngularDistance(WrapAngle(a + rot), b)));
  }
  Verdict v;
  v.Check(worst < 5.0, "max DOA error " + Fmt("%.2f", worst) + " deg < 5 over 20 scenes");
  v.Check(rot_err <= opts.grid_deg, "rotation error " + Fmt("%.2f", rot_err) + " deg <= grid " + Fmt("%.0f", opts.grid_deg));
  return v;
}

// 9. Miniature adaptation experiment. Desk-scale settings: see README.
constexpr const char* kMiniature = R"(pretrain_scenes = 200
pretrain_duration = 1.0
pretrain_rt60 = 0.3
pretrain_steps = 300
eval_rt60 = 0.9
scorer = oracle
alpha = 10
lr = 1e-3
steps = 40

[condition]
name = miniature
seeds = 0, 1, 2, 3, 4
)";

Verdict MiniatureAdaptation() {
  const auto start = Clock::now();
  const auto rows = RunExperiment(ParseManifest(kMiniature, "<miniature>"), [&](const std::string& msg) {
    std::cerr << Fmt("%7.1f ", Seconds(start)) << msg << '\n';
  });
  const double t = Seconds(start);
  std::vector<double> gains;
  std::string per_seed;
  for (const auto& r : rows) {
    gains.push_back(r.si_sdr_after - r.si_sdr_before);
    per_seed += (per_seed.empty() ? "" : " ") + Fmt("%+.2f", gains.back());
  }
  std::vector<double> sorted = gains;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
  double mean = 0.0;
  for (double g : gains) mean += g;
  mean /= std::max<std::size_t>(1, gains.size());
  Verdict v;
  v.Check(rows.size() == 5, std::to_string(rows.size()) + " seeds");
  v.Check(median >= 0.0, "median SI-SDR gain " + Fmt("%+.2f", median) + " dB >= 0 (" + per_seed + ")");
  v.Check(mean > 0.5, "mean gain " + Fmt("%+.2f", mean) + " dB > 0.5");
  v.Check(t < 1800.0, "runtime " + Fmt("%.0f", t) + " s < 1800 s");
  return v;
}

// 10. `eval` determinism through the command-line entry point.
Verdict EvalDeterminism() {
  const fs::path dir = fs::temp_directory_path() / "rtbeam_acceptance_eval";
  fs::create_directories(dir);
  std::ofstream(dir / "m.ini") << "hidden = 4\ncontext = 0\npretrain_scenes = 2\npretrain_duration = 0.5\n"
                                  "pretrain_steps = 3\nbudget_s = 1.0\nheldout_s = 0.5\nwindow_s = 1.0\n"
                                  "mnmf_iters = 5\nsteps = 2\nbatch = 2\nalpha = -100\n"
                                  "[condition]\nname = det\nseeds = 7, 8\n";
  auto run = [&](const std::string& out) {
    std::ostringstream o, e;
    const int code = cli::Run({"--seed", "5", "eval", "--manifest", (dir / "m.ini").string(), "--out",
                               (dir / out).string()},
                              o, e);
    std::ifstream f(dir / out, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return std::make_pair(code, ss.str());
  };
  const auto a = run("a.csv"), b = run("b.csv");
  fs::remove_all(dir);
  Verdict v;
  v.Check(a.first == 0 && b.first == 0, "exit codes " + std::to_string(a.first) + "," + std::to_string(b.first));
  v.Check(!a.second.empty() && a.second == b.second,
          "CSV " + std::to_string(a.second.size()) + " bytes, identical=" + (a.second == b.second ? "yes" : "no"));
  return v;
}

}  // namespace
}  // namespace rtbeam

int main(int argc, char** argv) {
  using rtbeam::Verdict;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"stft perfect reconstruction", rtbeam::StftReconstruction},
      {"mpdr closed form vs oracle", rtbeam::MpdrOracle},
      {"wpd identities", rtbeam::WpdIdentities},
      {"wpe monotonicity and drr", rtbeam::WpeMonotoneAndDrr},
      {"fastmnmf", rtbeam::FastMnmf},
      {"gradient check", rtbeam::GradientCheck},
      {"overfit sanity", rtbeam::Overfit},
      {"music doa", rtbeam::Music},
      {"miniature adaptation", rtbeam::MiniatureAdaptation},
      {"eval determinism", rtbeam::EvalDeterminism},
  };
  // Optional criterion numbers on the command line select a subset.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << v.detail
              << std::endl;
  }
  return failed;
}
