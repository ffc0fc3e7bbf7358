// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "rtbeam/adapt.hpp"
#include "rtbeam/audio_io.hpp"
#include "rtbeam/beamform.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/experiment.hpp"
#include "rtbeam/parallel.hpp"

namespace rtbeam::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kDeg = std::numbers::pi / 180.0;

std::string Format(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct ArrayOpts {
  double radius = 0.05;    // m
  double rotation = 0.0;   // deg
  ArrayGeometry Geometry(int n_mics) const { return CircularArray(n_mics, radius, rotation * kDeg); }
};

void AddArrayOptions(CLI::App* app, ArrayOpts& a) {
  app->add_option("--radius", a.radius, "Circular array radius (m)")->capture_default_str();
  app->add_option("--rotation", a.rotation, "Angle of mic 0 (deg)")->capture_default_str();
}

void AddStftOptions(CLI::App* app, StftConfig& s) {
  app->add_option("--n-fft", s.n_fft, "STFT size (samples, power of two)")->capture_default_str();
  app->add_option("--hop", s.hop, "STFT hop (samples)")->capture_default_str();
}

// ---- simulate -------------------------------------------------------------

struct SimulateOpts {
  std::string scene;
  std::string out_dir;
};

void WriteMono(const Eigen::VectorXd& x, const fs::path& path) {
  WriteWav(TimeSignal(Eigen::MatrixXd(x)), path);
}

void RunSimulate(const SimulateOpts& o, const Globals& g, std::ostream& out) {
  SceneSpec spec = LoadSceneSpec(o.scene);
  if (g.seed) spec.seed = *g.seed;
  const SimResult sim = Simulate(spec);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  WriteWav(sim.mixture, dir / "mixture.wav");
  if (std::isfinite(spec.snr_db)) WriteWav(sim.noise, dir / "noise.wav");
  std::ofstream doas(dir / "doas.txt");
  for (std::size_t n = 0; n < sim.images.size(); ++n) {
    WriteWav(sim.images[n], dir / ("image_" + std::to_string(n) + ".wav"));
    WriteWav(sim.references[n], dir / ("reference_" + std::to_string(n) + ".wav"));
    doas << n << ' ' << Format("%.6f", sim.doas[n] / kDeg) << '\n';
  }
  std::ofstream(dir / "scene.txt") << FormatSceneSpec(spec);
  out << "wrote " << sim.images.size() << " sources, " << sim.mixture.num_samples() << " samples x "
      << sim.mixture.num_channels() << " channels to " << dir.string() << '\n';
}

// ---- dereverb -------------------------------------------------------------

struct DereverbOpts {
  std::string in, out;
  WpeOptions wpe;
  StftConfig stft;
};

void RunDereverb(const DereverbOpts& o, std::ostream& out) {
  const TimeSignal x = ReadWav(o.in);
  const WpeResult r = WpeDereverb(StftForward(x, o.stft), o.wpe);
  WriteWav(StftInverse(r.dry, static_cast<int>(x.num_samples())), o.out);
  out << "objective per iteration:";
  for (double v : r.objective) out << ' ' << Format("%.6e", v);
  out << '\n';
}

// ---- separate -------------------------------------------------------------

struct SeparateOpts {
  std::string in, out_dir;
  FastMnmfOptions mnmf;
  StftConfig stft;
  int ref = 0;
};

void RunSeparate(SeparateOpts o, const Globals& g, std::ostream& out) {
  if (g.seed) o.mnmf.seed = *g.seed;
  const TimeSignal x = ReadWav(o.in);
  const ComplexSpectrogram spec = StftForward(x, o.stft);
  std::vector<double> trace;
  const FastMnmfModel model = FastMnmfFit(
      spec, FastMnmfInit(spec, o.mnmf.num_sources, o.mnmf.num_bases, o.mnmf.seed), o.mnmf.iterations, &trace);
  const auto parts = FastMnmfSeparate(spec, model, o.ref);
  fs::create_directories(o.out_dir);
  for (std::size_t n = 0; n < parts.size(); ++n) {
    WriteWav(StftInverse(parts[n], static_cast<int>(x.num_samples())),
             fs::path(o.out_dir) / ("source_" + std::to_string(n) + ".wav"));
  }
  out << "separated " << parts.size() << " sources";
  if (!trace.empty()) out << ", final log-likelihood " << Format("%.6e", trace.back());
  out << '\n';
}

// ---- doa ------------------------------------------------------------------

struct DoaOpts {
  std::string in;
  MusicOptions music;
  StftConfig stft;
  ArrayOpts array;
};

void RunDoa(const DoaOpts& o, std::ostream& out) {
  const TimeSignal x = ReadWav(o.in);
  const auto geom = o.array.Geometry(static_cast<int>(x.num_channels()));
  for (double d : DoaMusic(StftForward(x, o.stft), geom, o.music)) out << Format("%.2f", d / kDeg) << '\n';
}

// ---- enhance --------------------------------------------------------------

struct EnhanceOpts {
  std::string in, params, out;
  double doa_deg = 0.0;
  std::string beamformer = "wpd";
  TapConfig taps;
  int ref = 0;
  StftConfig stft;
  ArrayOpts array;
};

void RunEnhance(const EnhanceOpts& o, std::ostream& out) {
  const TimeSignal x = ReadWav(o.in);
  const MaskNetParams params = LoadMaskNet(o.params);
  if (params.num_channels() != x.num_channels()) {
    Fail(Errc::kShape, "checkpoint expects " + std::to_string(params.num_channels()) + " channels");
  }
  const auto geom = o.array.Geometry(static_cast<int>(x.num_channels()));
  const ComplexSpectrogram spec = StftForward(x, o.stft);
  const double doa = WrapAngle(o.doa_deg * kDeg);
  const int len = static_cast<int>(x.num_samples());
  Eigen::VectorXd y;
  if (o.beamformer == "wpd") {
    GraphConfig graph;
    graph.taps = o.taps;
    graph.ref = o.ref;
    y = EnhanceSource(params, spec, doa, geom, len, graph);
  } else {
    const Mask mask = MaskNetForward(params, ExtractFeatures(spec, doa, geom), doa);
    MaskStatisticsOptions so;
    so.taps = {1, 0};  // current frame only
    const WpdStatistics st = MaskStatistics(spec, mask, so);
    const Eigen::MatrixXcd w = MpdrFilter(st.K, SteeringFromDoa(doa, geom, o.stft.n_fft, o.ref));
    y = StftInverse(ApplyWpd(spec, WpdFilterFromBeamformer(w)), len).samples.col(0);
  }
  WriteMono(y, o.out);
  out << "wrote " << y.size() << " samples (" << o.beamformer << ")\n";
}

// ---- adapt ----------------------------------------------------------------

struct AdaptOpts {
  std::string in, params, out_params, replay, refs;
  std::string scorer = "heuristic";
  MintOptions mint;
  TrainOptions train;
  ArrayOpts array;
};

std::vector<Eigen::VectorXd> ReadReferences(const fs::path& dir, int ref) {
  std::vector<Eigen::VectorXd> out;
  for (int n = 0;; ++n) {
    const fs::path p = dir / ("reference_" + std::to_string(n) + ".wav");
    if (!fs::exists(p)) break;
    out.push_back(ReadWav(p).samples.col(ref));
  }
  if (out.empty()) Fail(Errc::kIo, "no reference_<n>.wav files in " + dir.string());
  return out;
}

std::vector<double> ReadDoas(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(Errc::kIo, "cannot open " + path.string());
  std::vector<double> out;
  int index = 0;
  double deg = 0.0;
  while (in >> index >> deg) out.push_back(WrapAngle(deg * kDeg));
  return out;
}

// A replay directory is either one `simulate` output or a directory of them.
std::vector<TrainingExample> LoadReplay(const fs::path& dir, const ArrayOpts& array,
                                        const StftConfig& stft, int ref) {
  std::vector<fs::path> scenes;
  if (fs::exists(dir / "mixture.wav")) {
    scenes.push_back(dir);
  } else {
    if (!fs::is_directory(dir)) Fail(Errc::kIo, "replay directory not found: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_directory() && fs::exists(e.path() / "mixture.wav")) scenes.push_back(e.path());
    }
    std::sort(scenes.begin(), scenes.end());
  }
  std::vector<TrainingExample> out;
  for (const auto& s : scenes) {
    const TimeSignal x = ReadWav(s / "mixture.wav");
    const ComplexSpectrogram spec = StftForward(x, stft);
    const auto geom = array.Geometry(static_cast<int>(x.num_channels()));
    const auto doas = ReadDoas(s / "doas.txt");
    const auto refs = ReadReferences(s, ref);
    if (refs.size() != doas.size()) Fail(Errc::kShape, "doas.txt does not match the references in " + s.string());
    for (std::size_t n = 0; n < refs.size(); ++n) out.push_back(MakeExample(spec, doas[n], geom, refs[n]));
  }
  return out;
}

void RunAdapt(AdaptOpts o, const Globals& g, std::ostream& out, std::ostream& err) {
  if (g.seed) {
    o.mint.mnmf.seed = *g.seed;
    o.train.seed = *g.seed;
  }
  const TimeSignal x = ReadWav(o.in);
  const auto geom = o.array.Geometry(static_cast<int>(x.num_channels()));
  MaskNetParams params = LoadMaskNet(o.params);

  std::vector<PseudoLabel> labels;
  if (o.scorer == "oracle") {
    if (o.refs.empty()) Fail(Errc::kUsage, "--scorer oracle needs --refs");
    labels = MintPseudoLabels(x, geom, OracleScorer(ReadReferences(o.refs, o.mint.ref)), o.mint);
  } else {
    labels = MintPseudoLabels(x, geom, HeuristicScorer(), o.mint);
  }
  out << labels.size() << " pseudo-labels\n";
  for (const auto& l : labels) {
    out << "  window " << l.window << " source " << l.source << " quality " << Format("%.2f", l.quality)
        << " dB doa " << Format("%.2f", l.doa / kDeg) << " deg\n";
  }

  std::vector<TrainingExample> replay;
  if (!o.replay.empty()) replay = LoadReplay(o.replay, o.array, o.mint.stft, o.mint.ref);
  o.train.on_warning = [&](const std::string& w) { err << "warning: " << w << '\n'; };
  o.train.graph.ref = o.mint.ref;
  if (labels.empty()) {
    err << "warning: no pseudo-labels passed the gate; parameters unchanged\n";
  } else {
    params = FineTune(params, labels, replay, geom, o.train);
  }
  SaveMaskNet(params, o.out_params);
  out << "wrote " << o.out_params << '\n';
}

// ---- gradcheck ------------------------------------------------------------

struct GradCheckOpts {
  int count = 50;
  double step = 1e-4;
  int hidden = 8;
};

int RunGradCheck(const GradCheckOpts& o, const Globals& g, std::ostream& out) {
  const std::uint64_t seed = g.seed.value_or(0);
  // Desk-scale graph: 3 mics, 64-point STFT, 30 frames.
  SceneSampling sm;
  sm.n_mics = 3;
  sm.rt60 = 0.4;
  sm.snr_db = 20.0;
  sm.duration = 29.0 * 16 / kSampleRate;
  std::vector<TrainingExample> examples;
  for (std::uint64_t i = 0; i < 2; ++i) {
    const SceneSpec spec = SampleScene(sm, seed * 1000 + i);
    const SimResult sim = Simulate(spec);
    examples.push_back(MakeExample(StftForward(sim.mixture, 64, 16), sim.doas[0], spec.Geometry(),
                                   sim.references[0].samples.col(0)));
  }
  std::vector<const TrainingExample*> batch;
  for (const auto& e : examples) batch.push_back(&e);
  const auto params = InitMaskNet(3, o.hidden, 1, seed + 11);
  const GradCheckReport r = GradCheck(params, batch, GraphConfig{}, o.count, o.step, seed + 5);
  out << FormatGradCheck(r);
  const bool ok = r.median_rel_error < 1e-4 && r.max_rel_error < 1e-2;
  out << (ok ? "PASS" : "FAIL") << " median " << Format("%.3e", r.median_rel_error) << " max "
      << Format("%.3e", r.max_rel_error) << '\n';
  return ok ? kExitOk : kExitRuntime;
}

// ---- eval / pretrain ------------------------------------------------------

struct EvalOpts {
  std::string manifest, out;
};

void RunEval(const EvalOpts& o, std::ostream& out, std::ostream& err) {
  const ExperimentManifest m = LoadManifest(o.manifest);
  const auto rows = RunExperiment(m, [&](const std::string& msg) { err << msg << '\n'; });
  const std::string csv = FormatExperimentCsv(rows);
  std::ofstream f(o.out, std::ios::binary);
  if (!f) Fail(Errc::kIo, "cannot write " + o.out);
  f << csv;
  out << "wrote " << rows.size() << " rows to " << o.out << '\n';
}

struct PretrainOpts {
  std::string out_params;
  ExperimentCondition c;
};

void RunPretrain(PretrainOpts o, const Globals& g, std::ostream& out, std::ostream& err) {
  if (g.seed) o.c.pretrain_seed = *g.seed;
  o.c.name = "pretrain";
  const MaskNetParams p = PretrainForCondition(o.c, [&](const std::string& msg) { err << msg << '\n'; });
  SaveMaskNet(p, o.out_params);
  out << "wrote " << o.out_params << " (" << p.size() << " parameters)\n";
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mask-based convolutional beamforming with run-time adaptation", "rtbeam"};
  app.set_config("--config", "", "Key-value file of defaults (`key = value`, [subcommand] sections); flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Random seed for simulation, initialization and shuffling");
  app.add_option("--threads", g.threads, "Worker threads for parallel regions (count)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "Render a scene file to multichannel WAVs");
  c_sim->add_option("--scene", sim.scene, "Scene file (key = value)")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out-dir", sim.out_dir, "Output directory")->required();

  DereverbOpts der;
  auto* c_der = app.add_subcommand("dereverb", "WPE dereverberation");
  c_der->add_option("--in", der.in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_der->add_option("--out", der.out, "Output WAV")->required();
  c_der->add_option("--taps", der.wpe.taps, "Last prediction tap L (frames)")->capture_default_str();
  c_der->add_option("--delay", der.wpe.delay, "Prediction delay b (frames)")->capture_default_str();
  c_der->add_option("--iters", der.wpe.iterations, "Iterations (count)")->capture_default_str();
  AddStftOptions(c_der, der.stft);

  SeparateOpts sep;
  auto* c_sep = app.add_subcommand("separate", "FastMNMF blind source separation");
  c_sep->add_option("--in", sep.in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_sep->add_option("--out-dir", sep.out_dir, "Output directory for source_<n>.wav")->required();
  c_sep->add_option("--sources", sep.mnmf.num_sources, "Number of sources N (count)")->capture_default_str();
  c_sep->add_option("--bases", sep.mnmf.num_bases, "NMF bases per source K (count)")->capture_default_str();
  c_sep->add_option("--iters", sep.mnmf.iterations, "Update sweeps (count)")->capture_default_str();
  c_sep->add_option("--ref", sep.ref, "Reference channel (index)")->capture_default_str();
  AddStftOptions(c_sep, sep.stft);

  DoaOpts doa;
  auto* c_doa = app.add_subcommand("doa", "MUSIC direction-of-arrival estimation");
  c_doa->add_option("--in", doa.in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_doa->add_option("--sources", doa.music.num_sources, "Number of sources (count)")->capture_default_str();
  c_doa->add_option("--grid", doa.music.grid_deg, "Azimuth grid step (deg)")->capture_default_str();
  c_doa->add_option("--band-low", doa.music.band_low_hz, "Lowest frequency used (Hz)")->capture_default_str();
  c_doa->add_option("--band-high", doa.music.band_high_hz, "Highest frequency used (Hz)")->capture_default_str();
  AddArrayOptions(c_doa, doa.array);
  AddStftOptions(c_doa, doa.stft);

  EnhanceOpts enh;
  auto* c_enh = app.add_subcommand("enhance", "Mask-based MPDR or WPD enhancement of one direction");
  c_enh->add_option("--in", enh.in, "Input WAV")->required()->check(CLI::ExistingFile);
  c_enh->add_option("--doa", enh.doa_deg, "Target azimuth (deg)")->required();
  c_enh->add_option("--params", enh.params, "Mask network checkpoint")->required()->check(CLI::ExistingFile);
  c_enh->add_option("--beamformer", enh.beamformer, "Beamformer")
      ->capture_default_str()
      ->check(CLI::IsMember({"mpdr", "wpd"}));
  c_enh->add_option("--out", enh.out, "Output WAV (mono)")->required();
  c_enh->add_option("--delay", enh.taps.delay, "WPD prediction delay b (frames)")->capture_default_str();
  c_enh->add_option("--taps", enh.taps.taps, "WPD last tap L (frames)")->capture_default_str();
  c_enh->add_option("--ref", enh.ref, "Reference channel (index)")->capture_default_str();
  AddArrayOptions(c_enh, enh.array);
  AddStftOptions(c_enh, enh.stft);

  AdaptOpts ad;
  auto* c_ad = app.add_subcommand("adapt", "Mint pseudo-labels and fine-tune the mask network");
  c_ad->add_option("--in", ad.in, "Input WAV (run-time recording)")->required()->check(CLI::ExistingFile);
  c_ad->add_option("--params", ad.params, "Input checkpoint")->required()->check(CLI::ExistingFile);
  c_ad->add_option("--out-params", ad.out_params, "Output checkpoint")->required();
  c_ad->add_option("--scorer", ad.scorer, "Quality scorer")
      ->capture_default_str()
      ->check(CLI::IsMember({"oracle", "heuristic"}));
  c_ad->add_option("--refs", ad.refs, "Directory with reference_<n>.wav (oracle scorer)");
  c_ad->add_option("--alpha", ad.mint.alpha_db, "Quality gate alpha (dB)")->capture_default_str();
  c_ad->add_option("--window", ad.mint.window_s, "Label window length (s)")->capture_default_str();
  c_ad->add_option("--steps", ad.train.steps, "Fine-tuning steps (count)")->capture_default_str();
  c_ad->add_option("--lr", ad.train.adam.lr, "Learning rate")->capture_default_str();
  c_ad->add_option("--batch", ad.train.batch, "Batch size (count)")->capture_default_str();
  c_ad->add_option("--replay", ad.replay, "Directory of `simulate` outputs used as replay data");
  c_ad->add_option("--sources", ad.mint.mnmf.num_sources, "FastMNMF sources N (count)")->capture_default_str();
  c_ad->add_option("--bases", ad.mint.mnmf.num_bases, "FastMNMF bases K (count)")->capture_default_str();
  c_ad->add_option("--mnmf-iters", ad.mint.mnmf.iterations, "FastMNMF sweeps (count)")->capture_default_str();
  c_ad->add_option("--ref", ad.mint.ref, "Reference channel (index)")->capture_default_str();
  AddArrayOptions(c_ad, ad.array);
  AddStftOptions(c_ad, ad.mint.stft);

  GradCheckOpts gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of the training graph");
  c_gc->add_option("--count", gc.count, "Parameters sampled (count)")->capture_default_str();
  c_gc->add_option("--step", gc.step, "Central-difference step (parameter units)")->capture_default_str();
  c_gc->add_option("--hidden", gc.hidden, "Hidden width of the checked network (units)")->capture_default_str();

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("eval", "Run an adaptation experiment manifest and write CSV");
  c_ev->add_option("--manifest", ev.manifest, "Experiment manifest")->required()->check(CLI::ExistingFile);
  c_ev->add_option("--out", ev.out, "Output CSV")->required();

  PretrainOpts pt;
  auto* c_pt = app.add_subcommand("pretrain", "Train the mask network on simulated scenes");
  c_pt->add_option("--out-params", pt.out_params, "Output checkpoint")->required();
  c_pt->add_option("--scenes", pt.c.pretrain_scenes, "Simulated scenes (count)")->capture_default_str();
  c_pt->add_option("--duration", pt.c.pretrain_duration, "Scene length (s)")->capture_default_str();
  c_pt->add_option("--rt60", pt.c.pretrain_rt60, "Reverberation time (s)")->capture_default_str();
  c_pt->add_option("--speakers", pt.c.n_speakers, "Speakers per scene (count)")->capture_default_str();
  c_pt->add_option("--mics", pt.c.n_mics, "Microphones (count)")->capture_default_str();
  c_pt->add_option("--radius", pt.c.array_radius, "Array radius (m)")->capture_default_str();
  c_pt->add_option("--steps", pt.c.pretrain_steps, "Optimizer steps (count)")->capture_default_str();
  c_pt->add_option("--lr", pt.c.pretrain_lr, "Learning rate")->capture_default_str();
  c_pt->add_option("--batch", pt.c.batch, "Batch size (count)")->capture_default_str();
  c_pt->add_option("--hidden", pt.c.hidden, "Hidden width (units)")->capture_default_str();
  c_pt->add_option("--context", pt.c.context, "Context frames on each side (frames)")->capture_default_str();
  c_pt->add_option("--n-fft", pt.c.n_fft, "STFT size (samples)")->capture_default_str();
  c_pt->add_option("--hop", pt.c.hop, "STFT hop (samples)")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kExitUsage;
  }

  try {
    SetNumThreads(g.threads);
    if (c_sim->parsed()) RunSimulate(sim, g, out);
    if (c_der->parsed()) RunDereverb(der, out);
    if (c_sep->parsed()) RunSeparate(sep, g, out);
    if (c_doa->parsed()) RunDoa(doa, out);
    if (c_enh->parsed()) RunEnhance(enh, out);
    if (c_ad->parsed()) RunAdapt(ad, g, out, err);
    if (c_gc->parsed()) return RunGradCheck(gc, g, out);
    if (c_ev->parsed()) RunEval(ev, out, err);
    if (c_pt->parsed()) RunPretrain(pt, g, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::kUsage ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace rtbeam::cli
