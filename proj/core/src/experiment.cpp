// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/experiment.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "rtbeam/error.hpp"
#include "rtbeam/kv_file.hpp"
#include "rtbeam/metrics.hpp"

namespace rtbeam {
namespace {

[[noreturn]] void ManifestFail(const std::string& src, int line, const std::string& msg) {
  Fail(Errc::kParse, src + ":" + std::to_string(line) + ": " + msg);
}

void Apply(ExperimentCondition& c, const KvEntry& e, const std::string& src,
           const std::filesystem::path& base_dir) {
  auto d = [&] { return ParseDouble(e, src); };
  auto i = [&] { return ParseInt(e, src); };
  const std::map<std::string, double*> doubles{
      {"array_radius", &c.array_radius}, {"snr_db", &c.snr_db},
      {"pretrain_rt60", &c.pretrain_rt60}, {"pretrain_duration", &c.pretrain_duration},
      {"pretrain_lr", &c.pretrain_lr}, {"eval_rt60", &c.eval_rt60},
      {"budget_s", &c.budget_s}, {"heldout_s", &c.heldout_s}, {"window_s", &c.window_s},
      {"alpha", &c.alpha}, {"lr", &c.lr}};
  const std::map<std::string, int*> ints{
      {"n_speakers", &c.n_speakers}, {"n_mics", &c.n_mics},
      {"pretrain_scenes", &c.pretrain_scenes}, {"pretrain_steps", &c.pretrain_steps},
      {"hidden", &c.hidden}, {"context", &c.context}, {"mnmf_bases", &c.mnmf_bases},
      {"mnmf_iters", &c.mnmf_iters}, {"steps", &c.steps}, {"batch", &c.batch},
      {"n_fft", &c.n_fft}, {"hop", &c.hop}, {"delay", &c.delay}, {"taps", &c.taps}};
  if (auto it = doubles.find(e.key); it != doubles.end()) {
    *it->second = d();
  } else if (auto jt = ints.find(e.key); jt != ints.end()) {
    *jt->second = i();
  } else if (e.key == "name") {
    c.name = e.value;
  } else if (e.key == "scorer") {
    if (e.value != "oracle" && e.value != "heuristic") ManifestFail(src, e.line, "scorer must be oracle or heuristic");
    c.scorer = e.value;
  } else if (e.key == "params") {
    std::filesystem::path p = e.value;
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    c.params = p.string();
  } else if (e.key == "pretrain_seed") {
    const int v = i();
    if (v < 0) ManifestFail(src, e.line, "seed must be non-negative");
    c.pretrain_seed = static_cast<std::uint64_t>(v);
  } else if (e.key == "seeds") {
    c.seeds.clear();
    for (double v : ParseDoubleList(e, src)) {
      if (v < 0 || v != std::floor(v)) ManifestFail(src, e.line, "seeds must be non-negative integers");
      c.seeds.push_back(static_cast<std::uint64_t>(v));
    }
  } else {
    ManifestFail(src, e.line, "unknown key '" + e.key + "'");
  }
}

std::uint64_t Mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void Log(const ExperimentLog& log, const std::string& msg) {
  if (log) log(msg);
}

GraphConfig GraphFor(const ExperimentCondition& c) {
  GraphConfig g;
  g.taps = {c.delay, c.taps};
  return g;
}

std::vector<TrainingExample> PretrainExamples(const ExperimentCondition& c) {
  SceneSampling s;
  s.n_speakers = c.n_speakers;
  s.n_mics = c.n_mics;
  s.array_radius = c.array_radius;
  s.rt60 = c.pretrain_rt60;
  s.snr_db = c.snr_db;
  s.duration = c.pretrain_duration;
  std::vector<std::vector<TrainingExample>> per_scene(static_cast<std::size_t>(c.pretrain_scenes));
  for (int i = 0; i < c.pretrain_scenes; ++i) {
    const SceneSpec spec = SampleScene(s, Mix(c.pretrain_seed, static_cast<std::uint64_t>(i)));
    per_scene[static_cast<std::size_t>(i)] =
        SceneExamples(Simulate(spec), spec.Geometry(), {c.n_fft, c.hop}, 0);
  }
  std::vector<TrainingExample> out;
  for (auto& v : per_scene)
    for (auto& e : v) out.push_back(std::move(e));
  return out;
}

}  // namespace

ExperimentManifest ParseManifest(const std::string& text, const std::string& source_name,
                                 const std::filesystem::path& base_dir) {
  const KvFile kv = ParseKv(text, source_name);
  ExperimentCondition defaults;
  for (const auto& e : kv.global().entries) Apply(defaults, e, source_name, base_dir);
  ExperimentManifest m;
  for (std::size_t s = 1; s < kv.sections.size(); ++s) {
    const KvSection& sec = kv.sections[s];
    if (sec.name != "condition") ManifestFail(source_name, sec.line, "unknown section [" + sec.name + "]");
    ExperimentCondition c = defaults;
    c.line = sec.line;
    for (const auto& e : sec.entries) Apply(c, e, source_name, base_dir);
    if (c.n_speakers < 1 || c.n_mics < 2 || c.steps < 0 || c.batch < 1 || c.budget_s <= 0 ||
        c.window_s <= 0 || c.heldout_s <= 0 || c.pretrain_scenes < 1) {
      ManifestFail(source_name, sec.line, "condition '" + c.name + "' has out-of-range values");
    }
    m.conditions.push_back(std::move(c));
  }
  return m;
}

ExperimentManifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(Errc::kIo, "cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return ParseManifest(text.str(), path.string(), path.parent_path());
}

MaskNetParams PretrainForCondition(const ExperimentCondition& c, const ExperimentLog& log) {
  if (!c.params.empty()) return LoadMaskNet(c.params);
  Log(log, "[" + c.name + "] simulating " + std::to_string(c.pretrain_scenes) + " pretraining scenes");
  const auto examples = PretrainExamples(c);
  TrainOptions o;
  o.steps = c.pretrain_steps;
  o.batch = c.batch;
  o.adam.lr = c.pretrain_lr;
  o.graph = GraphFor(c);
  o.seed = Mix(c.pretrain_seed, 1);
  double running = 0.0;
  o.on_step = [&](int step, double loss) {
    running += loss;
    if ((step + 1) % 50 == 0) {
      Log(log, "[" + c.name + "] pretrain step " + std::to_string(step + 1) + " mean loss " +
                   std::to_string(running / 50.0));
      running = 0.0;
    }
  };
  return Pretrain(InitMaskNet(c.n_mics, c.hidden, c.context, Mix(c.pretrain_seed, 2)), examples, o);
}

ExperimentRow RunTrial(const ExperimentCondition& c, const MaskNetParams& pretrained,
                       std::uint64_t seed, const ExperimentLog& log) {
  SceneSampling s;
  s.n_speakers = c.n_speakers;
  s.n_mics = c.n_mics;
  s.array_radius = c.array_radius;
  s.rt60 = c.eval_rt60;
  s.snr_db = c.snr_db;
  s.duration = c.budget_s + c.heldout_s;
  const SceneSpec spec = SampleScene(s, Mix(seed, 0xE7A1));
  const SimResult sim = Simulate(spec);
  const ArrayGeometry geom = spec.Geometry();
  const auto held_in = static_cast<Eigen::Index>(std::llround(c.budget_s * kSampleRate));
  const Eigen::Index held_out = sim.mixture.num_samples() - held_in;
  const StftConfig stft{c.n_fft, c.hop};
  const GraphConfig graph = GraphFor(c);

  // Label minting on the held-in part.
  TimeSignal adapt_mix(sim.mixture.samples.topRows(held_in));
  MintOptions mo;
  mo.window_s = c.window_s;
  mo.alpha_db = c.alpha;
  mo.stft = stft;
  mo.mnmf.num_sources = c.n_speakers;
  mo.mnmf.num_bases = c.mnmf_bases;
  mo.mnmf.iterations = c.mnmf_iters;
  mo.mnmf.seed = Mix(seed, 0x3F);
  std::vector<PseudoLabel> labels;
  if (c.scorer == "oracle") {
    std::vector<Eigen::VectorXd> refs;
    for (const auto& r : sim.references) refs.push_back(r.samples.col(0).head(held_in));
    labels = MintPseudoLabels(adapt_mix, geom, OracleScorer(refs), mo);
  } else {
    labels = MintPseudoLabels(adapt_mix, geom, HeuristicScorer(), mo);
  }
  Log(log, "[" + c.name + "] seed " + std::to_string(seed) + ": " + std::to_string(labels.size()) +
               " pseudo-labels");

  MaskNetParams adapted = pretrained;
  if (!labels.empty() && c.steps > 0) {
    // Replay as many pretraining-condition items as there are labels.
    ExperimentCondition rc = c;
    rc.pretrain_scenes = std::max(1, static_cast<int>((labels.size() + c.n_speakers - 1) / c.n_speakers));
    rc.pretrain_seed = Mix(seed, 0x5EED);
    rc.pretrain_duration = c.window_s;
    std::vector<TrainingExample> replay = PretrainExamples(rc);
    replay.resize(std::min(replay.size(), labels.size()));
    TrainOptions o;
    o.steps = c.steps;
    o.batch = c.batch;
    o.adam.lr = c.lr;
    o.graph = graph;
    o.seed = Mix(seed, 0xF1);
    o.on_warning = [&](const std::string& w) { Log(log, "warning: " + w); };
    adapted = FineTune(pretrained, labels, replay, geom, o);
  }

  // Evaluation on the held-out part with the true directions.
  TimeSignal eval_mix(sim.mixture.samples.bottomRows(held_out));
  const ComplexSpectrogram x = StftForward(eval_mix, stft);
  ExperimentRow row;
  row.condition = c.name;
  row.budget_s = c.budget_s;
  row.seed = seed;
  row.num_labels = static_cast<int>(labels.size());
  const double n = static_cast<double>(sim.references.size());
  for (std::size_t k = 0; k < sim.references.size(); ++k) {
    const Eigen::VectorXd ref = sim.references[k].samples.col(0).tail(held_out);
    const int len = static_cast<int>(held_out);
    const Eigen::VectorXd before = EnhanceSource(pretrained, x, sim.doas[k], geom, len, graph);
    const Eigen::VectorXd after = EnhanceSource(adapted, x, sim.doas[k], geom, len, graph);
    row.si_sdr_before += SiSdr(before, ref) / n;
    row.si_sdr_after += SiSdr(after, ref) / n;
    row.sdr_before += Sdr(before, ref) / n;
    row.sdr_after += Sdr(after, ref) / n;
  }
  return row;
}

std::vector<ExperimentRow> RunExperiment(const ExperimentManifest& manifest, const ExperimentLog& log) {
  std::vector<ExperimentRow> rows;
  for (const auto& c : manifest.conditions) {
    const MaskNetParams pretrained = PretrainForCondition(c, log);
    for (std::uint64_t seed : c.seeds) rows.push_back(RunTrial(c, pretrained, seed, log));
  }
  return rows;
}

std::string FormatExperimentCsv(const std::vector<ExperimentRow>& rows) {
  std::string out = "condition,budget_s,seed,si_sdr_before,si_sdr_after,sdr_before,sdr_after\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%.6f,%" PRIu64 ",%.6f,%.6f,%.6f,%.6f\n", r.budget_s, r.seed,
                  r.si_sdr_before, r.si_sdr_after, r.sdr_before, r.sdr_after);
    out += r.condition;
    out += buf;
  }
  return out;
}

}  // namespace rtbeam
