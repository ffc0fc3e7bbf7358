// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/room_sim.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "rtbeam/audio_io.hpp"
#include "rtbeam/error.hpp"
#include "rtbeam/fft.hpp"
#include "rtbeam/kv_file.hpp"

namespace rtbeam {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kHalfTaps = 4;  // 8-tap fractional delay

double Sinc(double x) { return std::abs(x) < 1e-12 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

void AddFractionalImpulse(Eigen::VectorXd& h, double delay, double gain) {
  const int base = static_cast<int>(std::floor(delay));
  for (int n = base - kHalfTaps + 1; n <= base + kHalfTaps; ++n) {
    if (n < 0 || n >= h.size()) continue;
    const double x = n - delay;
    const double win = 0.5 * (1.0 + std::cos(kPi * x / kHalfTaps));
    h(n) += gain * Sinc(x) * win;
  }
}

int NextPow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Linear convolution truncated to the input length.
Eigen::VectorXd Convolve(const Eigen::VectorXd& x, const Eigen::VectorXd& h) {
  const int S = static_cast<int>(x.size());
  const int n = NextPow2(S + static_cast<int>(h.size()) - 1);
  RealFft fft(n);
  std::vector<double> a(static_cast<std::size_t>(n), 0.0), b(static_cast<std::size_t>(n), 0.0);
  std::copy(x.data(), x.data() + S, a.begin());
  std::copy(h.data(), h.data() + h.size(), b.begin());
  std::vector<cdouble> fa(static_cast<std::size_t>(fft.num_bins())), fb(fa.size());
  fft.Forward(a, fa);
  fft.Forward(b, fb);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  fft.Inverse(fa, a);
  return Eigen::Map<Eigen::VectorXd>(a.data(), S);
}

bool Inside(const SceneSpec& s, const Eigen::Vector2d& p) {
  return p.x() > 0.0 && p.x() < s.room_w && p.y() > 0.0 && p.y() < s.room_h;
}

Eigen::VectorXd LoadSourceSignal(const SourceSpec& src, const SceneSpec& spec, int num_samples) {
  const std::string prefix = "synthetic:";
  if (src.signal.rfind(prefix, 0) == 0) {
    const std::string id = src.signal.substr(prefix.size());
    std::uint64_t value = 0;
    try {
      value = std::stoull(id);
    } catch (const std::exception&) {
      Fail(Errc::kSpec, "bad synthetic source id '" + id + "'");
    }
    return SyntheticSpeech(value, num_samples);
  }
  std::filesystem::path p = src.signal;
  if (p.is_relative() && !spec.base_dir.empty()) p = spec.base_dir / p;
  const TimeSignal sig = ReadWav(p);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_samples);
  const Eigen::Index n = std::min<Eigen::Index>(num_samples, sig.num_samples());
  out.head(n) = sig.samples.col(0).head(n);
  return out;
}

TimeSignal Reverberate(const Eigen::VectorXd& dry, const SceneSpec& spec,
                       const Eigen::Vector2d& source, double rt60) {
  const auto rirs = RoomImpulseResponses(spec, source, rt60);
  TimeSignal out(dry.size(), spec.n_mics);
  for (int m = 0; m < spec.n_mics; ++m) out.samples.col(m) = Convolve(dry, rirs[static_cast<std::size_t>(m)]);
  return out;
}

}  // namespace

Eigen::VectorXd SyntheticSpeech(std::uint64_t id, int num_samples) {
  std::mt19937_64 rng(0x9E3779B97F4A7C15ull ^ (id * 0xBF58476D1CE4E5B9ull + 1));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double fs = kSampleRate;
  const double f0_base = 90.0 + 150.0 * uni(rng);

  // Three two-pole formant resonators in cascade; centre frequencies glide
  // between per-syllable targets.
  constexpr int kFormants = 3;
  const std::array<double, kFormants> lo{300.0, 900.0, 2200.0};
  const std::array<double, kFormants> span{500.0, 1300.0, 1000.0};
  const std::array<double, kFormants> bw{80.0, 110.0, 160.0};
  std::array<double, kFormants> centre{}, target{};
  std::array<std::array<double, 2>, kFormants> state{};
  for (int k = 0; k < kFormants; ++k) centre[k] = lo[k] + span[k] * uni(rng);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(num_samples);
  double next_pulse = 0.0;
  int pos = 0;
  while (pos < num_samples) {
    // One syllable: 0.12-0.32 s, rate near 4 Hz, with short pauses.
    const int len = static_cast<int>((0.12 + 0.2 * uni(rng)) * fs);
    const int gap = static_cast<int>(0.06 * uni(rng) * fs);
    const bool voiced = uni(rng) < 0.8;
    const double f_start = f0_base * (0.85 + 0.3 * uni(rng));
    const double f_end = f_start * (0.85 + 0.3 * uni(rng));
    for (int k = 0; k < kFormants; ++k) target[k] = lo[k] + span[k] * uni(rng);
    for (int i = 0; i < len && pos + i < num_samples; ++i) {
      const double frac = static_cast<double>(i) / len;
      const double env = std::pow(std::sin(kPi * frac), 2);
      double e = 0.0;
      if (voiced) {
        // Pulse train with per-period jitter, plus aspiration.
        if (i >= next_pulse) {
          const double f0 = f_start + (f_end - f_start) * frac;
          e += 1.0 + 0.2 * gauss(rng);
          next_pulse = i + fs / f0 * (1.0 + 0.03 * gauss(rng));
        }
        e += 0.05 * gauss(rng);
      } else {
        e = 0.3 * gauss(rng);
      }
      double v = e;
      for (int k = 0; k < kFormants; ++k) {
        centre[k] += 0.002 * (target[k] - centre[k]);
        const double r = std::exp(-kPi * bw[k] / fs);
        const double a1 = 2.0 * r * std::cos(2.0 * kPi * centre[k] / fs);
        const double a2 = -r * r;
        const double y = (1.0 - r) * v + a1 * state[k][0] + a2 * state[k][1];
        state[k][1] = state[k][0];
        state[k][0] = y;
        v = y;
      }
      out(pos + i) = env * v;
    }
    next_pulse = 0.0;
    pos += len + gap;
  }
  const double rms = std::sqrt(out.squaredNorm() / std::max(1, num_samples));
  if (rms > 0.0) out *= 0.1 / rms;
  return out;
}

double SabineAbsorption(double room_w, double room_h, double rt60) {
  // 2-D mean free path pi A / P, 60 dB decay: T = 6 ln(10) mfp / (c alpha).
  const double area = room_w * room_h;
  const double perimeter = 2.0 * (room_w + room_h);
  const double alpha = 6.0 * std::log(10.0) * kPi * area / (kSpeedOfSound * perimeter * rt60);
  return std::clamp(alpha, 1e-3, 1.0);
}

int ImageOrder(double room_w, double room_h, double rt60) {
  const double order = std::ceil(rt60 * kSpeedOfSound / std::min(room_w, room_h));
  return static_cast<int>(std::clamp(order, 1.0, 30.0));
}

std::vector<Eigen::VectorXd> RoomImpulseResponses(const SceneSpec& spec,
                                                  const Eigen::Vector2d& source, double rt60) {
  const double alpha = SabineAbsorption(spec.room_w, spec.room_h, rt60);
  const double reflect = std::sqrt(1.0 - alpha);
  const int order = ImageOrder(spec.room_w, spec.room_h, rt60);
  const ArrayGeometry geom = spec.Geometry();

  struct Image {
    Eigen::Vector2d pos;
    int order;
  };
  std::vector<Image> images;
  for (int ix = -order; ix <= order; ++ix) {
    for (int iy = -(order - std::abs(ix)); iy <= order - std::abs(ix); ++iy) {
      const double x = (ix % 2 == 0) ? ix * spec.room_w + source.x()
                                     : (ix + 1) * spec.room_w - source.x();
      const double y = (iy % 2 == 0) ? iy * spec.room_h + source.y()
                                     : (iy + 1) * spec.room_h - source.y();
      const int k = std::abs(ix) + std::abs(iy);
      if (k > 0 && reflect == 0.0) continue;
      images.push_back({{x, y}, k});
    }
  }

  std::vector<Eigen::VectorXd> out;
  for (int m = 0; m < spec.n_mics; ++m) {
    const Eigen::Vector2d mic = spec.array_center + geom.mics[static_cast<std::size_t>(m)];
    double max_delay = 0.0;
    for (const auto& img : images) max_delay = std::max(max_delay, (img.pos - mic).norm());
    max_delay *= kSampleRate / kSpeedOfSound;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::ceil(max_delay)) + kHalfTaps + 2);
    for (const auto& img : images) {
      const double dist = std::max((img.pos - mic).norm(), 1e-2);
      const double gain = std::pow(reflect, img.order) / dist;
      AddFractionalImpulse(h, dist / kSpeedOfSound * kSampleRate, gain);
    }
    out.push_back(std::move(h));
  }
  return out;
}

double NoiseGainForSnr(const TimeSignal& target, const TimeSignal& noise, double snr_db) {
  if (target.samples.rows() != noise.samples.rows() || target.samples.cols() != noise.samples.cols()) {
    Fail(Errc::kShape, "target and noise shapes differ");
  }
  const double pn = noise.samples.squaredNorm();
  if (!(pn > 0.0)) Fail(Errc::kValue, "noise has zero energy");
  const double pt = target.samples.squaredNorm();
  return std::sqrt(pt / (pn * std::pow(10.0, snr_db / 10.0)));
}

TimeSignal MixAtSnr(const TimeSignal& target, const TimeSignal& noise, double snr_db) {
  const double g = NoiseGainForSnr(target, noise, snr_db);
  return TimeSignal(target.samples + g * noise.samples);
}

SimResult Simulate(const SceneSpec& spec) {
  if (spec.sources.empty()) Fail(Errc::kSpec, "scene has no sources");
  if (spec.n_mics < 2) Fail(Errc::kSpec, "scene needs at least two microphones");
  if (!(spec.rt60 > 0.0) || !(spec.rt60_early > 0.0)) Fail(Errc::kSpec, "rt60 must be positive");
  if (!(spec.room_w > 0.0) || !(spec.room_h > 0.0)) Fail(Errc::kSpec, "room dimensions must be positive");
  if (!(spec.duration > 0.0)) Fail(Errc::kSpec, "duration must be positive");
  const ArrayGeometry geom = spec.Geometry();
  for (const auto& p : geom.mics) {
    if (!Inside(spec, spec.array_center + p)) Fail(Errc::kSpec, "microphone outside the room");
  }
  for (const auto& s : spec.sources) {
    if (!Inside(spec, s.position)) Fail(Errc::kSpec, "source outside the room");
  }

  const int S = static_cast<int>(std::lround(spec.duration * kSampleRate));
  SimResult out;
  TimeSignal reverberant(S, spec.n_mics);
  const double early_rt60 = std::min(spec.rt60_early, spec.rt60);
  for (const auto& src : spec.sources) {
    const Eigen::VectorXd dry = LoadSourceSignal(src, spec, S);
    out.images.push_back(Reverberate(dry, spec, src.position, spec.rt60));
    reverberant.samples += out.images.back().samples;
    out.references.push_back(Reverberate(dry, spec, src.position, early_rt60));
    const Eigen::Vector2d rel = src.position - spec.array_center;
    out.doas.push_back(WrapAngle(std::atan2(rel.y(), rel.x())));
  }

  out.noise = TimeSignal(S, spec.n_mics);
  if (std::isfinite(spec.snr_db)) {
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd white(S, spec.n_mics);
    for (Eigen::Index m = 0; m < white.cols(); ++m)
      for (Eigen::Index s = 0; s < white.rows(); ++s) white(s, m) = gauss(rng);
    TimeSignal smooth(S, spec.n_mics);
    for (int m = 0; m < spec.n_mics; ++m) {
      smooth.samples.col(m) = 0.5 * (white.col(m) + white.col((m + 1) % spec.n_mics));
    }
    const double g = NoiseGainForSnr(reverberant, smooth, spec.snr_db);
    out.noise.samples = g * smooth.samples;
  }
  out.mixture = TimeSignal(reverberant.samples + out.noise.samples);
  return out;
}

SceneSpec ParseSceneSpec(const std::string& text, const std::filesystem::path& base_dir,
                         const std::string& source_name) {
  const KvFile kv = ParseKv(text, source_name);
  SceneSpec spec;
  spec.base_dir = base_dir;
  auto pair = [&](const KvEntry& e) {
    const auto v = ParseDoubleList(e, source_name);
    if (v.size() != 2) Fail(Errc::kParse, source_name + ":" + std::to_string(e.line) + ": expected 'x, y'");
    return Eigen::Vector2d(v[0], v[1]);
  };
  for (const auto& e : kv.global().entries) {
    if (e.key == "room_w") spec.room_w = ParseDouble(e, source_name);
    else if (e.key == "room_h") spec.room_h = ParseDouble(e, source_name);
    else if (e.key == "array_center") spec.array_center = pair(e);
    else if (e.key == "array_radius") spec.array_radius = ParseDouble(e, source_name);
    else if (e.key == "array_rotation") spec.array_rotation = ParseDouble(e, source_name);
    else if (e.key == "n_mics") spec.n_mics = ParseInt(e, source_name);
    else if (e.key == "rt60") spec.rt60 = ParseDouble(e, source_name);
    else if (e.key == "rt60_early") spec.rt60_early = ParseDouble(e, source_name);
    else if (e.key == "snr_db") spec.snr_db = ParseDouble(e, source_name);
    else if (e.key == "duration") spec.duration = ParseDouble(e, source_name);
    else if (e.key == "seed") spec.seed = static_cast<std::uint64_t>(ParseInt(e, source_name));
    else if (e.key == "source") {
      // source = x, y, signal
      const auto c1 = e.value.find(',');
      const auto c2 = c1 == std::string::npos ? c1 : e.value.find(',', c1 + 1);
      if (c2 == std::string::npos) {
        Fail(Errc::kParse, source_name + ":" + std::to_string(e.line) + ": expected 'x, y, signal'");
      }
      KvEntry xy{e.key, e.value.substr(0, c2), e.line};
      std::string sig = e.value.substr(c2 + 1);
      sig.erase(0, sig.find_first_not_of(" \t"));
      spec.sources.push_back({pair(xy), sig});
    } else {
      Fail(Errc::kParse, source_name + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
  return spec;
}

SceneSpec LoadSceneSpec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseSceneSpec(ss.str(), path.parent_path(), path.string());
}

std::string FormatSceneSpec(const SceneSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "room_w = " << spec.room_w << "\n"
     << "room_h = " << spec.room_h << "\n"
     << "array_center = " << spec.array_center.x() << ", " << spec.array_center.y() << "\n"
     << "array_radius = " << spec.array_radius << "\n"
     << "array_rotation = " << spec.array_rotation << "\n"
     << "n_mics = " << spec.n_mics << "\n"
     << "rt60 = " << spec.rt60 << "\n"
     << "rt60_early = " << spec.rt60_early << "\n"
     << "snr_db = " << (std::isfinite(spec.snr_db) ? std::to_string(spec.snr_db) : std::string("inf")) << "\n"
     << "duration = " << spec.duration << "\n"
     << "seed = " << spec.seed << "\n";
  for (const auto& s : spec.sources) {
    os << "source = " << s.position.x() << ", " << s.position.y() << ", " << s.signal << "\n";
  }
  return os.str();
}

SceneSpec SampleScene(const SceneSampling& sampling, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  SceneSpec spec;
  spec.room_w = range(7.6, 8.4);
  spec.room_h = range(5.6, 6.4);
  spec.array_center = {range(3.6, 4.4), range(2.6, 3.4)};
  spec.array_radius = sampling.array_radius;
  spec.n_mics = sampling.n_mics;
  spec.rt60 = sampling.rt60;
  spec.snr_db = sampling.snr_db;
  spec.duration = sampling.duration;
  spec.seed = seed;
  spec.array_rotation = 0.0;

  const double min_sep = sampling.min_separation_deg * kPi / 180.0;
  std::vector<double> azimuths;
  while (static_cast<int>(azimuths.size()) < sampling.n_speakers) {
    const double az = range(0.0, 2.0 * kPi);
    bool ok = true;
    for (double other : azimuths) ok = ok && AngularDistance(az, other) >= min_sep;
    if (!ok) continue;
    azimuths.push_back(az);
    const double dist = range(1.0, 2.0);
    SourceSpec src;
    src.position = spec.array_center + dist * Eigen::Vector2d(std::cos(az), std::sin(az));
    src.signal = "synthetic:" + std::to_string(seed * 16 + azimuths.size());
    spec.sources.push_back(src);
  }
  return spec;
}

}  // namespace rtbeam
