// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "rtbeam/geometry.hpp"
#include "rtbeam/types.hpp"

namespace rtbeam {

struct SourceSpec {
  Eigen::Vector2d position{0.0, 0.0};
  // "synthetic:<id>" or a WAV path (relative paths resolve against
  // SceneSpec::base_dir).
  std::string signal = "synthetic:0";
};

struct SceneSpec {
  double room_w = 8.0;  // m
  double room_h = 6.0;  // m
  Eigen::Vector2d array_center{4.0, 3.0};
  double array_radius = 0.05;  // m
  double array_rotation = 0.0; // rad, angle of mic 0
  int n_mics = 4;
  std::vector<SourceSpec> sources;
  double rt60 = 0.5;           // s
  double rt60_early = 0.25;    // s, reference condition
  double snr_db = std::numeric_limits<double>::infinity();  // inf: no noise
  double duration = 2.0;       // s, length of synthetic sources
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;

  ArrayGeometry Geometry() const { return CircularArray(n_mics, array_radius, array_rotation); }
};

struct SimResult {
  TimeSignal mixture;                  // S x M
  std::vector<TimeSignal> images;      // reverberant image of each source
  TimeSignal noise;                    // scaled noise, zero when disabled
  std::vector<TimeSignal> references;  // direct + early (rt60_early) images
  std::vector<double> doas;            // azimuth of each source, [0, 2 pi)
};

// Speech-like test signal: syllables at about 4 Hz, either a jittered
// glottal pulse train or noise, shaped by three gliding formant resonators.
// Seeded by id; RMS is 0.1.
Eigen::VectorXd SyntheticSpeech(std::uint64_t id, int num_samples);

// Wall energy absorption from the two-dimensional Sabine relation, clamped
// to (0, 1].
double SabineAbsorption(double room_w, double room_h, double rt60);
int ImageOrder(double room_w, double room_h, double rt60);

// Impulse responses (one per mic) for a source, 2-D image-source model.
std::vector<Eigen::VectorXd> RoomImpulseResponses(const SceneSpec& spec,
                                                  const Eigen::Vector2d& source, double rt60);

SimResult Simulate(const SceneSpec& spec);

// target + g * noise with g chosen so that
// 10 log10(|target|^2 / |g noise|^2) = snr_db.
TimeSignal MixAtSnr(const TimeSignal& target, const TimeSignal& noise, double snr_db);
double NoiseGainForSnr(const TimeSignal& target, const TimeSignal& noise, double snr_db);

// Reads a scene manifest (`key = value` lines, `source = x, y, signal`).
SceneSpec LoadSceneSpec(const std::filesystem::path& path);
SceneSpec ParseSceneSpec(const std::string& text, const std::filesystem::path& base_dir = {},
                         const std::string& source_name = "<scene>");
std::string FormatSceneSpec(const SceneSpec& spec);

// Random scene following the evaluation-room distribution: room
// U(7.6, 8.4) x U(5.6, 6.4) m, array center U(3.6, 4.4) x U(2.6, 3.4) m,
// speakers at U(1, 2) m from the center.
struct SceneSampling {
  int n_speakers = 2;
  int n_mics = 4;
  double array_radius = 0.05;
  double rt60 = 0.5;
  double snr_db = std::numeric_limits<double>::infinity();
  double duration = 2.0;
  double min_separation_deg = 30.0;
};

SceneSpec SampleScene(const SceneSampling& sampling, std::uint64_t seed);

}  // namespace rtbeam
