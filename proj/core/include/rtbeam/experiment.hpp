// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "rtbeam/adapt.hpp"

namespace rtbeam {

// One mismatched-condition adaptation setup. Keys in the manifest use the
// member names verbatim (e.g. `eval_rt60 = 0.9`).
struct ExperimentCondition {
  std::string name = "default";
  int line = 0;

  // Scenes
  int n_speakers = 2;
  int n_mics = 4;
  double array_radius = 0.05;  // m
  double snr_db = std::numeric_limits<double>::infinity();

  // Pretraining (skipped when `params` names a checkpoint)
  std::string params;
  double pretrain_rt60 = 0.3;  // s
  int pretrain_scenes = 200;
  double pretrain_duration = 2.0;  // s per scene
  int pretrain_steps = 400;
  double pretrain_lr = 1e-3;
  std::uint64_t pretrain_seed = 0;
  int hidden = 24;
  int context = 1;

  // Adaptation
  double eval_rt60 = 0.9;  // s
  double budget_s = 16.0;  // held-in audio used for minting labels
  double heldout_s = 4.0;  // evaluation audio after the held-in part
  double window_s = 4.0;
  std::string scorer = "oracle";
  double alpha = 10.0;  // dB
  int mnmf_bases = 4;
  int mnmf_iters = 50;
  int steps = 50;
  double lr = 4e-5;
  int batch = 4;

  // Front end
  int n_fft = 256;
  int hop = 64;
  int delay = 3;
  int taps = 8;

  std::vector<std::uint64_t> seeds{0};
};

struct ExperimentManifest {
  std::vector<ExperimentCondition> conditions;
};

// Global keys set defaults for every `[condition]` block. Unknown keys or
// sections throw Errc::kParse with "<name>:<line>".
ExperimentManifest ParseManifest(const std::string& text, const std::string& source_name = "<manifest>",
                                 const std::filesystem::path& base_dir = {});
ExperimentManifest LoadManifest(const std::filesystem::path& path);

struct ExperimentRow {
  std::string condition;
  double budget_s = 0.0;
  std::uint64_t seed = 0;
  double si_sdr_before = 0.0;
  double si_sdr_after = 0.0;
  double sdr_before = 0.0;
  double sdr_after = 0.0;
  int num_labels = 0;
};

using ExperimentLog = std::function<void(const std::string&)>;

MaskNetParams PretrainForCondition(const ExperimentCondition& c, const ExperimentLog& log = {});
ExperimentRow RunTrial(const ExperimentCondition& c, const MaskNetParams& pretrained,
                       std::uint64_t seed, const ExperimentLog& log = {});
std::vector<ExperimentRow> RunExperiment(const ExperimentManifest& manifest,
                                         const ExperimentLog& log = {});

// Header plus one row per result, fixed 6-decimal formatting.
std::string FormatExperimentCsv(const std::vector<ExperimentRow>& rows);

}  // namespace rtbeam
