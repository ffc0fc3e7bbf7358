// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>

#include "rtbeam/types.hpp"

namespace rtbeam {

// Reads a RIFF/WAVE file holding PCM16 or IEEE float32 samples at 16 kHz.
// PCM16 values v map to v / 32768. No resampling is performed: any other
// rate raises Errc::kRate, any other encoding Errc::kFormat.
TimeSignal ReadWav(const std::filesystem::path& path);

// Writes an IEEE float32 WAV. Rejects non-finite samples with Errc::kValue.
void WriteWav(const TimeSignal& signal, const std::filesystem::path& path);

}  // namespace rtbeam
