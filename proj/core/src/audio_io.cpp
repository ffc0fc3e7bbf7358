// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/audio_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "rtbeam/error.hpp"

namespace rtbeam {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t ReadU32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t ReadU16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

TimeSignal ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(Errc::kIo, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    Fail(Errc::kFormat, path.string() + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated data chunk by reading what is present.
      if (std::memcmp(chunk, "data", 4) != 0) break;
    }
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0 && avail >= 16) {
      format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = ReadU32(chunk + 12);
      bits = ReadU16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) format = ReadU16(chunk + 32);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt || data == nullptr) {
    Fail(Errc::kFormat, path.string() + ": missing fmt or data chunk");
  }
  if (channels == 0) Fail(Errc::kFormat, path.string() + ": zero channels");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) {
    Fail(Errc::kFormat, path.string() + ": only PCM16 and float32 are supported");
  }
  if (rate != static_cast<std::uint32_t>(kSampleRate)) {
    Fail(Errc::kRate, path.string() + ": sample rate " + std::to_string(rate) +
                          " Hz, expected 16000 Hz");
  }

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  if (frames == 0) Fail(Errc::kFormat, path.string() + ": empty data chunk");
  TimeSignal out(static_cast<Eigen::Index>(frames), channels);
  for (std::size_t s = 0; s < frames; ++s) {
    for (std::size_t m = 0; m < channels; ++m) {
      const std::uint8_t* p = data + (s * channels + m) * width;
      double v;
      if (pcm16) {
        v = static_cast<double>(static_cast<std::int16_t>(ReadU16(p))) / 32768.0;
      } else {
        v = static_cast<double>(std::bit_cast<float>(ReadU32(p)));
      }
      out.samples(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(m)) = v;
    }
  }
  if (!out.AllFinite()) Fail(Errc::kValue, path.string() + ": non-finite sample");
  return out;
}

void WriteWav(const TimeSignal& signal, const std::filesystem::path& path) {
  if (signal.num_samples() < 1 || signal.num_channels() < 1) {
    Fail(Errc::kSize, "cannot write an empty signal");
  }
  if (!signal.AllFinite()) Fail(Errc::kValue, "signal contains non-finite samples");

  const auto channels = static_cast<std::uint16_t>(signal.num_channels());
  const auto frames = static_cast<std::uint32_t>(signal.num_samples());
  const std::uint32_t data_bytes = frames * channels * 4u;

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, kFormatFloat);
  PutU16(out, channels);
  PutU32(out, static_cast<std::uint32_t>(kSampleRate));
  PutU32(out, static_cast<std::uint32_t>(kSampleRate) * channels * 4u);
  PutU16(out, static_cast<std::uint16_t>(channels * 4));
  PutU16(out, 32);
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (std::uint32_t s = 0; s < frames; ++s) {
    for (std::uint16_t m = 0; m < channels; ++m) {
      const float v = static_cast<float>(signal.samples(s, m));
      PutU32(out, std::bit_cast<std::uint32_t>(v));
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) Fail(Errc::kIo, "cannot open " + path.string() + " for writing");
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) Fail(Errc::kIo, "write failed for " + path.string());
}

}  // namespace rtbeam
