// Copyright 2026 The SANet Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Mono 16-bit PCM WAV files.
//
// Samples map to int16 as round(x * 32767) after clamping to [-1, 1], and back
// as v / 32767, so decoding a written file and writing it again reproduces
// the same bytes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "sanet/binary_io.hpp"
#include "sanet/types.hpp"

namespace sanet::wav {

inline constexpr double kPcmScale = 32767.0;

inline std::int16_t quantize(double x) {
  const double c = std::clamp(x, -1.0, 1.0);
  return static_cast<std::int16_t>(std::lround(c * kPcmScale));
}

inline std::vector<std::uint8_t> encode(const Waveform& w) {
  if (w.sample_rate <= 0) throw ParameterError("sample rate must be positive");
  const auto data_bytes = static_cast<std::uint32_t>(w.size() * 2);
  io::ByteWriter out;
  out.magic("RIFF");
  out.u32(36 + data_bytes);
  out.magic("WAVE");
  out.magic("fmt ");
  out.u32(16);
  out.u16(1);  // PCM
  out.u16(1);  // mono
  out.u32(static_cast<std::uint32_t>(w.sample_rate));
  out.u32(static_cast<std::uint32_t>(w.sample_rate) * 2);
  out.u16(2);
  out.u16(16);
  out.magic("data");
  out.u32(data_bytes);
  for (double s : w.samples) out.u16(static_cast<std::uint16_t>(quantize(s)));
  return out.bytes();
}

inline Waveform decode(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  in.expect_magic("RIFF", "RIFF header");
  in.u32("RIFF size");
  in.expect_magic("WAVE", "WAVE tag");

  bool have_fmt = false;
  std::uint32_t rate = 0;
  while (in.remaining() >= 8) {
    const std::size_t chunk_start = in.offset();
    const auto id = in.take(4, "chunk id");
    const std::uint32_t size = in.u32("chunk size");
    const std::string tag(id.begin(), id.end());
    if (tag == "fmt ") {
      if (size < 16) throw FormatError(chunk_start, "fmt chunk too small");
      const std::uint16_t format = in.u16("format tag");
      const std::uint16_t channels = in.u16("channel count");
      rate = in.u32("sample rate");
      in.u32("byte rate");
      in.u16("block align");
      const std::uint16_t bits = in.u16("bits per sample");
      in.take(size - 16, "fmt extension");
      if (size % 2) in.take(1, "pad byte");
      if (format != 1 && format != 0xFFFE)
        throw FormatError(chunk_start, "only PCM WAV is supported");
      if (channels != 1) throw FormatError(chunk_start, "only mono WAV is supported");
      if (bits != 16) throw FormatError(chunk_start, "only 16-bit WAV is supported");
      if (rate == 0) throw FormatError(chunk_start, "zero sample rate");
      have_fmt = true;
    } else if (tag == "data") {
      if (!have_fmt) throw FormatError(chunk_start, "data chunk before fmt chunk");
      if (size % 2) throw FormatError(chunk_start, "odd data chunk size");
      const auto payload = in.take(size, "sample data");
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(size / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto raw = static_cast<std::uint16_t>(payload[2 * i] |
                                                    (payload[2 * i + 1] << 8));
        w.samples[i] = static_cast<std::int16_t>(raw) / kPcmScale;
      }
      return w;
    } else {
      in.take(size + (size % 2), "chunk payload");
    }
  }
  throw FormatError(in.offset(), "no data chunk");
}

inline Waveform read(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return decode(bytes);
}

inline void write(const std::filesystem::path& path, const Waveform& w) {
  io::write_file(path, encode(w));
}

}  // namespace sanet::wav
