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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sanet/wav.hpp"

namespace sanet {
namespace {

TEST(Wav, QuantizedRoundTrip) {
  auto w = testing::random_waveform(300, 4);
  for (double& s : w.samples) s *= 0.3;
  const auto back = wav::decode(wav::encode(w));
  ASSERT_EQ(back.size(), w.size());
  EXPECT_EQ(back.sample_rate, 16000);
  for (std::size_t i = 0; i < w.size(); ++i)
    EXPECT_LE(std::abs(back.samples[i] - w.samples[i]), 0.5 / 32767.0 + 1e-15);
  // Decoded samples are exact grid points, so a second pass is lossless.
  EXPECT_EQ(wav::encode(back), wav::encode(w));
  EXPECT_EQ(wav::decode(wav::encode(back)).samples, back.samples);
}

TEST(Wav, ClampsOutOfRange) {
  EXPECT_EQ(wav::quantize(3.0), 32767);
  EXPECT_EQ(wav::quantize(-3.0), -32767);
  EXPECT_EQ(wav::quantize(0.0), 0);
}

TEST(Wav, HeaderLayout) {
  const auto bytes = wav::encode(Waveform{std::vector<double>(5, 0.0), 8000});
  ASSERT_EQ(bytes.size(), 44u + 10u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RIFF");
  EXPECT_EQ(std::string(bytes.begin() + 36, bytes.begin() + 40), "data");
  EXPECT_EQ(wav::decode(bytes).sample_rate, 8000);
}

TEST(Wav, SkipsUnknownChunks) {
  auto bytes = wav::encode(Waveform{{0.5, -0.5}, 16000});
  const std::vector<std::uint8_t> extra{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, extra.begin(), extra.end());
  const auto w = wav::decode(bytes);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_NEAR(w.samples[0], 0.5, 1e-4);
}

TEST(Wav, RejectsUnsupportedFiles) {
  const auto good = wav::encode(Waveform{{0.1, 0.2}, 16000});
  auto stereo = good;
  stereo[22] = 2;
  EXPECT_THROW(wav::decode(stereo), FormatError);
  auto bits = good;
  bits[34] = 8;
  EXPECT_THROW(wav::decode(bits), FormatError);
  auto magic = good;
  magic[0] = 'X';
  EXPECT_THROW(wav::decode(magic), FormatError);
  auto float_format = good;
  float_format[20] = 3;
  EXPECT_THROW(wav::decode(float_format), FormatError);
  EXPECT_THROW(wav::decode(std::span(good).first(good.size() - 1)), FormatError);
  EXPECT_THROW(wav::decode(std::span(good).first(20)), FormatError);
}

TEST(Wav, MissingFileIsInputError) {
  EXPECT_THROW(wav::read("/nonexistent/dir/x.wav"), InputError);
}

}  // namespace
}  // namespace sanet
