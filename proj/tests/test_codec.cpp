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

#include <cmath>

#include "oracles.hpp"
#include "sanet/codec.hpp"
#include "sanet/metrics.hpp"
#include "sanet/synth.hpp"

namespace sanet {
namespace {

TEST(InitCodec, DeterministicForSeed) {
  EXPECT_EQ(init_codec(4, 16, 8, 7), init_codec(4, 16, 8, 7));
  EXPECT_NE(init_codec(4, 16, 8, 7), init_codec(4, 16, 8, 8));
}

TEST(InitCodec, RejectsBadDimensions) {
  EXPECT_THROW(init_codec(0, 16, 8, 1), DimensionError);
  EXPECT_THROW(init_codec(4, 16, 0, 1), DimensionError);
  EXPECT_THROW(init_codec(4, 8, 16, 1), DimensionError);
}

TEST(InitCodec, EntriesBoundedByFourOverRootWindow) {
  const auto c = init_codec(256, 16, 8, 1);
  double sum = 0.0;
  for (float v : c.encoder) {
    EXPECT_LE(std::abs(v), 1.0f);
    sum += v;
  }
  for (float v : c.decoder) EXPECT_LE(std::abs(v), 1.0f);
  // Zero mean: 4096 draws with std 0.25 put the mean within ~0.004 (1 sigma).
  EXPECT_NEAR(sum / static_cast<double>(c.encoder.size()), 0.0, 0.02);
}

TEST(Encode, ZeroWaveformGivesZeroFrames) {
  const auto c = init_codec(5, 16, 8, 3);
  const auto tf = encode(Waveform{std::vector<double>(24, 0.0), 16000}, c);
  EXPECT_EQ(tf.frames(), 2u);
  EXPECT_EQ(tf.feature_dim(), 5u);
  for (double v : tf.values.flat()) EXPECT_EQ(v, 0.0);
}

TEST(Encode, FrameCountFormula) {
  const auto c = init_codec(2, 16, 8, 3);
  EXPECT_EQ(encode(testing::random_waveform(16, 1), c).frames(), 1u);
  EXPECT_THROW(encode(testing::random_waveform(15, 1), c), LengthError);
  for (std::size_t n = 16; n < 120; ++n) {
    const auto tf = encode(testing::random_waveform(n, n), c);
    EXPECT_EQ(tf.frames(), (n - 16) / 8 + 1) << "n=" << n;
  }
}

TEST(Encode, OutputIsNonnegative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = init_codec(8, 16, 8, seed);
    const auto tf = encode(testing::random_waveform(200, seed + 100), c);
    for (double v : tf.values.flat()) EXPECT_GE(v, 0.0);
  }
}

TEST(Encode, MatchesDirectConvolution) {
  const auto c = init_codec(3, 16, 8, 9);
  const auto w = testing::random_waveform(40, 2);
  const auto tf = encode(w, c);
  for (std::size_t t = 0; t < tf.frames(); ++t)
    for (std::size_t f = 0; f < 3; ++f) {
      double z = 0.0;
      for (std::size_t k = 0; k < 16; ++k) z += c.encoder[f * 16 + k] * w.samples[t * 8 + k];
      EXPECT_NEAR(tf.values(t, f), std::max(0.0, z), 1e-12);
    }
}

TEST(Decode, ZeroRepresentationGivesZeroWaveform) {
  const auto c = init_codec(4, 16, 8, 1);
  const auto w = decode(TFRepresentation{Matrix(5, 4)}, c);
  ASSERT_EQ(w.size(), 4u * 8 + 16);
  for (double s : w.samples) EXPECT_EQ(s, 0.0);
}

TEST(Decode, ImpulseKernelReproducesImpulse) {
  CodecWeights c = init_codec(1, 16, 8, 1);
  std::fill(c.decoder.begin(), c.decoder.end(), 0.0f);
  c.decoder[0] = 1.0f;
  TFRepresentation tf{Matrix(1, 1, 1.0)};
  const auto w = decode(tf, c);
  ASSERT_EQ(w.size(), 16u);
  EXPECT_EQ(w.samples[0], 1.0);
  for (std::size_t i = 1; i < 16; ++i) EXPECT_EQ(w.samples[i], 0.0);
}

TEST(Decode, RejectsFeatureMismatch) {
  const auto c = init_codec(4, 16, 8, 1);
  EXPECT_THROW(decode(TFRepresentation{Matrix(2, 3)}, c), DimensionError);
}

TEST(Decode, IsLinear) {
  const auto c = init_codec(6, 16, 8, 4);
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = testing::random_tf(7, 6, rng);
    const auto y = testing::random_tf(7, 6, rng);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    TFRepresentation combo{Matrix(7, 6)};
    for (std::size_t i = 0; i < combo.values.size(); ++i)
      combo.values.flat()[i] = a * x.values.flat()[i] + b * y.values.flat()[i];
    const auto lhs = decode(combo, c);
    const auto dx = decode(x, c), dy = decode(y, c);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      const double rhs = a * dx.samples[i] + b * dy.samples[i];
      EXPECT_NEAR(lhs.samples[i], rhs, 1e-9 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(CodecGradient, ZeroClipGivesZeroEncoderGradient) {
  const auto c = init_codec(3, 16, 8, 5);
  const auto g = codec_gradient(Waveform{std::vector<double>(32, 0.0), 16000}, c);
  for (double v : g.encoder) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.loss, 0.0);
}

TEST(CodecGradient, MatchesCentralDifferences) {
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 20; ++seed) {
    const auto c = init_codec(3, 16, 8, seed);
    const auto clip = testing::random_waveform(32, seed + 1000);
    if (testing::min_preactivation_margin(clip, c) < 1e-3) continue;
    const auto g = codec_gradient(clip, c);
    const auto fd = testing::finite_difference_gradient(clip, c);
    EXPECT_LE(testing::relative_error(g.encoder, fd.encoder), 1e-4) << "seed " << seed;
    EXPECT_LE(testing::relative_error(g.decoder, fd.decoder), 1e-4) << "seed " << seed;
    ++checked;
  }
}

TEST(CodecGradient, DecoderGradientLinearInResidual) {
  // Zero decoder: the residual is -x. Doubling x while halving the encoder
  // keeps the activations fixed and doubles the residual.
  CodecWeights c = init_codec(3, 16, 8, 2);
  std::fill(c.decoder.begin(), c.decoder.end(), 0.0f);
  CodecWeights half = c;
  for (auto& v : half.encoder) v *= 0.5f;
  auto clip = testing::random_waveform(48, 3);
  auto doubled = clip;
  for (auto& s : doubled.samples) s *= 2.0;
  const auto g1 = codec_gradient(clip, c);
  const auto g2 = codec_gradient(doubled, half);
  for (std::size_t i = 0; i < g1.decoder.size(); ++i)
    EXPECT_NEAR(g2.decoder[i], 2.0 * g1.decoder[i], 1e-12);
}

TEST(Pretrain, ZeroStepsIsNoOp) {
  const auto c0 = init_codec(4, 16, 8, 1);
  std::vector<Waveform> corpus{synth::sinusoid(440, 0.1)};
  const auto r = pretrain_codec(corpus, c0, {0, 0.5, 64, 1});
  EXPECT_EQ(r.weights, c0);
  EXPECT_TRUE(r.loss_trace.empty());
}

TEST(Pretrain, RejectsEmptyCorpusAndBadRate) {
  const auto c0 = init_codec(4, 16, 8, 1);
  EXPECT_THROW(pretrain_codec({}, c0, {10, 0.5, 64, 1}), InputError);
  std::vector<Waveform> corpus{synth::sinusoid(440, 0.1)};
  EXPECT_THROW(pretrain_codec(corpus, c0, {10, 0.0, 64, 1}), ParameterError);
}

TEST(Pretrain, DivergenceReportsStep) {
  const auto c0 = init_codec(16, 16, 8, 1);
  std::vector<Waveform> corpus{synth::sinusoid(440, 0.2)};
  try {
    pretrain_codec(corpus, c0, {500, 1e6, 64, 1});
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.step(), 500u);
  }
}

TEST(Pretrain, BitReproducible) {
  const auto c0 = init_codec(8, 16, 8, 1);
  std::vector<Waveform> corpus{synth::harmonic_speaker(0.5, 1), synth::noise_speaker(0.5, 2)};
  const auto a = pretrain_codec(corpus, c0, {50, 0.5, 64, 9});
  const auto b = pretrain_codec(corpus, c0, {50, 0.5, 64, 9});
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

// Single 1 s, 440 Hz sinusoid, F = 128, 2000 steps at lr 0.5. The reference
// run reached 33.4 dB; the floor stays at 15 dB.
TEST(Pretrain, SinusoidReachesFifteenDb) {
  const std::vector<Waveform> corpus{synth::sinusoid(440.0, 1.0)};
  const auto r = pretrain_codec(corpus, init_codec(128, 16, 8, 1), {2000, 0.5, 256, 7});
  const auto y = round_trip(corpus[0], r.weights);
  const std::span<const double> ref(corpus[0].samples.data(), y.size());
  EXPECT_GE(si_sdr(y.samples, ref), 15.0);
}

// Random 256-frame slices make the per-step loss noisy at the plateau, so the
// trend check trains on the whole clip every step (249 frames of a 0.125 s
// sinusoid). Every 100-step moving average is then no larger than the one
// before it.
TEST(Pretrain, SinusoidLossMovingAverageNonincreasing) {
  const std::vector<Waveform> corpus{synth::sinusoid(440.0, 0.125)};
  const auto r = pretrain_codec(corpus, init_codec(128, 16, 8, 1), {2000, 0.5, 250, 7});
  const auto& trace = r.loss_trace;
  ASSERT_EQ(trace.size(), 2000u);
  double prev = INFINITY;
  for (std::size_t i = 0; i + 100 <= trace.size(); ++i) {
    double avg = 0.0;
    for (std::size_t j = i; j < i + 100; ++j) avg += trace[j];
    avg /= 100.0;
    EXPECT_LE(avg, prev) << "window starting at step " << i;
    prev = avg;
  }
  EXPECT_LT(trace.back(), 0.01 * trace.front());
}

TEST(CodecFormat, RoundTripIsBitExact) {
  const auto c = init_codec(7, 16, 8, 21);
  const auto bytes = serialize_codec(c);
  EXPECT_EQ(bytes.size(), 20u + 2 * 7 * 16 * 4);
  EXPECT_EQ(deserialize_codec(bytes), c);
}

TEST(CodecFormat, RejectsCorruption) {
  const auto bytes = serialize_codec(init_codec(3, 16, 8, 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_codec(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 2;
  EXPECT_THROW(deserialize_codec(bad_version), FormatError);
  auto bad_dims = bytes;
  bad_dims[8] = 4;  // F = 4 but payload holds F = 3
  EXPECT_THROW(deserialize_codec(bad_dims), FormatError);
  for (std::size_t cut : {0u, 3u, 10u, 19u, 100u})
    EXPECT_THROW(deserialize_codec(std::span(bytes).first(cut)), FormatError) << cut;
}

}  // namespace
}  // namespace sanet
