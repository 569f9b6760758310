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
#include <cstring>

#include "oracles.hpp"
#include "sanet/attractor.hpp"
#include "sanet/embedder.hpp"
#include "sanet/masking.hpp"

namespace sanet {
namespace {

TcnDims tiny_dims() {
  TcnDims d;
  d.feature_dim = 3;
  d.embed_dim = 4;
  d.bottleneck_dim = 5;
  d.hidden_dim = 6;
  d.kernel_size = 3;
  d.blocks_per_repeat = 3;
  d.repeats = 2;
  return d;
}

// Straight-line forward pass over vectors of vectors, for cross-checking.
std::vector<std::vector<double>> reference_tcn(const std::vector<std::vector<double>>& x,
                                               const TcnWeights& w) {
  const auto& d = w.dims;
  const std::size_t T = x.size();
  auto affine = [&](const std::vector<std::vector<double>>& in, const std::vector<float>& W,
                    const std::vector<float>& b, std::size_t out) {
    std::vector<std::vector<double>> y(T, std::vector<double>(out));
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t o = 0; o < out; ++o) {
        y[t][o] = b[o];
        for (std::size_t i = 0; i < in[t].size(); ++i) y[t][o] += W[o * in[t].size() + i] * in[t][i];
      }
    return y;
  };
  auto relu_gln = [&](std::vector<std::vector<double>>& m, const std::vector<float>& g,
                      const std::vector<float>& b) {
    double sum = 0, cnt = 0;
    for (auto& r : m)
      for (auto& v : r) {
        v = std::max(0.0, v);
        sum += v;
        ++cnt;
      }
    const double mean = sum / cnt;
    double var = 0;
    for (auto& r : m)
      for (double v : r) var += (v - mean) * (v - mean);
    var /= cnt;
    for (auto& r : m)
      for (std::size_t c = 0; c < r.size(); ++c)
        r[c] = g[c] * (r[c] - mean) / std::sqrt(var + 1e-8) + b[c];
  };
  auto h = affine(x, w.input_weight, w.input_bias, d.bottleneck_dim);
  for (std::size_t r = 0; r < d.repeats; ++r)
    for (std::size_t b = 0; b < d.blocks_per_repeat; ++b) {
      const auto& blk = w.blocks[r * d.blocks_per_repeat + b];
      auto u = affine(h, blk.in_weight, blk.in_bias, d.hidden_dim);
      relu_gln(u, blk.norm1_gain, blk.norm1_bias);
      const long dil = 1L << b;
      const long half = static_cast<long>(d.kernel_size / 2);
      std::vector<std::vector<double>> v(T, std::vector<double>(d.hidden_dim));
      for (long t = 0; t < static_cast<long>(T); ++t)
        for (std::size_t c = 0; c < d.hidden_dim; ++c) {
          double acc = blk.depth_bias[c];
          for (long p = -half; p <= half; ++p) {
            const long s = t + p * dil;
            if (s >= 0 && s < static_cast<long>(T))
              acc += blk.depth_weight[c * d.kernel_size + static_cast<std::size_t>(p + half)] * u[s][c];
          }
          v[t][c] = acc;
        }
      relu_gln(v, blk.norm2_gain, blk.norm2_bias);
      const auto res = affine(v, blk.out_weight, blk.out_bias, d.bottleneck_dim);
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t c = 0; c < d.bottleneck_dim; ++c) h[t][c] += res[t][c];
    }
  return affine(h, w.output_weight, w.output_bias, d.feature_dim * d.embed_dim);
}

TEST(TcnForward, ShapeContract) {
  const auto w = random_tcn_weights(tiny_dims(), 1);
  Rng rng(2);
  for (std::size_t T : {1u, 2u, 9u}) {
    const auto field = tcn_forward(testing::random_tf(T, 3, rng), w);
    EXPECT_EQ(field.frames, T);
    EXPECT_EQ(field.feature_dim, 3u);
    EXPECT_EQ(field.bins(), T * 3);
    EXPECT_EQ(field.embed_dim(), 4u);
  }
}

TEST(TcnForward, MatchesStraightLineReference) {
  const auto w = random_tcn_weights(tiny_dims(), 5);
  Rng rng(6);
  const auto tf = testing::random_tf(11, 3, rng);
  std::vector<std::vector<double>> x(11, std::vector<double>(3));
  for (std::size_t t = 0; t < 11; ++t)
    for (std::size_t f = 0; f < 3; ++f) x[t][f] = tf.values(t, f);
  const auto ref = reference_tcn(x, w);
  const auto field = tcn_forward(tf, w);
  for (std::size_t t = 0; t < 11; ++t)
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t d = 0; d < 4; ++d)
        EXPECT_NEAR(field.vectors(t * 3 + f, d), ref[t][f * 4 + d], 1e-9);
}

TEST(TcnForward, ZeroInputZeroWeightsGivesZeroField) {
  auto w = random_tcn_weights(tiny_dims(), 1);
  for (auto* t : w.tensors()) std::fill(t->begin(), t->end(), 0.0f);
  const auto field = tcn_forward(TFRepresentation{Matrix(4, 3)}, w);
  for (double v : field.vectors.flat()) EXPECT_EQ(v, 0.0);
}

TEST(TcnForward, ByteIdenticalAcrossRunsAndThreads) {
  TcnDims d = tiny_dims();
  d.feature_dim = 8;
  d.embed_dim = 16;
  const auto w = random_tcn_weights(d, 42);
  Rng rng(42);
  const auto tf = testing::random_tf(37, 8, rng);
  const auto base = tcn_forward(tf, w, 1);
  for (unsigned threads : {1u, 2u, 3u, 8u}) {
    const auto other = tcn_forward(tf, w, threads);
    ASSERT_EQ(other.vectors.size(), base.vectors.size());
    EXPECT_EQ(std::memcmp(other.vectors.flat().data(), base.vectors.flat().data(),
                          base.vectors.size() * sizeof(double)),
              0)
        << threads << " threads";
  }
}

TEST(TcnForward, Errors) {
  const auto w = random_tcn_weights(tiny_dims(), 1);
  EXPECT_THROW(tcn_forward(TFRepresentation{Matrix(4, 5)}, w), DimensionError);
  // Activations live in double, so overflow needs a huge residual stream:
  // blocks with zero input weights pass a 1e300 input projection through,
  // and float-max output weights then overflow.
  auto huge = w;
  for (auto& blk : huge.blocks) std::fill(blk.in_weight.begin(), blk.in_weight.end(), 0.0f);
  std::fill(huge.output_weight.begin(), huge.output_weight.end(), 3e38f);
  try {
    tcn_forward(TFRepresentation{Matrix(4, 3, 1e300)}, huge);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("output projection"), std::string::npos);
  }
}

TEST(TcnFormat, RoundTripIsBitExact) {
  const auto w = random_tcn_weights(tiny_dims(), 77);
  EXPECT_EQ(deserialize_tcn(serialize_tcn(w)), w);
}

TEST(TcnFormat, RejectsTruncationAndInconsistentHeaders) {
  const auto bytes = serialize_tcn(random_tcn_weights(tiny_dims(), 77));
  for (std::size_t cut = 0; cut < bytes.size(); cut += 37)
    EXPECT_THROW(deserialize_tcn(std::span(bytes).first(cut)), FormatError) << cut;
  auto bad = bytes;
  bad[8] = 9;  // F changes, tensor counts no longer match
  EXPECT_THROW(deserialize_tcn(bad), FormatError);
  auto many_blocks = bytes;
  many_blocks[32] = 0xff;  // R
  many_blocks[35] = 0x7f;
  EXPECT_THROW(deserialize_tcn(many_blocks), FormatError);
  auto version = bytes;
  version[4] = 3;
  EXPECT_THROW(deserialize_tcn(version), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(deserialize_tcn(trailing), FormatError);
}

TEST(RandomUnitAttractors, SingleIsUnit) {
  const auto a = random_unit_attractors(1, 16, 0.0, 3);
  ASSERT_EQ(a.k, 1u);
  EXPECT_NEAR(detail::norm<float>(a.vector(0)), 1.0, 1e-6);
}

TEST(RandomUnitAttractors, SeparationHolds) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = random_unit_attractors(2, 128, 0.0, seed);
    EXPECT_LE(testing::cosine(a.vector(0), a.vector(1)), 0.0);
  }
  const auto many = random_unit_attractors(3, 8, -0.1, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      EXPECT_LE(testing::cosine(many.vector(i), many.vector(j)), -0.1);
}

TEST(RandomUnitAttractors, ImpossibleSeparationFails) {
  EXPECT_THROW(random_unit_attractors(50, 2, -0.9, 1), SamplingError);
  EXPECT_THROW(random_unit_attractors(2, 1, 0.0, 1), ParameterError);
  EXPECT_THROW(random_unit_attractors(2, 4, 1.0, 1), ParameterError);
}

TEST(RandomUnitAttractors, SeedDeterministic) {
  EXPECT_EQ(random_unit_attractors(3, 32, 0.2, 8).vectors,
            random_unit_attractors(3, 32, 0.2, 8).vectors);
}

MaskSet two_source_masks(std::size_t frames, std::size_t feat, Rng& rng) {
  std::vector<TFRepresentation> src{testing::random_tf(frames, feat, rng),
                                    testing::random_tf(frames, feat, rng)};
  return ideal_ratio_masks(src);
}

TEST(OracleEmbed, NoiselessRowsAreDominantAttractors) {
  Rng rng(3);
  const auto masks = two_source_masks(6, 5, rng);
  const auto att = random_unit_attractors(2, 8, 0.0, 1);
  const auto field = oracle_embed(masks, att, 0.0, 0);
  for (std::size_t b = 0; b < field.bins(); ++b) {
    const std::size_t c = masks.masks[1].flat()[b] > masks.masks[0].flat()[b] ? 1 : 0;
    for (std::size_t d = 0; d < 8; ++d)
      EXPECT_EQ(field.vectors(b, d), static_cast<double>(att.vector(c)[d]));
  }
}

TEST(OracleEmbed, TiesGoToLowestIndex) {
  MaskSet masks;
  masks.masks = {Matrix(1, 2, 0.5), Matrix(1, 2, 0.5)};
  const auto att = random_unit_attractors(2, 4, 0.0, 2);
  const auto field = oracle_embed(masks, att, 0.0, 0);
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t d = 0; d < 4; ++d)
      EXPECT_EQ(field.vectors(b, d), static_cast<double>(att.vector(0)[d]));
}

TEST(OracleEmbed, NoisyRowsAreUnitAndDeterministic) {
  Rng rng(4);
  const auto masks = two_source_masks(10, 4, rng);
  const auto att = random_unit_attractors(2, 32, 0.0, 1);
  const auto a = oracle_embed(masks, att, 0.3, 9);
  const auto b = oracle_embed(masks, att, 0.3, 9);
  EXPECT_EQ(a.vectors, b.vectors);
  for (std::size_t r = 0; r < a.bins(); ++r)
    EXPECT_NEAR(detail::norm<double>(a.vectors.row(r)), 1.0, 1e-6);
}

TEST(OracleEmbed, ClosedLoopRecoversAttractors) {
  // With hard masks every bin in mask i carries attractor i exactly.
  Rng rng(5);
  auto masks = two_source_masks(20, 8, rng);
  for (std::size_t b = 0; b < masks.masks[0].size(); ++b) {
    const double m0 = masks.masks[0].flat()[b] >= masks.masks[1].flat()[b] ? 1.0 : 0.0;
    masks.masks[0].flat()[b] = m0;
    masks.masks[1].flat()[b] = 1.0 - m0;
  }
  const auto att = random_unit_attractors(2, 64, 0.0, 3);
  const auto field = oracle_embed(masks, att, 0.0, 0);
  Rng erng(6);
  const auto w = energy_weights(testing::random_tf(20, 8, erng));
  const auto rec = ideal_attractors(field, w, masks);
  for (std::size_t i = 0; i < 2; ++i)
    EXPECT_GE(testing::cosine(rec.vector(i), att.vector(i)), 1.0 - 1e-9);
}

TEST(OracleEmbed, NoiselessKMeansReproducesAttractors) {
  Rng rng(7);
  const auto masks = two_source_masks(15, 6, rng);
  const auto att = random_unit_attractors(2, 16, 0.0, 4);
  const auto field = oracle_embed(masks, att, 0.0, 0);
  Rng erng(8);
  const auto w = energy_weights(testing::random_tf(15, 6, erng));
  const auto res = spherical_kmeans(field, w, {2, 1, 100, 1e-9, 1});
  // Exact up to label permutation.
  const bool straight = res.attractors.vector(0)[0] == att.vector(0)[0];
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& truth = att.vector(straight ? i : 1 - i);
    for (std::size_t d = 0; d < 16; ++d)
      EXPECT_FLOAT_EQ(res.attractors.vector(i)[d], truth[d]);
  }
}

TEST(OracleEmbed, Errors) {
  Rng rng(1);
  const auto masks = two_source_masks(3, 3, rng);
  EXPECT_THROW(oracle_embed(masks, random_unit_attractors(3, 4, 0.5, 1), 0.0, 0),
               DimensionError);
  EXPECT_THROW(oracle_embed(masks, random_unit_attractors(2, 4, 0.5, 1), -1.0, 0),
               ParameterError);
}

}  // namespace
}  // namespace sanet
