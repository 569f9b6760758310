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

// Embedding-field producers.
//
// tcn_forward runs a temporal convolution network (inference only, weights
// loaded from SATW files). oracle_embed builds a field directly from known
// masks and attractors so the downstream attractor math can be checked
// against ground truth without a trained network.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sanet/binary_io.hpp"
#include "sanet/error.hpp"
#include "sanet/parallel.hpp"
#include "sanet/rng.hpp"
#include "sanet/types.hpp"
#include "sanet/vecmath.hpp"

namespace sanet {

struct TcnDims {
  std::size_t feature_dim = 256;     // F
  std::size_t embed_dim = 128;       // D
  std::size_t bottleneck_dim = 128;  // B
  std::size_t hidden_dim = 256;      // H
  std::size_t kernel_size = 3;       // P
  std::size_t blocks_per_repeat = 4; // X
  std::size_t repeats = 2;           // R

  friend bool operator==(const TcnDims&, const TcnDims&) = default;
};

/// One residual block: 1x1 conv B->H, ReLU, gLN, dilated depthwise conv,
/// ReLU, gLN, 1x1 conv H->B added back onto the input.
struct TcnBlock {
  std::vector<float> in_weight;     // H x B
  std::vector<float> in_bias;       // H
  std::vector<float> norm1_gain;    // H
  std::vector<float> norm1_bias;    // H
  std::vector<float> depth_weight;  // H x P
  std::vector<float> depth_bias;    // H
  std::vector<float> norm2_gain;    // H
  std::vector<float> norm2_bias;    // H
  std::vector<float> out_weight;    // B x H
  std::vector<float> out_bias;      // B

  friend bool operator==(const TcnBlock&, const TcnBlock&) = default;
};

struct TcnWeights {
  TcnDims dims;
  std::vector<float> input_weight;   // B x F
  std::vector<float> input_bias;     // B
  std::vector<TcnBlock> blocks;      // R * X, repeat-major
  std::vector<float> output_weight;  // (F * D) x B
  std::vector<float> output_bias;    // F * D

  friend bool operator==(const TcnWeights&, const TcnWeights&) = default;

  /// Expected element count of every tensor, in file order.
  static std::vector<std::size_t> tensor_sizes(const TcnDims& d) {
    const std::size_t B = d.bottleneck_dim, H = d.hidden_dim;
    std::vector<std::size_t> sizes{B * d.feature_dim, B};
    for (std::size_t i = 0; i < d.repeats * d.blocks_per_repeat; ++i) {
      for (std::size_t s : {H * B, H, H, H, H * d.kernel_size, H, H, H, B * H, B})
        sizes.push_back(s);
    }
    sizes.push_back(d.feature_dim * d.embed_dim * B);
    sizes.push_back(d.feature_dim * d.embed_dim);
    return sizes;
  }

  /// Tensors in file order.
  std::vector<std::vector<float>*> tensors() {
    std::vector<std::vector<float>*> out{&input_weight, &input_bias};
    for (auto& b : blocks) {
      for (auto* t : {&b.in_weight, &b.in_bias, &b.norm1_gain, &b.norm1_bias,
                      &b.depth_weight, &b.depth_bias, &b.norm2_gain, &b.norm2_bias,
                      &b.out_weight, &b.out_bias})
        out.push_back(t);
    }
    out.push_back(&output_weight);
    out.push_back(&output_bias);
    return out;
  }
  std::vector<const std::vector<float>*> tensors() const {
    auto mut = const_cast<TcnWeights*>(this)->tensors();
    return {mut.begin(), mut.end()};
  }

  void validate() const {
    const TcnDims& d = dims;
    for (std::size_t v : {d.feature_dim, d.embed_dim, d.bottleneck_dim, d.hidden_dim,
                          d.kernel_size, d.blocks_per_repeat, d.repeats})
      if (v == 0) throw DimensionError("all TCN dimensions must be >= 1");
    if (blocks.size() != d.repeats * d.blocks_per_repeat)
      throw DimensionError("TCN block count does not match repeats x blocks_per_repeat");
    const auto sizes = tensor_sizes(d);
    const auto ts = tensors();
    for (std::size_t i = 0; i < ts.size(); ++i)
      if (ts[i]->size() != sizes[i])
        throw DimensionError("TCN tensor " + std::to_string(i) + " has " +
                             std::to_string(ts[i]->size()) + " elements, expected " +
                             std::to_string(sizes[i]));
  }
};

/// Weights with every tensor drawn uniformly in +-1/sqrt(fan_in); layer-norm
/// gains start at 1 and biases at 0. Used for fixtures and smoke runs.
inline TcnWeights random_tcn_weights(const TcnDims& dims, std::uint64_t seed) {
  TcnWeights w;
  w.dims = dims;
  w.blocks.resize(dims.repeats * dims.blocks_per_repeat);
  Rng rng(seed);
  auto fill = [&](std::vector<float>& t, std::size_t n, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    t.resize(n);
    for (auto& v : t) v = static_cast<float>(rng.uniform(-bound, bound));
  };
  const std::size_t F = dims.feature_dim, B = dims.bottleneck_dim, H = dims.hidden_dim;
  fill(w.input_weight, B * F, F);
  fill(w.input_bias, B, F);
  for (auto& b : w.blocks) {
    fill(b.in_weight, H * B, B);
    fill(b.in_bias, H, B);
    b.norm1_gain.assign(H, 1.0f);
    b.norm1_bias.assign(H, 0.0f);
    fill(b.depth_weight, H * dims.kernel_size, dims.kernel_size);
    fill(b.depth_bias, H, dims.kernel_size);
    b.norm2_gain.assign(H, 1.0f);
    b.norm2_bias.assign(H, 0.0f);
    fill(b.out_weight, B * H, H);
    fill(b.out_bias, B, H);
  }
  fill(w.output_weight, F * dims.embed_dim * B, B);
  fill(w.output_bias, F * dims.embed_dim, B);
  return w;
}

namespace detail {

/// y[t, o] = sum_i W[o, i] x[t, i] + bias[o], frames split across threads.
inline Matrix pointwise(const Matrix& x, std::span<const float> weight,
                        std::span<const float> bias, std::size_t out_dim,
                        unsigned threads) {
  const std::size_t in_dim = x.cols();
  Matrix y(x.rows(), out_dim);
  parallel_for(x.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto xr = x.row(t);
      for (std::size_t o = 0; o < out_dim; ++o) {
        const float* wr = weight.data() + o * in_dim;
        double acc = bias[o];
        for (std::size_t i = 0; i < in_dim; ++i) acc += static_cast<double>(wr[i]) * xr[i];
        y(t, o) = acc;
      }
    }
  });
  return y;
}

inline void relu_inplace(Matrix& m) {
  for (double& v : m.flat()) v = v > 0.0 ? v : 0.0;
}

/// Global layer norm: one mean/variance over all frames and channels, then
/// per-channel gain and bias.
inline void global_layer_norm(Matrix& m, std::span<const float> gain,
                              std::span<const float> bias) {
  constexpr double kEps = 1e-8;
  const double n = static_cast<double>(m.size());
  double mean = 0.0;
  for (double v : m.flat()) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : m.flat()) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + kEps);
  for (std::size_t t = 0; t < m.rows(); ++t)
    for (std::size_t c = 0; c < m.cols(); ++c)
      m(t, c) = gain[c] * (m(t, c) - mean) * inv + bias[c];
}

/// Centered, zero-padded, dilated depthwise convolution along frames.
inline Matrix depthwise(const Matrix& x, std::span<const float> weight,
                        std::span<const float> bias, std::size_t kernel,
                        std::size_t dilation, unsigned threads) {
  const std::size_t frames = x.rows(), channels = x.cols();
  const auto pad_left = static_cast<std::ptrdiff_t>(((kernel - 1) * dilation) / 2);
  Matrix y(frames, channels);
  parallel_for(frames, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        double acc = bias[c];
        for (std::size_t p = 0; p < kernel; ++p) {
          const auto src = static_cast<std::ptrdiff_t>(t) +
                           static_cast<std::ptrdiff_t>(p * dilation) - pad_left;
          if (src < 0 || src >= static_cast<std::ptrdiff_t>(frames)) continue;
          acc += static_cast<double>(weight[c * kernel + p]) *
                 x(static_cast<std::size_t>(src), c);
        }
        y(t, c) = acc;
      }
    }
  });
  return y;
}

inline void require_finite(const Matrix& m, const std::string& layer) {
  if (!m.all_finite()) throw NumericError("nonfinite activation after " + layer);
}

}  // namespace detail

/// Forward inference: per-frame F->B projection, R x X residual blocks with
/// dilation 2^x inside each repeat, then B->(F*D) split into one D-vector
/// per TF bin.
inline EmbeddingField tcn_forward(const TFRepresentation& mixture, const TcnWeights& w,
                                  unsigned threads = 1) {
  w.validate();
  const TcnDims& d = w.dims;
  if (mixture.feature_dim() != d.feature_dim)
    throw DimensionError("representation feature_dim " +
                         std::to_string(mixture.feature_dim()) + " != TCN feature_dim " +
                         std::to_string(d.feature_dim));
  if (!mixture.values.all_finite()) throw NumericError("nonfinite TCN input");

  Matrix h = detail::pointwise(mixture.values, w.input_weight, w.input_bias,
                               d.bottleneck_dim, threads);
  detail::require_finite(h, "input projection");
  for (std::size_t r = 0; r < d.repeats; ++r) {
    for (std::size_t x = 0; x < d.blocks_per_repeat; ++x) {
      const TcnBlock& blk = w.blocks[r * d.blocks_per_repeat + x];
      const std::string name =
          "block " + std::to_string(r) + "." + std::to_string(x);
      Matrix u = detail::pointwise(h, blk.in_weight, blk.in_bias, d.hidden_dim, threads);
      detail::relu_inplace(u);
      detail::global_layer_norm(u, blk.norm1_gain, blk.norm1_bias);
      detail::require_finite(u, name + " first norm");
      Matrix v = detail::depthwise(u, blk.depth_weight, blk.depth_bias, d.kernel_size,
                                   std::size_t{1} << x, threads);
      detail::relu_inplace(v);
      detail::global_layer_norm(v, blk.norm2_gain, blk.norm2_bias);
      detail::require_finite(v, name + " second norm");
      const Matrix res =
          detail::pointwise(v, blk.out_weight, blk.out_bias, d.bottleneck_dim, threads);
      for (std::size_t i = 0; i < h.size(); ++i) h.flat()[i] += res.flat()[i];
      detail::require_finite(h, name + " residual");
    }
  }
  const Matrix out = detail::pointwise(h, w.output_weight, w.output_bias,
                                       d.feature_dim * d.embed_dim, threads);
  detail::require_finite(out, "output projection");

  EmbeddingField field;
  field.frames = mixture.frames();
  field.feature_dim = d.feature_dim;
  // Row t of `out` is F consecutive D-vectors, which is already bin-major.
  field.vectors = Matrix(field.frames * d.feature_dim, d.embed_dim);
  std::copy(out.flat().begin(), out.flat().end(), field.vectors.flat().begin());
  return field;
}

// SATW: "SATW", u32 version, u32 F D B H P X R, then each tensor as
// u32 element count + float32 payload, in TcnWeights::tensors() order.
inline constexpr std::uint32_t kTcnFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_tcn(const TcnWeights& w) {
  w.validate();
  io::ByteWriter out;
  out.magic("SATW");
  out.u32(kTcnFormatVersion);
  const TcnDims& d = w.dims;
  for (std::size_t v : {d.feature_dim, d.embed_dim, d.bottleneck_dim, d.hidden_dim,
                        d.kernel_size, d.blocks_per_repeat, d.repeats})
    out.u32(static_cast<std::uint32_t>(v));
  for (const auto* t : w.tensors()) {
    out.u32(static_cast<std::uint32_t>(t->size()));
    out.f32s(*t);
  }
  return out.bytes();
}

inline TcnWeights deserialize_tcn(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  in.expect_magic("SATW", "TCN weights");
  const std::size_t version_at = in.offset();
  const std::uint32_t version = in.u32("version");
  if (version != kTcnFormatVersion)
    throw FormatError(version_at, "unsupported SATW version " + std::to_string(version));
  const std::size_t dims_at = in.offset();
  TcnWeights w;
  TcnDims& d = w.dims;
  for (std::size_t* v : {&d.feature_dim, &d.embed_dim, &d.bottleneck_dim, &d.hidden_dim,
                         &d.kernel_size, &d.blocks_per_repeat, &d.repeats})
    *v = in.u32("dimension");
  for (std::size_t v : {d.feature_dim, d.embed_dim, d.bottleneck_dim, d.hidden_dim,
                        d.kernel_size, d.blocks_per_repeat, d.repeats})
    if (v == 0) throw FormatError(dims_at, "zero dimension in SATW header");
  // Bound the block count by what the payload could possibly hold before
  // allocating anything.
  const std::size_t blocks = d.repeats * d.blocks_per_repeat;
  if (d.repeats > in.remaining() || blocks > in.remaining() / 40)
    throw FormatError(dims_at, "SATW header declares more blocks than the payload holds");
  w.blocks.resize(blocks);
  const auto sizes = TcnWeights::tensor_sizes(d);
  auto ts = w.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const std::size_t at = in.offset();
    const std::uint32_t count = in.u32("tensor element count");
    if (count != sizes[i])
      throw FormatError(at, "tensor " + std::to_string(i) + " has " + std::to_string(count) +
                                " elements, header dimensions imply " +
                                std::to_string(sizes[i]));
    *ts[i] = in.f32s(count, "tensor payload");
  }
  in.expect_end("SATW payload");
  return w;
}

inline void save_tcn_weights(const TcnWeights& w, const std::filesystem::path& path) {
  io::write_file(path, serialize_tcn(w));
}

inline TcnWeights load_tcn_weights(const std::filesystem::path& path) {
  return deserialize_tcn(io::read_file(path));
}

/// K random unit vectors whose pairwise cosine is at most
/// `min_cosine_separation`, by rejection sampling (10000 draws at most).
inline AttractorSet random_unit_attractors(std::size_t k, std::size_t dim,
                                           double min_cosine_separation,
                                           std::uint64_t seed) {
  if (k == 0) throw ParameterError("K must be >= 1");
  if (dim < 2) throw ParameterError("attractor dimension must be >= 2");
  if (!(min_cosine_separation < 1.0))
    throw ParameterError("cosine separation bound must be < 1");
  constexpr std::size_t kMaxDraws = 10000;

  AttractorSet out;
  out.k = k;
  out.dim = dim;
  out.provenance = Provenance::fixture;
  out.mask_energy.assign(k, 0.0f);
  out.vectors.reserve(k * dim);
  Rng rng(seed);
  std::size_t accepted = 0;
  std::vector<double> cand(dim);
  std::vector<float> rounded(dim);
  for (std::size_t draw = 0; draw < kMaxDraws && accepted < k; ++draw) {
    double sq = 0.0;
    for (auto& c : cand) {
      c = rng.normal();
      sq += c * c;
    }
    const double n = std::sqrt(sq);
    if (n == 0.0) continue;
    for (std::size_t j = 0; j < dim; ++j) rounded[j] = static_cast<float>(cand[j] / n);
    const double rn = detail::norm<float>(rounded);
    bool ok = true;
    for (std::size_t i = 0; i < accepted && ok; ++i) {
      const auto a = out.vector(i);
      const double cosine = detail::dot<float, float>(a, rounded) / (rn * detail::norm<float>(a));
      ok = cosine <= min_cosine_separation;
    }
    if (!ok) continue;
    out.vectors.insert(out.vectors.end(), rounded.begin(), rounded.end());
    ++accepted;
  }
  if (accepted < k)
    throw SamplingError("could only place " + std::to_string(accepted) + " of " +
                        std::to_string(k) + " attractors with pairwise cosine <= " +
                        std::to_string(min_cosine_separation) + " in " +
                        std::to_string(kMaxDraws) + " draws");
  return out;
}

/// Synthetic field: every bin gets the attractor of its dominant source
/// (lowest index on ties), plus isotropic noise, renormalized to unit length.
inline EmbeddingField oracle_embed(const MaskSet& masks, const AttractorSet& attractors,
                                   double noise_sigma, std::uint64_t seed) {
  if (masks.num_sources() != attractors.k)
    throw DimensionError("mask set has " + std::to_string(masks.num_sources()) +
                         " sources but " + std::to_string(attractors.k) + " attractors given");
  if (masks.num_sources() == 0) throw DimensionError("oracle needs at least one source");
  if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be nonnegative");
  for (const auto& m : masks.masks)
    if (!m.same_shape(masks.masks.front()))
      throw DimensionError("masks differ in shape");

  EmbeddingField field;
  field.frames = masks.frames();
  field.feature_dim = masks.feature_dim();
  const std::size_t bins = field.frames * field.feature_dim;
  const std::size_t dim = attractors.dim;
  field.vectors = Matrix(bins, dim);
  Rng rng(seed);
  for (std::size_t b = 0; b < bins; ++b) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < masks.num_sources(); ++i)
      if (masks.masks[i].flat()[b] > masks.masks[best].flat()[b]) best = i;
    auto row = field.vectors.row(b);
    const auto a = attractors.vector(best);
    for (std::size_t j = 0; j < dim; ++j) row[j] = a[j];
    // Attractors are already unit length; only the noisy case renormalizes.
    if (noise_sigma > 0.0) {
      double sq = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        row[j] += noise_sigma * rng.normal();
        sq += row[j] * row[j];
      }
      const double n = std::sqrt(sq);
      if (n > 0.0)
        for (double& v : row) v /= n;
    }
  }
  return field;
}

}  // namespace sanet
