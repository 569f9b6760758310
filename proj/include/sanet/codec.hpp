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

// Learned waveform <-> time-frequency codec.
//
// The encoder is one strided convolution (F filters of `window` taps, stride
// `hop`) followed by a rectifier; the decoder is the matching transposed
// convolution, i.e. overlap-add of per-frame linear syntheses. Neither layer
// has a bias. Samples past the last complete frame are dropped.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sanet/binary_io.hpp"
#include "sanet/error.hpp"
#include "sanet/rng.hpp"
#include "sanet/types.hpp"

namespace sanet {

inline constexpr std::size_t kDefaultWindow = 16;
inline constexpr std::size_t kDefaultHop = 8;
inline constexpr std::size_t kDefaultFeatureDim = 256;

struct CodecWeights {
  std::size_t feature_dim = 0;
  std::size_t window = kDefaultWindow;
  std::size_t hop = kDefaultHop;
  std::vector<float> encoder;  // feature_dim x window, row-major
  std::vector<float> decoder;  // feature_dim x window, row-major

  void validate() const {
    if (feature_dim == 0 || window == 0 || hop == 0 || hop > window)
      throw DimensionError("codec requires feature_dim >= 1 and 1 <= hop <= window");
    if (encoder.size() != feature_dim * window || decoder.size() != feature_dim * window)
      throw DimensionError("codec kernel size does not match feature_dim x window");
    for (float v : encoder)
      if (!std::isfinite(v)) throw NumericError("nonfinite encoder kernel entry");
    for (float v : decoder)
      if (!std::isfinite(v)) throw NumericError("nonfinite decoder kernel entry");
  }

  friend bool operator==(const CodecWeights&, const CodecWeights&) = default;
};

/// Number of complete frames in `samples` samples: floor((N - window) / hop) + 1.
inline std::size_t frame_count(std::size_t samples, std::size_t window, std::size_t hop) {
  if (samples < window) return 0;
  return (samples - window) / hop + 1;
}

/// Length of the decoder output for `frames` frames.
inline std::size_t synthesis_length(std::size_t frames, std::size_t window,
                                    std::size_t hop) {
  return frames == 0 ? 0 : (frames - 1) * hop + window;
}

/// Truncated-normal (|z| <= 4) kernels scaled by 1/sqrt(window).
inline CodecWeights init_codec(std::size_t feature_dim, std::size_t window,
                               std::size_t hop, std::uint64_t seed) {
  if (feature_dim == 0) throw DimensionError("feature_dim must be >= 1");
  if (window == 0 || hop == 0 || hop > window)
    throw DimensionError("codec requires 1 <= hop <= window");
  CodecWeights c;
  c.feature_dim = feature_dim;
  c.window = window;
  c.hop = hop;
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(window));
  auto draw = [&] {
    double z = rng.normal();
    while (std::abs(z) > 4.0) z = rng.normal();
    return static_cast<float>(z * scale);
  };
  c.encoder.resize(feature_dim * window);
  c.decoder.resize(feature_dim * window);
  for (auto& v : c.encoder) v = draw();
  for (auto& v : c.decoder) v = draw();
  return c;
}

namespace detail {

/// Kernels widened to double for arithmetic.
struct CodecKernels {
  std::size_t feature_dim;
  std::size_t window;
  std::size_t hop;
  std::vector<double> encoder;
  std::vector<double> decoder;

  explicit CodecKernels(const CodecWeights& c)
      : feature_dim(c.feature_dim),
        window(c.window),
        hop(c.hop),
        encoder(c.encoder.begin(), c.encoder.end()),
        decoder(c.decoder.begin(), c.decoder.end()) {}
};

/// Pre-activation encoder response, frames x F.
inline Matrix analysis(std::span<const double> x, const CodecKernels& k) {
  const std::size_t frames = frame_count(x.size(), k.window, k.hop);
  Matrix z(frames, k.feature_dim);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* seg = x.data() + t * k.hop;
    for (std::size_t f = 0; f < k.feature_dim; ++f) {
      const double* filt = k.encoder.data() + f * k.window;
      double acc = 0.0;
      for (std::size_t j = 0; j < k.window; ++j) acc += filt[j] * seg[j];
      z(t, f) = acc;
    }
  }
  return z;
}

inline std::vector<double> synthesis(const Matrix& e, std::span<const double> decoder,
                                     std::size_t window, std::size_t hop) {
  std::vector<double> y(synthesis_length(e.rows(), window, hop), 0.0);
  for (std::size_t t = 0; t < e.rows(); ++t) {
    double* out = y.data() + t * hop;
    for (std::size_t f = 0; f < e.cols(); ++f) {
      const double a = e(t, f);
      if (a == 0.0) continue;
      const double* basis = decoder.data() + f * window;
      for (std::size_t j = 0; j < window; ++j) out[j] += a * basis[j];
    }
  }
  return y;
}

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> encoder;
  std::vector<double> decoder;
};

/// Mean-squared reconstruction error over the reconstructed span and its
/// gradient with respect to both kernels.
inline LossAndGradient reconstruction_gradient(std::span<const double> x,
                                               const CodecKernels& k) {
  const std::size_t F = k.feature_dim;
  const std::size_t W = k.window;
  Matrix z = analysis(x, k);
  Matrix e(z.rows(), F);
  for (std::size_t i = 0; i < z.size(); ++i) e.flat()[i] = std::max(0.0, z.flat()[i]);
  const std::vector<double> y = synthesis(e, k.decoder, W, k.hop);

  LossAndGradient out;
  out.encoder.assign(F * W, 0.0);
  out.decoder.assign(F * W, 0.0);
  const double n = static_cast<double>(y.size());
  std::vector<double> g(y.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - x[i];
    sq += r * r;
    g[i] = 2.0 * r / n;
  }
  out.loss = sq / n;

  for (std::size_t t = 0; t < e.rows(); ++t) {
    const double* gseg = g.data() + t * k.hop;
    const double* xseg = x.data() + t * k.hop;
    for (std::size_t f = 0; f < F; ++f) {
      const double* basis = k.decoder.data() + f * W;
      double* d_dec = out.decoder.data() + f * W;
      double d_e = 0.0;
      const double a = e(t, f);
      for (std::size_t j = 0; j < W; ++j) {
        d_dec[j] += a * gseg[j];
        d_e += basis[j] * gseg[j];
      }
      if (z(t, f) > 0.0) {
        double* d_enc = out.encoder.data() + f * W;
        for (std::size_t j = 0; j < W; ++j) d_enc[j] += d_e * xseg[j];
      }
    }
  }
  return out;
}

}  // namespace detail

inline TFRepresentation encode(const Waveform& w, const CodecWeights& c) {
  c.validate();
  if (w.size() < c.window)
    throw LengthError("waveform has " + std::to_string(w.size()) +
                      " samples, codec window needs " + std::to_string(c.window));
  detail::CodecKernels k(c);
  TFRepresentation tf{detail::analysis(w.samples, k)};
  for (double& v : tf.values.flat()) v = std::max(0.0, v);
  return tf;
}

inline Waveform decode(const TFRepresentation& tf, const CodecWeights& c,
                       int sample_rate = 16000) {
  c.validate();
  if (tf.feature_dim() != c.feature_dim)
    throw DimensionError("representation has feature_dim " +
                         std::to_string(tf.feature_dim()) + ", codec expects " +
                         std::to_string(c.feature_dim));
  const std::vector<double> dec(c.decoder.begin(), c.decoder.end());
  return Waveform{detail::synthesis(tf.values, dec, c.window, c.hop), sample_rate};
}

/// decode(encode(w)).
inline Waveform round_trip(const Waveform& w, const CodecWeights& c) {
  return decode(encode(w, c), c, w.sample_rate);
}

struct CodecGradient {
  double loss = 0.0;
  std::vector<double> encoder;  // feature_dim x window
  std::vector<double> decoder;  // feature_dim x window
};

/// Analytic gradient of the reconstruction MSE of `clip` w.r.t. both kernels.
inline CodecGradient codec_gradient(const Waveform& clip, const CodecWeights& c) {
  c.validate();
  if (clip.size() < c.window)
    throw LengthError("clip shorter than the codec window");
  auto g = detail::reconstruction_gradient(clip.samples, detail::CodecKernels(c));
  return {g.loss, std::move(g.encoder), std::move(g.decoder)};
}

struct PretrainOptions {
  std::size_t steps = 2000;
  double learning_rate = 1.0;
  std::size_t batch_frames = 256;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  CodecWeights weights;
  std::vector<double> loss_trace;
};

/// Plain gradient descent on the reconstruction MSE of random clip slices.
/// Each step draws one clip and one slice of `batch_frames` frames (or the
/// whole clip when shorter). The trace holds the loss before each update.
inline PretrainResult pretrain_codec(std::span<const Waveform> corpus,
                                     const CodecWeights& initial,
                                     const PretrainOptions& opt) {
  initial.validate();
  if (corpus.empty()) throw InputError("pretraining corpus is empty");
  if (!(opt.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (opt.batch_frames == 0) throw ParameterError("batch_frames must be >= 1");
  for (const auto& clip : corpus) {
    if (clip.size() < initial.window)
      throw LengthError("corpus clip shorter than the codec window");
    clip.validate();
  }

  PretrainResult result{initial, {}};
  if (opt.steps == 0) return result;

  detail::CodecKernels k(initial);
  const std::size_t slice_len = synthesis_length(opt.batch_frames, k.window, k.hop);
  Rng rng(opt.seed);
  result.loss_trace.reserve(opt.steps);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    const auto& clip = corpus[rng.index(corpus.size())].samples;
    std::span<const double> slice = clip;
    if (clip.size() > slice_len)
      slice = slice.subspan(rng.index(clip.size() - slice_len + 1), slice_len);
    auto g = detail::reconstruction_gradient(slice, k);
    if (!std::isfinite(g.loss))
      throw DivergenceError(step, "codec pretraining diverged at step " +
                                      std::to_string(step));
    result.loss_trace.push_back(g.loss);
    for (std::size_t i = 0; i < k.encoder.size(); ++i) {
      k.encoder[i] -= opt.learning_rate * g.encoder[i];
      k.decoder[i] -= opt.learning_rate * g.decoder[i];
    }
  }
  for (std::size_t i = 0; i < k.encoder.size(); ++i) {
    result.weights.encoder[i] = static_cast<float>(k.encoder[i]);
    result.weights.decoder[i] = static_cast<float>(k.decoder[i]);
  }
  for (float v : result.weights.encoder)
    if (!std::isfinite(v)) throw DivergenceError(opt.steps, "encoder kernel overflowed");
  for (float v : result.weights.decoder)
    if (!std::isfinite(v)) throw DivergenceError(opt.steps, "decoder kernel overflowed");
  return result;
}

// SACW: "SACW", u32 version, u32 F, u32 window, u32 hop, encoder, decoder
// (float32, row-major). All integers little-endian.
inline constexpr std::uint32_t kCodecFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_codec(const CodecWeights& c) {
  c.validate();
  io::ByteWriter out;
  out.magic("SACW");
  out.u32(kCodecFormatVersion);
  out.u32(static_cast<std::uint32_t>(c.feature_dim));
  out.u32(static_cast<std::uint32_t>(c.window));
  out.u32(static_cast<std::uint32_t>(c.hop));
  out.f32s(c.encoder);
  out.f32s(c.decoder);
  return out.bytes();
}

inline CodecWeights deserialize_codec(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  in.expect_magic("SACW", "codec weights");
  const std::size_t version_at = in.offset();
  const std::uint32_t version = in.u32("version");
  if (version != kCodecFormatVersion)
    throw FormatError(version_at, "unsupported SACW version " + std::to_string(version));
  const std::size_t dims_at = in.offset();
  CodecWeights c;
  c.feature_dim = in.u32("feature_dim");
  c.window = in.u32("window");
  c.hop = in.u32("hop");
  if (c.feature_dim == 0 || c.window == 0 || c.hop == 0 || c.hop > c.window)
    throw FormatError(dims_at, "invalid SACW dimensions");
  const std::size_t n = c.feature_dim * c.window;
  if (in.remaining() != 2 * n * 4)
    throw FormatError(in.offset(), "SACW payload length does not match header dimensions");
  c.encoder = in.f32s(n, "encoder kernel");
  c.decoder = in.f32s(n, "decoder kernel");
  in.expect_end("SACW payload");
  return c;
}

inline void save_codec(const CodecWeights& c, const std::filesystem::path& path) {
  io::write_file(path, serialize_codec(c));
}

inline CodecWeights load_codec(const std::filesystem::path& path) {
  return deserialize_codec(io::read_file(path));
}

}  // namespace sanet
