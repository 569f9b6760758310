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

// Mixture and room conditions, plus the end-to-end separation pipeline.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sanet/attractor.hpp"
#include "sanet/codec.hpp"
#include "sanet/error.hpp"
#include "sanet/masking.hpp"
#include "sanet/metrics.hpp"
#include "sanet/rng.hpp"
#include "sanet/types.hpp"

namespace sanet {

inline constexpr double kMinGain = 0.25;
inline constexpr double kMaxGain = 0.75;

inline void check_gain(double r) {
  if (!(r >= kMinGain && r <= kMaxGain))
    throw ParameterError("gain r=" + std::to_string(r) + " outside allowed range [0.25, 0.75]");
}

/// r * a + (1 - r) * b over the shorter of the two signals.
inline Waveform mix(const Waveform& a, const Waveform& b, double r) {
  if (a.sample_rate != b.sample_rate)
    throw RateError("cannot mix " + std::to_string(a.sample_rate) + " Hz with " +
                    std::to_string(b.sample_rate) + " Hz audio");
  check_gain(r);
  const std::size_t n = std::min(a.size(), b.size());
  Waveform out{std::vector<double>(n), a.sample_rate};
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = r * a.samples[i] + (1.0 - r) * b.samples[i];
  return out;
}

/// Uniform gain in [0.25, 0.75].
inline double sample_gain(std::uint64_t seed) {
  Rng rng(seed);
  return kMinGain + (kMaxGain - kMinGain) * rng.uniform();
}

inline double rms(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

/// Linear convolution with `rir`, cut to the input length and rescaled to
/// the input RMS.
inline Waveform convolve_rir(const Waveform& x, const Waveform& rir) {
  if (x.sample_rate != rir.sample_rate)
    throw RateError("RIR sample rate " + std::to_string(rir.sample_rate) +
                    " Hz does not match signal rate " + std::to_string(x.sample_rate) + " Hz");
  if (rir.samples.empty()) throw InputError("RIR is empty");
  const std::size_t n = x.size();
  Waveform out{std::vector<double>(n, 0.0), x.sample_rate};
  const std::size_t taps = std::min(rir.size(), n);
  for (std::size_t k = 0; k < taps; ++k) {
    const double h = rir.samples[k];
    if (h == 0.0) continue;
    for (std::size_t i = k; i < n; ++i) out.samples[i] += h * x.samples[i - k];
  }
  const double in_rms = rms(x.samples);
  const double out_rms = rms(out.samples);
  if (out_rms > 0.0 && in_rms != out_rms) {
    const double g = in_rms / out_rms;
    for (double& v : out.samples) v *= g;
  }
  return out;
}

struct SeparateOptions {
  std::size_t k = 2;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
  unsigned threads = 1;
};

struct SeparationResult {
  std::vector<Waveform> estimates;
  AttractorSet attractors;
};

/// encode -> embed -> energy weights -> spherical K-means -> softmax masks ->
/// masked decode, one estimate per cluster.
inline SeparationResult separate(const Waveform& mixture, const CodecWeights& codec,
                                 const Embedder& embedder, const SeparateOptions& opt) {
  require_pipeline_rate(mixture);
  mixture.validate();
  const TFRepresentation e_x = encode(mixture, codec);
  const EmbeddingField field = embed(e_x, embedder, codec, opt.threads);
  const EnergyWeight w = energy_weights(e_x);
  KMeansResult clusters =
      spherical_kmeans(field, w, {opt.k, opt.seed, opt.max_iter, opt.tol, opt.threads});
  const MaskSet masks = estimate_masks(field, clusters.attractors, opt.temperature);

  SeparationResult out;
  out.attractors = std::move(clusters.attractors);
  for (const auto& m : masks.masks)
    out.estimates.push_back(decode(apply_mask(e_x, m), codec, mixture.sample_rate));
  return out;
}

}  // namespace sanet
