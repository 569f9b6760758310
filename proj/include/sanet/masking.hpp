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

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "sanet/error.hpp"
#include "sanet/types.hpp"
#include "sanet/vecmath.hpp"

namespace sanet {

struct RatioMaskOptions {
  double alpha = 1.0;
  /// Bins whose summed source energy is below eps get a uniform mask.
  double eps = 1e-8;
};

/// Generalized ratio masks m_i = e_i^alpha / sum_j e_j^alpha.
inline MaskSet ideal_ratio_masks(std::span<const TFRepresentation> sources,
                                 const RatioMaskOptions& opt = {}) {
  if (sources.empty()) throw DimensionError("ideal_ratio_masks needs at least one source");
  if (!(opt.alpha > 0.0)) throw ParameterError("mask exponent alpha must be positive");
  const Matrix& ref = sources.front().values;
  for (const auto& s : sources)
    if (!s.values.same_shape(ref))
      throw DimensionError("source representations differ in shape");

  const std::size_t c = sources.size();
  const double uniform = 1.0 / static_cast<double>(c);
  MaskSet out;
  out.masks.assign(c, Matrix(ref.rows(), ref.cols()));
  std::vector<double> powered(c);
  for (std::size_t b = 0; b < ref.size(); ++b) {
    double denom = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      const double e = std::max(0.0, sources[i].values.flat()[b]);
      powered[i] = opt.alpha == 1.0 ? e : std::pow(e, opt.alpha);
      denom += powered[i];
    }
    for (std::size_t i = 0; i < c; ++i)
      out.masks[i].flat()[b] = denom >= opt.eps ? powered[i] / denom : uniform;
  }
  return out;
}

/// w = e_x / ||e_x||_1.
inline EnergyWeight energy_weights(const TFRepresentation& mixture) {
  double total = 0.0;
  for (double v : mixture.values.flat()) {
    if (v < 0.0 || !std::isfinite(v))
      throw InputError("energy weights need a finite nonnegative representation");
    total += v;
  }
  if (!(total > 0.0))
    throw DegenerateError("mixture representation is all zero; attractors are undefined");
  EnergyWeight w{Matrix(mixture.frames(), mixture.feature_dim())};
  for (std::size_t b = 0; b < w.w.size(); ++b) w.w.flat()[b] = mixture.values.flat()[b] / total;
  return w;
}

/// Softmax over cosine similarity between every embedding row and each
/// attractor, scaled by 1 / temperature. Zero rows get uniform masks.
inline MaskSet estimate_masks(const EmbeddingField& field, const AttractorSet& attractors,
                              double temperature = 1.0) {
  if (attractors.k == 0) throw DimensionError("need at least one attractor");
  if (field.embed_dim() != attractors.dim)
    throw DimensionError("embedding dim " + std::to_string(field.embed_dim()) +
                         " != attractor dim " + std::to_string(attractors.dim));
  if (field.bins() != field.frames * field.feature_dim)
    throw DimensionError("embedding row count is not frames x feature_dim");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");

  const std::size_t k = attractors.k;
  std::vector<double> anorm(k);
  for (std::size_t i = 0; i < k; ++i) anorm[i] = detail::norm<float>(attractors.vector(i));

  MaskSet out;
  out.masks.assign(k, Matrix(field.frames, field.feature_dim));
  std::vector<double> logits(k);
  for (std::size_t b = 0; b < field.bins(); ++b) {
    const auto v = field.vectors.row(b);
    const double vnorm = detail::norm<double>(v);
    if (vnorm == 0.0) {
      for (std::size_t i = 0; i < k; ++i) out.masks[i].flat()[b] = 1.0 / static_cast<double>(k);
      continue;
    }
    double peak = -INFINITY;
    for (std::size_t i = 0; i < k; ++i) {
      const double denom = vnorm * anorm[i];
      const double cosine = denom > 0.0 ? detail::dot<double, float>(v, attractors.vector(i)) / denom : 0.0;
      logits[i] = cosine / temperature;
      peak = std::max(peak, logits[i]);
    }
    double total = 0.0;
    for (auto& l : logits) {
      l = std::exp(l - peak);
      total += l;
    }
    for (std::size_t i = 0; i < k; ++i) out.masks[i].flat()[b] = logits[i] / total;
  }
  return out;
}

inline TFRepresentation apply_mask(const TFRepresentation& mixture, const Matrix& mask) {
  if (!mixture.values.same_shape(mask))
    throw DimensionError("mask shape differs from representation shape");
  TFRepresentation out{mixture.values};
  for (std::size_t b = 0; b < mask.size(); ++b) out.values.flat()[b] *= mask.flat()[b];
  return out;
}

}  // namespace sanet
