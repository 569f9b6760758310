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

// Value types shared by every stage of the separation pipeline.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sanet/error.hpp"

namespace sanet {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const Matrix& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Mono audio.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const noexcept { return samples.size(); }

  void validate() const {
    if (sample_rate <= 0) throw ParameterError("sample rate must be positive");
    for (double s : samples)
      if (!std::isfinite(s)) throw InputError("waveform contains nonfinite samples");
  }
};

/// Frame x feature matrix produced by the codec encoder.
struct TFRepresentation {
  Matrix values;  // frames x feature_dim

  std::size_t frames() const noexcept { return values.rows(); }
  std::size_t feature_dim() const noexcept { return values.cols(); }
  std::size_t bins() const noexcept { return values.size(); }
};

/// One embed_dim vector per TF bin, bin index tf = t * F + f.
struct EmbeddingField {
  std::size_t frames = 0;
  std::size_t feature_dim = 0;
  Matrix vectors;  // (frames * feature_dim) x embed_dim

  std::size_t bins() const noexcept { return vectors.rows(); }
  std::size_t embed_dim() const noexcept { return vectors.cols(); }
};

/// Per-source masks; for every bin the source values form a point on the
/// probability simplex.
struct MaskSet {
  std::vector<Matrix> masks;  // each frames x feature_dim

  std::size_t num_sources() const noexcept { return masks.size(); }
  std::size_t frames() const { return masks.empty() ? 0 : masks.front().rows(); }
  std::size_t feature_dim() const {
    return masks.empty() ? 0 : masks.front().cols();
  }
};

/// L1-normalized mixture energy over the TF bins.
struct EnergyWeight {
  Matrix w;  // frames x feature_dim
};

enum class Provenance : std::uint32_t { ideal = 0, kmeans = 1, fixture = 2 };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::ideal: return "ideal";
    case Provenance::kmeans: return "kmeans";
    case Provenance::fixture: return "fixture";
  }
  return "unknown";
}

/// K unit-norm attractors. Vectors are held at float32 precision, the same
/// precision the SAEB interchange file stores, so exports round-trip exactly.
struct AttractorSet {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<float> vectors;  // k x dim, row-major
  Provenance provenance = Provenance::fixture;
  std::size_t iterations_used = 0;  // kmeans only
  double inertia = 0.0;             // kmeans only
  std::vector<float> mask_energy;   // k entries, zero unless recorded

  std::span<const float> vector(std::size_t i) const {
    return {vectors.data() + i * dim, dim};
  }
  std::span<float> vector(std::size_t i) { return {vectors.data() + i * dim, dim}; }
};

/// Cluster index of every TF bin. Zero-norm embedding rows are reported as
/// cluster 0 but never contribute to centroids.
struct Assignment {
  std::vector<std::size_t> cluster;
};

}  // namespace sanet
