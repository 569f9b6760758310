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

// Speaker attractors: mask-weighted formation, inference-time spherical
// K-means, similarity, the SAEB export format and reference extraction.

#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sanet/binary_io.hpp"
#include "sanet/codec.hpp"
#include "sanet/embedder.hpp"
#include "sanet/error.hpp"
#include "sanet/masking.hpp"
#include "sanet/parallel.hpp"
#include "sanet/rng.hpp"
#include "sanet/types.hpp"
#include "sanet/vecmath.hpp"

namespace sanet {

namespace detail {

/// Accumulates sum_n coef(n) * V_n in ascending bin order. Both attractor
/// routes use this so that K = 1 clustering and the all-ones-mask formula
/// agree bit for bit.
template <typename Coef>
std::vector<double> weighted_row_sum(const Matrix& rows, Coef&& coef) {
  std::vector<double> acc(rows.cols(), 0.0);
  for (std::size_t n = 0; n < rows.rows(); ++n) {
    const double c = coef(n);
    if (c == 0.0) continue;
    const auto r = rows.row(n);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += c * r[d];
  }
  return acc;
}

/// Unit vector along `v`, or an empty vector when v has zero norm.
inline std::vector<double> unit(std::span<const double> v) {
  const double n = norm<double>(v);
  if (!(n > 0.0) || !std::isfinite(n)) return {};
  std::vector<double> out(v.size());
  for (std::size_t d = 0; d < v.size(); ++d) out[d] = v[d] / n;
  return out;
}

inline void check_field(const EmbeddingField& field, const Matrix& per_bin,
                        const char* what) {
  if (field.bins() != field.frames * field.feature_dim)
    throw DimensionError("embedding row count is not frames x feature_dim");
  if (per_bin.rows() != field.frames || per_bin.cols() != field.feature_dim)
    throw DimensionError(std::string(what) + " shape does not match the embedding field");
}

}  // namespace detail

/// a_i = V (w . m_i) / ||V (w . m_i)||_2 for every source i.
inline AttractorSet ideal_attractors(const EmbeddingField& field, const EnergyWeight& weight,
                                     const MaskSet& masks) {
  if (masks.num_sources() == 0) throw DimensionError("mask set is empty");
  if (field.embed_dim() == 0) throw DimensionError("embedding dimension is zero");
  detail::check_field(field, weight.w, "energy weight");
  for (const auto& m : masks.masks) detail::check_field(field, m, "mask");

  AttractorSet out;
  out.k = masks.num_sources();
  out.dim = field.embed_dim();
  out.provenance = Provenance::ideal;
  out.vectors.reserve(out.k * out.dim);
  for (std::size_t i = 0; i < out.k; ++i) {
    const auto& m = masks.masks[i].flat();
    const auto& w = weight.w.flat();
    const auto sum =
        detail::weighted_row_sum(field.vectors, [&](std::size_t n) { return w[n] * m[n]; });
    const auto a = detail::unit(sum);
    if (a.empty())
      throw DegenerateError("source " + std::to_string(i) +
                            " has a zero-norm weighted embedding sum");
    for (double v : a) out.vectors.push_back(static_cast<float>(v));
    double energy = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) energy += w[n] * m[n];
    out.mask_energy.push_back(static_cast<float>(energy));
  }
  return out;
}

struct KMeansOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  /// Stop once every centroid moves less than this in cosine distance.
  double tol = 1e-6;
  unsigned threads = 1;
};

struct KMeansResult {
  AttractorSet attractors;
  Assignment assignment;
  /// Objective after every assignment step, the last entry being the
  /// returned solution.
  std::vector<double> objective_trace;
};

/// Weighted spherical K-means.
///
/// Bins are assigned to the centroid of highest cosine similarity (lowest
/// index on ties). A centroid is the normalized sum of w_n * V_n over its
/// bins. The objective sum_n w_n ||V_n|| (1 - cos(V_n, c_n)) is what both
/// steps minimize, so it never increases; for unit-norm embeddings it is the
/// w-weighted cosine distance. Seeding is cosine K-means++ with w-weighted
/// draws. A cluster whose sum vanishes is re-seeded at the bin contributing
/// most to the objective. Zero rows are ignored.
inline KMeansResult spherical_kmeans(const EmbeddingField& field, const EnergyWeight& weight,
                                     const KMeansOptions& opt) {
  detail::check_field(field, weight.w, "energy weight");
  const std::size_t K = opt.k;
  const std::size_t N = field.bins();
  const std::size_t D = field.embed_dim();
  if (K == 0) throw ParameterError("K must be >= 1");
  if (D == 0) throw DimensionError("embedding dimension is zero");
  if (N < K) throw ClusteringError("fewer TF bins than clusters");
  const auto w = weight.w.flat();
  const Matrix& V = field.vectors;

  std::vector<double> row_norm(N);
  Matrix unit_rows(N, D);
  std::vector<std::size_t> active;
  for (std::size_t n = 0; n < N; ++n) {
    row_norm[n] = detail::norm<double>(V.row(n));
    if (!std::isfinite(row_norm[n])) throw NumericError("nonfinite embedding row");
    if (row_norm[n] == 0.0) continue;
    active.push_back(n);
    for (std::size_t d = 0; d < D; ++d) unit_rows(n, d) = V(n, d) / row_norm[n];
  }

  {
    std::vector<std::size_t> distinct;
    for (std::size_t n : active) {
      if (distinct.size() >= K) break;
      bool seen = false;
      for (std::size_t m : distinct)
        if (std::ranges::equal(unit_rows.row(n), unit_rows.row(m))) {
          seen = true;
          break;
        }
      if (!seen) distinct.push_back(n);
    }
    if (distinct.size() < K)
      throw ClusteringError("embedding field has " + std::to_string(distinct.size()) +
                            " distinct nonzero directions, fewer than K=" + std::to_string(K));
  }

  auto cosine_to = [&](std::size_t n, const std::vector<double>& c) {
    return detail::dot<double, double>(unit_rows.row(n), c);
  };

  // Cosine K-means++ seeding.
  Rng rng(opt.seed);
  std::vector<std::vector<double>> centroids;
  centroids.reserve(K);
  {
    std::vector<double> prob(active.size());
    for (std::size_t i = 0; i < active.size(); ++i) prob[i] = w[active[i]];
    std::size_t pick = rng.weighted_index(prob);
    if (pick == prob.size()) pick = rng.index(active.size());
    auto row = unit_rows.row(active[pick]);
    centroids.emplace_back(row.begin(), row.end());

    std::vector<double> nearest(active.size());
    for (std::size_t i = 0; i < active.size(); ++i)
      nearest[i] = 1.0 - cosine_to(active[i], centroids.back());
    while (centroids.size() < K) {
      for (std::size_t i = 0; i < active.size(); ++i)
        prob[i] = w[active[i]] * std::max(0.0, nearest[i]);
      pick = rng.weighted_index(prob);
      if (pick == prob.size()) {
        for (std::size_t i = 0; i < active.size(); ++i) prob[i] = std::max(0.0, nearest[i]);
        pick = rng.weighted_index(prob);
      }
      if (pick == prob.size())
        pick = static_cast<std::size_t>(std::ranges::max_element(nearest) - nearest.begin());
      row = unit_rows.row(active[pick]);
      centroids.emplace_back(row.begin(), row.end());
      for (std::size_t i = 0; i < active.size(); ++i)
        nearest[i] = std::min(nearest[i], 1.0 - cosine_to(active[i], centroids.back()));
    }
  }

  KMeansResult result;
  result.assignment.cluster.assign(N, 0);
  std::vector<double> best_cos(N, 1.0);

  auto assign = [&] {
    parallel_for(active.size(), opt.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t n = active[i];
        std::size_t best = 0;
        double best_value = cosine_to(n, centroids[0]);
        for (std::size_t k = 1; k < K; ++k) {
          const double c = cosine_to(n, centroids[k]);
          if (c > best_value) {
            best_value = c;
            best = k;
          }
        }
        result.assignment.cluster[n] = best;
        best_cos[n] = best_value;
      }
    });
    double objective = 0.0;
    for (std::size_t n : active) objective += w[n] * row_norm[n] * (1.0 - best_cos[n]);
    result.objective_trace.push_back(objective);
    assert(result.objective_trace.size() < 2 ||
           objective <= result.objective_trace[result.objective_trace.size() - 2] +
                            1e-12 * std::abs(objective) + 1e-15);
  };

  std::size_t iterations = 0;
  for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
    assign();
    iterations = iter + 1;
    const auto& cluster = result.assignment.cluster;
    std::vector<std::vector<double>> updated(K);
    std::vector<bool> reseeded_bin(N, false);
    for (std::size_t k = 0; k < K; ++k) {
      auto sum = detail::weighted_row_sum(V, [&](std::size_t n) {
        return row_norm[n] > 0.0 && cluster[n] == k ? w[n] : 0.0;
      });
      updated[k] = detail::unit(sum);
      if (!updated[k].empty()) continue;
      // Empty (or zero-weight) cluster: move it to the worst-served bin.
      std::size_t worst = N;
      double worst_cost = 0.0;
      for (std::size_t n : active) {
        if (reseeded_bin[n]) continue;
        const double cost = w[n] * row_norm[n] * (1.0 - best_cos[n]);
        if (cost > worst_cost) {
          worst_cost = cost;
          worst = n;
        }
      }
      if (worst == N) {
        updated[k] = centroids[k];
      } else {
        reseeded_bin[worst] = true;
        auto row = unit_rows.row(worst);
        updated[k].assign(row.begin(), row.end());
      }
    }
    double movement = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      movement = std::max(movement,
                          1.0 - detail::dot<double, double>(centroids[k], updated[k]));
    centroids = std::move(updated);
    if (movement < opt.tol) break;
  }
  // Final assignment against the returned centroids.
  assign();

  AttractorSet& a = result.attractors;
  a.k = K;
  a.dim = D;
  a.provenance = Provenance::kmeans;
  a.iterations_used = iterations;
  a.inertia = result.objective_trace.back();
  a.vectors.reserve(K * D);
  for (const auto& c : centroids)
    for (double v : c) a.vectors.push_back(static_cast<float>(v));
  a.mask_energy.assign(K, 0.0f);
  std::vector<double> energy(K, 0.0);
  for (std::size_t n : active) energy[result.assignment.cluster[n]] += w[n];
  for (std::size_t k = 0; k < K; ++k) a.mask_energy[k] = static_cast<float>(energy[k]);
  return result;
}

/// K_a x K_b matrix of cosine similarities.
inline Matrix attractor_similarity(const AttractorSet& a, const AttractorSet& b) {
  if (a.dim != b.dim)
    throw DimensionError("attractor dims differ: " + std::to_string(a.dim) + " vs " +
                         std::to_string(b.dim));
  Matrix s(a.k, b.k);
  for (std::size_t i = 0; i < a.k; ++i) {
    const double ni = detail::norm<float>(a.vector(i));
    for (std::size_t j = 0; j < b.k; ++j) {
      const double nj = detail::norm<float>(b.vector(j));
      const double denom = ni * nj;
      const double c = denom > 0.0 ? detail::dot<float, float>(a.vector(i), b.vector(j)) / denom : 0.0;
      s(i, j) = std::clamp(c, -1.0, 1.0);
    }
  }
  return s;
}

// SAEB: "SAEB", u32 version, u32 K, u32 D, u32 provenance, K float32 mask
// energies, then K x D float32 vectors. Little-endian throughout.
inline constexpr std::uint32_t kAttractorFormatVersion = 1;

inline std::vector<std::uint8_t> serialize_attractors(const AttractorSet& a) {
  if (a.k == 0 || a.dim == 0 || a.vectors.size() != a.k * a.dim)
    throw DimensionError("attractor set shape is inconsistent");
  io::ByteWriter out;
  out.magic("SAEB");
  out.u32(kAttractorFormatVersion);
  out.u32(static_cast<std::uint32_t>(a.k));
  out.u32(static_cast<std::uint32_t>(a.dim));
  out.u32(static_cast<std::uint32_t>(a.provenance));
  if (a.mask_energy.size() == a.k) {
    out.f32s(a.mask_energy);
  } else {
    for (std::size_t i = 0; i < a.k; ++i) out.f32(0.0f);
  }
  out.f32s(a.vectors);
  return out.bytes();
}

inline AttractorSet deserialize_attractors(std::span<const std::uint8_t> bytes) {
  io::ByteReader in(bytes);
  in.expect_magic("SAEB", "attractor file");
  const std::size_t version_at = in.offset();
  const std::uint32_t version = in.u32("version");
  if (version != kAttractorFormatVersion)
    throw FormatError(version_at, "unsupported SAEB version " + std::to_string(version));
  const std::size_t dims_at = in.offset();
  AttractorSet a;
  a.k = in.u32("K");
  a.dim = in.u32("D");
  const std::size_t prov_at = in.offset();
  const std::uint32_t prov = in.u32("provenance");
  if (a.k == 0 || a.dim == 0) throw FormatError(dims_at, "SAEB header has zero K or D");
  if (prov > 2) throw FormatError(prov_at, "unknown provenance code " + std::to_string(prov));
  a.provenance = static_cast<Provenance>(prov);
  if (in.remaining() != (a.k + a.k * a.dim) * 4)
    throw FormatError(in.offset(), "SAEB payload length does not match K and D");
  a.mask_energy = in.f32s(a.k, "mask energies");
  a.vectors = in.f32s(a.k * a.dim, "attractor vectors");
  in.expect_end("SAEB payload");
  return a;
}

inline void save_attractors(const AttractorSet& a, const std::filesystem::path& path) {
  io::write_file(path, serialize_attractors(a));
}

inline AttractorSet load_attractors(const std::filesystem::path& path) {
  return deserialize_attractors(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Embedder selection and reference extraction.

/// Test-time stand-in for a trained network. `sources` are the mixture
/// components exactly as they were summed (gains applied); their ideal
/// ratio masks decide which fixture attractor each bin receives.
struct OracleSpec {
  std::vector<Waveform> sources;
  AttractorSet attractors;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;
  RatioMaskOptions mask_options;
};

using Embedder = std::variant<TcnWeights, OracleSpec>;

inline constexpr int kPipelineSampleRate = 16000;

/// Embedding field for a mixture representation.
inline EmbeddingField embed(const TFRepresentation& mixture, const Embedder& embedder,
                            const CodecWeights& codec, unsigned threads = 1) {
  if (const auto* tcn = std::get_if<TcnWeights>(&embedder))
    return tcn_forward(mixture, *tcn, threads);
  const auto& oracle = std::get<OracleSpec>(embedder);
  std::vector<TFRepresentation> source_tfs;
  for (const auto& s : oracle.sources) {
    TFRepresentation tf = encode(s, codec);
    if (tf.frames() < mixture.frames())
      throw DimensionError("oracle source is shorter than the mixture");
    Matrix trimmed(mixture.frames(), tf.feature_dim());
    std::copy_n(tf.values.flat().begin(), trimmed.size(), trimmed.flat().begin());
    source_tfs.push_back(TFRepresentation{std::move(trimmed)});
  }
  const MaskSet masks = ideal_ratio_masks(source_tfs, oracle.mask_options);
  return oracle_embed(masks, oracle.attractors, oracle.noise_sigma, oracle.seed);
}

struct ExtractOptions {
  std::size_t k = 1;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
  unsigned threads = 1;
};

inline void require_pipeline_rate(const Waveform& w) {
  if (w.sample_rate != kPipelineSampleRate)
    throw RateError("expected " + std::to_string(kPipelineSampleRate) + " Hz audio, got " +
                    std::to_string(w.sample_rate) + " Hz");
}

/// encode -> embed -> energy weights -> spherical K-means. Returns all K
/// attractors; mask_energy[i] is the total weight of the bins assigned to
/// attractor i. Picking the target speaker among them is up to the caller.
inline AttractorSet extract_reference_attractors(const Waveform& reference,
                                                 const CodecWeights& codec,
                                                 const Embedder& embedder,
                                                 const ExtractOptions& opt) {
  require_pipeline_rate(reference);
  reference.validate();
  const TFRepresentation e_x = encode(reference, codec);
  const EmbeddingField field = embed(e_x, embedder, codec, opt.threads);
  const EnergyWeight w = energy_weights(e_x);
  return spherical_kmeans(field, w, {opt.k, opt.seed, opt.max_iter, opt.tol, opt.threads})
      .attractors;
}

}  // namespace sanet
