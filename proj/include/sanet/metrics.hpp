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
#include <vector>

#include "sanet/error.hpp"
#include "sanet/types.hpp"

namespace sanet {

inline constexpr double kSiSdrCapDb = 100.0;

struct SiSdrOptions {
  bool center = true;
  double eps = 1e-12;
};

/// Scale-invariant SDR in dB, clamped to +-100 dB.
inline double si_sdr(std::span<const double> estimate, std::span<const double> reference,
                     const SiSdrOptions& opt = {}) {
  if (estimate.size() != reference.size())
    throw DimensionError("SI-SDR needs equal-length signals");
  if (reference.empty()) throw InputError("SI-SDR reference is empty");
  double est_mean = 0.0, ref_mean = 0.0;
  if (opt.center) {
    for (std::size_t i = 0; i < reference.size(); ++i) {
      est_mean += estimate[i];
      ref_mean += reference[i];
    }
    est_mean /= static_cast<double>(reference.size());
    ref_mean /= static_cast<double>(reference.size());
  }
  double cross = 0.0, ref_energy = 0.0, raw_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double s = reference[i] - ref_mean;
    cross += (estimate[i] - est_mean) * s;
    ref_energy += s * s;
    raw_energy += reference[i] * reference[i];
  }
  // A constant reference leaves only rounding residue after centering.
  if (!(ref_energy > 1e-20 * raw_energy) || ref_energy == 0.0)
    throw InputError("SI-SDR reference has no energy after mean removal");
  const double scale = cross / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = scale * (reference[i] - ref_mean);
    const double e = (estimate[i] - est_mean) - t;
    target += t * t;
    noise += e * e;
  }
  const double db = 10.0 * std::log10(target / (noise + opt.eps));
  if (std::isnan(db)) return -kSiSdrCapDb;
  return std::clamp(db, -kSiSdrCapDb, kSiSdrCapDb);
}

inline double si_sdr(const Waveform& estimate, const Waveform& reference,
                     const SiSdrOptions& opt = {}) {
  return si_sdr(std::span<const double>(estimate.samples),
                std::span<const double>(reference.samples), opt);
}

}  // namespace sanet
