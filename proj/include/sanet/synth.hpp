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

// Deterministic synthetic "speakers" and rooms, so that pipeline checks run
// without a speech corpus.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sanet/rng.hpp"
#include "sanet/types.hpp"

namespace sanet::synth {

inline std::size_t samples_for(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

inline Waveform sinusoid(double freq_hz, double seconds, int rate = 16000,
                         double amplitude = 0.5, double phase = 0.0) {
  Waveform w{std::vector<double>(samples_for(seconds, rate)), rate};
  for (std::size_t i = 0; i < w.size(); ++i)
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate + phase);
  return w;
}

/// Syllable-like on/off gain: alternating segments of 60-250 ms, active with
/// probability 0.7, with 10 ms raised-cosine ramps.
inline std::vector<double> syllable_envelope(std::size_t n, int rate, Rng& rng) {
  std::vector<double> target(n, 0.0);
  std::size_t pos = 0;
  while (pos < n) {
    const auto len = static_cast<std::size_t>(rng.uniform(0.06, 0.25) * rate);
    const double level = rng.uniform() < 0.7 ? rng.uniform(0.6, 1.0) : 0.0;
    for (std::size_t i = pos; i < std::min(n, pos + len); ++i) target[i] = level;
    pos += std::max<std::size_t>(len, 1);
  }
  const auto ramp = std::max<std::size_t>(1, static_cast<std::size_t>(0.01 * rate));
  std::vector<double> env(n, 0.0);
  // Moving average smooths the steps into ramps.
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += target[i];
    if (i >= ramp) acc -= target[i - ramp];
    env[i] = acc / static_cast<double>(ramp);
  }
  return env;
}

inline void normalize_peak(Waveform& w, double peak) {
  double m = 0.0;
  for (double v : w.samples) m = std::max(m, std::abs(v));
  if (m > 0.0)
    for (double& v : w.samples) v *= peak / m;
}

/// Voiced source: a gliding harmonic series (f0 in 100-250 Hz, six partials
/// with 1/h amplitudes) under a syllabic envelope.
inline Waveform harmonic_speaker(double seconds, std::uint64_t seed, int rate = 16000) {
  Rng rng(seed);
  const std::size_t n = samples_for(seconds, rate);
  const double f0 = rng.uniform(100.0, 250.0);
  const double vibrato_hz = rng.uniform(3.0, 6.0);
  const double vibrato_depth = rng.uniform(0.01, 0.04);
  std::vector<double> phases(6);
  for (auto& p : phases) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const auto env = syllable_envelope(n, rate, rng);
  Waveform w{std::vector<double>(n, 0.0), rate};
  double base_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double f = f0 * (1.0 + vibrato_depth * std::sin(2.0 * std::numbers::pi * vibrato_hz * t));
    base_phase += 2.0 * std::numbers::pi * f / rate;
    double s = 0.0;
    for (std::size_t h = 0; h < phases.size(); ++h)
      s += std::sin(static_cast<double>(h + 1) * base_phase + phases[h]) / static_cast<double>(h + 1);
    w.samples[i] = env[i] * s;
  }
  normalize_peak(w, 0.8);
  return w;
}

/// Unvoiced source: white noise through a resonant band-pass biquad (centre
/// 2-5 kHz) under a syllabic envelope.
inline Waveform noise_speaker(double seconds, std::uint64_t seed, int rate = 16000) {
  Rng rng(seed);
  const std::size_t n = samples_for(seconds, rate);
  const double centre = rng.uniform(2000.0, 5000.0);
  const double q = rng.uniform(1.0, 3.0);
  const auto env = syllable_envelope(n, rate, rng);
  // RBJ band-pass, constant 0 dB peak gain.
  const double omega = 2.0 * std::numbers::pi * centre / rate;
  const double alpha = std::sin(omega) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(omega) / a0, a2 = (1.0 - alpha) / a0;
  Waveform w{std::vector<double>(n, 0.0), rate};
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    const double y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x;
    y2 = y1;
    y1 = y;
    w.samples[i] = env[i] * y;
  }
  normalize_peak(w, 0.8);
  return w;
}

/// Direct path plus exponentially decaying noise tail reaching -60 dB at rt60.
inline Waveform synthetic_rir(double rt60_seconds, std::uint64_t seed, int rate = 16000,
                              double length_seconds = 0.25) {
  Rng rng(seed);
  const std::size_t n = std::max<std::size_t>(1, samples_for(length_seconds, rate));
  Waveform h{std::vector<double>(n, 0.0), rate};
  h.samples[0] = 1.0;
  const double decay = std::log(1000.0) / (rt60_seconds * rate);
  const auto onset = static_cast<std::size_t>(0.002 * rate);
  for (std::size_t i = std::max<std::size_t>(onset, 1); i < n; ++i)
    h.samples[i] = 0.3 * rng.normal() * std::exp(-decay * static_cast<double>(i));
  return h;
}

}  // namespace sanet::synth
