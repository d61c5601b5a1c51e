// Copyright (c) 2026 LC4SV Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LC4SV_WAVE_HPP_
#define LC4SV_WAVE_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/rng.hpp"

namespace lc4sv {

inline constexpr int kDefaultSampleRateHz = 16000;

// Mono audio signal. Samples are kept as 32-bit floats (nominal [-1, 1]);
// all arithmetic on them runs in double precision and rounds back on store.
struct Waveform {
  std::vector<float> samples;
  int sample_rate_hz = kDefaultSampleRateHz;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

inline void validate(const Waveform& w, const std::string& what = "waveform") {
  if (w.sample_rate_hz <= 0) {
    throw DomainError(what + " has non-positive sample rate");
  }
  if (w.samples.empty()) {
    throw ShapeError(what + " is empty");
  }
  for (float s : w.samples) {
    if (!std::isfinite(s)) {
      throw DomainError(what + " contains a non-finite sample");
    }
  }
}

inline void require_combinable(const Waveform& a, const Waveform& b,
                               const std::string& what = "waveforms") {
  if (a.samples.size() != b.samples.size()) {
    throw ShapeError(what + " differ in length (" +
                     std::to_string(a.samples.size()) + " vs " +
                     std::to_string(b.samples.size()) + ")");
  }
  if (a.sample_rate_hz != b.sample_rate_hz) {
    throw ShapeError(what + " differ in sample rate");
  }
}

// Sum of squared samples, accumulated in double.
inline double energy(const Waveform& w) {
  double acc = 0.0;
  for (float s : w.samples) {
    acc += static_cast<double>(s) * static_cast<double>(s);
  }
  return acc;
}

// S~ = alpha * enhanced + (1 - alpha) * noisy, elementwise. The endpoints
// return exact copies so that alpha = 0 / alpha = 1 are bit-identical to
// their inputs.
inline Waveform interpolate(const Waveform& noisy, const Waveform& enhanced,
                            double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw DomainError("interpolation coefficient " + std::to_string(alpha) +
                      " outside [0, 1]");
  }
  require_combinable(noisy, enhanced, "interpolate inputs");
  if (alpha == 0.0) return noisy;
  if (alpha == 1.0) return enhanced;
  Waveform out;
  out.sample_rate_hz = noisy.sample_rate_hz;
  out.samples.resize(noisy.samples.size());
  for (std::size_t t = 0; t < noisy.samples.size(); ++t) {
    out.samples[t] = static_cast<float>(
        alpha * static_cast<double>(enhanced.samples[t]) +
        (1.0 - alpha) * static_cast<double>(noisy.samples[t]));
  }
  return out;
}

// A mixing result. `noise` holds the already-scaled noise so that
// noisy = clean + noise reproduces the stored samples bit-exactly, and
// `snr_db` is the SNR recomputed from the stored 32-bit samples.
struct NoisyCleanPair {
  Waveform noisy;
  Waveform clean;
  Waveform noise;
  double snr_db = 0.0;
};

// Scales `noise` so that 10*log10(energy(clean)/energy(scaled)) hits
// `target_snr_db`, then adds it onto `clean`.
inline NoisyCleanPair mix_at_snr(const Waveform& clean, const Waveform& noise,
                                 double target_snr_db) {
  validate(clean, "clean");
  validate(noise, "noise");
  require_combinable(clean, noise, "mix inputs");
  if (!std::isfinite(target_snr_db)) {
    throw DomainError("target SNR is not finite");
  }
  const double e_clean = energy(clean);
  const double e_noise = energy(noise);
  if (e_clean <= 0.0) throw DegenerateInputError("clean signal has zero energy");
  if (e_noise <= 0.0) throw DegenerateInputError("noise signal has zero energy");

  const double gain =
      std::sqrt(e_clean / (e_noise * std::pow(10.0, target_snr_db / 10.0)));

  NoisyCleanPair pair;
  pair.clean = clean;
  pair.noise.sample_rate_hz = noise.sample_rate_hz;
  pair.noise.samples.resize(noise.samples.size());
  pair.noisy.sample_rate_hz = clean.sample_rate_hz;
  pair.noisy.samples.resize(clean.samples.size());
  for (std::size_t t = 0; t < clean.samples.size(); ++t) {
    const float scaled =
        static_cast<float>(gain * static_cast<double>(noise.samples[t]));
    pair.noise.samples[t] = scaled;
    pair.noisy.samples[t] = clean.samples[t] + scaled;
  }
  const double e_scaled = energy(pair.noise);
  if (e_scaled <= 0.0) {
    throw DegenerateInputError("scaled noise underflowed to zero energy");
  }
  pair.snr_db = 10.0 * std::log10(energy(pair.clean) / e_scaled);
  return pair;
}

// Fits a noise clip to `length` samples: shorter clips are tiled with
// wraparound, longer ones cropped from a random offset drawn from `rng`.
inline Waveform fit_noise_length(const Waveform& noise, std::size_t length,
                                 Rng& rng) {
  validate(noise, "noise");
  if (length == 0) throw ShapeError("requested zero-length noise");
  Waveform out;
  out.sample_rate_hz = noise.sample_rate_hz;
  out.samples.resize(length);
  const std::size_t n = noise.samples.size();
  if (n >= length) {
    const std::size_t offset =
        (n == length) ? 0 : static_cast<std::size_t>(rng.below(n - length + 1));
    for (std::size_t t = 0; t < length; ++t) {
      out.samples[t] = noise.samples[offset + t];
    }
  } else {
    for (std::size_t t = 0; t < length; ++t) {
      out.samples[t] = noise.samples[t % n];
    }
  }
  return out;
}

}  // namespace lc4sv

#endif  // LC4SV_WAVE_HPP_
