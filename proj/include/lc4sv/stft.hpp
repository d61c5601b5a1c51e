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

#ifndef LC4SV_STFT_HPP_
#define LC4SV_STFT_HPP_

#include <complex>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/fft.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// One STFT resolution: Hann analysis window of win_length samples, hopped by
// hop_size, zero-padded to fft_size.
struct StftConfig {
  int fft_size = 512;
  int hop_size = 128;
  int win_length = 512;
};

inline void validate(const StftConfig& cfg) {
  if (cfg.hop_size <= 0 || cfg.win_length <= 0 || cfg.fft_size <= 0) {
    throw DomainError("STFT sizes must be positive");
  }
  if (cfg.hop_size > cfg.win_length || cfg.win_length > cfg.fft_size) {
    throw DomainError("STFT config needs hop <= win <= fft");
  }
}

// Periodic Hann window.
inline std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

inline int stft_num_frames(std::size_t length, const StftConfig& cfg) {
  if (length < static_cast<std::size_t>(cfg.win_length)) return 0;
  return static_cast<int>((length - cfg.win_length) / cfg.hop_size) + 1;
}

// Complex one-sided spectrogram, frames x (fft_size/2 + 1), row-major.
struct Spectrogram {
  int num_frames = 0;
  int num_bins = 0;
  std::vector<std::complex<double>> bins;

  std::complex<double>& at(int frame, int bin) {
    return bins[static_cast<std::size_t>(frame) * num_bins + bin];
  }
  const std::complex<double>& at(int frame, int bin) const {
    return bins[static_cast<std::size_t>(frame) * num_bins + bin];
  }
};

inline Spectrogram stft(const Waveform& w, const StftConfig& cfg) {
  validate(cfg);
  validate(w, "stft input");
  const int frames = stft_num_frames(w.samples.size(), cfg);
  if (frames <= 0) {
    throw ShapeError("stft input of " + std::to_string(w.samples.size()) +
                     " samples is shorter than the window (" +
                     std::to_string(cfg.win_length) + ")");
  }
  const std::vector<double> window = hann_window(cfg.win_length);
  Spectrogram spec;
  spec.num_frames = frames;
  spec.num_bins = onesided_bins(cfg.fft_size);
  spec.bins.resize(static_cast<std::size_t>(frames) * spec.num_bins);
  std::vector<double> frame(cfg.fft_size, 0.0);
  for (int f = 0; f < frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * cfg.hop_size;
    for (int i = 0; i < cfg.win_length; ++i) {
      frame[i] = window[i] * static_cast<double>(w.samples[start + i]);
    }
    for (int i = cfg.win_length; i < cfg.fft_size; ++i) frame[i] = 0.0;
    rfft_frame(frame.data(), cfg.fft_size, &spec.at(f, 0));
  }
  return spec;
}

// 40-band mel filterbank rows over a one-sided power spectrum, triangular
// filters on the HTK mel scale between 0 Hz and Nyquist.
inline std::vector<std::vector<double>> mel_filterbank(int num_bands,
                                                       int fft_size,
                                                       int sample_rate_hz) {
  auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto mel_to_hz = [](double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  };
  const int bins = onesided_bins(fft_size);
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> edges_hz(num_bands + 2);
  for (int m = 0; m < num_bands + 2; ++m) {
    edges_hz[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (num_bands + 1));
  }
  std::vector<std::vector<double>> bank(num_bands, std::vector<double>(bins, 0.0));
  for (int b = 0; b < num_bands; ++b) {
    const double lo = edges_hz[b], mid = edges_hz[b + 1], hi = edges_hz[b + 2];
    for (int k = 0; k < bins; ++k) {
      const double hz = static_cast<double>(k) * sample_rate_hz / fft_size;
      double v = 0.0;
      if (hz > lo && hz < mid) {
        v = (hz - lo) / (mid - lo);
      } else if (hz >= mid && hz < hi) {
        v = (hi - hz) / (hi - mid);
      }
      bank[b][k] = v;
    }
  }
  return bank;
}

}  // namespace lc4sv

#endif  // LC4SV_STFT_HPP_
