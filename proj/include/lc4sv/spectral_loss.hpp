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

#ifndef LC4SV_SPECTRAL_LOSS_HPP_
#define LC4SV_SPECTRAL_LOSS_HPP_

#include <cmath>
#include <memory>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/graph.hpp"
#include "lc4sv/stft.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// Floor inside the log-magnitude loss; keeps silent cells finite.
inline constexpr double kLogMagnitudeEps = 1e-7;

// The three resolutions used for pre-training (DEMUCS recipe values).
inline std::vector<StftConfig> default_ptn_configs() {
  return {StftConfig{512, 50, 240}, StftConfig{1024, 120, 600},
          StftConfig{2048, 240, 1200}};
}

inline double bin_magnitude(const std::complex<double>& z) {
  return std::sqrt(z.real() * z.real() + z.imag() * z.imag());
}

// || |STFT(est)| - |STFT(tgt)| ||_F / || |STFT(tgt)| ||_F.
inline double spectral_convergence_loss(const Waveform& estimate,
                                        const Waveform& target,
                                        const StftConfig& cfg) {
  require_combinable(estimate, target, "spectral loss inputs");
  const Spectrogram se = stft(estimate, cfg);
  const Spectrogram st = stft(target, cfg);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < st.bins.size(); ++i) {
    const double me = bin_magnitude(se.bins[i]);
    const double mt = bin_magnitude(st.bins[i]);
    num += (me - mt) * (me - mt);
    den += mt * mt;
  }
  if (den <= 0.0) {
    throw DegenerateInputError("spectral convergence target is silent");
  }
  return std::sqrt(num) / std::sqrt(den);
}

// Mean over all time-frequency cells of
// | log(|STFT(est)| + eps) - log(|STFT(tgt)| + eps) |.
inline double log_magnitude_loss(const Waveform& estimate,
                                 const Waveform& target,
                                 const StftConfig& cfg) {
  require_combinable(estimate, target, "spectral loss inputs");
  const Spectrogram se = stft(estimate, cfg);
  const Spectrogram st = stft(target, cfg);
  double acc = 0.0;
  for (std::size_t i = 0; i < st.bins.size(); ++i) {
    acc += std::fabs(std::log(bin_magnitude(se.bins[i]) + kLogMagnitudeEps) -
                     std::log(bin_magnitude(st.bins[i]) + kLogMagnitudeEps));
  }
  return acc / static_cast<double>(st.bins.size());
}

// Pre-training objective: mean-absolute waveform error plus the sum over
// resolutions of spectral-convergence and log-magnitude losses.
inline double ptn_loss(const Waveform& estimate, const Waveform& target,
                       const std::vector<StftConfig>& configs) {
  require_combinable(estimate, target, "ptn loss inputs");
  if (configs.empty()) throw ConfigError("ptn_loss needs at least one config");
  double acc = 0.0;
  for (std::size_t t = 0; t < estimate.samples.size(); ++t) {
    acc += std::fabs(static_cast<double>(estimate.samples[t]) -
                     static_cast<double>(target.samples[t]));
  }
  double loss = acc / static_cast<double>(estimate.samples.size());
  for (const StftConfig& cfg : configs) {
    loss += spectral_convergence_loss(estimate, target, cfg);
    loss += log_magnitude_loss(estimate, target, cfg);
  }
  return loss;
}

// ---- graph builders (training path) --------------------------------------

inline std::shared_ptr<const Tensor> magnitude_tensor(const Spectrogram& spec) {
  Tensor t({spec.num_frames, spec.num_bins});
  for (std::size_t i = 0; i < spec.bins.size(); ++i) {
    t.v[i] = bin_magnitude(spec.bins[i]);
  }
  return std::make_shared<const Tensor>(std::move(t));
}

// Packed one-sided spectrum {F, 2K} of a waveform node, framing identical to
// stft().
inline NodeId stft_packed_node(Graph& g, NodeId wave, const StftConfig& cfg) {
  const int frames = stft_num_frames(g.value(wave).numel(), cfg);
  if (frames <= 0) throw ShapeError("waveform node shorter than STFT window");
  return g.rfft_frames(g.frame_window(wave, cfg, /*pad=*/0, frames));
}

inline NodeId stft_magnitude_node(Graph& g, NodeId wave, const StftConfig& cfg) {
  return g.magnitude(stft_packed_node(g, wave, cfg));
}

// Both spectral losses at one resolution as a {2} node [L_sc, L_mag].
inline NodeId stft_loss_pair_node(Graph& g, NodeId est_wave,
                                  const Waveform& target,
                                  const StftConfig& cfg) {
  return g.stft_pair_loss(stft_packed_node(g, est_wave, cfg),
                          magnitude_tensor(stft(target, cfg)),
                          kLogMagnitudeEps);
}

inline NodeId spectral_convergence_node(Graph& g, NodeId est_wave,
                                        const Waveform& target,
                                        const StftConfig& cfg) {
  return g.slice(stft_loss_pair_node(g, est_wave, target, cfg), 0, 1);
}

inline NodeId log_magnitude_node(Graph& g, NodeId est_wave,
                                 const Waveform& target,
                                 const StftConfig& cfg) {
  return g.slice(stft_loss_pair_node(g, est_wave, target, cfg), 1, 1);
}

inline NodeId ptn_loss_node(Graph& g, NodeId est_wave, const Waveform& target,
                            const std::vector<StftConfig>& configs) {
  if (configs.empty()) throw ConfigError("ptn_loss needs at least one config");
  if (g.value(est_wave).numel() != target.samples.size()) {
    throw ShapeError("ptn loss estimate/target length mismatch");
  }
  Tensor tgt({static_cast<int>(target.samples.size())});
  for (std::size_t i = 0; i < target.samples.size(); ++i) {
    tgt.v[i] = static_cast<double>(target.samples[i]);
  }
  NodeId loss = g.mean_abs(g.sub(est_wave, g.constant(std::move(tgt))));
  for (const StftConfig& cfg : configs) {
    loss = g.add(loss, g.sum(stft_loss_pair_node(g, est_wave, target, cfg)));
  }
  return loss;
}

}  // namespace lc4sv

#endif  // LC4SV_SPECTRAL_LOSS_HPP_
