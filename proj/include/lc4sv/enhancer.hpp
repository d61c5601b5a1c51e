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

#ifndef LC4SV_ENHANCER_HPP_
#define LC4SV_ENHANCER_HPP_

#include <complex>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lc4sv/adam.hpp"
#include "lc4sv/checkpoint.hpp"
#include "lc4sv/embedder.hpp"
#include "lc4sv/errors.hpp"
#include "lc4sv/graph.hpp"
#include "lc4sv/spectral_loss.hpp"
#include "lc4sv/stft.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// Toy masking enhancer: log-magnitude STFT frames -> dense 256 -> LeakyReLU
// -> dense 257 with sigmoid -> mask on the noisy spectrum -> weighted
// overlap-add with the noisy phase.
struct EnhancerArch {
  int fft = 512;
  int hop = 128;
  int hidden = 256;
  double leaky_slope = 0.01;
};

inline constexpr std::size_t kMinEnhanceSamples = 8000;  // 0.5 s at 16 kHz
inline constexpr double kEnhLogEps = 1e-7;

// Internal framing pads the signal by one full window on both sides so every
// real sample sits under a complete window stack during overlap-add.
struct EnhancerFraming {
  int pad = 0;
  int num_frames = 0;
  std::shared_ptr<const std::vector<double>> window;
  std::shared_ptr<const std::vector<double>> denom;  // per output sample
};

inline EnhancerFraming enhancer_framing(int length, const EnhancerArch& arch) {
  EnhancerFraming fr;
  fr.pad = arch.fft;
  fr.num_frames = (length + 2 * fr.pad - arch.fft) / arch.hop + 1;
  fr.window = std::make_shared<const std::vector<double>>(hann_window(arch.fft));
  auto denom = std::make_shared<std::vector<double>>(length, 0.0);
  for (int f = 0; f < fr.num_frames; ++f) {
    const long base = static_cast<long>(f) * arch.hop - fr.pad;
    for (int i = 0; i < arch.fft; ++i) {
      const long t = base + i;
      if (t >= 0 && t < length) {
        (*denom)[t] += (*fr.window)[i] * (*fr.window)[i];
      }
    }
  }
  for (double& d : *denom) {
    if (d < 1e-12) d = 1e-12;
  }
  fr.denom = std::move(denom);
  return fr;
}

inline void init_enhancer_params(ParamStore& params, Rng& rng,
                                 const std::string& prefix = "enhancer.",
                                 const EnhancerArch& arch = {}) {
  const int bins = onesided_bins(arch.fft);
  params.add(prefix + "w1", init_dense_weight(arch.hidden, bins, rng));
  params.add(prefix + "b1", init_dense_bias(arch.hidden, bins, rng));
  params.add(prefix + "w2", init_dense_weight(bins, arch.hidden, rng));
  params.add(prefix + "b2", init_dense_bias(bins, arch.hidden, rng));
}

struct EnhancerNodes {
  NodeId w1, b1, w2, b2;
};

inline EnhancerNodes add_enhancer_nodes(Graph& g, const ParamStore& params,
                                        bool trainable,
                                        const std::string& prefix = "enhancer.") {
  auto lift = [&](const std::string& name) {
    const Tensor& t = params.at(prefix + name);
    return trainable ? g.parameter(t) : g.constant(t);
  };
  return EnhancerNodes{lift("w1"), lift("b1"), lift("w2"), lift("b2")};
}

// Builds the enhancement subgraph for a fixed input waveform; outputs a node
// of the same length holding the enhanced signal (doubles). The input's
// spectrum and log-magnitude never need gradients, so they are computed
// outside the tape and enter as constants.
inline NodeId build_enhanced_wave(Graph& g, const Waveform& noisy,
                                  const EnhancerNodes& n,
                                  const EnhancerArch& arch = {}) {
  const int length = static_cast<int>(noisy.samples.size());
  const EnhancerFraming fr = enhancer_framing(length, arch);
  const int bins = onesided_bins(arch.fft);

  Tensor packed({fr.num_frames, 2 * bins});
  Tensor logmag({fr.num_frames, bins});
  std::vector<double> frame(arch.fft);
  for (int f = 0; f < fr.num_frames; ++f) {
    const long base = static_cast<long>(f) * arch.hop - fr.pad;
    for (int i = 0; i < arch.fft; ++i) {
      const long t = base + i;
      frame[i] = (t >= 0 && t < length)
                     ? (*fr.window)[i] * static_cast<double>(noisy.samples[t])
                     : 0.0;
    }
    double* prow = &packed.v[static_cast<std::size_t>(f) * 2 * bins];
    rfft_frame_split(frame.data(), arch.fft, prow, prow + bins);
    double* lrow = &logmag.v[static_cast<std::size_t>(f) * bins];
    for (int k = 0; k < bins; ++k) {
      lrow[k] = std::log(
          std::sqrt(prow[k] * prow[k] + prow[bins + k] * prow[bins + k]) +
          kEnhLogEps);
    }
  }

  NodeId logmag_c = g.constant(std::move(logmag));
  NodeId packed_c = g.constant(std::move(packed));
  NodeId hidden = g.leaky_relu(g.rows_dense(logmag_c, n.w1, n.b1), arch.leaky_slope);
  NodeId mask = g.sigmoid(g.rows_dense(hidden, n.w2, n.b2));
  NodeId masked = g.cmul_mask(mask, packed_c);
  NodeId frames_t = g.irfft_frames(masked, arch.fft);
  return g.overlap_add(frames_t, arch.hop, fr.pad, length, fr.window, fr.denom);
}

// Plain forward pass. Mirrors build_enhanced_wave operation for operation so
// the inference output matches the training-time forward values.
inline Waveform enhance(const Waveform& noisy, const ParamStore& params,
                        const std::string& prefix = "enhancer.",
                        const EnhancerArch& arch = {}) {
  validate(noisy, "enhancer input");
  if (noisy.sample_rate_hz != kDefaultSampleRateHz) {
    throw DomainError("enhancer expects 16 kHz input");
  }
  if (noisy.samples.size() < kMinEnhanceSamples) {
    throw ShapeError("enhancer input shorter than 0.5 s");
  }
  const int length = static_cast<int>(noisy.samples.size());
  const EnhancerFraming fr = enhancer_framing(length, arch);
  const int bins = onesided_bins(arch.fft);
  const Tensor& w1 = params.at(prefix + "w1");
  const Tensor& b1 = params.at(prefix + "b1");
  const Tensor& w2 = params.at(prefix + "w2");
  const Tensor& b2 = params.at(prefix + "b2");

  std::vector<double> out(length, 0.0);
  std::vector<double> frame(arch.fft);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> logmag(bins), hidden(arch.hidden), mask(bins);
  std::vector<double> re(bins), im(bins), frame_t(arch.fft);
  for (int f = 0; f < fr.num_frames; ++f) {
    const long base = static_cast<long>(f) * arch.hop - fr.pad;
    for (int i = 0; i < arch.fft; ++i) {
      const long t = base + i;
      frame[i] = (t >= 0 && t < length)
                     ? (*fr.window)[i] * static_cast<double>(noisy.samples[t])
                     : 0.0;
    }
    rfft_frame(frame.data(), arch.fft, spec.data());
    for (int k = 0; k < bins; ++k) {
      logmag[k] = std::log(std::hypot(spec[k].real(), spec[k].imag()) +
                           kEnhLogEps);
    }
    for (int j = 0; j < arch.hidden; ++j) {
      double acc = b1.v[j];
      const double* row = &w1.v[static_cast<std::size_t>(j) * bins];
      for (int k = 0; k < bins; ++k) acc += row[k] * logmag[k];
      hidden[j] = (acc >= 0.0) ? acc : arch.leaky_slope * acc;
    }
    for (int k = 0; k < bins; ++k) {
      double acc = b2.v[k];
      const double* row = &w2.v[static_cast<std::size_t>(k) * arch.hidden];
      for (int j = 0; j < arch.hidden; ++j) acc += row[j] * hidden[j];
      mask[k] = 1.0 / (1.0 + std::exp(-acc));
      re[k] = mask[k] * spec[k].real();
      im[k] = mask[k] * spec[k].imag();
    }
    irfft_frame(re.data(), im.data(), arch.fft, frame_t.data());
    for (int i = 0; i < arch.fft; ++i) {
      const long t = base + i;
      if (t >= 0 && t < length) {
        out[t] += (*fr.window)[i] * frame_t[i] / (*fr.denom)[t];
      }
    }
  }

  Waveform enhanced;
  enhanced.sample_rate_hz = noisy.sample_rate_hz;
  enhanced.samples.resize(out.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    enhanced.samples[t] = static_cast<float>(out[t]);
  }
  validate(enhanced, "enhancer output");
  return enhanced;
}

// ---- pre-training ----------------------------------------------------------

struct PretrainConfig {
  int steps = 500;
  int batch_size = 8;
  double learning_rate = 2e-4;
  int crop_samples = 16000;  // 0 trains on full utterances
  std::vector<StftConfig> loss_configs = default_ptn_configs();
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct PretrainResult {
  ParamStore params;
  std::vector<double> step_losses;
};

inline Waveform crop_wave(const Waveform& w, std::size_t offset,
                          std::size_t length) {
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.assign(w.samples.begin() + offset,
                     w.samples.begin() + offset + length);
  return out;
}

// Minimizes the mean multi-resolution STFT objective over noisy/clean pairs
// with Adam. Deterministic for a fixed seed.
inline PretrainResult pretrain_se(const std::vector<NoisyCleanPair>& pairs,
                                  const PretrainConfig& cfg) {
  if (pairs.empty()) throw ConfigError("pretraining needs a nonempty dataset");
  if (cfg.steps < 0) throw ConfigError("negative step count");
  if (cfg.learning_rate < 0.0) throw ConfigError("negative learning rate");
  if (cfg.batch_size <= 0) throw ConfigError("batch size must be positive");
  for (const auto& p : pairs) require_combinable(p.noisy, p.clean, "pair");

  const EnhancerArch arch;
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(1);
  Rng batch_rng = rng.fork(2);

  PretrainResult result;
  init_enhancer_params(result.params, init_rng);

  std::size_t min_crop = 0;
  for (const StftConfig& c : cfg.loss_configs) {
    min_crop = std::max(min_crop, static_cast<std::size_t>(c.win_length));
  }

  AdamOptimizer opt(cfg.adam);
  const char* names[4] = {"w1", "b1", "w2", "b2"};
  for (int step = 0; step < cfg.steps; ++step) {
    ParamStore grads;
    for (const char* nm : names) {
      grads.add(std::string("enhancer.") + nm,
                Tensor(result.params.at(std::string("enhancer.") + nm).shape));
    }
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const NoisyCleanPair& pair = pairs[batch_rng.below(pairs.size())];
      Waveform noisy = pair.noisy, clean = pair.clean;
      if (cfg.crop_samples > 0 &&
          noisy.samples.size() > static_cast<std::size_t>(cfg.crop_samples)) {
        const std::size_t offset = batch_rng.below(
            noisy.samples.size() - cfg.crop_samples + 1);
        noisy = crop_wave(noisy, offset, cfg.crop_samples);
        clean = crop_wave(clean, offset, cfg.crop_samples);
      }
      if (noisy.samples.size() < std::max(min_crop, std::size_t{1})) {
        throw ConfigError("training pair shorter than the largest STFT window");
      }
      Graph g;
      EnhancerNodes nodes = add_enhancer_nodes(g, result.params, true);
      NodeId enhanced = build_enhanced_wave(g, noisy, nodes);
      NodeId loss = ptn_loss_node(g, enhanced, clean, cfg.loss_configs);
      batch_loss += g.value(loss).v[0];
      g.backward(loss, 1.0 / cfg.batch_size);
      const NodeId ids[4] = {nodes.w1, nodes.b1, nodes.w2, nodes.b2};
      for (int i = 0; i < 4; ++i) {
        Tensor& acc = grads.at(std::string("enhancer.") + names[i]);
        const Tensor& gt = g.grad(ids[i]);
        for (std::size_t k = 0; k < acc.numel(); ++k) acc.v[k] += gt.v[k];
      }
    }
    result.step_losses.push_back(batch_loss / cfg.batch_size);
    for (const char* nm : names) {
      const std::string key = std::string("enhancer.") + nm;
      opt.step(key, result.params.at(key), grads.at(key), cfg.learning_rate);
    }
  }
  return result;
}

// ---- SV fine-tuning ----------------------------------------------------------

struct FinetuneConfig {
  int steps = 200;
  double learning_rate = 1e-4;
  int crop_samples = 24000;  // 0 keeps full utterances
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct FinetuneResult {
  ParamStore params;  // updated enhancer tensors
  ApLossParams ap;
  std::vector<double> step_losses;
};

// Fine-tunes the enhancer through a frozen proxy embedder with the AP
// objective. Both the query and the centroid signal of every speaker are
// enhanced before embedding. Only enhancer tensors and the AP scale/bias
// receive updates; the proxy is read-only and verified unchanged.
inline FinetuneResult finetune_se(
    const ParamStore& pretrained, const std::function<SpeakerBatch(int)>& batches,
    const ParamStore& proxy_embedder, const ApLossParams& ap_init,
    const FinetuneConfig& cfg, const std::string& proxy_prefix = "embedder.") {
  if (cfg.steps < 0) throw ConfigError("negative step count");
  if (cfg.learning_rate < 0.0) throw ConfigError("negative learning rate");

  const std::string proxy_before = serialize_checkpoint(proxy_embedder);

  FinetuneResult result;
  for (const auto& [name, t] : pretrained) result.params.add(name, t);
  result.ap = ap_init;

  Rng rng(cfg.seed);
  Rng role_rng = rng.fork(1);
  Rng crop_rng = rng.fork(2);

  AdamOptimizer opt(cfg.adam);
  const char* names[4] = {"w1", "b1", "w2", "b2"};
  for (int step = 0; step < cfg.steps; ++step) {
    SpeakerBatch batch = batches(step);
    const std::vector<int> query_slot = build_ap_batch(batch, role_rng);

    Graph g;
    EnhancerNodes enh_nodes = add_enhancer_nodes(g, result.params, true);
    EmbedderNodes proxy_nodes =
        add_embedder_nodes(g, proxy_embedder, proxy_prefix, false);
    NodeId w_node = g.parameter(Tensor::scalar(result.ap.w));
    NodeId b_node = g.parameter(Tensor::scalar(result.ap.b));

    auto embed_enhanced = [&](const Waveform& utt) {
      Waveform wave = utt;
      if (cfg.crop_samples > 0 &&
          wave.samples.size() > static_cast<std::size_t>(cfg.crop_samples)) {
        const std::size_t offset =
            crop_rng.below(wave.samples.size() - cfg.crop_samples + 1);
        wave = crop_wave(wave, offset, cfg.crop_samples);
      }
      NodeId enhanced = build_enhanced_wave(g, wave, enh_nodes);
      return build_embedding_from_wave(g, enhanced, proxy_nodes);
    };

    std::vector<NodeId> queries, centroids;
    for (std::size_t s = 0; s < batch.speaker_ids.size(); ++s) {
      queries.push_back(embed_enhanced(batch.utterances[s][query_slot[s]]));
      centroids.push_back(embed_enhanced(batch.utterances[s][1 - query_slot[s]]));
    }
    NodeId loss = ap_loss_node(g, queries, centroids, w_node, b_node);
    result.step_losses.push_back(g.value(loss).v[0]);
    g.backward(loss);

    const NodeId ids[4] = {enh_nodes.w1, enh_nodes.b1, enh_nodes.w2,
                           enh_nodes.b2};
    for (int i = 0; i < 4; ++i) {
      const std::string key = std::string("enhancer.") + names[i];
      opt.step(key, result.params.at(key), g.grad(ids[i]), cfg.learning_rate);
    }
    Tensor ap_w = Tensor::scalar(result.ap.w);
    Tensor ap_b = Tensor::scalar(result.ap.b);
    opt.step("ap.w", ap_w, g.grad(w_node), cfg.learning_rate);
    opt.step("ap.b", ap_b, g.grad(b_node), cfg.learning_rate);
    result.ap.w = ap_w.v[0];
    result.ap.b = ap_b.v[0];
    clamp_ap_scale(result.ap);
  }

  if (serialize_checkpoint(proxy_embedder) != proxy_before) {
    throw InternalError("frozen proxy embedder was mutated during fine-tuning");
  }
  return result;
}

}  // namespace lc4sv

#endif  // LC4SV_ENHANCER_HPP_
