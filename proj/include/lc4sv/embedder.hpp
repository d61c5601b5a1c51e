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

#ifndef LC4SV_EMBEDDER_HPP_
#define LC4SV_EMBEDDER_HPP_

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lc4sv/adam.hpp"
#include "lc4sv/checkpoint.hpp"
#include "lc4sv/errors.hpp"
#include "lc4sv/graph.hpp"
#include "lc4sv/rng.hpp"
#include "lc4sv/stft.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

inline constexpr int kEmbeddingDim = 256;
inline constexpr std::size_t kMinEmbedSamples = 8000;  // 0.5 s at 16 kHz

// Speaker/content representation; always 256-dimensional.
struct Embedding {
  std::vector<double> v;

  Embedding() : v(kEmbeddingDim, 0.0) {}
  explicit Embedding(std::vector<double> values) : v(std::move(values)) {
    if (v.size() != kEmbeddingDim) {
      throw ShapeError("embedding must have dimension 256");
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw DomainError("embedding is not finite");
    }
  }
};

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.v, b.v);
}

// Toy embedder: 40 log-mel bands per 25 ms frame (10 ms hop), per-band mean
// and standard deviation over frames, then 80 -> 128 -> 256 dense layers.
struct EmbedderArch {
  int mel_bands = 40;
  int frame_len = 400;
  int hop = 160;
  int fft = 512;
  int hidden = 128;
  double leaky_slope = 0.01;
};

inline constexpr double kMelLogEps = 1e-7;
inline constexpr double kStdVarEps = 1e-8;

inline int embedder_feature_dim(const EmbedderArch& arch) {
  return 2 * arch.mel_bands;
}

inline std::shared_ptr<const Tensor> make_mel_matrix(int mel_bands, int fft) {
  auto bank = mel_filterbank(mel_bands, fft, kDefaultSampleRateHz);
  Tensor m({mel_bands, onesided_bins(fft)});
  for (int b = 0; b < mel_bands; ++b) {
    for (int k = 0; k < onesided_bins(fft); ++k) {
      m.v[static_cast<std::size_t>(b) * onesided_bins(fft) + k] = bank[b][k];
    }
  }
  return std::make_shared<const Tensor>(std::move(m));
}

inline std::shared_ptr<const Tensor> mel_matrix(const EmbedderArch& arch) {
  static const std::shared_ptr<const Tensor> cached =
      make_mel_matrix(EmbedderArch{}.mel_bands, EmbedderArch{}.fft);
  const EmbedderArch def;
  if (arch.mel_bands == def.mel_bands && arch.fft == def.fft) return cached;
  return make_mel_matrix(arch.mel_bands, arch.fft);
}

inline void require_embeddable(const Waveform& w) {
  validate(w, "embedder input");
  if (w.sample_rate_hz != kDefaultSampleRateHz) {
    throw DomainError("embedder expects 16 kHz input");
  }
  if (w.samples.size() < kMinEmbedSamples) {
    throw ShapeError("embedder input shorter than 0.5 s");
  }
}

// Plain 80-dimensional log-mel statistics. Mirrors the graph path in
// build_embedder_features exactly, operation for operation.
inline std::vector<double> logmel_stat_features(const Waveform& w,
                                                const EmbedderArch& arch = {}) {
  require_embeddable(w);
  const StftConfig cfg{arch.fft, arch.hop, arch.frame_len};
  const int frames = stft_num_frames(w.samples.size(), cfg);
  const std::vector<double> window = hann_window(arch.frame_len);
  const std::shared_ptr<const Tensor> mel = mel_matrix(arch);
  const int bins = onesided_bins(arch.fft);

  std::vector<double> frame(arch.fft, 0.0);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> logmel(static_cast<std::size_t>(frames) * arch.mel_bands);
  for (int f = 0; f < frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * arch.hop;
    for (int i = 0; i < arch.frame_len; ++i) {
      frame[i] = window[i] * static_cast<double>(w.samples[start + i]);
    }
    rfft_frame(frame.data(), arch.fft, spec.data());
    for (int b = 0; b < arch.mel_bands; ++b) {
      const double* row = &mel->v[static_cast<std::size_t>(b) * bins];
      double acc = 0.0;
      for (int k = 0; k < bins; ++k) {
        acc += row[k] * (spec[k].real() * spec[k].real() +
                         spec[k].imag() * spec[k].imag());
      }
      logmel[static_cast<std::size_t>(f) * arch.mel_bands + b] =
          std::log(acc + kMelLogEps);
    }
  }

  std::vector<double> features(embedder_feature_dim(arch));
  const double inv = 1.0 / frames;
  for (int b = 0; b < arch.mel_bands; ++b) {
    double mean = 0.0;
    for (int f = 0; f < frames; ++f) {
      mean += logmel[static_cast<std::size_t>(f) * arch.mel_bands + b];
    }
    mean *= inv;
    double var = 0.0;
    for (int f = 0; f < frames; ++f) {
      const double d =
          logmel[static_cast<std::size_t>(f) * arch.mel_bands + b] - mean;
      var += d * d;
    }
    var *= inv;
    features[b] = mean;
    features[arch.mel_bands + b] = std::sqrt(var + kStdVarEps);
  }
  return features;
}

// ---- parameters -----------------------------------------------------------

inline Tensor init_dense_weight(int rows, int cols, Rng& rng) {
  Tensor t({rows, cols});
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return t;
}

inline Tensor init_dense_bias(int rows, int fan_in, Rng& rng) {
  Tensor t({rows});
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : t.v) x = rng.uniform(-bound, bound);
  return t;
}

// Adds freshly initialized embedder tensors under `prefix` (w1/b1/w2/b2).
inline void init_embedder_params(ParamStore& params, const std::string& prefix,
                                 Rng& rng, const EmbedderArch& arch = {}) {
  const int feat = embedder_feature_dim(arch);
  params.add(prefix + "w1", init_dense_weight(arch.hidden, feat, rng));
  params.add(prefix + "b1", init_dense_bias(arch.hidden, feat, rng));
  params.add(prefix + "w2", init_dense_weight(kEmbeddingDim, arch.hidden, rng));
  params.add(prefix + "b2", init_dense_bias(kEmbeddingDim, arch.hidden, rng));
}

struct EmbedderNodes {
  NodeId w1, b1, w2, b2;
};

inline EmbedderNodes add_embedder_nodes(Graph& g, const ParamStore& params,
                                        const std::string& prefix,
                                        bool trainable) {
  auto lift = [&](const std::string& name) {
    const Tensor& t = params.at(prefix + name);
    return trainable ? g.parameter(t) : g.constant(t);
  };
  return EmbedderNodes{lift("w1"), lift("b1"), lift("w2"), lift("b2")};
}

// Reads gradients of the four embedder tensors back out of a graph.
inline void accumulate_embedder_grads(const Graph& g, const EmbedderNodes& n,
                                      const std::string& prefix,
                                      ParamStore& grads) {
  const NodeId ids[4] = {n.w1, n.b1, n.w2, n.b2};
  const char* names[4] = {"w1", "b1", "w2", "b2"};
  for (int i = 0; i < 4; ++i) {
    Tensor& acc = grads.at(prefix + names[i]);
    const Tensor& gt = g.grad(ids[i]);
    for (std::size_t k = 0; k < acc.numel(); ++k) acc.v[k] += gt.v[k];
  }
}

// Feature subgraph from a waveform node; used when gradients must reach the
// waveform itself (SE fine-tuning through the frozen proxy).
inline NodeId build_embedder_features(Graph& g, NodeId wave,
                                      const EmbedderArch& arch = {}) {
  const StftConfig cfg{arch.fft, arch.hop, arch.frame_len};
  const int frames = stft_num_frames(g.value(wave).numel(), cfg);
  if (frames <= 0) throw ShapeError("embedder input shorter than one frame");
  NodeId framed = g.frame_window(wave, cfg, /*pad=*/0, frames);
  NodeId spec = g.power(g.rfft_frames(framed));
  NodeId mel = g.rows_matmul(spec, mel_matrix(arch));
  NodeId logmel = g.log(g.add_scalar(mel, kMelLogEps));
  NodeId mean = g.mean_rows(logmel);
  NodeId centered = g.rows_sub_colvec(logmel, mean);
  NodeId var = g.mean_rows(g.square(centered));
  NodeId stdev = g.sqrt(g.add_scalar(var, kStdVarEps));
  return g.concat({mean, stdev});
}

inline NodeId build_embedder_head(Graph& g, NodeId features,
                                  const EmbedderNodes& n,
                                  const EmbedderArch& arch = {}) {
  NodeId h = g.leaky_relu(g.dense(features, n.w1, n.b1), arch.leaky_slope);
  return g.dense(h, n.w2, n.b2);
}

inline NodeId build_embedding_from_wave(Graph& g, NodeId wave,
                                        const EmbedderNodes& n,
                                        const EmbedderArch& arch = {}) {
  return build_embedder_head(g, build_embedder_features(g, wave, arch), n,
                             arch);
}

// Plain forward pass: waveform -> 256-d embedding.
inline Embedding embed(const Waveform& w, const ParamStore& params,
                       const std::string& prefix = "embedder.",
                       const EmbedderArch& arch = {}) {
  const std::vector<double> feats = logmel_stat_features(w, arch);
  const Tensor& w1 = params.at(prefix + "w1");
  const Tensor& b1 = params.at(prefix + "b1");
  const Tensor& w2 = params.at(prefix + "w2");
  const Tensor& b2 = params.at(prefix + "b2");
  std::vector<double> h(arch.hidden);
  for (int j = 0; j < arch.hidden; ++j) {
    double acc = b1.v[j];
    const double* row = &w1.v[static_cast<std::size_t>(j) * feats.size()];
    for (std::size_t k = 0; k < feats.size(); ++k) acc += row[k] * feats[k];
    h[j] = (acc >= 0.0) ? acc : arch.leaky_slope * acc;
  }
  std::vector<double> out(kEmbeddingDim);
  for (int j = 0; j < kEmbeddingDim; ++j) {
    double acc = b2.v[j];
    const double* row = &w2.v[static_cast<std::size_t>(j) * arch.hidden];
    for (int k = 0; k < arch.hidden; ++k) acc += row[k] * h[k];
    out[j] = acc;
  }
  return Embedding(std::move(out));
}

// ---- angular prototypical loss ---------------------------------------------

// Learnable scale and bias of the scaled-cosine similarity. The scale is
// clamped to stay positive after every optimizer step.
struct ApLossParams {
  double w = 10.0;
  double b = -5.0;
};

inline constexpr double kApScaleFloor = 1e-6;

inline void clamp_ap_scale(ApLossParams& p) {
  if (p.w < kApScaleFloor) p.w = kApScaleFloor;
}

// L = (1/N) sum_i [logsumexp_j(S_ij) - S_ii] - log N with
// S_ij = w cos(x_i, c_j) + b; the denominator includes j = i.
inline double ap_loss(const std::vector<Embedding>& queries,
                      const std::vector<Embedding>& centroids,
                      const ApLossParams& params) {
  const std::size_t n = queries.size();
  if (n == 0 || centroids.size() != n) {
    throw ShapeError("ap_loss needs matching nonempty query/centroid sets");
  }
  double total = 0.0;
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = params.w * cosine_similarity(queries[i], centroids[j]) + params.b;
    }
    const double m = *std::max_element(row.begin(), row.end());
    double acc = 0.0;
    for (double s : row) acc += std::exp(s - m);
    const double lse = std::log(acc) + m;
    total += lse - row[i];
  }
  return total / static_cast<double>(n) -
         std::log(static_cast<double>(n));
}

// Graph version over embedding nodes; `w` and `b` are scalar nodes.
inline NodeId ap_loss_node(Graph& g, const std::vector<NodeId>& queries,
                           const std::vector<NodeId>& centroids, NodeId w,
                           NodeId b) {
  const std::size_t n = queries.size();
  if (n == 0 || centroids.size() != n) {
    throw ShapeError("ap_loss needs matching nonempty query/centroid sets");
  }
  std::vector<NodeId> per_speaker;
  per_speaker.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<NodeId> sims(n);
    for (std::size_t j = 0; j < n; ++j) {
      sims[j] = g.add(g.mul(w, cosine_node(g, queries[i], centroids[j])), b);
    }
    double m = g.value(sims[0]).v[0];
    for (NodeId s : sims) m = std::max(m, g.value(s).v[0]);
    std::vector<NodeId> shifted(n);
    for (std::size_t j = 0; j < n; ++j) {
      shifted[j] = g.exp(g.add_scalar(sims[j], -m));
    }
    NodeId lse = g.add_scalar(g.log(g.sum(g.concat(shifted))), m);
    per_speaker.push_back(g.sub(lse, sims[i]));
  }
  NodeId total = g.mean(g.concat(per_speaker));
  return g.add_scalar(total, -std::log(static_cast<double>(n)));
}

// ---- batches ---------------------------------------------------------------

// N speakers x M utterances (M fixed at 2): the sampling unit for the AP
// objective and for agent training.
struct SpeakerBatch {
  std::vector<std::string> speaker_ids;
  std::vector<std::vector<Waveform>> utterances;  // [speaker][slot]
};

inline void validate(const SpeakerBatch& batch) {
  const std::size_t n = batch.speaker_ids.size();
  if (n == 0 || batch.utterances.size() != n) {
    throw ShapeError("speaker batch is empty or inconsistent");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (batch.utterances[i].size() != 2) {
      throw ConfigError("speaker batches require exactly M = 2 utterances");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (batch.speaker_ids[i] == batch.speaker_ids[j]) {
        throw ConfigError("speaker batch has duplicate speaker " +
                          batch.speaker_ids[i]);
      }
    }
  }
}

// Per speaker, picks which of the two utterances serves as the query; the
// other becomes the centroid. Returns the query slot (0 or 1) per speaker.
inline std::vector<int> build_ap_batch(const SpeakerBatch& batch, Rng& rng) {
  validate(batch);
  std::vector<int> query_slot(batch.speaker_ids.size());
  for (int& s : query_slot) s = rng.coin() ? 1 : 0;
  return query_slot;
}

// ---- proxy training ---------------------------------------------------------

struct SpeakerUtterances {
  std::string speaker_id;
  std::vector<Waveform> waves;
};

struct EmbedderTrainConfig {
  int steps = 300;
  int speakers_per_batch = 8;
  double learning_rate = 1e-3;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct EmbedderTrainResult {
  ParamStore params;  // embedder tensors plus trained ap.w / ap.b
  std::vector<double> step_losses;
};

// AP-loss training of a toy embedder on clean utterances. Features are
// extracted once per utterance; only the dense head trains.
inline EmbedderTrainResult train_embedder(
    const std::vector<SpeakerUtterances>& corpus,
    const EmbedderTrainConfig& cfg, const std::string& prefix = "embedder.") {
  if (corpus.size() < 2) {
    throw ConfigError("embedder training needs at least two speakers");
  }
  for (const auto& spk : corpus) {
    if (spk.waves.size() < 2) {
      throw ConfigError("speaker " + spk.speaker_id +
                        " has fewer than two utterances");
    }
  }
  if (cfg.steps < 0) throw ConfigError("negative step count");
  if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");

  const EmbedderArch arch;
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(1);
  Rng batch_rng = rng.fork(2);
  Rng role_rng = rng.fork(3);

  EmbedderTrainResult result;
  init_embedder_params(result.params, prefix, init_rng, arch);
  result.params.add("ap.w", Tensor::scalar(ApLossParams{}.w));
  result.params.add("ap.b", Tensor::scalar(ApLossParams{}.b));

  std::vector<std::vector<std::vector<double>>> features(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    features[s].reserve(corpus[s].waves.size());
    for (const Waveform& w : corpus[s].waves) {
      features[s].push_back(logmel_stat_features(w, arch));
    }
  }

  const int n_batch = std::min<int>(cfg.speakers_per_batch,
                                    static_cast<int>(corpus.size()));
  AdamOptimizer opt(cfg.adam);
  const char* tensor_names[4] = {"w1", "b1", "w2", "b2"};

  for (int step = 0; step < cfg.steps; ++step) {
    // Sample distinct speakers and two distinct utterances each.
    std::vector<int> speakers(corpus.size());
    for (std::size_t i = 0; i < speakers.size(); ++i) speakers[i] = static_cast<int>(i);
    for (int i = 0; i < n_batch; ++i) {
      const std::size_t j = i + batch_rng.below(speakers.size() - i);
      std::swap(speakers[i], speakers[j]);
    }
    Graph g;
    EmbedderNodes nodes = add_embedder_nodes(g, result.params, prefix, true);
    NodeId w_node = g.parameter(result.params.at("ap.w"));
    NodeId b_node = g.parameter(result.params.at("ap.b"));
    std::vector<NodeId> queries, centroids;
    for (int i = 0; i < n_batch; ++i) {
      const auto& feats = features[speakers[i]];
      const std::size_t a = batch_rng.below(feats.size());
      std::size_t b = batch_rng.below(feats.size() - 1);
      if (b >= a) ++b;
      const bool a_is_query = role_rng.coin();
      const std::size_t qi = a_is_query ? a : b;
      const std::size_t ci = a_is_query ? b : a;
      Tensor qf({static_cast<int>(feats[qi].size())}, feats[qi]);
      Tensor cf({static_cast<int>(feats[ci].size())}, feats[ci]);
      queries.push_back(build_embedder_head(g, g.constant(std::move(qf)), nodes, arch));
      centroids.push_back(build_embedder_head(g, g.constant(std::move(cf)), nodes, arch));
    }
    NodeId loss = ap_loss_node(g, queries, centroids, w_node, b_node);
    result.step_losses.push_back(g.value(loss).v[0]);
    g.backward(loss);

    const NodeId ids[4] = {nodes.w1, nodes.b1, nodes.w2, nodes.b2};
    for (int i = 0; i < 4; ++i) {
      opt.step(prefix + tensor_names[i], result.params.at(prefix + tensor_names[i]),
               g.grad(ids[i]), cfg.learning_rate);
    }
    opt.step("ap.w", result.params.at("ap.w"), g.grad(w_node), cfg.learning_rate);
    opt.step("ap.b", result.params.at("ap.b"), g.grad(b_node), cfg.learning_rate);
    Tensor& ap_w = result.params.at("ap.w");
    if (ap_w.v[0] < kApScaleFloor) ap_w.v[0] = kApScaleFloor;
  }
  return result;
}

}  // namespace lc4sv

#endif  // LC4SV_EMBEDDER_HPP_
