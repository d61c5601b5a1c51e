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

#ifndef LC4SV_AGENT_HPP_
#define LC4SV_AGENT_HPP_

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lc4sv/adam.hpp"
#include "lc4sv/checkpoint.hpp"
#include "lc4sv/embedder.hpp"
#include "lc4sv/enhancer.hpp"
#include "lc4sv/errors.hpp"
#include "lc4sv/graph.hpp"
#include "lc4sv/wada.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// The discrete action set: interpolation coefficients 0.0, 0.1, ..., 1.0.
inline constexpr int kNumActions = 11;

inline double action_alpha(int index) {
  if (index < 0 || index >= kNumActions) {
    throw DomainError("action index outside [0, 10]");
  }
  return static_cast<double>(index) / 10.0;
}

// Eleven per-action values, either environment rewards or predictions.
struct RewardVector {
  enum class Kind { kActual, kPredicted };

  std::vector<double> values;
  Kind kind = Kind::kPredicted;

  RewardVector() : values(kNumActions, 0.0) {}
  RewardVector(std::vector<double> v, Kind k) : values(std::move(v)), kind(k) {
    if (values.size() != kNumActions) {
      throw ShapeError("reward vector must have 11 entries");
    }
    for (double x : values) {
      if (!std::isfinite(x)) throw DomainError("reward vector is not finite");
    }
    if (kind == Kind::kActual) {
      for (double x : values) {
        if (std::fabs(x) > 4.0 + 1e-9) {
          throw InternalError("actual reward outside [-4, 4]");
        }
      }
    }
  }
};

// ---- parameters -------------------------------------------------------------

// AgentParams: a waveform embedder (same toy architecture as the proxy
// embedders), six learnable 256-d SNR embeddings, and the coefficient-reward
// predictor with one 128-node hidden layer.
struct AgentArch {
  EmbedderArch embedder;
  int predictor_hidden = 128;
  double leaky_slope = 0.01;
};

inline int agent_predictor_input_dim() { return 3 * kEmbeddingDim; }

// Fresh agent parameters. The waveform-embedder tensors are copied from
// `warm_start_embedder` when given (proxy-A weights), otherwise initialized
// randomly; everything trains jointly afterwards.
inline ParamStore init_agent_params(Rng& rng,
                                    const ParamStore* warm_start_embedder = nullptr,
                                    const std::string& warm_prefix = "embedder.",
                                    const AgentArch& arch = {}) {
  ParamStore params;
  if (warm_start_embedder != nullptr) {
    for (const char* nm : {"w1", "b1", "w2", "b2"}) {
      params.add(std::string("agent.emb.") + nm,
                 warm_start_embedder->at(warm_prefix + nm));
    }
    // keep the init stream aligned with the cold-start path
    Rng discard = rng.fork(11);
    (void)discard;
  } else {
    Rng emb_rng = rng.fork(11);
    init_embedder_params(params, "agent.emb.", emb_rng, arch.embedder);
  }
  Tensor snr({kNumSnrBins, kEmbeddingDim});
  const double bound = 1.0 / std::sqrt(static_cast<double>(kEmbeddingDim));
  for (double& x : snr.v) x = rng.uniform(-bound, bound);
  params.add("agent.snr_embeddings", std::move(snr));
  params.add("agent.pred.w1",
             init_dense_weight(arch.predictor_hidden, agent_predictor_input_dim(), rng));
  params.add("agent.pred.b1",
             init_dense_bias(arch.predictor_hidden, agent_predictor_input_dim(), rng));
  params.add("agent.pred.w2",
             init_dense_weight(kNumActions, arch.predictor_hidden, rng));
  params.add("agent.pred.b2",
             init_dense_bias(kNumActions, arch.predictor_hidden, rng));
  return params;
}

struct AgentNodes {
  EmbedderNodes emb;
  NodeId snr_embeddings;
  NodeId pred_w1, pred_b1, pred_w2, pred_b2;
};

inline AgentNodes add_agent_nodes(Graph& g, const ParamStore& params,
                                  bool trainable) {
  auto lift = [&](const std::string& name) {
    const Tensor& t = params.at(name);
    return trainable ? g.parameter(t) : g.constant(t);
  };
  AgentNodes n;
  n.emb = EmbedderNodes{lift("agent.emb.w1"), lift("agent.emb.b1"),
                        lift("agent.emb.w2"), lift("agent.emb.b2")};
  n.snr_embeddings = lift("agent.snr_embeddings");
  n.pred_w1 = lift("agent.pred.w1");
  n.pred_b1 = lift("agent.pred.b1");
  n.pred_w2 = lift("agent.pred.w2");
  n.pred_b2 = lift("agent.pred.b2");
  return n;
}

// Predictor subgraph over precomputed feature constants: embeds S and S-hat
// with the shared waveform embedder, concatenates the SNR embedding row, and
// maps through the two predictor layers to 11 outputs.
inline NodeId build_agent_prediction(Graph& g, NodeId noisy_features,
                                     NodeId enhanced_features, int snr_bin,
                                     const AgentNodes& n,
                                     const AgentArch& arch = {}) {
  if (snr_bin < 0 || snr_bin >= kNumSnrBins) {
    throw DomainError("SNR bin index outside [0, 5]");
  }
  NodeId e_noisy = build_embedder_head(g, noisy_features, n.emb, arch.embedder);
  NodeId e_enh = build_embedder_head(g, enhanced_features, n.emb, arch.embedder);
  NodeId snr_row = g.slice(n.snr_embeddings,
                           static_cast<std::size_t>(snr_bin) * kEmbeddingDim,
                           kEmbeddingDim);
  NodeId joint = g.concat({e_noisy, e_enh, snr_row});
  NodeId hidden = g.leaky_relu(g.dense(joint, n.pred_w1, n.pred_b1),
                               arch.leaky_slope);
  return g.dense(hidden, n.pred_w2, n.pred_b2);
}

inline NodeId features_constant(Graph& g, const std::vector<double>& feats) {
  return g.constant(Tensor({static_cast<int>(feats.size())}, feats));
}

// Plain forward pass: predicted rewards for all 11 actions.
inline RewardVector agent_forward(const Waveform& noisy,
                                  const Waveform& enhanced, const SnrBin& bin,
                                  const ParamStore& params,
                                  const AgentArch& arch = {}) {
  require_combinable(noisy, enhanced, "agent inputs");
  Graph g;
  AgentNodes nodes = add_agent_nodes(g, params, false);
  NodeId fn = features_constant(g, logmel_stat_features(noisy, arch.embedder));
  NodeId fe = features_constant(g, logmel_stat_features(enhanced, arch.embedder));
  NodeId pred = build_agent_prediction(g, fn, fe, bin.index, nodes, arch);
  return RewardVector(g.value(pred).v, RewardVector::Kind::kPredicted);
}

// ---- reward -----------------------------------------------------------------

// Embeddings (under the frozen environment embedder) needed to evaluate the
// reward of one anchor at one coefficient.
struct RewardContext {
  Embedding anchor_enhanced;
  Embedding positive_enhanced;
  Embedding anchor_interp;
  Embedding positive_interp;
  std::vector<Embedding> negatives_enhanced;
  std::vector<Embedding> negatives_interp;
};

// R = cos(x~, x~+) - cos(x^, x^+) + mean_neg[cos(x^, x^-) - cos(x~, x~-)].
inline double compute_reward(const RewardContext& ctx) {
  if (ctx.negatives_enhanced.empty() ||
      ctx.negatives_enhanced.size() != ctx.negatives_interp.size()) {
    throw ConfigError("reward needs at least one negative sample");
  }
  double reward = cosine_similarity(ctx.anchor_interp, ctx.positive_interp) -
                  cosine_similarity(ctx.anchor_enhanced, ctx.positive_enhanced);
  double neg = 0.0;
  for (std::size_t k = 0; k < ctx.negatives_enhanced.size(); ++k) {
    neg += cosine_similarity(ctx.anchor_enhanced, ctx.negatives_enhanced[k]) -
           cosine_similarity(ctx.anchor_interp, ctx.negatives_interp[k]);
  }
  reward += neg / static_cast<double>(ctx.negatives_enhanced.size());
  return reward;
}

// Waveform-level variant: interpolates every signal at `alpha` and embeds
// with the environment embedder.
struct SignalPair {
  Waveform noisy;
  Waveform enhanced;
};

inline double compute_reward_for_alpha(const SignalPair& anchor,
                                       const SignalPair& positive,
                                       const std::vector<SignalPair>& negatives,
                                       double alpha,
                                       const ParamStore& env_embedder,
                                       const std::string& env_prefix = "embedder.") {
  RewardContext ctx;
  ctx.anchor_enhanced = embed(anchor.enhanced, env_embedder, env_prefix);
  ctx.positive_enhanced = embed(positive.enhanced, env_embedder, env_prefix);
  ctx.anchor_interp =
      embed(interpolate(anchor.noisy, anchor.enhanced, alpha), env_embedder, env_prefix);
  ctx.positive_interp =
      embed(interpolate(positive.noisy, positive.enhanced, alpha), env_embedder,
            env_prefix);
  for (const SignalPair& neg : negatives) {
    ctx.negatives_enhanced.push_back(embed(neg.enhanced, env_embedder, env_prefix));
    ctx.negatives_interp.push_back(
        embed(interpolate(neg.noisy, neg.enhanced, alpha), env_embedder, env_prefix));
  }
  return compute_reward(ctx);
}

// ---- smooth-L1 objective ------------------------------------------------------

// Per-element smooth L1 on e = actual - predicted, averaged over actions.
inline double dqn_loss(const std::vector<double>& predicted,
                       const std::vector<double>& actual) {
  if (predicted.size() != actual.size()) {
    throw ShapeError("dqn_loss length mismatch");
  }
  if (predicted.empty()) throw ShapeError("dqn_loss of empty vectors");
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = actual[i] - predicted[i];
    acc += (std::fabs(e) < 1.0) ? 0.5 * e * e : std::fabs(e) - 0.5;
  }
  return acc / static_cast<double>(predicted.size());
}

inline double dqn_loss(const RewardVector& predicted, const RewardVector& actual) {
  return dqn_loss(predicted.values, actual.values);
}

// ---- inference ----------------------------------------------------------------

// Argmax over predicted rewards; ties resolve toward the smallest alpha.
inline int argmax_action(const RewardVector& predicted) {
  int best = 0;
  for (int i = 1; i < kNumActions; ++i) {
    if (predicted.values[i] > predicted.values[best]) best = i;
  }
  return best;
}

inline double select_alpha(const Waveform& noisy, const Waveform& enhanced,
                           const ParamStore& agent_params,
                           const AgentArch& arch = {}) {
  const SnrBin bin = snr_to_bin(estimate_snr_wada(noisy));
  const RewardVector pred = agent_forward(noisy, enhanced, bin, agent_params, arch);
  return action_alpha(argmax_action(pred));
}

struct Lc4svOutput {
  Waveform wave;
  double alpha = 0.0;
};

// Full pipeline: enhance, pick alpha, blend.
inline Lc4svOutput lc4sv_process(const Waveform& noisy,
                                 const ParamStore& enhancer_params,
                                 const ParamStore& agent_params) {
  Lc4svOutput out;
  const Waveform enhanced = enhance(noisy, enhancer_params);
  out.alpha = select_alpha(noisy, enhanced, agent_params);
  out.wave = interpolate(noisy, enhanced, out.alpha);
  return out;
}

// ---- training -----------------------------------------------------------------

struct AgentTrainConfig {
  int steps = 500;
  int speakers_per_batch = 8;
  double learning_rate = 1e-4;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

struct AgentTrainResult {
  ParamStore params;
  std::vector<double> step_losses;
};

namespace agent_detail {

// Everything train_agent needs per utterance, computed once up front against
// the frozen enhancer and environment embedder.
struct UttCache {
  std::vector<double> noisy_features;     // agent input
  std::vector<double> enhanced_features;  // agent input
  int snr_bin = 0;
  Embedding env_enhanced;
  std::array<Embedding, kNumActions> env_interp;
};

struct Catalog {
  std::vector<std::vector<UttCache>> per_speaker;  // [speaker][utt]
};

inline Catalog build_catalog(const std::vector<SpeakerUtterances>& corpus,
                             const ParamStore& enhancer_params,
                             const ParamStore& env_embedder,
                             const std::string& env_prefix,
                             const EmbedderArch& arch) {
  Catalog cat;
  cat.per_speaker.resize(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (const Waveform& noisy : corpus[s].waves) {
      UttCache u;
      const Waveform enhanced = enhance(noisy, enhancer_params);
      u.noisy_features = logmel_stat_features(noisy, arch);
      u.enhanced_features = logmel_stat_features(enhanced, arch);
      u.snr_bin = snr_to_bin(estimate_snr_wada(noisy)).index;
      u.env_enhanced = embed(enhanced, env_embedder, env_prefix);
      for (int a = 0; a < kNumActions; ++a) {
        u.env_interp[a] =
            embed(interpolate(noisy, enhanced, action_alpha(a)), env_embedder,
                  env_prefix);
      }
      cat.per_speaker[s].push_back(std::move(u));
    }
  }
  return cat;
}

// Actual rewards for one anchor against its positive partner and the other
// speakers' signals in the batch.
inline RewardVector batch_rewards(
    const Catalog& cat, const std::vector<std::pair<int, int>>& members,
    std::size_t anchor_pos, std::size_t positive_pos) {
  const UttCache& anchor =
      cat.per_speaker[members[anchor_pos].first][members[anchor_pos].second];
  const UttCache& positive =
      cat.per_speaker[members[positive_pos].first][members[positive_pos].second];
  std::vector<double> rewards(kNumActions, 0.0);
  int num_neg = 0;
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (members[m].first == members[anchor_pos].first) continue;
    ++num_neg;
  }
  if (num_neg == 0) throw ConfigError("agent batch has no negative speakers");
  for (int a = 0; a < kNumActions; ++a) {
    double r = cosine_similarity(anchor.env_interp[a], positive.env_interp[a]) -
               cosine_similarity(anchor.env_enhanced, positive.env_enhanced);
    double neg = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (members[m].first == members[anchor_pos].first) continue;
      const UttCache& other = cat.per_speaker[members[m].first][members[m].second];
      neg += cosine_similarity(anchor.env_enhanced, other.env_enhanced) -
             cosine_similarity(anchor.env_interp[a], other.env_interp[a]);
    }
    r += neg / num_neg;
    rewards[a] = r;
  }
  return RewardVector(std::move(rewards), RewardVector::Kind::kActual);
}

}  // namespace agent_detail

// Trains the interpolation agent: per anchor the environment reward of all
// 11 actions is computed in full (single-step setting, every action's reward
// observable offline) and the predictor regresses it under smooth L1. The
// enhancer and environment embedder stay frozen.
inline AgentTrainResult train_agent(const ParamStore& enhancer_params,
                                    const ParamStore& env_embedder,
                                    const std::vector<SpeakerUtterances>& corpus,
                                    const AgentTrainConfig& cfg,
                                    const ParamStore* warm_start_embedder = nullptr,
                                    const std::string& env_prefix = "embedder.") {
  if (corpus.size() < 2) {
    throw ConfigError("agent training needs at least two speakers");
  }
  for (const auto& spk : corpus) {
    if (spk.waves.size() < 2) {
      throw ConfigError("speaker " + spk.speaker_id +
                        " has fewer than two utterances");
    }
  }
  if (cfg.steps < 0) throw ConfigError("negative step count");

  const std::string enhancer_before = serialize_checkpoint(enhancer_params);
  const std::string env_before = serialize_checkpoint(env_embedder);

  const AgentArch arch;
  Rng rng(cfg.seed);
  Rng init_rng = rng.fork(1);
  Rng batch_rng = rng.fork(2);

  AgentTrainResult result;
  result.params = init_agent_params(init_rng, warm_start_embedder, "embedder.", arch);

  const agent_detail::Catalog cat = agent_detail::build_catalog(
      corpus, enhancer_params, env_embedder, env_prefix, arch.embedder);

  const int n_batch =
      std::min<int>(cfg.speakers_per_batch, static_cast<int>(corpus.size()));
  AdamOptimizer opt(cfg.adam);
  const char* tensor_names[] = {"agent.emb.w1", "agent.emb.b1", "agent.emb.w2",
                                "agent.emb.b2", "agent.snr_embeddings",
                                "agent.pred.w1", "agent.pred.b1",
                                "agent.pred.w2", "agent.pred.b2"};

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<int> speakers(corpus.size());
    for (std::size_t i = 0; i < speakers.size(); ++i) speakers[i] = static_cast<int>(i);
    for (int i = 0; i < n_batch; ++i) {
      const std::size_t j = i + batch_rng.below(speakers.size() - i);
      std::swap(speakers[i], speakers[j]);
    }
    // members: (speaker index, utterance index), two utterances per speaker
    std::vector<std::pair<int, int>> members;
    for (int i = 0; i < n_batch; ++i) {
      const auto& utts = cat.per_speaker[speakers[i]];
      const std::size_t a = batch_rng.below(utts.size());
      std::size_t b = batch_rng.below(utts.size() - 1);
      if (b >= a) ++b;
      members.emplace_back(speakers[i], static_cast<int>(a));
      members.emplace_back(speakers[i], static_cast<int>(b));
    }

    Graph g;
    AgentNodes nodes = add_agent_nodes(g, result.params, true);
    std::vector<NodeId> anchor_losses;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t partner = (m % 2 == 0) ? m + 1 : m - 1;
      const agent_detail::UttCache& u =
          cat.per_speaker[members[m].first][members[m].second];
      const RewardVector rewards =
          agent_detail::batch_rewards(cat, members, m, partner);
      NodeId pred = build_agent_prediction(
          g, features_constant(g, u.noisy_features),
          features_constant(g, u.enhanced_features), u.snr_bin, nodes, arch);
      NodeId target = g.constant(Tensor({kNumActions}, rewards.values));
      anchor_losses.push_back(g.smooth_l1_mean(pred, target));
    }
    NodeId loss = g.mean(g.concat(anchor_losses));
    result.step_losses.push_back(g.value(loss).v[0]);
    g.backward(loss);

    const NodeId ids[] = {nodes.emb.w1, nodes.emb.b1, nodes.emb.w2,
                          nodes.emb.b2, nodes.snr_embeddings,
                          nodes.pred_w1, nodes.pred_b1,
                          nodes.pred_w2, nodes.pred_b2};
    for (int i = 0; i < 9; ++i) {
      opt.step(tensor_names[i], result.params.at(tensor_names[i]), g.grad(ids[i]),
               cfg.learning_rate);
    }
  }

  if (serialize_checkpoint(enhancer_params) != enhancer_before ||
      serialize_checkpoint(env_embedder) != env_before) {
    throw InternalError("frozen model mutated during agent training");
  }
  return result;
}

// Mean dqn_loss of an agent over deterministic batches drawn from `corpus`;
// used for held-out monitoring.
inline double evaluate_agent_dqn(const ParamStore& agent_params,
                                 const ParamStore& enhancer_params,
                                 const ParamStore& env_embedder,
                                 const std::vector<SpeakerUtterances>& corpus,
                                 int speakers_per_batch, int num_batches,
                                 std::uint64_t seed,
                                 const std::string& env_prefix = "embedder.") {
  if (corpus.size() < 2) {
    throw ConfigError("agent evaluation needs at least two speakers");
  }
  const AgentArch arch;
  const agent_detail::Catalog cat = agent_detail::build_catalog(
      corpus, enhancer_params, env_embedder, env_prefix, arch.embedder);
  Rng batch_rng(seed);
  const int n_batch =
      std::min<int>(speakers_per_batch, static_cast<int>(corpus.size()));
  double total = 0.0;
  int count = 0;
  for (int bi = 0; bi < num_batches; ++bi) {
    std::vector<int> speakers(corpus.size());
    for (std::size_t i = 0; i < speakers.size(); ++i) speakers[i] = static_cast<int>(i);
    for (int i = 0; i < n_batch; ++i) {
      const std::size_t j = i + batch_rng.below(speakers.size() - i);
      std::swap(speakers[i], speakers[j]);
    }
    std::vector<std::pair<int, int>> members;
    for (int i = 0; i < n_batch; ++i) {
      const auto& utts = cat.per_speaker[speakers[i]];
      const std::size_t a = batch_rng.below(utts.size());
      std::size_t b = batch_rng.below(utts.size() - 1);
      if (b >= a) ++b;
      members.emplace_back(speakers[i], static_cast<int>(a));
      members.emplace_back(speakers[i], static_cast<int>(b));
    }
    Graph g;
    AgentNodes nodes = add_agent_nodes(g, agent_params, false);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const std::size_t partner = (m % 2 == 0) ? m + 1 : m - 1;
      const agent_detail::UttCache& u =
          cat.per_speaker[members[m].first][members[m].second];
      const RewardVector rewards =
          agent_detail::batch_rewards(cat, members, m, partner);
      NodeId pred = build_agent_prediction(
          g, features_constant(g, u.noisy_features),
          features_constant(g, u.enhanced_features), u.snr_bin, nodes, arch);
      total += dqn_loss(g.value(pred).v, rewards.values);
      ++count;
    }
  }
  return total / count;
}

}  // namespace lc4sv

#endif  // LC4SV_AGENT_HPP_
