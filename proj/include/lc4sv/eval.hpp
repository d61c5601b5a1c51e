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

#ifndef LC4SV_EVAL_HPP_
#define LC4SV_EVAL_HPP_

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lc4sv/agent.hpp"
#include "lc4sv/embedder.hpp"
#include "lc4sv/enhancer.hpp"
#include "lc4sv/errors.hpp"
#include "lc4sv/manifest.hpp"
#include "lc4sv/rng.hpp"
#include "lc4sv/wada.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// One verification trial: an enrollment/test utterance pair with its ground
// truth (target = same speaker).
struct TrialPair {
  std::string enroll_id;
  std::string test_id;
  bool target = false;
};

struct ScoredTrial {
  TrialPair trial;
  double score = 0.0;
};

struct DcfConfig {
  double p_target = 0.05;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

inline void validate(const DcfConfig& cfg) {
  if (!(cfg.p_target > 0.0 && cfg.p_target < 1.0)) {
    throw DomainError("p_target must lie in (0, 1)");
  }
  if (cfg.c_miss <= 0.0 || cfg.c_fa <= 0.0) {
    throw DomainError("detection costs must be positive");
  }
}

// ---- trial construction -----------------------------------------------------

// All same-speaker pairs become targets; an equal number of cross-speaker
// pairs is sampled without duplicates. Deterministic for a fixed seed.
inline std::vector<TrialPair> build_trial_list(const Manifest& manifest,
                                               std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_speaker;
  for (const auto& e : manifest) {
    by_speaker[e.speaker_id].push_back(e.utterance_id);
  }
  if (by_speaker.size() < 2) {
    throw ConfigError("trial list needs at least two speakers");
  }
  for (auto& [spk, utts] : by_speaker) {
    if (utts.size() < 2) {
      throw ConfigError("speaker " + spk + " has fewer than two utterances");
    }
    std::sort(utts.begin(), utts.end());
  }

  std::vector<std::pair<std::string, std::string>> utt_speaker;  // sorted ids
  for (const auto& [spk, utts] : by_speaker) {
    for (const auto& u : utts) utt_speaker.emplace_back(u, spk);
  }
  std::sort(utt_speaker.begin(), utt_speaker.end());

  std::vector<TrialPair> targets;
  std::vector<TrialPair> nontargets_all;
  for (std::size_t i = 0; i < utt_speaker.size(); ++i) {
    for (std::size_t j = i + 1; j < utt_speaker.size(); ++j) {
      TrialPair t;
      t.enroll_id = utt_speaker[i].first;
      t.test_id = utt_speaker[j].first;
      t.target = utt_speaker[i].second == utt_speaker[j].second;
      (t.target ? targets : nontargets_all).push_back(std::move(t));
    }
  }

  Rng rng(seed);
  for (std::size_t i = 0; i + 1 < nontargets_all.size(); ++i) {
    const std::size_t j = i + rng.below(nontargets_all.size() - i);
    std::swap(nontargets_all[i], nontargets_all[j]);
  }
  const std::size_t n = std::min(targets.size(), nontargets_all.size());
  std::vector<TrialPair> trials(targets.begin(), targets.begin() + n);
  trials.insert(trials.end(), nontargets_all.begin(), nontargets_all.begin() + n);
  return trials;
}

inline void write_trial_list(const std::vector<TrialPair>& trials,
                             const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open trial list " + path + " for writing");
  for (const auto& t : trials) {
    out << (t.target ? 1 : 0) << ' ' << t.enroll_id << ' ' << t.test_id << '\n';
  }
  if (!out) throw IoError("write failure on trial list " + path);
}

inline std::vector<TrialPair> read_trial_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trial list " + path);
  std::vector<TrialPair> trials;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int label = -1;
    TrialPair t;
    if (!(ss >> label >> t.enroll_id >> t.test_id) || (label != 0 && label != 1)) {
      throw FormatError("bad trial line in " + path + ": " + line);
    }
    t.target = label == 1;
    trials.push_back(std::move(t));
  }
  return trials;
}

// ---- metrics ----------------------------------------------------------------

namespace eval_detail {

struct RatePoint {
  double far = 0.0;
  double frr = 0.0;
};

// Operating points for "accept if score >= t", t sweeping the distinct
// scores plus both infinities, ordered by increasing threshold.
inline std::vector<RatePoint> roc_points(const std::vector<ScoredTrial>& scores) {
  std::vector<double> tgt, non;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw DomainError("trial score is not finite");
    (s.trial.target ? tgt : non).push_back(s.score);
  }
  if (tgt.empty() || non.empty()) {
    throw ConfigError("metrics need both target and nontarget trials");
  }
  std::vector<double> thresholds;
  thresholds.reserve(tgt.size() + non.size());
  thresholds.insert(thresholds.end(), tgt.begin(), tgt.end());
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());

  std::vector<RatePoint> points;
  points.push_back({1.0, 0.0});  // t = -inf: accept everything
  for (double t : thresholds) {
    RatePoint p;
    const auto non_ge = non.end() - std::lower_bound(non.begin(), non.end(), t);
    const auto tgt_lt = std::lower_bound(tgt.begin(), tgt.end(), t) - tgt.begin();
    p.far = static_cast<double>(non_ge) / non.size();
    p.frr = static_cast<double>(tgt_lt) / tgt.size();
    points.push_back(p);
  }
  points.push_back({0.0, 1.0});  // t = +inf: reject everything
  return points;
}

}  // namespace eval_detail

// Equal error rate with linear interpolation on the (FAR, FRR) polyline.
inline double compute_eer(const std::vector<ScoredTrial>& scores) {
  const auto points = eval_detail::roc_points(scores);
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double d1 = points[i].far - points[i].frr;
    const double d2 = points[i + 1].far - points[i + 1].frr;
    if (d1 >= 0.0 && d2 <= 0.0) {
      if (d1 == d2) return points[i].far;
      const double lam = d1 / (d1 - d2);
      return points[i].far + lam * (points[i + 1].far - points[i].far);
    }
  }
  throw InternalError("EER crossing not found");
}

// Minimum normalized detection cost over the threshold candidates.
inline double compute_min_dcf(const std::vector<ScoredTrial>& scores,
                              const DcfConfig& cfg) {
  validate(cfg);
  const auto points = eval_detail::roc_points(scores);
  const double norm = std::min(cfg.c_miss * cfg.p_target,
                               cfg.c_fa * (1.0 - cfg.p_target));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    const double cost = cfg.c_miss * cfg.p_target * p.frr +
                        cfg.c_fa * (1.0 - cfg.p_target) * p.far;
    best = std::min(best, cost);
  }
  return best / norm;
}

// ---- conditions ----------------------------------------------------------------

enum class Condition { kNoisy, kSePtn, kSeSv, kSeSvSnr, kConstAlpha, kLc4sv };

struct ConditionSpec {
  Condition kind = Condition::kNoisy;
  double alpha = 0.0;  // only for kConstAlpha
};

inline std::string condition_label(const ConditionSpec& spec) {
  switch (spec.kind) {
    case Condition::kNoisy: return "NOISY";
    case Condition::kSePtn: return "SE-PTN";
    case Condition::kSeSv: return "SE-SV";
    case Condition::kSeSvSnr: return "SE-SV-SNR";
    case Condition::kLc4sv: return "LC4SV";
    case Condition::kConstAlpha: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "CONST_ALPHA(%.1f)", spec.alpha);
      return buf;
    }
  }
  throw InternalError("unknown condition");
}

struct EvalModels {
  const ParamStore* se_ptn = nullptr;
  const ParamStore* se_sv = nullptr;
  const ParamStore* agent = nullptr;
  const ParamStore* eval_embedder = nullptr;
  std::string embedder_prefix = "embedder.";
  double snr_threshold_db = 4.0;  // SE-SV-SNR routing threshold
};

// Runs `fn(i)` for i in [0, n) over `threads` workers. Work items must be
// independent; results land in caller-owned slots, so the schedule cannot
// change any output.
inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int used = std::min<std::size_t>(threads, n);
  for (int w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += used) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Per-utterance processing shared by every condition: enhanced versions,
// embeddings of the noisy/enhanced/interpolated signals under the evaluation
// embedder, the WADA estimate, and the agent's chosen action.
class EvalCache {
 public:
  EvalCache(const std::vector<std::pair<std::string, Waveform>>& noisy_utts,
            const EvalModels& models, int threads) {
    if (models.se_ptn == nullptr || models.se_sv == nullptr ||
        models.agent == nullptr || models.eval_embedder == nullptr) {
      throw ConfigError("evaluation requires se_ptn, se_sv, agent and embedder models");
    }
    ids_.reserve(noisy_utts.size());
    for (const auto& [id, w] : noisy_utts) {
      if (index_.count(id) != 0) throw ConfigError("duplicate utterance id " + id);
      index_[id] = ids_.size();
      ids_.push_back(id);
    }
    entries_.resize(noisy_utts.size());
    parallel_for(noisy_utts.size(), threads, [&](std::size_t i) {
      Entry& e = entries_[i];
      const Waveform& noisy = noisy_utts[i].second;
      e.noisy = noisy;
      e.enhanced_sv = enhance(noisy, *models.se_sv);
      const Waveform enhanced_ptn = enhance(noisy, *models.se_ptn);
      e.emb_noisy = embed(noisy, *models.eval_embedder, models.embedder_prefix);
      e.emb_se_ptn =
          embed(enhanced_ptn, *models.eval_embedder, models.embedder_prefix);
      e.emb_se_sv =
          embed(e.enhanced_sv, *models.eval_embedder, models.embedder_prefix);
      for (int a = 0; a < kNumActions; ++a) {
        e.emb_interp[a] =
            embed(interpolate(noisy, e.enhanced_sv, action_alpha(a)),
                  *models.eval_embedder, models.embedder_prefix);
      }
      e.wada_db = estimate_snr_wada(noisy);
      const SnrBin bin = snr_to_bin(e.wada_db);
      e.lc4sv_action = argmax_action(
          agent_forward(noisy, e.enhanced_sv, bin, *models.agent));
    });
    snr_threshold_db_ = models.snr_threshold_db;
    eval_embedder_ = models.eval_embedder;
    embedder_prefix_ = models.embedder_prefix;
  }

  // Embedding and effective alpha of one utterance under a condition.
  std::pair<const Embedding*, double> lookup(const ConditionSpec& spec,
                                             const std::string& utt_id) const {
    const Entry& e = entry(utt_id);
    switch (spec.kind) {
      case Condition::kNoisy:
        return {&e.emb_noisy, 0.0};
      case Condition::kSePtn:
        return {&e.emb_se_ptn, 1.0};
      case Condition::kSeSv:
        return {&e.emb_se_sv, 1.0};
      case Condition::kSeSvSnr:
        return (e.wada_db >= snr_threshold_db_)
                   ? std::make_pair(&e.emb_noisy, 0.0)
                   : std::make_pair(&e.emb_se_sv, 1.0);
      case Condition::kLc4sv:
        return {&e.emb_interp[e.lc4sv_action], action_alpha(e.lc4sv_action)};
      case Condition::kConstAlpha: {
        for (int a = 0; a < kNumActions; ++a) {
          if (spec.alpha == action_alpha(a)) return {&e.emb_interp[a], spec.alpha};
        }
        throw ConfigError("constant alpha must lie on the 0.1 grid");
      }
    }
    throw InternalError("unknown condition");
  }

  double lc4sv_alpha(const std::string& utt_id) const {
    return action_alpha(entry(utt_id).lc4sv_action);
  }

  const std::vector<std::string>& ids() const { return ids_; }

 private:
  struct Entry {
    Waveform noisy;
    Waveform enhanced_sv;
    Embedding emb_noisy, emb_se_ptn, emb_se_sv;
    std::array<Embedding, kNumActions> emb_interp;
    double wada_db = 0.0;
    int lc4sv_action = 0;
  };

  const Entry& entry(const std::string& utt_id) const {
    auto it = index_.find(utt_id);
    if (it == index_.end()) {
      throw ConfigError("trial references unknown utterance " + utt_id);
    }
    return entries_[it->second];
  }

  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<Entry> entries_;
  double snr_threshold_db_ = 4.0;
  const ParamStore* eval_embedder_ = nullptr;
  std::string embedder_prefix_;
};

struct ConditionResult {
  std::string label;
  double eer = 0.0;
  double min_dcf = 0.0;
  std::vector<ScoredTrial> scores;
  std::vector<double> alpha_used;  // per trial, test-side alpha
};

// Scores every trial under one condition and reduces to EER / MinDCF.
inline ConditionResult run_condition(const ConditionSpec& spec,
                                     const std::vector<TrialPair>& trials,
                                     const EvalCache& cache,
                                     const DcfConfig& dcf) {
  if (trials.empty()) throw ConfigError("no trials to score");
  ConditionResult result;
  result.label = condition_label(spec);
  result.scores.reserve(trials.size());
  result.alpha_used.reserve(trials.size());
  for (const TrialPair& t : trials) {
    const auto [enroll_emb, enroll_alpha] = cache.lookup(spec, t.enroll_id);
    const auto [test_emb, test_alpha] = cache.lookup(spec, t.test_id);
    ScoredTrial s;
    s.trial = t;
    s.score = cosine_similarity(*enroll_emb, *test_emb);
    result.scores.push_back(std::move(s));
    result.alpha_used.push_back(test_alpha);
  }
  result.eer = compute_eer(result.scores);
  result.min_dcf = compute_min_dcf(result.scores, dcf);
  return result;
}

// Report rows: `condition, eer_percent, min_dcf, num_trials`, tab-separated.
inline std::string format_report(const std::vector<ConditionResult>& rows) {
  std::string out = "condition\teer_percent\tmin_dcf\tnum_trials\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%zu\n", r.label.c_str(),
                  100.0 * r.eer, r.min_dcf, r.scores.size());
    out += buf;
  }
  return out;
}

inline std::string format_score_dump(const ConditionResult& r) {
  std::string out = "trial_id\tscore\talpha_used\n";
  char buf[256];
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    const auto& s = r.scores[i];
    std::snprintf(buf, sizeof(buf), "%s:%s\t%.9f\t%.1f\n",
                  s.trial.enroll_id.c_str(), s.trial.test_id.c_str(), s.score,
                  r.alpha_used[i]);
    out += buf;
  }
  return out;
}

}  // namespace lc4sv

#endif  // LC4SV_EVAL_HPP_
