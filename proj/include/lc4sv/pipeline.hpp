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

#ifndef LC4SV_PIPELINE_HPP_
#define LC4SV_PIPELINE_HPP_

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lc4sv/agent.hpp"
#include "lc4sv/config.hpp"
#include "lc4sv/corpus.hpp"
#include "lc4sv/embedder.hpp"
#include "lc4sv/enhancer.hpp"
#include "lc4sv/errors.hpp"
#include "lc4sv/eval.hpp"
#include "lc4sv/manifest.hpp"
#include "lc4sv/wav_io.hpp"

namespace lc4sv {

enum class Stage { kMix, kPretrainSe, kFinetuneSe, kTrainAgent, kEval, kProcess };

inline Stage parse_stage(const std::string& name) {
  if (name == "mix") return Stage::kMix;
  if (name == "pretrain-se") return Stage::kPretrainSe;
  if (name == "finetune-se") return Stage::kFinetuneSe;
  if (name == "train-agent") return Stage::kTrainAgent;
  if (name == "eval") return Stage::kEval;
  if (name == "process") return Stage::kProcess;
  throw ConfigError("unknown stage '" + name + "'");
}

// Content-addressed artifact locations: every filename carries the config
// hash so artifacts from different configurations can never mix silently.
struct ArtifactPaths {
  std::string work_dir;
  std::string hash;

  std::string dir(const std::string& name) const {
    return (std::filesystem::path(work_dir) / (name + "." + hash.substr(0, 12)))
        .string();
  }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(work_dir) / (name + "." + hash.substr(0, 12)))
        .string();
  }

  std::string mix_dir() const { return dir("mix"); }
  std::string clean_manifest() const { return mix_dir() + "/clean_manifest.tsv"; }
  std::string noise_manifest() const { return mix_dir() + "/noise_manifest.tsv"; }
  std::string noisy_manifest() const { return mix_dir() + "/noisy_manifest.tsv"; }
  std::string pairs_table() const { return mix_dir() + "/pairs.tsv"; }
  std::string se_ptn_ckpt() const { return file("se_ptn") + ".ckpt"; }
  std::string se_sv_ckpt() const { return file("se_sv") + ".ckpt"; }
  std::string agent_ckpt() const { return file("agent") + ".ckpt"; }
  std::string proxy_ckpt(char which) const {
    return file(std::string("proxy_") + which) + ".ckpt";
  }
  std::string loss_log(const std::string& stage) const {
    return file(stage) + ".loss.tsv";
  }
  std::string run_log(const std::string& stage) const {
    return file(stage) + ".log";
  }
  std::string trial_list() const { return file("trials") + ".txt"; }
  std::string report() const { return file("report") + ".tsv"; }
  std::string alpha_log() const { return file("alphas") + ".tsv"; }
  std::string scores_dir() const { return dir("scores"); }
};

inline ArtifactPaths artifact_paths(const ExperimentConfig& cfg) {
  return ArtifactPaths{cfg.work_dir, config_hash(cfg)};
}

// Atomic file write: temp file in the target directory, then rename.
inline void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failure on " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline void save_checkpoint_atomic(const ParamStore& params,
                                   const std::string& path) {
  write_file_atomic(path, serialize_checkpoint(params));
}

inline void require_artifact(const std::string& path, const std::string& hint) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("missing prerequisite artifact " + path + " (run " +
                      hint + " first)");
  }
}

inline int eval_threads() {
  const char* env = std::getenv("LC4SV_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return (n >= 1) ? n : 1;
}

// ---- data loading helpers ------------------------------------------------------

// Loads manifest waveforms grouped by speaker, utterances sorted by id.
inline std::vector<SpeakerUtterances> load_speaker_waves(const Manifest& manifest) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> by_speaker;
  for (const auto& e : manifest) {
    by_speaker[e.speaker_id].emplace_back(e.utterance_id, e.path);
  }
  std::vector<SpeakerUtterances> out;
  for (auto& [spk, utts] : by_speaker) {
    std::sort(utts.begin(), utts.end());
    SpeakerUtterances s;
    s.speaker_id = spk;
    for (const auto& [id, path] : utts) s.waves.push_back(read_wav(path));
    out.push_back(std::move(s));
  }
  return out;
}

// Train/eval split: the last `eval_utts` utterances of every speaker are
// held out. Assumes per-speaker utterance ids sort chronologically, which
// the synthesizer guarantees.
inline void split_manifest(const Manifest& all, int eval_utts, Manifest* train,
                           Manifest* eval) {
  std::map<std::string, Manifest> by_speaker;
  for (const auto& e : all) by_speaker[e.speaker_id].push_back(e);
  for (auto& [spk, entries] : by_speaker) {
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                return a.utterance_id < b.utterance_id;
              });
    if (static_cast<int>(entries.size()) <= eval_utts) {
      throw ConfigError("speaker " + spk + " has no training utterances left");
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const bool is_eval =
          i + static_cast<std::size_t>(eval_utts) >= entries.size();
      (is_eval ? *eval : *train).push_back(entries[i]);
    }
  }
}

inline AdamConfig adam_config(const ExperimentConfig& cfg) {
  return AdamConfig{cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon};
}

// ---- proxy embedders ------------------------------------------------------------

// Proxy embedders stand in for the paper's baseline SV checkpoints: same
// recipe, three different seeds (A: SE fine-tuning, B: agent environment,
// C: unseen evaluation). Trained on the clean training split, cached as
// checkpoints keyed by the config hash, and always round-tripped through the
// float32 checkpoint before use so reruns and cache hits are byte-identical.
inline ParamStore load_or_train_proxy(char which, const ExperimentConfig& cfg,
                                      const ArtifactPaths& paths) {
  const std::string path = paths.proxy_ckpt(which);
  if (std::filesystem::exists(path)) return load_checkpoint(path);

  require_artifact(paths.clean_manifest(), "mix");
  Manifest train, eval;
  split_manifest(read_manifest(paths.clean_manifest()),
                 cfg.corpus_eval_utts_per_speaker, &train, &eval);
  const std::vector<SpeakerUtterances> corpus = load_speaker_waves(train);

  EmbedderTrainConfig tc;
  tc.steps = cfg.proxy_steps;
  tc.speakers_per_batch = cfg.proxy_speakers_per_batch;
  tc.learning_rate = cfg.proxy_lr;
  tc.adam = adam_config(cfg);
  tc.seed = cfg.seed ^ (0xA100ULL + static_cast<std::uint64_t>(which));
  EmbedderTrainResult result = train_embedder(corpus, tc);
  result.params.snap_to_f32();
  save_checkpoint_atomic(result.params, path);
  return load_checkpoint(path);
}

// ---- stages ---------------------------------------------------------------------

inline void write_run_log(const ArtifactPaths& paths, const std::string& stage,
                          const ExperimentConfig& cfg,
                          const std::vector<std::pair<std::string, std::string>>& extra) {
  std::string log;
  log += "stage = " + stage + "\n";
  log += "config_hash = " + paths.hash + "\n";
  log += "seed = " + std::to_string(cfg.seed) + "\n";
  for (const auto& [k, v] : extra) log += k + " = " + v + "\n";
  write_file_atomic(paths.run_log(stage), log);
}

inline std::string format_losses(const std::vector<double>& losses) {
  std::string out = "step\tloss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.9f\n", i, losses[i]);
    out += buf;
  }
  return out;
}

inline std::string format_metric(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

// mix: synthesize the corpus and noise pool, then contaminate every clean
// utterance at a uniformly drawn SNR.
inline void run_mix(const ExperimentConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg);
  const std::string dir = paths.mix_dir();
  std::filesystem::create_directories(dir);

  CorpusConfig cc;
  cc.num_speakers = cfg.corpus_num_speakers;
  cc.utts_per_speaker = cfg.corpus_utts_per_speaker;
  cc.duration_s = cfg.corpus_duration_s;
  cc.noise_clips_per_class = cfg.corpus_noise_clips_per_class;
  cc.noise_duration_s = cfg.corpus_noise_duration_s;
  cc.seed = cfg.seed ^ 0xC0FFEEULL;
  const SynthCorpus corpus = synth_corpus(cc, dir);

  std::vector<Waveform> noise_clips;
  for (const auto& e : corpus.noise) noise_clips.push_back(read_wav(e.path));

  Rng mix_rng(cfg.seed ^ 0x313A5ULL);
  std::filesystem::create_directories(std::filesystem::path(dir) / "noisy");
  Manifest noisy_manifest;
  std::string pairs = "utterance_id\tclean_path\tnoisy_path\tnoise_id\tsnr_db\n";
  for (const auto& e : corpus.clean) {
    const Waveform clean = read_wav(e.path);
    const std::size_t pick = mix_rng.below(noise_clips.size());
    Rng fit_rng = mix_rng.fork(1);
    const Waveform noise =
        fit_noise_length(noise_clips[pick], clean.samples.size(), fit_rng);
    const double target_snr =
        mix_rng.uniform(cfg.mix_snr_low_db, cfg.mix_snr_high_db);
    const NoisyCleanPair pair = mix_at_snr(clean, noise, target_snr);

    ManifestEntry n = e;
    n.path = (std::filesystem::path(dir) / "noisy" / (e.utterance_id + ".wav"))
                 .string();
    write_wav(pair.noisy, n.path, WavEncoding::kFloat32);
    noisy_manifest.push_back(n);
    char row[512];
    std::snprintf(row, sizeof(row), "%s\t%s\t%s\t%s\t%.6f\n",
                  e.utterance_id.c_str(), e.path.c_str(), n.path.c_str(),
                  corpus.noise[pick].utterance_id.c_str(), pair.snr_db);
    pairs += row;
  }

  write_manifest(corpus.clean, paths.clean_manifest());
  write_manifest(corpus.noise, paths.noise_manifest());
  write_manifest(noisy_manifest, paths.noisy_manifest());
  write_file_atomic(paths.pairs_table(), pairs);
  write_run_log(paths, "mix", cfg,
                {{"num_utterances", std::to_string(corpus.clean.size())},
                 {"num_noise_clips", std::to_string(corpus.noise.size())}});
}

// Loads the matched noisy/clean training pairs produced by mix.
inline std::vector<NoisyCleanPair> load_training_pairs(
    const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  require_artifact(paths.clean_manifest(), "mix");
  require_artifact(paths.noisy_manifest(), "mix");
  Manifest clean_train, clean_eval, noisy_train, noisy_eval;
  split_manifest(read_manifest(paths.clean_manifest()),
                 cfg.corpus_eval_utts_per_speaker, &clean_train, &clean_eval);
  split_manifest(read_manifest(paths.noisy_manifest()),
                 cfg.corpus_eval_utts_per_speaker, &noisy_train, &noisy_eval);
  std::map<std::string, std::string> noisy_by_id;
  for (const auto& e : noisy_train) noisy_by_id[e.utterance_id] = e.path;
  std::vector<NoisyCleanPair> pairs;
  for (const auto& e : clean_train) {
    auto it = noisy_by_id.find(e.utterance_id);
    if (it == noisy_by_id.end()) {
      throw ConfigError("no noisy version of " + e.utterance_id);
    }
    NoisyCleanPair p;
    p.clean = read_wav(e.path);
    p.noisy = read_wav(it->second);
    p.noise.sample_rate_hz = p.clean.sample_rate_hz;
    p.noise.samples.resize(p.clean.samples.size());
    for (std::size_t t = 0; t < p.clean.samples.size(); ++t) {
      p.noise.samples[t] = p.noisy.samples[t] - p.clean.samples[t];
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline void run_pretrain_se(const ExperimentConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg);
  const std::vector<NoisyCleanPair> pairs = load_training_pairs(cfg, paths);

  PretrainConfig pc;
  pc.steps = cfg.pretrain_steps;
  pc.batch_size = cfg.pretrain_batch_size;
  pc.learning_rate = cfg.pretrain_lr;
  pc.crop_samples = static_cast<int>(cfg.pretrain_crop_s * kDefaultSampleRateHz);
  pc.loss_configs = ptn_configs(cfg);
  pc.adam = adam_config(cfg);
  pc.seed = cfg.seed ^ 0x9EEULL;
  PretrainResult result = pretrain_se(pairs, pc);
  result.params.snap_to_f32();
  save_checkpoint_atomic(result.params, paths.se_ptn_ckpt());
  write_file_atomic(paths.loss_log("se_ptn"), format_losses(result.step_losses));
  write_run_log(paths, "pretrain-se", cfg,
                {{"steps", std::to_string(pc.steps)},
                 {"initial_loss", result.step_losses.empty()
                                      ? "nan"
                                      : format_metric(result.step_losses.front())},
                 {"final_loss", result.step_losses.empty()
                                    ? "nan"
                                    : format_metric(result.step_losses.back())}});
}

// Deterministic per-step speaker batches over the noisy training split.
inline SpeakerBatch make_speaker_batch(const std::vector<SpeakerUtterances>& corpus,
                                       int speakers_per_batch, std::uint64_t seed,
                                       int step) {
  Rng rng(splitmix_combine(seed, static_cast<std::uint64_t>(step)));
  const int n = std::min<int>(speakers_per_batch, static_cast<int>(corpus.size()));
  std::vector<int> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (int i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
  }
  SpeakerBatch batch;
  for (int i = 0; i < n; ++i) {
    const SpeakerUtterances& spk = corpus[order[i]];
    const std::size_t a = rng.below(spk.waves.size());
    std::size_t b = rng.below(spk.waves.size() - 1);
    if (b >= a) ++b;
    batch.speaker_ids.push_back(spk.speaker_id);
    batch.utterances.push_back({spk.waves[a], spk.waves[b]});
  }
  return batch;
}

inline void run_finetune_se(const ExperimentConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg);
  require_artifact(paths.se_ptn_ckpt(), "pretrain-se");
  const ParamStore pretrained = load_checkpoint(paths.se_ptn_ckpt());
  const ParamStore proxy_a = load_or_train_proxy('a', cfg, paths);

  require_artifact(paths.noisy_manifest(), "mix");
  Manifest noisy_train, noisy_eval;
  split_manifest(read_manifest(paths.noisy_manifest()),
                 cfg.corpus_eval_utts_per_speaker, &noisy_train, &noisy_eval);
  const std::vector<SpeakerUtterances> corpus = load_speaker_waves(noisy_train);

  FinetuneConfig fc;
  fc.steps = cfg.finetune_steps;
  fc.learning_rate = cfg.finetune_lr;
  fc.crop_samples = static_cast<int>(cfg.finetune_crop_s * kDefaultSampleRateHz);
  fc.adam = adam_config(cfg);
  fc.seed = cfg.seed ^ 0xF17EULL;
  const std::uint64_t batch_seed = cfg.seed ^ 0xBA7C4ULL;
  auto batches = [&corpus, &cfg, batch_seed](int step) {
    return make_speaker_batch(corpus, cfg.finetune_speakers_per_batch,
                              batch_seed, step);
  };
  FinetuneResult result =
      finetune_se(pretrained, batches, proxy_a, ApLossParams{}, fc);
  result.params.add("ap.w", Tensor::scalar(result.ap.w));
  result.params.add("ap.b", Tensor::scalar(result.ap.b));
  result.params.snap_to_f32();
  save_checkpoint_atomic(result.params, paths.se_sv_ckpt());
  write_file_atomic(paths.loss_log("se_sv"), format_losses(result.step_losses));

  double first10 = 0.0, last10 = 0.0;
  const std::size_t k = std::min<std::size_t>(10, result.step_losses.size());
  for (std::size_t i = 0; i < k; ++i) {
    first10 += result.step_losses[i];
    last10 += result.step_losses[result.step_losses.size() - 1 - i];
  }
  write_run_log(paths, "finetune-se", cfg,
                {{"steps", std::to_string(fc.steps)},
                 {"mean_first10", k ? format_metric(first10 / k) : "nan"},
                 {"mean_last10", k ? format_metric(last10 / k) : "nan"}});
}

inline void run_train_agent(const ExperimentConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg);
  require_artifact(paths.se_sv_ckpt(), "finetune-se");
  const ParamStore se_sv = load_checkpoint(paths.se_sv_ckpt());
  const ParamStore proxy_a = load_or_train_proxy('a', cfg, paths);
  const ParamStore proxy_b = load_or_train_proxy('b', cfg, paths);

  require_artifact(paths.noisy_manifest(), "mix");
  Manifest noisy_train, noisy_eval;
  split_manifest(read_manifest(paths.noisy_manifest()),
                 cfg.corpus_eval_utts_per_speaker, &noisy_train, &noisy_eval);
  const std::vector<SpeakerUtterances> train_corpus = load_speaker_waves(noisy_train);
  const std::vector<SpeakerUtterances> heldout_corpus = load_speaker_waves(noisy_eval);

  AgentTrainConfig ac;
  ac.steps = cfg.agent_steps;
  ac.speakers_per_batch = cfg.agent_speakers_per_batch;
  ac.learning_rate = cfg.agent_lr;
  ac.adam = adam_config(cfg);
  ac.seed = cfg.seed ^ 0xA6E27ULL;

  // held-out regression loss before/after, same deterministic batches
  const std::uint64_t heldout_seed = cfg.seed ^ 0x8E1D0ULL;
  Rng init_probe(ac.seed);
  Rng probe_fork = init_probe.fork(1);
  ParamStore init_params = init_agent_params(probe_fork, &proxy_a, "embedder.");
  const double heldout_before = evaluate_agent_dqn(
      init_params, se_sv, proxy_b, heldout_corpus, ac.speakers_per_batch,
      /*num_batches=*/8, heldout_seed);

  AgentTrainResult result =
      train_agent(se_sv, proxy_b, train_corpus, ac, &proxy_a);
  result.params.snap_to_f32();
  save_checkpoint_atomic(result.params, paths.agent_ckpt());
  const ParamStore reloaded = load_checkpoint(paths.agent_ckpt());
  const double heldout_after = evaluate_agent_dqn(
      reloaded, se_sv, proxy_b, heldout_corpus, ac.speakers_per_batch,
      /*num_batches=*/8, heldout_seed);

  write_file_atomic(paths.loss_log("agent"), format_losses(result.step_losses));
  write_run_log(paths, "train-agent", cfg,
                {{"steps", std::to_string(ac.steps)},
                 {"heldout_dqn_before", format_metric(heldout_before)},
                 {"heldout_dqn_after", format_metric(heldout_after)}});
}

inline std::vector<ConditionSpec> default_conditions() {
  std::vector<ConditionSpec> specs = {
      {Condition::kNoisy, 0.0},   {Condition::kSePtn, 0.0},
      {Condition::kSeSv, 0.0},    {Condition::kSeSvSnr, 0.0},
      {Condition::kLc4sv, 0.0},
  };
  for (int a = 0; a < kNumActions; ++a) {
    specs.push_back({Condition::kConstAlpha, action_alpha(a)});
  }
  return specs;
}

inline void run_eval(const ExperimentConfig& cfg) {
  const ArtifactPaths paths = artifact_paths(cfg);
  require_artifact(paths.se_ptn_ckpt(), "pretrain-se");
  require_artifact(paths.se_sv_ckpt(), "finetune-se");
  require_artifact(paths.agent_ckpt(), "train-agent");
  const ParamStore se_ptn = load_checkpoint(paths.se_ptn_ckpt());
  const ParamStore se_sv = load_checkpoint(paths.se_sv_ckpt());
  const ParamStore agent = load_checkpoint(paths.agent_ckpt());
  const ParamStore proxy_c = load_or_train_proxy('c', cfg, paths);

  require_artifact(paths.noisy_manifest(), "mix");
  Manifest noisy_train, noisy_eval;
  split_manifest(read_manifest(paths.noisy_manifest()),
                 cfg.corpus_eval_utts_per_speaker, &noisy_train, &noisy_eval);

  const std::vector<TrialPair> trials =
      build_trial_list(noisy_eval, cfg.seed ^ 0x7121A15ULL);
  {
    std::string text;
    for (const auto& t : trials) {
      text += (t.target ? "1 " : "0 ") + t.enroll_id + " " + t.test_id + "\n";
    }
    write_file_atomic(paths.trial_list(), text);
  }

  std::vector<std::pair<std::string, Waveform>> utts;
  for (const auto& e : noisy_eval) {
    utts.emplace_back(e.utterance_id, read_wav(e.path));
  }
  EvalModels models;
  models.se_ptn = &se_ptn;
  models.se_sv = &se_sv;
  models.agent = &agent;
  models.eval_embedder = &proxy_c;
  models.snr_threshold_db = cfg.eval_snr_threshold_db;
  const EvalCache cache(utts, models, eval_threads());

  DcfConfig dcf;
  std::vector<ConditionResult> rows;
  std::filesystem::create_directories(paths.scores_dir());
  for (const ConditionSpec& spec : default_conditions()) {
    ConditionResult r = run_condition(spec, trials, cache, dcf);
    write_file_atomic(paths.scores_dir() + "/" + r.label + ".tsv",
                      format_score_dump(r));
    rows.push_back(std::move(r));
  }
  write_file_atomic(paths.report(), format_report(rows));

  std::string alphas = "utterance_id\talpha\n";
  for (const std::string& id : cache.ids()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s\t%.1f\n", id.c_str(),
                  cache.lc4sv_alpha(id));
    alphas += buf;
  }
  write_file_atomic(paths.alpha_log(), alphas);

  std::vector<std::pair<std::string, std::string>> extra;
  extra.emplace_back("num_trials", std::to_string(trials.size()));
  for (const auto& r : rows) {
    extra.emplace_back("eer." + r.label, format_metric(100.0 * r.eer));
    extra.emplace_back("mindcf." + r.label, format_metric(r.min_dcf));
  }
  write_run_log(paths, "eval", cfg, extra);
}

struct ProcessResult {
  double alpha = 0.0;
  std::string out_path;
};

inline ProcessResult run_process(const ExperimentConfig& cfg,
                                 const std::string& in_path,
                                 const std::string& out_path) {
  const ArtifactPaths paths = artifact_paths(cfg);
  require_artifact(paths.se_sv_ckpt(), "finetune-se");
  require_artifact(paths.agent_ckpt(), "train-agent");
  const ParamStore se_sv = load_checkpoint(paths.se_sv_ckpt());
  const ParamStore agent = load_checkpoint(paths.agent_ckpt());
  const Waveform noisy = read_wav(in_path);
  const Lc4svOutput out = lc4sv_process(noisy, se_sv, agent);
  write_wav(out.wave, out_path, WavEncoding::kFloat32);
  return ProcessResult{out.alpha, out_path};
}

inline void run_stage(Stage stage, const ExperimentConfig& cfg) {
  validate(cfg);
  switch (stage) {
    case Stage::kMix: run_mix(cfg); return;
    case Stage::kPretrainSe: run_pretrain_se(cfg); return;
    case Stage::kFinetuneSe: run_finetune_se(cfg); return;
    case Stage::kTrainAgent: run_train_agent(cfg); return;
    case Stage::kEval: run_eval(cfg); return;
    case Stage::kProcess:
      throw ConfigError("process needs --in and --out (use run_process)");
  }
}

}  // namespace lc4sv

#endif  // LC4SV_PIPELINE_HPP_
