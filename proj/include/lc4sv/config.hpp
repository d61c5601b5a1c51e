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

#ifndef LC4SV_CONFIG_HPP_
#define LC4SV_CONFIG_HPP_

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/stft.hpp"

namespace lc4sv {

// Experiment knobs, all in one flat `key = value` file. Stage outputs are
// content-addressed by the hash of the canonical serialization, so any
// change here re-keys every artifact.
struct ExperimentConfig {
  std::uint64_t seed = 42;
  std::string work_dir = "runs/default";

  int corpus_num_speakers = 24;
  int corpus_utts_per_speaker = 10;
  double corpus_duration_s = 3.0;
  int corpus_eval_utts_per_speaker = 4;
  int corpus_noise_clips_per_class = 8;
  double corpus_noise_duration_s = 4.0;

  double mix_snr_low_db = -4.0;
  double mix_snr_high_db = 6.0;

  int pretrain_steps = 500;
  int pretrain_batch_size = 8;
  double pretrain_lr = 2e-4;
  double pretrain_crop_s = 1.0;

  int finetune_steps = 200;
  int finetune_speakers_per_batch = 8;
  double finetune_lr = 1e-4;
  double finetune_crop_s = 1.5;

  int proxy_steps = 300;
  int proxy_speakers_per_batch = 8;
  double proxy_lr = 1e-3;

  int agent_steps = 500;
  int agent_speakers_per_batch = 8;
  double agent_lr = 1e-4;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  double eval_snr_threshold_db = 4.0;

  std::vector<int> ptn_fft_sizes = {512, 1024, 2048};
  std::vector<int> ptn_hop_sizes = {50, 120, 240};
  std::vector<int> ptn_win_lengths = {240, 600, 1200};
};

namespace config_detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

inline std::vector<int> parse_int_list(const std::string& s,
                                       const std::string& key) {
  std::vector<int> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("bad integer list for " + key + ": " + s);
    }
  }
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

inline const std::vector<Field>& fields() {
  auto u64 = [](std::uint64_t ExperimentConfig::*m, const char* key) {
    return Field{key,
                 [m](const ExperimentConfig& c) { return std::to_string(c.*m); },
                 [m, key](ExperimentConfig& c, const std::string& s) {
                   try {
                     c.*m = std::stoull(s);
                   } catch (const std::exception&) {
                     throw ConfigError(std::string("bad value for ") + key + ": " + s);
                   }
                 }};
  };
  auto i32 = [](int ExperimentConfig::*m, const char* key) {
    return Field{key,
                 [m](const ExperimentConfig& c) { return std::to_string(c.*m); },
                 [m, key](ExperimentConfig& c, const std::string& s) {
                   try {
                     c.*m = std::stoi(s);
                   } catch (const std::exception&) {
                     throw ConfigError(std::string("bad value for ") + key + ": " + s);
                   }
                 }};
  };
  auto f64 = [](double ExperimentConfig::*m, const char* key) {
    return Field{key,
                 [m](const ExperimentConfig& c) { return format_double(c.*m); },
                 [m, key](ExperimentConfig& c, const std::string& s) {
                   try {
                     c.*m = std::stod(s);
                   } catch (const std::exception&) {
                     throw ConfigError(std::string("bad value for ") + key + ": " + s);
                   }
                 }};
  };
  auto str = [](std::string ExperimentConfig::*m, const char* key) {
    return Field{key, [m](const ExperimentConfig& c) { return c.*m; },
                 [m](ExperimentConfig& c, const std::string& s) { c.*m = s; }};
  };
  auto ints = [](std::vector<int> ExperimentConfig::*m, const char* key) {
    return Field{key,
                 [m](const ExperimentConfig& c) { return format_int_list(c.*m); },
                 [m, key](ExperimentConfig& c, const std::string& s) {
                   c.*m = parse_int_list(s, key);
                 }};
  };
  static const std::vector<Field> kFields = {
      u64(&ExperimentConfig::seed, "seed"),
      str(&ExperimentConfig::work_dir, "work_dir"),
      i32(&ExperimentConfig::corpus_num_speakers, "corpus.num_speakers"),
      i32(&ExperimentConfig::corpus_utts_per_speaker, "corpus.utts_per_speaker"),
      f64(&ExperimentConfig::corpus_duration_s, "corpus.duration_s"),
      i32(&ExperimentConfig::corpus_eval_utts_per_speaker,
          "corpus.eval_utts_per_speaker"),
      i32(&ExperimentConfig::corpus_noise_clips_per_class,
          "corpus.noise_clips_per_class"),
      f64(&ExperimentConfig::corpus_noise_duration_s, "corpus.noise_duration_s"),
      f64(&ExperimentConfig::mix_snr_low_db, "mix.snr_low_db"),
      f64(&ExperimentConfig::mix_snr_high_db, "mix.snr_high_db"),
      i32(&ExperimentConfig::pretrain_steps, "pretrain.steps"),
      i32(&ExperimentConfig::pretrain_batch_size, "pretrain.batch_size"),
      f64(&ExperimentConfig::pretrain_lr, "pretrain.lr"),
      f64(&ExperimentConfig::pretrain_crop_s, "pretrain.crop_s"),
      i32(&ExperimentConfig::finetune_steps, "finetune.steps"),
      i32(&ExperimentConfig::finetune_speakers_per_batch,
          "finetune.speakers_per_batch"),
      f64(&ExperimentConfig::finetune_lr, "finetune.lr"),
      f64(&ExperimentConfig::finetune_crop_s, "finetune.crop_s"),
      i32(&ExperimentConfig::proxy_steps, "proxy.steps"),
      i32(&ExperimentConfig::proxy_speakers_per_batch,
          "proxy.speakers_per_batch"),
      f64(&ExperimentConfig::proxy_lr, "proxy.lr"),
      i32(&ExperimentConfig::agent_steps, "agent.steps"),
      i32(&ExperimentConfig::agent_speakers_per_batch,
          "agent.speakers_per_batch"),
      f64(&ExperimentConfig::agent_lr, "agent.lr"),
      f64(&ExperimentConfig::adam_beta1, "adam.beta1"),
      f64(&ExperimentConfig::adam_beta2, "adam.beta2"),
      f64(&ExperimentConfig::adam_epsilon, "adam.epsilon"),
      f64(&ExperimentConfig::eval_snr_threshold_db, "eval.snr_threshold_db"),
      ints(&ExperimentConfig::ptn_fft_sizes, "ptn.fft_sizes"),
      ints(&ExperimentConfig::ptn_hop_sizes, "ptn.hop_sizes"),
      ints(&ExperimentConfig::ptn_win_lengths, "ptn.win_lengths"),
  };
  return kFields;
}

}  // namespace config_detail

inline void validate(const ExperimentConfig& c) {
  if (c.corpus_num_speakers < 2) throw ConfigError("corpus.num_speakers must be >= 2");
  if (c.corpus_eval_utts_per_speaker < 2) {
    throw ConfigError("corpus.eval_utts_per_speaker must be >= 2");
  }
  if (c.corpus_utts_per_speaker - c.corpus_eval_utts_per_speaker < 2) {
    throw ConfigError("need at least two training utterances per speaker");
  }
  if (c.mix_snr_low_db > c.mix_snr_high_db) {
    throw ConfigError("mix.snr_low_db must be <= mix.snr_high_db");
  }
  for (double lr : {c.pretrain_lr, c.finetune_lr, c.proxy_lr, c.agent_lr}) {
    if (!(lr > 0.0)) throw ConfigError("learning rates must be > 0");
  }
  for (int steps : {c.pretrain_steps, c.finetune_steps, c.proxy_steps,
                    c.agent_steps}) {
    if (steps < 0) throw ConfigError("step counts must be >= 0");
  }
  if (c.ptn_fft_sizes.size() != c.ptn_hop_sizes.size() ||
      c.ptn_fft_sizes.size() != c.ptn_win_lengths.size()) {
    throw ConfigError("ptn.* lists must have equal lengths");
  }
  for (std::size_t i = 0; i < c.ptn_fft_sizes.size(); ++i) {
    validate(StftConfig{c.ptn_fft_sizes[i], c.ptn_hop_sizes[i],
                        c.ptn_win_lengths[i]});
  }
}

inline std::vector<StftConfig> ptn_configs(const ExperimentConfig& c) {
  std::vector<StftConfig> out;
  for (std::size_t i = 0; i < c.ptn_fft_sizes.size(); ++i) {
    out.push_back(StftConfig{c.ptn_fft_sizes[i], c.ptn_hop_sizes[i],
                             c.ptn_win_lengths[i]});
  }
  return out;
}

// Canonical serialization: every field, fixed order, normalized values.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  for (const auto& f : config_detail::fields()) {
    out += f.key;
    out += " = ";
    out += f.get(c);
    out += "\n";
  }
  return out;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        " has no '=': " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    bool known = false;
    for (const auto& f : config_detail::fields()) {
      if (key == f.key) {
        f.set(cfg, val);
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

// FNV-1a over the canonical serialization, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string text = serialize_config(c);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lc4sv

#endif  // LC4SV_CONFIG_HPP_
