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

#ifndef LC4SV_CORPUS_HPP_
#define LC4SV_CORPUS_HPP_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/manifest.hpp"
#include "lc4sv/rng.hpp"
#include "lc4sv/wav_io.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// A synthetic "speaker": a fundamental frequency plus a fixed formant-like
// spectral envelope. Utterances share the voice and vary in phase, micro
// pitch jitter and amplitude contour.
struct SpeakerVoice {
  double f0_hz = 120.0;
  std::vector<double> formant_hz;
  std::vector<double> formant_bw;
  std::vector<double> formant_gain;
  double tilt = 1.0;  // high-frequency rolloff strength
};

inline SpeakerVoice make_speaker_voice(double base_f0_hz, Rng& rng) {
  SpeakerVoice v;
  v.f0_hz = base_f0_hz * std::exp(rng.uniform(-0.03, 0.03));
  const double lo[4] = {300.0, 900.0, 2200.0, 3300.0};
  const double hi[4] = {850.0, 2100.0, 3200.0, 4500.0};
  for (int r = 0; r < 4; ++r) {
    v.formant_hz.push_back(rng.uniform(lo[r], hi[r]));
    v.formant_bw.push_back(rng.uniform(90.0, 220.0));
    v.formant_gain.push_back(rng.uniform(0.5, 1.0));
  }
  v.tilt = rng.uniform(0.8, 1.4);
  return v;
}

inline double voice_envelope(const SpeakerVoice& v, double hz) {
  double e = 0.02;
  for (std::size_t r = 0; r < v.formant_hz.size(); ++r) {
    const double d = (hz - v.formant_hz[r]) / v.formant_bw[r];
    e += v.formant_gain[r] / (1.0 + d * d);
  }
  return e / (1.0 + v.tilt * (hz / 3000.0) * (hz / 3000.0));
}

// Speech-like amplitude contour: syllabic bursts with smooth ramps and short
// pauses in between.
inline std::vector<double> syllabic_contour(int length, int sample_rate, Rng& rng) {
  std::vector<double> am(length, 0.0);
  const int ramp = sample_rate * 3 / 100;  // 30 ms
  int t = 0;
  while (t < length) {
    const int burst = static_cast<int>(sample_rate * rng.uniform(0.12, 0.30));
    const int gap = static_cast<int>(sample_rate * rng.uniform(0.04, 0.14));
    const double level = rng.uniform(0.5, 1.0);
    for (int i = 0; i < burst && t + i < length; ++i) {
      double w = 1.0;
      if (i < ramp) w = 0.5 - 0.5 * std::cos(std::numbers::pi * i / ramp);
      if (burst - i <= ramp) {
        w = std::min(w, 0.5 - 0.5 * std::cos(std::numbers::pi * (burst - i) / ramp));
      }
      am[t + i] = level * w;
    }
    t += burst + gap;
  }
  return am;
}

// One utterance of a voice: jittered harmonic stack shaped by the formant
// envelope, under a syllabic amplitude contour, with a faint noise floor.
inline Waveform synth_utterance(const SpeakerVoice& voice, double duration_s,
                                Rng& rng, int sample_rate = kDefaultSampleRateHz) {
  const int length = static_cast<int>(duration_s * sample_rate);
  if (length < 1) throw ConfigError("utterance duration too short");
  const double nyquist_cap = 0.45 * sample_rate;
  const int harmonics =
      std::max(1, static_cast<int>(nyquist_cap / (voice.f0_hz * 1.06)));

  std::vector<double> amp(harmonics), phase(harmonics);
  for (int h = 0; h < harmonics; ++h) {
    amp[h] = voice_envelope(voice, (h + 1) * voice.f0_hz);
    phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double wander_phase1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double wander_phase2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double vibrato_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const std::vector<double> contour = syllabic_contour(length, sample_rate, rng);
  const double peak_target = rng.uniform(0.25, 0.45);

  std::vector<double> x(length, 0.0);
  for (int t = 0; t < length; ++t) {
    const double sec = static_cast<double>(t) / sample_rate;
    const double jitter =
        1.0 + 0.015 * std::sin(2.0 * std::numbers::pi * 0.4 * sec + wander_phase1) +
        0.010 * std::sin(2.0 * std::numbers::pi * 0.9 * sec + wander_phase2) +
        0.006 * std::sin(2.0 * std::numbers::pi * 5.5 * sec + vibrato_phase);
    const double f0 = voice.f0_hz * jitter;
    double s = 0.0;
    for (int h = 0; h < harmonics; ++h) {
      phase[h] += 2.0 * std::numbers::pi * (h + 1) * f0 / sample_rate;
      s += amp[h] * std::sin(phase[h]);
    }
    x[t] = contour[t] * s + 1e-4 * rng.normal();
  }
  double peak = 0.0;
  for (double s : x) peak = std::max(peak, std::fabs(s));
  const double gain = (peak > 0.0) ? peak_target / peak : 1.0;

  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples.resize(length);
  for (int t = 0; t < length; ++t) {
    w.samples[t] = static_cast<float>(gain * x[t]);
  }
  return w;
}

// ---- noise pool -------------------------------------------------------------

inline Waveform synth_white_noise(int length, Rng& rng,
                                  int sample_rate = kDefaultSampleRateHz) {
  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples.resize(length);
  for (int t = 0; t < length; ++t) {
    w.samples[t] = static_cast<float>(0.1 * rng.normal());
  }
  return w;
}

// Pink noise via the classic three-pole filtered-white approximation.
inline Waveform synth_pink_noise(int length, Rng& rng,
                                 int sample_rate = kDefaultSampleRateHz) {
  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples.resize(length);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (int t = 0; t < length; ++t) {
    const double white = rng.normal();
    b0 = 0.99765 * b0 + white * 0.0990460;
    b1 = 0.96300 * b1 + white * 0.2965164;
    b2 = 0.57000 * b2 + white * 1.0526913;
    w.samples[t] = static_cast<float>(0.03 * (b0 + b1 + b2 + white * 0.1848));
  }
  return w;
}

// Babble: a sum of voices whose parameters are drawn outside the corpus
// speaker pool.
inline Waveform synth_babble_noise(int length, Rng& rng,
                                   int sample_rate = kDefaultSampleRateHz) {
  const int voices = 5;
  std::vector<double> mix(length, 0.0);
  for (int v = 0; v < voices; ++v) {
    Rng voice_rng = rng.fork(100 + v);
    SpeakerVoice voice = make_speaker_voice(voice_rng.uniform(90.0, 280.0), voice_rng);
    Waveform u = synth_utterance(voice, static_cast<double>(length) / sample_rate,
                                 voice_rng, sample_rate);
    for (int t = 0; t < length; ++t) mix[t] += static_cast<double>(u.samples[t]);
  }
  double peak = 0.0;
  for (double s : mix) peak = std::max(peak, std::fabs(s));
  const double gain = (peak > 0.0) ? 0.3 / peak : 1.0;
  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.samples.resize(length);
  for (int t = 0; t < length; ++t) {
    w.samples[t] = static_cast<float>(gain * mix[t]);
  }
  return w;
}

// ---- corpus generation ---------------------------------------------------------

struct CorpusConfig {
  int num_speakers = 24;
  int utts_per_speaker = 10;
  double duration_s = 3.0;
  int noise_clips_per_class = 8;
  double noise_duration_s = 4.0;
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  Manifest clean;  // one entry per utterance
  Manifest noise;  // speaker_id holds the noise class
};

inline std::string speaker_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03d", index);
  return buf;
}

inline std::string utterance_name(int speaker, int utt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03d_utt%02d", speaker, utt);
  return buf;
}

// Generates WAV files plus manifests under out_dir (wav/ and noise/
// subdirectories). Deterministic per seed, byte for byte.
inline SynthCorpus synth_corpus(const CorpusConfig& cfg,
                                const std::string& out_dir) {
  if (cfg.num_speakers < 2) {
    throw ConfigError("corpus needs at least two speakers");
  }
  if (cfg.utts_per_speaker < 2) {
    throw ConfigError("corpus needs at least two utterances per speaker");
  }
  if (cfg.duration_s < 1.0) {
    throw ConfigError("utterances shorter than 1 s are not useful here");
  }
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");
  fs::create_directories(fs::path(out_dir) / "noise");

  Rng root(cfg.seed);
  Rng speakers_rng = root.fork(1);
  Rng noise_rng = root.fork(2);

  SynthCorpus corpus;
  for (int s = 0; s < cfg.num_speakers; ++s) {
    Rng spk_rng = speakers_rng.fork(s);
    // fundamentals spread log-uniformly over a speech-like range
    const double frac =
        (cfg.num_speakers > 1)
            ? static_cast<double>(s) / (cfg.num_speakers - 1)
            : 0.5;
    const double base_f0 = 95.0 * std::pow(265.0 / 95.0, frac);
    const SpeakerVoice voice = make_speaker_voice(base_f0, spk_rng);
    for (int u = 0; u < cfg.utts_per_speaker; ++u) {
      Rng utt_rng = spk_rng.fork(1000 + u);
      const Waveform wave = synth_utterance(voice, cfg.duration_s, utt_rng);
      ManifestEntry e;
      e.utterance_id = utterance_name(s, u);
      e.speaker_id = speaker_name(s);
      e.path = (fs::path(out_dir) / "wav" / (e.utterance_id + ".wav")).string();
      e.duration_seconds = wave.duration_s();
      write_wav(wave, e.path, WavEncoding::kFloat32);
      corpus.clean.push_back(std::move(e));
    }
  }

  const int noise_len =
      static_cast<int>(cfg.noise_duration_s * kDefaultSampleRateHz);
  const char* classes[3] = {"white", "pink", "babble"};
  for (int c = 0; c < 3; ++c) {
    for (int k = 0; k < cfg.noise_clips_per_class; ++k) {
      Rng clip_rng = noise_rng.fork(c * 1000 + k);
      Waveform clip;
      if (c == 0) {
        clip = synth_white_noise(noise_len, clip_rng);
      } else if (c == 1) {
        clip = synth_pink_noise(noise_len, clip_rng);
      } else {
        clip = synth_babble_noise(noise_len, clip_rng);
      }
      ManifestEntry e;
      char name[32];
      std::snprintf(name, sizeof(name), "noise_%s_%02d", classes[c], k);
      e.utterance_id = name;
      e.speaker_id = std::string("noise-") + classes[c];
      e.path = (fs::path(out_dir) / "noise" / (std::string(name) + ".wav")).string();
      e.duration_seconds = clip.duration_s();
      write_wav(clip, e.path, WavEncoding::kFloat32);
      corpus.noise.push_back(std::move(e));
    }
  }
  return corpus;
}

}  // namespace lc4sv

#endif  // LC4SV_CORPUS_HPP_
