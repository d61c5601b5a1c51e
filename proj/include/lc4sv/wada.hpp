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

#ifndef LC4SV_WADA_HPP_
#define LC4SV_WADA_HPP_

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/wada_table_data.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

// Minimum input length for a usable amplitude-distribution estimate (0.25 s
// at 16 kHz).
inline constexpr std::size_t kWadaMinSamples = 4000;

// SNR interval group fed to the interpolation agent. The six bins partition
// the real line at 0, 3, 6, 9 and 12 dB, lower bound inclusive.
struct SnrBin {
  int index = 0;
  double lower_db = -std::numeric_limits<double>::infinity();
  double upper_db = std::numeric_limits<double>::infinity();
};

inline constexpr int kNumSnrBins = 6;

inline SnrBin snr_to_bin(double snr_db) {
  if (std::isnan(snr_db)) throw DomainError("snr_to_bin of NaN");
  if (!std::isfinite(snr_db)) throw DomainError("snr_to_bin of infinite value");
  static constexpr double kEdges[] = {0.0, 3.0, 6.0, 9.0, 12.0};
  const double inf = std::numeric_limits<double>::infinity();
  int index = 5;
  for (int i = 0; i < 5; ++i) {
    if (snr_db < kEdges[i]) {
      index = i;
      break;
    }
  }
  SnrBin bin;
  bin.index = index;
  bin.lower_db = (index == 0) ? -inf : kEdges[index - 1];
  bin.upper_db = (index == 5) ? inf : kEdges[index];
  return bin;
}

// The published G -> SNR inversion table, shipped as a two-column text file
// and embedded at build time.
struct WadaTable {
  std::vector<double> g;
  std::vector<double> snr_db;
};

inline WadaTable parse_wada_table(const std::string& text) {
  WadaTable table;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    double g = 0.0, snr = 0.0;
    if (!(row >> g >> snr)) {
      throw FormatError("bad WADA table line: " + line);
    }
    table.g.push_back(g);
    table.snr_db.push_back(snr);
  }
  if (table.g.size() < 2) throw FormatError("WADA table too small");
  return table;
}

inline const WadaTable& wada_table() {
  static const WadaTable table = parse_wada_table(kWadaTableText);
  return table;
}

// The WADA statistic: ln(mean |x|) - mean(ln(|x| + eps)). Scale-invariant up
// to the epsilon guard.
inline double wada_g_statistic(const Waveform& w) {
  constexpr double kEps = 1e-10;
  double mean_abs = 0.0, mean_log = 0.0;
  for (float s : w.samples) {
    const double a = std::fabs(static_cast<double>(s));
    mean_abs += a;
    mean_log += std::log(a + kEps);
  }
  const double n = static_cast<double>(w.samples.size());
  mean_abs /= n;
  mean_log /= n;
  if (mean_abs <= 0.0) {
    throw DegenerateInputError("WADA statistic of an all-zero signal");
  }
  return std::log(mean_abs) - mean_log;
}

// Maps a G value through the table with piecewise-linear interpolation,
// clamping outside the covered range. Monotone nondecreasing in G.
inline double wada_invert_g(double g_value) {
  const WadaTable& t = wada_table();
  const std::size_t n = t.g.size();
  if (g_value <= t.g.front()) return t.snr_db.front();
  if (g_value >= t.g.back()) return t.snr_db.back();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (t.g[i + 1] >= g_value) {
      const double span = t.g[i + 1] - t.g[i];
      double lam = (span > 0.0) ? (g_value - t.g[i]) / span : 0.0;
      if (lam < 0.0) lam = 0.0;
      if (lam > 1.0) lam = 1.0;
      return t.snr_db[i] + lam * (t.snr_db[i + 1] - t.snr_db[i]);
    }
  }
  return t.snr_db.back();
}

// Blind SNR estimate of a noisy waveform, in dB, clamped to the table range.
inline double estimate_snr_wada(const Waveform& w) {
  validate(w, "WADA input");
  if (w.samples.size() < kWadaMinSamples) {
    throw DegenerateInputError("WADA input shorter than " +
                               std::to_string(kWadaMinSamples) + " samples");
  }
  return wada_invert_g(wada_g_statistic(w));
}

}  // namespace lc4sv

#endif  // LC4SV_WADA_HPP_
