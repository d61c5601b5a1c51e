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

#ifndef LC4SV_MANIFEST_HPP_
#define LC4SV_MANIFEST_HPP_

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"

namespace lc4sv {

// One corpus record: `utterance_id, speaker_id, path, duration_seconds`,
// tab-separated, one per line.
struct ManifestEntry {
  std::string utterance_id;
  std::string speaker_id;
  std::string path;
  double duration_seconds = 0.0;
};

using Manifest = std::vector<ManifestEntry>;

inline Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  Manifest entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 4) {
      throw FormatError("manifest " + path + " line " + std::to_string(lineno) +
                        ": expected 4 tab-separated fields, got " +
                        std::to_string(fields.size()));
    }
    ManifestEntry e;
    e.utterance_id = fields[0];
    e.speaker_id = fields[1];
    e.path = fields[2];
    try {
      e.duration_seconds = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw FormatError("manifest " + path + " line " + std::to_string(lineno) +
                        ": bad duration '" + fields[3] + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::string format_duration(double seconds) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", seconds);
  return buf;
}

inline void write_manifest(const Manifest& entries, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open manifest " + path + " for writing");
  for (const auto& e : entries) {
    out << e.utterance_id << '\t' << e.speaker_id << '\t' << e.path << '\t'
        << format_duration(e.duration_seconds) << '\n';
  }
  if (!out) throw IoError("write failure on manifest " + path);
}

}  // namespace lc4sv

#endif  // LC4SV_MANIFEST_HPP_
