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

#ifndef LC4SV_ERRORS_HPP_
#define LC4SV_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace lc4sv {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/waveform dimensions do not line up.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape error: " + msg) {}
};

// A numeric argument is outside its documented domain (NaN, alpha > 1, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error("domain error: " + msg) {}
};

// Input is structurally valid but degenerate (all-zero signal, zero-norm
// embedding, silent loss target).
class DegenerateInputError : public Error {
 public:
  explicit DegenerateInputError(const std::string& msg)
      : Error("degenerate input: " + msg) {}
};

// A file exists but is not in a format we accept.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error("format error: " + msg) {}
};

// The OS failed us: missing file, short read, unwritable path.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("I/O error: " + msg) {}
};

// Bad experiment configuration: invalid values, missing prerequisite
// artifacts, unusable corpus. Maps to CLI exit code 1.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config error: " + msg) {}
};

// An internal invariant was violated; always a bug.
class InternalError : public Error {
 public:
  explicit InternalError(const std::string& msg)
      : Error("internal error: " + msg) {}
};

}  // namespace lc4sv

#endif  // LC4SV_ERRORS_HPP_
