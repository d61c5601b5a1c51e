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

#ifndef LC4SV_CHECKPOINT_HPP_
#define LC4SV_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/graph.hpp"

namespace lc4sv {

// Ordered collection of named tensors. Order is the serialization order, so
// it must be deterministic; everything downstream depends on that.
class ParamStore {
 public:
  void add(const std::string& name, Tensor t) {
    if (find(name) != nullptr) {
      throw InternalError("duplicate parameter name " + name);
    }
    entries_.emplace_back(name, std::move(t));
  }

  Tensor* find(const std::string& name) {
    for (auto& [n, t] : entries_) {
      if (n == name) return &t;
    }
    return nullptr;
  }
  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : entries_) {
      if (n == name) return &t;
    }
    return nullptr;
  }

  Tensor& at(const std::string& name) {
    Tensor* t = find(name);
    if (t == nullptr) throw InternalError("missing parameter " + name);
    return *t;
  }
  const Tensor& at(const std::string& name) const {
    const Tensor* t = find(name);
    if (t == nullptr) throw InternalError("missing parameter " + name);
    return *t;
  }

  std::size_t size() const { return entries_.size(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  // Rounds every value through float32. Stages call this before handing
  // parameters downstream so that an in-memory model and its reloaded
  // checkpoint are indistinguishable.
  void snap_to_f32() {
    for (auto& [n, t] : entries_) {
      for (double& x : t.v) x = static_cast<double>(static_cast<float>(x));
    }
  }

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

namespace ckpt_detail {

inline constexpr char kMagic[8] = {'L', 'C', '4', 'S', 'V', '0', '0', '1'};

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_i32(std::string& out, std::int32_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t size, std::string path)
      : data_(data), size_(size), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(data_[pos_]) |
                      (static_cast<std::uint32_t>(data_[pos_ + 1]) << 8) |
                      (static_cast<std::uint32_t>(data_[pos_ + 2]) << 16) |
                      (static_cast<std::uint32_t>(data_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }

  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

  bool exhausted() const { return pos_ == size_; }

 private:
  void need(std::size_t n) {
    if (pos_ + n > size_) {
      throw FormatError("checkpoint " + path_ + " is truncated");
    }
  }
  const unsigned char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string path_;
};

}  // namespace ckpt_detail

// Serializes a ParamStore: magic "LC4SV001", u32 tensor count, then per
// tensor a length-prefixed UTF-8 name, a count-prefixed list of int32
// little-endian dims, and the values as float32 little-endian.
inline std::string serialize_checkpoint(const ParamStore& params) {
  std::string out;
  out.append(ckpt_detail::kMagic, 8);
  ckpt_detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    ckpt_detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    ckpt_detail::put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) ckpt_detail::put_i32(out, d);
    for (double x : t.v) ckpt_detail::put_f32(out, static_cast<float>(x));
  }
  return out;
}

inline void save_checkpoint(const ParamStore& params, const std::string& path) {
  const std::string bytes = serialize_checkpoint(params);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failure on checkpoint " + path);
}

inline ParamStore parse_checkpoint(const std::string& bytes,
                                   const std::string& path) {
  if (bytes.size() < 8 ||
      std::memcmp(bytes.data(), ckpt_detail::kMagic, 8) != 0) {
    throw FormatError(path + " is not an LC4SV checkpoint");
  }
  ckpt_detail::Reader r(
      reinterpret_cast<const unsigned char*>(bytes.data()) + 8,
      bytes.size() - 8, path);
  const std::uint32_t count = r.u32();
  ParamStore params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t ndim = r.u32();
    std::vector<int> shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d) {
      shape[d] = static_cast<std::int32_t>(r.u32());
      if (shape[d] <= 0) throw FormatError(path + " holds a bad dimension");
    }
    Tensor t(shape);
    for (std::size_t k = 0; k < t.numel(); ++k) {
      t.v[k] = static_cast<double>(r.f32());
    }
    params.add(name, std::move(t));
  }
  if (!r.exhausted()) throw FormatError(path + " has trailing bytes");
  return params;
}

inline ParamStore load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failure on checkpoint " + path);
  return parse_checkpoint(bytes, path);
}

}  // namespace lc4sv

#endif  // LC4SV_CHECKPOINT_HPP_
