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

#ifndef LC4SV_WAV_IO_HPP_
#define LC4SV_WAV_IO_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/wave.hpp"

namespace lc4sv {

enum class WavEncoding { kPcm16, kFloat32 };

namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(static_cast<std::uint32_t>(p[0]) |
                                    (static_cast<std::uint32_t>(p[1]) << 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace wav_detail

// Reads a mono RIFF/WAVE file holding PCM16 or IEEE float32 samples.
// PCM16 values are scaled by 1/32768; float32 samples pass through bit-exact.
inline Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError(path + " is not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t chunk_size = wav_detail::read_u32(hdr + 4);
    pos += 8;
    if (pos + chunk_size > bytes.size()) {
      throw IoError(path + " is truncated inside a chunk");
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw FormatError(path + " has a short fmt chunk");
      const unsigned char* f = bytes.data() + pos;
      audio_format = wav_detail::read_u16(f + 0);
      channels = wav_detail::read_u16(f + 2);
      sample_rate = wav_detail::read_u32(f + 4);
      bits = wav_detail::read_u16(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = bytes.data() + pos;
      data_size = chunk_size;
      break;
    }
    pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError(path + " has no fmt chunk");
  if (data_ptr == nullptr) throw FormatError(path + " has no data chunk");
  if (channels != 1) {
    throw FormatError(path + " has " + std::to_string(channels) +
                      " channels; only mono is supported");
  }
  const bool pcm16 = (audio_format == 1 && bits == 16);
  const bool float32 = (audio_format == 3 && bits == 32);
  if (!pcm16 && !float32) {
    throw FormatError(path + " uses an unsupported encoding (format " +
                      std::to_string(audio_format) + ", " +
                      std::to_string(bits) + " bits)");
  }

  Waveform w;
  w.sample_rate_hz = static_cast<int>(sample_rate);
  if (pcm16) {
    if (data_size % 2 != 0) throw FormatError(path + " has odd PCM16 payload");
    const std::size_t n = data_size / 2;
    if (n == 0) throw FormatError(path + " holds zero samples");
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::int16_t v;
      std::memcpy(&v, data_ptr + 2 * i, 2);
      w.samples[i] = static_cast<float>(v) / 32768.0f;
    }
  } else {
    if (data_size % 4 != 0) throw FormatError(path + " has odd float payload");
    const std::size_t n = data_size / 4;
    if (n == 0) throw FormatError(path + " holds zero samples");
    w.samples.resize(n);
    std::memcpy(w.samples.data(), data_ptr, data_size);
  }
  validate(w, path);
  return w;
}

// Writes a mono WAV file. PCM16 rounds half away from zero and clamps to
// [-32768, 32767]; float32 stores the samples bit-exactly.
inline void write_wav(const Waveform& w, const std::string& path,
                      WavEncoding encoding) {
  validate(w, "waveform for " + path);

  std::string payload;
  std::uint16_t audio_format, bits;
  if (encoding == WavEncoding::kPcm16) {
    audio_format = 1;
    bits = 16;
    payload.reserve(w.samples.size() * 2);
    for (float s : w.samples) {
      long q = std::lround(static_cast<double>(s) * 32768.0);
      if (q > 32767) q = 32767;
      if (q < -32768) q = -32768;
      wav_detail::put_u16(payload,
                          static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
  } else {
    audio_format = 3;
    bits = 32;
    payload.resize(w.samples.size() * 4);
    std::memcpy(payload.data(), w.samples.data(), payload.size());
  }

  const std::uint32_t data_size = static_cast<std::uint32_t>(payload.size());
  const std::uint16_t block_align = static_cast<std::uint16_t>(bits / 8);
  std::string out;
  out.reserve(44 + payload.size());
  out.append("RIFF");
  wav_detail::put_u32(out, 36 + data_size);
  out.append("WAVE");
  out.append("fmt ");
  wav_detail::put_u32(out, 16);
  wav_detail::put_u16(out, audio_format);
  wav_detail::put_u16(out, 1);  // mono
  wav_detail::put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  wav_detail::put_u32(out,
                      static_cast<std::uint32_t>(w.sample_rate_hz) * block_align);
  wav_detail::put_u16(out, block_align);
  wav_detail::put_u16(out, bits);
  out.append("data");
  wav_detail::put_u32(out, data_size);
  out.append(payload);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failure on " + path);
}

}  // namespace lc4sv

#endif  // LC4SV_WAV_IO_HPP_
