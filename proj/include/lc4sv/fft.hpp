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

#ifndef LC4SV_FFT_HPP_
#define LC4SV_FFT_HPP_

#include <complex>
#include <map>
#include <numbers>
#include <vector>

#include "lc4sv/errors.hpp"

namespace lc4sv {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace fft_detail {

// Precomputed bit-reversal permutation and twiddle factors for one size.
struct Plan {
  int n = 0;
  std::vector<int> bitrev;
  std::vector<double> wre, wim;  // concatenated per stage: half(len) entries
};

inline Plan make_plan(int n) {
  Plan p;
  p.n = n;
  p.bitrev.resize(n);
  int j = 0;
  for (int i = 1; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    p.bitrev[i] = j;
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len / 2;
    for (int k = 0; k < half; ++k) {
      const double ang = -2.0 * std::numbers::pi * k / len;
      p.wre.push_back(std::cos(ang));
      p.wim.push_back(std::sin(ang));
    }
  }
  return p;
}

// Plans are immutable once built; a thread-local cache avoids locking in the
// evaluation fan-out.
inline const Plan& plan_for(int n) {
  thread_local std::map<int, Plan> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_plan(n)).first;
  return it->second;
}

// Iterative radix-2 transform on split re/im arrays, unnormalized.
inline void fft_split(double* re, double* im, int n, bool invert) {
  const Plan& p = plan_for(n);
  for (int i = 1; i < n; ++i) {
    const int j = p.bitrev[i];
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  std::size_t toff = 0;
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len / 2;
    const double* wr = &p.wre[toff];
    const double* wi = &p.wim[toff];
    for (int i = 0; i < n; i += len) {
      for (int k = 0; k < half; ++k) {
        const double twr = wr[k];
        const double twi = invert ? -wi[k] : wi[k];
        const double ar = re[i + k], ai = im[i + k];
        const double br = re[i + k + half], bi = im[i + k + half];
        const double vr = br * twr - bi * twi;
        const double vi = br * twi + bi * twr;
        re[i + k] = ar + vr;
        im[i + k] = ai + vi;
        re[i + k + half] = ar - vr;
        im[i + k + half] = ai - vi;
      }
    }
    toff += half;
  }
}

struct Scratch {
  std::vector<double> re, im;
  void resize(int n) {
    if (static_cast<int>(re.size()) < n) {
      re.resize(n);
      im.resize(n);
    }
  }
};

inline Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace fft_detail

inline void fft_pow2_split(double* re, double* im, int n, bool invert) {
  if (!is_pow2(static_cast<std::size_t>(n))) {
    throw InternalError("fft needs a power-of-two size");
  }
  fft_detail::fft_split(re, im, n, invert);
}

// Unnormalized DFT for any size; radix-2 when possible, direct otherwise.
// The direct path only runs for the odd sizes used in tests.
inline std::vector<std::complex<double>> dft(
    std::vector<std::complex<double>> a, bool invert) {
  const std::size_t n = a.size();
  if (n == 0) throw InternalError("dft of empty input");
  if (is_pow2(n)) {
    std::vector<double> re(n), im(n);
    for (std::size_t i = 0; i < n; ++i) {
      re[i] = a[i].real();
      im[i] = a[i].imag();
    }
    fft_detail::fft_split(re.data(), im.data(), static_cast<int>(n), invert);
    for (std::size_t i = 0; i < n; ++i) a[i] = {re[i], im[i]};
    return a;
  }
  std::vector<std::complex<double>> out(n);
  const double sign = invert ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = sign * 2.0 * std::numbers::pi *
                         static_cast<double>(k) * static_cast<double>(t) /
                         static_cast<double>(n);
      acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

inline int onesided_bins(int fft_size) { return fft_size / 2 + 1; }

namespace fft_detail {

inline void full_dft_real_input(const double* x, int n, Scratch& s) {
  s.resize(n);
  for (int i = 0; i < n; ++i) {
    s.re[i] = x[i];
    s.im[i] = 0.0;
  }
  if (is_pow2(static_cast<std::size_t>(n))) {
    fft_split(s.re.data(), s.im.data(), n, /*invert=*/false);
  } else {
    std::vector<std::complex<double>> buf(n);
    for (int i = 0; i < n; ++i) buf[i] = {x[i], 0.0};
    buf = dft(std::move(buf), false);
    for (int i = 0; i < n; ++i) {
      s.re[i] = buf[i].real();
      s.im[i] = buf[i].imag();
    }
  }
}

}  // namespace fft_detail

// Forward one-sided DFT of a real frame: bins k = 0 .. fft_size/2.
inline void rfft_frame(const double* x, int fft_size,
                       std::complex<double>* out) {
  fft_detail::Scratch& s = fft_detail::scratch();
  fft_detail::full_dft_real_input(x, fft_size, s);
  const int bins = onesided_bins(fft_size);
  for (int k = 0; k < bins; ++k) out[k] = {s.re[k], s.im[k]};
}

// Same transform, split output (no std::complex traffic in hot paths).
inline void rfft_frame_split(const double* x, int fft_size, double* out_re,
                             double* out_im) {
  fft_detail::Scratch& s = fft_detail::scratch();
  fft_detail::full_dft_real_input(x, fft_size, s);
  const int bins = onesided_bins(fft_size);
  for (int k = 0; k < bins; ++k) {
    out_re[k] = s.re[k];
    out_im[k] = s.im[k];
  }
}

// Adjoint of the one-sided forward transform: given cotangents for the
// (re, im) bins, accumulates the waveform cotangent. Equals the real part of
// the unnormalized inverse transform of the zero-extended cotangents.
inline void rfft_adjoint_frame(const double* re_cot, const double* im_cot,
                               int fft_size, double* x_adj) {
  const int bins = onesided_bins(fft_size);
  fft_detail::Scratch& s = fft_detail::scratch();
  s.resize(fft_size);
  for (int k = 0; k < bins; ++k) {
    s.re[k] = re_cot[k];
    s.im[k] = im_cot[k];
  }
  for (int k = bins; k < fft_size; ++k) {
    s.re[k] = 0.0;
    s.im[k] = 0.0;
  }
  if (is_pow2(static_cast<std::size_t>(fft_size))) {
    fft_detail::fft_split(s.re.data(), s.im.data(), fft_size, /*invert=*/true);
  } else {
    std::vector<std::complex<double>> buf(fft_size);
    for (int k = 0; k < fft_size; ++k) buf[k] = {s.re[k], s.im[k]};
    buf = dft(std::move(buf), true);
    for (int k = 0; k < fft_size; ++k) s.re[k] = buf[k].real();
  }
  for (int n = 0; n < fft_size; ++n) x_adj[n] += s.re[n];
}

// Real inverse of a one-sided spectrum (even fft_size). The imaginary parts
// of the DC and Nyquist bins are ignored, matching what a real forward
// transform produces.
inline void irfft_frame(const double* re, const double* im, int fft_size,
                        double* out) {
  if (fft_size % 2 != 0) throw InternalError("irfft_frame needs even size");
  const int bins = onesided_bins(fft_size);
  fft_detail::Scratch& s = fft_detail::scratch();
  s.resize(fft_size);
  s.re[0] = re[0];
  s.im[0] = 0.0;
  s.re[fft_size / 2] = re[bins - 1];
  s.im[fft_size / 2] = 0.0;
  for (int k = 1; k < fft_size / 2; ++k) {
    s.re[k] = re[k];
    s.im[k] = im[k];
    s.re[fft_size - k] = re[k];
    s.im[fft_size - k] = -im[k];
  }
  fft_pow2_split(s.re.data(), s.im.data(), fft_size, /*invert=*/true);
  const double inv_n = 1.0 / static_cast<double>(fft_size);
  for (int n = 0; n < fft_size; ++n) out[n] = s.re[n] * inv_n;
}

// Adjoint of irfft_frame: a forward transform of the output cotangent with
// per-bin weights 1/N at DC and Nyquist, 2/N elsewhere.
inline void irfft_adjoint_frame(const double* out_cot, int fft_size,
                                double* re_adj, double* im_adj) {
  if (fft_size % 2 != 0) throw InternalError("irfft_adjoint needs even size");
  const int bins = onesided_bins(fft_size);
  fft_detail::Scratch& s = fft_detail::scratch();
  fft_detail::full_dft_real_input(out_cot, fft_size, s);
  const double inv_n = 1.0 / static_cast<double>(fft_size);
  for (int k = 0; k < bins; ++k) {
    const double w = (k == 0 || k == bins - 1) ? inv_n : 2.0 * inv_n;
    re_adj[k] += w * s.re[k];
    // DC and Nyquist imaginary parts do not participate in the forward map.
    if (k != 0 && k != bins - 1) im_adj[k] += w * s.im[k];
  }
}

}  // namespace lc4sv

#endif  // LC4SV_FFT_HPP_
