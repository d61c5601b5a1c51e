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

#ifndef LC4SV_GRAPH_HPP_
#define LC4SV_GRAPH_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lc4sv/errors.hpp"
#include "lc4sv/fft.hpp"
#include "lc4sv/stft.hpp"

namespace lc4sv {

// Dense row-major tensor of doubles. Training arithmetic is 64-bit
// throughout; checkpoints narrow to 32-bit on save.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(numel_of(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    if (v.size() != numel_of(shape)) {
      throw ShapeError("tensor data does not match its shape");
    }
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ShapeError("tensor dimensions must be positive");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  std::size_t numel() const { return v.size(); }
  int dim(int i) const { return shape[i]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline void require_finite(const Tensor& t, const char* what) {
  for (double x : t.v) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + " is not finite");
  }
}

using NodeId = std::int32_t;

// Eager reverse-mode tape. Values are computed when an op is recorded, so
// creation order is already a topological order; backward() walks the tape
// in reverse. Subgraphs that cannot reach a parameter are skipped during the
// sweep (needs_grad pruning), which keeps constant branches cheap. Nodes are
// addressed by index because the node vector reallocates while growing.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId constant(Tensor t) { return add_leaf(std::move(t), false); }
  NodeId parameter(Tensor t) { return add_leaf(std::move(t), true); }

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }
  bool is_parameter(NodeId id) const { return nodes_[id].is_param; }
  bool needs_grad(NodeId id) const { return nodes_[id].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) with `seed` (1/batch_size lets callers accumulate
  // mean-gradients across per-sample graphs) and sweeps the tape backwards.
  void backward(NodeId loss, double seed = 1.0) {
    if (nodes_[loss].value.numel() != 1) {
      throw ShapeError("backward needs a scalar loss node");
    }
    for (auto& n : nodes_) {
      n.grad.shape = n.value.shape;
      n.grad.v.assign(n.value.numel(), 0.0);
    }
    nodes_[loss].grad.v[0] = seed;
    for (std::int32_t i = static_cast<std::int32_t>(nodes_.size()) - 1; i >= 0;
         --i) {
      if (nodes_[i].needs_grad && nodes_[i].backward_fn) nodes_[i].backward_fn();
    }
  }

  // ---- elementwise ----------------------------------------------------

  NodeId add(NodeId a, NodeId b) {
    require_same(a, b, "add");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] += value(b).v[i];
    return add_node(std::move(out), {a, b}, [this, a, b](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += grad_ref(y).v[i];
        grad_ref(b).v[i] += grad_ref(y).v[i];
      }
    });
  }

  NodeId sub(NodeId a, NodeId b) {
    require_same(a, b, "sub");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] -= value(b).v[i];
    return add_node(std::move(out), {a, b}, [this, a, b](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += grad_ref(y).v[i];
        grad_ref(b).v[i] -= grad_ref(y).v[i];
      }
    });
  }

  NodeId mul(NodeId a, NodeId b) {
    require_same(a, b, "mul");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] *= value(b).v[i];
    return add_node(std::move(out), {a, b}, [this, a, b](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += grad_ref(y).v[i] * value(b).v[i];
        grad_ref(b).v[i] += grad_ref(y).v[i] * value(a).v[i];
      }
    });
  }

  NodeId div(NodeId a, NodeId b) {
    require_same(a, b, "div");
    Tensor out = value(a);
    for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] /= value(b).v[i];
    return add_node(std::move(out), {a, b}, [this, a, b](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        const double bv = value(b).v[i];
        grad_ref(a).v[i] += grad_ref(y).v[i] / bv;
        grad_ref(b).v[i] -= grad_ref(y).v[i] * value(a).v[i] / (bv * bv);
      }
    });
  }

  NodeId scale(NodeId a, double c) {
    Tensor out = value(a);
    for (double& x : out.v) x *= c;
    return add_node(std::move(out), {a}, [this, a, c](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += c * grad_ref(y).v[i];
      }
    });
  }

  NodeId add_scalar(NodeId a, double c) {
    Tensor out = value(a);
    for (double& x : out.v) x += c;
    return add_node(std::move(out), {a}, [this, a](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += grad_ref(y).v[i];
      }
    });
  }

  NodeId log(NodeId a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::log(x);
    return add_node(std::move(out), {a}, [this, a](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += grad_ref(y).v[i] / value(a).v[i];
      }
    });
  }

  NodeId exp(NodeId a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::exp(x);
    return add_node(std::move(out), {a}, [this, a](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += grad_ref(y).v[i] * value(y).v[i];
      }
    });
  }

  NodeId sqrt(NodeId a) {
    Tensor out = value(a);
    for (double& x : out.v) x = std::sqrt(x);
    return add_node(std::move(out), {a}, [this, a](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        const double root = value(y).v[i];
        if (root > 0.0) grad_ref(a).v[i] += grad_ref(y).v[i] * 0.5 / root;
      }
    });
  }

  NodeId square(NodeId a) {
    Tensor out = value(a);
    for (double& x : out.v) x *= x;
    return add_node(std::move(out), {a}, [this, a](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        grad_ref(a).v[i] += 2.0 * value(a).v[i] * grad_ref(y).v[i];
      }
    });
  }

  NodeId leaky_relu(NodeId a, double slope = 0.01) {
    Tensor out = value(a);
    for (double& x : out.v) x = (x >= 0.0) ? x : slope * x;
    return add_node(std::move(out), {a}, [this, a, slope](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        const double s = (value(a).v[i] >= 0.0) ? 1.0 : slope;
        grad_ref(a).v[i] += s * grad_ref(y).v[i];
      }
    });
  }

  NodeId sigmoid(NodeId a) {
    Tensor out = value(a);
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    return add_node(std::move(out), {a}, [this, a](NodeId y) {
      for (std::size_t i = 0; i < grad_ref(y).numel(); ++i) {
        const double s = value(y).v[i];
        grad_ref(a).v[i] += grad_ref(y).v[i] * s * (1.0 - s);
      }
    });
  }

  // ---- reductions ------------------------------------------------------

  NodeId sum(NodeId a) {
    double acc = 0.0;
    for (double x : value(a).v) acc += x;
    return add_node(Tensor::scalar(acc), {a}, [this, a](NodeId y) {
      const double g = grad_ref(y).v[0];
      for (double& gx : grad_ref(a).v) gx += g;
    });
  }

  NodeId mean(NodeId a) {
    const double inv = 1.0 / static_cast<double>(value(a).numel());
    double acc = 0.0;
    for (double x : value(a).v) acc += x;
    return add_node(Tensor::scalar(acc * inv), {a}, [this, a, inv](NodeId y) {
      const double g = grad_ref(y).v[0] * inv;
      for (double& gx : grad_ref(a).v) gx += g;
    });
  }

  // Mean of absolute values; subgradient 0 at exact zeros.
  NodeId mean_abs(NodeId a) {
    const double inv = 1.0 / static_cast<double>(value(a).numel());
    double acc = 0.0;
    for (double x : value(a).v) acc += std::fabs(x);
    return add_node(Tensor::scalar(acc * inv), {a}, [this, a, inv](NodeId y) {
      const double g = grad_ref(y).v[0] * inv;
      for (std::size_t i = 0; i < value(a).numel(); ++i) {
        const double x = value(a).v[i];
        grad_ref(a).v[i] += g * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0));
      }
    });
  }

  NodeId sum_sq(NodeId a) {
    double acc = 0.0;
    for (double x : value(a).v) acc += x * x;
    return add_node(Tensor::scalar(acc), {a}, [this, a](NodeId y) {
      const double g = grad_ref(y).v[0];
      for (std::size_t i = 0; i < value(a).numel(); ++i) {
        grad_ref(a).v[i] += 2.0 * value(a).v[i] * g;
      }
    });
  }

  NodeId dot(NodeId a, NodeId b) {
    require_same(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < value(a).numel(); ++i) {
      acc += value(a).v[i] * value(b).v[i];
    }
    return add_node(Tensor::scalar(acc), {a, b}, [this, a, b](NodeId y) {
      const double g = grad_ref(y).v[0];
      for (std::size_t i = 0; i < value(a).numel(); ++i) {
        grad_ref(a).v[i] += g * value(b).v[i];
        grad_ref(b).v[i] += g * value(a).v[i];
      }
    });
  }

  // ---- shaping ---------------------------------------------------------

  NodeId concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw ShapeError("concat of nothing");
    std::size_t total = 0;
    for (NodeId p : parts) total += value(p).numel();
    Tensor out({static_cast<int>(total)});
    std::size_t off = 0;
    for (NodeId p : parts) {
      for (double x : value(p).v) out.v[off++] = x;
    }
    return add_node(std::move(out), parts, [this, parts](NodeId y) {
      std::size_t pos = 0;
      for (NodeId p : parts) {
        for (std::size_t i = 0; i < value(p).numel(); ++i, ++pos) {
          grad_ref(p).v[i] += grad_ref(y).v[pos];
        }
      }
    });
  }

  NodeId slice(NodeId a, std::size_t offset, std::size_t len) {
    if (offset + len > value(a).numel()) throw ShapeError("slice out of range");
    Tensor out({static_cast<int>(len)});
    for (std::size_t i = 0; i < len; ++i) out.v[i] = value(a).v[offset + i];
    return add_node(std::move(out), {a}, [this, a, offset, len](NodeId y) {
      for (std::size_t i = 0; i < len; ++i) {
        grad_ref(a).v[offset + i] += grad_ref(y).v[i];
      }
    });
  }

  // ---- neural-net ops ----------------------------------------------------

  // y = W x + b with W {m, n}, x {n}, b {m}.
  NodeId dense(NodeId x, NodeId w, NodeId b) {
    const Tensor& wv = value(w);
    const Tensor& xv = value(x);
    const Tensor& bv = value(b);
    if (wv.shape.size() != 2) throw ShapeError("dense weight must be 2-D");
    const int m = wv.dim(0), n = wv.dim(1);
    if (static_cast<int>(xv.numel()) != n) {
      throw ShapeError("dense input length " + std::to_string(xv.numel()) +
                       " does not match weight columns " + std::to_string(n));
    }
    if (static_cast<int>(bv.numel()) != m) {
      throw ShapeError("dense bias length does not match weight rows");
    }
    Tensor out({m});
    for (int j = 0; j < m; ++j) {
      double acc = bv.v[j];
      const double* row = &wv.v[static_cast<std::size_t>(j) * n];
      for (int k = 0; k < n; ++k) acc += row[k] * xv.v[k];
      out.v[j] = acc;
    }
    return add_node(std::move(out), {x, w, b}, [this, x, w, b, m, n](NodeId y) {
      const Tensor& gy = grad_ref(y);
      for (int j = 0; j < m; ++j) {
        const double gj = gy.v[j];
        if (gj == 0.0) continue;
        const double* row = &value(w).v[static_cast<std::size_t>(j) * n];
        double* wrow = &grad_ref(w).v[static_cast<std::size_t>(j) * n];
        for (int k = 0; k < n; ++k) {
          grad_ref(x).v[k] += row[k] * gj;
          wrow[k] += value(x).v[k] * gj;
        }
        grad_ref(b).v[j] += gj;
      }
    });
  }

  // Y {F, m} = X {F, n} W^T + b, the dense layer applied to every row.
  NodeId rows_dense(NodeId x, NodeId w, NodeId b) {
    const Tensor& xv = value(x);
    const Tensor& wv = value(w);
    const Tensor& bv = value(b);
    if (xv.shape.size() != 2 || wv.shape.size() != 2 ||
        xv.dim(1) != wv.dim(1) ||
        static_cast<int>(bv.numel()) != wv.dim(0)) {
      throw ShapeError("rows_dense shape mismatch");
    }
    const int frames = xv.dim(0), n = xv.dim(1), m = wv.dim(0);
    Tensor out({frames, m});
    for (int f = 0; f < frames; ++f) {
      const double* xr = &xv.v[static_cast<std::size_t>(f) * n];
      double* yr = &out.v[static_cast<std::size_t>(f) * m];
      for (int j = 0; j < m; ++j) {
        const double* row = &wv.v[static_cast<std::size_t>(j) * n];
        double acc = bv.v[j];
        for (int k = 0; k < n; ++k) acc += row[k] * xr[k];
        yr[j] = acc;
      }
    }
    return add_node(std::move(out), {x, w, b},
                    [this, x, w, b, frames, n, m](NodeId y) {
      const bool want_x = nodes_[x].needs_grad;
      for (int f = 0; f < frames; ++f) {
        const double* gy = &grad_ref(y).v[static_cast<std::size_t>(f) * m];
        const double* xr = &value(x).v[static_cast<std::size_t>(f) * n];
        double* gx = &grad_ref(x).v[static_cast<std::size_t>(f) * n];
        for (int j = 0; j < m; ++j) {
          const double g = gy[j];
          if (g == 0.0) continue;
          const double* wrow = &value(w).v[static_cast<std::size_t>(j) * n];
          double* gw = &grad_ref(w).v[static_cast<std::size_t>(j) * n];
          if (want_x) {
            for (int k = 0; k < n; ++k) {
              gx[k] += wrow[k] * g;
              gw[k] += xr[k] * g;
            }
          } else {
            for (int k = 0; k < n; ++k) gw[k] += xr[k] * g;
          }
          grad_ref(b).v[j] += g;
        }
      }
    });
  }

  // Y {F, B} = X {F, K} times M^T with a constant matrix M {B, K}.
  NodeId rows_matmul(NodeId x, std::shared_ptr<const Tensor> m) {
    const Tensor& xv = value(x);
    if (xv.shape.size() != 2 || m->shape.size() != 2 ||
        xv.dim(1) != m->dim(1)) {
      throw ShapeError("rows_matmul shape mismatch");
    }
    const int frames = xv.dim(0), k_in = xv.dim(1), bands = m->dim(0);
    Tensor out({frames, bands});
    for (int f = 0; f < frames; ++f) {
      const double* xr = &xv.v[static_cast<std::size_t>(f) * k_in];
      double* yr = &out.v[static_cast<std::size_t>(f) * bands];
      for (int b = 0; b < bands; ++b) {
        const double* mr = &m->v[static_cast<std::size_t>(b) * k_in];
        double acc = 0.0;
        for (int k = 0; k < k_in; ++k) acc += mr[k] * xr[k];
        yr[b] = acc;
      }
    }
    return add_node(std::move(out), {x},
                    [this, x, m, frames, k_in, bands](NodeId y) {
      for (int f = 0; f < frames; ++f) {
        const double* gy = &grad_ref(y).v[static_cast<std::size_t>(f) * bands];
        double* gx = &grad_ref(x).v[static_cast<std::size_t>(f) * k_in];
        for (int b = 0; b < bands; ++b) {
          const double g = gy[b];
          if (g == 0.0) continue;
          const double* mr = &m->v[static_cast<std::size_t>(b) * k_in];
          for (int k = 0; k < k_in; ++k) gx[k] += mr[k] * g;
        }
      }
    });
  }

  NodeId mean_rows(NodeId x) {
    const Tensor& xv = value(x);
    if (xv.shape.size() != 2) throw ShapeError("mean_rows needs a 2-D input");
    const int frames = xv.dim(0), cols = xv.dim(1);
    Tensor out({cols});
    for (int f = 0; f < frames; ++f) {
      for (int c = 0; c < cols; ++c) {
        out.v[c] += xv.v[static_cast<std::size_t>(f) * cols + c];
      }
    }
    const double inv = 1.0 / frames;
    for (double& v : out.v) v *= inv;
    return add_node(std::move(out), {x}, [this, x, frames, cols, inv](NodeId y) {
      for (int f = 0; f < frames; ++f) {
        for (int c = 0; c < cols; ++c) {
          grad_ref(x).v[static_cast<std::size_t>(f) * cols + c] +=
              inv * grad_ref(y).v[c];
        }
      }
    });
  }

  // Y[f, c] = X[f, c] - m[c].
  NodeId rows_sub_colvec(NodeId x, NodeId m) {
    const Tensor& xv = value(x);
    const Tensor& mv = value(m);
    if (xv.shape.size() != 2 || static_cast<int>(mv.numel()) != xv.dim(1)) {
      throw ShapeError("rows_sub_colvec shape mismatch");
    }
    const int frames = xv.dim(0), cols = xv.dim(1);
    Tensor out = xv;
    for (int f = 0; f < frames; ++f) {
      for (int c = 0; c < cols; ++c) {
        out.v[static_cast<std::size_t>(f) * cols + c] -= mv.v[c];
      }
    }
    return add_node(std::move(out), {x, m}, [this, x, m, frames, cols](NodeId y) {
      for (int f = 0; f < frames; ++f) {
        for (int c = 0; c < cols; ++c) {
          const double g = grad_ref(y).v[static_cast<std::size_t>(f) * cols + c];
          grad_ref(x).v[static_cast<std::size_t>(f) * cols + c] += g;
          grad_ref(m).v[c] -= g;
        }
      }
    });
  }

  // ---- STFT ops ----------------------------------------------------------

  // Frames a waveform node {T}: conceptually pads `pad` zeros on both sides,
  // applies the Hann window and zero-pads each frame to fft_size.
  // Output {F, fft_size}.
  NodeId frame_window(NodeId wave, const StftConfig& cfg, int pad,
                      int num_frames) {
    validate(cfg);
    const Tensor& xv = value(wave);
    const int t_len = static_cast<int>(xv.numel());
    if (num_frames <= 0) throw ShapeError("frame_window with no frames");
    auto window = std::make_shared<const std::vector<double>>(
        hann_window(cfg.win_length));
    Tensor out({num_frames, cfg.fft_size});
    for (int f = 0; f < num_frames; ++f) {
      double* row = &out.v[static_cast<std::size_t>(f) * cfg.fft_size];
      const long start = static_cast<long>(f) * cfg.hop_size - pad;
      for (int i = 0; i < cfg.win_length; ++i) {
        const long s = start + i;
        row[i] = (s >= 0 && s < t_len) ? (*window)[i] * xv.v[s] : 0.0;
      }
    }
    const int hop = cfg.hop_size, win = cfg.win_length, fft = cfg.fft_size;
    return add_node(std::move(out), {wave},
                    [this, wave, window, hop, win, fft, pad, num_frames,
                     t_len](NodeId y) {
      for (int f = 0; f < num_frames; ++f) {
        const double* gr = &grad_ref(y).v[static_cast<std::size_t>(f) * fft];
        const long start = static_cast<long>(f) * hop - pad;
        for (int i = 0; i < win; ++i) {
          const long s = start + i;
          if (s >= 0 && s < t_len) grad_ref(wave).v[s] += (*window)[i] * gr[i];
        }
      }
    });
  }

  // One-sided DFT per frame. Input {F, fft}; output {F, 2K} with each row
  // holding re[0..K-1] then im[0..K-1].
  NodeId rfft_frames(NodeId frames) {
    const Tensor& xv = value(frames);
    if (xv.shape.size() != 2) throw ShapeError("rfft_frames needs 2-D input");
    const int nf = xv.dim(0), fft = xv.dim(1);
    const int bins = onesided_bins(fft);
    Tensor out({nf, 2 * bins});
    for (int f = 0; f < nf; ++f) {
      double* row = &out.v[static_cast<std::size_t>(f) * 2 * bins];
      rfft_frame_split(&xv.v[static_cast<std::size_t>(f) * fft], fft, row,
                       row + bins);
    }
    return add_node(std::move(out), {frames},
                    [this, frames, nf, fft, bins](NodeId y) {
      for (int f = 0; f < nf; ++f) {
        const double* gr = &grad_ref(y).v[static_cast<std::size_t>(f) * 2 * bins];
        rfft_adjoint_frame(gr, gr + bins, fft,
                           &grad_ref(frames).v[static_cast<std::size_t>(f) * fft]);
      }
    });
  }

  // |spectrum| from packed {F, 2K} -> {F, K}; gradient treated as zero at
  // exactly-zero magnitudes.
  NodeId magnitude(NodeId packed) {
    const Tensor& xv = value(packed);
    const int nf = xv.dim(0), bins = xv.dim(1) / 2;
    Tensor out({nf, bins});
    for (int f = 0; f < nf; ++f) {
      const double* row = &xv.v[static_cast<std::size_t>(f) * 2 * bins];
      for (int k = 0; k < bins; ++k) {
        out.v[static_cast<std::size_t>(f) * bins + k] =
            std::sqrt(row[k] * row[k] + row[bins + k] * row[bins + k]);
      }
    }
    return add_node(std::move(out), {packed}, [this, packed, nf, bins](NodeId y) {
      for (int f = 0; f < nf; ++f) {
        const double* row = &value(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        double* grow = &grad_ref(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        for (int k = 0; k < bins; ++k) {
          const double mag = value(y).v[static_cast<std::size_t>(f) * bins + k];
          if (mag <= 0.0) continue;
          const double g = grad_ref(y).v[static_cast<std::size_t>(f) * bins + k] / mag;
          grow[k] += g * row[k];
          grow[bins + k] += g * row[bins + k];
        }
      }
    });
  }

  // Power spectrum re^2 + im^2 from packed {F, 2K} -> {F, K}; smooth at 0.
  NodeId power(NodeId packed) {
    const Tensor& xv = value(packed);
    const int nf = xv.dim(0), bins = xv.dim(1) / 2;
    Tensor out({nf, bins});
    for (int f = 0; f < nf; ++f) {
      const double* row = &xv.v[static_cast<std::size_t>(f) * 2 * bins];
      for (int k = 0; k < bins; ++k) {
        out.v[static_cast<std::size_t>(f) * bins + k] =
            row[k] * row[k] + row[bins + k] * row[bins + k];
      }
    }
    return add_node(std::move(out), {packed}, [this, packed, nf, bins](NodeId y) {
      for (int f = 0; f < nf; ++f) {
        const double* row = &value(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        double* grow = &grad_ref(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        for (int k = 0; k < bins; ++k) {
          const double g = grad_ref(y).v[static_cast<std::size_t>(f) * bins + k];
          grow[k] += 2.0 * row[k] * g;
          grow[bins + k] += 2.0 * row[bins + k] * g;
        }
      }
    });
  }

  // Multiplies a real mask {F, K} onto a packed complex spectrum {F, 2K}.
  NodeId cmul_mask(NodeId mask, NodeId packed) {
    const Tensor& mv = value(mask);
    const Tensor& sv = value(packed);
    const int nf = mv.dim(0), bins = mv.dim(1);
    if (sv.dim(0) != nf || sv.dim(1) != 2 * bins) {
      throw ShapeError("cmul_mask shape mismatch");
    }
    Tensor out = sv;
    for (int f = 0; f < nf; ++f) {
      const double* mr = &mv.v[static_cast<std::size_t>(f) * bins];
      double* row = &out.v[static_cast<std::size_t>(f) * 2 * bins];
      for (int k = 0; k < bins; ++k) {
        row[k] *= mr[k];
        row[bins + k] *= mr[k];
      }
    }
    return add_node(std::move(out), {mask, packed},
                    [this, mask, packed, nf, bins](NodeId y) {
      const bool want_spec = nodes_[packed].needs_grad;
      for (int f = 0; f < nf; ++f) {
        const double* sr = &value(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        const double* mr = &value(mask).v[static_cast<std::size_t>(f) * bins];
        const double* gy = &grad_ref(y).v[static_cast<std::size_t>(f) * 2 * bins];
        double* gm = &grad_ref(mask).v[static_cast<std::size_t>(f) * bins];
        double* gs = &grad_ref(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        for (int k = 0; k < bins; ++k) {
          gm[k] += sr[k] * gy[k] + sr[bins + k] * gy[bins + k];
          if (want_spec) {
            gs[k] += mr[k] * gy[k];
            gs[bins + k] += mr[k] * gy[bins + k];
          }
        }
      }
    });
  }

  // Real inverse transform per frame: packed {F, 2K} -> {F, fft}.
  NodeId irfft_frames(NodeId packed, int fft) {
    const Tensor& xv = value(packed);
    const int nf = xv.dim(0), bins = xv.dim(1) / 2;
    if (bins != onesided_bins(fft)) throw ShapeError("irfft bin count mismatch");
    Tensor out({nf, fft});
    for (int f = 0; f < nf; ++f) {
      const double* row = &xv.v[static_cast<std::size_t>(f) * 2 * bins];
      irfft_frame(row, row + bins, fft,
                  &out.v[static_cast<std::size_t>(f) * fft]);
    }
    return add_node(std::move(out), {packed},
                    [this, packed, nf, fft, bins](NodeId y) {
      for (int f = 0; f < nf; ++f) {
        const double* gy = &grad_ref(y).v[static_cast<std::size_t>(f) * fft];
        double* gp = &grad_ref(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        irfft_adjoint_frame(gy, fft, gp, gp + bins);
      }
    });
  }

  // Weighted overlap-add: applies the synthesis window (length fft), sums
  // frames at hop intervals, divides by the precomputed window-square sum
  // and crops [pad, pad + out_len).
  NodeId overlap_add(NodeId frames, int hop, int pad, int out_len,
                     std::shared_ptr<const std::vector<double>> window,
                     std::shared_ptr<const std::vector<double>> denom) {
    const Tensor& xv = value(frames);
    const int nf = xv.dim(0), fft = xv.dim(1);
    if (static_cast<int>(window->size()) != fft) {
      throw ShapeError("overlap_add window length mismatch");
    }
    Tensor out({out_len});
    for (int f = 0; f < nf; ++f) {
      const double* row = &xv.v[static_cast<std::size_t>(f) * fft];
      const long base = static_cast<long>(f) * hop - pad;
      for (int i = 0; i < fft; ++i) {
        const long t = base + i;
        if (t >= 0 && t < out_len) {
          out.v[t] += (*window)[i] * row[i] / (*denom)[t];
        }
      }
    }
    return add_node(std::move(out), {frames},
                    [this, frames, hop, pad, out_len, window, denom, nf,
                     fft](NodeId y) {
      for (int f = 0; f < nf; ++f) {
        double* grow = &grad_ref(frames).v[static_cast<std::size_t>(f) * fft];
        const long base = static_cast<long>(f) * hop - pad;
        for (int i = 0; i < fft; ++i) {
          const long t = base + i;
          if (t >= 0 && t < out_len) {
            grow[i] += (*window)[i] * grad_ref(y).v[t] / (*denom)[t];
          }
        }
      }
    });
  }

  // Fused spectral losses over one packed spectrum against a constant target
  // magnitude. Output {2}: [ spectral convergence, mean log-magnitude ].
  // One pass forward, one pass backward, no intermediate tensors.
  NodeId stft_pair_loss(NodeId packed, std::shared_ptr<const Tensor> tgt_mag,
                        double log_eps) {
    const Tensor& xv = value(packed);
    const int nf = xv.dim(0), bins = xv.dim(1) / 2;
    if (tgt_mag->dim(0) != nf || tgt_mag->dim(1) != bins) {
      throw ShapeError("stft_pair_loss target shape mismatch");
    }
    double den = 0.0;
    for (double m : tgt_mag->v) den += m * m;
    if (den <= 0.0) {
      throw DegenerateInputError("spectral convergence target is silent");
    }
    auto mags = std::make_shared<std::vector<double>>(
        static_cast<std::size_t>(nf) * bins);
    double num = 0.0, log_acc = 0.0;
    for (int f = 0; f < nf; ++f) {
      const double* row = &xv.v[static_cast<std::size_t>(f) * 2 * bins];
      const double* tr = &tgt_mag->v[static_cast<std::size_t>(f) * bins];
      double* mr = &(*mags)[static_cast<std::size_t>(f) * bins];
      for (int k = 0; k < bins; ++k) {
        const double mag = std::sqrt(row[k] * row[k] + row[bins + k] * row[bins + k]);
        mr[k] = mag;
        const double d = mag - tr[k];
        num += d * d;
        log_acc += std::fabs(std::log(mag + log_eps) - std::log(tr[k] + log_eps));
      }
    }
    const double cells = static_cast<double>(nf) * bins;
    const double sc = std::sqrt(num) / std::sqrt(den);
    Tensor out({2}, {sc, log_acc / cells});
    return add_node(std::move(out), {packed},
                    [this, packed, tgt_mag, mags, nf, bins, den, num, log_eps,
                     cells](NodeId y) {
      const double g_sc = grad_ref(y).v[0];
      const double g_lm = grad_ref(y).v[1];
      const double sc_coeff =
          (num > 0.0) ? g_sc / (std::sqrt(num) * std::sqrt(den)) : 0.0;
      for (int f = 0; f < nf; ++f) {
        const double* row = &value(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        const double* tr = &tgt_mag->v[static_cast<std::size_t>(f) * bins];
        const double* mr = &(*mags)[static_cast<std::size_t>(f) * bins];
        double* gp = &grad_ref(packed).v[static_cast<std::size_t>(f) * 2 * bins];
        for (int k = 0; k < bins; ++k) {
          const double mag = mr[k];
          if (mag <= 0.0) continue;
          const double logdiff =
              std::log(mag + log_eps) - std::log(tr[k] + log_eps);
          const double sign = logdiff > 0.0 ? 1.0 : (logdiff < 0.0 ? -1.0 : 0.0);
          const double dmag = sc_coeff * (mag - tr[k]) +
                              g_lm * sign / (cells * (mag + log_eps));
          const double scale = dmag / mag;
          gp[k] += scale * row[k];
          gp[bins + k] += scale * row[bins + k];
        }
      }
    });
  }

  // Mean smooth-L1 between a target vector and a prediction vector:
  // e_i = target_i - pred_i, l = 0.5 e^2 if |e| < 1 else |e| - 0.5.
  NodeId smooth_l1_mean(NodeId pred, NodeId target) {
    require_same(pred, target, "smooth_l1_mean");
    const std::size_t n = value(pred).numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = value(target).v[i] - value(pred).v[i];
      acc += (std::fabs(e) < 1.0) ? 0.5 * e * e : std::fabs(e) - 0.5;
    }
    const double inv = 1.0 / static_cast<double>(n);
    return add_node(Tensor::scalar(acc * inv), {pred, target},
                    [this, pred, target, n, inv](NodeId y) {
      const double g = grad_ref(y).v[0] * inv;
      for (std::size_t i = 0; i < n; ++i) {
        const double e = value(target).v[i] - value(pred).v[i];
        const double de = (std::fabs(e) < 1.0) ? e : (e > 0.0 ? 1.0 : -1.0);
        grad_ref(pred).v[i] -= g * de;
        grad_ref(target).v[i] += g * de;
      }
    });
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backward_fn;
    bool is_param = false;
    bool needs_grad = false;
  };

  Tensor& grad_ref(NodeId id) { return nodes_[id].grad; }

  NodeId add_leaf(Tensor t, bool is_param) {
    Node n;
    n.value = std::move(t);
    n.is_param = is_param;
    n.needs_grad = is_param;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  template <typename Fn>
  NodeId add_node(Tensor out, const std::vector<NodeId>& parents, Fn&& body) {
    Node n;
    n.value = std::move(out);
    for (NodeId p : parents) n.needs_grad = n.needs_grad || nodes_[p].needs_grad;
    nodes_.push_back(std::move(n));
    const NodeId id = static_cast<NodeId>(nodes_.size() - 1);
    nodes_[id].backward_fn = [this, id, body = std::forward<Fn>(body)]() {
      body(id);
    };
    return id;
  }

  void require_same(NodeId a, NodeId b, const char* op) const {
    if (!value(a).same_shape(value(b))) {
      throw ShapeError(std::string(op) + " operands differ in shape");
    }
  }

  std::vector<Node> nodes_;
};

// cos(a, b) as a subgraph; rejects zero-norm inputs up front.
inline NodeId cosine_node(Graph& g, NodeId a, NodeId b) {
  double na = 0.0, nb = 0.0;
  for (double x : g.value(a).v) na += x * x;
  for (double x : g.value(b).v) nb += x * x;
  if (na <= 0.0 || nb <= 0.0) {
    throw DegenerateInputError("cosine similarity of a zero-norm vector");
  }
  NodeId num = g.dot(a, b);
  NodeId den = g.mul(g.sqrt(g.sum_sq(a)), g.sqrt(g.sum_sq(b)));
  return g.div(num, den);
}

// Plain (non-graph) cosine similarity between equal-length vectors.
inline double cosine_similarity(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine_similarity length mismatch");
  }
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) {
    throw DegenerateInputError("cosine similarity of a zero-norm vector");
  }
  return num / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace lc4sv

#endif  // LC4SV_GRAPH_HPP_
