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

#ifndef LC4SV_ADAM_HPP_
#define LC4SV_ADAM_HPP_

#include <cmath>
#include <string>
#include <unordered_map>

#include "lc4sv/errors.hpp"
#include "lc4sv/graph.hpp"

namespace lc4sv {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline void validate(const AdamConfig& cfg) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) {
    throw DomainError("Adam beta1 must lie in [0, 1)");
  }
  if (!(cfg.beta2 >= 0.8 && cfg.beta2 < 1.0)) {
    throw DomainError("Adam beta2 must lie in [0.8, 1.0)");
  }
  if (!(cfg.epsilon > 0.0)) throw DomainError("Adam epsilon must be positive");
}

// Per-tensor Adam accumulator state.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  long step_count = 0;
  AdamConfig config;

  explicit AdamState(const std::vector<int>& shape, AdamConfig cfg = {})
      : first_moment(shape), second_moment(shape), config(cfg) {
    validate(cfg);
  }
};

// One bias-corrected Adam step, in place.
inline void adam_update(Tensor& param, const Tensor& grad, AdamState& state,
                        double learning_rate) {
  if (!param.same_shape(grad) || !param.same_shape(state.first_moment)) {
    throw ShapeError("adam_update shape mismatch");
  }
  const AdamConfig& c = state.config;
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < param.numel(); ++i) {
    const double g = grad.v[i];
    double& m = state.first_moment.v[i];
    double& v = state.second_moment.v[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param.v[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

// Adam over a named collection of tensors; lazily creates per-tensor state.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) { validate(cfg_); }

  void step(const std::string& name, Tensor& param, const Tensor& grad,
            double learning_rate) {
    auto it = states_.find(name);
    if (it == states_.end()) {
      it = states_.emplace(name, AdamState(param.shape, cfg_)).first;
    }
    adam_update(param, grad, it->second, learning_rate);
  }

 private:
  AdamConfig cfg_;
  std::unordered_map<std::string, AdamState> states_;
};

}  // namespace lc4sv

#endif  // LC4SV_ADAM_HPP_
