// Copyright 2026 The lsopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lsopt/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lsopt {

namespace {

void ensure_buffers(AdamState& state, std::span<const Parameter> params) {
  if (state.second_moment.size() == params.size()) return;
  if (!state.second_moment.empty()) {
    throw std::logic_error("adam state is bound to a different parameter list");
  }
  state.first_moment.resize(params.size());
  state.second_moment.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.first_moment[i].assign(params[i].value.size(), 0.0);
    state.second_moment[i].assign(params[i].value.size(), 0.0);
  }
}

}  // namespace

std::vector<std::vector<double>> adam_direction(AdamState& state,
                                                std::span<const Parameter> params,
                                                bool use_momentum) {
  ensure_buffers(state, params);
  ++state.step_count;
  const double beta1 = use_momentum ? state.beta1 : 0.0;
  const double beta2 = state.beta2;
  const double m_correction = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
  const double v_correction = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));

  std::vector<std::vector<double>> direction(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = params[i].value.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    auto& d = direction[i];
    d.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
      const double v_hat = v[j] / v_correction;
      double m_hat;
      if (use_momentum) {
        m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
        m_hat = m[j] / m_correction;
      } else {
        m_hat = g[j];
      }
      d[j] = -m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
  return direction;
}

std::vector<std::vector<double>> bias_corrected_second_moment(const AdamState& state) {
  if (state.step_count < 1) {
    throw std::logic_error("bias_corrected_second_moment: no step has been taken");
  }
  const double v_correction = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  std::vector<std::vector<double>> v_hat(state.second_moment.size());
  for (std::size_t i = 0; i < state.second_moment.size(); ++i) {
    const auto& v = state.second_moment[i];
    v_hat[i].resize(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) v_hat[i][j] = v[j] / v_correction;
  }
  return v_hat;
}

double WarmupCosineSchedule::lr_at(long step) const {
  if (total_steps <= 0) throw std::invalid_argument("schedule: total_steps must be positive");
  if (step < 0) throw std::invalid_argument("schedule: negative step");
  const long warmup = std::lround(warmup_fraction * static_cast<double>(total_steps));
  if (step < warmup) {
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (step >= total_steps) return 0.0;
  const double progress = static_cast<double>(step - warmup) /
                          static_cast<double>(total_steps - warmup);
  return peak_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

}  // namespace lsopt
