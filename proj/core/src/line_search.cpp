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

#include "lsopt/line_search.hpp"

#include <cmath>
#include <stdexcept>

namespace lsopt {

void LineSearchConfig::validate() const {
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) {
    throw std::invalid_argument("line search: sufficient_decrease must be in (0,1)");
  }
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("line search: backtrack_factor must be in (0,1)");
  }
  if (!(max_step_size > 0.0)) {
    throw std::invalid_argument("line search: max_step_size must be positive");
  }
  if (max_backtracks < 1) {
    throw std::invalid_argument("line search: max_backtracks must be >= 1");
  }
  if (batch_size < 1) throw std::invalid_argument("line search: batch_size must be >= 1");
  if (samples_per_doubling < batch_size) {
    throw std::invalid_argument("line search: samples_per_doubling must be >= batch_size");
  }
}

double reset_step_size(double previous, const LineSearchConfig& cfg) {
  if (!(previous > 0.0)) {
    throw std::invalid_argument("reset_step_size: previous step must be positive");
  }
  cfg.validate();
  const double exponent =
      static_cast<double>(cfg.batch_size) / static_cast<double>(cfg.samples_per_doubling);
  return std::min(previous * std::pow(2.0, exponent), cfg.max_step_size);
}

double sufficient_decrease_sgd(std::span<const Parameter> params) {
  double total = 0.0;
  for (const Parameter& p : params) {
    if (!p.value.grad_defined()) {
      throw std::logic_error("sufficient_decrease_sgd: parameter '" + p.name +
                             "' has no gradient");
    }
    for (double g : p.value.grad()) total += g * g;
  }
  return total;
}

double sufficient_decrease_adam(std::span<const Parameter> params,
                                std::span<const std::vector<double>> v_hat, double eps) {
  if (v_hat.size() != params.size()) {
    throw std::invalid_argument("sufficient_decrease_adam: need one v_hat buffer per parameter");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = params[i].value.grad();
    const auto& v = v_hat[i];
    if (v.size() != g.size()) {
      throw std::invalid_argument("sufficient_decrease_adam: v_hat shape mismatch for '" +
                                  params[i].name + "'");
    }
    for (std::size_t j = 0; j < g.size(); ++j) {
      total += g[j] * g[j] / (std::sqrt(v[j]) + eps);
    }
  }
  return total;
}

LineSearchOutcome backtrack(const std::function<double(double)>& loss_at, double f_old,
                            double initial_step, double decrease_term,
                            const LineSearchConfig& cfg) {
  cfg.validate();
  if (!(initial_step > 0.0)) {
    throw std::invalid_argument("backtrack: initial_step must be positive");
  }
  if (decrease_term < 0.0) {
    throw std::invalid_argument("backtrack: decrease_term must be non-negative");
  }

  LineSearchOutcome out;
  if (decrease_term == 0.0) {
    out.step_size = initial_step;
    out.backtracks = 0;
    out.accepted = true;
    out.f_new = f_old;
    return out;
  }

  double step = initial_step;
  double f_try = 0.0;
  for (int shrinks = 0; shrinks <= cfg.max_backtracks; ++shrinks) {
    f_try = loss_at(step);
    const double required = f_old - cfg.sufficient_decrease * step * decrease_term;
    if (std::isfinite(f_try) && f_try <= required) {
      out.step_size = step;
      out.backtracks = shrinks;
      out.accepted = true;
      out.f_new = f_try;
      return out;
    }
    if (shrinks == cfg.max_backtracks) break;
    step *= cfg.backtrack_factor;
  }
  out.step_size = step;
  out.backtracks = cfg.max_backtracks;
  out.accepted = false;
  out.f_new = f_try;
  out.nonfinite_loss = !std::isfinite(f_try);
  return out;
}

}  // namespace lsopt
