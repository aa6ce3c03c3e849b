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

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lsopt/param.hpp"

namespace lsopt {

/// Armijo backtracking constants.
///
/// A trial step is accepted once
///   f(candidate) <= f_old - sufficient_decrease * step * decrease_term,
/// otherwise the step shrinks by backtrack_factor. Between searches the
/// last accepted step grows by 2^(batch_size / samples_per_doubling), so
/// it doubles once every samples_per_doubling/batch_size searches;
/// samples_per_doubling is normally the training-set size, which makes
/// the step double once per epoch. max_step_size caps that growth.
struct LineSearchConfig {
  double sufficient_decrease = 0.1;
  double backtrack_factor = 0.9;
  double max_step_size = 10.0;
  int max_backtracks = 100;
  long batch_size = 32;
  long samples_per_doubling = 0;  // must be set to >= batch_size before use

  void validate() const;  // throws std::invalid_argument
};

/// Result of one backtracking search.
struct LineSearchOutcome {
  double step_size = 0.0;  // accepted step, or last tried step on exhaustion
  int backtracks = 0;
  bool accepted = false;
  double f_new = 0.0;            // loss at step_size
  bool nonfinite_loss = false;   // search exhausted while the loss was still not finite
};

/// Growth rule applied before each search:
/// min(previous * 2^(batch_size/samples_per_doubling), max_step_size).
double reset_step_size(double previous, const LineSearchConfig& cfg);

/// Decrease term for the plain gradient direction: ||g||^2.
double sufficient_decrease_sgd(std::span<const Parameter> params);

/// Decrease term for the preconditioned direction: sum_i g_i^2/(sqrt(v_hat_i)+eps).
/// With the momentum-free preconditioned direction d = -g/(sqrt(v_hat)+eps)
/// this equals -<g, d>, the directional derivative magnitude.
double sufficient_decrease_adam(std::span<const Parameter> params,
                                std::span<const std::vector<double>> v_hat, double eps);

/// Backtracking search. `loss_at` maps a candidate step size to the loss at
/// the correspondingly perturbed point and must be pure. Candidates start at
/// initial_step and shrink by backtrack_factor until the sufficient-decrease
/// inequality holds or max_backtracks shrinks have been tried. Non-finite
/// candidate losses count as rejections. A zero decrease_term accepts
/// initial_step immediately without evaluating: the direction is null at a
/// stationary point, so the loss is unchanged.
LineSearchOutcome backtrack(const std::function<double(double)>& loss_at, double f_old,
                            double initial_step, double decrease_term,
                            const LineSearchConfig& cfg);

}  // namespace lsopt
