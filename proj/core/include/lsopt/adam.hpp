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

#include <span>
#include <vector>

#include "lsopt/param.hpp"

namespace lsopt {

/// Adam moment accumulators, one buffer per parameter. Buffers are created
/// lazily (all zeros) on the first direction computation.
struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Computes the Adam descent direction d = -m_hat / (sqrt(v_hat) + eps)
/// from the parameters' current gradients. Increments step_count and
/// updates the second moment (and, with use_momentum, the first moment)
/// exactly once. With use_momentum=false the momentum coefficient is
/// treated as zero, so m_hat is the raw gradient.
std::vector<std::vector<double>> adam_direction(AdamState& state,
                                                std::span<const Parameter> params,
                                                bool use_momentum);

/// Bias-corrected second moment v / (1 - beta2^step_count) for the current
/// step count.
std::vector<std::vector<double>> bias_corrected_second_moment(const AdamState& state);

/// Linear warmup to peak_lr over the first warmup_fraction of total_steps,
/// then cosine decay to zero at total_steps.
struct WarmupCosineSchedule {
  double peak_lr = 2e-5;
  double warmup_fraction = 0.1;
  long total_steps = 0;

  double lr_at(long step) const;
};

}  // namespace lsopt
