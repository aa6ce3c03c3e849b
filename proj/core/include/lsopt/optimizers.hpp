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
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lsopt/adam.hpp"
#include "lsopt/line_search.hpp"
#include "lsopt/param.hpp"
#include "lsopt/partition.hpp"

namespace lsopt {

/// Every line-searched optimizer starts its very first search from this
/// step size; there is no user-tunable learning rate on that path.
inline constexpr double kInitialStepSize = 0.1;

/// Which decrease term the preconditioned searches use: the gradient norm
/// scaled by the second-moment estimate (matching the preconditioned
/// direction) or the raw squared gradient norm.
enum class DecreaseTerm { scaled, raw };

/// One mini-batch loss oracle handed to an optimizer step. `value` runs a
/// forward pass at the current weights; `value_and_grad` additionally fills
/// every parameter gradient. Both must be pure in the weights and are
/// instrumented so tests can audit how many passes a step consumed.
class BatchLoss {
 public:
  BatchLoss(std::function<double()> value, std::function<double()> value_and_grad)
      : value_(std::move(value)), value_and_grad_(std::move(value_and_grad)) {}

  double value() const {
    ++forward_count_;
    return value_();
  }
  double value_and_grad() const {
    ++forward_count_;
    ++backward_count_;
    return value_and_grad_();
  }

  long forward_count() const { return forward_count_; }
  long backward_count() const { return backward_count_; }

 private:
  std::function<double()> value_;
  std::function<double()> value_and_grad_;
  mutable long forward_count_ = 0;
  mutable long backward_count_ = 0;
};

/// What one optimizer step did, for logging and assertions.
struct StepResult {
  double loss = 0.0;        // mini-batch loss at the pre-step weights
  double loss_after = 0.0;  // loss at the accepted step (== loss when not measured)
  double step_size = 0.0;   // accepted step size, or the scheduled lr for adam
  int backtracks = 0;
  bool accepted = true;        // false when the search exhausted its backtracks
  bool nonfinite_loss = false;
  std::string searched_unit;   // unit-wise search only
  std::optional<MergeEvent> merge;
  bool merge_warning = false;  // a lone unit sits below the merge threshold
  long forward_passes = 0;
  long backward_passes = 0;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual StepResult step(const BatchLoss& loss) = 0;
  virtual std::string name() const = 0;
  /// Current step size per unit (a single pseudo-unit for global methods).
  virtual std::vector<std::pair<std::string, double>> step_sizes() const = 0;
};

/// Adam baseline: full momentum Adam driven by a warmup+cosine schedule.
/// One forward and one backward pass per step, no line search.
class ScheduledAdam : public Optimizer {
 public:
  ScheduledAdam(std::vector<Parameter>& params, WarmupCosineSchedule schedule,
                AdamState state = {});

  StepResult step(const BatchLoss& loss) override;
  std::string name() const override { return "adam"; }
  std::vector<std::pair<std::string, double>> step_sizes() const override;

  const AdamState& adam_state() const { return adam_; }

 private:
  std::vector<Parameter>* params_;
  WarmupCosineSchedule schedule_;
  AdamState adam_;
  long next_step_ = 0;
  double last_lr_ = 0.0;
};

/// Backtracking line search along the negative mini-batch gradient. The
/// previous accepted step, grown by the reset rule, seeds each search.
class SgdLineSearch : public Optimizer {
 public:
  SgdLineSearch(std::vector<Parameter>& params, LineSearchConfig cfg);

  StepResult step(const BatchLoss& loss) override;
  std::string name() const override { return "sgdsls"; }
  std::vector<std::pair<std::string, double>> step_sizes() const override;

  double current_step_size() const { return step_size_; }
  void set_step_size(double s) { step_size_ = s; }

 private:
  std::vector<Parameter>* params_;
  LineSearchConfig cfg_;
  double step_size_ = kInitialStepSize;
};

/// Backtracking line search along the momentum-free Adam direction, with
/// the decrease term scaled by the same second-moment estimate.
class AdamLineSearch : public Optimizer {
 public:
  AdamLineSearch(std::vector<Parameter>& params, LineSearchConfig cfg, AdamState state = {},
                 DecreaseTerm decrease = DecreaseTerm::scaled);

  StepResult step(const BatchLoss& loss) override;
  std::string name() const override { return "adamsls"; }
  std::vector<std::pair<std::string, double>> step_sizes() const override;

  double current_step_size() const { return step_size_; }
  void set_step_size(double s) { step_size_ = s; }
  const AdamState& adam_state() const { return adam_; }

 private:
  std::vector<Parameter>* params_;
  LineSearchConfig cfg_;
  AdamState adam_;
  DecreaseTerm decrease_;
  double step_size_ = kInitialStepSize;
};

/// Unit-wise Adam line search: parameters are split into units, each unit
/// keeps its own step size, and each step searches a single unit (round
/// robin) while every unit moves by its stored step size. The first step is
/// one global search that seeds all unit step sizes, and after every step
/// units whose step size collapsed below the merge threshold are fused.
class UnitwiseAdamLineSearch : public Optimizer {
 public:
  UnitwiseAdamLineSearch(std::vector<Parameter>& params, Partition partition,
                         LineSearchConfig cfg, AdamState state = {},
                         DecreaseTerm decrease = DecreaseTerm::scaled,
                         double merge_threshold = 1e-12);

  StepResult step(const BatchLoss& loss) override;
  std::string name() const override { return "plasls"; }
  std::vector<std::pair<std::string, double>> step_sizes() const override;

  const Partition& partition() const { return partition_; }
  const UnitStepState& unit_state() const { return units_; }
  UnitStepState& unit_state() { return units_; }
  const AdamState& adam_state() const { return adam_; }
  AdamState& adam_state() { return adam_; }

 private:
  StepResult seeding_step(const BatchLoss& loss);

  std::vector<Parameter>* params_;
  Partition partition_;
  LineSearchConfig cfg_;
  AdamState adam_;
  DecreaseTerm decrease_;
  UnitStepState units_;
};

}  // namespace lsopt
