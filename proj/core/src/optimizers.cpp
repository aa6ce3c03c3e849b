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

#include "lsopt/optimizers.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsopt {

namespace {

std::vector<std::size_t> all_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

// Decrease term restricted to a set of parameters. The scaled variant sums
// g^2/(sqrt(v_hat)+eps), which equals -<g, d> for the momentum-free
// preconditioned direction; the raw variant is the plain squared norm.
double decrease_over_ids(std::span<const Parameter> params, std::span<const std::size_t> ids,
                         const std::vector<std::vector<double>>& v_hat, double eps,
                         DecreaseTerm kind) {
  double total = 0.0;
  for (std::size_t id : ids) {
    const auto& g = params[id].value.grad();
    if (kind == DecreaseTerm::raw) {
      for (double gj : g) total += gj * gj;
    } else {
      const auto& v = v_hat[id];
      for (std::size_t j = 0; j < g.size(); ++j) {
        total += g[j] * g[j] / (std::sqrt(v[j]) + eps);
      }
    }
  }
  return total;
}

std::vector<std::vector<double>> save_values(std::span<const Parameter> params,
                                             std::span<const std::size_t> ids) {
  std::vector<std::vector<double>> saved;
  saved.reserve(ids.size());
  for (std::size_t id : ids) saved.push_back(params[id].value.values());
  return saved;
}

void restore_values(std::span<Parameter> params, std::span<const std::size_t> ids,
                    const std::vector<std::vector<double>>& saved) {
  for (std::size_t i = 0; i < ids.size(); ++i) params[ids[i]].value.values() = saved[i];
}

void apply_step(std::span<Parameter> params, std::span<const std::size_t> ids,
                const std::vector<std::vector<double>>& direction, double step) {
  for (std::size_t id : ids) {
    auto& w = params[id].value.values();
    const auto& d = direction[id];
    for (std::size_t j = 0; j < w.size(); ++j) w[j] += step * d[j];
  }
}

// Backtracking search that perturbs only `ids` along `direction`, restoring
// the saved weights after every candidate so rejected trials leave the
// weights bit-identical.
LineSearchOutcome search_along(const BatchLoss& loss, std::span<Parameter> params,
                               std::span<const std::size_t> ids,
                               const std::vector<std::vector<double>>& direction, double f_old,
                               double initial_step, double decrease_term,
                               const LineSearchConfig& cfg) {
  const auto saved = save_values(params, ids);
  auto loss_at = [&](double step) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      auto& w = params[ids[i]].value.values();
      const auto& base = saved[i];
      const auto& d = direction[ids[i]];
      for (std::size_t j = 0; j < w.size(); ++j) w[j] = base[j] + step * d[j];
    }
    const double f = loss.value();
    restore_values(params, ids, saved);
    return f;
  };
  return backtrack(loss_at, f_old, initial_step, decrease_term, cfg);
}

// One full step of the momentum-free Adam line search over all parameters:
// gradient, moment update, search, apply. Shared by the global optimizer
// and by the seeding step of the unit-wise one so both take literally the
// same path.
StepResult global_adam_sls_step(const BatchLoss& loss, std::vector<Parameter>& params,
                                AdamState& adam, const LineSearchConfig& cfg,
                                DecreaseTerm decrease, double previous_step) {
  StepResult result;
  result.loss = loss.value_and_grad();
  const auto direction = adam_direction(adam, params, /*use_momentum=*/false);
  const auto v_hat = bias_corrected_second_moment(adam);
  const auto ids = all_ids(params.size());
  const double term = decrease_over_ids(params, ids, v_hat, adam.eps, decrease);
  const double initial = reset_step_size(previous_step, cfg);
  const LineSearchOutcome outcome =
      search_along(loss, params, ids, direction, result.loss, initial, term, cfg);
  apply_step(params, ids, direction, outcome.step_size);

  result.loss_after = outcome.f_new;
  result.step_size = outcome.step_size;
  result.backtracks = outcome.backtracks;
  result.accepted = outcome.accepted;
  result.nonfinite_loss = outcome.nonfinite_loss;
  result.forward_passes = loss.forward_count();
  result.backward_passes = loss.backward_count();
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// ScheduledAdam

ScheduledAdam::ScheduledAdam(std::vector<Parameter>& params, WarmupCosineSchedule schedule,
                             AdamState state)
    : params_(&params), schedule_(schedule), adam_(std::move(state)) {}

StepResult ScheduledAdam::step(const BatchLoss& loss) {
  StepResult result;
  result.loss = loss.value_and_grad();
  result.loss_after = result.loss;
  last_lr_ = schedule_.lr_at(next_step_);
  ++next_step_;
  const auto direction = adam_direction(adam_, *params_, /*use_momentum=*/true);
  apply_step(*params_, all_ids(params_->size()), direction, last_lr_);
  result.step_size = last_lr_;
  result.forward_passes = loss.forward_count();
  result.backward_passes = loss.backward_count();
  return result;
}

std::vector<std::pair<std::string, double>> ScheduledAdam::step_sizes() const {
  return {{"lr", last_lr_}};
}

// ---------------------------------------------------------------------------
// SgdLineSearch

SgdLineSearch::SgdLineSearch(std::vector<Parameter>& params, LineSearchConfig cfg)
    : params_(&params), cfg_(cfg) {
  cfg_.validate();
}

StepResult SgdLineSearch::step(const BatchLoss& loss) {
  StepResult result;
  result.loss = loss.value_and_grad();

  std::vector<std::vector<double>> direction(params_->size());
  for (std::size_t i = 0; i < params_->size(); ++i) {
    const auto& g = (*params_)[i].value.grad();
    direction[i].resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) direction[i][j] = -g[j];
  }
  const double term = sufficient_decrease_sgd(*params_);
  const double initial = reset_step_size(step_size_, cfg_);
  const auto ids = all_ids(params_->size());
  const LineSearchOutcome outcome =
      search_along(loss, *params_, ids, direction, result.loss, initial, term, cfg_);
  apply_step(*params_, ids, direction, outcome.step_size);
  step_size_ = outcome.step_size;

  result.loss_after = outcome.f_new;
  result.step_size = outcome.step_size;
  result.backtracks = outcome.backtracks;
  result.accepted = outcome.accepted;
  result.nonfinite_loss = outcome.nonfinite_loss;
  result.forward_passes = loss.forward_count();
  result.backward_passes = loss.backward_count();
  return result;
}

std::vector<std::pair<std::string, double>> SgdLineSearch::step_sizes() const {
  return {{"all", step_size_}};
}

// ---------------------------------------------------------------------------
// AdamLineSearch

AdamLineSearch::AdamLineSearch(std::vector<Parameter>& params, LineSearchConfig cfg,
                               AdamState state, DecreaseTerm decrease)
    : params_(&params), cfg_(cfg), adam_(std::move(state)), decrease_(decrease) {
  cfg_.validate();
}

StepResult AdamLineSearch::step(const BatchLoss& loss) {
  StepResult result = global_adam_sls_step(loss, *params_, adam_, cfg_, decrease_, step_size_);
  step_size_ = result.step_size;
  return result;
}

std::vector<std::pair<std::string, double>> AdamLineSearch::step_sizes() const {
  return {{"all", step_size_}};
}

// ---------------------------------------------------------------------------
// UnitwiseAdamLineSearch

UnitwiseAdamLineSearch::UnitwiseAdamLineSearch(std::vector<Parameter>& params,
                                               Partition partition, LineSearchConfig cfg,
                                               AdamState state, DecreaseTerm decrease,
                                               double merge_threshold)
    : params_(&params),
      partition_(std::move(partition)),
      cfg_(cfg),
      adam_(std::move(state)),
      decrease_(decrease) {
  cfg_.validate();
  if (partition_.units.empty()) {
    throw std::invalid_argument("unit-wise line search needs at least one unit");
  }
  partition_.check_exact_cover(params.size());
  units_.merge_threshold = merge_threshold;
}

StepResult UnitwiseAdamLineSearch::seeding_step(const BatchLoss& loss) {
  // One global search seeds every unit's step size; the step size it finds
  // bounds the inverse curvature of the problem at the starting point, so
  // it is a safe common starting value.
  StepResult result =
      global_adam_sls_step(loss, *params_, adam_, cfg_, decrease_, kInitialStepSize);
  units_.step_sizes.assign(partition_.units.size(), result.step_size);
  units_.cursor = 0;
  units_.initialized = true;
  result.searched_unit = "(seed)";
  return result;
}

StepResult UnitwiseAdamLineSearch::step(const BatchLoss& loss) {
  if (!units_.initialized) return seeding_step(loss);

  StepResult result;
  const std::size_t searched = units_.cursor;
  result.searched_unit = partition_.units[searched].name;

  result.loss = loss.value_and_grad();
  const auto direction = adam_direction(adam_, *params_, /*use_momentum=*/false);
  const auto v_hat = bias_corrected_second_moment(adam_);
  const auto& ids = partition_.units[searched].param_ids;
  const double term = decrease_over_ids(*params_, ids, v_hat, adam_.eps, decrease_);
  const double initial = reset_step_size(units_.step_sizes[searched], cfg_);
  const LineSearchOutcome outcome =
      search_along(loss, *params_, ids, direction, result.loss, initial, term, cfg_);
  units_.step_sizes[searched] = outcome.step_size;

  // Every unit moves by its stored step size, not just the searched one.
  for (std::size_t u = 0; u < partition_.units.size(); ++u) {
    apply_step(*params_, partition_.units[u].param_ids, direction, units_.step_sizes[u]);
  }

  const MergeOutcome merged = merge_smallest_unit(partition_, units_);
  if (merged.event) partition_.check_exact_cover(params_->size());

  // merge_smallest_unit keeps the cursor tracking the searched unit, so
  // advancing one position stays round-robin across merges.
  units_.cursor = (units_.cursor + 1) % partition_.units.size();

  result.loss_after = outcome.f_new;
  result.step_size = outcome.step_size;
  result.backtracks = outcome.backtracks;
  result.accepted = outcome.accepted;
  result.nonfinite_loss = outcome.nonfinite_loss;
  result.merge = merged.event;
  result.merge_warning = merged.stuck_single_unit;
  result.forward_passes = loss.forward_count();
  result.backward_passes = loss.backward_count();
  return result;
}

std::vector<std::pair<std::string, double>> UnitwiseAdamLineSearch::step_sizes() const {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(partition_.units.size());
  for (std::size_t u = 0; u < partition_.units.size(); ++u) {
    out.emplace_back(partition_.units[u].name,
                     units_.initialized ? units_.step_sizes[u] : kInitialStepSize);
  }
  return out;
}

}  // namespace lsopt
