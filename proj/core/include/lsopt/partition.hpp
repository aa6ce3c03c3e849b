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

#include <optional>
#include <string>
#include <vector>

#include "lsopt/models.hpp"

namespace lsopt {

/// A named group of parameters that shares one step size.
struct ParamUnit {
  std::string name;
  std::vector<std::size_t> param_ids;
};

/// Disjoint exact cover of a model's parameters by units.
struct Partition {
  std::vector<ParamUnit> units;

  std::size_t size() const { return units.size(); }
  /// Throws std::logic_error unless the units cover 0..n_params-1 exactly once.
  void check_exact_cover(std::size_t n_params) const;
};

/// Groups a model's parameters into units under a split scheme. Unit order
/// follows first appearance in the parameter list.
Partition partition_model(const Model& model, const SplitScheme& scheme);

/// Per-unit step sizes for the unit-wise line search, plus the round-robin
/// cursor selecting which unit is searched next.
struct UnitStepState {
  std::vector<double> step_sizes;
  std::size_t cursor = 0;
  double merge_threshold = 1e-12;
  bool initialized = false;
};

struct MergeEvent {
  std::string unit_a, unit_b;   // names before the merge
  std::string merged_name;
  double new_step_size = 0.0;
};

struct MergeOutcome {
  std::optional<MergeEvent> event;
  bool stuck_single_unit = false;  // smallest step below threshold but nothing to merge with
};

/// If the smallest unit step size is at or below the merge threshold and at
/// least two units remain, fuses that unit with the unit holding the second
/// smallest step size; the merged unit keeps the average of the two step
/// sizes and the concatenated parameter list. At most one merge per call.
MergeOutcome merge_smallest_unit(Partition& partition, UnitStepState& state);

}  // namespace lsopt
