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

#include "lsopt/partition.hpp"

#include <algorithm>
#include <stdexcept>

namespace lsopt {

void Partition::check_exact_cover(std::size_t n_params) const {
  std::vector<int> seen(n_params, 0);
  for (const ParamUnit& unit : units) {
    for (std::size_t id : unit.param_ids) {
      if (id >= n_params) throw std::logic_error("partition: parameter id out of range");
      ++seen[id];
    }
  }
  for (std::size_t id = 0; id < n_params; ++id) {
    if (seen[id] != 1) {
      throw std::logic_error("partition: parameter " + std::to_string(id) + " covered " +
                             std::to_string(seen[id]) + " times");
    }
  }
}

Partition partition_model(const Model& model, const SplitScheme& scheme) {
  const std::vector<std::string> labels = model.unit_labels(scheme);
  if (labels.size() != model.parameters().size()) {
    throw std::logic_error("partition_model: label count does not match parameter count");
  }
  Partition partition;
  for (std::size_t id = 0; id < labels.size(); ++id) {
    auto it = std::find_if(partition.units.begin(), partition.units.end(),
                           [&](const ParamUnit& u) { return u.name == labels[id]; });
    if (it == partition.units.end()) {
      partition.units.push_back({labels[id], {id}});
    } else {
      it->param_ids.push_back(id);
    }
  }
  partition.check_exact_cover(labels.size());
  return partition;
}

MergeOutcome merge_smallest_unit(Partition& partition, UnitStepState& state) {
  if (partition.units.empty() || partition.units.size() != state.step_sizes.size()) {
    throw std::logic_error("merge_smallest_unit: partition and step state disagree");
  }
  MergeOutcome outcome;
  const auto& etas = state.step_sizes;
  std::size_t smallest = 0;
  for (std::size_t i = 1; i < etas.size(); ++i) {
    if (etas[i] < etas[smallest]) smallest = i;
  }
  if (etas[smallest] > state.merge_threshold) return outcome;
  if (partition.units.size() < 2) {
    outcome.stuck_single_unit = true;
    return outcome;
  }
  std::size_t second = smallest == 0 ? 1 : 0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (i == smallest) continue;
    if (etas[i] < etas[second]) second = i;
  }

  const std::size_t keep = std::min(smallest, second);
  const std::size_t drop = std::max(smallest, second);
  MergeEvent event;
  event.unit_a = partition.units[smallest].name;
  event.unit_b = partition.units[second].name;
  event.new_step_size = (etas[smallest] + etas[second]) / 2.0;

  ParamUnit& kept = partition.units[keep];
  ParamUnit& dropped = partition.units[drop];
  kept.name += "+" + dropped.name;
  kept.param_ids.insert(kept.param_ids.end(), dropped.param_ids.begin(),
                        dropped.param_ids.end());
  event.merged_name = kept.name;
  partition.units.erase(partition.units.begin() + static_cast<std::ptrdiff_t>(drop));
  state.step_sizes[keep] = event.new_step_size;
  state.step_sizes.erase(state.step_sizes.begin() + static_cast<std::ptrdiff_t>(drop));

  if (state.cursor == drop) {
    state.cursor = keep;
  } else if (state.cursor > drop) {
    --state.cursor;
  }
  outcome.event = event;
  return outcome;
}

}  // namespace lsopt
