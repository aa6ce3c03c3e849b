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

#include "lsopt/param.hpp"

namespace lsopt {

double grad_sq_norm(std::span<const Parameter> params) {
  double total = 0.0;
  for (const Parameter& p : params) {
    if (!p.value.grad_defined()) {
      throw std::logic_error("grad_sq_norm: parameter '" + p.name + "' has no gradient");
    }
    for (double g : p.value.grad()) total += g * g;
  }
  return total;
}

void zero_grads(std::span<Parameter> params) {
  for (Parameter& p : params) p.value.zero_grad();
}

}  // namespace lsopt
