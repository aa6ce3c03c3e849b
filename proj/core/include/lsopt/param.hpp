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
#include <string>
#include <vector>

#include "lsopt/tensor.hpp"

namespace lsopt {

/// A named trainable tensor. The tensor always requires gradients.
struct Parameter {
  std::string name;
  Tensor value;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    value.set_requires_grad(true);
  }
};

/// Sum of squared gradient entries across the listed parameters.
/// Throws std::logic_error if any parameter's gradient is missing.
double grad_sq_norm(std::span<const Parameter> params);

void zero_grads(std::span<Parameter> params);

}  // namespace lsopt
