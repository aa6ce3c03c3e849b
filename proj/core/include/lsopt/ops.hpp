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

#include "lsopt/tensor.hpp"

namespace lsopt {

// Differentiable operations over dense tensors. Every op returns a fresh
// tensor and never mutates its operands' value buffers; when a tape is
// active and an operand requires gradients, the matching backward rule is
// recorded. Without an active tape the ops are plain forward arithmetic,
// which is what line-search candidate evaluations rely on.

/// Matrix product. Accepts [m,k]x[k,n] or batched [B,m,k]x[B,k,n].
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise arithmetic. Shapes must match exactly, or the smaller
// operand must be a scalar or a trailing-dimension slice of the larger one
// (e.g. a [d] bias against a [n,d] activation), in which case it is tiled.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor relu(const Tensor& a);
/// Gaussian error linear unit, tanh approximation:
/// 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
Tensor gelu(const Tensor& a);
Tensor exp(const Tensor& a);
/// Natural log; throws std::domain_error on non-positive entries.
Tensor log(const Tensor& a);

/// Softmax along the last axis.
Tensor softmax_last(const Tensor& a);

/// Mean negative log-likelihood of integer class labels under row-wise
/// softmax of [batch,classes] logits, stabilized by max subtraction.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Per-row normalization of [rows,d] to zero mean and unit variance
/// followed by an affine transform with gain and bias of shape [d].
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias);

/// Variance stabilizer used by layernorm.
inline constexpr double kLayerNormEpsilon = 1e-5;

/// Row gather: out[i,:] = table[ids[i],:]. Throws std::out_of_range for
/// ids outside [0, rows(table)).
Tensor embedding(const Tensor& table, std::span<const int> ids);

/// Swaps the last two axes of a rank-2 or rank-3 tensor.
Tensor transpose_last(const Tensor& a);

/// Same buffer contents under a new shape of equal element count.
Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);

/// Selects one sequence position from [B,S,d]: out[b,:] = x[b,pos,:].
Tensor take_position(const Tensor& x, std::size_t pos);

/// Sum of all entries, as a scalar tensor.
Tensor sum(const Tensor& a);

}  // namespace lsopt
