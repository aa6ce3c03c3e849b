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

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsopt {

/// Thrown when operand shapes do not satisfy an operation's contract.
class ShapeError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

namespace detail {
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  std::vector<double> grad;  // sized like values iff requires_grad
  bool requires_grad = false;
  std::uint64_t tape_id = 0;  // id of the tape that produced this node, 0 for leaves
};
}  // namespace detail

/// Dense n-dimensional array of 64-bit floats with an optional gradient
/// buffer. A Tensor is a shared handle: copies refer to the same storage,
/// so in-place value updates (optimizer steps) are visible through every
/// copy, including the ones a model keeps for its parameters.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->values.size(); }

  const std::vector<double>& values() const { return node_->values; }
  std::vector<double>& values() { return node_->values; }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool grad_defined() const { return node_ && node_->grad.size() == node_->values.size(); }
  const std::vector<double>& grad() const;
  std::vector<double>& grad();
  void zero_grad();

  detail::TensorNode* node() const { return node_.get(); }
  std::shared_ptr<detail::TensorNode> node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

/// Reverse-mode tape. Construction makes the tape active for the current
/// thread; operations on tensors that require gradients record their
/// backward rules onto it. The tape is rebuilt for every forward pass and
/// consumed by a single backward() call.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  /// Registers `out` as produced by this tape and queues `pull`, which must
  /// accumulate into the gradients of the op's inputs when invoked.
  void record(const Tensor& out, std::vector<Tensor> inputs, std::function<void()> pull);

  /// Reverse accumulation from a scalar loss recorded on this tape.
  /// Gradients of every tensor touched by this tape are zeroed first, the
  /// loss gradient is seeded with 1, and each recorded rule runs exactly
  /// once in reverse order. A tape can only be consumed once.
  void backward(const Tensor& loss);

  std::uint64_t id() const { return id_; }
  std::size_t node_count() const { return pulls_.size(); }

 private:
  std::vector<std::function<void()>> pulls_;
  std::vector<std::shared_ptr<detail::TensorNode>> touched_;
  Tape* previous_ = nullptr;
  std::uint64_t id_ = 0;
  bool consumed_ = false;
};

/// Runs reverse accumulation on the currently active tape.
void backward(const Tensor& loss);

}  // namespace lsopt
