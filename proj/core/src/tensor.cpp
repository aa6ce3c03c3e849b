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

#include "lsopt/tensor.hpp"

#include <atomic>

namespace lsopt {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : node_(std::make_shared<detail::TensorNode>()) {
  node_->values.assign(shape_size(shape), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : node_(std::make_shared<detail::TensorNode>()) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("tensor shape " + shape_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->values = std::move(values);
}

Tensor Tensor::scalar(double value) { return Tensor({}, std::vector<double>{value}); }

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() requires a scalar tensor, got shape " +
                                shape_string(shape()));
  }
  return node_->values[0];
}

Tensor& Tensor::set_requires_grad(bool on) {
  node_->requires_grad = on;
  if (on && node_->grad.size() != node_->values.size()) {
    node_->grad.assign(node_->values.size(), 0.0);
  }
  return *this;
}

const std::vector<double>& Tensor::grad() const {
  if (!grad_defined()) throw std::logic_error("tensor has no gradient buffer");
  return node_->grad;
}

std::vector<double>& Tensor::grad() {
  if (!grad_defined()) throw std::logic_error("tensor has no gradient buffer");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (grad_defined()) node_->grad.assign(node_->values.size(), 0.0);
}

namespace {
thread_local Tape* g_active_tape = nullptr;
std::atomic<std::uint64_t> g_next_tape_id{1};
}  // namespace

Tape::Tape() : previous_(g_active_tape), id_(g_next_tape_id.fetch_add(1)) {
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(const Tensor& out, std::vector<Tensor> inputs, std::function<void()> pull) {
  out.node()->tape_id = id_;
  touched_.push_back(out.node_ptr());
  for (const Tensor& in : inputs) {
    if (in.requires_grad()) touched_.push_back(in.node_ptr());
  }
  pulls_.push_back(std::move(pull));
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward() requires a scalar loss");
  }
  if (loss.node()->tape_id != id_) {
    throw std::logic_error("loss was not produced on the active tape");
  }
  if (consumed_) throw std::logic_error("tape already consumed by a previous backward()");
  consumed_ = true;

  for (auto& node : touched_) {
    node->grad.assign(node->values.size(), 0.0);
  }
  loss.node()->grad[0] = 1.0;
  for (auto it = pulls_.rbegin(); it != pulls_.rend(); ++it) (*it)();
}

void backward(const Tensor& loss) {
  Tape* tape = Tape::active();
  if (tape == nullptr) throw std::logic_error("backward() called with no active tape");
  tape->backward(loss);
}

}  // namespace lsopt
