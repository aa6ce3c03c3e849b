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

#include <memory>
#include <string>
#include <vector>

#include "lsopt/ops.hpp"
#include "lsopt/param.hpp"
#include "lsopt/rng.hpp"

namespace lsopt {

/// One mini-batch of training data. Dense models read `features`; the
/// encoder reads `tokens` (row-major [size x seq]).
struct Batch {
  Tensor features;            // [n, d], no gradient
  std::vector<int> tokens;    // n * seq token ids
  std::size_t seq = 0;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// How to assign parameters to step-size units.
struct SplitScheme {
  enum class Kind { whole, per_layer, qkv };
  Kind kind = Kind::whole;
  int n_units = 1;  // per_layer only

  static SplitScheme whole() { return {Kind::whole, 1}; }
  static SplitScheme per_layer(int n) { return {Kind::per_layer, n}; }
  static SplitScheme qkv() { return {Kind::qkv, 0}; }

  /// Parses "whole", "per_layer:N" or "qkv"; throws std::invalid_argument.
  static SplitScheme parse(const std::string& text);
  std::string to_string() const;
};

/// A differentiable classifier with named parameters. Parameter order is
/// fixed at construction so that runs with the same seed are reproducible;
/// logits() is pure given the current parameter values.
class Model {
 public:
  virtual ~Model() = default;

  virtual Tensor logits(const Batch& batch) const = 0;
  virtual int num_classes() const = 0;

  /// Unit label per parameter (aligned with parameters()) under a scheme.
  /// Throws std::invalid_argument for schemes the model does not support.
  virtual std::vector<std::string> unit_labels(const SplitScheme& scheme) const = 0;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }

 protected:
  std::vector<Parameter> params_;
};

/// Single affine layer: logits = X W + b.
class LogisticRegression : public Model {
 public:
  LogisticRegression(std::size_t features, int classes, std::uint64_t seed);

  Tensor logits(const Batch& batch) const override;
  int num_classes() const override { return classes_; }
  std::vector<std::string> unit_labels(const SplitScheme& scheme) const override;

 private:
  std::size_t features_;
  int classes_;
};

/// Fully connected classifier: depth affine layers, the first depth-1
/// followed by the activation, the last acting as the head. depth=1 is
/// plain logistic regression.
class Mlp : public Model {
 public:
  enum class Activation { relu, gelu };

  Mlp(std::size_t features, int classes, int depth, std::size_t width, Activation act,
      std::uint64_t seed);

  Tensor logits(const Batch& batch) const override;
  int num_classes() const override { return classes_; }
  std::vector<std::string> unit_labels(const SplitScheme& scheme) const override;
  int depth() const { return depth_; }

 private:
  std::size_t features_;
  int classes_;
  int depth_;
  std::size_t width_;
  Activation act_;
};

/// Single-head transformer encoder classifier. Token plus learned position
/// embeddings feed `blocks` encoder blocks (self-attention with query/key/
/// value/output projections, residual + layernorm, two-layer feed-forward
/// with gelu, residual + layernorm). The head reads sequence position 0,
/// which input pipelines reserve for a classification token.
class Encoder : public Model {
 public:
  Encoder(int vocab, std::size_t seq, std::size_t dim, int blocks, int classes,
          std::uint64_t seed);

  Tensor logits(const Batch& batch) const override;
  int num_classes() const override { return classes_; }
  std::vector<std::string> unit_labels(const SplitScheme& scheme) const override;
  int blocks() const { return blocks_; }
  std::size_t dim() const { return dim_; }

 private:
  int vocab_;
  std::size_t seq_;
  std::size_t dim_;
  int blocks_;
  int classes_;
};

/// Mean cross-entropy loss of a model on a batch.
Tensor batch_loss(const Model& model, const Batch& batch);

/// Fraction of batch rows whose argmax logit matches the label.
double batch_accuracy(const Model& model, const Batch& batch);

/// Splits `count` consecutive layers into `groups` contiguous parts whose
/// sizes differ by at most one, alternating smaller and larger parts
/// (e.g. 12 layers in 8 groups -> 1,2,1,2,1,2,1,2).
std::vector<int> group_sizes(int count, int groups);

}  // namespace lsopt
