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

#include "lsopt/models.hpp"

#include <cmath>
#include <stdexcept>

namespace lsopt {

namespace {

Tensor uniform_affine(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(fan_in * fan_out);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor({fan_in, fan_out}, std::move(v));
}

Tensor normal_embedding(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = 0.02 * rng.normal();
  return Tensor({rows, cols}, std::move(v));
}

}  // namespace

SplitScheme SplitScheme::parse(const std::string& text) {
  if (text == "whole") return whole();
  if (text == "qkv") return qkv();
  const std::string prefix = "per_layer:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string arg = text.substr(prefix.size());
    std::size_t used = 0;
    int n = 0;
    try {
      n = std::stoi(arg, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("split scheme: bad unit count in '" + text + "'");
    }
    if (used != arg.size() || n < 1) {
      throw std::invalid_argument("split scheme: bad unit count in '" + text + "'");
    }
    return per_layer(n);
  }
  throw std::invalid_argument("split scheme: expected 'whole', 'per_layer:N' or 'qkv', got '" +
                              text + "'");
}

std::string SplitScheme::to_string() const {
  switch (kind) {
    case Kind::whole: return "whole";
    case Kind::per_layer: return "per_layer:" + std::to_string(n_units);
    case Kind::qkv: return "qkv";
  }
  return "?";
}

std::vector<int> group_sizes(int count, int groups) {
  if (groups < 1 || groups > count) {
    throw std::invalid_argument("group_sizes: cannot split " + std::to_string(count) +
                                " layers into " + std::to_string(groups) + " groups");
  }
  const int base = count / groups;
  int n_large = count % groups;
  int n_small = groups - n_large;
  std::vector<int> sizes;
  sizes.reserve(groups);
  while (n_small > 0 || n_large > 0) {
    if (n_small > 0) {
      sizes.push_back(base);
      --n_small;
    }
    if (n_large > 0) {
      sizes.push_back(base + 1);
      --n_large;
    }
  }
  return sizes;
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegression::LogisticRegression(std::size_t features, int classes, std::uint64_t seed)
    : features_(features), classes_(classes) {
  if (features == 0 || classes < 2) {
    throw std::invalid_argument("logistic regression: need features >= 1 and classes >= 2");
  }
  Rng rng(seed);
  params_.emplace_back("weight", uniform_affine(features, static_cast<std::size_t>(classes), rng));
  params_.emplace_back("bias", Tensor({static_cast<std::size_t>(classes)}));
}

Tensor LogisticRegression::logits(const Batch& batch) const {
  if (batch.features.rank() != 2 || batch.features.shape()[1] != features_) {
    throw ShapeError("logistic regression: expected [n," + std::to_string(features_) +
                     "] features");
  }
  return add(matmul(batch.features, params_[0].value), params_[1].value);
}

std::vector<std::string> LogisticRegression::unit_labels(const SplitScheme& scheme) const {
  switch (scheme.kind) {
    case SplitScheme::Kind::whole:
      return {"all", "all"};
    case SplitScheme::Kind::per_layer:
      if (scheme.n_units != 1) {
        throw std::invalid_argument("logistic regression has a single layer; per_layer:" +
                                    std::to_string(scheme.n_units) + " is invalid");
      }
      return {"layer1", "layer1"};
    case SplitScheme::Kind::qkv:
      throw std::invalid_argument("qkv split requires an encoder model");
  }
  throw std::invalid_argument("unknown split scheme");
}

// ---------------------------------------------------------------------------
// MLP

Mlp::Mlp(std::size_t features, int classes, int depth, std::size_t width, Activation act,
         std::uint64_t seed)
    : features_(features), classes_(classes), depth_(depth), width_(width), act_(act) {
  if (depth < 1) throw std::invalid_argument("mlp: depth must be >= 1");
  if (features == 0 || classes < 2) {
    throw std::invalid_argument("mlp: need features >= 1 and classes >= 2");
  }
  if (depth > 1 && width == 0) throw std::invalid_argument("mlp: width must be >= 1");
  Rng rng(seed);
  for (int layer = 0; layer < depth; ++layer) {
    const std::size_t in = layer == 0 ? features : width;
    const std::size_t out =
        layer == depth - 1 ? static_cast<std::size_t>(classes) : width;
    const std::string tag = "layer" + std::to_string(layer + 1);
    params_.emplace_back(tag + ".weight", uniform_affine(in, out, rng));
    params_.emplace_back(tag + ".bias", Tensor({out}));
  }
}

Tensor Mlp::logits(const Batch& batch) const {
  Tensor x = batch.features;
  for (int layer = 0; layer < depth_; ++layer) {
    x = add(matmul(x, params_[2 * layer].value), params_[2 * layer + 1].value);
    if (layer != depth_ - 1) {
      x = act_ == Activation::relu ? relu(x) : gelu(x);
    }
  }
  return x;
}

std::vector<std::string> Mlp::unit_labels(const SplitScheme& scheme) const {
  const std::size_t n_params = params_.size();
  switch (scheme.kind) {
    case SplitScheme::Kind::whole:
      return std::vector<std::string>(n_params, "all");
    case SplitScheme::Kind::qkv:
      throw std::invalid_argument("qkv split requires an encoder model");
    case SplitScheme::Kind::per_layer: {
      const int n = scheme.n_units;
      if (n == 1) return std::vector<std::string>(n_params, "all");
      if (n > depth_) {
        throw std::invalid_argument("per_layer:" + std::to_string(n) + " exceeds the " +
                                    std::to_string(depth_) + " layers of this mlp");
      }
      // Hidden layers share n-1 groups; the head layer is always its own unit.
      const std::vector<int> sizes = group_sizes(depth_ - 1, n - 1);
      std::vector<std::string> labels;
      int layer = 0;
      for (int size : sizes) {
        const std::string tag =
            size == 1 ? "layer" + std::to_string(layer + 1)
                      : "layers" + std::to_string(layer + 1) + "-" + std::to_string(layer + size);
        for (int i = 0; i < size; ++i) {
          labels.push_back(tag);
          labels.push_back(tag);
          ++layer;
        }
      }
      labels.push_back("head");
      labels.push_back("head");
      return labels;
    }
  }
  throw std::invalid_argument("unknown split scheme");
}

// ---------------------------------------------------------------------------
// Encoder

namespace {
constexpr int kParamsPerBlock = 16;
}

Encoder::Encoder(int vocab, std::size_t seq, std::size_t dim, int blocks, int classes,
                 std::uint64_t seed)
    : vocab_(vocab), seq_(seq), dim_(dim), blocks_(blocks), classes_(classes) {
  if (vocab < 1 || seq < 1 || dim < 1 || blocks < 0 || classes < 2) {
    throw std::invalid_argument("encoder: invalid hyperparameters");
  }
  Rng rng(seed);
  params_.emplace_back("token_embedding",
                       normal_embedding(static_cast<std::size_t>(vocab), dim, rng));
  params_.emplace_back("position_embedding", normal_embedding(seq, dim, rng));
  const std::size_t hidden = 4 * dim;
  for (int b = 0; b < blocks; ++b) {
    const std::string tag = "block" + std::to_string(b + 1);
    params_.emplace_back(tag + ".query_w", uniform_affine(dim, dim, rng));
    params_.emplace_back(tag + ".query_b", Tensor({dim}));
    params_.emplace_back(tag + ".key_w", uniform_affine(dim, dim, rng));
    params_.emplace_back(tag + ".key_b", Tensor({dim}));
    params_.emplace_back(tag + ".value_w", uniform_affine(dim, dim, rng));
    params_.emplace_back(tag + ".value_b", Tensor({dim}));
    params_.emplace_back(tag + ".out_w", uniform_affine(dim, dim, rng));
    params_.emplace_back(tag + ".out_b", Tensor({dim}));
    params_.emplace_back(tag + ".ln1_gain", Tensor({dim}, 1.0));
    params_.emplace_back(tag + ".ln1_bias", Tensor({dim}));
    params_.emplace_back(tag + ".ffn1_w", uniform_affine(dim, hidden, rng));
    params_.emplace_back(tag + ".ffn1_b", Tensor({hidden}));
    params_.emplace_back(tag + ".ffn2_w", uniform_affine(hidden, dim, rng));
    params_.emplace_back(tag + ".ffn2_b", Tensor({dim}));
    params_.emplace_back(tag + ".ln2_gain", Tensor({dim}, 1.0));
    params_.emplace_back(tag + ".ln2_bias", Tensor({dim}));
  }
  params_.emplace_back("head.weight",
                       uniform_affine(dim, static_cast<std::size_t>(classes), rng));
  params_.emplace_back("head.bias", Tensor({static_cast<std::size_t>(classes)}));
}

Tensor Encoder::logits(const Batch& batch) const {
  const std::size_t n = batch.size();
  if (batch.seq != seq_ || batch.tokens.size() != n * seq_) {
    throw ShapeError("encoder: expected " + std::to_string(n) + "x" + std::to_string(seq_) +
                     " token batch");
  }
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dim_));

  Tensor x = embedding(params_[0].value, batch.tokens);           // [n*seq, dim]
  x = reshape(x, {n, seq_, dim_});
  x = add(x, params_[1].value);                                   // position offsets
  x = reshape(x, {n * seq_, dim_});

  for (int b = 0; b < blocks_; ++b) {
    const std::size_t base = 2 + static_cast<std::size_t>(b) * kParamsPerBlock;
    const auto& p = params_;
    const Tensor q = add(matmul(x, p[base + 0].value), p[base + 1].value);
    const Tensor k = add(matmul(x, p[base + 2].value), p[base + 3].value);
    const Tensor v = add(matmul(x, p[base + 4].value), p[base + 5].value);

    const Tensor scores = scale(
        matmul(reshape(q, {n, seq_, dim_}), transpose_last(reshape(k, {n, seq_, dim_}))),
        attn_scale);
    const Tensor weights = softmax_last(scores);
    const Tensor context = matmul(weights, reshape(v, {n, seq_, dim_}));

    const Tensor attn_out =
        add(matmul(reshape(context, {n * seq_, dim_}), p[base + 6].value), p[base + 7].value);
    x = layernorm(add(x, attn_out), p[base + 8].value, p[base + 9].value);

    Tensor ff = gelu(add(matmul(x, p[base + 10].value), p[base + 11].value));
    ff = add(matmul(ff, p[base + 12].value), p[base + 13].value);
    x = layernorm(add(x, ff), p[base + 14].value, p[base + 15].value);
  }

  const Tensor pooled = take_position(reshape(x, {n, seq_, dim_}), 0);
  const std::size_t head = 2 + static_cast<std::size_t>(blocks_) * kParamsPerBlock;
  return add(matmul(pooled, params_[head].value), params_[head + 1].value);
}

std::vector<std::string> Encoder::unit_labels(const SplitScheme& scheme) const {
  const std::size_t n_params = params_.size();
  switch (scheme.kind) {
    case SplitScheme::Kind::whole:
      return std::vector<std::string>(n_params, "all");
    case SplitScheme::Kind::qkv: {
      if (blocks_ == 0) throw std::invalid_argument("qkv split needs at least one block");
      std::vector<std::string> labels(n_params);
      labels[0] = "embedding";
      labels[1] = "embedding";
      // Query/key/value projections share one unit each across blocks; the
      // attention output, layernorms and feed-forward stay in "ffn".
      static const char* kBlockUnits[kParamsPerBlock] = {
          "query", "query", "key", "key", "value", "value", "ffn", "ffn",
          "ffn",   "ffn",   "ffn", "ffn", "ffn",   "ffn",   "ffn", "ffn"};
      for (int b = 0; b < blocks_; ++b) {
        const std::size_t base = 2 + static_cast<std::size_t>(b) * kParamsPerBlock;
        for (int i = 0; i < kParamsPerBlock; ++i) labels[base + i] = kBlockUnits[i];
      }
      labels[n_params - 2] = "head";
      labels[n_params - 1] = "head";
      return labels;
    }
    case SplitScheme::Kind::per_layer: {
      const int n = scheme.n_units;
      if (n == 1) return std::vector<std::string>(n_params, "all");
      if (blocks_ == 0) {
        if (n != 2) {
          throw std::invalid_argument("per_layer:" + std::to_string(n) +
                                      " is invalid for a blockless encoder");
        }
        std::vector<std::string> labels(n_params, "head");
        labels[0] = "embedding";
        labels[1] = "embedding";
        return labels;
      }
      if (n < 3 || n - 2 > blocks_) {
        throw std::invalid_argument("per_layer:" + std::to_string(n) + " does not fit " +
                                    std::to_string(blocks_) + " encoder blocks (+embedding/head)");
      }
      std::vector<std::string> labels(n_params);
      labels[0] = "embedding";
      labels[1] = "embedding";
      const std::vector<int> sizes = group_sizes(blocks_, n - 2);
      int block = 0;
      for (int size : sizes) {
        const std::string tag =
            size == 1 ? "block" + std::to_string(block + 1)
                      : "blocks" + std::to_string(block + 1) + "-" + std::to_string(block + size);
        for (int i = 0; i < size; ++i) {
          const std::size_t base = 2 + static_cast<std::size_t>(block) * kParamsPerBlock;
          for (int j = 0; j < kParamsPerBlock; ++j) labels[base + j] = tag;
          ++block;
        }
      }
      labels[n_params - 2] = "head";
      labels[n_params - 1] = "head";
      return labels;
    }
  }
  throw std::invalid_argument("unknown split scheme");
}

// ---------------------------------------------------------------------------

Tensor batch_loss(const Model& model, const Batch& batch) {
  return softmax_cross_entropy(model.logits(batch), batch.labels);
}

double batch_accuracy(const Model& model, const Batch& batch) {
  const Tensor l = model.logits(batch);
  const std::size_t n = batch.size();
  const std::size_t classes = l.shape()[1];
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = l.values().data() + i * classes;
    std::size_t best = 0;
    for (std::size_t j = 1; j < classes; ++j) {
      if (row[j] > row[best]) best = j;
    }
    if (static_cast<int>(best) == batch.labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace lsopt
