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

#include "lsopt/models.hpp"
#include "lsopt/param.hpp"
#include "lsopt/rng.hpp"

namespace lsopt {

/// Thrown by file ingestion with a "path:line: message" payload.
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable labeled samples: dense feature rows or token sequences.
struct Dataset {
  std::size_t n = 0;
  int num_classes = 0;

  std::size_t feature_dim = 0;    // dense data
  std::vector<double> features;   // n * feature_dim, row-major

  std::size_t seq_len = 0;        // token data
  int vocab = 0;
  std::vector<int> tokens;        // n * seq_len, row-major

  std::vector<int> labels;

  bool is_token_data() const { return seq_len > 0; }
  Batch gather(std::span<const std::size_t> indices) const;
  Batch all() const;
  /// Rows [begin, end), preserving order.
  Dataset slice(std::size_t begin, std::size_t end) const;
};

/// Randomly drawn subset of count rows, deterministic under seed.
Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed);

/// Mini-batch index stream. Each epoch visits every sample exactly once in
/// a freshly seeded permutation (the last batch of an epoch may be short).
class BatchStream {
 public:
  BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();
  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  long completed_epochs() const { return epoch_; }

 private:
  void reshuffle();

  std::size_t n_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  long epoch_ = -1;
  std::size_t offset_ = 0;
  std::size_t steps_per_epoch_;
  std::vector<std::size_t> order_;
};

/// Separable quadratic loss f(w) = 1/2 sum_i L_i w_i^2 with one trainable
/// block per curvature group. The loss is built through the autodiff ops so
/// the optimizers treat it like any model.
struct QuadraticProblem {
  std::vector<Parameter> blocks;
  std::vector<Tensor> curvatures;  // constants aligned with blocks

  Tensor loss_tensor() const;
  double lipschitz_constant() const;  // max curvature
  void set_block(std::size_t block, std::span<const double> values);
};

/// Single block, one curvature per coordinate, weights initialized to 1.
QuadraticProblem make_quadratic(const std::vector<double>& spectrum);
/// One trainable block per spectrum, weights initialized to 1.
QuadraticProblem make_block_quadratic(const std::vector<std::vector<double>>& block_spectra);

/// Gaussian clusters with unit within-class variance and class centers
/// `separation` apart from the origin; classes are balanced within one
/// sample and interleaved so every prefix stays balanced.
Dataset make_blobs(std::size_t n, std::size_t dim, int classes, double separation,
                   std::uint64_t seed);

/// Token-majority task: position 0 carries a reserved classification token,
/// the label says which of two content tokens occurs more often in the
/// rest of the sequence. Ties are regenerated; labels alternate so the set
/// is balanced within one sample. Requires vocab >= 4 and seq >= 3.
Dataset make_majority_token_task(std::size_t n, std::size_t seq, int vocab, std::uint64_t seed);

/// Majority rule used by the generator: 0 if token A dominates, 1 if token
/// B does, -1 on a tie. Position 0 is ignored.
int majority_label(std::span<const int> sequence);

inline constexpr int kClsToken = 0;
inline constexpr int kContentTokenA = 1;
inline constexpr int kContentTokenB = 2;

/// Reads a dense dataset from CSV: one header row, numeric feature columns,
/// integer label in the last column. Throws ParseError with the offending
/// line number.
Dataset load_csv(const std::string& path);

/// Writes a dense dataset as CSV with 17-significant-digit floats, which
/// round-trips doubles exactly.
void save_csv(const Dataset& data, const std::string& path);

}  // namespace lsopt
