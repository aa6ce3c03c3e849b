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

#include "lsopt/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lsopt/ops.hpp"

namespace lsopt {

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch batch;
  batch.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= n) throw std::out_of_range("dataset: index out of range");
    batch.labels.push_back(labels[idx]);
  }
  if (is_token_data()) {
    batch.seq = seq_len;
    batch.tokens.reserve(indices.size() * seq_len);
    for (std::size_t idx : indices) {
      const int* row = tokens.data() + idx * seq_len;
      batch.tokens.insert(batch.tokens.end(), row, row + seq_len);
    }
  } else {
    std::vector<double> rows;
    rows.reserve(indices.size() * feature_dim);
    for (std::size_t idx : indices) {
      const double* row = features.data() + idx * feature_dim;
      rows.insert(rows.end(), row, row + feature_dim);
    }
    batch.features = Tensor({indices.size(), feature_dim}, std::move(rows));
  }
  return batch;
}

Batch Dataset::all() const {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(idx);
}

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > n) throw std::out_of_range("dataset: bad slice range");
  Dataset out;
  out.n = end - begin;
  out.num_classes = num_classes;
  out.feature_dim = feature_dim;
  out.seq_len = seq_len;
  out.vocab = vocab;
  if (is_token_data()) {
    out.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(begin * seq_len),
                      tokens.begin() + static_cast<std::ptrdiff_t>(end * seq_len));
  } else {
    out.features.assign(features.begin() + static_cast<std::ptrdiff_t>(begin * feature_dim),
                        features.begin() + static_cast<std::ptrdiff_t>(end * feature_dim));
  }
  out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    labels.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Dataset subsample(const Dataset& data, std::size_t count, std::uint64_t seed) {
  if (count > data.n) throw std::invalid_argument("subsample: count exceeds dataset size");
  std::vector<std::size_t> order(data.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  order.resize(count);

  Dataset out;
  out.n = count;
  out.num_classes = data.num_classes;
  out.feature_dim = data.feature_dim;
  out.seq_len = data.seq_len;
  out.vocab = data.vocab;
  for (std::size_t idx : order) {
    out.labels.push_back(data.labels[idx]);
    if (data.is_token_data()) {
      const int* row = data.tokens.data() + idx * data.seq_len;
      out.tokens.insert(out.tokens.end(), row, row + data.seq_len);
    } else {
      const double* row = data.features.data() + idx * data.feature_dim;
      out.features.insert(out.features.end(), row, row + data.feature_dim);
    }
  }
  return out;
}

BatchStream::BatchStream(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : n_(n), batch_size_(batch_size), seed_(seed) {
  if (n == 0 || batch_size == 0) throw std::invalid_argument("batch stream: empty");
  steps_per_epoch_ = (n + batch_size - 1) / batch_size;
  reshuffle();
}

void BatchStream::reshuffle() {
  ++epoch_;
  offset_ = 0;
  order_.resize(n_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Rng rng(splitmix64(seed_ ^ static_cast<std::uint64_t>(epoch_)));
  rng.shuffle(order_);
}

std::vector<std::size_t> BatchStream::next() {
  if (offset_ >= n_) reshuffle();
  const std::size_t take = std::min(batch_size_, n_ - offset_);
  std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(offset_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(offset_ + take));
  offset_ += take;
  return batch;
}

// ---------------------------------------------------------------------------
// Quadratic problem

Tensor QuadraticProblem::loss_tensor() const {
  Tensor total;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Tensor& w = blocks[b].value;
    const Tensor term = scale(sum(mul(curvatures[b], mul(w, w))), 0.5);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

double QuadraticProblem::lipschitz_constant() const {
  double top = 0.0;
  for (const Tensor& c : curvatures) {
    for (double v : c.values()) top = std::max(top, v);
  }
  return top;
}

void QuadraticProblem::set_block(std::size_t block, std::span<const double> values) {
  auto& w = blocks.at(block).value.values();
  if (values.size() != w.size()) throw std::invalid_argument("set_block: size mismatch");
  std::copy(values.begin(), values.end(), w.begin());
}

QuadraticProblem make_quadratic(const std::vector<double>& spectrum) {
  return make_block_quadratic({spectrum});
}

QuadraticProblem make_block_quadratic(const std::vector<std::vector<double>>& block_spectra) {
  if (block_spectra.empty()) throw std::invalid_argument("quadratic: no curvature spectrum");
  QuadraticProblem problem;
  for (std::size_t b = 0; b < block_spectra.size(); ++b) {
    const auto& spectrum = block_spectra[b];
    if (spectrum.empty()) throw std::invalid_argument("quadratic: empty block");
    for (double c : spectrum) {
      if (!(c > 0.0)) throw std::invalid_argument("quadratic: curvatures must be positive");
    }
    problem.blocks.emplace_back("w" + std::to_string(b + 1),
                                Tensor({spectrum.size()}, 1.0));
    problem.curvatures.emplace_back(std::vector<std::size_t>{spectrum.size()}, spectrum);
  }
  return problem;
}

// ---------------------------------------------------------------------------
// Generators

Dataset make_blobs(std::size_t n, std::size_t dim, int classes, double separation,
                   std::uint64_t seed) {
  if (classes < 2 || dim == 0) throw std::invalid_argument("blobs: classes >= 2, dim >= 1");
  if (n < static_cast<std::size_t>(classes)) {
    throw std::invalid_argument("blobs: need at least one sample per class");
  }
  Rng rng(seed);

  // Class centers sit on signed coordinate axes while they last, then on
  // random directions; either way at distance `separation` from the origin.
  std::vector<std::vector<double>> centers(classes, std::vector<double>(dim, 0.0));
  for (int c = 0; c < classes; ++c) {
    if (static_cast<std::size_t>(c) < 2 * dim) {
      centers[c][c / 2 % dim] = (c % 2 == 0 ? 1.0 : -1.0) * separation;
    } else {
      double norm = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        centers[c][j] = rng.normal();
        norm += centers[c][j] * centers[c][j];
      }
      norm = std::sqrt(norm);
      for (std::size_t j = 0; j < dim; ++j) centers[c][j] *= separation / norm;
    }
  }

  Dataset out;
  out.n = n;
  out.num_classes = classes;
  out.feature_dim = dim;
  out.features.resize(n * dim);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    out.labels[i] = label;
    for (std::size_t j = 0; j < dim; ++j) {
      out.features[i * dim + j] = centers[label][j] + rng.normal();
    }
  }
  return out;
}

int majority_label(std::span<const int> sequence) {
  int count_a = 0, count_b = 0;
  for (std::size_t i = 1; i < sequence.size(); ++i) {
    if (sequence[i] == kContentTokenA) ++count_a;
    if (sequence[i] == kContentTokenB) ++count_b;
  }
  if (count_a == count_b) return -1;
  return count_a > count_b ? 0 : 1;
}

Dataset make_majority_token_task(std::size_t n, std::size_t seq, int vocab,
                                 std::uint64_t seed) {
  if (vocab < 4) throw std::invalid_argument("majority task: vocab must be >= 4");
  if (seq < 3) throw std::invalid_argument("majority task: seq must be >= 3");
  Rng rng(seed);
  // The majority must carry at least a third of the content positions
  // (capped at 5): near-tie sequences are regenerated along with exact
  // ties, so every label is clearly expressed and learnable by the mini
  // encoder.
  const int margin_floor =
      std::max<int>(1, std::min<int>(5, static_cast<int>((seq - 1) / 3)));

  Dataset out;
  out.n = n;
  out.num_classes = 2;
  out.seq_len = seq;
  out.vocab = vocab;
  out.tokens.resize(n * seq);
  out.labels.resize(n);

  std::vector<int> row(seq);
  for (std::size_t i = 0; i < n; ++i) {
    const int target = static_cast<int>(i % 2);
    for (;;) {
      row[0] = kClsToken;
      for (std::size_t p = 1; p < seq; ++p) {
        const double u = rng.uniform();
        if (u < 0.35) {
          row[p] = kContentTokenA;
        } else if (u < 0.70) {
          row[p] = kContentTokenB;
        } else {
          row[p] = 3 + static_cast<int>(rng.index(static_cast<std::size_t>(vocab - 3)));
        }
      }
      const int label = majority_label(row);
      if (label < 0) continue;  // tie: draw again
      int margin = 0;
      for (std::size_t p = 1; p < seq; ++p) {
        if (row[p] == kContentTokenA) ++margin;
        if (row[p] == kContentTokenB) --margin;
      }
      if (std::abs(margin) < margin_floor) continue;
      if (label != target) {
        // Swapping the two content tokens flips the majority, so every
        // draw can serve the label the balance requires.
        for (std::size_t p = 1; p < seq; ++p) {
          if (row[p] == kContentTokenA) {
            row[p] = kContentTokenB;
          } else if (row[p] == kContentTokenB) {
            row[p] = kContentTokenA;
          }
        }
      }
      break;
    }
    std::copy(row.begin(), row.end(), out.tokens.begin() + static_cast<std::ptrdiff_t>(i * seq));
    out.labels[i] = target;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& message) {
  throw ParseError(path + ":" + std::to_string(line_no) + ": " + message);
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  ++line_no;
  const std::size_t columns = split_fields(line).size();
  if (columns < 2) parse_fail(path, line_no, "need at least one feature column and a label");

  Dataset out;
  out.feature_dim = columns - 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != columns) {
      parse_fail(path, line_no, "expected " + std::to_string(columns) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j + 1 < columns; ++j) {
      const char* text = fields[j].c_str();
      char* end = nullptr;
      const double v = std::strtod(text, &end);
      if (end == text || *end != '\0') {
        parse_fail(path, line_no, "field " + std::to_string(j + 1) + " is not numeric: '" +
                                      fields[j] + "'");
      }
      out.features.push_back(v);
    }
    const char* text = fields[columns - 1].c_str();
    char* end = nullptr;
    const long label = std::strtol(text, &end, 10);
    if (end == text || *end != '\0' || label < 0) {
      parse_fail(path, line_no, "label is not a non-negative integer: '" + fields[columns - 1] +
                                    "'");
    }
    out.labels.push_back(static_cast<int>(label));
    max_label = std::max(max_label, static_cast<int>(label));
    ++out.n;
  }
  if (out.n == 0) throw ParseError(path + ": no data rows after the header");
  out.num_classes = std::max(max_label + 1, 2);
  return out;
}

void save_csv(const Dataset& data, const std::string& path) {
  if (data.is_token_data()) {
    throw std::invalid_argument("save_csv: only dense datasets are supported");
  }
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  for (std::size_t j = 0; j < data.feature_dim; ++j) out << "f" << j << ",";
  out << "label\n";
  char buf[40];
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.feature_dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.features[i * data.feature_dim + j]);
      out << buf << ",";
    }
    out << data.labels[i] << "\n";
  }
  if (!out) throw ParseError(path + ": write failed");
}

}  // namespace lsopt
