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
#include <set>
#include <string>
#include <vector>

namespace lsopt {

/// One experiment: task, model, optimizer, budget and overrides. Parsed
/// from a flat key=value file with one [section] per experiment; keys
/// before the first section apply to every section. Every config is fully
/// validated at parse time, including the rule that learning-rate settings
/// (peak_lr, warmup_fraction) are only accepted for the adam baseline --
/// the line-searched optimizers take no learning rate at all.
struct ExperimentConfig {
  std::string name = "experiment";

  std::string task;       // blobs | majority | quadratic
  std::string model;      // logreg | mlp | encoder (defaulted from task)
  std::string optimizer;  // adam | sgdsls | adamsls | plasls
  std::string partition;  // plasls only; empty = finest per-layer split

  int epochs = 5;
  long batch_size = 32;
  int seeds = 5;
  std::uint64_t seed_base = 1;
  std::string out_dir = "out";

  // data
  long train_samples = 500;
  long features = 20;
  int classes = 2;
  double separation = 10.0;
  long seq_len = 16;
  int vocab = 64;
  double eval_fraction = 0.2;
  long subsample_n = 0;  // 0 = off
  std::vector<double> curvatures;
  long quad_steps = 100;

  // model
  int depth = 3;
  long width = 32;
  std::string activation = "relu";
  long embed_dim = 32;
  int blocks = 4;

  // adam baseline schedule
  double peak_lr = 2e-5;
  double warmup_fraction = 0.1;

  // line search
  double ls_sufficient_decrease = 0.1;
  double ls_backtrack_factor = 0.9;
  double ls_max_step = 10.0;
  int ls_max_backtracks = 100;
  long reset_samples = 0;  // 0 = training-set size (quadratic: 1)
  std::string decrease_term = "scaled";  // scaled | raw
  double merge_threshold = 1e-12;

  double ema_decay = 0.99;

  std::set<std::string> explicit_keys;
  bool was_set(const std::string& key) const { return explicit_keys.count(key) > 0; }

  long total_steps() const;
  long effective_train_samples() const;  // after an optional subsample
  long effective_reset_samples() const;
};

/// Parses and validates every experiment in a config file.
/// Throws std::invalid_argument with file/line context on any problem.
std::vector<ExperimentConfig> parse_config_file(const std::string& path);

/// Same, from in-memory text; `origin` names the source in error messages.
std::vector<ExperimentConfig> parse_config_text(const std::string& text,
                                                const std::string& origin);

void validate_config(const ExperimentConfig& cfg);

}  // namespace lsopt
