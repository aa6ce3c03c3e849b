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

#include <optional>
#include <string>
#include <vector>

#include "lsopt/config.hpp"
#include "lsopt/csv.hpp"
#include "lsopt/optimizers.hpp"

namespace lsopt {

/// One logged training step. Wall-clock time stays in memory and in the
/// console log; it is deliberately kept out of the CSV outputs so reruns
/// of the same config produce byte-identical files.
struct RunRecord {
  long step = 0;
  long epoch = 0;
  double loss = 0.0;
  double ema_loss = 0.0;
  std::optional<double> accuracy;  // evaluated once per epoch
  double step_size = 0.0;
  int backtracks = 0;
  bool accepted = true;
  long forward_passes = 0;
  long backward_passes = 0;
  std::vector<std::pair<std::string, double>> unit_step_sizes;
  std::string searched_unit;
  std::string merge_note;  // "a+b" when two units merged this step
  double wall_ms = 0.0;
};

/// One seed's training trajectory.
struct RunSeries {
  long seed_index = 0;
  bool failed = false;        // loss went non-finite; excluded from summaries
  std::vector<RunRecord> records;
  double final_ema_loss = 0.0;
  std::optional<double> final_accuracy;
};

struct SummaryRow {
  std::string experiment;
  std::string task;
  std::string optimizer;
  int seeds = 0;
  int failed_seeds = 0;
  // Means and standard errors over the non-failed seeds; empty optionals
  // when no seed survived or the task has no accuracy notion.
  std::optional<double> mean_final_accuracy;
  std::optional<double> stderr_final_accuracy;
  std::optional<double> mean_final_ema_loss;
  std::optional<double> stderr_final_ema_loss;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<RunSeries> runs;
  SummaryRow summary;
  std::string directory;  // where the CSVs were written (empty if not written)
};

/// Trains every seed of one experiment and, when write_outputs is set,
/// writes <out_dir>/<name>/run_seed<i>.csv plus summary.csv. Progress goes
/// to the console; all file outputs are deterministic functions of the
/// config.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs = true,
                                bool verbose = false);

/// Runs every config and writes one merged CSV with the per-step mean and
/// standard error of the EMA loss for each experiment, aligned by step.
/// All configs must share the task and step budget.
CsvTable compare_experiments(const std::vector<ExperimentConfig>& configs,
                             const std::string& out_path, bool verbose = false);

/// Reads the run CSVs of one experiment directory (adamsls or plasls runs
/// only) and writes a long-format (seed, step, unit, step_size, mean) CSV.
CsvTable emit_stepsize_trace(const std::string& run_dir, const std::string& out_path);

/// Recomputes a summary from the run CSVs in an experiment directory and
/// checks it against summary.csv; returns the largest absolute deviation.
/// Throws if files are missing or malformed.
double audit_summary(const std::string& run_dir);

std::string summary_to_text(const std::vector<SummaryRow>& rows);

}  // namespace lsopt
