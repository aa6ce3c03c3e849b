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

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsopt/config.hpp"
#include "lsopt/harness.hpp"

namespace {

void apply_overrides(lsopt::ExperimentConfig& cfg, const std::string& out_dir, int seeds,
                     int epochs) {
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seeds > 0) cfg.seeds = seeds;
  if (epochs > 0) {
    if (cfg.task == "quadratic") {
      throw std::invalid_argument("--epochs does not apply to the quadratic task");
    }
    cfg.epochs = epochs;
  }
  lsopt::validate_config(cfg);
}

int run_command(const std::string& config_path, const std::string& out_dir, int seeds,
                int epochs) {
  std::vector<lsopt::ExperimentConfig> configs = lsopt::parse_config_file(config_path);
  std::vector<lsopt::SummaryRow> rows;
  for (lsopt::ExperimentConfig& cfg : configs) {
    apply_overrides(cfg, out_dir, seeds, epochs);
    std::cout << "running " << cfg.name << " (" << cfg.task << ", " << cfg.optimizer << ")\n";
    const lsopt::ExperimentResult result = lsopt::run_experiment(cfg, true, /*verbose=*/true);
    std::cout << "  wrote " << result.directory << "\n";
    rows.push_back(result.summary);
  }
  std::cout << "\n" << lsopt::summary_to_text(rows);
  return 0;
}

int compare_command(const std::vector<std::string>& config_paths, const std::string& out_path,
                    int seeds, int epochs) {
  std::vector<lsopt::ExperimentConfig> configs;
  for (const std::string& path : config_paths) {
    for (lsopt::ExperimentConfig& cfg : lsopt::parse_config_file(path)) {
      apply_overrides(cfg, "", seeds, epochs);
      configs.push_back(std::move(cfg));
    }
  }
  lsopt::compare_experiments(configs, out_path, /*verbose=*/true);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int trace_command(const std::string& run_dir, const std::string& out_path) {
  lsopt::emit_stepsize_trace(run_dir, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-search optimizer benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_dir;
  std::vector<std::string> config_paths;
  std::string compare_out = "compare.csv";
  std::string trace_out = "trace.csv";
  int seeds = 0, epochs = 0;

  CLI::App* run = app.add_subcommand("run", "Run every experiment in a config file");
  run->add_option("config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--seeds", seeds, "number of seeds override")->check(CLI::PositiveNumber);
  run->add_option("--epochs", epochs, "epoch count override")->check(CLI::PositiveNumber);

  CLI::App* compare = app.add_subcommand("compare", "Merge per-step curves of experiments");
  compare->add_option("configs", config_paths, "experiment config files")->required();
  compare->add_option("--out", compare_out, "output CSV path");
  compare->add_option("--seeds", seeds, "number of seeds override")->check(CLI::PositiveNumber);
  compare->add_option("--epochs", epochs, "epoch count override")->check(CLI::PositiveNumber);

  CLI::App* trace = app.add_subcommand("trace", "Step-size trajectories of a run directory");
  trace->add_option("run_dir", run_dir, "experiment output directory")->required();
  trace->add_option("--out", trace_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(config_path, out_dir, seeds, epochs);
    if (compare->parsed()) return compare_command(config_paths, compare_out, seeds, epochs);
    if (trace->parsed()) return trace_command(run_dir, trace_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
