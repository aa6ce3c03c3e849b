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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lsopt/harness.hpp"

using namespace lsopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("lsopt_harness_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quadratic_config(const std::string& name = "quad") {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.task = "quadratic";
  cfg.optimizer = "sgdsls";
  cfg.curvatures = {1.0, 10.0};
  cfg.quad_steps = 40;
  cfg.seeds = 1;
  return cfg;
}

ExperimentConfig blobs_config(const std::string& name, const std::string& optimizer) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.task = "blobs";
  cfg.model = "logreg";
  cfg.optimizer = optimizer;
  cfg.train_samples = 80;
  cfg.features = 4;
  cfg.classes = 2;
  cfg.separation = 6.0;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  cfg.seeds = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("config parsing") {
  TEST_CASE("a sectioned file with shared defaults") {
    const std::string text =
        "# shared\n"
        "task = blobs\n"
        "seeds = 2\n"
        "\n"
        "[a]\n"
        "optimizer = adamsls\n"
        "\n"
        "[b]\n"
        "optimizer = adam\n"
        "peak_lr = 1e-4\n";
    const auto configs = parse_config_text(text, "test.cfg");
    REQUIRE(configs.size() == 2);
    CHECK(configs[0].name == "a");
    CHECK(configs[0].task == "blobs");
    CHECK(configs[0].seeds == 2);
    CHECK(configs[0].model == "logreg");  // defaulted from the task
    CHECK(configs[1].optimizer == "adam");
    CHECK(configs[1].peak_lr == 1e-4);
  }

  TEST_CASE("unknown keys fail with file and line") {
    CHECK_THROWS_WITH_AS(
        parse_config_text("task = blobs\noptimizer = adamsls\nbanana = 1\n", "x.cfg"),
        doctest::Contains("x.cfg:3"), std::invalid_argument);
  }

  TEST_CASE("learning-rate keys are rejected for line-searched optimizers") {
    for (const std::string opt : {"sgdsls", "adamsls", "plasls"}) {
      const std::string text = "task = blobs\noptimizer = " + opt + "\npeak_lr = 1e-3\n";
      CHECK_THROWS_WITH_AS(parse_config_text(text, "lr.cfg"),
                           doctest::Contains("learning rate"), std::invalid_argument);
      const std::string warm = "task = blobs\noptimizer = " + opt + "\nwarmup_fraction = 0.2\n";
      CHECK_THROWS_AS(parse_config_text(warm, "lr.cfg"), std::invalid_argument);
    }
    // The same keys are fine for the adam baseline.
    CHECK_NOTHROW(parse_config_text("task = blobs\noptimizer = adam\npeak_lr = 1e-3\n", "ok.cfg"));
  }

  TEST_CASE("line-search keys are rejected for the adam baseline") {
    CHECK_THROWS_AS(
        parse_config_text("task = blobs\noptimizer = adam\nls_max_backtracks = 5\n", "x.cfg"),
        std::invalid_argument);
  }

  TEST_CASE("partition rules") {
    CHECK_THROWS_AS(
        parse_config_text("task = blobs\noptimizer = adamsls\npartition = whole\n", "x.cfg"),
        std::invalid_argument);
    // qkv needs the encoder model.
    CHECK_THROWS_AS(parse_config_text(
                        "task = blobs\nmodel = mlp\noptimizer = plasls\npartition = qkv\n",
                        "x.cfg"),
                    std::invalid_argument);
    CHECK_NOTHROW(parse_config_text(
        "task = majority\noptimizer = plasls\npartition = qkv\nblocks = 2\n", "x.cfg"));
    // per_layer must fit the architecture.
    CHECK_THROWS_AS(
        parse_config_text(
            "task = blobs\nmodel = mlp\ndepth = 2\noptimizer = plasls\npartition = per_layer:5\n",
            "x.cfg"),
        std::invalid_argument);
  }

  TEST_CASE("task-specific keys are rejected elsewhere") {
    CHECK_THROWS_AS(
        parse_config_text("task = quadratic\noptimizer = sgdsls\ncurvatures = 1\nepochs = 3\n",
                          "x.cfg"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        parse_config_text("task = blobs\noptimizer = adamsls\ncurvatures = 1;2\n", "x.cfg"),
        std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("task = majority\noptimizer = adamsls\nseparation = 2\n",
                                      "x.cfg"),
                    std::invalid_argument);
  }

  TEST_CASE("curvature list parsing") {
    const auto configs = parse_config_text(
        "task = quadratic\noptimizer = sgdsls\ncurvatures = 1; 10 ;100\n", "q.cfg");
    CHECK(configs[0].curvatures == std::vector<double>{1.0, 10.0, 100.0});
  }
}

TEST_SUITE("run_experiment") {
  TEST_CASE("single-seed quadratic summary has one row with zero stderr") {
    TempDir dir("quad");
    ExperimentConfig cfg = quadratic_config();
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    CHECK(result.runs.size() == 1);
    CHECK_FALSE(result.runs[0].failed);
    CHECK(result.summary.seeds == 1);
    CHECK(result.summary.failed_seeds == 0);
    REQUIRE(result.summary.stderr_final_ema_loss.has_value());
    CHECK(*result.summary.stderr_final_ema_loss == 0.0);
    CHECK_FALSE(result.summary.mean_final_accuracy.has_value());  // no accuracy on quadratics
    CHECK(fs::exists(fs::path(result.directory) / "run_seed000.csv"));
    CHECK(fs::exists(fs::path(result.directory) / "summary.csv"));
  }

  TEST_CASE("reruns are byte-identical") {
    TempDir dir_a("rerun_a");
    TempDir dir_b("rerun_b");
    ExperimentConfig cfg = blobs_config("det", "adamsls");
    cfg.out_dir = dir_a.str();
    run_experiment(cfg, true, false);
    cfg.out_dir = dir_b.str();
    run_experiment(cfg, true, false);
    for (const char* file : {"run_seed000.csv", "run_seed001.csv", "run_seed002.csv",
                             "summary.csv"}) {
      const std::string a = read_file(dir_a.path / "det" / file);
      const std::string b = read_file(dir_b.path / "det" / file);
      REQUIRE_FALSE(a.empty());
      CHECK(a == b);
    }
  }

  TEST_CASE("ema follows its definition and accuracy appears once per epoch") {
    TempDir dir("ema");
    ExperimentConfig cfg = blobs_config("ema", "sgdsls");
    cfg.seeds = 1;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    const auto& records = result.runs[0].records;
    REQUIRE_FALSE(records.empty());
    double ema = records[0].loss;
    CHECK(records[0].ema_loss == ema);
    int accuracy_rows = 0;
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (k > 0) {
        ema = 0.99 * ema + 0.01 * records[k].loss;
        CHECK(records[k].ema_loss == doctest::Approx(ema).epsilon(1e-15));
      }
      if (records[k].accuracy) ++accuracy_rows;
    }
    CHECK(accuracy_rows == cfg.epochs);
    CHECK(result.runs[0].final_accuracy.has_value());
  }

  TEST_CASE("per-unit step sizes are logged and shrink after merges") {
    TempDir dir("merge");
    ExperimentConfig cfg = blobs_config("merge", "plasls");
    cfg.model = "mlp";
    cfg.depth = 3;
    cfg.width = 8;
    cfg.partition = "per_layer:3";
    cfg.merge_threshold = 12.0;  // above the step ceiling: merge immediately
    cfg.seeds = 1;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    const auto& records = result.runs[0].records;
    CHECK(records.front().unit_step_sizes.size() == 3);
    CHECK(records.back().unit_step_sizes.size() == 1);
    bool saw_merge = false, saw_drop = false;
    for (std::size_t k = 1; k < records.size(); ++k) {
      if (!records[k].merge_note.empty()) saw_merge = true;
      if (records[k].unit_step_sizes.size() < records[k - 1].unit_step_sizes.size()) {
        saw_drop = true;
        CHECK_FALSE(records[k].merge_note.empty());
      }
    }
    CHECK(saw_merge);
    CHECK(saw_drop);
  }

  TEST_CASE("non-finite losses fail the seed and are excluded from the summary") {
    TempDir dir("nan");
    ExperimentConfig cfg = quadratic_config("explode");
    cfg.curvatures = {1e308};
    cfg.seeds = 2;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    CHECK(result.summary.failed_seeds == 2);
    CHECK_FALSE(result.summary.mean_final_ema_loss.has_value());
    const CsvTable run = CsvTable::read((fs::path(result.directory) / "run_seed000.csv").string());
    CHECK(run.meta("failed") == "1");
  }
}

TEST_SUITE("compare") {
  TEST_CASE("an experiment compared with itself yields identical columns") {
    ExperimentConfig a = blobs_config("left", "adamsls");
    ExperimentConfig b = blobs_config("right", "adamsls");
    a.seeds = b.seeds = 2;
    const CsvTable merged = compare_experiments({a, b}, "", false);
    const std::size_t la = merged.column("left_ema_mean");
    const std::size_t ra = merged.column("right_ema_mean");
    const std::size_t ls = merged.column("left_ema_stderr");
    const std::size_t rs = merged.column("right_ema_stderr");
    CHECK(merged.rows.size() == static_cast<std::size_t>(a.total_steps()));
    for (const auto& row : merged.rows) {
      CHECK(row[la] == row[ra]);
      CHECK(row[ls] == row[rs]);
    }
  }

  TEST_CASE("four experiments emit four mean and four stderr columns") {
    std::vector<ExperimentConfig> configs;
    for (const std::string opt : {"adam", "sgdsls", "adamsls", "plasls"}) {
      configs.push_back(blobs_config(opt + "-run", opt));
      configs.back().seeds = 1;
    }
    const CsvTable merged = compare_experiments(configs, "", false);
    CHECK(merged.header.size() == 1 + 8);
    for (const std::string opt : {"adam", "sgdsls", "adamsls", "plasls"}) {
      CHECK_NOTHROW(merged.column(opt + "-run_ema_mean"));
      CHECK_NOTHROW(merged.column(opt + "-run_ema_stderr"));
    }
  }

  TEST_CASE("column means match hand-averaged per-run values") {
    ExperimentConfig cfg = blobs_config("avg", "adamsls");
    const ExperimentResult reference = run_experiment(cfg, false, false);
    const CsvTable merged = compare_experiments({cfg}, "", false);
    const std::size_t mean_col = merged.column("avg_ema_mean");
    for (std::size_t k = 0; k < merged.rows.size(); ++k) {
      double mean = 0.0;
      for (const RunSeries& run : reference.runs) mean += run.records[k].ema_loss;
      mean /= static_cast<double>(reference.runs.size());
      CHECK(std::abs(std::stod(merged.rows[k][mean_col]) - mean) <= 1e-12);
    }
  }

  TEST_CASE("mismatched budgets are contract errors") {
    ExperimentConfig a = blobs_config("a", "adamsls");
    ExperimentConfig b = blobs_config("b", "adamsls");
    b.epochs = 3;
    CHECK_THROWS_AS(compare_experiments({a, b}, "", false), std::invalid_argument);
    ExperimentConfig c = quadratic_config("c");
    CHECK_THROWS_AS(compare_experiments({a, c}, "", false), std::invalid_argument);
    CHECK_THROWS_AS(compare_experiments({a, a}, "", false), std::invalid_argument);  // same name
  }
}

TEST_SUITE("stepsize trace") {
  TEST_CASE("adamsls trace mirrors its single step-size log") {
    TempDir dir("trace");
    ExperimentConfig cfg = blobs_config("tr", "adamsls");
    cfg.seeds = 1;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    const CsvTable trace = emit_stepsize_trace(result.directory, "");
    REQUIRE(trace.rows.size() == result.runs[0].records.size());
    const std::size_t eta_col = trace.column("step_size");
    const std::size_t mean_col = trace.column("mean_step_size");
    const std::size_t unit_col = trace.column("unit");
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
      CHECK(trace.rows[k][unit_col] == "all");
      CHECK(std::stod(trace.rows[k][eta_col]) ==
            result.runs[0].records[k].unit_step_sizes[0].second);
      CHECK(trace.rows[k][eta_col] == trace.rows[k][mean_col]);  // one unit: mean == value
    }
  }

  TEST_CASE("plasls trace averages units and shows merges as count drops") {
    TempDir dir("trace_pl");
    ExperimentConfig cfg = blobs_config("trpl", "plasls");
    cfg.model = "mlp";
    cfg.depth = 2;
    cfg.width = 6;
    cfg.partition = "per_layer:2";
    cfg.merge_threshold = 12.0;
    cfg.seeds = 1;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    const CsvTable trace = emit_stepsize_trace(result.directory, "");
    const std::size_t step_col = trace.column("step");
    const std::size_t eta_col = trace.column("step_size");
    const std::size_t mean_col = trace.column("mean_step_size");

    // Group rows by step and confirm the mean column and the unit counts.
    std::map<long, std::vector<std::pair<double, double>>> by_step;
    for (const auto& row : trace.rows) {
      by_step[std::stol(row[step_col])].push_back(
          {std::stod(row[eta_col]), std::stod(row[mean_col])});
    }
    std::size_t previous_units = by_step.begin()->second.size();
    bool saw_drop = false;
    for (const auto& [step, rows] : by_step) {
      double mean = 0.0;
      for (const auto& [eta, m] : rows) mean += eta;
      mean /= static_cast<double>(rows.size());
      for (const auto& [eta, m] : rows) CHECK(std::abs(m - mean) <= 1e-12);
      if (rows.size() < previous_units) saw_drop = true;
      previous_units = rows.size();
    }
    CHECK(saw_drop);
    CHECK(by_step.rbegin()->second.size() == 1);
  }

  TEST_CASE("optimizers without searched step sizes are rejected") {
    TempDir dir("trace_adam");
    ExperimentConfig cfg = blobs_config("tra", "adam");
    cfg.seeds = 1;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    CHECK_THROWS_AS(emit_stepsize_trace(result.directory, ""), std::invalid_argument);
  }
}

TEST_SUITE("audit") {
  TEST_CASE("summaries are exactly recomputable from the run files") {
    TempDir dir("audit");
    ExperimentConfig cfg = blobs_config("aud", "plasls");
    cfg.model = "mlp";
    cfg.depth = 2;
    cfg.width = 6;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    CHECK(audit_summary(result.directory) == 0.0);
  }

  TEST_CASE("audit also covers runs with failed seeds") {
    TempDir dir("audit_failed");
    ExperimentConfig cfg = quadratic_config("boom");
    cfg.curvatures = {1e308};
    cfg.seeds = 2;
    cfg.out_dir = dir.str();
    const ExperimentResult result = run_experiment(cfg, true, false);
    CHECK(audit_summary(result.directory) == 0.0);
  }
}
