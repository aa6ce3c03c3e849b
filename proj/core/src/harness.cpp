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

#include "lsopt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "lsopt/data.hpp"
#include "lsopt/models.hpp"

namespace lsopt {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Seed streams: the dataset is shared by every seed of an experiment,
// while model init and batch order vary per seed.
std::uint64_t data_seed(const ExperimentConfig& cfg) { return splitmix64(cfg.seed_base ^ 0xda7a); }
std::uint64_t model_seed(const ExperimentConfig& cfg, long run) {
  return splitmix64(cfg.seed_base + 0x517ull * static_cast<std::uint64_t>(run + 1));
}
std::uint64_t stream_seed(const ExperimentConfig& cfg, long run) {
  return splitmix64((cfg.seed_base + 0xbadc) ^ (static_cast<std::uint64_t>(run + 1) * 0x9e3779b9ull));
}

struct TaskData {
  Dataset train;
  Dataset eval;
};

TaskData build_data(const ExperimentConfig& cfg) {
  const long train_n = cfg.train_samples;
  const long eval_n =
      std::lround(static_cast<double>(train_n) * cfg.eval_fraction / (1.0 - cfg.eval_fraction));
  const std::size_t total = static_cast<std::size_t>(train_n + eval_n);

  Dataset full;
  if (cfg.task == "blobs") {
    full = make_blobs(total, static_cast<std::size_t>(cfg.features), cfg.classes, cfg.separation,
                      data_seed(cfg));
  } else {
    full = make_majority_token_task(total, static_cast<std::size_t>(cfg.seq_len), cfg.vocab,
                                    data_seed(cfg));
  }
  TaskData data;
  data.train = full.slice(0, static_cast<std::size_t>(train_n));
  data.eval = full.slice(static_cast<std::size_t>(train_n), total);
  if (cfg.subsample_n > 0) {
    data.train =
        subsample(data.train, static_cast<std::size_t>(cfg.subsample_n), data_seed(cfg) ^ 0x5b);
  }
  return data;
}

std::unique_ptr<Model> build_model(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.model == "logreg") {
    return std::make_unique<LogisticRegression>(static_cast<std::size_t>(cfg.features),
                                                cfg.classes, seed);
  }
  if (cfg.model == "mlp") {
    const auto act = cfg.activation == "gelu" ? Mlp::Activation::gelu : Mlp::Activation::relu;
    return std::make_unique<Mlp>(static_cast<std::size_t>(cfg.features), cfg.classes, cfg.depth,
                                 static_cast<std::size_t>(cfg.width), act, seed);
  }
  if (cfg.model == "encoder") {
    return std::make_unique<Encoder>(cfg.vocab, static_cast<std::size_t>(cfg.seq_len),
                                     static_cast<std::size_t>(cfg.embed_dim), cfg.blocks, 2, seed);
  }
  throw std::invalid_argument("unknown model '" + cfg.model + "'");
}

LineSearchConfig line_search_config(const ExperimentConfig& cfg) {
  LineSearchConfig ls;
  ls.sufficient_decrease = cfg.ls_sufficient_decrease;
  ls.backtrack_factor = cfg.ls_backtrack_factor;
  ls.max_step_size = cfg.ls_max_step;
  ls.max_backtracks = cfg.ls_max_backtracks;
  ls.batch_size = cfg.task == "quadratic" ? 1 : cfg.batch_size;
  ls.samples_per_doubling = cfg.effective_reset_samples();
  return ls;
}

SplitScheme default_partition(const ExperimentConfig& cfg, const Model* model) {
  if (!cfg.partition.empty()) return SplitScheme::parse(cfg.partition);
  if (cfg.model == "encoder" && model != nullptr) {
    const auto* enc = dynamic_cast<const Encoder*>(model);
    const int blocks = enc != nullptr ? enc->blocks() : 0;
    return blocks >= 1 ? SplitScheme::per_layer(blocks + 2) : SplitScheme::per_layer(2);
  }
  if (cfg.model == "mlp") return SplitScheme::per_layer(cfg.depth);
  return SplitScheme::per_layer(1);
}

std::unique_ptr<Optimizer> build_optimizer(const ExperimentConfig& cfg,
                                           std::vector<Parameter>& params, const Model* model,
                                           long total_steps) {
  const DecreaseTerm decrease =
      cfg.decrease_term == "raw" ? DecreaseTerm::raw : DecreaseTerm::scaled;
  if (cfg.optimizer == "adam") {
    WarmupCosineSchedule schedule;
    schedule.peak_lr = cfg.peak_lr;
    schedule.warmup_fraction = cfg.warmup_fraction;
    schedule.total_steps = total_steps;
    return std::make_unique<ScheduledAdam>(params, schedule);
  }
  const LineSearchConfig ls = line_search_config(cfg);
  if (cfg.optimizer == "sgdsls") return std::make_unique<SgdLineSearch>(params, ls);
  if (cfg.optimizer == "adamsls") {
    return std::make_unique<AdamLineSearch>(params, ls, AdamState{}, decrease);
  }
  // plasls
  Partition partition;
  if (cfg.task == "quadratic") {
    // One unit per quadratic block.
    for (std::size_t i = 0; i < params.size(); ++i) {
      partition.units.push_back({params[i].name, {i}});
    }
  } else {
    partition = partition_model(*model, default_partition(cfg, model));
  }
  return std::make_unique<UnitwiseAdamLineSearch>(params, std::move(partition), ls, AdamState{},
                                                  decrease, cfg.merge_threshold);
}

double eval_accuracy(const Model& model, const Dataset& ds) {
  const std::size_t chunk = 256;
  std::size_t done = 0;
  double hits = 0.0;
  std::vector<std::size_t> idx;
  while (done < ds.n) {
    const std::size_t take = std::min(chunk, ds.n - done);
    idx.resize(take);
    for (std::size_t i = 0; i < take; ++i) idx[i] = done + i;
    const Batch batch = ds.gather(idx);
    hits += batch_accuracy(model, batch) * static_cast<double>(take);
    done += take;
  }
  return hits / static_cast<double>(ds.n);
}

std::string pack_unit_steps(const std::vector<std::pair<std::string, double>>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += ";";
    out += sizes[i].first + "=" + format_double(sizes[i].second);
  }
  return out;
}

RunSeries run_single(const ExperimentConfig& cfg, long seed_index) {
  RunSeries series;
  series.seed_index = seed_index;

  const bool quadratic = cfg.task == "quadratic";
  const long total_steps = cfg.total_steps();

  TaskData data;
  std::unique_ptr<Model> model;
  QuadraticProblem problem;
  std::vector<Parameter>* params = nullptr;
  std::unique_ptr<BatchStream> stream;
  std::size_t steps_per_epoch = 1;

  if (quadratic) {
    problem = make_quadratic(cfg.curvatures);
    params = &problem.blocks;
    steps_per_epoch = static_cast<std::size_t>(total_steps);
  } else {
    data = build_data(cfg);
    model = build_model(cfg, model_seed(cfg, seed_index));
    params = &model->parameters();
    stream = std::make_unique<BatchStream>(data.train.n,
                                           static_cast<std::size_t>(cfg.batch_size),
                                           stream_seed(cfg, seed_index));
    steps_per_epoch = stream->steps_per_epoch();
  }

  std::unique_ptr<Optimizer> opt = build_optimizer(cfg, *params, model.get(), total_steps);

  double ema = 0.0;
  for (long step = 0; step < total_steps; ++step) {
    const auto t0 = Clock::now();

    Batch batch;
    if (!quadratic) batch = data.train.gather(stream->next());
    const BatchLoss loss(
        [&]() {
          return quadratic ? problem.loss_tensor().item() : batch_loss(*model, batch).item();
        },
        [&]() {
          zero_grads(*params);
          Tape tape;
          const Tensor l = quadratic ? problem.loss_tensor() : batch_loss(*model, batch);
          tape.backward(l);
          return l.item();
        });

    const StepResult res = opt->step(loss);
    ema = step == 0 ? res.loss : cfg.ema_decay * ema + (1.0 - cfg.ema_decay) * res.loss;

    RunRecord rec;
    rec.step = step;
    rec.epoch = step / static_cast<long>(steps_per_epoch);
    rec.loss = res.loss;
    rec.ema_loss = ema;
    rec.step_size = res.step_size;
    rec.backtracks = res.backtracks;
    rec.accepted = res.accepted;
    rec.forward_passes = res.forward_passes;
    rec.backward_passes = res.backward_passes;
    rec.unit_step_sizes = opt->step_sizes();
    rec.searched_unit = res.searched_unit;
    if (res.merge) rec.merge_note = res.merge->unit_a + "+" + res.merge->unit_b;
    rec.wall_ms = ms_since(t0);

    if (!std::isfinite(res.loss) || !std::isfinite(ema)) {
      series.failed = true;
      series.records.push_back(std::move(rec));
      break;
    }
    const bool epoch_end = (step + 1) % static_cast<long>(steps_per_epoch) == 0;
    if (!quadratic && epoch_end && data.eval.n > 0) {
      rec.accuracy = eval_accuracy(*model, data.eval);
    }
    series.records.push_back(std::move(rec));
  }

  if (!series.records.empty()) {
    series.final_ema_loss = series.records.back().ema_loss;
    for (auto it = series.records.rbegin(); it != series.records.rend(); ++it) {
      if (it->accuracy) {
        series.final_accuracy = it->accuracy;
        break;
      }
    }
  }
  return series;
}

struct Stats {
  std::optional<double> mean, stderr_;
};

Stats mean_stderr(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

SummaryRow summarize(const ExperimentConfig& cfg, const std::vector<RunSeries>& runs) {
  SummaryRow row;
  row.experiment = cfg.name;
  row.task = cfg.task;
  row.optimizer = cfg.optimizer;
  row.seeds = static_cast<int>(runs.size());
  std::vector<double> accs, emas;
  for (const RunSeries& run : runs) {
    if (run.failed) {
      ++row.failed_seeds;
      continue;
    }
    emas.push_back(run.final_ema_loss);
    if (run.final_accuracy) accs.push_back(*run.final_accuracy);
  }
  const Stats ema = mean_stderr(emas);
  row.mean_final_ema_loss = ema.mean;
  row.stderr_final_ema_loss = ema.stderr_;
  const Stats acc = mean_stderr(accs);
  row.mean_final_accuracy = acc.mean;
  row.stderr_final_accuracy = acc.stderr_;
  return row;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string run_file_name(long seed_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_seed%03ld.csv", seed_index);
  return buf;
}

CsvTable run_to_csv(const ExperimentConfig& cfg, const RunSeries& run) {
  CsvTable t;
  t.add_meta("schema", "run-v1");
  t.add_meta("experiment", cfg.name);
  t.add_meta("task", cfg.task);
  t.add_meta("optimizer", cfg.optimizer);
  t.add_meta("seed", std::to_string(run.seed_index));
  t.add_meta("failed", run.failed ? "1" : "0");
  t.header = {"step",     "epoch",    "loss",      "ema_loss",        "accuracy",
              "step_size", "backtracks", "accepted", "forward_passes", "backward_passes",
              "n_units",  "unit_step_sizes", "searched_unit", "merge"};
  for (const RunRecord& rec : run.records) {
    t.rows.push_back({std::to_string(rec.step), std::to_string(rec.epoch),
                      format_double(rec.loss), format_double(rec.ema_loss),
                      rec.accuracy ? format_double(*rec.accuracy) : std::string(),
                      format_double(rec.step_size), std::to_string(rec.backtracks),
                      rec.accepted ? "1" : "0", std::to_string(rec.forward_passes),
                      std::to_string(rec.backward_passes),
                      std::to_string(rec.unit_step_sizes.size()),
                      pack_unit_steps(rec.unit_step_sizes), rec.searched_unit, rec.merge_note});
  }
  return t;
}

CsvTable summary_to_csv(const std::vector<SummaryRow>& rows) {
  CsvTable t;
  t.add_meta("schema", "summary-v1");
  t.header = {"experiment", "task",   "optimizer",           "seeds",
              "failed_seeds", "mean_final_accuracy", "stderr_final_accuracy",
              "mean_final_ema_loss", "stderr_final_ema_loss"};
  for (const SummaryRow& row : rows) {
    t.rows.push_back({row.experiment, row.task, row.optimizer, std::to_string(row.seeds),
                      std::to_string(row.failed_seeds), opt_cell(row.mean_final_accuracy),
                      opt_cell(row.stderr_final_accuracy), opt_cell(row.mean_final_ema_loss),
                      opt_cell(row.stderr_final_ema_loss)});
  }
  return t;
}

std::vector<std::pair<std::string, double>> unpack_unit_steps(const std::string& packed) {
  std::vector<std::pair<std::string, double>> out;
  std::stringstream ss(packed);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(item.substr(0, eq), std::stod(item.substr(eq + 1)));
  }
  return out;
}

std::vector<std::string> sorted_run_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("run_seed", 0) == 0 && name.size() > 4 &&
        name.substr(name.size() - 4) == ".csv") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::invalid_argument("no run_seed*.csv files in '" + dir + "'");
  return files;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs, bool verbose) {
  validate_config(cfg);
  ExperimentResult result;
  result.config = cfg;

  const auto t0 = Clock::now();
  for (int seed = 0; seed < cfg.seeds; ++seed) {
    RunSeries series = run_single(cfg, seed);
    if (verbose) {
      std::cout << "  " << cfg.name << " seed " << seed << ": "
                << (series.failed ? "FAILED (non-finite loss)"
                                  : "final ema loss " + format_double(series.final_ema_loss))
                << "\n";
    }
    result.runs.push_back(std::move(series));
  }
  result.summary = summarize(cfg, result.runs);

  if (write_outputs) {
    const fs::path dir = fs::path(cfg.out_dir) / cfg.name;
    fs::create_directories(dir);
    for (const RunSeries& run : result.runs) {
      run_to_csv(cfg, run).write((dir / run_file_name(run.seed_index)).string());
    }
    summary_to_csv({result.summary}).write((dir / "summary.csv").string());
    result.directory = dir.string();
  }
  if (verbose) {
    std::cout << "  " << cfg.name << ": " << cfg.seeds << " seed(s) in "
              << format_double(ms_since(t0) / 1000.0) << " s\n";
  }
  return result;
}

CsvTable compare_experiments(const std::vector<ExperimentConfig>& configs,
                             const std::string& out_path, bool verbose) {
  if (configs.empty()) throw std::invalid_argument("compare: no experiments");
  const long steps = configs.front().total_steps();
  for (const ExperimentConfig& cfg : configs) {
    if (cfg.task != configs.front().task) {
      throw std::invalid_argument("compare: experiments must share a task");
    }
    if (cfg.total_steps() != steps) {
      throw std::invalid_argument("compare: experiments must share the step budget");
    }
    for (const ExperimentConfig& other : configs) {
      if (&other != &cfg && other.name == cfg.name) {
        throw std::invalid_argument("compare: duplicate experiment name '" + cfg.name + "'");
      }
    }
  }

  CsvTable t;
  t.add_meta("schema", "compare-v1");
  t.add_meta("task", configs.front().task);
  t.header = {"step"};
  t.rows.resize(static_cast<std::size_t>(steps));
  for (long s = 0; s < steps; ++s) t.rows[static_cast<std::size_t>(s)] = {std::to_string(s)};

  for (const ExperimentConfig& cfg : configs) {
    const ExperimentResult result = run_experiment(cfg, /*write_outputs=*/false, verbose);
    t.header.push_back(cfg.name + "_ema_mean");
    t.header.push_back(cfg.name + "_ema_stderr");
    for (long s = 0; s < steps; ++s) {
      std::vector<double> values;
      for (const RunSeries& run : result.runs) {
        if (run.failed || static_cast<std::size_t>(s) >= run.records.size()) continue;
        values.push_back(run.records[static_cast<std::size_t>(s)].ema_loss);
      }
      const Stats stats = mean_stderr(values);
      t.rows[static_cast<std::size_t>(s)].push_back(opt_cell(stats.mean));
      t.rows[static_cast<std::size_t>(s)].push_back(opt_cell(stats.stderr_));
    }
  }
  if (!out_path.empty()) t.write(out_path);
  return t;
}

CsvTable emit_stepsize_trace(const std::string& run_dir, const std::string& out_path) {
  CsvTable trace;
  trace.add_meta("schema", "trace-v1");
  trace.header = {"seed", "step", "unit", "step_size", "mean_step_size"};

  for (const std::string& file : sorted_run_files(run_dir)) {
    const CsvTable run = CsvTable::read(file);
    const std::string optimizer = run.meta("optimizer");
    if (optimizer != "adamsls" && optimizer != "plasls") {
      throw std::invalid_argument("trace: run '" + file + "' used optimizer '" + optimizer +
                                  "', which keeps no searched step-size state");
    }
    const std::string seed = run.meta("seed");
    const std::size_t step_col = run.column("step");
    const std::size_t units_col = run.column("unit_step_sizes");
    for (const auto& row : run.rows) {
      const auto units = unpack_unit_steps(row[units_col]);
      if (units.empty()) continue;
      double mean = 0.0;
      for (const auto& [name, eta] : units) mean += eta;
      mean /= static_cast<double>(units.size());
      for (const auto& [name, eta] : units) {
        trace.rows.push_back(
            {seed, row[step_col], name, format_double(eta), format_double(mean)});
      }
    }
  }
  if (!out_path.empty()) trace.write(out_path);
  return trace;
}

double audit_summary(const std::string& run_dir) {
  const CsvTable stored = CsvTable::read((fs::path(run_dir) / "summary.csv").string());
  if (stored.rows.size() != 1) throw std::runtime_error("audit: summary.csv must have one row");

  std::vector<double> emas, accs;
  int failed = 0, seeds = 0;
  for (const std::string& file : sorted_run_files(run_dir)) {
    const CsvTable run = CsvTable::read(file);
    ++seeds;
    if (run.meta("failed") == "1") {
      ++failed;
      continue;
    }
    if (run.rows.empty()) throw std::runtime_error("audit: empty run file " + file);
    const std::size_t ema_col = run.column("ema_loss");
    const std::size_t acc_col = run.column("accuracy");
    emas.push_back(std::stod(run.rows.back()[ema_col]));
    for (auto it = run.rows.rbegin(); it != run.rows.rend(); ++it) {
      if (!(*it)[acc_col].empty()) {
        accs.push_back(std::stod((*it)[acc_col]));
        break;
      }
    }
  }

  const auto& row = stored.rows[0];
  auto stored_cell = [&](const char* name) -> std::string {
    return row[stored.column(name)];
  };
  double worst = 0.0;
  auto check = [&](const char* name, const std::optional<double>& recomputed) {
    const std::string cell = stored_cell(name);
    if (cell.empty() != !recomputed.has_value()) {
      throw std::runtime_error(std::string("audit: presence mismatch for ") + name);
    }
    if (recomputed) worst = std::max(worst, std::abs(std::stod(cell) - *recomputed));
  };
  if (std::stoi(stored_cell("seeds")) != seeds) throw std::runtime_error("audit: seed count");
  if (std::stoi(stored_cell("failed_seeds")) != failed) {
    throw std::runtime_error("audit: failed seed count");
  }
  const Stats ema = mean_stderr(emas);
  const Stats acc = mean_stderr(accs);
  check("mean_final_ema_loss", ema.mean);
  check("stderr_final_ema_loss", ema.stderr_);
  check("mean_final_accuracy", acc.mean);
  check("stderr_final_accuracy", acc.stderr_);
  return worst;
}

std::string summary_to_text(const std::vector<SummaryRow>& rows) {
  auto fmt4 = [](const std::optional<double>& v) -> std::string {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
  };
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-10s %-8s %5s %6s  %-16s %-16s\n", "experiment",
                "task", "optim", "seeds", "failed", "accuracy", "ema_loss");
  out << line;
  for (const SummaryRow& row : rows) {
    const std::string acc =
        row.mean_final_accuracy ? fmt4(row.mean_final_accuracy) + "+-" +
                                      fmt4(row.stderr_final_accuracy)
                                : "-";
    const std::string ema = row.mean_final_ema_loss
                                ? fmt4(row.mean_final_ema_loss) + "+-" +
                                      fmt4(row.stderr_final_ema_loss)
                                : "-";
    std::snprintf(line, sizeof line, "%-24s %-10s %-8s %5d %6d  %-16s %-16s\n",
                  row.experiment.c_str(), row.task.c_str(), row.optimizer.c_str(), row.seeds,
                  row.failed_seeds, acc.c_str(), ema.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace lsopt
