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

#include "lsopt/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "lsopt/models.hpp"

namespace lsopt {

long ExperimentConfig::total_steps() const {
  if (task == "quadratic") return quad_steps;
  const long per_epoch = (effective_train_samples() + batch_size - 1) / batch_size;
  return static_cast<long>(epochs) * per_epoch;
}

long ExperimentConfig::effective_train_samples() const {
  return subsample_n > 0 ? subsample_n : train_samples;
}

long ExperimentConfig::effective_reset_samples() const {
  if (reset_samples > 0) return reset_samples;
  return task == "quadratic" ? 1 : effective_train_samples();
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& msg) {
  throw std::invalid_argument(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
  return x;
}

long parse_long(const std::string& v) {
  std::size_t used = 0;
  const long x = std::stol(v, &used);
  if (used != v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
  return x;
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item));
  }
  return out;
}

// Applies one key=value assignment; throws std::invalid_argument for
// unknown keys or malformed values.
void assign(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using Setter = std::function<void(ExperimentConfig&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"task", [](auto& c, const auto& v) { c.task = v; }},
      {"model", [](auto& c, const auto& v) { c.model = v; }},
      {"optimizer", [](auto& c, const auto& v) { c.optimizer = v; }},
      {"partition", [](auto& c, const auto& v) { c.partition = v; }},
      {"epochs", [](auto& c, const auto& v) { c.epochs = static_cast<int>(parse_long(v)); }},
      {"batch_size", [](auto& c, const auto& v) { c.batch_size = parse_long(v); }},
      {"seeds", [](auto& c, const auto& v) { c.seeds = static_cast<int>(parse_long(v)); }},
      {"seed_base",
       [](auto& c, const auto& v) { c.seed_base = static_cast<std::uint64_t>(parse_long(v)); }},
      {"out_dir", [](auto& c, const auto& v) { c.out_dir = v; }},
      {"train_samples", [](auto& c, const auto& v) { c.train_samples = parse_long(v); }},
      {"features", [](auto& c, const auto& v) { c.features = parse_long(v); }},
      {"classes", [](auto& c, const auto& v) { c.classes = static_cast<int>(parse_long(v)); }},
      {"separation", [](auto& c, const auto& v) { c.separation = parse_double(v); }},
      {"seq_len", [](auto& c, const auto& v) { c.seq_len = parse_long(v); }},
      {"vocab", [](auto& c, const auto& v) { c.vocab = static_cast<int>(parse_long(v)); }},
      {"eval_fraction", [](auto& c, const auto& v) { c.eval_fraction = parse_double(v); }},
      {"subsample", [](auto& c, const auto& v) { c.subsample_n = parse_long(v); }},
      {"curvatures", [](auto& c, const auto& v) { c.curvatures = parse_list(v); }},
      {"steps", [](auto& c, const auto& v) { c.quad_steps = parse_long(v); }},
      {"depth", [](auto& c, const auto& v) { c.depth = static_cast<int>(parse_long(v)); }},
      {"width", [](auto& c, const auto& v) { c.width = parse_long(v); }},
      {"activation", [](auto& c, const auto& v) { c.activation = v; }},
      {"embed_dim", [](auto& c, const auto& v) { c.embed_dim = parse_long(v); }},
      {"blocks", [](auto& c, const auto& v) { c.blocks = static_cast<int>(parse_long(v)); }},
      {"peak_lr", [](auto& c, const auto& v) { c.peak_lr = parse_double(v); }},
      {"warmup_fraction", [](auto& c, const auto& v) { c.warmup_fraction = parse_double(v); }},
      {"ls_sufficient_decrease",
       [](auto& c, const auto& v) { c.ls_sufficient_decrease = parse_double(v); }},
      {"ls_backtrack_factor",
       [](auto& c, const auto& v) { c.ls_backtrack_factor = parse_double(v); }},
      {"ls_max_step", [](auto& c, const auto& v) { c.ls_max_step = parse_double(v); }},
      {"ls_max_backtracks",
       [](auto& c, const auto& v) { c.ls_max_backtracks = static_cast<int>(parse_long(v)); }},
      {"reset_samples", [](auto& c, const auto& v) { c.reset_samples = parse_long(v); }},
      {"decrease_term", [](auto& c, const auto& v) { c.decrease_term = v; }},
      {"merge_threshold", [](auto& c, const auto& v) { c.merge_threshold = parse_double(v); }},
      {"ema_decay", [](auto& c, const auto& v) { c.ema_decay = parse_double(v); }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw std::invalid_argument("unknown key '" + key + "'");
  it->second(cfg, value);
  cfg.explicit_keys.insert(key);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void reject_keys(const ExperimentConfig& cfg, const std::vector<std::string>& keys,
                 const std::string& why) {
  for (const std::string& key : keys) {
    if (cfg.was_set(key)) {
      throw std::invalid_argument("key '" + key + "' is invalid " + why);
    }
  }
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  require(cfg.task == "blobs" || cfg.task == "majority" || cfg.task == "quadratic",
          "task must be one of blobs|majority|quadratic, got '" + cfg.task + "'");
  require(cfg.optimizer == "adam" || cfg.optimizer == "sgdsls" || cfg.optimizer == "adamsls" ||
              cfg.optimizer == "plasls",
          "optimizer must be one of adam|sgdsls|adamsls|plasls, got '" + cfg.optimizer + "'");
  require(cfg.seeds >= 1, "seeds must be >= 1");
  require(cfg.ema_decay > 0.0 && cfg.ema_decay < 1.0, "ema_decay must be in (0,1)");

  // Learning-rate settings exist only for the adam baseline; the
  // line-searched optimizers are deliberately hyperparameter-free here.
  if (cfg.optimizer != "adam") {
    reject_keys(cfg, {"peak_lr", "warmup_fraction"},
                "for optimizer '" + cfg.optimizer + "': only the adam baseline takes a learning rate");
  } else {
    reject_keys(cfg,
                {"ls_sufficient_decrease", "ls_backtrack_factor", "ls_max_step",
                 "ls_max_backtracks", "reset_samples", "decrease_term"},
                "for the adam baseline: line-search settings apply to sgdsls/adamsls/plasls");
    require(cfg.peak_lr > 0.0, "peak_lr must be positive");
    require(cfg.warmup_fraction >= 0.0 && cfg.warmup_fraction < 1.0,
            "warmup_fraction must be in [0,1)");
  }
  if (cfg.optimizer != "plasls") {
    reject_keys(cfg, {"partition", "merge_threshold"}, "for optimizer '" + cfg.optimizer + "'");
  }
  if (cfg.optimizer == "sgdsls") {
    reject_keys(cfg, {"decrease_term"}, "for sgdsls: the decrease term is the squared gradient norm");
  }
  require(cfg.decrease_term == "scaled" || cfg.decrease_term == "raw",
          "decrease_term must be scaled|raw");
  require(cfg.ls_sufficient_decrease > 0.0 && cfg.ls_sufficient_decrease < 1.0,
          "ls_sufficient_decrease must be in (0,1)");
  require(cfg.ls_backtrack_factor > 0.0 && cfg.ls_backtrack_factor < 1.0,
          "ls_backtrack_factor must be in (0,1)");
  require(cfg.ls_max_step > 0.0, "ls_max_step must be positive");
  require(cfg.ls_max_backtracks >= 1, "ls_max_backtracks must be >= 1");
  require(cfg.merge_threshold > 0.0, "merge_threshold must be positive");

  if (cfg.task == "quadratic") {
    reject_keys(cfg,
                {"model", "epochs", "batch_size", "train_samples", "features", "classes",
                 "separation", "seq_len", "vocab", "eval_fraction", "subsample", "depth", "width",
                 "activation", "embed_dim", "blocks"},
                "for the quadratic task");
    require(!cfg.curvatures.empty(), "quadratic task needs a curvatures list, e.g. 1;100");
    for (double c : cfg.curvatures) require(c > 0.0, "curvatures must be positive");
    require(cfg.quad_steps >= 1, "steps must be >= 1");
    return;
  }

  reject_keys(cfg, {"curvatures", "steps"}, "outside the quadratic task");
  require(cfg.epochs >= 1, "epochs must be >= 1");
  require(cfg.batch_size >= 1, "batch_size must be >= 1");
  require(cfg.train_samples >= 1, "train_samples must be >= 1");
  require(cfg.eval_fraction >= 0.0 && cfg.eval_fraction < 1.0, "eval_fraction must be in [0,1)");
  require(cfg.subsample_n >= 0 && cfg.subsample_n <= cfg.train_samples,
          "subsample must be in [0, train_samples]");
  require(cfg.reset_samples >= 0, "reset_samples must be >= 0");

  std::string model = cfg.model;
  if (model.empty()) model = cfg.task == "majority" ? "encoder" : "logreg";

  if (cfg.task == "majority") {
    require(model == "encoder", "the majority task runs on the encoder model");
    reject_keys(cfg, {"features", "classes", "separation", "depth", "width", "activation"},
                "for the majority task");
    require(cfg.seq_len >= 3, "seq_len must be >= 3");
    require(cfg.vocab >= 4, "vocab must be >= 4");
    require(cfg.embed_dim >= 1 && cfg.blocks >= 0, "bad encoder hyperparameters");
  } else {  // blobs
    require(model == "logreg" || model == "mlp", "blobs runs on logreg or mlp");
    reject_keys(cfg, {"seq_len", "vocab", "embed_dim", "blocks"}, "for the blobs task");
    require(cfg.features >= 1, "features must be >= 1");
    require(cfg.classes >= 2, "classes must be >= 2");
    require(cfg.separation > 0.0, "separation must be positive");
    if (model == "mlp") {
      require(cfg.depth >= 1, "depth must be >= 1");
      require(cfg.width >= 1, "width must be >= 1");
      require(cfg.activation == "relu" || cfg.activation == "gelu",
              "activation must be relu|gelu");
    } else {
      reject_keys(cfg, {"depth", "width", "activation"}, "for the logreg model");
    }
  }

  if (!cfg.partition.empty()) {
    const SplitScheme scheme = [&] {
      try {
        return SplitScheme::parse(cfg.partition);
      } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("partition: ") + e.what());
      }
    }();
    if (scheme.kind == SplitScheme::Kind::qkv) {
      require(model == "encoder", "qkv partition requires the encoder model");
      require(cfg.blocks >= 1, "qkv partition needs at least one encoder block");
    }
    if (scheme.kind == SplitScheme::Kind::per_layer && scheme.n_units > 1) {
      if (model == "logreg") {
        require(scheme.n_units == 1, "logreg has a single layer; use partition = whole");
      } else if (model == "mlp") {
        require(scheme.n_units <= cfg.depth, "per_layer unit count exceeds mlp depth");
      } else {
        require(cfg.blocks == 0 ? scheme.n_units == 2
                                : (scheme.n_units >= 3 && scheme.n_units <= cfg.blocks + 2),
                "per_layer unit count does not fit the encoder block count");
      }
    }
  }
}

namespace {

void finalize(ExperimentConfig& cfg, const std::string& origin, std::size_t line) {
  if (cfg.task.empty()) fail(origin, line, "section '" + cfg.name + "': missing 'task'");
  if (cfg.optimizer.empty()) fail(origin, line, "section '" + cfg.name + "': missing 'optimizer'");
  if (cfg.model.empty() && cfg.task != "quadratic") {
    cfg.model = cfg.task == "majority" ? "encoder" : "logreg";
  }
  try {
    validate_config(cfg);
  } catch (const std::exception& e) {
    fail(origin, line, "section '" + cfg.name + "': " + e.what());
  }
}

}  // namespace

std::vector<ExperimentConfig> parse_config_text(const std::string& text,
                                                const std::string& origin) {
  std::vector<ExperimentConfig> sections;
  ExperimentConfig defaults;
  ExperimentConfig current;
  bool in_section = false;
  std::size_t section_line = 0;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(origin, line_no, "empty section name");
      if (in_section) {
        finalize(current, origin, section_line);
        sections.push_back(std::move(current));
      }
      current = defaults;
      current.name = name;
      in_section = true;
      section_line = line_no;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      assign(in_section ? current : defaults, key, value);
    } catch (const std::exception& e) {
      fail(origin, line_no, e.what());
    }
  }
  if (in_section) {
    finalize(current, origin, section_line);
    sections.push_back(std::move(current));
  } else {
    defaults.name = "experiment";
    finalize(defaults, origin, 1);
    sections.push_back(std::move(defaults));
  }
  return sections;
}

std::vector<ExperimentConfig> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

}  // namespace lsopt
