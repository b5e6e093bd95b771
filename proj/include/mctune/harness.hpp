// Copyright 2026 The mctune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*!
 * \file harness.hpp
 * \brief Experiment sweeps (kernels x strategies x seeds), ablations and the
 *  semantic validation report.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mctune/baselines.hpp"
#include "mctune/cost_model.hpp"
#include "mctune/interpreter.hpp"
#include "mctune/kernel_library.hpp"
#include "mctune/mcts.hpp"
#include "mctune/proposer.hpp"
#include "mctune/transforms.hpp"

namespace mctune {

inline const std::vector<std::string>& StrategyNames() {
  static const std::vector<std::string> names = {"evolutionary", "mcts-random", "mcts-llm", "mcts-scripted", "random"};
  return names;
}

inline bool IsMctsStrategy(const std::string& s) { return s.rfind("mcts-", 0) == 0; }

/// Script used by mcts-scripted (and by mcts-llm under dry run) when the
/// configured proposer is not a scripted one.
inline std::vector<std::string> DefaultScript() { return {"Transformations to apply: TileSize, Unroll"}; }

struct ExperimentConfig {
  std::vector<std::string> kernels = {"deepseek-moe"};
  std::vector<std::string> strategies = {"evolutionary", "mcts-random", "mcts-scripted"};
  std::vector<int> budgets = {18, 36, 72, 150, 200, 600};
  int repeats = 20;
  SearchConfig search;
  EvoConfig evo;
  MachineParams machine;
  ProposerKind proposer = RandomConfig{};
  std::string output_path = "results.csv";

  int max_budget() const { return budgets.back(); }

  void Validate() const {
    if (kernels.empty()) throw ConfigError("kernels must not be empty");
    for (const auto& k : kernels) {
      const auto& all = library::AllNames();
      if (std::find(all.begin(), all.end(), k) == all.end()) throw ConfigError("unknown kernel: " + k);
    }
    if (strategies.empty()) throw ConfigError("strategies must not be empty");
    for (const auto& s : strategies) {
      const auto& all = StrategyNames();
      if (std::find(all.begin(), all.end(), s) == all.end()) throw ConfigError("unknown strategy: " + s);
    }
    if (budgets.empty()) throw ConfigError("budgets must not be empty");
    for (size_t i = 0; i < budgets.size(); ++i) {
      if (budgets[i] < 1 || (i > 0 && budgets[i] <= budgets[i - 1])) {
        throw ConfigError("budgets must be positive and strictly increasing");
      }
    }
    if (repeats < 1) throw ConfigError("repeats must be >= 1");
    machine.Validate();
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"kernels", c.kernels},   {"strategies", c.strategies}, {"budgets", c.budgets},
       {"repeats", c.repeats},   {"search", c.search},         {"evo", c.evo},
       {"machine", c.machine},   {"proposer", ToJson(c.proposer)}, {"output_path", c.output_path}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::vector<std::string> known = {"kernels", "search",   "strategies", "evo",        "budgets",
                                                 "machine", "repeats", "proposer",   "output_path"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config field: " + key);
  }
  ExperimentConfig d;
  c.kernels = j.value("kernels", d.kernels);
  c.strategies = j.value("strategies", d.strategies);
  c.budgets = j.value("budgets", d.budgets);
  c.repeats = j.value("repeats", d.repeats);
  c.search = j.value("search", d.search);
  c.evo = j.value("evo", d.evo);
  c.machine = j.value("machine", d.machine);
  c.proposer = j.contains("proposer") ? ProposerKindFromJson(j.at("proposer")) : d.proposer;
  c.output_path = j.value("output_path", d.output_path);
}

inline ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return nlohmann::json::parse(in).get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path.string() + ": " + e.what());
  }
}

struct RunOptions {
  bool dry_run = false;
  /// 0 means std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// One (kernel, strategy, seed) run.
struct CellResult {
  std::string kernel;
  std::string strategy;
  uint64_t seed = 0;
  SearchResult result;
};

namespace detail {

inline std::unique_ptr<Proposer> ProposerFor(const std::string& strategy, const ProposerKind& kind, bool dry_run) {
  const auto* scripted = std::get_if<ScriptedConfig>(&kind);
  auto script = [&] {
    return std::make_unique<ScriptedProposer>(scripted && !scripted->responses.empty() ? scripted->responses
                                                                                         : DefaultScript());
  };
  if (strategy == "mcts-scripted") return script();
  if (strategy == "mcts-random") {
    const auto* r = std::get_if<RandomConfig>(&kind);
    return std::make_unique<RandomProposer>(r ? r->max_len : RandomConfig{}.max_len);
  }
  // mcts-llm
  if (dry_run) return script();
  const auto* llm = std::get_if<LlmConfig>(&kind);
  if (!llm) throw ConfigError("strategy mcts-llm needs an llm proposer (or --dry-run)");
  return std::make_unique<LlmHttpProposer>(*llm);
}

inline SearchResult RunCell(const Kernel& root, const std::string& strategy, uint64_t seed, int budget,
                            const SearchConfig& search, const EvoConfig& evo, const MachineParams& mp,
                            const ProposerKind& proposer, bool dry_run) {
  if (strategy == "evolutionary") {
    EvoConfig e = evo;
    e.budget = budget;
    e.seed = seed;
    if (e.population > budget) e.population = budget;
    if (e.elites > e.population) e.elites = e.population;
    return EvolutionarySearch(root, e, mp);
  }
  if (strategy == "random") return RandomSearch(root, budget, evo.init_trace_len, seed, mp);
  SearchConfig s = search;
  s.budget = budget;
  s.seed = seed;
  auto p = ProposerFor(strategy, proposer, dry_run);
  return Search(root, *p, s, mp);
}

/// Runs `n` independent jobs on a small thread pool; job i writes slot i.
inline void ParallelFor(size_t n, unsigned threads, const std::function<void(size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<size_t>(threads, n));
  if (threads <= 1) {
    for (size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline std::string FormatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct MeanStd {
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n - 1); 0 for one value
};

inline MeanStd Summarize(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  double sum = 0;
  for (double x : v) sum += x;
  m.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

}  // namespace detail

/// Runs every (kernel, strategy, seed) cell to the largest budget. Seeds are
/// search.seed, search.seed + 1, ... (repeats of them). Cells run in parallel
/// and are returned in kernel, strategy, seed order.
inline std::vector<CellResult> RunCells(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  cfg.Validate();
  std::vector<CellResult> cells;
  for (const auto& k : cfg.kernels) {
    for (const auto& s : cfg.strategies) {
      for (int r = 0; r < cfg.repeats; ++r) cells.push_back({k, s, cfg.search.seed + static_cast<uint64_t>(r), {}});
    }
  }
  // Fail fast on proposer configuration problems before spending any time.
  for (const auto& s : cfg.strategies) {
    if (IsMctsStrategy(s)) detail::ProposerFor(s, cfg.proposer, opts.dry_run);
  }
  std::vector<Kernel> roots;
  for (const auto& k : cfg.kernels) roots.push_back(library::Make(k));
  const size_t per_kernel = cfg.strategies.size() * static_cast<size_t>(cfg.repeats);
  detail::ParallelFor(cells.size(), opts.threads, [&](size_t i) {
    CellResult& c = cells[i];
    c.result = detail::RunCell(roots[i / per_kernel], c.strategy, c.seed, cfg.max_budget(), cfg.search, cfg.evo,
                               cfg.machine, cfg.proposer, opts.dry_run);
  });
  return cells;
}

/// CSV and JSON summary of a sweep. `extra_column` (ablations) is appended
/// after the fixed columns, with one value per cell.
struct ExperimentOutput {
  std::string csv;
  nlohmann::json summary;
};

inline std::string ResultCsv(const std::vector<CellResult>& cells, const std::string& extra_column = {},
                             const std::vector<std::string>& extra_values = {}) {
  std::ostringstream out;
  out << "kernel,strategy,seed,sample_index,best_cost,speedup_over_root";
  if (!extra_column.empty()) out << ',' << extra_column;
  out << '\n';
  for (size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    for (const auto& p : c.result.curve) {
      out << c.kernel << ',' << c.strategy << ',' << c.seed << ',' << p.sample_index << ','
          << detail::FormatDouble(p.best_cost) << ',' << detail::FormatDouble(c.result.root_cost / p.best_cost);
      if (!extra_column.empty()) out << ',' << extra_values.at(i);
      out << '\n';
    }
  }
  return out.str();
}

/// Per (kernel, strategy, group) table rows with mean and sample standard
/// deviation of the speedup at each checkpoint. When an evolutionary row
/// exists for the same kernel and group, each checkpoint also carries the
/// ratio of the two mean speedups.
inline nlohmann::json SummaryTable(const std::vector<CellResult>& cells, const std::vector<int>& budgets,
                                   const std::vector<std::string>& groups = {}) {
  struct Key {
    std::string kernel, strategy, group;
    bool operator==(const Key&) const = default;
  };
  std::vector<Key> keys;
  std::vector<std::vector<const CellResult*>> members;
  for (size_t i = 0; i < cells.size(); ++i) {
    Key key{cells[i].kernel, cells[i].strategy, groups.empty() ? std::string() : groups[i]};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      members.emplace_back();
      it = keys.end() - 1;
    }
    members[static_cast<size_t>(it - keys.begin())].push_back(&cells[i]);
  }

  auto means = [&](size_t row) {
    std::vector<detail::MeanStd> out;
    for (int b : budgets) {
      std::vector<double> speedups;
      for (const auto* c : members[row]) {
        const auto& p = c->result.curve.at(static_cast<size_t>(b - 1));
        speedups.push_back(c->result.root_cost / p.best_cost);
      }
      out.push_back(detail::Summarize(speedups));
    }
    return out;
  };

  nlohmann::json rows = nlohmann::json::array();
  for (size_t r = 0; r < keys.size(); ++r) {
    auto stats = means(r);
    std::optional<std::vector<detail::MeanStd>> evo;
    for (size_t e = 0; e < keys.size(); ++e) {
      if (keys[e].strategy == "evolutionary" && keys[e].kernel == keys[r].kernel && keys[e].group == keys[r].group) {
        evo = means(e);
      }
    }
    int64_t fallbacks = 0, errors = 0;
    for (const auto* c : members[r]) {
      fallbacks += c->result.tree_stats.fallback_count;
      errors += c->result.tree_stats.proposer_errors;
    }
    nlohmann::json checkpoints = nlohmann::json::array();
    for (size_t b = 0; b < budgets.size(); ++b) {
      nlohmann::json cp = {{"budget", budgets[b]}, {"mean_speedup", stats[b].mean}, {"std_speedup", stats[b].stddev}};
      if (evo) cp["ratio_vs_evolutionary"] = stats[b].mean / (*evo)[b].mean;
      checkpoints.push_back(cp);
    }
    nlohmann::json row = {{"kernel", keys[r].kernel},
                          {"strategy", keys[r].strategy},
                          {"repeats", members[r].size()},
                          {"fallback_count", fallbacks},
                          {"proposer_errors", errors},
                          {"checkpoints", checkpoints}};
    if (!groups.empty()) row["label"] = keys[r].group;
    rows.push_back(row);
  }
  return rows;
}

inline ExperimentOutput RunExperiment(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  auto cells = RunCells(cfg, opts);
  ExperimentOutput out;
  out.csv = ResultCsv(cells);
  out.summary = {{"config", cfg}, {"budgets", cfg.budgets}, {"table", SummaryTable(cells, cfg.budgets)}};
  return out;
}

inline std::string ContextDepthLabel(int depth) {
  static const std::vector<std::string> names = {"Parent", "Grandparent", "Great-Grandparent"};
  std::string label;
  for (int i = 0; i < depth; ++i) {
    if (i > 0) label += " + ";
    label += i < static_cast<int>(names.size()) ? names[static_cast<size_t>(i)]
                                                : "Ancestor " + std::to_string(i + 1);
  }
  return label;
}

inline std::string BranchingLabel(int b) { return "B = " + std::to_string(b); }

namespace detail {

inline ExperimentOutput RunAblation(const ExperimentConfig& cfg, const RunOptions& opts, const std::string& column,
                                    const std::vector<int>& values,
                                    const std::function<void(ExperimentConfig&, int)>& set,
                                    const std::function<std::string(int)>& label) {
  ExperimentConfig base = cfg;
  base.strategies.clear();
  for (const auto& s : cfg.strategies) {
    if (s == "mcts-llm" || s == "mcts-scripted") base.strategies.push_back(s);
  }
  if (base.strategies.empty()) throw ConfigError("ablations need strategy mcts-llm or mcts-scripted");
  std::vector<CellResult> all;
  std::vector<std::string> column_values, labels;
  for (int v : values) {
    ExperimentConfig c = base;
    set(c, v);
    auto cells = RunCells(c, opts);
    for (auto& cell : cells) {
      all.push_back(std::move(cell));
      column_values.push_back(std::to_string(v));
      labels.push_back(label(v));
    }
  }
  ExperimentOutput out;
  out.csv = ResultCsv(all, column, column_values);
  out.summary = {{"config", base}, {"budgets", base.budgets}, {"ablation", column}, {"values", values},
                 {"table", SummaryTable(all, base.budgets, labels)}};
  return out;
}

}  // namespace detail

/// Same sweep with 2 and 3 ancestors in the proposer context.
inline ExperimentOutput AblationContextDepth(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  return detail::RunAblation(
      cfg, opts, "context_depth", {2, 3}, [](ExperimentConfig& c, int v) { c.search.context_depth = v; },
      ContextDepthLabel);
}

/// Same sweep with branching factor 2 and 4.
inline ExperimentOutput AblationBranching(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
  return detail::RunAblation(
      cfg, opts, "branching", {2, 4}, [](ExperimentConfig& c, int v) { c.search.branching = v; }, BranchingLabel);
}

/// Writes the CSV to `csv_path` and the summary next to it (extension
/// replaced by .summary.json). Returns the summary path.
inline std::filesystem::path WriteOutput(const ExperimentOutput& out, const std::filesystem::path& csv_path) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  std::ofstream(csv_path, std::ios::binary) << out.csv;
  auto summary_path = csv_path;
  summary_path.replace_extension(".summary.json");
  std::ofstream(summary_path, std::ios::binary) << out.summary.dump(2) << '\n';
  return summary_path;
}

// ---------------------------------------------------------------------------
// Semantic validation
// ---------------------------------------------------------------------------

using ApplyFn = std::function<Kernel(const Kernel&, const Transform&)>;

struct ValidationEntry {
  int index = 0;
  TransformSeq trace;
  bool passed = true;
  std::string message;
};

struct ValidationReport {
  std::string kernel;
  std::vector<ValidationEntry> entries;

  int failures() const {
    return static_cast<int>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return !e.passed; }));
  }
  bool ok() const { return failures() == 0; }
};

inline nlohmann::json ToJson(const ValidationReport& r) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : r.entries) {
    nlohmann::json j = {{"index", e.index}, {"passed", e.passed}, {"trace", ToJson(e.trace)}};
    if (!e.message.empty()) j["message"] = e.message;
    entries.push_back(j);
  }
  return {{"kernel", r.kernel}, {"sequences", r.entries.size()}, {"failures", r.failures()}, {"entries", entries}};
}

struct ValidateOptions {
  int sequences = 200;
  int max_len = 10;
  uint64_t seed = 0;
  double float_rtol = 1e-5;
  ApplyFn apply;  // defaults to Apply; tests inject faulty transforms here
};

namespace detail {

inline BufferMap RandomInputs(const Kernel& k, Rng& rng, bool integer) {
  BufferMap m;
  for (const auto& b : k.buffers) {
    if (b.role != BufferRole::kInput) continue;
    std::vector<float> v(static_cast<size_t>(b.NumElements()));
    for (auto& x : v) {
      x = integer ? static_cast<float>(UniformInt(rng, -4, 4)) : static_cast<float>(Uniform01(rng) * 2.0 - 1.0);
    }
    m[b.name] = std::move(v);
  }
  return m;
}

/// Empty on success, otherwise a description of the first mismatch.
inline std::string CompareOutputs(const std::vector<float>& want, const std::vector<float>& got, bool exact,
                                  double rtol) {
  if (want.size() != got.size()) return "output size differs";
  for (size_t i = 0; i < want.size(); ++i) {
    double w = want[i], g = got[i];
    bool same = exact ? w == g : std::abs(w - g) <= rtol * std::max(1.0, std::abs(w));
    if (!same) {
      std::ostringstream s;
      s << "output element " << i << ": expected " << w << ", got " << g;
      return s.str();
    }
  }
  return {};
}

}  // namespace detail

/// Checks random legal sequences on `root` against the untransformed kernel
/// with integer inputs (exact) and float inputs (relative tolerance), plus
/// every kernel invariant after each step.
inline ValidationReport ValidateKernel(const Kernel& root, const ValidateOptions& opts = {}) {
  ApplyFn apply = opts.apply ? opts.apply : ApplyFn([](const Kernel& k, const Transform& t) { return Apply(k, t); });
  Rng rng(opts.seed);
  ValidationReport report;
  report.kernel = root.name;

  Rng input_rng(MixSeed(opts.seed, 1));
  const BufferMap int_inputs = detail::RandomInputs(root, input_rng, true);
  const BufferMap float_inputs = detail::RandomInputs(root, input_rng, false);
  const auto int_want = Interpret(root, int_inputs);
  const auto float_want = Interpret(root, float_inputs);

  for (int s = 0; s < opts.sequences; ++s) {
    ValidationEntry e;
    e.index = s;
    const int len = s == 0 ? 0 : static_cast<int>(UniformInt(rng, 1, opts.max_len));
    Kernel cur = root;
    try {
      for (int i = 0; i < len; ++i) {
        auto t = RandomLegalTransform(cur, rng);
        if (!t) break;
        e.trace.push_back(*t);
        cur = apply(cur, *t);
        auto violations = InvariantViolations(cur);
        if (!violations.empty()) throw KernelError("invariant violated: " + violations.front());
      }
      e.message = detail::CompareOutputs(int_want, Interpret(cur, int_inputs), true, 0);
      if (e.message.empty()) {
        e.message = detail::CompareOutputs(float_want, Interpret(cur, float_inputs), false,
                                           opts.float_rtol);
        if (!e.message.empty()) e.message = "float inputs: " + e.message;
      } else {
        e.message = "integer inputs: " + e.message;
      }
    } catch (const std::exception& ex) {
      e.message = ex.what();
    }
    e.passed = e.message.empty();
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace mctune
