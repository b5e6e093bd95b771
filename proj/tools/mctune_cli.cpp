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
 * \file mctune_cli.cpp
 * \brief Command line front end: tune, compare, ablate-depth,
 *  ablate-branching, prompt-dump and validate.
 */

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mctune/mctune.hpp"

namespace {

using mctune::ExperimentConfig;

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> budget;
  std::string strategy;
  std::string kernel;
  std::string out;
  bool dry_run = false;
  unsigned threads = 0;
};

void AddCommonFlags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Base seed (overrides search.seed)");
  cmd->add_option("--budget", f.budget, "Sample budget (replaces the budget checkpoints)");
  cmd->add_option("--strategy", f.strategy, "Strategy: evolutionary, mcts-random, mcts-llm, mcts-scripted, random");
  cmd->add_option("--kernel", f.kernel, "Kernel name from the library");
  cmd->add_option("--out", f.out, "Output path");
  cmd->add_flag("--dry-run", f.dry_run, "Use the scripted proposer in place of the LLM");
}

/// Config from --config (or defaults) with command line overrides applied.
ExperimentConfig ResolveConfig(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : mctune::LoadExperimentConfig(f.config);
  if (f.seed) cfg.search.seed = *f.seed;
  if (f.budget) cfg.budgets = {*f.budget};
  if (!f.strategy.empty()) cfg.strategies = {f.strategy};
  if (!f.kernel.empty()) cfg.kernels = {f.kernel};
  if (!f.out.empty()) cfg.output_path = f.out;
  cfg.Validate();
  return cfg;
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int RunTune(const CommonFlags& f) {
  ExperimentConfig cfg = ResolveConfig(f);
  const std::string& kernel = cfg.kernels.front();
  const std::string& strategy = cfg.strategies.front();
  mctune::Kernel root = mctune::library::Make(kernel);
  mctune::SearchResult r = mctune::detail::RunCell(root, strategy, cfg.search.seed, cfg.max_budget(), cfg.search,
                                                   cfg.evo, cfg.machine, cfg.proposer, f.dry_run);
  nlohmann::json j = mctune::ToJson(r);
  j["strategy"] = strategy;
  j["seed"] = cfg.search.seed;
  std::printf("kernel %s, strategy %s, seed %llu, %d samples\n", kernel.c_str(), strategy.c_str(),
              static_cast<unsigned long long>(cfg.search.seed), cfg.max_budget());
  std::printf("root cost %.6g, best cost %.6g, speedup %.3fx\n", r.root_cost, r.best_cost.value,
              r.root_cost / r.best_cost.value);
  std::printf("best trace: %s\n", mctune::ToString(r.best_trace()).c_str());
  if (!f.out.empty()) WriteText(f.out, j.dump(2) + "\n");
  return 0;
}

void PrintTable(const nlohmann::json& summary) {
  for (const auto& row : summary.at("table")) {
    std::string name = row.at("kernel").get<std::string>() + " / " + row.at("strategy").get<std::string>();
    if (row.contains("label")) name += " / " + row.at("label").get<std::string>();
    std::printf("%s\n", name.c_str());
    for (const auto& cp : row.at("checkpoints")) {
      std::printf("  %6d samples: %8.3fx +- %.3f", cp.at("budget").get<int>(), cp.at("mean_speedup").get<double>(),
                  cp.at("std_speedup").get<double>());
      if (cp.contains("ratio_vs_evolutionary")) {
        std::printf("  (%.3f of evolutionary)", cp.at("ratio_vs_evolutionary").get<double>());
      }
      std::printf("\n");
    }
  }
}

int RunSweep(const CommonFlags& f, const std::string& which) {
  ExperimentConfig cfg = ResolveConfig(f);
  mctune::RunOptions opts{f.dry_run, f.threads};
  mctune::ExperimentOutput out;
  if (which == "compare") {
    out = mctune::RunExperiment(cfg, opts);
  } else if (which == "ablate-depth") {
    out = mctune::AblationContextDepth(cfg, opts);
  } else {
    out = mctune::AblationBranching(cfg, opts);
  }
  auto summary_path = mctune::WriteOutput(out, cfg.output_path);
  PrintTable(out.summary);
  std::printf("wrote %s and %s\n", cfg.output_path.c_str(), summary_path.string().c_str());
  return 0;
}

int RunPromptDump(const CommonFlags& f, int samples) {
  ExperimentConfig cfg = ResolveConfig(f);
  std::string strategy = f.strategy.empty() ? "mcts-scripted" : cfg.strategies.front();
  if (!mctune::IsMctsStrategy(strategy)) throw mctune::ConfigError("prompt-dump needs an mcts-* strategy");
  auto proposer = mctune::detail::ProposerFor(strategy, cfg.proposer, f.dry_run);
  mctune::Kernel root = mctune::library::Make(cfg.kernels.front());
  WriteText(f.out, mctune::PromptAfter(root, *proposer, cfg.search, samples, cfg.machine));
  return 0;
}

int RunValidate(const CommonFlags& f, int sequences, int max_len) {
  std::vector<std::string> kernels;
  if (f.kernel.empty() || f.kernel == "all") {
    kernels = mctune::library::TinyNames();
  } else {
    kernels = {mctune::library::TinyVariantName(f.kernel)};
  }
  mctune::ValidateOptions opts;
  opts.sequences = sequences;
  opts.max_len = max_len;
  opts.seed = f.seed.value_or(0);
  nlohmann::json reports = nlohmann::json::array();
  int failures = 0;
  for (const auto& name : kernels) {
    mctune::ValidationReport r = mctune::ValidateKernel(mctune::library::Make(name), opts);
    failures += r.failures();
    std::printf("%s: %zu sequences, %d failures\n", name.c_str(), r.entries.size(), r.failures());
    for (const auto& e : r.entries) {
      if (!e.passed) {
        std::printf("  FAIL #%d: %s\n    replay: %s\n", e.index, e.message.c_str(),
                    mctune::ToJson(e.trace).dump().c_str());
      }
    }
    reports.push_back(mctune::ToJson(r));
  }
  if (!f.out.empty()) WriteText(f.out, reports.dump(2) + "\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-of-transformations search for loop-nest kernels"};
  app.require_subcommand(1);

  CommonFlags tune_f, compare_f, depth_f, branch_f, dump_f, validate_f;
  auto* tune = app.add_subcommand("tune", "Run one search and report the best program");
  AddCommonFlags(tune, tune_f);
  auto* compare = app.add_subcommand("compare", "Sweep kernels x strategies x seeds, write CSV and summary");
  AddCommonFlags(compare, compare_f);
  auto* depth = app.add_subcommand("ablate-depth", "Compare prompt context depths 2 and 3");
  AddCommonFlags(depth, depth_f);
  auto* branch = app.add_subcommand("ablate-branching", "Compare branching factors 2 and 4");
  AddCommonFlags(branch, branch_f);
  for (auto [cmd, f] : {std::pair{compare, &compare_f}, {depth, &depth_f}, {branch, &branch_f}}) {
    cmd->add_option("--threads", f->threads, "Worker threads (0 = all cores)");
  }

  int dump_samples = 0;
  auto* dump = app.add_subcommand("prompt-dump", "Print the proposer prompt for the next node after N samples");
  AddCommonFlags(dump, dump_f);
  dump->add_option("--samples", dump_samples, "Search iterations before the dump")->check(CLI::NonNegativeNumber);

  int sequences = 200, max_len = 10;
  auto* validate = app.add_subcommand("validate", "Check random transform sequences against the interpreter");
  AddCommonFlags(validate, validate_f);
  validate->add_option("--sequences", sequences, "Random sequences per kernel")->check(CLI::PositiveNumber);
  validate->add_option("--max-len", max_len, "Maximum sequence length")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (tune->parsed()) return RunTune(tune_f);
    if (compare->parsed()) return RunSweep(compare_f, "compare");
    if (depth->parsed()) return RunSweep(depth_f, "ablate-depth");
    if (branch->parsed()) return RunSweep(branch_f, "ablate-branching");
    if (dump->parsed()) return RunPromptDump(dump_f, dump_samples);
    if (validate->parsed()) return RunValidate(validate_f, sequences, max_len);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
