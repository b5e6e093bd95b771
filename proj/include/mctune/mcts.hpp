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
 * \file mcts.hpp
 * \brief Monte Carlo tree search over transformation sequences.
 *
 *  Each iteration selects a node by UCT descent, asks the proposer for a
 *  sequence of transform names, applies it to create one child (one sample),
 *  scores a short random rollout from the child with the cost model and adds
 *  that cost and a visit to the child and every ancestor.
 *
 *  C(v) is the sum of rollout costs through v and N(v) its visit count.
 *  During selection C is divided by a reference cost (by default the best
 *  cost found so far), which keeps the mean-inverse exploitation term near
 *  [0, 1] for any kernel size.
 */

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mctune/cost_model.hpp"
#include "mctune/prompt.hpp"
#include "mctune/proposer.hpp"
#include "mctune/random.hpp"
#include "mctune/search_result.hpp"
#include "mctune/transforms.hpp"

namespace mctune {

enum class ExploitationMode {
  kMeanInverse,  // N / C: inverse of the mean rollout cost
  kLiteral,      // 1 / (C * N)
};

NLOHMANN_JSON_SERIALIZE_ENUM(ExploitationMode, {{ExploitationMode::kMeanInverse, "mean-inverse"},
                                                {ExploitationMode::kLiteral, "literal"}})

/// Reference cost that C(v) is divided by when scoring children.
enum class CostScale {
  kBestSoFar,  // best direct cost seen so far in this search
  kRoot,       // the root program's cost
  kNone,       // raw cost units
};

NLOHMANN_JSON_SERIALIZE_ENUM(CostScale, {{CostScale::kBestSoFar, "best-so-far"},
                                         {CostScale::kRoot, "root"},
                                         {CostScale::kNone, "none"}})

struct SearchConfig {
  double c_explore = std::sqrt(2.0);
  int branching = 2;
  int rollout_len = 4;
  int horizon = 20;
  int budget = 100;
  ExploitationMode exploitation_mode = ExploitationMode::kMeanInverse;
  uint64_t seed = 0;
  /// Ancestors included in the proposer's prompt context (2 or 3).
  int context_depth = 2;
  CostScale cost_scale = CostScale::kBestSoFar;

  void Validate() const {
    if (!(c_explore > 0) || branching < 1 || rollout_len < 0 || horizon < 1 || budget < 1) {
      throw std::invalid_argument("SearchConfig: c_explore, branching, horizon and budget must be positive");
    }
    if (context_depth < 0) throw std::invalid_argument("SearchConfig: context_depth must be non-negative");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SearchConfig, c_explore, branching, rollout_len, horizon, budget,
                                                exploitation_mode, seed, context_depth, cost_scale)

struct SearchNode {
  int id = 0;
  std::optional<int> parent;
  std::vector<int> children;
  Kernel kernel;
  TransformSeq edge;  // transforms applied on the edge from the parent
  CostEstimate direct_cost;
  double acc_cost = 0;
  int64_t visits = 0;
  int depth = 0;
  bool exhausted = false;  // no expandable node left in this subtree

  const TransformSeq& trace() const { return kernel.provenance; }
};

class SearchTree {
 public:
  SearchTree(Kernel root, const MachineParams& mp) {
    SearchNode n;
    n.direct_cost = Estimate(root, mp);
    n.kernel = std::move(root);
    nodes_.push_back(std::move(n));
  }

  SearchNode& node(int id) { return nodes_.at(static_cast<size_t>(id)); }
  const SearchNode& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
  const SearchNode& root() const { return nodes_.front(); }
  size_t size() const { return nodes_.size(); }
  const std::vector<SearchNode>& nodes() const { return nodes_; }

  int AddChild(int parent, Kernel kernel, TransformSeq edge, CostEstimate cost) {
    SearchNode n;
    n.id = static_cast<int>(nodes_.size());
    n.parent = parent;
    n.kernel = std::move(kernel);
    n.edge = std::move(edge);
    n.direct_cost = cost;
    n.depth = node(parent).depth + 1;
    nodes_.push_back(std::move(n));
    node(parent).children.push_back(nodes_.back().id);
    return nodes_.back().id;
  }

  int64_t fallback_count = 0;
  int64_t proposer_errors = 0;

 private:
  std::vector<SearchNode> nodes_;
};

inline bool Expandable(const SearchNode& n, const SearchConfig& cfg) {
  return static_cast<int>(n.children.size()) < cfg.branching && static_cast<int>(n.trace().size()) < cfg.horizon;
}

/// UCT value of `node` whose parent has `parent_visits` visits. Unvisited
/// nodes score +inf; a zero accumulated cost makes the exploitation term +inf.
inline double UctScore(const SearchNode& node, int64_t parent_visits, const SearchConfig& cfg,
                       double cost_scale = 1.0) {
  if (parent_visits < 1) throw std::invalid_argument("UctScore: parent_visits must be >= 1");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (node.visits == 0) return kInf;
  const double n = static_cast<double>(node.visits);
  const double acc = node.acc_cost / cost_scale;
  double exploit;
  if (acc <= 0) {
    exploit = kInf;
  } else if (cfg.exploitation_mode == ExploitationMode::kMeanInverse) {
    exploit = n / acc;
  } else {
    exploit = 1.0 / (acc * n);
  }
  return exploit + cfg.c_explore * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

/// Descends from the root while the current node is full, picking the child
/// with the highest UCT (lowest id on ties) and skipping exhausted subtrees.
/// Returns nullopt when no expandable node remains.
inline std::optional<int> Select(const SearchTree& tree, const SearchConfig& cfg, double cost_scale = 1.0) {
  int cur = 0;
  while (true) {
    const SearchNode& n = tree.node(cur);
    if (n.exhausted) return std::nullopt;
    if (Expandable(n, cfg)) return cur;
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c : n.children) {
      const SearchNode& child = tree.node(c);
      if (child.exhausted) continue;
      double s = UctScore(child, std::max<int64_t>(1, n.visits), cfg, cost_scale);
      if (best < 0 || s > best_score) {
        best = c;
        best_score = s;
      }
    }
    if (best < 0) return std::nullopt;
    cur = best;
  }
}

/// Context for the proposer: `node` and up to cfg.context_depth ancestors.
inline PromptContext BuildContext(const SearchTree& tree, int node, int depth) {
  std::vector<ChainEntry> chain;
  std::optional<int> cur = node;
  for (int i = 0; cur && i <= depth; ++i) {
    const SearchNode& n = tree.node(*cur);
    chain.push_back({n.kernel, n.direct_cost.value});
    cur = n.parent;
  }
  return MakePromptContext(std::move(chain));
}

namespace detail {

inline void MarkExhausted(SearchTree& tree, int id, const SearchConfig& cfg) {
  std::optional<int> cur = id;
  while (cur) {
    SearchNode& n = tree.node(*cur);
    if (Expandable(n, cfg)) return;
    for (int c : n.children) {
      if (!tree.node(c).exhausted) return;
    }
    n.exhausted = true;
    cur = n.parent;
  }
}

}  // namespace detail

/// Creates one child of `node_id` from the proposer's suggestion. Names are
/// truncated to the remaining horizon, parameters are sampled from each
/// family's legal domain and inapplicable names are skipped. If nothing could
/// be applied, one random legal transform is used instead (a fallback).
inline int Expand(SearchTree& tree, int node_id, Proposer& proposer, const SearchConfig& cfg,
                  const MachineParams& mp, Rng& rng, const TransformOptions& topts = {}) {
  PromptContext ctx = BuildContext(tree, node_id, cfg.context_depth);
  Proposal proposal = proposer.Propose(ctx, rng);
  if (!proposal.error.empty()) ++tree.proposer_errors;
  bool fallback = proposal.fallback;

  const Kernel& parent = tree.node(node_id).kernel;
  const size_t room = static_cast<size_t>(std::max(0, cfg.horizon - static_cast<int>(parent.provenance.size())));
  if (proposal.names.size() > room) proposal.names.resize(room);

  Kernel cur = parent;
  TransformSeq edge;
  for (const auto& name : proposal.names) {
    auto kind = TransformKindFromName(name);
    if (!kind) continue;
    auto inst = SampleInstance(cur, *kind, rng, topts);
    if (!inst) continue;
    try {
      cur = Apply(cur, *inst, topts);
      edge.push_back(*inst);
    } catch (const IllegalTransform&) {
    }
  }
  if (edge.empty() && room > 0) {
    if (auto inst = RandomLegalTransform(cur, rng, topts)) {
      cur = Apply(cur, *inst, topts);
      edge.push_back(*inst);
    }
    fallback = true;
  }
  if (fallback) ++tree.fallback_count;

  CostEstimate cost = Estimate(cur, mp);
  int child = tree.AddChild(node_id, std::move(cur), std::move(edge), cost);
  detail::MarkExhausted(tree, child, cfg);
  return child;
}

/// Applies cfg.rollout_len random legal transforms (a family is drawn
/// uniformly from the registry and redrawn up to 3 times when it has no legal
/// instance; after that the rollout stops early) and scores the result.
inline CostEstimate Simulate(const Kernel& kernel, const SearchConfig& cfg, const MachineParams& mp, Rng& rng,
                             const TransformOptions& topts = {}) {
  Kernel cur = kernel;
  for (int step = 0; step < cfg.rollout_len; ++step) {
    bool applied = false;
    for (int attempt = 0; attempt < 3 && !applied; ++attempt) {
      auto kind = kAllTransformKinds[UniformIndex(rng, kAllTransformKinds.size())];
      if (auto inst = SampleInstance(cur, kind, rng, topts)) {
        cur = Apply(cur, *inst, topts);
        applied = true;
      }
    }
    if (!applied) break;
  }
  return Estimate(cur, mp);
}

inline void Backpropagate(SearchTree& tree, int leaf, double rollout_cost) {
  std::optional<int> cur = leaf;
  while (cur) {
    SearchNode& n = tree.node(*cur);
    n.acc_cost += rollout_cost;
    n.visits += 1;
    cur = n.parent;
  }
}

inline TreeStats ComputeStats(const SearchTree& tree) {
  TreeStats s;
  s.node_count = static_cast<int64_t>(tree.size());
  for (const auto& n : tree.nodes()) {
    s.max_depth = std::max(s.max_depth, n.depth);
    s.max_children = std::max(s.max_children, static_cast<int>(n.children.size()));
  }
  s.fallback_count = tree.fallback_count;
  s.proposer_errors = tree.proposer_errors;
  s.saturated = tree.root().exhausted;
  return s;
}

struct SearchOutput {
  SearchResult result;
  SearchTree tree;
};

/// Runs cfg.budget select/expand/simulate/backpropagate iterations and keeps
/// the tree for inspection. Best-so-far is tracked on each child's direct
/// cost; the root is the initial best.
inline SearchOutput SearchWithTree(const Kernel& root, Proposer& proposer, const SearchConfig& cfg,
                                   const MachineParams& mp = {}, const TransformOptions& topts = {}) {
  cfg.Validate();
  Rng rng(cfg.seed);
  SearchTree tree(root, mp);
  const double root_cost = tree.root().direct_cost.value;
  CurveRecorder rec(root, root_cost);
  for (int s = 0; s < cfg.budget; ++s) {
    double scale = 1.0;
    if (cfg.cost_scale == CostScale::kBestSoFar) scale = rec.best_cost();
    if (cfg.cost_scale == CostScale::kRoot) scale = root_cost;
    auto selected = Select(tree, cfg, scale);
    if (!selected) break;
    int child = Expand(tree, *selected, proposer, cfg, mp, rng, topts);
    rec.Record(tree.node(child).kernel, tree.node(child).direct_cost.value);
    CostEstimate rollout = Simulate(tree.node(child).kernel, cfg, mp, rng, topts);
    Backpropagate(tree, child, rollout.value);
  }
  rec.Pad(static_cast<size_t>(cfg.budget));
  TreeStats stats = ComputeStats(tree);
  SearchResult result = std::move(rec).Finish(root_cost, stats);
  return {std::move(result), std::move(tree)};
}

inline SearchResult Search(const Kernel& root, Proposer& proposer, const SearchConfig& cfg,
                           const MachineParams& mp = {}, const TransformOptions& topts = {}) {
  return SearchWithTree(root, proposer, cfg, mp, topts).result;
}

/// Prompt the proposer would receive for the next selected node after
/// `samples` iterations of the search described by `cfg` (budget ignored).
inline std::string PromptAfter(const Kernel& root, Proposer& proposer, SearchConfig cfg, int samples,
                               const MachineParams& mp = {}, const TransformOptions& topts = {}) {
  if (samples < 0) throw std::invalid_argument("PromptAfter: samples must be >= 0");
  if (samples == 0) {
    SearchTree tree(root, mp);
    return BuildPrompt(BuildContext(tree, 0, cfg.context_depth));
  }
  cfg.budget = samples;
  SearchOutput out = SearchWithTree(root, proposer, cfg, mp, topts);
  double scale = 1.0;
  if (cfg.cost_scale == CostScale::kBestSoFar) scale = out.result.best_cost.value;
  if (cfg.cost_scale == CostScale::kRoot) scale = out.result.root_cost;
  auto next = Select(out.tree, cfg, scale);
  if (!next) throw std::runtime_error("search tree is saturated; no node left to expand");
  return BuildPrompt(BuildContext(out.tree, *next, cfg.context_depth));
}

}  // namespace mctune
