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

#include <cmath>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mctune {
namespace {

SearchNode Visited(double acc, int64_t visits) {
  SearchNode n;
  n.acc_cost = acc;
  n.visits = visits;
  return n;
}

TEST(Uct, UnvisitedIsInfinite) {
  SearchConfig cfg;
  EXPECT_EQ(UctScore(Visited(0, 0), 10, cfg), std::numeric_limits<double>::infinity());
}

TEST(Uct, HandValues) {
  SearchConfig cfg;
  // sqrt(2) * sqrt(ln 10 / 2) = sqrt(ln 10) = 1.517427...
  const double explore = std::sqrt(std::log(10.0));
  EXPECT_NEAR(UctScore(Visited(1.0, 2), 10, cfg), 2.0 + explore, 1e-12);
  EXPECT_NEAR(UctScore(Visited(1.0, 2), 10, cfg), 3.5174, 1e-4);
  cfg.exploitation_mode = ExploitationMode::kLiteral;
  EXPECT_NEAR(UctScore(Visited(1.0, 2), 10, cfg), 0.5 + explore, 1e-12);
  EXPECT_NEAR(UctScore(Visited(1.0, 2), 10, cfg), 2.0174, 1e-4);
}

TEST(Uct, ZeroCostGuardAndScale) {
  SearchConfig cfg;
  EXPECT_EQ(UctScore(Visited(0.0, 3), 10, cfg), std::numeric_limits<double>::infinity());
  // Scaling C by s scales the exploitation term by 1/s.
  EXPECT_NEAR(UctScore(Visited(4.0, 2), 10, cfg, 2.0), UctScore(Visited(2.0, 2), 10, cfg), 1e-12);
  EXPECT_THROW(UctScore(Visited(1.0, 1), 0, cfg), std::invalid_argument);
}

TEST(Select, FreshTreeAndPartiallyFilledRoot) {
  Kernel k = library::Matmul(4, 4, 4);
  SearchTree tree(k, {});
  SearchConfig cfg;
  EXPECT_EQ(Select(tree, cfg), 0);
  tree.AddChild(0, Apply(k, Parallel{0}), {Parallel{0}}, {1.0});
  EXPECT_EQ(Select(tree, cfg), 0) << "root still has a free slot";
}

TEST(Select, PrefersUnvisitedChildAndLowestIdOnTies) {
  Kernel k = library::Matmul(4, 4, 4);
  SearchTree tree(k, {});
  SearchConfig cfg;
  int a = tree.AddChild(0, Apply(k, Parallel{0}), {Parallel{0}}, {1.0});
  int b = tree.AddChild(0, Apply(k, Parallel{1}), {Parallel{1}}, {1.0});
  Backpropagate(tree, a, 1.0);
  EXPECT_EQ(Select(tree, cfg), b);
  Backpropagate(tree, b, 1.0);
  EXPECT_EQ(Select(tree, cfg), a) << "equal scores: lowest id";
}

TEST(Select, SaturatedTreeReturnsNothing) {
  Kernel k = library::Matmul(2, 2, 2);
  SearchConfig cfg;
  cfg.horizon = 1;
  cfg.branching = 1;
  cfg.budget = 10;
  RandomProposer p;
  auto out = SearchWithTree(k, p, cfg);
  EXPECT_EQ(out.tree.size(), 2u);
  EXPECT_FALSE(Select(out.tree, cfg).has_value());
  EXPECT_TRUE(out.result.tree_stats.saturated);
  EXPECT_EQ(out.result.curve.size(), 10u) << "curve padded to the budget";
}

TEST(Backpropagate, HandTrace) {
  Kernel k = library::Matmul(4, 4, 4);
  SearchTree tree(k, {});
  int a = tree.AddChild(0, Apply(k, Parallel{0}), {Parallel{0}}, {1.0});
  int b = tree.AddChild(a, Apply(tree.node(a).kernel, Parallel{1}), {Parallel{1}}, {1.0});
  Backpropagate(tree, a, 1.0);
  Backpropagate(tree, b, 2.0);
  EXPECT_DOUBLE_EQ(tree.root().acc_cost, 3.0);
  EXPECT_EQ(tree.root().visits, 2);
  EXPECT_DOUBLE_EQ(tree.node(a).acc_cost, 3.0);
  EXPECT_EQ(tree.node(b).visits, 1);
}

TEST(Expand, InvalidNamesFallBackToOneTransform) {
  Kernel k = library::Matmul(4, 4, 4);
  SearchTree tree(k, {});
  SearchConfig cfg;
  Rng rng(1);
  ScriptedProposer p({"no parseable line here"});
  int c = Expand(tree, 0, p, cfg, {}, rng);
  EXPECT_EQ(tree.node(c).edge.size(), 1u);
  EXPECT_EQ(tree.fallback_count, 1);
  ScriptedProposer bad({"Transformations to apply: Fuse, Vectorize"});
  c = Expand(tree, 0, bad, cfg, {}, rng);
  EXPECT_EQ(tree.node(c).edge.size(), 1u);
  EXPECT_EQ(tree.fallback_count, 2);
}

TEST(Expand, ConcatenatesLegalNames) {
  Kernel k = library::Matmul(4, 4, 4);
  SearchTree tree(k, {});
  SearchConfig cfg;
  Rng rng(2);
  ScriptedProposer p({"Transformations to apply: TileSize, Unroll"});
  int c = Expand(tree, 0, p, cfg, {}, rng);
  const auto& edge = tree.node(c).edge;
  ASSERT_EQ(edge.size(), 2u);
  EXPECT_EQ(KindOf(edge[0]), TransformKind::kTileSize);
  EXPECT_EQ(KindOf(edge[1]), TransformKind::kUnroll);
  EXPECT_EQ(tree.node(c).trace().size(), 2u);
  EXPECT_EQ(tree.fallback_count, 0);
  EXPECT_DOUBLE_EQ(tree.node(c).direct_cost.value, Estimate(tree.node(c).kernel).value);
}

TEST(Expand, TruncatesToHorizon) {
  Kernel k = library::Matmul(4, 4, 4);
  SearchTree tree(k, {});
  SearchConfig cfg;
  cfg.horizon = 3;
  Rng rng(3);
  ScriptedProposer p({"Transformations to apply: Unroll, Unroll, Unroll, Unroll, Unroll"});
  int c = Expand(tree, 0, p, cfg, {}, rng);
  EXPECT_EQ(tree.node(c).edge.size(), 3u);
}

TEST(Expand, SkipsIllegalMiddleElement) {
  // Every axis tiled already: TileSize has no legal instance and is skipped.
  Kernel k = library::Matmul(2, 2, 2);
  for (int a = 0; a < 3; ++a) k = Apply(k, TileSize{a, {2}});
  SearchTree tree(k, {});
  SearchConfig cfg;
  Rng rng(4);
  ScriptedProposer p({"Transformations to apply: Parallel, TileSize, Unroll"});
  int c = Expand(tree, 0, p, cfg, {}, rng);
  const auto& edge = tree.node(c).edge;
  ASSERT_EQ(edge.size(), 2u);
  EXPECT_EQ(KindOf(edge[0]), TransformKind::kParallel);
  EXPECT_EQ(KindOf(edge[1]), TransformKind::kUnroll);
}

TEST(Simulate, ZeroLengthAndDeterminism) {
  Kernel k = library::Make("tiny-flux-conv");
  SearchConfig cfg;
  cfg.rollout_len = 0;
  Rng rng(5);
  EXPECT_DOUBLE_EQ(Simulate(k, cfg, {}, rng).value, Estimate(k).value);
  cfg.rollout_len = 4;
  Rng r1(9), r2(9);
  EXPECT_EQ(Simulate(k, cfg, {}, r1).value, Simulate(k, cfg, {}, r2).value);
}

TEST(Simulate, MeanWithinExhaustiveEnvelope) {
  // Every outcome of at most 4 steps from the tiny matmul, enumerated (a
  // rollout may stop early when it keeps drawing families with no instance).
  Kernel k = library::Matmul(2, 2, 2);
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  std::function<void(const Kernel&, int)> walk = [&](const Kernel& cur, int depth) {
    double c = Estimate(cur).value;
    lo = std::min(lo, c);
    hi = std::max(hi, c);
    if (depth == 4) return;
    for (const auto& t : EnumerateInstances(cur)) walk(Apply(cur, t), depth + 1);
  };
  walk(k, 0);
  SearchConfig cfg;
  double sum = 0;
  for (uint64_t s = 0; s < 1000; ++s) {
    Rng rng(s);
    double c = Simulate(k, cfg, {}, rng).value;
    EXPECT_GE(c, lo);
    EXPECT_LE(c, hi);
    sum += c;
  }
  EXPECT_GE(sum / 1000, lo);
  EXPECT_LE(sum / 1000, hi);
}

TEST(Search, BudgetOne) {
  RandomProposer p;
  SearchConfig cfg;
  cfg.budget = 1;
  auto out = SearchWithTree(library::Matmul(4, 4, 4), p, cfg);
  EXPECT_EQ(out.tree.size(), 2u);
  EXPECT_EQ(out.result.curve.size(), 1u);
}

TEST(Search, NeverWorseThanRoot) {
  RandomProposer p;
  SearchConfig cfg;
  cfg.budget = 50;
  Kernel k = library::Make("tiny-llama3-attention");
  auto r = Search(k, p, cfg);
  EXPECT_LE(r.best_cost.value, Estimate(k).value);
  EXPECT_DOUBLE_EQ(r.root_cost, Estimate(k).value);
}

TEST(Search, OracleScriptReachesOneStepOptimumAtFirstSample) {
  Kernel k = library::Make("tiny-deepseek-moe");
  double best = Estimate(k).value;
  Transform best_t = Parallel{0};
  for (const auto& t : EnumerateInstances(k)) {
    double c = Estimate(Apply(k, t)).value;
    if (c < best) {
      best = c;
      best_t = t;
    }
  }
  // The proposer names the optimal family; its parameters are drawn, so the
  // first sample hits the optimum for some seeds and is recorded as sample 1.
  ScriptedProposer p({testing::ResponseFor({best_t})});
  SearchConfig cfg;
  cfg.budget = 1;
  int hits = 0;
  for (uint64_t seed = 0; seed < 50; ++seed) {
    cfg.seed = seed;
    auto out = SearchWithTree(k, p, cfg);
    EXPECT_EQ(out.result.curve.front().best_cost, std::min(Estimate(k).value, out.tree.node(1).direct_cost.value));
    hits += out.result.curve.front().best_cost == best;
  }
  EXPECT_GT(hits, 0);
}

TEST(SearchProperties, StructuralInvariants) {
  for (int b : {2, 4}) {
    RandomProposer p;
    SearchConfig cfg;
    cfg.branching = b;
    cfg.budget = 300;
    cfg.seed = static_cast<uint64_t>(b);
    auto out = SearchWithTree(library::Make("tiny-flux-attention"), p, cfg);
    const auto& tree = out.tree;
    EXPECT_EQ(tree.root().visits, static_cast<int64_t>(tree.size() - 1));
    for (const auto& n : tree.nodes()) {
      EXPECT_LE(static_cast<int>(n.children.size()), b);
      EXPECT_GE(n.visits, static_cast<int64_t>(n.children.size()));
      int64_t child_visits = 0;
      for (int c : n.children) child_visits += tree.node(c).visits;
      EXPECT_GE(n.visits, child_visits);
      if (n.parent) {
        TransformSeq expect = tree.node(*n.parent).trace();
        expect.insert(expect.end(), n.edge.begin(), n.edge.end());
        EXPECT_EQ(ToString(n.trace()), ToString(expect));
        EXPECT_LE(static_cast<int>(n.trace().size()), cfg.horizon);
      } else {
        EXPECT_EQ(n.id, 0);
      }
    }
    for (size_t i = 1; i < out.result.curve.size(); ++i) {
      EXPECT_LE(out.result.curve[i].best_cost, out.result.curve[i - 1].best_cost);
    }
    EXPECT_LE(out.result.tree_stats.max_children, b);
  }
}

TEST(SearchProperties, SeedDeterminism) {
  SearchConfig cfg;
  cfg.budget = 200;
  cfg.seed = 42;
  RandomProposer p1, p2;
  Kernel k = library::Make("deepseek-moe");
  EXPECT_EQ(ToJson(Search(k, p1, cfg)).dump(), ToJson(Search(k, p2, cfg)).dump());
}

TEST(SearchConfigJson, RoundTripAndDefaults) {
  SearchConfig cfg;
  EXPECT_NEAR(cfg.c_explore, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(cfg.branching, 2);
  nlohmann::json j = cfg;
  EXPECT_EQ(j["exploitation_mode"], "mean-inverse");
  nlohmann::json partial = {{"branching", 4}, {"exploitation_mode", "literal"}};
  auto back = partial.get<SearchConfig>();
  EXPECT_EQ(back.branching, 4);
  EXPECT_EQ(back.exploitation_mode, ExploitationMode::kLiteral);
  EXPECT_EQ(back.rollout_len, 4);
}

TEST(PromptAfter, RootAndGrownTree) {
  Kernel k = library::Make("tiny-deepseek-moe");
  ScriptedProposer p({"Transformations to apply: TileSize, Unroll"});
  SearchConfig cfg;
  std::string root = PromptAfter(k, p, cfg, 0);
  EXPECT_NE(root.find("No prior transformations"), std::string::npos);
  std::string later = PromptAfter(k, p, cfg, 6);
  EXPECT_NE(later.find("[Current vs Parent]"), std::string::npos) << later;
}

}  // namespace
}  // namespace mctune
