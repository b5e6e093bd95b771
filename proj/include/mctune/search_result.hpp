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

#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mctune/cost_model.hpp"
#include "mctune/kernel.hpp"

namespace mctune {

struct CurvePoint {
  int64_t sample_index = 0;  // 1-based
  double best_cost = 0;
  bool operator==(const CurvePoint&) const = default;
};

struct TreeStats {
  int64_t node_count = 0;
  int max_depth = 0;
  int max_children = 0;
  int64_t fallback_count = 0;
  int64_t proposer_errors = 0;
  bool saturated = false;
  bool operator==(const TreeStats&) const = default;
};

/// Outcome of any search strategy; all strategies share this schema so their
/// curves are directly comparable (one sample = one scored candidate).
struct SearchResult {
  Kernel best_kernel;
  CostEstimate best_cost;
  double root_cost = 0;
  std::vector<CurvePoint> curve;
  TreeStats tree_stats;

  const TransformSeq& best_trace() const { return best_kernel.provenance; }

  /// First 1-based sample index whose best cost is <= threshold, or 0.
  int64_t SamplesToReach(double threshold) const {
    for (const auto& p : curve) {
      if (p.best_cost <= threshold) return p.sample_index;
    }
    return 0;
  }
};

/// Tracks the best-so-far curve with the root as the initial best.
class CurveRecorder {
 public:
  explicit CurveRecorder(const Kernel& root, double root_cost) : best_(root), best_cost_(root_cost) {}

  void Record(const Kernel& candidate, double cost) {
    if (cost < best_cost_) {
      best_cost_ = cost;
      best_ = candidate;
    }
    curve_.push_back({static_cast<int64_t>(curve_.size()) + 1, best_cost_});
  }

  /// Repeats the current best, used when a search stops early.
  void Pad(size_t length) {
    while (curve_.size() < length) curve_.push_back({static_cast<int64_t>(curve_.size()) + 1, best_cost_});
  }

  size_t samples() const { return curve_.size(); }
  double best_cost() const { return best_cost_; }

  SearchResult Finish(double root_cost, TreeStats stats = {}) && {
    SearchResult r;
    r.best_kernel = std::move(best_);
    r.best_cost = CostEstimate{best_cost_};
    r.root_cost = root_cost;
    r.curve = std::move(curve_);
    r.tree_stats = stats;
    return r;
  }

 private:
  Kernel best_;
  double best_cost_;
  std::vector<CurvePoint> curve_;
};

inline nlohmann::json ToJson(const SearchResult& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve) curve.push_back({p.sample_index, p.best_cost});
  return {
      {"kernel", r.best_kernel.name},
      {"root_cost", r.root_cost},
      {"best_cost", r.best_cost.value},
      {"speedup", r.root_cost / r.best_cost.value},
      {"best_trace", ToJson(r.best_trace())},
      {"best_program", Render(r.best_kernel)},
      {"curve", curve},
      {"tree_stats",
       {{"node_count", r.tree_stats.node_count},
        {"max_depth", r.tree_stats.max_depth},
        {"max_children", r.tree_stats.max_children},
        {"fallback_count", r.tree_stats.fallback_count},
        {"proposer_errors", r.tree_stats.proposer_errors},
        {"saturated", r.tree_stats.saturated}}},
  };
}

}  // namespace mctune
