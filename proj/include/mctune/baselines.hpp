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
 * \file baselines.hpp
 * \brief Reference strategies sharing the planner's sample accounting:
 *  a (mu + lambda) evolutionary search over traces and pure random search.
 */

#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mctune/cost_model.hpp"
#include "mctune/random.hpp"
#include "mctune/search_result.hpp"
#include "mctune/transforms.hpp"

namespace mctune {

struct EvoConfig {
  int population = 16;
  int elites = 4;
  int init_trace_len = 4;
  int mutations_per_child = 1;
  int budget = 100;
  uint64_t seed = 0;

  void Validate() const {
    if (population < 1 || elites < 1 || init_trace_len < 1 || mutations_per_child < 1 || budget < 1) {
      throw std::invalid_argument("EvoConfig: all sizes must be positive");
    }
    if (elites > population) throw std::invalid_argument("EvoConfig: elites must not exceed population");
    if (budget < population) throw std::invalid_argument("EvoConfig: budget must be at least the population");
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvoConfig, population, elites, init_trace_len, mutations_per_child,
                                                budget, seed)

namespace detail {

inline Kernel RandomTrace(const Kernel& root, int length, Rng& rng, const TransformOptions& topts) {
  Kernel cur = root;
  for (int i = 0; i < length; ++i) {
    auto t = RandomLegalTransform(cur, rng, topts);
    if (!t) break;
    cur = Apply(cur, *t, topts);
  }
  return cur;
}

/// Either appends one random legal transform or redraws the factors of one
/// TileSize already in the trace (replaying the rest, skipping whatever
/// became illegal), with equal probability.
inline Kernel Mutate(const Kernel& root, const Kernel& parent, Rng& rng, const TransformOptions& topts) {
  std::vector<size_t> tiles;
  for (size_t i = 0; i < parent.provenance.size(); ++i) {
    if (std::holds_alternative<TileSize>(parent.provenance[i])) tiles.push_back(i);
  }
  bool resample = UniformIndex(rng, 2) == 1;
  if (resample && !tiles.empty()) {
    TransformSeq trace = parent.provenance;
    auto& tile = std::get<TileSize>(trace[tiles[UniformIndex(rng, tiles.size())]]);
    tile.factors =
        SamplePerfectTile(root.axes[tile.axis].extent, static_cast<int>(tile.factors.size()), rng);
    return ApplySeqLenient(root, trace, topts).first;
  }
  if (auto t = RandomLegalTransform(parent, rng, topts)) return Apply(parent, *t, topts);
  return parent;
}

}  // namespace detail

/// Generation 0 is `population` random traces of length init_trace_len; each
/// later generation keeps the elites by direct cost and refills the
/// population with mutated copies of uniformly chosen elites. Every scored
/// candidate is one sample; the search stops when the budget is spent.
inline SearchResult EvolutionarySearch(const Kernel& root, const EvoConfig& cfg, const MachineParams& mp = {},
                                       const TransformOptions& topts = {}) {
  cfg.Validate();
  Rng rng(cfg.seed);
  const double root_cost = Estimate(root, mp).value;
  CurveRecorder rec(root, root_cost);
  const auto budget = static_cast<size_t>(cfg.budget);

  struct Individual {
    Kernel kernel;
    double cost;
  };
  auto evaluate = [&](Kernel k) {
    double c = Estimate(k, mp).value;
    rec.Record(k, c);
    return Individual{std::move(k), c};
  };

  std::vector<Individual> population;
  for (int i = 0; i < cfg.population && rec.samples() < budget; ++i) {
    population.push_back(evaluate(detail::RandomTrace(root, cfg.init_trace_len, rng, topts)));
  }
  while (rec.samples() < budget) {
    std::stable_sort(population.begin(), population.end(),
                     [](const Individual& a, const Individual& b) { return a.cost < b.cost; });
    population.resize(std::min(population.size(), static_cast<size_t>(cfg.elites)));
    const size_t n_elites = population.size();
    while (population.size() < static_cast<size_t>(cfg.population) && rec.samples() < budget) {
      Kernel child = population[UniformIndex(rng, n_elites)].kernel;
      for (int m = 0; m < cfg.mutations_per_child; ++m) child = detail::Mutate(root, child, rng, topts);
      population.push_back(evaluate(std::move(child)));
    }
  }
  return std::move(rec).Finish(root_cost);
}

/// `budget` independent random legal traces, length uniform in
/// [1, max_trace_len], each scored once.
inline SearchResult RandomSearch(const Kernel& root, int budget, int max_trace_len, uint64_t seed,
                                 const MachineParams& mp = {}, const TransformOptions& topts = {}) {
  if (budget < 1 || max_trace_len < 1) throw std::invalid_argument("RandomSearch: budget and length must be >= 1");
  Rng rng(seed);
  const double root_cost = Estimate(root, mp).value;
  CurveRecorder rec(root, root_cost);
  for (int s = 0; s < budget; ++s) {
    int len = static_cast<int>(UniformInt(rng, 1, max_trace_len));
    Kernel k = detail::RandomTrace(root, len, rng, topts);
    rec.Record(k, Estimate(k, mp).value);
  }
  return std::move(rec).Finish(root_cost);
}

}  // namespace mctune
