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
 * \file cost_model.hpp
 * \brief Analytic surrogate cost model. Lower is better, units are abstract.
 *
 *  cost = (work + overhead + init) / speedup, where
 *    work     = MACs * c_mac * (1 + c_miss * max(0, log2(working_set / cache)) / 10)
 *    overhead = sum over loops of iterations-so-far * c_loop, zero when fully
 *               unrolled and divided by the factor when unrolled by a factor
 *    init     = executions of the init block * c_init
 *    speedup  = parallel_efficiency * min(cores, extent) when the outermost
 *               loop is parallel, else 1 (never below 1)
 *
 *  Each transform family has a pathway: TileSize moves the working set,
 *  Unroll the loop overhead, Parallel the speedup and ComputeLocation the
 *  init term.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>

#include <json.hpp>

#include "mctune/kernel.hpp"

namespace mctune {

struct MachineParams {
  int64_t cores = 8;
  int64_t vector_width = 8;
  int64_t cache_bytes = 32768;
  double c_mac = 1.0;
  double c_loop = 4.0;
  double c_miss = 8.0;
  double parallel_efficiency = 0.85;
  double c_init = 0.5;

  void Validate() const {
    if (cores < 1 || vector_width < 1 || cache_bytes < 1 || !(c_mac > 0) || !(c_loop > 0) || !(c_miss > 0) ||
        !(c_init > 0) || !(parallel_efficiency > 0) || parallel_efficiency > 1) {
      throw std::invalid_argument("MachineParams: all parameters must be positive, parallel_efficiency <= 1");
    }
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(MachineParams, cores, vector_width, cache_bytes, c_mac, c_loop,
                                                c_miss, parallel_efficiency, c_init)

struct CostEstimate {
  double value = 1.0;
  bool operator==(const CostEstimate&) const = default;
};

/// Breakdown of one estimate; Estimate() returns only `cost`.
struct CostTerms {
  double macs = 0;
  double working_set_bytes = 0;
  double miss_factor = 1;
  double work = 0;
  double overhead = 0;
  double init_executions = 0;
  double init_cost = 0;
  double serial = 0;
  double speedup = 1;
  double cost = 0;
};

namespace detail {

/// Bounding-box footprint (elements) of `acc` while the loops at positions
/// >= first_inner vary and the outer loops are fixed.
inline double Footprint(const Kernel& k, const Access& acc, size_t first_inner) {
  const BufferDecl& buf = k.Buffer(acc.buffer);
  double elems = 1;
  for (size_t d = 0; d < acc.indices.size(); ++d) {
    int64_t span = 1;
    for (const auto& t : acc.indices[d].terms) {
      int idx = k.LoopIndex(t.loop);
      if (idx < 0 || static_cast<size_t>(idx) < first_inner) continue;
      span += std::abs(t.coeff) * (k.loops[idx].extent - 1);
    }
    elems *= static_cast<double>(std::min(span, buf.shape[d]));
  }
  return elems;
}

}  // namespace detail

inline CostTerms EstimateTerms(const Kernel& k, const MachineParams& mp = {}) {
  CostTerms c;
  c.macs = static_cast<double>(k.TotalIterations());

  const size_t depth = k.loops.size();
  const size_t first_inner = depth - std::min<size_t>(3, depth);
  double ws = detail::Footprint(k, k.statement.output, first_inner);
  for (const auto& in : k.statement.inputs) ws += detail::Footprint(k, in, first_inner);
  c.working_set_bytes = ws * 4.0;
  double ratio_log = std::log2(c.working_set_bytes / static_cast<double>(mp.cache_bytes));
  c.miss_factor = 1.0 + mp.c_miss * std::max(0.0, ratio_log) / 10.0;
  c.work = c.macs * mp.c_mac * c.miss_factor;

  double iters = 1;
  for (const auto& l : k.loops) {
    iters *= static_cast<double>(l.extent);
    switch (l.annotation.kind) {
      case Annotation::Kind::kUnrollFull:
        break;
      case Annotation::Kind::kUnrollFactor:
        c.overhead += iters * mp.c_loop / static_cast<double>(l.annotation.factor);
        break;
      default:
        c.overhead += iters * mp.c_loop;
    }
  }

  c.init_executions = 1;
  for (int i = 0; i < k.init_level; ++i) c.init_executions *= static_cast<double>(k.loops[i].extent);
  c.init_cost = c.init_executions * mp.c_init;

  c.serial = c.work + c.overhead + c.init_cost;
  if (!k.loops.empty() && k.loops[0].annotation.kind == Annotation::Kind::kParallel) {
    double par = mp.parallel_efficiency * static_cast<double>(std::min(mp.cores, k.loops[0].extent));
    c.speedup = std::max(1.0, par);
  }
  c.cost = c.serial / c.speedup;
  return c;
}

inline CostEstimate Estimate(const Kernel& k, const MachineParams& mp = {}) {
  return CostEstimate{EstimateTerms(k, mp).cost};
}

/// estimate(root) / estimate(optimized); > 1 means the optimized kernel is faster.
inline double SpeedupOver(const Kernel& root, const Kernel& optimized, const MachineParams& mp = {}) {
  return Estimate(root, mp).value / Estimate(optimized, mp).value;
}

}  // namespace mctune
