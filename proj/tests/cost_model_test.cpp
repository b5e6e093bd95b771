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

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace mctune {
namespace {

TEST(CostModel, TinyMatmulByHand) {
  // 8 MACs, working set far below the cache, loop overhead (2 + 4 + 8) * 4,
  // init executed 2 * 2 times at 0.5 each.
  Kernel k = library::Matmul(2, 2, 2);
  EXPECT_DOUBLE_EQ(Estimate(k).value, 8.0 * 1.0 * 1.0 + (2 + 4 + 8) * 4.0 + 4 * 0.5);
  EXPECT_DOUBLE_EQ(Estimate(k).value, 66.0);
}

TEST(CostModel, ParallelOuterLoopDividesSerialCost) {
  Kernel k = library::Matmul(2, 2, 2);
  Kernel p = Apply(k, Parallel{0});
  EXPECT_DOUBLE_EQ(Estimate(p).value, 66.0 / (0.85 * 2));
}

TEST(CostModel, ParallelOnInnerLoopHasNoEffect) {
  Kernel k = library::Matmul(2, 2, 2);
  EXPECT_DOUBLE_EQ(Estimate(Apply(k, Parallel{1})).value, Estimate(k).value);
}

TEST(CostModel, ParallelNeverSlowsDown) {
  // 0.85 * min(cores, 1) < 1: the speedup is clamped at 1.
  Kernel k = library::Make("deepseek-moe");  // loop 0 has extent 1
  EXPECT_DOUBLE_EQ(Estimate(Apply(k, Parallel{0})).value, Estimate(k).value);
}

TEST(CostModel, MatchesIndependentOracleOnRandomPrograms) {
  Rng rng(31);
  MachineParams mp;
  mp.cache_bytes = 64;  // small cache so the miss term is exercised on tiny shapes
  for (int trial = 0; trial < 400; ++trial) {
    Kernel k = testing::RandomWalk(library::Make(library::TinyNames()[trial % 4]), trial % 9, rng);
    double want = testing::OracleCost(k, mp);
    EXPECT_NEAR(Estimate(k, mp).value, want, 1e-9 * want) << ToString(k.provenance);
  }
}

TEST(CostModel, TermsAreConsistent) {
  Kernel k = Apply(library::Make("flux-conv"), TileSize{1, {2, 4, 4, 4}});
  CostTerms t = EstimateTerms(k);
  EXPECT_DOUBLE_EQ(t.cost, (t.work + t.overhead + t.init_cost) / t.speedup);
  EXPECT_DOUBLE_EQ(t.work, t.macs * t.miss_factor);
  EXPECT_GE(t.miss_factor, 1.0);
}

TEST(CostModel, SpeedupOver) {
  Kernel k = library::Make("llama3-attention");
  EXPECT_DOUBLE_EQ(SpeedupOver(k, k), 1.0);
  Kernel p = Apply(k, Parallel{0});  // 32 heads >= 8 cores
  EXPECT_GT(SpeedupOver(k, p), 1.0);
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Kernel a = testing::RandomWalk(k, 3, rng), b = testing::RandomWalk(k, 3, rng);
    EXPECT_NEAR(SpeedupOver(a, b) * SpeedupOver(b, a), 1.0, 1e-12);
  }
}

TEST(CostModel, MachineParamsValidation) {
  MachineParams mp;
  EXPECT_NO_THROW(mp.Validate());
  mp.parallel_efficiency = 1.5;
  EXPECT_THROW(mp.Validate(), std::invalid_argument);
  mp = {};
  mp.cores = 0;
  EXPECT_THROW(mp.Validate(), std::invalid_argument);
  nlohmann::json j = {{"cores", 16}};
  EXPECT_EQ(j.get<MachineParams>().cores, 16);
  EXPECT_EQ(j.get<MachineParams>().c_loop, 4.0);
}

TEST(CostModelProperties, PositiveDeterministicMonotone) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    Kernel k = testing::RandomWalk(library::Make(library::AllNames()[trial % 8]), trial % 6, rng);
    double c = Estimate(k).value;
    EXPECT_TRUE(c > 0 && std::isfinite(c));
    EXPECT_EQ(c, Estimate(k).value);
    if (k.loops[0].kind == LoopKind::kSpatial && k.loops[0].annotation.kind == Annotation::Kind::kNone) {
      EXPECT_LE(Estimate(Apply(k, Parallel{0})).value, c);
    }
    // Unroll replaces a parallel annotation, so only non-parallel loops qualify.
    for (int l = 0; l < static_cast<int>(k.loops.size()); ++l) {
      if (k.loops[l].extent <= 64 && k.loops[l].annotation.kind != Annotation::Kind::kParallel) EXPECT_LE(Estimate(Apply(k, Unroll{l, std::nullopt})).value, c);
    }
  }
}

}  // namespace
}  // namespace mctune
