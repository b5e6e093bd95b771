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

TEST(KernelLibrary, AllConstructorsSatisfyInvariants) {
  for (const auto& name : library::AllNames()) {
    Kernel k = library::Make(name);
    EXPECT_TRUE(InvariantViolations(k).empty()) << name;
    EXPECT_EQ(k.name, name);
    EXPECT_EQ(Render(k), Render(library::Make(name))) << "constructor must be deterministic";
  }
}

TEST(KernelLibrary, TinyVariantsAreSmall) {
  for (const auto& name : library::TinyNames()) EXPECT_LE(library::Make(name).TotalIterations(), 4096) << name;
  for (const auto& name : library::BenchmarkNames()) {
    EXPECT_TRUE(library::Make(library::TinyVariantName(name)).TotalIterations() <= 4096);
  }
}

TEST(KernelLibrary, MoeShape) {
  Kernel k = library::Make("deepseek-moe");
  EXPECT_EQ(k.Buffer("A").shape, (std::vector<int64_t>{1, 16, 7168}));
  EXPECT_EQ(k.Buffer("B").shape, (std::vector<int64_t>{7168, 2048}));
  EXPECT_EQ(k.Buffer("C").shape, (std::vector<int64_t>{1, 16, 2048}));
  EXPECT_EQ(RenderGrid(k), "for b, t, j, k in grid(1, 16, 2048, 7168)");
}

TEST(KernelLibrary, UnknownNameThrows) { EXPECT_THROW(library::Make("no-such-kernel"), std::invalid_argument); }

TEST(KernelInvariants, DetectsBrokenKernels) {
  Kernel k = library::Matmul(2, 2, 2);
  Kernel bad = k;
  bad.loops[2].annotation = Annotation::ParallelLoop();
  EXPECT_FALSE(InvariantViolations(bad).empty()) << "reduction loop annotated parallel";

  bad = k;
  bad.init_level = 3;
  EXPECT_FALSE(InvariantViolations(bad).empty()) << "init after the reduction loop";

  bad = k;
  bad.loops[0].extent = 3;
  EXPECT_FALSE(InvariantViolations(bad).empty()) << "perfect split broken / index out of bounds";

  bad = k;
  bad.statement.output.indices.pop_back();
  EXPECT_FALSE(InvariantViolations(bad).empty()) << "output does not cover j";
  EXPECT_THROW(CheckInvariants(bad), KernelError);
}

TEST(Render, TinyMatmul) {
  Kernel k = library::Matmul(2, 2, 2);
  std::string text = Render(k);
  EXPECT_NE(text.find("grid(2, 2, 2)"), std::string::npos);
  EXPECT_EQ(text,
            "kernel matmul\n"
            "  A: Buffer((2, 2), input)\n"
            "  B: Buffer((2, 2), input)\n"
            "  C: Buffer((2, 2), output)\n"
            "axes: i:S(2), j:S(2), k:R(2)\n"
            "for i, j, k in grid(2, 2, 2):\n"
            "  annotations: none\n"
            "  init at level 2 (before k): C[i, j] = 0.0\n"
            "  C[i, j] += A[i, k] * B[k, j]\n");
}

TEST(Render, TiledAxisShowsEveryExtentAndStride) {
  Kernel k = Apply(library::Make("deepseek-moe"), TileSize{2, {4, 8, 1, 64}});
  std::string text = Render(k);
  EXPECT_NE(text.find("grid(1, 16, 4, 8, 1, 64, 7168)"), std::string::npos) << text;
  EXPECT_NE(text.find("j_0 * 512 + j_1 * 64 + j_2 * 64 + j_3"), std::string::npos) << text;
  EXPECT_EQ(Render(k), Render(k));
}

TEST(Render, Annotations) {
  Kernel k = library::Matmul(2, 2, 8);
  k = Apply(k, Parallel{0});
  k = Apply(k, Unroll{2, 4});
  EXPECT_EQ(RenderAnnotations(k), "i=parallel, k=unroll(4)");
  k = Apply(k, Unroll{2, std::nullopt});
  EXPECT_EQ(RenderAnnotations(k), "i=parallel, k=unroll(full)");
}

TEST(LoopShapeDiff, IdenticalKernels) {
  Kernel k = library::Matmul(2, 2, 2);
  std::string d = LoopShapeDiff(k, k);
  EXPECT_NE(d.find("No structural difference"), std::string::npos) << d;
}

TEST(LoopShapeDiff, MoeTileDecisionPair) {
  Kernel moe = library::Make("deepseek-moe");
  Kernel a = Apply(moe, TileSize{2, {4, 8, 1, 64}});
  Kernel b = Apply(moe, TileSize{2, {4, 2, 4, 64}});
  std::string d = LoopShapeDiff(a, b);
  EXPECT_NE(d.find("decision=[4, 8, 1, 64]"), std::string::npos) << d;
  EXPECT_NE(d.find("decision=[4, 2, 4, 64]"), std::string::npos) << d;
  EXPECT_NE(d.find("Index example: vj = j_0 * 512 + j_1 * 64 + j_2 * 64 + j_3"), std::string::npos) << d;
  EXPECT_NE(d.find("Index example: vj = j_0 * 512 + j_1 * 256 + j_2 * 64 + j_3"), std::string::npos) << d;
  EXPECT_LT(d.find("Loop shapes:"), d.find("Tile decisions:"));
}

TEST(LoopShapeDiff, ParallelOnlyChangesAnnotations) {
  Kernel k = library::Matmul(2, 2, 2);
  Kernel p = Apply(k, Parallel{0});
  std::string d = LoopShapeDiff(p, k);
  EXPECT_NE(d.find("Summary: loop extents unchanged, annotations changed"), std::string::npos) << d;
  EXPECT_NE(d.find("Current: i=parallel"), std::string::npos) << d;
}

TEST(LoopShapeDiff, DifferentRootsThrow) {
  EXPECT_THROW(LoopShapeDiff(library::Matmul(2, 2, 2), library::Make("tiny-deepseek-moe")), std::invalid_argument);
}

}  // namespace
}  // namespace mctune
