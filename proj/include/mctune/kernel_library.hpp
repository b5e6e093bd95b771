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

#include <string>
#include <vector>

#include "mctune/kernel.hpp"

namespace mctune {
namespace library {

namespace detail {

inline IndexExpr Var(const std::string& loop) { return IndexExpr{{Term{loop, 1}}, 0}; }

inline IndexExpr Sum(const std::string& a, const std::string& b) {
  return IndexExpr{{Term{a, 1}, Term{b, 1}}, 0};
}

inline Access Acc(std::string buffer, std::vector<IndexExpr> idx) {
  return Access{std::move(buffer), std::move(idx)};
}

/// Builds the untransformed kernel: one loop per axis, init right before the
/// first reduction loop.
inline Kernel Assemble(std::string name, std::vector<Axis> axes, std::vector<BufferDecl> buffers,
                       Statement stmt) {
  Kernel k;
  k.name = std::move(name);
  k.buffers = std::move(buffers);
  k.axes = std::move(axes);
  for (size_t a = 0; a < k.axes.size(); ++a) {
    k.loops.push_back(LoopVar{k.axes[a].name, k.axes[a].extent, k.axes[a].kind, Annotation::None(),
                              static_cast<int>(a), 0});
  }
  k.statement = std::move(stmt);
  k.init_level = k.FirstReductionLoop();
  CheckInvariants(k);
  return k;
}

}  // namespace detail

/// C[i, j] += A[i, k] * B[k, j]
inline Kernel Matmul(int64_t m, int64_t n, int64_t kk, std::string name = "matmul") {
  using namespace detail;
  return Assemble(std::move(name),
                  {{"i", m, LoopKind::kSpatial}, {"j", n, LoopKind::kSpatial}, {"k", kk, LoopKind::kReduction}},
                  {{"A", {m, kk}, BufferRole::kInput},
                   {"B", {kk, n}, BufferRole::kInput},
                   {"C", {m, n}, BufferRole::kOutput}},
                  Statement{Acc("C", {Var("i"), Var("j")}),
                            {Acc("A", {Var("i"), Var("k")}), Acc("B", {Var("k"), Var("j")})}});
}

/// Attention score matmul S[h, i, j] += Q[h, i, d] * K[h, j, d].
inline Kernel AttentionMatmul(int64_t heads, int64_t seq_q, int64_t seq_kv, int64_t head_dim,
                              std::string name = "attention-matmul") {
  using namespace detail;
  return Assemble(std::move(name),
                  {{"h", heads, LoopKind::kSpatial},
                   {"i", seq_q, LoopKind::kSpatial},
                   {"j", seq_kv, LoopKind::kSpatial},
                   {"d", head_dim, LoopKind::kReduction}},
                  {{"Q", {heads, seq_q, head_dim}, BufferRole::kInput},
                   {"K", {heads, seq_kv, head_dim}, BufferRole::kInput},
                   {"S", {heads, seq_q, seq_kv}, BufferRole::kOutput}},
                  Statement{Acc("S", {Var("h"), Var("i"), Var("j")}),
                            {Acc("Q", {Var("h"), Var("i"), Var("d")}), Acc("K", {Var("h"), Var("j"), Var("d")})}});
}

/// Expert projection C[b, t, j] += A[b, t, k] * B[k, j] with A: (batch, tokens,
/// hidden) and B: (hidden, out). Loop grid is (b, t, j, k).
inline Kernel MoeMatmul(int64_t batch, int64_t tokens, int64_t hidden, int64_t out,
                        std::string name = "moe-matmul") {
  using namespace detail;
  return Assemble(std::move(name),
                  {{"b", batch, LoopKind::kSpatial},
                   {"t", tokens, LoopKind::kSpatial},
                   {"j", out, LoopKind::kSpatial},
                   {"k", hidden, LoopKind::kReduction}},
                  {{"A", {batch, tokens, hidden}, BufferRole::kInput},
                   {"B", {hidden, out}, BufferRole::kInput},
                   {"C", {batch, tokens, out}, BufferRole::kOutput}},
                  Statement{Acc("C", {Var("b"), Var("t"), Var("j")}),
                            {Acc("A", {Var("b"), Var("t"), Var("k")}), Acc("B", {Var("k"), Var("j")})}});
}

/// Direct convolution, valid padding, stride 1:
/// O[n, oc, oy, ox] += I[n, ic, oy + ky, ox + kx] * W[oc, ic, ky, kx].
inline Kernel DirectConv2d(int64_t batch, int64_t out_ch, int64_t in_ch, int64_t out_h, int64_t out_w,
                           int64_t kernel_h, int64_t kernel_w, std::string name = "direct-convolution") {
  using namespace detail;
  return Assemble(std::move(name),
                  {{"n", batch, LoopKind::kSpatial},
                   {"oc", out_ch, LoopKind::kSpatial},
                   {"oy", out_h, LoopKind::kSpatial},
                   {"ox", out_w, LoopKind::kSpatial},
                   {"ic", in_ch, LoopKind::kReduction},
                   {"ky", kernel_h, LoopKind::kReduction},
                   {"kx", kernel_w, LoopKind::kReduction}},
                  {{"I", {batch, in_ch, out_h + kernel_h - 1, out_w + kernel_w - 1}, BufferRole::kInput},
                   {"W", {out_ch, in_ch, kernel_h, kernel_w}, BufferRole::kInput},
                   {"O", {batch, out_ch, out_h, out_w}, BufferRole::kOutput}},
                  Statement{Acc("O", {Var("n"), Var("oc"), Var("oy"), Var("ox")}),
                            {Acc("I", {Var("n"), Var("ic"), Sum("oy", "ky"), Sum("ox", "kx")}),
                             Acc("W", {Var("oc"), Var("ic"), Var("ky"), Var("kx")})}});
}

/// The four benchmark kernels, in search shape.
inline const std::vector<std::string>& BenchmarkNames() {
  static const std::vector<std::string> names = {"llama3-attention", "deepseek-moe", "flux-attention",
                                                 "flux-conv"};
  return names;
}

/// Tiny variants (each at most 4096 MACs) for interpreter validation.
inline const std::vector<std::string>& TinyNames() {
  static const std::vector<std::string> names = {"tiny-llama3-attention", "tiny-deepseek-moe",
                                                 "tiny-flux-attention", "tiny-flux-conv"};
  return names;
}

inline std::vector<std::string> AllNames() {
  auto all = BenchmarkNames();
  for (const auto& n : TinyNames()) all.push_back(n);
  return all;
}

/// Returns the tiny variant name for a benchmark name (or the name itself if
/// it already is tiny).
inline std::string TinyVariantName(const std::string& name) {
  if (name.rfind("tiny-", 0) == 0) return name;
  return "tiny-" + name;
}

inline Kernel Make(const std::string& name) {
  // Llama3-8B: 32 heads, head dim 128.
  if (name == "llama3-attention") return AttentionMatmul(32, 1024, 1024, 128, name);
  // DeepSeek-R1 expert projection, A: (1, 16, 7168), B: (7168, 2048).
  if (name == "deepseek-moe") return MoeMatmul(1, 16, 7168, 2048, name);
  // FLUX joint attention: 24 heads, head dim 128.
  if (name == "flux-attention") return AttentionMatmul(24, 4096, 4096, 128, name);
  if (name == "flux-conv") return DirectConv2d(1, 128, 128, 64, 64, 3, 3, name);

  if (name == "tiny-llama3-attention") return AttentionMatmul(2, 4, 6, 8, name);
  if (name == "tiny-deepseek-moe") return MoeMatmul(1, 2, 4, 3, name);
  if (name == "tiny-flux-attention") return AttentionMatmul(3, 4, 4, 6, name);
  if (name == "tiny-flux-conv") return DirectConv2d(1, 4, 2, 4, 4, 3, 3, name);
  throw KernelError("unknown kernel: " + name);
}

}  // namespace library
}  // namespace mctune
