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
 * \file kernel.hpp
 * \brief Loop-nest program representation: a perfectly nested loop grid
 *  around a single multiply-accumulate statement OUT[..] += IN_0[..] * IN_1[..] * ...
 *
 *  Every loop remembers the original axis it was derived from, so tiling
 *  can be checked against the perfect-split invariant and rendered the same
 *  way a schedule trace would show it.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mctune/transform_types.hpp"

namespace mctune {

class KernelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BufferRole { kInput, kOutput };
enum class LoopKind { kSpatial, kReduction };

struct BufferDecl {
  std::string name;
  std::vector<int64_t> shape;
  BufferRole role = BufferRole::kInput;
  bool operator==(const BufferDecl&) const = default;

  int64_t NumElements() const {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
  }
};

/// One axis of the untransformed iteration space.
struct Axis {
  std::string name;
  int64_t extent = 1;
  LoopKind kind = LoopKind::kSpatial;
  bool operator==(const Axis&) const = default;
};

struct Annotation {
  enum class Kind { kNone, kParallel, kUnrollFull, kUnrollFactor };
  Kind kind = Kind::kNone;
  int64_t factor = 0;  // only for kUnrollFactor

  static Annotation None() { return {}; }
  static Annotation ParallelLoop() { return {Kind::kParallel, 0}; }
  static Annotation UnrollFull() { return {Kind::kUnrollFull, 0}; }
  static Annotation UnrollBy(int64_t f) { return {Kind::kUnrollFactor, f}; }
  bool operator==(const Annotation&) const = default;
};

struct LoopVar {
  std::string name;
  int64_t extent = 1;
  LoopKind kind = LoopKind::kSpatial;
  Annotation annotation;
  int axis = 0;  // index into Kernel::axes
  int part = 0;  // position among the loops derived from that axis
  bool operator==(const LoopVar&) const = default;
};

struct Term {
  std::string loop;
  int64_t coeff = 0;
  bool operator==(const Term&) const = default;
};

/// Affine index: sum of coeff * loop + constant. Terms are kept in loop order.
struct IndexExpr {
  std::vector<Term> terms;
  int64_t constant = 0;
  bool operator==(const IndexExpr&) const = default;
};

struct Access {
  std::string buffer;
  std::vector<IndexExpr> indices;
  bool operator==(const Access&) const = default;
};

struct Statement {
  Access output;
  std::vector<Access> inputs;
  bool operator==(const Statement&) const = default;
};

struct Kernel {
  std::string name;
  std::vector<BufferDecl> buffers;
  std::vector<Axis> axes;
  std::vector<LoopVar> loops;  // outermost first
  int init_level = 0;
  Statement statement;
  TransformSeq provenance;

  bool operator==(const Kernel&) const = default;

  const BufferDecl& Buffer(const std::string& buffer_name) const {
    for (const auto& b : buffers) {
      if (b.name == buffer_name) return b;
    }
    throw KernelError("unknown buffer: " + buffer_name);
  }

  const BufferDecl& OutputBuffer() const {
    for (const auto& b : buffers) {
      if (b.role == BufferRole::kOutput) return b;
    }
    throw KernelError("kernel has no output buffer");
  }

  int LoopIndex(const std::string& loop_name) const {
    for (size_t i = 0; i < loops.size(); ++i) {
      if (loops[i].name == loop_name) return static_cast<int>(i);
    }
    return -1;
  }

  /// Position of the first reduction loop, or loops.size() if there is none.
  /// This is the upper bound for init_level.
  int FirstReductionLoop() const {
    for (size_t i = 0; i < loops.size(); ++i) {
      if (loops[i].kind == LoopKind::kReduction) return static_cast<int>(i);
    }
    return static_cast<int>(loops.size());
  }

  /// Number of loops currently derived from original axis `axis`.
  int LoopsOfAxis(int axis) const {
    return static_cast<int>(
        std::count_if(loops.begin(), loops.end(), [&](const LoopVar& l) { return l.axis == axis; }));
  }

  int64_t TotalIterations() const {
    int64_t n = 1;
    for (const auto& l : loops) n *= l.extent;
    return n;
  }
};

namespace detail {

inline std::string JoinNames(const std::vector<std::string>& names) {
  std::string out;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

inline std::pair<int64_t, int64_t> IndexRange(const Kernel& k, const IndexExpr& e) {
  int64_t lo = e.constant;
  int64_t hi = e.constant;
  for (const auto& t : e.terms) {
    int idx = k.LoopIndex(t.loop);
    if (idx < 0) continue;
    int64_t span = t.coeff * (k.loops[idx].extent - 1);
    if (span >= 0) {
      hi += span;
    } else {
      lo += span;
    }
  }
  return {lo, hi};
}

}  // namespace detail

/// Returns every violated kernel invariant as a readable message; empty when
/// the kernel is well formed.
inline std::vector<std::string> InvariantViolations(const Kernel& k) {
  std::vector<std::string> out;
  auto fail = [&](std::string msg) { out.push_back(std::move(msg)); };

  std::set<std::string> buffer_names;
  int outputs = 0;
  for (const auto& b : k.buffers) {
    if (!buffer_names.insert(b.name).second) fail("duplicate buffer name " + b.name);
    if (b.shape.empty()) fail("buffer " + b.name + " has empty shape");
    for (int64_t e : b.shape) {
      if (e < 1) fail("buffer " + b.name + " has non-positive extent");
    }
    if (b.role == BufferRole::kOutput) ++outputs;
  }
  if (outputs != 1) fail("kernel must have exactly one output buffer");

  std::set<std::string> loop_names;
  for (const auto& l : k.loops) {
    if (!loop_names.insert(l.name).second) fail("duplicate loop name " + l.name);
    if (l.extent < 1) fail("loop " + l.name + " has non-positive extent");
    if (l.axis < 0 || l.axis >= static_cast<int>(k.axes.size())) {
      fail("loop " + l.name + " refers to unknown axis");
      continue;
    }
    if (l.kind != k.axes[l.axis].kind) fail("loop " + l.name + " kind differs from its axis");
    if (l.kind == LoopKind::kReduction && l.annotation.kind == Annotation::Kind::kParallel) {
      fail("reduction loop " + l.name + " is annotated parallel");
    }
    if (l.annotation.kind == Annotation::Kind::kUnrollFactor &&
        (l.annotation.factor < 1 || l.extent % l.annotation.factor != 0)) {
      fail("unroll factor of loop " + l.name + " does not divide its extent");
    }
  }

  // Perfect-split invariant.
  for (size_t a = 0; a < k.axes.size(); ++a) {
    int64_t product = 1;
    int count = 0;
    for (const auto& l : k.loops) {
      if (l.axis == static_cast<int>(a)) {
        product *= l.extent;
        ++count;
      }
    }
    if (count == 0) fail("axis " + k.axes[a].name + " has no loops");
    if (product != k.axes[a].extent) fail("loops of axis " + k.axes[a].name + " do not multiply to its extent");
  }

  int first_red = k.FirstReductionLoop();
  if (k.init_level < 0 || k.init_level > first_red) {
    fail("init_level " + std::to_string(k.init_level) + " outside [0, " + std::to_string(first_red) + "]");
  }

  auto check_access = [&](const Access& acc, bool is_output) {
    const BufferDecl* buf = nullptr;
    for (const auto& b : k.buffers) {
      if (b.name == acc.buffer) buf = &b;
    }
    if (buf == nullptr) {
      fail("access to unknown buffer " + acc.buffer);
      return;
    }
    if ((buf->role == BufferRole::kOutput) != is_output) fail("buffer " + acc.buffer + " used with wrong role");
    if (acc.indices.size() != buf->shape.size()) {
      fail("access to " + acc.buffer + " has wrong rank");
      return;
    }
    for (size_t d = 0; d < acc.indices.size(); ++d) {
      for (const auto& t : acc.indices[d].terms) {
        if (k.LoopIndex(t.loop) < 0) fail("index of " + acc.buffer + " refers to unknown loop " + t.loop);
      }
      auto [lo, hi] = detail::IndexRange(k, acc.indices[d]);
      if (lo < 0 || hi >= buf->shape[d]) {
        fail("index " + std::to_string(d) + " of " + acc.buffer + " may go out of bounds");
      }
    }
  };
  check_access(k.statement.output, true);
  if (k.statement.inputs.empty()) fail("statement has no inputs");
  for (const auto& in : k.statement.inputs) check_access(in, false);

  std::set<std::string> out_loops;
  for (const auto& e : k.statement.output.indices) {
    for (const auto& t : e.terms) {
      if (t.coeff != 0) out_loops.insert(t.loop);
    }
  }
  for (const auto& l : k.loops) {
    bool used = out_loops.count(l.name) > 0;
    if (l.kind == LoopKind::kSpatial && !used && l.extent > 1) {
      fail("spatial loop " + l.name + " is not covered by the output index");
    }
    if (l.kind == LoopKind::kReduction && used) fail("reduction loop " + l.name + " indexes the output");
  }
  return out;
}

inline void CheckInvariants(const Kernel& k) {
  auto v = InvariantViolations(k);
  if (!v.empty()) {
    std::string msg = "invalid kernel " + k.name + ":";
    for (const auto& s : v) msg += "\n  " + s;
    throw KernelError(msg);
  }
}

// ---------------------------------------------------------------------------
// Rendering. The text produced here is embedded verbatim in prompts and
// golden files, so the format must stay stable.
// ---------------------------------------------------------------------------

inline std::string RenderIndex(const IndexExpr& e) {
  std::ostringstream os;
  bool first = true;
  for (const auto& t : e.terms) {
    if (t.coeff == 0) continue;
    if (!first) os << " + ";
    first = false;
    os << t.loop;
    if (t.coeff != 1) os << " * " << t.coeff;
  }
  if (e.constant != 0 || first) {
    if (!first) os << " + ";
    os << e.constant;
  }
  return os.str();
}

inline std::string RenderAccess(const Access& a) {
  std::string out = a.buffer + "[";
  for (size_t i = 0; i < a.indices.size(); ++i) {
    if (i) out += ", ";
    out += RenderIndex(a.indices[i]);
  }
  return out + "]";
}

/// "for i, j, k in grid(2, 2, 2)"
inline std::string RenderGrid(const Kernel& k) {
  std::vector<std::string> names;
  std::vector<int64_t> extents;
  for (const auto& l : k.loops) {
    names.push_back(l.name);
    extents.push_back(l.extent);
  }
  std::string ext = JoinInts(extents);
  return "for " + detail::JoinNames(names) + " in grid(" + ext.substr(1, ext.size() - 2) + ")";
}

inline std::string RenderAnnotation(const LoopVar& l) {
  switch (l.annotation.kind) {
    case Annotation::Kind::kParallel:
      return l.name + "=parallel";
    case Annotation::Kind::kUnrollFull:
      return l.name + "=unroll(full)";
    case Annotation::Kind::kUnrollFactor:
      return l.name + "=unroll(" + std::to_string(l.annotation.factor) + ")";
    case Annotation::Kind::kNone:
      break;
  }
  return {};
}

inline std::string RenderAnnotations(const Kernel& k) {
  std::vector<std::string> parts;
  for (const auto& l : k.loops) {
    if (l.annotation.kind != Annotation::Kind::kNone) parts.push_back(RenderAnnotation(l));
  }
  return parts.empty() ? "none" : detail::JoinNames(parts);
}

inline std::string RenderInitLevel(const Kernel& k) {
  std::string out = std::to_string(k.init_level);
  if (k.init_level < static_cast<int>(k.loops.size())) {
    out += " (before " + k.loops[k.init_level].name + ")";
  } else {
    out += " (innermost)";
  }
  return out;
}

/// Expression of original axis `axis` in terms of its derived loops,
/// e.g. "j_0 * 512 + j_1 * 64 + j_2 * 64 + j_3".
inline std::string RenderAxisExpr(const Kernel& k, int axis) {
  IndexExpr e;
  int64_t stride = 1;
  std::vector<Term> rev;
  for (auto it = k.loops.rbegin(); it != k.loops.rend(); ++it) {
    if (it->axis != axis) continue;
    rev.push_back({it->name, stride});
    stride *= it->extent;
  }
  e.terms.assign(rev.rbegin(), rev.rend());
  return RenderIndex(e);
}

inline std::string Render(const Kernel& k) {
  std::ostringstream os;
  os << "kernel " << k.name << "\n";
  for (const auto& b : k.buffers) {
    std::string shape = JoinInts(b.shape);
    os << "  " << b.name << ": Buffer((" << shape.substr(1, shape.size() - 2) << "), "
       << (b.role == BufferRole::kOutput ? "output" : "input") << ")\n";
  }
  os << "axes: ";
  for (size_t i = 0; i < k.axes.size(); ++i) {
    if (i) os << ", ";
    os << k.axes[i].name << ":" << (k.axes[i].kind == LoopKind::kSpatial ? "S" : "R") << "("
       << k.axes[i].extent << ")";
  }
  os << "\n";
  os << RenderGrid(k) << ":\n";
  os << "  annotations: " << RenderAnnotations(k) << "\n";
  os << "  init at level " << RenderInitLevel(k) << ": " << RenderAccess(k.statement.output)
     << " = 0.0\n";
  os << "  " << RenderAccess(k.statement.output) << " +=";
  for (size_t i = 0; i < k.statement.inputs.size(); ++i) {
    os << (i ? " * " : " ") << RenderAccess(k.statement.inputs[i]);
  }
  os << "\n";
  return os.str();
}

/// "sample_perfect_tile(j, decision=[4, 8, 1, 64])" per TileSize in the trace.
inline std::string RenderTileDecisions(const Kernel& k) {
  std::vector<std::string> parts;
  for (const auto& t : k.provenance) {
    if (const auto* ts = std::get_if<TileSize>(&t)) {
      std::string axis = ts->axis >= 0 && ts->axis < static_cast<int>(k.axes.size())
                             ? k.axes[ts->axis].name
                             : std::to_string(ts->axis);
      parts.push_back("sample_perfect_tile(" + axis + ", decision=" + JoinInts(ts->factors) + ")");
    }
  }
  if (parts.empty()) return "none";
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) out += "; ";
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> IndexExamples(const Kernel& k) {
  std::vector<std::string> out;
  for (size_t a = 0; a < k.axes.size(); ++a) {
    if (k.LoopsOfAxis(static_cast<int>(a)) > 1) {
      out.push_back("v" + k.axes[a].name + " = " + RenderAxisExpr(k, static_cast<int>(a)));
    }
  }
  return out;
}

/// Summary of the structural differences between `current` and `ancestor`,
/// laid out as the "Loop shapes" and "Tile decisions" prompt sections.
inline std::string LoopShapeDiff(const Kernel& current, const Kernel& ancestor,
                                 const std::string& current_label = "Current",
                                 const std::string& ancestor_label = "Parent") {
  if (current.name != ancestor.name) {
    throw KernelError("loop_shape_diff: kernels derive from different roots (" + current.name + " vs " +
                      ancestor.name + ")");
  }
  std::string cur_tiles = RenderTileDecisions(current);
  std::string anc_tiles = RenderTileDecisions(ancestor);
  std::ostringstream os;
  if (Render(current) == Render(ancestor) && cur_tiles == anc_tiles) {
    os << "Loop shapes:\n";
    os << "No structural difference between " << current_label << " and " << ancestor_label << ": both "
       << RenderGrid(current) << "\n";
    return os.str();
  }

  auto shape_block = [&](const Kernel& k, const std::string& label) {
    os << label << ":\n" << RenderGrid(k) << "\n";
    auto examples = IndexExamples(k);
    if (examples.empty()) {
      os << "Index example: none (no tiled axes)\n";
    }
    for (const auto& e : examples) os << "Index example: " << e << "\n";
  };
  os << "Loop shapes:\n";
  shape_block(current, current_label);
  shape_block(ancestor, ancestor_label);
  os << "Annotations:\n";
  os << current_label << ": " << RenderAnnotations(current) << "\n";
  os << ancestor_label << ": " << RenderAnnotations(ancestor) << "\n";
  os << "Init level:\n";
  os << current_label << ": " << RenderInitLevel(current) << "\n";
  os << ancestor_label << ": " << RenderInitLevel(ancestor) << "\n";

  std::vector<std::string> changes;
  std::vector<int64_t> ce, ae;
  for (const auto& l : current.loops) ce.push_back(l.extent);
  for (const auto& l : ancestor.loops) ae.push_back(l.extent);
  changes.push_back(ce == ae ? "loop extents unchanged" : "loop extents changed");
  if (RenderAnnotations(current) != RenderAnnotations(ancestor)) changes.push_back("annotations changed");
  if (RenderInitLevel(current) != RenderInitLevel(ancestor)) changes.push_back("init level changed");
  os << "Summary: " << detail::JoinNames(changes) << "\n";
  os << "\n";
  os << "Tile decisions:\n";
  os << current_label << ": " << cur_tiles << "\n";
  os << ancestor_label << ": " << anc_tiles << "\n";
  return os.str();
}

}  // namespace mctune
