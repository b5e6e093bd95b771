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
 * \file transforms.hpp
 * \brief The schedule transformation set {TileSize, Parallel, ComputeLocation,
 *  Unroll}: legality, application, enumeration and seeded sampling.
 *
 *  Transforms are pure functions Kernel -> Kernel. TileSize only applies to an
 *  original axis that has not been tiled yet, which keeps the perfect-split
 *  invariant checkable through axis lineage.
 */

#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mctune/kernel.hpp"
#include "mctune/random.hpp"

namespace mctune {

class IllegalTransform : public std::runtime_error {
 public:
  IllegalTransform(std::string reason, int index = -1)
      : std::runtime_error(index < 0 ? reason : "transform " + std::to_string(index) + ": " + reason),
        reason_(std::move(reason)),
        index_(index) {}

  const std::string& reason() const { return reason_; }
  /// Position in the sequence for apply_seq errors, -1 for a single apply.
  int index() const { return index_; }

 private:
  std::string reason_;
  int index_;
};

struct TransformOptions {
  int num_factors = 4;
  /// Full unroll is only legal up to this extent.
  int64_t max_full_unroll = 64;
  /// Largest by-factor unroll offered by enumeration and sampling.
  int64_t max_unroll_factor = 64;
};

// ---------------------------------------------------------------------------
// Perfect tiles
// ---------------------------------------------------------------------------

/// All ordered ways to write `extent` as a product of `num_factors` positive
/// integers.
inline std::vector<std::vector<int64_t>> EnumerateDecompositions(int64_t extent, int num_factors) {
  std::vector<std::vector<int64_t>> out;
  std::vector<int64_t> cur;
  auto rec = [&](auto&& self, int64_t remaining, int left) -> void {
    if (left == 1) {
      cur.push_back(remaining);
      out.push_back(cur);
      cur.pop_back();
      return;
    }
    for (int64_t d = 1; d <= remaining; ++d) {
      if (remaining % d != 0) continue;
      cur.push_back(d);
      self(self, remaining / d, left - 1);
      cur.pop_back();
    }
  };
  if (num_factors >= 1 && extent >= 1) rec(rec, extent, num_factors);
  return out;
}

/// Draws uniformly from all ordered decompositions of `extent` into
/// `num_factors` factors. The decomposition is the independent choice, per
/// prime p^a, of how the a copies of p are spread over the factors, so a
/// uniform composition per prime gives a uniform decomposition overall.
inline std::vector<int64_t> SamplePerfectTile(int64_t extent, int num_factors, Rng& rng) {
  if (extent < 1 || num_factors < 1) throw std::invalid_argument("sample_perfect_tile: bad arguments");
  std::vector<int64_t> factors(static_cast<size_t>(num_factors), 1);
  int64_t rest = extent;
  for (int64_t p = 2; p * p <= rest || rest > 1; ++p) {
    if (p * p > rest) p = rest;
    int a = 0;
    while (rest % p == 0) {
      rest /= p;
      ++a;
    }
    if (a == 0) continue;
    // Stars and bars: choose num_factors-1 bar slots among a+num_factors-1.
    int slots = a + num_factors - 1;
    std::vector<int> pos(static_cast<size_t>(slots));
    for (int i = 0; i < slots; ++i) pos[i] = i;
    for (int i = 0; i < num_factors - 1; ++i) {
      size_t j = static_cast<size_t>(i) + UniformIndex(rng, static_cast<size_t>(slots - i));
      std::swap(pos[i], pos[j]);
    }
    std::vector<int> bars(pos.begin(), pos.begin() + (num_factors - 1));
    std::sort(bars.begin(), bars.end());
    int prev = -1;
    for (int f = 0; f < num_factors; ++f) {
      int next = f < num_factors - 1 ? bars[f] : slots;
      int count = next - prev - 1;
      for (int c = 0; c < count; ++c) factors[f] *= p;
      prev = next;
    }
  }
  return factors;
}

// ---------------------------------------------------------------------------
// Legality and application
// ---------------------------------------------------------------------------

inline bool AxisAlreadyTiled(const Kernel& k, int axis) {
  for (const auto& t : k.provenance) {
    if (const auto* ts = std::get_if<TileSize>(&t); ts && ts->axis == axis) return true;
  }
  return k.LoopsOfAxis(axis) != 1;
}

namespace detail {

inline Kernel ApplyTile(const Kernel& k, const TileSize& m) {
  if (m.axis < 0 || m.axis >= static_cast<int>(k.axes.size())) throw IllegalTransform("TileSize: no such axis");
  if (AxisAlreadyTiled(k, m.axis)) {
    throw IllegalTransform("TileSize: axis " + k.axes[m.axis].name + " was already tiled");
  }
  if (m.factors.empty()) throw IllegalTransform("TileSize: empty factor list");
  int64_t product = 1;
  for (int64_t f : m.factors) {
    if (f < 1) throw IllegalTransform("TileSize: non-positive factor");
    product *= f;
  }
  const Axis& axis = k.axes[m.axis];
  if (product != axis.extent) {
    throw IllegalTransform("TileSize: factors " + JoinInts(m.factors) + " do not divide extent " +
                           std::to_string(axis.extent) + " exactly");
  }
  int pos = -1;
  for (size_t i = 0; i < k.loops.size(); ++i) {
    if (k.loops[i].axis == m.axis) pos = static_cast<int>(i);
  }
  const LoopVar old = k.loops[pos];

  Kernel out = k;
  std::vector<LoopVar> parts;
  std::vector<int64_t> strides(m.factors.size(), 1);
  for (size_t i = m.factors.size() - 1; i-- > 0;) strides[i] = strides[i + 1] * m.factors[i + 1];
  for (size_t i = 0; i < m.factors.size(); ++i) {
    parts.push_back(LoopVar{axis.name + "_" + std::to_string(i), m.factors[i], old.kind, Annotation::None(),
                            m.axis, static_cast<int>(i)});
  }
  out.loops.erase(out.loops.begin() + pos);
  out.loops.insert(out.loops.begin() + pos, parts.begin(), parts.end());

  auto rewrite = [&](Access& acc) {
    for (auto& e : acc.indices) {
      std::vector<Term> terms;
      for (const auto& t : e.terms) {
        if (t.loop != old.name) {
          terms.push_back(t);
          continue;
        }
        for (size_t i = 0; i < parts.size(); ++i) terms.push_back(Term{parts[i].name, t.coeff * strides[i]});
      }
      e.terms = std::move(terms);
    }
  };
  rewrite(out.statement.output);
  for (auto& in : out.statement.inputs) rewrite(in);

  if (pos < out.init_level) out.init_level += static_cast<int>(parts.size()) - 1;
  return out;
}

inline const LoopVar& CheckedLoop(const Kernel& k, int loop, const char* what) {
  if (loop < 0 || loop >= static_cast<int>(k.loops.size())) {
    throw IllegalTransform(std::string(what) + ": no loop at position " + std::to_string(loop));
  }
  return k.loops[loop];
}

}  // namespace detail

/// Applies one transform. Legality is always re-checked; the result satisfies
/// every kernel invariant and carries the transform in its provenance.
inline Kernel Apply(const Kernel& k, const Transform& m, const TransformOptions& opts = {}) {
  Kernel out = std::visit(
      [&](const auto& t) -> Kernel {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TileSize>) {
          return detail::ApplyTile(k, t);
        } else if constexpr (std::is_same_v<T, Parallel>) {
          const LoopVar& l = detail::CheckedLoop(k, t.loop, "Parallel");
          if (l.kind != LoopKind::kSpatial) {
            throw IllegalTransform("Parallel: wrong loop kind, " + l.name + " is a reduction loop");
          }
          Kernel r = k;
          r.loops[t.loop].annotation = Annotation::ParallelLoop();
          return r;
        } else if constexpr (std::is_same_v<T, Unroll>) {
          const LoopVar& l = detail::CheckedLoop(k, t.loop, "Unroll");
          Kernel r = k;
          if (!t.factor) {
            if (l.extent > opts.max_full_unroll) {
              throw IllegalTransform("Unroll: full unroll of " + l.name + " (extent " + std::to_string(l.extent) +
                                     ") exceeds " + std::to_string(opts.max_full_unroll));
            }
            r.loops[t.loop].annotation = Annotation::UnrollFull();
          } else {
            if (*t.factor < 1 || l.extent % *t.factor != 0) {
              throw IllegalTransform("Unroll: non-dividing factor " + std::to_string(*t.factor) + " for " + l.name);
            }
            r.loops[t.loop].annotation = Annotation::UnrollBy(*t.factor);
          }
          return r;
        } else {
          int bound = k.FirstReductionLoop();
          if (t.level < 0 || t.level > bound) {
            throw IllegalTransform("ComputeLocation: dominance violation, level " + std::to_string(t.level) +
                                   " not in [0, " + std::to_string(bound) + "]");
          }
          Kernel r = k;
          r.init_level = t.level;
          return r;
        }
      },
      m);
  out.provenance.push_back(m);
  return out;
}

/// Left fold of Apply. The thrown IllegalTransform carries the index of the
/// first failing element.
inline Kernel ApplySeq(const Kernel& k, const TransformSeq& seq, const TransformOptions& opts = {}) {
  Kernel cur = k;
  for (size_t i = 0; i < seq.size(); ++i) {
    try {
      cur = Apply(cur, seq[i], opts);
    } catch (const IllegalTransform& e) {
      throw IllegalTransform(e.reason(), static_cast<int>(i));
    }
  }
  return cur;
}

/// Like ApplySeq but skips illegal elements. Returns the kernel and the
/// transforms that were actually applied.
inline std::pair<Kernel, TransformSeq> ApplySeqLenient(const Kernel& k, const TransformSeq& seq,
                                                       const TransformOptions& opts = {}) {
  Kernel cur = k;
  TransformSeq applied;
  for (const auto& m : seq) {
    try {
      cur = Apply(cur, m, opts);
      applied.push_back(m);
    } catch (const IllegalTransform&) {
    }
  }
  return {std::move(cur), std::move(applied)};
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// One transform family applied to one target, with its parameter domain.
struct TransformTemplate {
  TransformKind kind = TransformKind::kTileSize;
  int target = -1;  // axis for TileSize, loop for Parallel/Unroll, -1 for ComputeLocation
  std::vector<std::vector<int64_t>> tile_factors;
  bool unroll_full = false;
  std::vector<int64_t> unroll_factors;
  std::vector<int> levels;
};

namespace detail {

inline std::vector<int> TileableAxes(const Kernel& k) {
  std::vector<int> out;
  for (size_t a = 0; a < k.axes.size(); ++a) {
    if (k.axes[a].extent > 1 && !AxisAlreadyTiled(k, static_cast<int>(a))) out.push_back(static_cast<int>(a));
  }
  return out;
}

inline std::vector<int> ParallelLoops(const Kernel& k) {
  std::vector<int> out;
  for (size_t i = 0; i < k.loops.size(); ++i) {
    if (k.loops[i].kind == LoopKind::kSpatial && k.loops[i].extent > 1) out.push_back(static_cast<int>(i));
  }
  return out;
}

inline std::vector<int> UnrollLoops(const Kernel& k) {
  std::vector<int> out;
  for (size_t i = 0; i < k.loops.size(); ++i) {
    if (k.loops[i].extent > 1) out.push_back(static_cast<int>(i));
  }
  return out;
}

/// Unroll modes for a loop; nullopt stands for full unroll.
inline std::vector<std::optional<int64_t>> UnrollModes(const LoopVar& l, const TransformOptions& opts) {
  std::vector<std::optional<int64_t>> modes;
  if (l.extent <= opts.max_full_unroll) modes.push_back(std::nullopt);
  for (int64_t d = 2; d < l.extent && d <= opts.max_unroll_factor; ++d) {
    if (l.extent % d == 0) modes.push_back(d);
  }
  return modes;
}

inline std::vector<int> ComputeLevels(const Kernel& k) {
  std::vector<int> out;
  for (int lv = 0; lv <= k.FirstReductionLoop(); ++lv) {
    if (lv != k.init_level) out.push_back(lv);
  }
  return out;
}

}  // namespace detail

/// Every applicable (family, target) pair with its parameter domain. No-op
/// instances (extent-1 loops, the current init level) are left out.
inline std::vector<TransformTemplate> LegalTransforms(const Kernel& k, const TransformOptions& opts = {}) {
  std::vector<TransformTemplate> out;
  for (int a : detail::TileableAxes(k)) {
    TransformTemplate t;
    t.kind = TransformKind::kTileSize;
    t.target = a;
    t.tile_factors = EnumerateDecompositions(k.axes[a].extent, opts.num_factors);
    out.push_back(std::move(t));
  }
  for (int l : detail::ParallelLoops(k)) {
    TransformTemplate t;
    t.kind = TransformKind::kParallel;
    t.target = l;
    out.push_back(std::move(t));
  }
  auto levels = detail::ComputeLevels(k);
  if (!levels.empty()) {
    TransformTemplate t;
    t.kind = TransformKind::kComputeLocation;
    t.levels = std::move(levels);
    out.push_back(std::move(t));
  }
  for (int l : detail::UnrollLoops(k)) {
    TransformTemplate t;
    t.kind = TransformKind::kUnroll;
    t.target = l;
    for (const auto& mode : detail::UnrollModes(k.loops[l], opts)) {
      if (mode) {
        t.unroll_factors.push_back(*mode);
      } else {
        t.unroll_full = true;
      }
    }
    if (t.unroll_full || !t.unroll_factors.empty()) out.push_back(std::move(t));
  }
  return out;
}

/// Expands LegalTransforms into concrete instances.
inline std::vector<Transform> EnumerateInstances(const Kernel& k, const TransformOptions& opts = {}) {
  std::vector<Transform> out;
  for (const auto& t : LegalTransforms(k, opts)) {
    switch (t.kind) {
      case TransformKind::kTileSize:
        for (const auto& f : t.tile_factors) out.push_back(TileSize{t.target, f});
        break;
      case TransformKind::kParallel:
        out.push_back(Parallel{t.target});
        break;
      case TransformKind::kComputeLocation:
        for (int lv : t.levels) out.push_back(ComputeLocation{lv});
        break;
      case TransformKind::kUnroll:
        if (t.unroll_full) out.push_back(Unroll{t.target, std::nullopt});
        for (int64_t f : t.unroll_factors) out.push_back(Unroll{t.target, f});
        break;
    }
  }
  return out;
}

/// Families that have at least one legal instance on `k`.
inline std::vector<TransformKind> LegalKinds(const Kernel& k, const TransformOptions& opts = {}) {
  std::vector<TransformKind> out;
  if (!detail::TileableAxes(k).empty()) out.push_back(TransformKind::kTileSize);
  if (!detail::ParallelLoops(k).empty()) out.push_back(TransformKind::kParallel);
  if (!detail::ComputeLevels(k).empty()) out.push_back(TransformKind::kComputeLocation);
  for (int l : detail::UnrollLoops(k)) {
    if (!detail::UnrollModes(k.loops[l], opts).empty()) {
      out.push_back(TransformKind::kUnroll);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draws parameters for a transform of family `kind` from its legal domain on
/// `k`: a uniform target, then uniform parameters for that target. Returns
/// nullopt when the family has no legal instance.
inline std::optional<Transform> SampleInstance(const Kernel& k, TransformKind kind, Rng& rng,
                                               const TransformOptions& opts = {}) {
  switch (kind) {
    case TransformKind::kTileSize: {
      auto axes = detail::TileableAxes(k);
      if (axes.empty()) return std::nullopt;
      int a = axes[UniformIndex(rng, axes.size())];
      return TileSize{a, SamplePerfectTile(k.axes[a].extent, opts.num_factors, rng)};
    }
    case TransformKind::kParallel: {
      auto loops = detail::ParallelLoops(k);
      if (loops.empty()) return std::nullopt;
      return Parallel{loops[UniformIndex(rng, loops.size())]};
    }
    case TransformKind::kComputeLocation: {
      auto levels = detail::ComputeLevels(k);
      if (levels.empty()) return std::nullopt;
      return ComputeLocation{levels[UniformIndex(rng, levels.size())]};
    }
    case TransformKind::kUnroll: {
      std::vector<int> loops;
      for (int l : detail::UnrollLoops(k)) {
        if (!detail::UnrollModes(k.loops[l], opts).empty()) loops.push_back(l);
      }
      if (loops.empty()) return std::nullopt;
      int l = loops[UniformIndex(rng, loops.size())];
      auto modes = detail::UnrollModes(k.loops[l], opts);
      return Unroll{l, modes[UniformIndex(rng, modes.size())]};
    }
  }
  return std::nullopt;
}

/// A random legal transform: uniform over the families that have a legal
/// instance, then SampleInstance.
inline std::optional<Transform> RandomLegalTransform(const Kernel& k, Rng& rng, const TransformOptions& opts = {}) {
  auto kinds = LegalKinds(k, opts);
  if (kinds.empty()) return std::nullopt;
  return SampleInstance(k, kinds[UniformIndex(rng, kinds.size())], rng, opts);
}

}  // namespace mctune
