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

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace mctune {

/// Schedule transformation families. The string names are the contract
/// shared with proposer response parsing and are case-sensitive.
enum class TransformKind { kTileSize, kParallel, kComputeLocation, kUnroll };

inline constexpr std::array<TransformKind, 4> kAllTransformKinds = {
    TransformKind::kTileSize, TransformKind::kParallel, TransformKind::kComputeLocation,
    TransformKind::kUnroll};

inline constexpr std::array<std::string_view, 4> kTransformNames = {"TileSize", "Parallel",
                                                                    "ComputeLocation", "Unroll"};

inline std::string_view TransformName(TransformKind kind) {
  return kTransformNames[static_cast<size_t>(kind)];
}

inline std::optional<TransformKind> TransformKindFromName(std::string_view name) {
  for (size_t i = 0; i < kTransformNames.size(); ++i) {
    if (kTransformNames[i] == name) return kAllTransformKinds[i];
  }
  return std::nullopt;
}

/// Split an original (never tiled) axis into `factors.size()` nested loops,
/// outermost first. The product of factors must equal the axis extent.
struct TileSize {
  int axis = 0;
  std::vector<int64_t> factors;
  bool operator==(const TileSize&) const = default;
};

/// Mark the loop at position `loop` as parallel. Spatial loops only.
struct Parallel {
  int loop = 0;
  bool operator==(const Parallel&) const = default;
};

/// Unroll the loop at position `loop`; nullopt factor means full unroll.
struct Unroll {
  int loop = 0;
  std::optional<int64_t> factor;
  bool operator==(const Unroll&) const = default;
};

/// Move the accumulator initialization to just before loop `level`.
struct ComputeLocation {
  int level = 0;
  bool operator==(const ComputeLocation&) const = default;
};

using Transform = std::variant<TileSize, Parallel, ComputeLocation, Unroll>;
using TransformSeq = std::vector<Transform>;

inline TransformKind KindOf(const Transform& t) {
  return static_cast<TransformKind>(t.index());
}

inline std::string JoinInts(const std::vector<int64_t>& values) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << values[i];
  }
  os << "]";
  return os.str();
}

/// Human-readable form, e.g. "TileSize(axis=2, [4, 8, 1, 64])".
inline std::string ToString(const Transform& t) {
  std::ostringstream os;
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TileSize>) {
          os << "TileSize(axis=" << m.axis << ", " << JoinInts(m.factors) << ")";
        } else if constexpr (std::is_same_v<T, Parallel>) {
          os << "Parallel(loop=" << m.loop << ")";
        } else if constexpr (std::is_same_v<T, Unroll>) {
          os << "Unroll(loop=" << m.loop << ", ";
          if (m.factor) {
            os << "factor=" << *m.factor;
          } else {
            os << "full";
          }
          os << ")";
        } else {
          os << "ComputeLocation(level=" << m.level << ")";
        }
      },
      t);
  return os.str();
}

inline std::string ToString(const TransformSeq& seq) {
  if (seq.empty()) return "(none)";
  std::string out;
  for (size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ", ";
    out += ToString(seq[i]);
  }
  return out;
}

// JSON form used for replayable traces and result files.

inline nlohmann::json ToJson(const Transform& t) {
  nlohmann::json j;
  j["kind"] = std::string(TransformName(KindOf(t)));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, TileSize>) {
          j["axis"] = m.axis;
          j["factors"] = m.factors;
        } else if constexpr (std::is_same_v<T, Parallel>) {
          j["loop"] = m.loop;
        } else if constexpr (std::is_same_v<T, Unroll>) {
          j["loop"] = m.loop;
          if (m.factor) {
            j["factor"] = *m.factor;
          } else {
            j["factor"] = "full";
          }
        } else {
          j["level"] = m.level;
        }
      },
      t);
  return j;
}

inline nlohmann::json ToJson(const TransformSeq& seq) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : seq) arr.push_back(ToJson(t));
  return arr;
}

inline Transform TransformFromJson(const nlohmann::json& j) {
  auto kind = TransformKindFromName(j.at("kind").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown transform kind: " + j.at("kind").dump());
  switch (*kind) {
    case TransformKind::kTileSize:
      return TileSize{j.at("axis").get<int>(), j.at("factors").get<std::vector<int64_t>>()};
    case TransformKind::kParallel:
      return Parallel{j.at("loop").get<int>()};
    case TransformKind::kUnroll: {
      Unroll u{j.at("loop").get<int>(), std::nullopt};
      const auto& f = j.at("factor");
      if (!f.is_string()) u.factor = f.get<int64_t>();
      return u;
    }
    case TransformKind::kComputeLocation:
      return ComputeLocation{j.at("level").get<int>()};
  }
  throw std::logic_error("unreachable");
}

inline TransformSeq TransformSeqFromJson(const nlohmann::json& j) {
  TransformSeq seq;
  for (const auto& e : j) seq.push_back(TransformFromJson(e));
  return seq;
}

}  // namespace mctune
