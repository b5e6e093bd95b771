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
 * \file prompt.hpp
 * \brief Prompt construction from a node's ancestor chain and parsing of the
 *  proposer's "Transformations to apply:" response line.
 *
 *  The current program is rendered in full; ancestors appear only through
 *  the loop-shape / tile-decision differences between consecutive entries.
 *  Output is a pure function of the context and is golden-file tested.
 */

#pragma once

#include <cctype>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mctune/kernel.hpp"
#include "mctune/transform_types.hpp"

namespace mctune {

inline constexpr std::string_view kResponsePrefix = "Transformations to apply:";

/// One program in the ancestor chain. Its trace is kernel.provenance.
struct ChainEntry {
  Kernel kernel;
  double cost = 0;
};

struct PromptContext {
  std::vector<ChainEntry> chain;   // current first, then parent, grandparent, ...
  std::vector<std::string> diffs;  // diffs[i] compares chain[i] with chain[i + 1]
  std::vector<std::string> available_transforms;
  std::vector<std::string> task_instructions;

  const Kernel& current() const { return chain.front().kernel; }
};

inline const std::vector<std::string>& DefaultTaskInstructions() {
  static const std::vector<std::string> steps = {
      "Compare the programs above with their costs and say which transformation explains each cost change.",
      "Check how each candidate next step combines with what is already applied; some pairs help each "
      "other and some cancel out.",
      "Propose a transformation list for this loop nest and its history. Names may repeat.",
      "Explain the choice in terms of concrete loops and the cost trend.",
  };
  return steps;
}

/// Label for position `i` of the chain.
inline std::string ChainLabel(size_t i) {
  static const char* labels[] = {"Current", "Parent", "Grandparent", "Great-grandparent"};
  if (i < 4) return labels[i];
  return "Ancestor-" + std::to_string(i);
}

/// Fills diffs, available transforms and instructions for `chain`.
inline PromptContext MakePromptContext(std::vector<ChainEntry> chain) {
  PromptContext ctx;
  ctx.chain = std::move(chain);
  for (size_t i = 0; i + 1 < ctx.chain.size(); ++i) {
    ctx.diffs.push_back(
        LoopShapeDiff(ctx.chain[i].kernel, ctx.chain[i + 1].kernel, ChainLabel(i), ChainLabel(i + 1)));
  }
  for (auto name : kTransformNames) ctx.available_transforms.emplace_back(name);
  ctx.task_instructions = DefaultTaskInstructions();
  return ctx;
}

inline std::string FormatCost(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::string BuildPrompt(const PromptContext& ctx) {
  std::ostringstream os;
  os << "Role: pick the next schedule transformations for a loop-nest program inside a tree\n"
        "search. Each program is listed with the transformations that produced it and its\n"
        "predicted cost from an analytic model; lower cost is better.\n\n";

  os << "Current program:\n" << Render(ctx.current()) << "\n";

  if (ctx.chain.size() == 1) {
    os << "No prior transformations: this is the unoptimized program.\n\n";
    os << "Loop shapes:\nCurrent:\n" << RenderGrid(ctx.current()) << "\n\n";
    os << "Tile decisions:\nCurrent: " << RenderTileDecisions(ctx.current()) << "\n\n";
  } else {
    os << "Ancestors shown:";
    for (size_t i = 1; i < ctx.chain.size(); ++i) {
      std::string label = ChainLabel(i);
      label[0] = static_cast<char>(std::tolower(label[0]));
      os << (i == 1 ? " " : ", ") << label;
    }
    os << ". Differences between consecutive programs:\n\n";
    for (size_t i = 0; i < ctx.diffs.size(); ++i) {
      os << "[" << ChainLabel(i) << " vs " << ChainLabel(i + 1) << "]\n" << ctx.diffs[i] << "\n";
    }
  }

  os << "Transformation history:\n";
  for (size_t i = 0; i < ctx.chain.size(); ++i) {
    os << ChainLabel(i) << ": " << ToString(ctx.chain[i].kernel.provenance) << "\n";
  }
  os << "\n";

  os << "Performance estimates:\n";
  for (size_t i = 0; i < ctx.chain.size(); ++i) {
    os << ChainLabel(i) << ": " << FormatCost(ctx.chain[i].cost) << "\n";
  }
  os << "\n";

  os << "Available transformations:\n";
  for (size_t i = 0; i < ctx.available_transforms.size(); ++i) {
    os << (i ? ", " : "") << ctx.available_transforms[i];
  }
  os << "\n\n";

  os << "Task\n";
  for (size_t i = 0; i < ctx.task_instructions.size(); ++i) {
    os << i + 1 << ". " << ctx.task_instructions[i] << "\n";
  }
  os << "Output the final suggested transformations in a single line starting with \"" << kResponsePrefix
     << "\"\n\n";
  os << "Format of that line:\n" << kResponsePrefix << " Parallel, TileSize\n";
  return os.str();
}

namespace detail {

inline std::string_view Trim(std::string_view s) {
  const char* ws = " \t\r\n\v\f";
  size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace detail

/// Extracts transform names from the last line starting with
/// "Transformations to apply:". A list that ends in a comma continues on the
/// next line (responses are sometimes hard-wrapped). Tokens are trimmed and
/// kept only on an exact, case-sensitive match with a registry name. Never
/// fails; an empty result means nothing usable was found.
inline std::vector<std::string> ParseResponse(std::string_view text) {
  auto lines = detail::SplitLines(text);
  int found = -1;
  for (size_t i = 0; i < lines.size(); ++i) {
    auto trimmed = detail::Trim(lines[i]);
    if (trimmed.substr(0, kResponsePrefix.size()) == kResponsePrefix) found = static_cast<int>(i);
  }
  if (found < 0) return {};

  auto first = detail::Trim(lines[found]);
  std::string rest(first.substr(kResponsePrefix.size()));
  for (size_t i = found + 1; i < lines.size(); ++i) {
    auto so_far = detail::Trim(rest);
    if (so_far.empty() || so_far.back() != ',') break;
    rest += " ";
    rest += lines[i];
  }

  std::vector<std::string> names;
  size_t start = 0;
  while (start <= rest.size()) {
    size_t comma = rest.find(',', start);
    std::string_view tok =
        detail::Trim(std::string_view(rest).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (TransformKindFromName(tok)) names.emplace_back(tok);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return names;
}

}  // namespace mctune
