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
 * \file proposer.hpp
 * \brief Proposal engines used by the planner's expansion step.
 *
 *  Every proposer returns transform names only; parameters are sampled when
 *  the names are applied. Whenever a proposer yields no usable name, it falls
 *  back to one uniformly random name among the families that are legal on
 *  the current program, so a proposal is never empty.
 */

#pragma once

#include <iostream>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mctune/llm_client.hpp"
#include "mctune/prompt.hpp"
#include "mctune/random.hpp"
#include "mctune/transforms.hpp"

namespace mctune {

struct Proposal {
  std::vector<std::string> names;
  bool fallback = false;
  std::string error;  // set when the proposer itself failed (e.g. transport)
};

class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual Proposal Propose(const PromptContext& ctx, Rng& rng) = 0;
  virtual std::string Kind() const = 0;
};

/// One uniformly random family name among those legal on the current program.
/// Falls back to the whole registry if nothing is legal.
inline std::string RandomLegalName(const Kernel& k, Rng& rng, const TransformOptions& opts = {}) {
  auto kinds = LegalKinds(k, opts);
  if (kinds.empty()) return std::string(kTransformNames[UniformIndex(rng, kTransformNames.size())]);
  return std::string(TransformName(kinds[UniformIndex(rng, kinds.size())]));
}

inline Proposal WithFallback(std::vector<std::string> names, const PromptContext& ctx, Rng& rng,
                             std::string error = {}) {
  Proposal p;
  p.error = std::move(error);
  if (names.empty()) {
    p.names.push_back(RandomLegalName(ctx.current(), rng));
    p.fallback = true;
  } else {
    p.names = std::move(names);
  }
  return p;
}

/// Replays fixed response strings in order, cycling when exhausted. Ignores
/// the prompt context except for the fallback.
class ScriptedProposer : public Proposer {
 public:
  explicit ScriptedProposer(std::vector<std::string> responses) : responses_(std::move(responses)) {
    if (responses_.empty()) throw ConfigError("scripted proposer needs at least one response");
  }

  Proposal Propose(const PromptContext& ctx, Rng& rng) override {
    const std::string& text = responses_[cursor_];
    cursor_ = (cursor_ + 1) % responses_.size();
    return WithFallback(ParseResponse(text), ctx, rng);
  }

  std::string Kind() const override { return "scripted"; }

 private:
  std::vector<std::string> responses_;
  size_t cursor_ = 0;
};

/// Uniform sequence of 1..max_len registry names. Used for MCTS without
/// language-model guidance.
class RandomProposer : public Proposer {
 public:
  explicit RandomProposer(int max_len = 3) : max_len_(std::max(1, max_len)) {}

  Proposal Propose(const PromptContext& ctx, Rng& rng) override {
    auto len = static_cast<size_t>(UniformInt(rng, 1, max_len_));
    std::vector<std::string> names;
    for (size_t i = 0; i < len; ++i) {
      names.emplace_back(kTransformNames[UniformIndex(rng, kTransformNames.size())]);
    }
    return WithFallback(std::move(names), ctx, rng);
  }

  std::string Kind() const override { return "random"; }

 private:
  int max_len_;
};

/// Queries a chat-completions endpoint with the built prompt. Transport and
/// protocol failures never propagate: they produce a fallback proposal.
class LlmHttpProposer : public Proposer {
 public:
  explicit LlmHttpProposer(LlmConfig cfg) : client_(std::move(cfg)) {}

  Proposal Propose(const PromptContext& ctx, Rng& rng) override {
    std::string prompt = BuildPrompt(ctx);
    try {
      return WithFallback(ParseResponse(client_.Complete(prompt)), ctx, rng);
    } catch (const LlmError& e) {
      std::clog << "[mctune] warning: LLM proposer failed after " << e.attempts() << " attempt(s): " << e.what()
                << "; using fallback\n";
      return WithFallback({}, ctx, rng, e.what());
    }
  }

  std::string Kind() const override { return "llm"; }
  const LlmClient& client() const { return client_; }

 private:
  LlmClient client_;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ScriptedConfig {
  std::vector<std::string> responses;
};

struct RandomConfig {
  int max_len = 3;
};

using ProposerKind = std::variant<LlmConfig, ScriptedConfig, RandomConfig>;

inline std::unique_ptr<Proposer> MakeProposer(const ProposerKind& kind) {
  if (const auto* llm = std::get_if<LlmConfig>(&kind)) return std::make_unique<LlmHttpProposer>(*llm);
  if (const auto* s = std::get_if<ScriptedConfig>(&kind)) return std::make_unique<ScriptedProposer>(s->responses);
  return std::make_unique<RandomProposer>(std::get<RandomConfig>(kind).max_len);
}

/// {"kind": "llm" | "scripted" | "random", ...kind-specific fields}
inline ProposerKind ProposerKindFromJson(const nlohmann::json& j) {
  std::string kind = j.value("kind", "random");
  if (kind == "llm") return j.get<LlmConfig>();
  if (kind == "scripted") {
    return ScriptedConfig{j.value("responses", std::vector<std::string>{})};
  }
  if (kind == "random") return RandomConfig{j.value("max_len", 3)};
  throw ConfigError("unknown proposer kind: " + kind);
}

inline nlohmann::json ToJson(const ProposerKind& kind) {
  if (const auto* llm = std::get_if<LlmConfig>(&kind)) {
    nlohmann::json j = *llm;
    j["kind"] = "llm";
    return j;
  }
  if (const auto* s = std::get_if<ScriptedConfig>(&kind)) return {{"kind", "scripted"}, {"responses", s->responses}};
  return {{"kind", "random"}, {"max_len", std::get<RandomConfig>(kind).max_len}};
}

}  // namespace mctune
