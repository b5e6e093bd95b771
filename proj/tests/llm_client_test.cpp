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

#include <chrono>
#include <cstdlib>

#include <gtest/gtest.h>

#include "stub_server.hpp"
#include "test_util.hpp"

namespace mctune {
namespace {

using testing::StubConfig;
using testing::StubReply;
using testing::StubServer;

const char* kWrappedResponse = "Transformations to apply: TileSize, TileSize, Unroll, Parallel,\nTileSize";

TEST(LlmClient, ReturnsContentVerbatim) {
  StubServer server({{200, "hello there", 0}});
  LlmClient client(StubConfig(server));
  EXPECT_EQ(client.Complete("prompt text"), "hello there");
  EXPECT_EQ(client.last_attempts(), 1);
  auto body = nlohmann::json::parse(server.last_body());
  EXPECT_EQ(body["model"], "stub-model");
  EXPECT_EQ(body["temperature"], 0.7);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "prompt text");
  EXPECT_EQ(server.last_auth(), "Bearer test-key");
}

TEST(LlmClient, RetriesServerErrors) {
  StubServer server({{500, "", 0}, {500, "", 0}, {200, "ok", 0}});
  LlmClient client(StubConfig(server));
  EXPECT_EQ(client.Complete("p"), "ok");
  EXPECT_EQ(client.last_attempts(), 3);
  EXPECT_EQ(server.requests(), 3u);
}

TEST(LlmClient, ClientErrorIsFinal) {
  StubServer server({{401, "", 0}, {200, "never", 0}});
  LlmClient client(StubConfig(server));
  try {
    client.Complete("p");
    FAIL() << "expected LlmError";
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::kClient);
    EXPECT_EQ(e.status(), 401);
    EXPECT_EQ(e.attempts(), 1);
  }
  EXPECT_EQ(server.requests(), 1u);
}

TEST(LlmClient, RetriesExhausted) {
  StubServer server({{503, "", 0}});
  LlmClient client(StubConfig(server, /*max_retries=*/2));
  try {
    client.Complete("p");
    FAIL() << "expected LlmError";
  } catch (const LlmError& e) {
    EXPECT_EQ(e.kind(), LlmError::Kind::kTransport);
    EXPECT_EQ(e.attempts(), 3);
  }
  EXPECT_EQ(server.requests(), 3u);
}

TEST(LlmClient, BackoffGrowsExponentially) {
  StubServer server({{500, "", 0}, {500, "", 0}, {200, "ok", 0}});
  LlmConfig cfg = StubConfig(server);
  cfg.backoff_base_ms = 60;
  LlmClient client(cfg);
  auto start = std::chrono::steady_clock::now();
  client.Complete("p");
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  EXPECT_GE(ms, 60 + 120);
}

TEST(LlmClient, MissingKeyFailsAtConstruction) {
  unsetenv("MCTUNE_TEST_MISSING_KEY");
  LlmConfig cfg;
  cfg.api_key_env = "MCTUNE_TEST_MISSING_KEY";
  EXPECT_THROW(LlmClient{cfg}, ConfigError);
  EXPECT_THROW(LlmHttpProposer{cfg}, ConfigError);
}

TEST(LlmProposer, ParsesWrappedResponse) {
  StubServer server({{200, kWrappedResponse, 0}});
  LlmHttpProposer proposer(StubConfig(server));
  Kernel k = library::Make("deepseek-moe");
  Rng rng(1);
  auto p = proposer.Propose(MakePromptContext({{k, Estimate(k).value}}), rng);
  EXPECT_EQ(p.names, (std::vector<std::string>{"TileSize", "TileSize", "Unroll", "Parallel", "TileSize"}));
  EXPECT_FALSE(p.fallback);
  auto sent = nlohmann::json::parse(server.last_body())["messages"][0]["content"].get<std::string>();
  EXPECT_NE(sent.find("Available transformations:"), std::string::npos);
}

TEST(LlmProposer, TimeoutFallsBack) {
  StubServer server({{200, kWrappedResponse, 1500}});
  LlmHttpProposer proposer(StubConfig(server, /*max_retries=*/0, /*timeout_s=*/0.2));
  Kernel k = library::Make("tiny-deepseek-moe");
  Rng rng(1);
  auto p = proposer.Propose(MakePromptContext({{k, Estimate(k).value}}), rng);
  EXPECT_TRUE(p.fallback);
  EXPECT_EQ(p.names.size(), 1u);
  EXPECT_FALSE(p.error.empty());
}

TEST(LlmProposer, SearchSurvivesFailingEndpoint) {
  StubServer server({{500, "", 0}});
  LlmHttpProposer proposer(StubConfig(server, /*max_retries=*/1));
  SearchConfig cfg;
  cfg.budget = 6;
  auto r = Search(library::Make("tiny-flux-conv"), proposer, cfg);
  EXPECT_EQ(r.curve.size(), 6u);
  EXPECT_EQ(r.tree_stats.proposer_errors, 6);
  EXPECT_EQ(r.tree_stats.fallback_count, 6);
}

}  // namespace
}  // namespace mctune
