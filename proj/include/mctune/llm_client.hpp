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
 * \file llm_client.hpp
 * \brief Minimal client for OpenAI-compatible chat-completions endpoints.
 *
 *  POST {endpoint}/chat/completions with
 *    {"model": ..., "temperature": ..., "messages": [{"role": "user", "content": prompt}]}
 *  and returns choices[0].message.content. 5xx responses and transport errors
 *  (including timeouts) are retried with exponential backoff; 4xx is final.
 */

#pragma once

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace mctune {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind { kClient, kTransport, kProtocol };

  LlmError(Kind kind, std::string msg, int status, int attempts)
      : std::runtime_error(std::move(msg)), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const { return kind_; }
  /// HTTP status of the last response, 0 when no response was received.
  int status() const { return status_; }
  int attempts() const { return attempts_; }

 private:
  Kind kind_;
  int status_;
  int attempts_;
};

struct LlmConfig {
  /// Base URL; the request goes to endpoint + "/chat/completions".
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  double temperature = 0.7;
  double timeout_s = 60.0;
  int max_retries = 3;
  std::string api_key_env = "LLM_API_KEY";
  int backoff_base_ms = 1000;
  double backoff_factor = 2.0;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LlmConfig, endpoint, model, temperature, timeout_s, max_retries,
                                                api_key_env, backoff_base_ms, backoff_factor)

class LlmClient {
 public:
  /// Reads the API key from the configured environment variable; a missing
  /// key is a ConfigError here rather than at call time.
  explicit LlmClient(LlmConfig cfg) : cfg_(std::move(cfg)) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + cfg_.api_key_env + " with the LLM API key is not set");
    }
    api_key_ = key;
    size_t scheme = cfg_.endpoint.find("://");
    size_t path = cfg_.endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    host_ = cfg_.endpoint.substr(0, path);
    base_path_ = path == std::string::npos ? "" : cfg_.endpoint.substr(path);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }

  const LlmConfig& config() const { return cfg_; }
  /// Attempts used by the most recent Complete() call.
  int last_attempts() const { return last_attempts_; }

  std::string Complete(const std::string& prompt) {
    nlohmann::json body = {
        {"model", cfg_.model},
        {"temperature", cfg_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    const std::string payload = body.dump();
    const std::string path = base_path_ + "/chat/completions";
    const auto timeout = std::chrono::microseconds(static_cast<int64_t>(cfg_.timeout_s * 1e6));

    const int max_attempts = 1 + std::max(0, cfg_.max_retries);
    std::string last_error;
    int last_status = 0;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      last_attempts_ = attempt;
      if (attempt > 1) {
        double delay = cfg_.backoff_base_ms * std::pow(cfg_.backoff_factor, attempt - 2);
        std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<int64_t>(delay)));
      }
      httplib::Client cli(host_);
      cli.set_connection_timeout(timeout);
      cli.set_read_timeout(timeout);
      cli.set_write_timeout(timeout);
      httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
      auto res = cli.Post(path, headers, payload, "application/json");
      if (!res) {
        last_status = 0;
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status >= 500) {
        last_error = "server error " + std::to_string(res->status);
        continue;
      }
      if (res->status >= 400) {
        throw LlmError(LlmError::Kind::kClient, "request rejected with status " + std::to_string(res->status),
                       res->status, attempt);
      }
      try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw LlmError(LlmError::Kind::kProtocol, std::string("malformed completion response: ") + e.what(),
                       res->status, attempt);
      }
    }
    throw LlmError(LlmError::Kind::kTransport, "retries exhausted: " + last_error, last_status, max_attempts);
  }

 private:
  LlmConfig cfg_;
  std::string api_key_;
  std::string host_;
  std::string base_path_;
  int last_attempts_ = 0;
};

}  // namespace mctune
