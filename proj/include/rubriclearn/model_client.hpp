// Copyright 2026 The rubriclearn Authors.
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

#ifndef RUBRICLEARN_MODEL_CLIENT_HPP
#define RUBRICLEARN_MODEL_CLIENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "rubriclearn/error.hpp"

namespace rubriclearn {

enum class Role { system, user, assistant };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  // Falls back to the backend's configured temperature when unset.
  std::optional<double> temperature;

  static ChatRequest user(std::string content) {
    ChatRequest r;
    r.messages.push_back({Role::user, std::move(content)});
    return r;
  }

  void validate() const {
    if (std::none_of(messages.begin(), messages.end(), [](const ChatMessage& m) { return m.role == Role::user; }))
      throw Error(ErrorKind::input, "chat request needs at least one user message");
  }

  /// All message contents joined; what mocks match keywords against.
  std::string joined() const {
    std::string out;
    for (const auto& m : messages) {
      if (!out.empty()) out += "\n";
      out += m.content;
    }
    return out;
  }
};

struct ChatUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long total_tokens = 0;
};

struct ChatResponse {
  std::string content;  // may be empty
  ChatUsage usage;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
};

class EmbedBackend {
 public:
  virtual ~EmbedBackend() = default;
  /// One unit vector per input, in input order.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string model_name() const = 0;
};

struct BackendConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string model_name = "Qwen3-32B";
  std::string api_key_env = "RUBRIC_API_KEY";  // empty: send no auth header
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  double temperature = 0.7;
  std::chrono::milliseconds backoff_base{1000};
  double backoff_factor = 2.0;
  std::size_t embed_batch_size = 64;
  std::size_t max_connections = 8;

  void validate() const {
    if (max_retries < 0 || max_retries > 5) throw Error(ErrorKind::config, "max_retries must lie in [0, 5]");
    if (timeout.count() <= 0) throw Error(ErrorKind::config, "timeout must be positive");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw Error(ErrorKind::config, "temperature must lie in [0, 2]");
    if (embed_batch_size < 1 || embed_batch_size > 64)
      throw Error(ErrorKind::config, "embed batch size must lie in [1, 64]");
    if (max_connections < 1) throw Error(ErrorKind::config, "max_connections must be at least 1");
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
      throw Error(ErrorKind::config, "base_url must start with http:// or https://, got '" + base_url + "'");
  }
};

namespace detail {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash, possibly empty
};

inline ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::config, "invalid base_url '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) out.prefix = url.substr(path_start);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

inline std::vector<double> unit_normalized(std::vector<double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorKind::protocol, "embedding contains non-finite values");
    sq += x * x;
  }
  if (!(sq > 0.0)) throw Error(ErrorKind::protocol, "embedding has zero norm");
  const double inv = 1.0 / std::sqrt(sq);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace detail

/// OpenAI-compatible chat and embedding client. Retries 429, 5xx and
/// connection failures with jittered exponential backoff; 401/403 fail fast.
class HttpBackend : public ChatBackend, public EmbedBackend {
 public:
  explicit HttpBackend(BackendConfig config)
      : config_(std::move(config)),
        url_(detail::parse_base_url(config_.base_url)),
        slots_(static_cast<std::ptrdiff_t>(std::min<std::size_t>(config_.max_connections, 1024))),
        rng_(std::random_device{}()) {
    config_.validate();
  }

  const BackendConfig& config() const { return config_; }
  std::string model_name() const override { return config_.model_name; }

  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    nlohmann::json body;
    body["model"] = config_.model_name;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    body["temperature"] = request.temperature.value_or(config_.temperature);

    const auto reply = post("/chat/completions", body.dump());
    try {
      const auto& choice = reply.at("choices").at(0);
      const auto& content = choice.at("message").at("content");
      ChatResponse out;
      out.content = content.is_null() ? std::string() : content.get<std::string>();
      if (auto it = reply.find("usage"); it != reply.end() && it->is_object()) {
        out.usage.prompt_tokens = it->value("prompt_tokens", 0L);
        out.usage.completion_tokens = it->value("completion_tokens", 0L);
        out.usage.total_tokens = it->value("total_tokens", 0L);
      }
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::protocol, std::string("unexpected chat completion body: ") + e.what());
    }
  }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (texts.empty()) throw Error(ErrorKind::input, "embed needs at least one text");
    for (const auto& t : texts)
      if (t.empty()) throw Error(ErrorKind::input, "embed inputs must be non-empty");

    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.embed_batch_size) {
      const auto end = std::min(texts.size(), start + config_.embed_batch_size);
      nlohmann::json body;
      body["model"] = config_.model_name;
      body["input"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                               texts.begin() + static_cast<std::ptrdiff_t>(end));
      const auto reply = post("/embeddings", body.dump());
      try {
        const auto& data = reply.at("data");
        if (!data.is_array() || data.size() != end - start)
          throw Error(ErrorKind::protocol, "embedding response has " + std::to_string(data.size()) + " items, expected " +
                                               std::to_string(end - start));
        std::vector<std::vector<double>> chunk(end - start);
        for (std::size_t i = 0; i < data.size(); ++i) {
          const auto& item = data[i];
          const std::size_t slot = item.contains("index") ? item.at("index").get<std::size_t>() : i;
          if (slot >= chunk.size() || !chunk[slot].empty())
            throw Error(ErrorKind::protocol, "embedding response has a bad or repeated index");
          chunk[slot] = detail::unit_normalized(item.at("embedding").get<std::vector<double>>());
        }
        for (auto& v : chunk) out.push_back(std::move(v));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::protocol, std::string("unexpected embeddings body: ") + e.what());
      }
    }
    return out;
  }

  /// Remote attempts made so far, across all calls.
  long attempts() const { return attempts_.load(); }

 private:
  std::string resolve_key() const {
    if (config_.api_key_env.empty()) return {};
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw Error(ErrorKind::config, "environment variable " + config_.api_key_env + " is not set");
    return key;
  }

  std::chrono::milliseconds backoff_delay(int retry) {
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    double scale;
    {
      std::lock_guard lock(rng_mutex_);
      scale = jitter(rng_);
    }
    const double ms = static_cast<double>(config_.backoff_base.count()) * std::pow(config_.backoff_factor, retry) * scale;
    return std::chrono::milliseconds(static_cast<long long>(ms));
  }

  nlohmann::json post(const std::string& endpoint, const std::string& body) {
    const auto key = resolve_key();
    httplib::Headers headers;
    if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    std::string last_failure;

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(backoff_delay(attempt - 1));
      httplib::Result res{nullptr, httplib::Error::Unknown};
      {
        slots_.acquire();
        struct Release {
          std::counting_semaphore<1024>& s;
          ~Release() { s.release(); }
        } release{slots_};
        httplib::Client client(url_.origin);
        client.set_connection_timeout(secs.count(), static_cast<long>(usecs.count()));
        client.set_read_timeout(secs.count(), static_cast<long>(usecs.count()));
        client.set_write_timeout(secs.count(), static_cast<long>(usecs.count()));
        ++attempts_;
        res = client.Post(url_.prefix + endpoint, headers, body, "application/json");
      }
      if (!res) {
        last_failure = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      const int status = res->status;
      if (status == 401 || status == 403)
        throw Error(ErrorKind::config, "authentication rejected by " + config_.base_url + " (HTTP " +
                                           std::to_string(status) + ")");
      if (status == 429 || status >= 500) {
        last_failure = "HTTP " + std::to_string(status);
        continue;
      }
      if (status < 200 || status >= 300)
        throw Error(ErrorKind::transport, "HTTP " + std::to_string(status) + " from " + endpoint + ": " +
                                              res->body.substr(0, 200));
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::protocol, std::string("response body is not JSON: ") + e.what());
      }
    }
    throw Error(ErrorKind::transport, "giving up on " + endpoint + " after " + std::to_string(config_.max_retries + 1) +
                                          " attempts (" + last_failure + ")");
  }

  BackendConfig config_;
  detail::ParsedUrl url_;
  std::counting_semaphore<1024> slots_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<long> attempts_{0};
};

inline ChatResponse chat(const ChatRequest& request, const BackendConfig& config) {
  return HttpBackend(config).chat(request);
}

inline std::vector<std::vector<double>> embed(const std::vector<std::string>& texts, const BackendConfig& config) {
  return HttpBackend(config).embed(texts);
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_MODEL_CLIENT_HPP
