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

#ifndef RUBRICLEARN_CONFIG_HPP
#define RUBRICLEARN_CONFIG_HPP

// Run configuration. One flat key space with dotted sections
// ("pipeline.batch_size", "backend.chat.base_url", ...). Files may also nest
// the sections as JSON objects; both spellings flatten to the same keys.
// Unknown keys are rejected.
//
// Backend sections: "backend.chat" drives rubric writing and structuring,
// "backend.judge" and "backend.embed" start from the chat settings and
// override them. The judge defaults to temperature 0.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rubriclearn/diagnostics.hpp"
#include "rubriclearn/json_io.hpp"
#include "rubriclearn/model_client.hpp"
#include "rubriclearn/pipeline.hpp"

namespace rubriclearn {

enum class BackendKind { http, mock };

struct BackendSpec {
  BackendKind kind = BackendKind::http;
  BackendConfig http;
  std::size_t mock_dim = 256;  // mock embedder only
  std::uint64_t mock_seed = 0;
};

struct Paths {
  std::filesystem::path dataset;
  std::filesystem::path output_dir = "out";
  std::filesystem::path checkpoint;       // empty: <output_dir>/checkpoint.json
  std::filesystem::path embedding_cache;  // empty: <output_dir>/embedding_cache.json
  std::filesystem::path testset;

  std::filesystem::path checkpoint_file() const {
    return checkpoint.empty() ? output_dir / "checkpoint.json" : checkpoint;
  }
  std::filesystem::path cache_file() const {
    return embedding_cache.empty() ? output_dir / "embedding_cache.json" : embedding_cache;
  }
};

struct RunConfig {
  PipelineConfig pipeline;
  VotingConfig voting;
  BackendSpec chat;
  BackendSpec judge;
  BackendSpec embed;
  Paths paths;
  std::string log_level = "info";

  void validate() const {
    try {
      pipeline.validate();
      voting.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::config, e.message());
    }
    for (const auto* b : {&chat, &judge, &embed})
      if (b->kind == BackendKind::http) b->http.validate();
    if (embed.kind == BackendKind::http && embed.http.model_name.empty())
      throw Error(ErrorKind::config, "backend.embed.model_name is required for an http embedder");
    if (embed.kind == BackendKind::mock && embed.mock_dim < 2)
      throw Error(ErrorKind::config, "backend.embed.mock_dim must be at least 2");
    static const std::vector<std::string> levels{"trace", "debug", "info", "warn", "error", "off"};
    if (std::find(levels.begin(), levels.end(), log_level) == levels.end())
      throw Error(ErrorKind::config, "log.level must be one of trace, debug, info, warn, error, off");
  }
};

using FlatConfig = std::map<std::string, json>;

namespace detail {

inline void flatten_into(FlatConfig& out, const json& j, const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      flatten_into(out, it.value(), key);
    } else {
      out[key] = it.value();
    }
  }
}

template <class T>
T as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw Error(ErrorKind::config, "");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw Error(ErrorKind::config, "");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) throw Error(ErrorKind::config, "");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw Error(ErrorKind::config, "");
    } else {
      if (!v.is_string()) throw Error(ErrorKind::config, "");
    }
    return v.get<T>();
  } catch (const Error&) {
    throw Error(ErrorKind::config, "bad value for '" + key + "': " + dump(v, -1));
  } catch (const json::exception&) {
    throw Error(ErrorKind::config, "bad value for '" + key + "': " + dump(v, -1));
  }
}

/// Applies `field` = value to a backend spec; false when the field is unknown.
inline bool apply_backend(BackendSpec& b, const std::string& field, const json& v, const std::string& key) {
  if (field == "kind") {
    const auto k = as<std::string>(v, key);
    if (k == "http") {
      b.kind = BackendKind::http;
    } else if (k == "mock") {
      b.kind = BackendKind::mock;
    } else {
      throw Error(ErrorKind::config, "'" + key + "' must be \"http\" or \"mock\"");
    }
  } else if (field == "base_url") {
    b.http.base_url = as<std::string>(v, key);
  } else if (field == "model_name") {
    b.http.model_name = as<std::string>(v, key);
  } else if (field == "api_key_env") {
    b.http.api_key_env = as<std::string>(v, key);
  } else if (field == "timeout_ms") {
    b.http.timeout = std::chrono::milliseconds(as<std::int64_t>(v, key));
  } else if (field == "max_retries") {
    b.http.max_retries = as<int>(v, key);
  } else if (field == "temperature") {
    b.http.temperature = as<double>(v, key);
  } else if (field == "backoff_base_ms") {
    b.http.backoff_base = std::chrono::milliseconds(as<std::int64_t>(v, key));
  } else if (field == "max_connections") {
    b.http.max_connections = as<std::size_t>(v, key);
  } else if (field == "embed_batch_size") {
    b.http.embed_batch_size = as<std::size_t>(v, key);
  } else if (field == "mock_dim") {
    b.mock_dim = as<std::size_t>(v, key);
  } else if (field == "mock_seed") {
    b.mock_seed = as<std::uint64_t>(v, key);
  } else {
    return false;
  }
  return true;
}

inline bool apply_key(RunConfig& c, const std::string& key, const json& v) {
  auto& p = c.pipeline;
  auto& s = c.pipeline.selection;
  if (key == "pipeline.batch_size") p.batch_size = as<std::size_t>(v, key);
  else if (key == "pipeline.e_max") p.e_max = as<int>(v, key);
  else if (key == "pipeline.max_rubrics_per_pair") p.max_rubrics_per_pair = as<int>(v, key);
  else if (key == "pipeline.theme_count") p.theme_count = as<int>(v, key);
  else if (key == "pipeline.seed") p.seed = as<std::uint64_t>(v, key);
  else if (key == "pipeline.max_batch_iterations") p.max_batch_iterations = as<std::size_t>(v, key);
  else if (key == "pipeline.parallelism") p.parallelism = as<std::size_t>(v, key);
  else if (key == "pipeline.randomize_order") p.randomize_order = as<bool>(v, key);
  else if (key == "selection.max_size") {
    if (v.is_null()) s.max_size.reset();
    else s.max_size = as<std::size_t>(v, key);
  } else if (key == "selection.tau_min") s.tau_min = as<double>(v, key);
  else if (key == "selection.patience") s.patience = as<std::size_t>(v, key);
  else if (key == "selection.epsilon") s.params.epsilon = as<double>(v, key);
  else if (key == "selection.jitter") s.params.jitter = as<double>(v, key);
  else if (key == "voting.n_votes") c.voting.n_votes = as<int>(v, key);
  else if (key == "voting.seed") c.voting.seed = as<std::uint64_t>(v, key);
  else if (key == "voting.parallelism") c.voting.parallelism = as<std::size_t>(v, key);
  else if (key == "paths.dataset") c.paths.dataset = as<std::string>(v, key);
  else if (key == "paths.output_dir") c.paths.output_dir = as<std::string>(v, key);
  else if (key == "paths.checkpoint") c.paths.checkpoint = as<std::string>(v, key);
  else if (key == "paths.embedding_cache") c.paths.embedding_cache = as<std::string>(v, key);
  else if (key == "paths.testset") c.paths.testset = as<std::string>(v, key);
  else if (key == "log.level") c.log_level = as<std::string>(v, key);
  else return false;
  return true;
}

}  // namespace detail

inline FlatConfig flatten(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
  FlatConfig out;
  detail::flatten_into(out, j, "");
  out.erase("schema_version");
  return out;
}

/// Builds a RunConfig from defaults plus `flat`; throws on unknown keys.
inline RunConfig build_run_config(const FlatConfig& flat) {
  RunConfig c;
  c.judge.http.temperature = 0.0;
  c.embed.http.model_name.clear();
  static const std::string chat = "backend.chat.", judge = "backend.judge.", embed = "backend.embed.";

  // Chat settings first: they seed the judge and embed sections.
  for (const auto& [key, v] : flat) {
    if (key.rfind(chat, 0) != 0) continue;
    const auto field = key.substr(chat.size());
    if (!detail::apply_backend(c.chat, field, v, key)) throw Error(ErrorKind::config, "unknown config key '" + key + "'");
    if (field != "temperature") detail::apply_backend(c.judge, field, v, key);
    if (field != "model_name") detail::apply_backend(c.embed, field, v, key);
  }
  for (const auto& [key, v] : flat) {
    if (key.rfind(chat, 0) == 0) continue;
    bool known = false;
    if (key.rfind(judge, 0) == 0) {
      known = detail::apply_backend(c.judge, key.substr(judge.size()), v, key);
    } else if (key.rfind(embed, 0) == 0) {
      known = detail::apply_backend(c.embed, key.substr(embed.size()), v, key);
    } else {
      known = detail::apply_key(c, key, v);
    }
    if (!known) throw Error(ErrorKind::config, "unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

/// "key=value"; the value is read as JSON when it parses, else as a string.
inline std::pair<std::string, json> parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorKind::config, "override must look like key=value, got '" + assignment + "'");
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  auto value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  return {key, value};
}

inline FlatConfig read_flat_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::config, "config file not found: " + path.string());
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": invalid JSON: " + e.what());
  }
  return flatten(j);
}

/// File (optional) then overrides, in order.
inline RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                                 const std::vector<std::string>& overrides = {}) {
  FlatConfig flat = path ? read_flat_config(*path) : FlatConfig{};
  for (const auto& o : overrides) {
    auto [key, value] = parse_override(o);
    flat[key] = std::move(value);
  }
  return build_run_config(flat);
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_CONFIG_HPP
