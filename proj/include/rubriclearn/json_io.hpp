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

#ifndef RUBRICLEARN_JSON_IO_HPP
#define RUBRICLEARN_JSON_IO_HPP

// JSON persistence: a writer that prints every float with 17 significant
// digits (so values survive a round trip bit-exactly), atomic file writes,
// and conversions for the artifact types.

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "rubriclearn/error.hpp"
#include "rubriclearn/rubric.hpp"
#include "rubriclearn/selection.hpp"

namespace rubriclearn {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline void write_json(std::string& out, const json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write_json(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ',';
        newline(depth + 1);
        write_json(out, j[i], indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      // A null here would silently corrupt a gain history on reload.
      if (!std::isfinite(v)) throw Error(ErrorKind::numerical, "refusing to serialize a non-finite number");
      auto text = fmt::format("{:.17g}", v);
      // Keep floats recognisable as floats on re-parse.
      if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
      out += text;
      return;
    }
    default:
      out += j.dump(-1, ' ', false, json::error_handler_t::strict);
  }
}

}  // namespace detail

/// Serializes `j`; indent < 0 gives a single line.
inline std::string dump(const json& j, int indent = 2) {
  std::string out;
  detail::write_json(out, j, indent, 0);
  return out;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::input, what + ": invalid JSON: " + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::input, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::input, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::input, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::input, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

/// Runs `fn`, turning nlohmann exceptions into input errors naming `what`.
template <class Fn>
auto json_guard(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::input, what + ": " + e.what());
  }
}

inline void check_schema(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version"))
    throw Error(ErrorKind::input, what + ": missing schema_version");
  const auto& v = j.at("schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
    throw Error(ErrorKind::input, what + ": unsupported schema_version " + v.dump());
}

// Conversions (found by ADL).

inline void to_json(json& j, const PreferencePair& p) {
  j = json{{"id", p.id},
           {"query", p.query},
           {"response_a", p.response_a},
           {"response_b", p.response_b},
           {"preferred", to_string(p.preferred)}};
  if (p.critique) j["critique"] = *p.critique;
}

inline void from_json(const json& j, PreferencePair& p) {
  j.at("id").get_to(p.id);
  j.at("query").get_to(p.query);
  j.at("response_a").get_to(p.response_a);
  j.at("response_b").get_to(p.response_b);
  p.preferred = preference_from_string(j.at("preferred").get<std::string>());
  p.critique.reset();
  if (j.contains("critique") && !j.at("critique").is_null()) p.critique = j.at("critique").get<std::string>();
}

inline void to_json(json& j, const Rubric& r) {
  j = json{{"id", r.id},
           {"text", r.text},
           {"source_pair_id", r.source_pair_id},
           {"batch_iteration", r.batch_iteration},
           {"refine_iterations", r.refine_iterations}};
  if (r.has_embedding()) j["embedding"] = r.embedding;
}

inline void from_json(const json& j, Rubric& r) {
  j.at("id").get_to(r.id);
  j.at("text").get_to(r.text);
  r.source_pair_id = j.value("source_pair_id", std::string{});
  r.batch_iteration = j.value("batch_iteration", 0);
  r.refine_iterations = j.value("refine_iterations", 0);
  r.embedding.clear();
  if (j.contains("embedding")) j.at("embedding").get_to(r.embedding);
}

inline void to_json(json& j, const Theme& t) { j = json{{"theme", t.statement}, {"tips", t.tips}}; }

inline void from_json(const json& j, Theme& t) {
  j.at("theme").get_to(t.statement);
  j.at("tips").get_to(t.tips);
}

inline void to_json(json& j, const ThemeTipsRubric& r) { j = json{{"themes", r.themes}}; }
inline void from_json(const json& j, ThemeTipsRubric& r) { j.at("themes").get_to(r.themes); }

inline void to_json(json& j, const SelectionStep& s) {
  j = json{{"rubric_id", s.rubric_id}, {"marginal_gain", s.marginal_gain}, {"coding_rate_after", s.coding_rate_after}};
}

inline void from_json(const json& j, SelectionStep& s) {
  j.at("rubric_id").get_to(s.rubric_id);
  j.at("marginal_gain").get_to(s.marginal_gain);
  j.at("coding_rate_after").get_to(s.coding_rate_after);
}

inline void to_json(json& j, const SelectionTrace& t) {
  j = json{{"picks", t.picks}, {"stop_reason", to_string(t.stop_reason)}};
}

inline void from_json(const json& j, SelectionTrace& t) {
  j.at("picks").get_to(t.picks);
  t.stop_reason = selection_stop_from_string(j.at("stop_reason").get<std::string>());
}

inline void to_json(json& j, const CoreSet& c) {
  j = json{{"rubric_ids", c.rubric_ids}, {"trace", c.trace}, {"epsilon", c.epsilon_used}};
}

inline void from_json(const json& j, CoreSet& c) {
  j.at("rubric_ids").get_to(c.rubric_ids);
  j.at("trace").get_to(c.trace);
  j.at("epsilon").get_to(c.epsilon_used);
}

// Artifact files.

/// One rubric per line.
inline std::string pool_to_jsonl(const std::vector<Rubric>& pool) {
  std::string out;
  for (const auto& r : pool) {
    out += dump(json(r), -1);
    out += '\n';
  }
  return out;
}

inline std::vector<Rubric> pool_from_jsonl(const std::string& text, const std::string& what) {
  std::vector<Rubric> pool;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = what + ":" + std::to_string(number);
    pool.push_back(json_guard(where, [&] { return parse_json(line, where).get<Rubric>(); }));
  }
  return pool;
}

inline void save_pool(const std::filesystem::path& path, const std::vector<Rubric>& pool) {
  write_file_atomic(path, pool_to_jsonl(pool));
}

inline std::vector<Rubric> load_pool(const std::filesystem::path& path) {
  return pool_from_jsonl(read_file(path), path.string());
}

/// core.json: the selected ids, the full selection trace and the per-batch
/// gain history of the run that produced it.
struct CoreArtifact {
  CoreSet core;
  std::vector<double> batch_gain_history;

  bool operator==(const CoreArtifact&) const = default;
};

inline json core_artifact_json(const CoreArtifact& a) {
  json j = a.core;
  j["schema_version"] = kSchemaVersion;
  j["batch_gain_history"] = a.batch_gain_history;
  return j;
}

inline CoreArtifact core_artifact_from_json(const json& j, const std::string& what) {
  check_schema(j, what);
  return json_guard(what, [&] {
    CoreArtifact a;
    a.core = j.get<CoreSet>();
    if (j.contains("batch_gain_history")) j.at("batch_gain_history").get_to(a.batch_gain_history);
    return a;
  });
}

inline void save_core(const std::filesystem::path& path, const CoreArtifact& a) {
  write_file_atomic(path, dump(core_artifact_json(a)) + "\n");
}

inline CoreArtifact load_core(const std::filesystem::path& path) {
  return core_artifact_from_json(parse_json(read_file(path), path.string()), path.string());
}

inline void save_theme_tips(const std::filesystem::path& path, const ThemeTipsRubric& r) {
  json j = r;
  j["schema_version"] = kSchemaVersion;
  write_file_atomic(path, dump(j) + "\n");
}

inline ThemeTipsRubric load_theme_tips(const std::filesystem::path& path) {
  const auto j = parse_json(read_file(path), path.string());
  check_schema(j, path.string());
  return json_guard(path.string(), [&] { return j.get<ThemeTipsRubric>(); });
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_JSON_IO_HPP
