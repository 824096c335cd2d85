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

#ifndef RUBRICLEARN_DATASET_HPP
#define RUBRICLEARN_DATASET_HPP

// Preference datasets as JSON Lines. Each line is either
//   {"id", "query", "response_a", "response_b", "preferred": "A"|"B", "critique"?}
// or the chosen/rejected convention
//   {"id"?, "prompt"|"query", "chosen", "rejected"}
// which is read as response_a = chosen, preferred = A.

#include <filesystem>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "rubriclearn/json_io.hpp"

namespace rubriclearn {

inline PreferencePair pair_from_chosen_rejected(const json& j, const std::string& fallback_id) {
  PreferencePair p;
  p.id = j.contains("id") ? j.at("id").get<std::string>() : fallback_id;
  p.query = j.contains("prompt") ? j.at("prompt").get<std::string>() : j.at("query").get<std::string>();
  j.at("chosen").get_to(p.response_a);
  j.at("rejected").get_to(p.response_b);
  p.preferred = Preference::A;
  if (j.contains("critique") && j.at("critique").is_string()) p.critique = j.at("critique").get<std::string>();
  return p;
}

/// Parses JSONL text. Errors carry "<source>:<line>:". Blank lines are skipped.
inline std::vector<PreferencePair> parse_pairs_jsonl(const std::string& text, const std::string& source) {
  std::vector<PreferencePair> pairs;
  std::unordered_set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = source + ":" + std::to_string(number);
    PreferencePair p;
    try {
      const auto j = json::parse(line);
      if (!j.is_object()) throw Error(ErrorKind::input, "expected a JSON object");
      p = j.contains("chosen") ? pair_from_chosen_rejected(j, "line-" + std::to_string(number)) : j.get<PreferencePair>();
      p.validate();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::input, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::input, where + ": " + e.message());
    }
    if (!ids.insert(p.id).second) throw Error(ErrorKind::input, where + ": duplicate pair id '" + p.id + "'");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

inline std::vector<PreferencePair> load_pairs(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::input, "dataset not found: " + path.string());
  auto pairs = parse_pairs_jsonl(read_file(path), path.string());
  if (pairs.empty()) throw Error(ErrorKind::input, path.string() + ": dataset is empty");
  return pairs;
}

inline std::string pairs_to_jsonl(const std::vector<PreferencePair>& pairs) {
  std::string out;
  for (const auto& p : pairs) out += dump(json(p), -1) + "\n";
  return out;
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_DATASET_HPP
