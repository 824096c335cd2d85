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

#ifndef RUBRICLEARN_STRUCTURING_HPP
#define RUBRICLEARN_STRUCTURING_HPP

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "rubriclearn/model_client.hpp"
#include "rubriclearn/prompts.hpp"
#include "rubriclearn/rubric.hpp"
#include "rubriclearn/selection.hpp"

namespace rubriclearn {

/// Reads "Theme: ..." / "-Tip n: ..." lines from the last <rubrics> block.
/// Markdown emphasis and list markers are tolerated; other non-empty lines
/// continue the preceding tip or theme. Nullopt when there is no block or no
/// theme line.
inline std::optional<ThemeTipsRubric> parse_theme_tips(std::string_view raw) {
  const auto block = prompts::extract_last_tag(raw, "rubrics");
  if (!block) return std::nullopt;
  static const std::regex theme_re(R"(^[-*#\s]*(?:\*\*)?theme(?:\s*\d+)?\s*(?:\*\*)?\s*:\s*(?:\*\*)?\s*(.*)$)",
                                   std::regex::icase);
  static const std::regex tip_re(R"(^[-*\s]*(?:\*\*)?tip(?:\s*\d+)?\s*(?:\*\*)?\s*:\s*(?:\*\*)?\s*(.*)$)",
                                 std::regex::icase);
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };

  ThemeTipsRubric out;
  std::size_t start = 0;
  const std::string text(*block);
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    std::smatch m;
    if (std::regex_match(line, m, theme_re)) {
      out.themes.push_back({trim(m[1].str()), {}});
    } else if (std::regex_match(line, m, tip_re)) {
      if (out.themes.empty()) continue;
      out.themes.back().tips.push_back(trim(m[1].str()));
    } else if (!out.themes.empty()) {
      auto& theme = out.themes.back();
      auto& target = theme.tips.empty() ? theme.statement : theme.tips.back();
      target += (target.empty() ? "" : " ") + line;
    }
  }
  if (out.themes.empty()) return std::nullopt;
  return out;
}

/// Builds the structuring examples: each core rubric with its source query.
inline std::vector<prompts::StructuringExample> structuring_examples(
    const CoreSet& core, const std::vector<Rubric>& pool, const std::map<std::string, std::string>& query_of_pair) {
  std::map<std::string, const Rubric*> by_id;
  for (const auto& r : pool) by_id.emplace(r.id, &r);
  std::vector<prompts::StructuringExample> examples;
  for (const auto& id : core.rubric_ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw Error(ErrorKind::input, "core rubric '" + id + "' is not in the pool");
    const auto q = query_of_pair.find(it->second->source_pair_id);
    examples.push_back({q == query_of_pair.end() ? std::string{} : q->second, it->second->text});
  }
  return examples;
}

/// Asks the structuring model to organize the core set into at most
/// `theme_count` themes. One corrective re-ask on a malformed or oversized
/// answer, then a structuring error.
inline ThemeTipsRubric structure_core(const CoreSet& core, const std::vector<Rubric>& pool,
                                      const std::map<std::string, std::string>& query_of_pair, int theme_count,
                                      ChatBackend& backend) {
  if (core.empty()) throw Error(ErrorKind::input, "cannot structure an empty core set");
  if (theme_count < 1) throw Error(ErrorKind::input, "theme_count must be at least 1");
  const auto prompt = prompts::render_structure(structuring_examples(core, pool, query_of_pair), theme_count);

  ChatRequest request = ChatRequest::user(prompt);
  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const auto reply = backend.chat(request).content;
    const auto parsed = parse_theme_tips(reply);
    problem = parsed ? parsed->violation(static_cast<std::size_t>(theme_count))
                     : "no Theme/Tip lines inside a <rubrics> block";
    if (problem.empty()) return *parsed;
    request.messages.push_back({Role::assistant, reply});
    request.messages.push_back(
        {Role::user, "Your answer could not be used: " + problem + ". Reply again inside <rubrics></rubrics> with at most " +
                         std::to_string(theme_count) + " themes, each with 1 to " +
                         std::to_string(kMaxTipsPerTheme) + " tips, using the \"Theme:\" and \"-Tip n:\" format."});
  }
  throw Error(ErrorKind::structuring, "structuring output rejected after one re-ask: " + problem);
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_STRUCTURING_HPP
