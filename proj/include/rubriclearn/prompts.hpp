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

#ifndef RUBRICLEARN_PROMPTS_HPP
#define RUBRICLEARN_PROMPTS_HPP

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rubriclearn/error.hpp"

namespace rubriclearn::prompts {

// Prompt assets. Text between the delimiters is shipped byte-for-byte;
// only {placeholder} tokens are substituted at render time.

inline constexpr std::string_view kProposeTemplate = R"PROMPT(## Overview
You are an expert rubric writer for open-ended question. Your job is to
generate a self-contained set of evaluation criteria ("rubrics") for choosing a better answer from candidate answers to a given query. Rubrics can cover aspects such as factual correctness, depth of reasoning, clarity, completeness, style, helpfulness, and common pitfalls. Each rubric item must be fully self-contained so that non-expert readers need not consult any external information.

I will give you:
1. the query(maybe contains history messages)
2. candidate answers
3. which answer is better than others
4. critics by the human experts, and you need to carefully read the critics provided by human experts and summarize the rubrics.

NOTE: The number of rubrics should be LESS THAN OR EQUAL TO {number}

## Query
{query}

## Candidate Answers
<answer_1>{answer_1}</answer_1>
<answer_2>{answer_2}</answer_2>

## Better Answer
Answer {preference} is better than others.

## Critics
<critic>{critic}</critic>

## Output Format Requirements
<rubrics>your rubrics without index</rubrics>)PROMPT";

inline constexpr std::string_view kJudgeTemplate = R"PROMPT(## Task Description
I will provide you with a set of rubrics, along with the current query and two responses. These rubrics are the primary basis for selecting the best answer. You must follow the steps specified in the Evaluation Process when conducting your evaluation process.

## Rubrics
{rubrics}

## Process
1. Confirm the task scenario of the current query and select the corresponding evaluation rubrics.
2. Identify the best response that meets the most selected rubrics.

## Query
{query}

## Response A
{response_a}

## Response B
{response_b}

## Output Requirement
Please choose the better response. Response "A", "B", or "tie" within the tags.
<preference>A/B/tie</preference>)PROMPT";

// {previous_rubrics} expands to one <rubric_i> block per failed rubric.
inline constexpr std::string_view kReviseTemplate = R"PROMPT(## Overview
You are an expert rubric writer for open-ended question. A self-contained set of evaluation criteria ("rubrics") is needed for choosing a better answer from candidate answers to a given query. Since the rubrics generated in the previous round failed to correctly select a better answer, you need to revise the rubrics. rubrics can cover aspects such as factual correctness, depth of reasoning, clarity, completeness, style, helpfulness, and common pitfalls. Each rubric item must be fully self-contained so that non-expert readers need not consult any external information.

I will give you:
1. the query(maybe contains history messages)
2. candidate answers  
3. which answer is better than others
4. critics by the human experts, and you need to carefully read the critics provided by human experts and summarize the rubrics.
5. previous round rubrics that should to be improved

NOTE: The number of rubrics should be LESS THAN OR EQUAL TO {number}

## Query
{query}

## Candidate Answers
<answer_1>
{answer_1}
</answer_1>

<answer_2>
{answer_2}
</answer_2>

## Better Answer
Answer {preference} is better than others.

## Previous Round rubrics
{previous_rubrics}

## Output Format Requirements
Note: Ensure all outputs are placed within the tags like <tag>...</tag> as required!!!
<rubrics>
your improved rubrics without index
</rubrics>)PROMPT";

// {theme_count} is the theme cap; the tip cap stays fixed at 5.
inline constexpr std::string_view kStructureTemplate = R"PROMPT(##Task Description
Your task is to generate a set of evaluation rubrics to identify the best answer, based on the suggestions for determining from the examples. I will give you some examples, and every example contains the query and suggestion which has been verified to help select the best answer.

## Requirements
- Rubrics must be fully self-contained so that non-expert readers need not consult any external information.
- Each rubric should assess an independent dimension and be non-contradictory with others.
- Rubrics ensure that the overall judgment remains aligned and consistent for all examples.
- The number of rubrics should be LESS THAN OR EQUAL TO {theme_count}. The number of tips for eachrubric should be LESS THAN OR EQUAL TO 5.
- Must strictly adhere to the Rubrics Format.

## Rubric Format
Each rubric consists of two parts:
- Theme: A concise and clear statement that captures the core focus of the rubric, and must be **necessary** for all queries with no assumption.
- Tips: Multiple bullet points that expand on or supplement the rubric and only focuses on some specific queries.

Here is an example of a rubric:
Theme: [Concise theme statement]
-Tip 1:
-Tip 2:
-Tip 3:
-(Optional: More tips as needed)

## Process
1. Based on the query and suggestions of each example, summarize the rubric of each example.
2. summarize the rubrics of each example, taking care to strictly adhere to the Requirements.

NOTE: The number of rubrics should be LESS THAN OR EQUAL TO {theme_count}. The number of tips for each rubric should be LESS THAN OR EQUAL TO 5.

## Output Format Requirements
<rubrics>
Theme: [Concise theme statement]
-Tip 1: [Specific tip for certain queries]
-Tip 2: [Another specific tip]
-Tip 3: [Additional tip if needed]

Theme: [Another theme statement]
-Tip 1: [Related tip]
-Tip 2: [Another tip]
</rubrics>)PROMPT";

/// Replaces every `{name}` token whose name is a key of `values`. Inserted
/// text is never rescanned, so user content containing braces is safe.
inline std::string substitute(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(open));
      break;
    }
    const auto name = tmpl.substr(open + 1, close - open - 1);
    if (auto it = values.find(name); it != values.end()) {
      out.append(it->second);
      pos = close + 1;
    } else {
      out.push_back('{');
      pos = open + 1;
    }
  }
  return out;
}

/// A preference pair as shown to the rubric writer. `better` is 1 or 2 and
/// refers to the presented order, not the dataset order.
struct PresentedPair {
  std::string query;
  std::string answer_1;
  std::string answer_2;
  int better = 1;
  std::string critic;
};

struct StructuringExample {
  std::string query;
  std::string suggestion;
};

inline std::string render_propose(const PresentedPair& pair, int number) {
  return substitute(kProposeTemplate, {{"number", std::to_string(number)},
                                       {"query", pair.query},
                                       {"answer_1", pair.answer_1},
                                       {"answer_2", pair.answer_2},
                                       {"preference", std::to_string(pair.better)},
                                       {"critic", pair.critic}});
}

inline std::string render_judge(std::string_view rubrics, std::string_view query, std::string_view response_a,
                                std::string_view response_b) {
  return substitute(kJudgeTemplate, {{"rubrics", std::string(rubrics)},
                                     {"query", std::string(query)},
                                     {"response_a", std::string(response_a)},
                                     {"response_b", std::string(response_b)}});
}

inline std::string render_previous_rubrics(const std::vector<std::string>& previous) {
  std::string out;
  for (std::size_t i = 0; i < previous.size(); ++i) {
    if (i > 0) out += "\n\n";
    const auto tag = "rubric_" + std::to_string(i + 1);
    out += "<" + tag + ">\n" + previous[i] + "\n</" + tag + ">";
  }
  return out;
}

inline std::string render_revise(const PresentedPair& pair, const std::vector<std::string>& previous, int number) {
  if (previous.empty()) throw Error(ErrorKind::input, "revise prompt needs at least one previous rubric");
  return substitute(kReviseTemplate, {{"number", std::to_string(number)},
                                      {"query", pair.query},
                                      {"answer_1", pair.answer_1},
                                      {"answer_2", pair.answer_2},
                                      {"preference", std::to_string(pair.better)},
                                      {"previous_rubrics", render_previous_rubrics(previous)}});
}

/// The structuring template carries no slot for its examples, so they are
/// appended after it as tagged blocks.
inline std::string render_structure(const std::vector<StructuringExample>& examples, int theme_count) {
  std::string out = substitute(kStructureTemplate, {{"theme_count", std::to_string(theme_count)}});
  out += "\n\n## Examples";
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto tag = "example_" + std::to_string(i + 1);
    out += "\n<" + tag + ">\n<query>\n" + examples[i].query + "\n</query>\n<suggestion>\n" +
           examples[i].suggestion + "\n</suggestion>\n</" + tag + ">";
  }
  return out;
}

namespace detail {
inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}
}  // namespace detail

/// Inner text of the last `<tag>...</tag>` occurrence; the tag name matches
/// case-insensitively.
inline std::optional<std::string> extract_last_tag(std::string_view text, std::string_view tag) {
  const auto hay = detail::lower(text);
  const auto open = "<" + detail::lower(tag) + ">";
  const auto close = "</" + detail::lower(tag) + ">";
  std::size_t search_end = hay.size();
  while (true) {
    const auto c = hay.rfind(close, search_end);
    if (c == std::string::npos) return std::nullopt;
    const auto o = hay.rfind(open, c);
    if (o != std::string::npos) {
      const auto start = o + open.size();
      return std::string(text.substr(start, c - start));
    }
    if (c == 0) return std::nullopt;
    search_end = c - 1;
  }
}

}  // namespace rubriclearn::prompts

#endif  // RUBRICLEARN_PROMPTS_HPP
