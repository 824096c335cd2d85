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

#ifndef RUBRICLEARN_REFINEMENT_HPP
#define RUBRICLEARN_REFINEMENT_HPP

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include "rubriclearn/error.hpp"
#include "rubriclearn/model_client.hpp"
#include "rubriclearn/prompts.hpp"
#include "rubriclearn/rubric.hpp"

namespace rubriclearn {

struct Judgment {
  Verdict verdict = Verdict::Tie;  // in dataset orientation
  std::string raw_response;
  bool swapped = false;  // responses were shown as (B, A)

  bool operator==(const Judgment&) const = default;
};

enum class RefinementStatus { validated, failed, error };

inline const char* to_string(RefinementStatus s) {
  switch (s) {
    case RefinementStatus::validated: return "validated";
    case RefinementStatus::failed: return "failed";
    case RefinementStatus::error: return "error";
  }
  return "error";
}

struct RefinementOutcome {
  std::string pair_id;
  RefinementStatus status = RefinementStatus::failed;
  std::vector<Rubric> rubrics;  // last proposed set; only validated sets may enter a pool
  int iterations_used = 0;
  std::vector<Judgment> judgment_history;
  std::vector<std::string> warnings;
  std::string error_message;
  ErrorKind error_kind = ErrorKind::generation;  // meaningful only when status == error
};

struct ProposalResult {
  std::vector<Rubric> rubrics;
  std::vector<std::string> warnings;
};

/// How a pair is laid out in prompts. When swapped, response_b is shown first.
struct Presentation {
  bool swapped = false;

  prompts::PresentedPair present(const PreferencePair& pair) const {
    prompts::PresentedPair p;
    p.query = pair.query;
    p.answer_1 = swapped ? pair.response_b : pair.response_a;
    p.answer_2 = swapped ? pair.response_a : pair.response_b;
    const bool a_first = !swapped;
    p.better = (pair.preferred == Preference::A) == a_first ? 1 : 2;
    p.critic = pair.critique.value_or("");
    return p;
  }
};

/// Seeded coin flip per (seed, pair id, salt).
inline Presentation presentation_for(std::string_view pair_id, std::uint64_t seed, std::uint64_t salt = 0) {
  std::uint64_t h = fnv1a(pair_id, 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL));
  h ^= salt + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return Presentation{(h & 1U) == 1U};
}

/// Trims a rubric line and strips any leading bullet or enumeration marker
/// ("-", "*", "•", "1.", "2)", "(3)").
inline std::string clean_rubric_line(std::string_view line) {
  std::string s(line);
  auto trim = [](std::string& t) {
    const auto b = t.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
      t.clear();
      return;
    }
    t = t.substr(b, t.find_last_not_of(" \t\r\n") - b + 1);
  };
  trim(s);
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    if (s.rfind("\xE2\x80\xA2", 0) == 0) {  // bullet
      s.erase(0, 3);
      changed = true;
    } else if (s[0] == '-' || s[0] == '*' || s[0] == '+') {
      s.erase(0, 1);
      changed = true;
    } else {
      std::size_t i = s[0] == '(' ? 1 : 0;
      std::size_t digits = i;
      while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
      if (digits > i && digits < s.size() && (s[digits] == '.' || s[digits] == ')') &&
          (digits + 1 == s.size() || std::isspace(static_cast<unsigned char>(s[digits + 1])))) {
        s.erase(0, digits + 1);
        changed = true;
      }
    }
    trim(s);
  }
  return s;
}

/// Splits the inner text of a <rubrics> block into cleaned, non-empty,
/// de-duplicated criteria.
inline std::vector<std::string> parse_rubric_lines(std::string_view block) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::size_t start = 0;
  while (start <= block.size()) {
    auto end = block.find('\n', start);
    if (end == std::string_view::npos) end = block.size();
    auto line = clean_rubric_line(block.substr(start, end - start));
    if (!line.empty() && seen.insert(line).second) out.push_back(std::move(line));
    start = end + 1;
  }
  return out;
}

/// Verdict from the last <preference> tag, case-insensitive. Accepts
/// "A", "B", "tie" (optionally wrapped in quotes or "Response ").
inline std::optional<Verdict> parse_verdict(std::string_view raw) {
  const auto tag = prompts::extract_last_tag(raw, "preference");
  if (!tag) return std::nullopt;
  std::string v;
  for (unsigned char c : *tag)
    if (!std::isspace(c) && c != '"' && c != '\'') v.push_back(static_cast<char>(std::tolower(c)));
  if (v.rfind("response", 0) == 0) v.erase(0, 8);
  if (v == "a") return Verdict::A;
  if (v == "b") return Verdict::B;
  if (v == "tie") return Verdict::Tie;
  return std::nullopt;
}

namespace detail {

/// Sends `prompt`, re-asking once if `parse` yields nothing.
template <class Parse>
auto ask_with_reask(ChatBackend& backend, const std::string& prompt, Parse&& parse, ErrorKind failure,
                    const std::string& what) -> decltype(parse(std::string_view{})) {
  std::string last;
  for (int attempt = 0; attempt < 2; ++attempt) {
    last = backend.chat(ChatRequest::user(prompt)).content;
    if (auto parsed = parse(last)) return parsed;
  }
  throw Error(failure, what + " after one re-ask; last output: " + last.substr(0, 200));
}

inline ProposalResult rubrics_from_prompt(ChatBackend& backend, const std::string& prompt, int max_rubrics,
                                          const std::string& source_pair_id) {
  auto lines = ask_with_reask(
      backend, prompt,
      [](std::string_view raw) -> std::optional<std::vector<std::string>> {
        const auto block = prompts::extract_last_tag(raw, "rubrics");
        if (!block) return std::nullopt;
        auto parsed = parse_rubric_lines(*block);
        if (parsed.empty()) return std::nullopt;
        return parsed;
      },
      ErrorKind::generation, "missing or empty <rubrics> block");

  ProposalResult result;
  if (lines->size() > static_cast<std::size_t>(max_rubrics)) {
    result.warnings.push_back("model returned " + std::to_string(lines->size()) + " rubrics, kept the first " +
                              std::to_string(max_rubrics));
    lines->resize(static_cast<std::size_t>(max_rubrics));
  }
  for (auto& line : *lines) result.rubrics.push_back(make_rubric(std::move(line), source_pair_id));
  return result;
}

}  // namespace detail

/// Asks the rubric writer for up to `max_rubrics` criteria explaining why the
/// preferred response wins.
inline ProposalResult propose(const PreferencePair& pair, int max_rubrics, ChatBackend& backend,
                              Presentation presentation = {}) {
  if (max_rubrics < 1) throw Error(ErrorKind::input, "max_rubrics must be at least 1");
  const auto prompt = prompts::render_propose(presentation.present(pair), max_rubrics);
  return detail::rubrics_from_prompt(backend, prompt, max_rubrics, pair.id);
}

/// Asks for an improved set after `failed` did not pick the preferred side.
inline ProposalResult revise(const PreferencePair& pair, const std::vector<Rubric>& failed, int max_rubrics,
                             ChatBackend& backend, Presentation presentation = {}) {
  if (failed.empty()) throw Error(ErrorKind::input, "revise needs the failed rubric set");
  if (max_rubrics < 1) throw Error(ErrorKind::input, "max_rubrics must be at least 1");
  std::vector<std::string> previous;
  for (const auto& r : failed) previous.push_back(r.text);
  const auto prompt = prompts::render_revise(presentation.present(pair), previous, max_rubrics);
  return detail::rubrics_from_prompt(backend, prompt, max_rubrics, pair.id);
}

/// Pairwise judgment guided by `rubrics`. Responses are passed in the order
/// they should be shown; the verdict refers to that order.
inline Judgment judge(std::string_view query, std::string_view response_a, std::string_view response_b,
                      const RubricSet& rubrics, ChatBackend& backend) {
  if (rubrics.empty()) throw Error(ErrorKind::input, "judge needs a non-empty rubric set");
  const auto prompt = prompts::render_judge(rubrics.render(), query, response_a, response_b);
  Judgment j;
  std::string raw;
  const auto verdict = detail::ask_with_reask(
      backend, prompt,
      [&raw](std::string_view out) {
        raw = std::string(out);
        return parse_verdict(out);
      },
      ErrorKind::judgment, "no parseable <preference> verdict");
  j.verdict = *verdict;
  j.raw_response = std::move(raw);
  return j;
}

/// Judges `pair` under `presentation` and maps the verdict back to the
/// dataset's A/B orientation.
inline Judgment judge_pair(const PreferencePair& pair, const RubricSet& rubrics, ChatBackend& backend,
                           Presentation presentation = {}) {
  const auto& first = presentation.swapped ? pair.response_b : pair.response_a;
  const auto& second = presentation.swapped ? pair.response_a : pair.response_b;
  auto j = judge(pair.query, first, second, rubrics, backend);
  if (presentation.swapped) j.verdict = swap_sides(j.verdict);
  j.swapped = presentation.swapped;
  return j;
}

struct RefinementOptions {
  int e_max = 10;
  int max_rubrics = 5;
  std::uint64_t seed = 0;
  bool randomize_order = true;
};

/// Propose-Evaluate-Revise for one pair. Stops at the first judgment that
/// picks the preferred response (validated) or after `e_max` judgments
/// (failed). Ties count as failures. Errors are captured in the outcome.
inline RefinementOutcome refine_pair(const PreferencePair& pair, ChatBackend& backend,
                                     const RefinementOptions& options = {}) {
  if (options.e_max < 1) throw Error(ErrorKind::input, "e_max must be at least 1");
  if (options.max_rubrics < 1) throw Error(ErrorKind::input, "max_rubrics must be at least 1");
  const Presentation presentation =
      options.randomize_order ? presentation_for(pair.id, options.seed) : Presentation{};

  RefinementOutcome outcome;
  outcome.pair_id = pair.id;
  try {
    for (int iteration = 1; iteration <= options.e_max; ++iteration) {
      auto proposal = iteration == 1 ? propose(pair, options.max_rubrics, backend, presentation)
                                     : revise(pair, outcome.rubrics, options.max_rubrics, backend, presentation);
      outcome.warnings.insert(outcome.warnings.end(), proposal.warnings.begin(), proposal.warnings.end());
      outcome.rubrics = std::move(proposal.rubrics);
      outcome.iterations_used = iteration;
      for (auto& r : outcome.rubrics) r.refine_iterations = iteration;

      auto judgment = judge_pair(pair, RubricSet::flat(outcome.rubrics), backend, presentation);
      const bool correct = matches(judgment.verdict, pair.preferred);
      outcome.judgment_history.push_back(std::move(judgment));
      if (correct) {
        outcome.status = RefinementStatus::validated;
        return outcome;
      }
    }
    outcome.status = RefinementStatus::failed;
  } catch (const Error& e) {
    outcome.status = RefinementStatus::error;
    outcome.error_message = e.what();
    outcome.error_kind = e.kind();
    if (outcome.iterations_used == 0) outcome.iterations_used = 1;
  }
  return outcome;
}

inline RefinementOutcome refine_pair(const PreferencePair& pair, int e_max, int max_rubrics, ChatBackend& backend) {
  RefinementOptions options;
  options.e_max = e_max;
  options.max_rubrics = max_rubrics;
  options.randomize_order = false;
  return refine_pair(pair, backend, options);
}

/// Runs `fn(i)` for i in [0, n) on up to `parallelism` threads.
template <class Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
  if (parallelism <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  const auto count = std::min(parallelism, n);
  for (std::size_t w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

/// Refines pairs independently; results are in input order regardless of
/// `parallelism`.
inline std::vector<RefinementOutcome> refine_batch(const std::vector<PreferencePair>& pairs, ChatBackend& backend,
                                                   const RefinementOptions& options, std::size_t parallelism = 1) {
  std::vector<RefinementOutcome> outcomes(pairs.size());
  parallel_for(pairs.size(), parallelism, [&](std::size_t i) { outcomes[i] = refine_pair(pairs[i], backend, options); });
  return outcomes;
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_REFINEMENT_HPP
