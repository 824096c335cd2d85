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

#ifndef RUBRICLEARN_DIAGNOSTICS_HPP
#define RUBRICLEARN_DIAGNOSTICS_HPP

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "rubriclearn/json_io.hpp"
#include "rubriclearn/refinement.hpp"

namespace rubriclearn {

struct TestSet {
  std::vector<PreferencePair> pairs;

  void validate() const {
    if (pairs.empty()) throw Error(ErrorKind::input, "test set is empty");
    std::unordered_set<std::string> ids;
    for (const auto& p : pairs) {
      p.validate();
      if (!ids.insert(p.id).second) throw Error(ErrorKind::input, "duplicate test pair id '" + p.id + "'");
    }
  }
};

struct VotingConfig {
  int n_votes = 1;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;

  void validate() const {
    if (n_votes < 1) throw Error(ErrorKind::input, "voting.n_votes must be at least 1");
    if (parallelism < 1) throw Error(ErrorKind::input, "voting.parallelism must be at least 1");
  }
};

struct RubricDiagnostics {
  std::string rubric_id;
  std::string theme_excerpt;
  double coverage = 0.0;
  std::optional<double> precision;  // undefined when coverage is 0
  double contribution = 0.0;
  std::size_t judgments = 0;
  std::size_t decisive = 0;  // non-tie judgments
  std::size_t correct = 0;   // decisive and matching the preferred side
};

/// Verdict counts for one rubric set over a test set.
struct JudgmentTally {
  std::size_t judgments = 0;
  std::size_t decisive = 0;
  std::size_t correct = 0;

  double coverage() const { return judgments == 0 ? 0.0 : static_cast<double>(decisive) / static_cast<double>(judgments); }
  std::optional<double> precision() const {
    if (decisive == 0) return std::nullopt;
    return static_cast<double>(correct) / static_cast<double>(decisive);
  }
};

namespace detail {

/// Salt for the presentation flip of vote `v`; vote 0 uses the same layout
/// as refinement.
inline std::uint64_t vote_salt(int v) { return static_cast<std::uint64_t>(v); }

/// One judgment; errors become ties.
inline Verdict judge_or_tie(const PreferencePair& pair, const RubricSet& rubrics, ChatBackend& backend,
                            Presentation presentation) {
  try {
    return judge_pair(pair, rubrics, backend, presentation).verdict;
  } catch (const Error& e) {
    spdlog::warn("judgment of pair '{}' failed, counted as tie: {}", pair.id, e.what());
    return Verdict::Tie;
  }
}

/// verdicts[pair][vote] for every pair and vote.
inline std::vector<std::vector<Verdict>> collect_votes(const RubricSet& rubrics, const TestSet& test,
                                                       const VotingConfig& voting, ChatBackend& backend) {
  const auto votes = static_cast<std::size_t>(voting.n_votes);
  std::vector<std::vector<Verdict>> out(test.pairs.size(), std::vector<Verdict>(votes, Verdict::Tie));
  parallel_for(test.pairs.size() * votes, voting.parallelism, [&](std::size_t k) {
    const auto& pair = test.pairs[k / votes];
    const int v = static_cast<int>(k % votes);
    out[k / votes][k % votes] =
        judge_or_tie(pair, rubrics, backend, presentation_for(pair.id, voting.seed, vote_salt(v)));
  });
  return out;
}

}  // namespace detail

/// Majority over votes; nullopt when the top count is shared.
inline std::optional<Verdict> majority(const std::vector<Verdict>& votes) {
  std::array<int, 3> counts{};
  for (auto v : votes) ++counts[static_cast<std::size_t>(v)];
  const auto top = std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), *top) > 1) return std::nullopt;
  return static_cast<Verdict>(top - counts.begin());
}

/// 1 iff the majority verdict is the preferred side; vote ties and Tie
/// majorities score 0.
inline int score_votes(const std::vector<Verdict>& votes, Preference preferred) {
  const auto m = majority(votes);
  return m && matches(*m, preferred) ? 1 : 0;
}

/// Judges every pair `n_votes` times with `rubrics` and counts decisive and
/// correct verdicts.
inline JudgmentTally tally(const RubricSet& rubrics, const TestSet& test, const VotingConfig& voting,
                           ChatBackend& backend) {
  test.validate();
  voting.validate();
  if (rubrics.empty()) throw Error(ErrorKind::input, "rubric set is empty");
  const auto votes = detail::collect_votes(rubrics, test, voting, backend);
  JudgmentTally t;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    for (auto v : votes[i]) {
      ++t.judgments;
      if (v == Verdict::Tie) continue;
      ++t.decisive;
      if (matches(v, test.pairs[i].preferred)) ++t.correct;
    }
  }
  return t;
}

/// Fraction of judgments under the single rubric that are not ties.
inline double coverage(const std::string& rubric, const TestSet& test, ChatBackend& backend,
                       const VotingConfig& voting = {}) {
  return tally(RubricSet::flat(std::vector<std::string>{rubric}), test, voting, backend).coverage();
}

/// Among non-tie judgments under the single rubric, the fraction that pick
/// the preferred side. Undefined without any non-tie judgment.
inline std::optional<double> precision(const std::string& rubric, const TestSet& test, ChatBackend& backend,
                                       const VotingConfig& voting = {}) {
  return tally(RubricSet::flat(std::vector<std::string>{rubric}), test, voting, backend).precision();
}

/// Number of pairs whose majority verdict is the preferred side.
inline std::size_t set_hits(const RubricSet& rubrics, const TestSet& test, const VotingConfig& voting,
                            ChatBackend& backend) {
  test.validate();
  voting.validate();
  if (rubrics.empty()) throw Error(ErrorKind::input, "rubric set is empty");
  const auto votes = detail::collect_votes(rubrics, test, voting, backend);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < votes.size(); ++i)
    hits += static_cast<std::size_t>(score_votes(votes[i], test.pairs[i].preferred));
  return hits;
}

inline double set_accuracy(const RubricSet& rubrics, const TestSet& test, const VotingConfig& voting,
                           ChatBackend& backend) {
  return static_cast<double>(set_hits(rubrics, test, voting, backend)) / static_cast<double>(test.pairs.size());
}

namespace detail {

inline double hit_difference(std::size_t with, std::size_t without, std::size_t n) {
  return (static_cast<double>(with) - static_cast<double>(without)) / static_cast<double>(n);
}

}  // namespace detail

/// Accuracy drop when item `index` is removed from `full`, with the same
/// per-vote presentation seeds on both sides.
inline double contribution(std::size_t index, const RubricSet& full, const TestSet& test, const VotingConfig& voting,
                           ChatBackend& backend) {
  if (full.size() < 2) throw Error(ErrorKind::input, "contribution needs a rubric set with at least two items");
  const auto without = full.without(index);
  return detail::hit_difference(set_hits(full, test, voting, backend), set_hits(without, test, voting, backend),
                                test.pairs.size());
}

struct DiagnosticsReport {
  std::vector<RubricDiagnostics> rows;
  double full_accuracy = 0.0;
  std::size_t total_judgments = 0;  // singleton-rubric judgments behind coverage/precision
};

inline std::string excerpt(const std::string& text, std::size_t limit = 60) {
  if (text.size() <= limit) return text;
  auto cut = text.rfind(' ', limit);
  if (cut == std::string::npos || cut < limit / 2) cut = limit;
  return text.substr(0, cut) + "...";
}

/// Coverage, precision and leave-one-out contribution for every item of
/// `rubrics`. `ids` names the items (defaults to "rubric_<i>").
/// Contribution is 0 for a single-item set.
inline DiagnosticsReport diagnose_all(const RubricSet& rubrics, const TestSet& test, const VotingConfig& voting,
                                      ChatBackend& backend, std::vector<std::string> ids = {}) {
  if (rubrics.empty()) throw Error(ErrorKind::input, "rubric set is empty");
  if (ids.empty())
    for (std::size_t i = 0; i < rubrics.size(); ++i) ids.push_back("rubric_" + std::to_string(i + 1));
  if (ids.size() != rubrics.size()) throw Error(ErrorKind::input, "one id per rubric is required");

  DiagnosticsReport report;
  const auto full_hits = set_hits(rubrics, test, voting, backend);
  report.full_accuracy = static_cast<double>(full_hits) / static_cast<double>(test.pairs.size());
  for (std::size_t i = 0; i < rubrics.size(); ++i) {
    RubricDiagnostics row;
    row.rubric_id = ids[i];
    row.theme_excerpt = excerpt(rubrics.label(i));
    const auto t = tally(rubrics.only(i), test, voting, backend);
    row.judgments = t.judgments;
    row.decisive = t.decisive;
    row.correct = t.correct;
    row.coverage = t.coverage();
    row.precision = t.precision();
    if (rubrics.size() >= 2)
      row.contribution =
          detail::hit_difference(full_hits, set_hits(rubrics.without(i), test, voting, backend), test.pairs.size());
    report.total_judgments += t.judgments;
    report.rows.push_back(std::move(row));
  }
  return report;
}

/// Aligned text table: theme, coverage %, precision %, contribution (accuracy
/// points).
inline std::string render_table(const DiagnosticsReport& report) {
  std::size_t width = std::string_view("Rubric Theme").size();
  for (const auto& r : report.rows) width = std::max(width, r.theme_excerpt.size());
  std::string out = fmt::format("{:<{}}  {:>12}  {:>13}  {:>16}\n", "Rubric Theme", width, "Coverage (%)",
                                "Precision (%)", "Contribution (%)");
  for (const auto& r : report.rows) {
    const auto precision = r.precision ? fmt::format("{:.2f}", *r.precision * 100.0) : std::string("n/a");
    out += fmt::format("{:<{}}  {:>12.2f}  {:>13}  {:>16.2f}\n", r.theme_excerpt, width, r.coverage * 100.0, precision,
                       r.contribution * 100.0);
  }
  return out;
}

inline json report_json(const DiagnosticsReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"rubric_id", r.rubric_id},
                    {"theme_excerpt", r.theme_excerpt},
                    {"coverage", r.coverage},
                    {"precision", r.precision ? json(*r.precision) : json(nullptr)},
                    {"contribution", r.contribution},
                    {"judgments", r.judgments}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"rubrics", rows},
              {"full_accuracy", report.full_accuracy},
              {"total_judgments", report.total_judgments}};
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_DIAGNOSTICS_HPP
