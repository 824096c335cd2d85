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

#ifndef RUBRICLEARN_MOCK_BACKENDS_HPP
#define RUBRICLEARN_MOCK_BACKENDS_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rubriclearn/error.hpp"
#include "rubriclearn/model_client.hpp"
#include "rubriclearn/prompts.hpp"
#include "rubriclearn/rubric.hpp"

namespace rubriclearn {

/// Lowercased alphanumeric runs.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Replays canned responses. Keyword rules are tried first, in insertion
/// order, against the joined request text; unmatched requests consume the
/// ordered script. Running out of script is a transport error.
class ScriptedChatBackend : public ChatBackend {
 public:
  ScriptedChatBackend() = default;
  explicit ScriptedChatBackend(std::vector<std::string> script) : script_(std::move(script)) {}

  ScriptedChatBackend& on(std::string keyword, std::vector<std::string> responses, bool cycle = false) {
    std::lock_guard lock(mutex_);
    rules_.push_back({std::move(keyword), std::move(responses), cycle, 0});
    return *this;
  }

  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    const auto text = request.joined();
    for (auto& rule : rules_) {
      if (text.find(rule.keyword) == std::string::npos) continue;
      if (rule.next >= rule.responses.size()) {
        if (!rule.cycle || rule.responses.empty())
          throw Error(ErrorKind::transport, "script for keyword '" + rule.keyword + "' is exhausted");
        rule.next = 0;
      }
      return {rule.responses[rule.next++], {}};
    }
    if (next_ >= script_.size()) throw Error(ErrorKind::transport, "scripted backend is exhausted");
    return {script_[next_++], {}};
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

 private:
  struct Rule {
    std::string keyword;
    std::vector<std::string> responses;
    bool cycle;
    std::size_t next;
  };

  mutable std::mutex mutex_;
  std::vector<std::string> script_;
  std::size_t next_ = 0;
  std::vector<Rule> rules_;
  std::vector<ChatRequest> requests_;
};

/// Answers through a caller-supplied function; records every request.
class CallbackChatBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  explicit CallbackChatBackend(Handler handler) : handler_(std::move(handler)) {}

  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(request);
    }
    return {handler_(request), {}};
  }

  std::vector<ChatRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  Handler handler_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit_uniform(std::uint64_t& state) {
  return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

/// Seeded random projection of token counts: each distinct token maps to a
/// fixed Gaussian direction and a text embeds as the normalized count-weighted
/// sum. Identical texts give identical vectors, duplicated token bags are
/// collinear, and disjoint vocabularies are nearly orthogonal.
class HashProjectionEmbedder : public EmbedBackend {
 public:
  explicit HashProjectionEmbedder(std::size_t dim = 256, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw Error(ErrorKind::config, "embedding dimension must be positive");
  }

  std::string model_name() const override { return "hash-projection-" + std::to_string(dim_) + "-" + std::to_string(seed_); }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (texts.empty()) throw Error(ErrorKind::input, "embed needs at least one text");
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  std::vector<double> embed_one(std::string_view text) const {
    if (text.empty()) throw Error(ErrorKind::input, "embed inputs must be non-empty");
    std::map<std::string, int> counts;
    for (auto& tok : tokenize(text)) ++counts[tok];
    if (counts.empty()) counts[std::string(text)] = 1;
    std::vector<double> v(dim_, 0.0);
    for (const auto& [tok, count] : counts) {
      std::uint64_t state = fnv1a(tok) ^ (seed_ * 0x9e3779b97f4a7c15ULL);
      for (std::size_t i = 0; i < dim_; i += 2) {
        const double u1 = detail::unit_uniform(state);
        const double u2 = detail::unit_uniform(state);
        const double r = std::sqrt(-2.0 * std::log(u1));
        v[i] += count * r * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < dim_) v[i + 1] += count * r * std::sin(2.0 * std::numbers::pi * u2);
      }
    }
    return detail::unit_normalized(std::move(v));
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Maps each listed keyword to its own axis; a text embeds as the normalized
/// sum of the axes of the keywords among its tokens. Texts with none of the
/// keywords land on one extra shared axis.
class KeywordEmbedder : public EmbedBackend {
 public:
  explicit KeywordEmbedder(std::vector<std::string> keywords) : keywords_(std::move(keywords)) {
    for (auto& k : keywords_) std::transform(k.begin(), k.end(), k.begin(), [](unsigned char c) { return std::tolower(c); });
  }

  std::string model_name() const override { return "keyword-axes-" + std::to_string(keywords_.size()); }
  std::size_t dim() const { return keywords_.size() + 1; }

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (texts.empty()) throw Error(ErrorKind::input, "embed needs at least one text");
    std::vector<std::vector<double>> out;
    for (const auto& t : texts) {
      if (t.empty()) throw Error(ErrorKind::input, "embed inputs must be non-empty");
      const auto toks = tokenize(t);
      const std::set<std::string> bag(toks.begin(), toks.end());
      std::vector<double> v(dim(), 0.0);
      bool any = false;
      for (std::size_t i = 0; i < keywords_.size(); ++i) {
        if (bag.count(keywords_[i])) {
          v[i] = 1.0;
          any = true;
        }
      }
      if (!any) v.back() = 1.0;
      out.push_back(detail::unit_normalized(std::move(v)));
    }
    return out;
  }

 private:
  std::vector<std::string> keywords_;
};

namespace detail {

inline std::string_view between(std::string_view text, std::string_view start, std::string_view end) {
  const auto s = text.find(start);
  if (s == std::string_view::npos) return {};
  const auto from = s + start.size();
  const auto e = end.empty() ? std::string_view::npos : text.find(end, from);
  return text.substr(from, e == std::string_view::npos ? std::string_view::npos : e - from);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline int number_after(std::string_view text, std::string_view marker, int fallback) {
  const auto pos = text.find(marker);
  if (pos == std::string_view::npos) return fallback;
  int value = 0;
  bool any = false;
  for (auto i = pos + marker.size(); i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    value = value * 10 + (text[i] - '0');
    any = true;
  }
  return any ? value : fallback;
}

inline bool is_stopword(const std::string& w) {
  static const std::set<std::string> words = {
      "about", "above", "after", "again", "also", "because", "been", "before", "being", "between", "both",
      "could", "does", "doing", "down", "during", "each", "from", "further", "have", "having", "here",
      "into", "just", "more", "most", "only", "other", "over", "same", "should", "some", "such", "than",
      "that", "their", "them", "then", "there", "these", "they", "this", "those", "through", "under",
      "until", "very", "what", "when", "where", "which", "while", "with", "would", "your", "yours", "will",
      "answer", "response", "responses", "prefer", "explicitly", "covers", "better"};
  return words.count(w) > 0;
}

inline std::vector<std::string> content_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text))
    if (t.size() >= 4 && !is_stopword(t)) out.push_back(std::move(t));
  return out;
}

/// Words inside single quotes, in order.
inline std::vector<std::string> quoted_words(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find('\'', pos)) != std::string_view::npos) {
    const auto end = text.find('\'', pos + 1);
    if (end == std::string_view::npos) break;
    for (auto& t : tokenize(text.substr(pos + 1, end - pos - 1))) out.push_back(std::move(t));
    pos = end + 1;
  }
  return out;
}

}  // namespace detail

/// Deterministic offline stand-in for a chat model that understands the four
/// pipeline prompts. Rubrics name words that only the better answer uses; the
/// judge counts which response contains more of the words a rubric set names.
/// Lets the whole pipeline run without a network.
class OfflineChatBackend : public ChatBackend {
 public:
  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    std::string prompt;
    for (const auto& m : request.messages)
      if (m.role == Role::user) {
        prompt = m.content;
        break;
      }
    if (prompt.rfind("##Task Description", 0) == 0) return {structure(prompt), {}};
    if (prompt.rfind("## Task Description", 0) == 0) return {judge(prompt), {}};
    if (prompt.rfind("## Overview", 0) == 0) return {write_rubrics(prompt), {}};
    return {"I can only help with rubric prompts.", {}};
  }

 private:
  static std::string write_rubrics(std::string_view prompt) {
    const int number = std::max(1, detail::number_after(prompt, "LESS THAN OR EQUAL TO ", 5));
    const int better = detail::number_after(prompt, "Answer ", 1);
    const auto a1 = prompts::extract_last_tag(prompt, "answer_1").value_or("");
    const auto a2 = prompts::extract_last_tag(prompt, "answer_2").value_or("");
    const auto& good = better == 2 ? a2 : a1;
    const auto& bad = better == 2 ? a1 : a2;

    std::set<std::string> used;
    if (const auto prev = detail::between(prompt, "## Previous Round rubrics", "## Output Format Requirements");
        !prev.empty()) {
      for (auto& w : detail::quoted_words(prev)) used.insert(std::move(w));
    }

    const auto bad_words = detail::content_words(bad);
    const std::set<std::string> bad_set(bad_words.begin(), bad_words.end());
    std::vector<std::string> fresh, reused;
    std::set<std::string> seen;
    for (auto& w : detail::content_words(good)) {
      if (bad_set.count(w) || !seen.insert(w).second) continue;
      (used.count(w) ? reused : fresh).push_back(w);
    }
    fresh.insert(fresh.end(), reused.begin(), reused.end());

    std::string body;
    if (fresh.empty()) {
      body = "Prefer the response that answers the request most completely.";
    } else {
      for (int i = 0; i < number && i < static_cast<int>(fresh.size()); ++i) {
        if (i > 0) body += "\n";
        body += "Prefer the response that explicitly covers '" + fresh[static_cast<std::size_t>(i)] + "'.";
      }
    }
    return "<rubrics>\n" + body + "\n</rubrics>";
  }

  static std::string judge(std::string_view prompt) {
    const auto rubrics = detail::between(prompt, "## Rubrics\n", "\n\n## Process");
    const auto a = detail::between(prompt, "## Response A\n", "\n\n## Response B\n");
    const auto b = detail::between(prompt, "## Response B\n", "\n\n## Output Requirement");
    auto keys = detail::quoted_words(rubrics);
    if (keys.empty()) keys = detail::content_words(rubrics);
    const std::set<std::string> key_set(keys.begin(), keys.end());
    const auto score = [&](std::string_view text) {
      const auto toks = tokenize(text);
      const std::set<std::string> bag(toks.begin(), toks.end());
      return std::count_if(key_set.begin(), key_set.end(), [&](const std::string& k) { return bag.count(k) > 0; });
    };
    const auto sa = score(a);
    const auto sb = score(b);
    const char* verdict = sa > sb ? "A" : (sb > sa ? "B" : "tie");
    return std::string("<preference>") + verdict + "</preference>";
  }

  static std::string structure(std::string_view prompt) {
    const int themes = std::max(1, detail::number_after(prompt, "LESS THAN OR EQUAL TO ", 5));
    std::vector<std::string> suggestions;
    for (int i = 1;; ++i) {
      const auto tag = "example_" + std::to_string(i);
      const auto block = detail::between(prompt, "<" + tag + ">", "</" + tag + ">");
      if (block.empty()) break;
      auto s = detail::trim(detail::between(block, "<suggestion>", "</suggestion>"));
      if (!s.empty()) suggestions.push_back(std::move(s));
    }
    if (suggestions.empty()) suggestions.push_back("Prefer the response that answers the request most completely.");

    const std::size_t groups = std::min<std::size_t>(static_cast<std::size_t>(themes),
                                                     (suggestions.size() + kMaxTipsPerTheme - 1) / kMaxTipsPerTheme);
    const std::size_t per = (suggestions.size() + groups - 1) / groups;
    std::string out = "<rubrics>\n";
    for (std::size_t g = 0; g < groups; ++g) {
      const auto begin = g * per;
      const auto end = std::min({suggestions.size(), begin + per, begin + kMaxTipsPerTheme});
      if (begin >= end) break;
      std::vector<std::string> words;
      for (auto i = begin; i < end && words.size() < 3; ++i)
        for (auto& w : detail::quoted_words(suggestions[i]))
          if (words.size() < 3 && std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
      std::string theme = "Cover the specific content the request calls for";
      if (!words.empty()) {
        theme = "Cover";
        for (std::size_t i = 0; i < words.size(); ++i) theme += (i == 0 ? " '" : ", '") + words[i] + "'";
        theme += " when the request calls for it";
      }
      if (g > 0) out += "\n";
      out += "Theme: " + theme + ".\n";
      for (auto i = begin; i < end; ++i) out += "-Tip " + std::to_string(i - begin + 1) + ": " + suggestions[i] + "\n";
    }
    return out + "</rubrics>";
  }
};

}  // namespace rubriclearn

#endif  // RUBRICLEARN_MOCK_BACKENDS_HPP
