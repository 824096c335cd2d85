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

#ifndef RUBRICLEARN_RUBRIC_HPP
#define RUBRICLEARN_RUBRIC_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rubriclearn/error.hpp"

namespace rubriclearn {

enum class Preference { A, B };
enum class Verdict { A, B, Tie };

inline const char* to_string(Preference p) { return p == Preference::A ? "A" : "B"; }

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::A: return "A";
    case Verdict::B: return "B";
    case Verdict::Tie: return "tie";
  }
  return "tie";
}

inline Preference preference_from_string(std::string_view s) {
  if (s == "A" || s == "a") return Preference::A;
  if (s == "B" || s == "b") return Preference::B;
  throw Error(ErrorKind::input, "preferred must be \"A\" or \"B\", got \"" + std::string(s) + "\"");
}

inline Verdict verdict_from_string(std::string_view s) {
  if (s == "A" || s == "a") return Verdict::A;
  if (s == "B" || s == "b") return Verdict::B;
  if (s == "tie" || s == "Tie" || s == "TIE") return Verdict::Tie;
  throw Error(ErrorKind::input, "unknown verdict \"" + std::string(s) + "\"");
}

inline bool matches(Verdict v, Preference p) {
  return (v == Verdict::A && p == Preference::A) || (v == Verdict::B && p == Preference::B);
}

inline Verdict swap_sides(Verdict v) {
  if (v == Verdict::A) return Verdict::B;
  if (v == Verdict::B) return Verdict::A;
  return Verdict::Tie;
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

/// Stable content id: identical texts always share an id.
inline std::string content_hash(std::string_view text) { return hex64(fnv1a(text)); }

struct PreferencePair {
  std::string id;
  std::string query;  // may embed conversation history
  std::string response_a;
  std::string response_b;
  Preference preferred = Preference::A;
  std::optional<std::string> critique;

  void validate() const {
    if (id.empty()) throw Error(ErrorKind::input, "pair id is empty");
    if (query.empty()) throw Error(ErrorKind::input, "pair '" + id + "' has an empty query");
    if (response_a.empty() || response_b.empty())
      throw Error(ErrorKind::input, "pair '" + id + "' has an empty response");
  }

  bool operator==(const PreferencePair&) const = default;
};

struct Rubric {
  std::string id;
  std::string text;
  std::string source_pair_id;
  int batch_iteration = 0;
  int refine_iterations = 0;
  std::vector<double> embedding;  // empty when not yet embedded

  bool has_embedding() const { return !embedding.empty(); }
  bool operator==(const Rubric&) const = default;
};

inline Rubric make_rubric(std::string text, std::string source_pair_id = {}) {
  Rubric r;
  r.id = content_hash(text);
  r.text = std::move(text);
  r.source_pair_id = std::move(source_pair_id);
  return r;
}

struct Theme {
  std::string statement;
  std::vector<std::string> tips;

  bool operator==(const Theme&) const = default;
};

inline constexpr std::size_t kMaxTipsPerTheme = 5;

struct ThemeTipsRubric {
  std::vector<Theme> themes;

  /// Empty string when the structure is valid, otherwise the first violation.
  std::string violation(std::size_t theme_count) const {
    if (themes.empty()) return "no themes";
    if (themes.size() > theme_count)
      return std::to_string(themes.size()) + " themes exceed the limit of " + std::to_string(theme_count);
    for (std::size_t i = 0; i < themes.size(); ++i) {
      const auto& t = themes[i];
      const auto where = "theme " + std::to_string(i + 1);
      if (t.statement.empty()) return where + " has an empty statement";
      if (t.tips.empty()) return where + " has no tips";
      if (t.tips.size() > kMaxTipsPerTheme)
        return where + " has " + std::to_string(t.tips.size()) + " tips, limit is " + std::to_string(kMaxTipsPerTheme);
      for (const auto& tip : t.tips)
        if (tip.empty()) return where + " has an empty tip";
    }
    return {};
  }

  bool operator==(const ThemeTipsRubric&) const = default;
};

inline std::string render_theme(const Theme& t) {
  std::string out = "Theme: " + t.statement;
  for (std::size_t i = 0; i < t.tips.size(); ++i) out += "\n-Tip " + std::to_string(i + 1) + ": " + t.tips[i];
  return out;
}

/// The rubric text handed to a judge: either a flat list of criteria (one per
/// line) or a Theme-Tips hierarchy.
class RubricSet {
 public:
  RubricSet() = default;

  static RubricSet flat(std::vector<std::string> texts) {
    RubricSet s;
    s.flat_ = std::move(texts);
    return s;
  }

  static RubricSet flat(const std::vector<Rubric>& rubrics) {
    std::vector<std::string> texts;
    texts.reserve(rubrics.size());
    for (const auto& r : rubrics) texts.push_back(r.text);
    return flat(std::move(texts));
  }

  static RubricSet structured(ThemeTipsRubric rubric) {
    RubricSet s;
    s.themes_ = std::move(rubric);
    return s;
  }

  bool is_structured() const { return themes_.has_value(); }
  std::size_t size() const { return themes_ ? themes_->themes.size() : flat_.size(); }
  bool empty() const { return size() == 0; }

  /// Theme statement or flat rubric text of item `i`.
  const std::string& label(std::size_t i) const { return themes_ ? themes_->themes.at(i).statement : flat_.at(i); }

  RubricSet only(std::size_t i) const {
    check_index(i);
    RubricSet s;
    if (themes_) {
      s.themes_ = ThemeTipsRubric{{themes_->themes[i]}};
    } else {
      s.flat_ = {flat_[i]};
    }
    return s;
  }

  RubricSet without(std::size_t i) const {
    check_index(i);
    RubricSet s = *this;
    if (s.themes_) {
      s.themes_->themes.erase(s.themes_->themes.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      s.flat_.erase(s.flat_.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return s;
  }

  std::string render() const {
    std::string out;
    if (themes_) {
      for (std::size_t i = 0; i < themes_->themes.size(); ++i) {
        if (i > 0) out += "\n\n";
        out += render_theme(themes_->themes[i]);
      }
    } else {
      for (std::size_t i = 0; i < flat_.size(); ++i) {
        if (i > 0) out += "\n";
        out += flat_[i];
      }
    }
    return out;
  }

 private:
  void check_index(std::size_t i) const {
    if (i >= size()) throw Error(ErrorKind::input, "rubric index " + std::to_string(i) + " out of range");
  }

  std::vector<std::string> flat_;
  std::optional<ThemeTipsRubric> themes_;
};

}  // namespace rubriclearn

#endif  // RUBRICLEARN_RUBRIC_HPP
