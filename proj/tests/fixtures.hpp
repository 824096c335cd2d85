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

// Shared test fixtures: synthetic datasets with known rubric geometry.

#ifndef RUBRICLEARN_TESTS_FIXTURES_HPP
#define RUBRICLEARN_TESTS_FIXTURES_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "rubriclearn/rubric.hpp"

namespace fixture {

inline const std::vector<std::string>& topic_words() {
  static const std::vector<std::string> words{"alpha", "bravo", "gamma", "delta"};
  return words;
}

/// Pairs whose better answer names two of the four topic words and whose
/// worse answer names none. Under the offline chat mock every pair validates
/// on the first try with one rubric per topic word; under a KeywordEmbedder
/// over topic_words() each rubric lies on its topic's axis.
inline std::vector<rubriclearn::PreferencePair> topic_pairs(int copies = 2) {
  std::vector<rubriclearn::PreferencePair> out;
  const auto& w = topic_words();
  int n = 0;
  for (int copy = 0; copy < copies; ++copy) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = i + 1; j < w.size(); ++j) {
        rubriclearn::PreferencePair p;
        p.id = "topic-" + std::to_string(++n);
        p.query = "Question " + std::to_string(n) + " about " + w[i] + " and " + w[j];
        const std::string good = "It depends on " + w[i] + " and " + w[j] + ".";
        const std::string bad = "It depends.";
        const bool flip = n % 2 == 0;
        p.response_a = flip ? bad : good;
        p.response_b = flip ? good : bad;
        p.preferred = flip ? rubriclearn::Preference::B : rubriclearn::Preference::A;
        out.push_back(p);
      }
    }
  }
  return out;
}

/// A unique scratch directory under the system temp dir, removed on exit.
class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(std::filesystem::temp_directory_path() / ("rubriclearn-" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture

#endif  // RUBRICLEARN_TESTS_FIXTURES_HPP
