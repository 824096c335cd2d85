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

#ifndef RUBRICLEARN_EMBEDDING_CACHE_HPP
#define RUBRICLEARN_EMBEDDING_CACHE_HPP

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rubriclearn/json_io.hpp"
#include "rubriclearn/model_client.hpp"

namespace rubriclearn {

/// Embeddings keyed by (model name, content hash of the text).
class EmbeddingCache {
 public:
  static std::string key(const std::string& model, const std::string& text) {
    return model + "/" + content_hash(text);
  }

  std::optional<std::vector<double>> find(const std::string& model, const std::string& text) const {
    std::lock_guard lock(mutex_);
    const auto it = entries_.find(key(model, text));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& model, const std::string& text, std::vector<double> v) {
    std::lock_guard lock(mutex_);
    entries_[key(model, text)] = std::move(v);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  void save(const std::filesystem::path& path) const {
    json j;
    {
      std::lock_guard lock(mutex_);
      j = json{{"schema_version", kSchemaVersion}, {"entries", entries_}};
    }
    write_file_atomic(path, dump(j, -1) + "\n");
  }

  /// Replaces the contents with the file's; a missing file leaves the cache empty.
  void load(const std::filesystem::path& path) {
    std::map<std::string, std::vector<double>> entries;
    if (std::filesystem::exists(path)) {
      const auto j = parse_json(read_file(path), path.string());
      check_schema(j, path.string());
      json_guard(path.string(), [&] {
        j.at("entries").get_to(entries);
        return 0;
      });
    }
    std::lock_guard lock(mutex_);
    entries_ = std::move(entries);
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<double>> entries_;
};

/// Serves hits from the cache and forwards only the misses (deduplicated).
class CachedEmbedder : public EmbedBackend {
 public:
  CachedEmbedder(EmbedBackend& inner, EmbeddingCache& cache) : inner_(inner), cache_(cache) {}

  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
    if (texts.empty()) throw Error(ErrorKind::input, "embed needs at least one text");
    const auto model = inner_.model_name();
    std::vector<std::vector<double>> out(texts.size());
    std::vector<std::string> misses;
    std::map<std::string, std::vector<std::size_t>> where;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (auto hit = cache_.find(model, texts[i])) {
        out[i] = std::move(*hit);
        continue;
      }
      auto& slots = where[texts[i]];
      if (slots.empty()) misses.push_back(texts[i]);
      slots.push_back(i);
    }
    if (!misses.empty()) {
      auto fresh = inner_.embed(misses);
      for (std::size_t m = 0; m < misses.size(); ++m) {
        for (auto i : where[misses[m]]) out[i] = fresh[m];
        cache_.put(model, misses[m], std::move(fresh[m]));
      }
      forwarded_ += misses.size();
    }
    return out;
  }

  std::string model_name() const override { return inner_.model_name(); }
  std::size_t forwarded() const { return forwarded_; }

 private:
  EmbedBackend& inner_;
  EmbeddingCache& cache_;
  std::size_t forwarded_ = 0;
};

}  // namespace rubriclearn

#endif  // RUBRICLEARN_EMBEDDING_CACHE_HPP
