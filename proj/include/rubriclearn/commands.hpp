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

#ifndef RUBRICLEARN_COMMANDS_HPP
#define RUBRICLEARN_COMMANDS_HPP

// The work behind each CLI subcommand, kept free of argument parsing so
// tests can drive it with in-process backends.

#include <fmt/format.h>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rubriclearn/config.hpp"
#include "rubriclearn/dataset.hpp"
#include "rubriclearn/diagnostics.hpp"
#include "rubriclearn/embedding_cache.hpp"
#include "rubriclearn/json_io.hpp"
#include "rubriclearn/mock_backends.hpp"
#include "rubriclearn/model_client.hpp"
#include "rubriclearn/pipeline.hpp"

namespace rubriclearn {

/// Sends judge prompts to one backend and everything else to another.
class RoutingChatBackend : public ChatBackend {
 public:
  RoutingChatBackend(ChatBackend& writer, ChatBackend& judge) : writer_(writer), judge_(judge) {}

  ChatResponse chat(const ChatRequest& request) override {
    request.validate();
    const auto& first = request.messages.front().content;
    const bool is_judge = first.rfind("## Task Description", 0) == 0;
    return (is_judge ? judge_ : writer_).chat(request);
  }

 private:
  ChatBackend& writer_;
  ChatBackend& judge_;
};

inline std::unique_ptr<ChatBackend> make_chat_backend(const BackendSpec& spec) {
  if (spec.kind == BackendKind::mock) return std::make_unique<OfflineChatBackend>();
  return std::make_unique<HttpBackend>(spec.http);
}

inline std::unique_ptr<EmbedBackend> make_embed_backend(const BackendSpec& spec) {
  if (spec.kind == BackendKind::mock) return std::make_unique<HashProjectionEmbedder>(spec.mock_dim, spec.mock_seed);
  return std::make_unique<HttpBackend>(spec.http);
}

/// Backends built from a RunConfig. `routed` sends judge prompts to the judge.
struct Backends {
  std::unique_ptr<ChatBackend> writer;
  std::unique_ptr<ChatBackend> judge;
  std::unique_ptr<EmbedBackend> embed;
  std::unique_ptr<RoutingChatBackend> routed;

  static Backends from(const RunConfig& c) {
    Backends b;
    b.writer = make_chat_backend(c.chat);
    b.judge = make_chat_backend(c.judge);
    b.embed = make_embed_backend(c.embed);
    b.routed = std::make_unique<RoutingChatBackend>(*b.writer, *b.judge);
    return b;
  }
};

// Artifact names inside the output directory.
inline constexpr const char* kPoolFile = "pool.jsonl";
inline constexpr const char* kCoreFile = "core.json";
inline constexpr const char* kRubricsFile = "rubrics.json";
inline constexpr const char* kReportFile = "run_report.json";

inline json run_report_json(const ExtractionResult& r, const RunConfig& c) {
  const auto& p = c.pipeline;
  return json{{"schema_version", kSchemaVersion},
              {"stop_reason", to_string(r.stop_reason)},
              {"batch_iterations", r.batches.size()},
              {"pairs_processed", r.pairs_processed},
              {"pool_size", r.pool_size},
              {"core_size", r.core.rubric_ids.size()},
              {"core_coding_rate", r.core.trace.final_rate()},
              {"theme_count", r.structured.themes.size()},
              {"batch_gain_history", r.batch_gain_history},
              {"batches", r.batches},
              {"config",
               {{"batch_size", p.batch_size},
                {"e_max", p.e_max},
                {"max_rubrics_per_pair", p.max_rubrics_per_pair},
                {"theme_count", p.theme_count},
                {"seed", p.seed},
                {"max_batch_iterations", p.max_batch_iterations},
                {"tau_min", p.selection.tau_min},
                {"patience", p.selection.patience},
                {"epsilon", p.selection.params.epsilon}}}};
}

inline void write_extraction_artifacts(const std::filesystem::path& dir, const ExtractionResult& r,
                                       const RunConfig& c) {
  save_pool(dir / kPoolFile, r.pool);
  save_core(dir / kCoreFile, {r.core, r.batch_gain_history});
  save_theme_tips(dir / kRubricsFile, r.structured);
  write_file_atomic(dir / kReportFile, dump(run_report_json(r, c)) + "\n");
}

struct ExtractOptions {
  bool resume = false;
  std::function<void(const PipelineState&)> after_iteration;  // test hook
};

/// Full extraction with the embedding cache and checkpointing; writes the
/// four artifacts into paths.output_dir.
inline ExtractionResult cmd_extract(const RunConfig& config, ChatBackend& chat, EmbedBackend& embedder,
                                    const ExtractOptions& options = {}) {
  if (config.paths.dataset.empty()) throw Error(ErrorKind::config, "paths.dataset is not set");
  const auto dataset = load_pairs(config.paths.dataset);
  const auto& dir = config.paths.output_dir;
  std::filesystem::create_directories(dir);

  ExtractionHooks hooks;
  hooks.checkpoint_path = config.paths.checkpoint_file();
  hooks.after_iteration = options.after_iteration;
  if (options.resume) {
    if (!std::filesystem::exists(*hooks.checkpoint_path))
      throw Error(ErrorKind::checkpoint, "no checkpoint to resume at " + hooks.checkpoint_path->string());
    hooks.resume_from = load_checkpoint(*hooks.checkpoint_path);
  }

  const auto cache_path = config.paths.cache_file();
  EmbeddingCache cache;
  cache.load(cache_path);
  CachedEmbedder cached(embedder, cache);
  struct SaveCache {  // keep paid-for embeddings even when the run fails
    EmbeddingCache& cache;
    std::filesystem::path path;
    ~SaveCache() {
      try {
        cache.save(path);
      } catch (...) {
      }
    }
  } save_cache{cache, cache_path};

  auto result = run_extraction(dataset, config.pipeline, chat, cached, hooks);
  write_extraction_artifacts(dir, result, config);
  return result;
}

/// Reselects a core set from a saved pool. Rubrics without embeddings are
/// embedded first.
inline CoreSet cmd_select(const std::filesystem::path& pool_path, const RunConfig& config, EmbedBackend& embedder,
                          const std::filesystem::path& out_path) {
  auto pool = load_pool(pool_path);
  if (pool.empty()) throw Error(ErrorKind::input, pool_path.string() + ": pool is empty");
  std::vector<std::string> texts;
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!pool[i].has_embedding()) {
      missing.push_back(i);
      texts.push_back(pool[i].text);
    }
  if (!missing.empty()) {
    auto vectors = embedder.embed(texts);
    for (std::size_t k = 0; k < missing.size(); ++k) pool[missing[k]].embedding = std::move(vectors[k]);
  }
  std::vector<SelectionCandidate> candidates;
  for (const auto& r : pool) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(r.embedding.data(), static_cast<Eigen::Index>(r.embedding.size()));
    if (!is_unit(v)) normalize_unit(v);
    candidates.push_back({r.id, std::move(v)});
  }
  auto core = greedy_select(candidates, config.pipeline.selection);
  save_core(out_path, {core, {}});
  return core;
}

struct LoadedRubrics {
  RubricSet set;
  std::vector<std::string> ids;
};

/// A Theme-Tips file (.json with "themes") or a rubric pool (.jsonl).
inline LoadedRubrics load_rubric_set(const std::filesystem::path& path) {
  LoadedRubrics out;
  if (path.extension() == ".jsonl") {
    const auto pool = load_pool(path);
    out.set = RubricSet::flat(pool);
    for (const auto& r : pool) out.ids.push_back(r.id);
  } else {
    auto themes = load_theme_tips(path);
    for (std::size_t i = 0; i < themes.themes.size(); ++i) out.ids.push_back("theme_" + std::to_string(i + 1));
    out.set = RubricSet::structured(std::move(themes));
  }
  if (out.set.empty()) throw Error(ErrorKind::input, path.string() + ": no rubrics");
  return out;
}

inline DiagnosticsReport cmd_diagnose(const std::filesystem::path& rubrics_path, const std::filesystem::path& test_path,
                                      const RunConfig& config, ChatBackend& judge_backend) {
  const auto rubrics = load_rubric_set(rubrics_path);
  TestSet test{load_pairs(test_path)};
  auto report = diagnose_all(rubrics.set, test, config.voting, judge_backend, rubrics.ids);
  const auto& dir = config.paths.output_dir;
  write_file_atomic(dir / "diagnostics.json", dump(report_json(report)) + "\n");
  write_file_atomic(dir / "diagnostics.txt", render_table(report));
  return report;
}

inline Verdict cmd_judge(const std::filesystem::path& rubrics_path, const std::string& query,
                         const std::string& response_a, const std::string& response_b, ChatBackend& judge_backend) {
  const auto rubrics = load_rubric_set(rubrics_path);
  return judge(query, response_a, response_b, rubrics.set, judge_backend).verdict;
}

inline std::string trace_csv(const SelectionTrace& trace) {
  std::string out = "step,rubric_id,marginal_gain,coding_rate_after\n";
  for (std::size_t i = 0; i < trace.picks.size(); ++i) {
    const auto& p = trace.picks[i];
    out += fmt::format("{},{},{:.17g},{:.17g}\n", i + 1, p.rubric_id, p.marginal_gain, p.coding_rate_after);
  }
  return out;
}

inline std::string batch_gain_csv(const std::vector<double>& gains) {
  std::string out = "batch,gain\n";
  for (std::size_t i = 0; i < gains.size(); ++i) out += fmt::format("{},{:.17g}\n", i + 1, gains[i]);
  return out;
}

/// Writes trace.csv and batch_gains.csv into `out_dir`.
inline void cmd_export_trace(const std::filesystem::path& core_path, const std::filesystem::path& out_dir) {
  const auto core = load_core(core_path);
  write_file_atomic(out_dir / "trace.csv", trace_csv(core.core.trace));
  write_file_atomic(out_dir / "batch_gains.csv", batch_gain_csv(core.batch_gain_history));
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_COMMANDS_HPP
