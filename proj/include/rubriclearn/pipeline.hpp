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

#ifndef RUBRICLEARN_PIPELINE_HPP
#define RUBRICLEARN_PIPELINE_HPP

#include <spdlog/spdlog.h>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rubriclearn/coding_rate.hpp"
#include "rubriclearn/json_io.hpp"
#include "rubriclearn/model_client.hpp"
#include "rubriclearn/refinement.hpp"
#include "rubriclearn/selection.hpp"
#include "rubriclearn/structuring.hpp"

namespace rubriclearn {

struct PipelineConfig {
  std::size_t batch_size = 10;
  int e_max = 10;
  int max_rubrics_per_pair = 5;
  SelectionConfig selection;
  int theme_count = 5;
  std::uint64_t seed = 0;
  std::size_t max_batch_iterations = 100;
  std::size_t parallelism = 1;
  bool randomize_order = true;

  void validate() const {
    if (batch_size < 1) throw Error(ErrorKind::input, "pipeline.batch_size must be at least 1");
    if (e_max < 1) throw Error(ErrorKind::input, "pipeline.e_max must be at least 1");
    if (max_rubrics_per_pair < 1) throw Error(ErrorKind::input, "pipeline.max_rubrics_per_pair must be at least 1");
    if (theme_count < 1) throw Error(ErrorKind::input, "pipeline.theme_count must be at least 1");
    if (max_batch_iterations < 1) throw Error(ErrorKind::input, "pipeline.max_batch_iterations must be at least 1");
    if (parallelism < 1) throw Error(ErrorKind::input, "pipeline.parallelism must be at least 1");
    selection.validate();
  }
};

enum class ExtractionStop { early_stop, max_iterations, dataset_exhausted };

inline const char* to_string(ExtractionStop s) {
  switch (s) {
    case ExtractionStop::early_stop: return "early_stop";
    case ExtractionStop::max_iterations: return "max_iterations";
    case ExtractionStop::dataset_exhausted: return "dataset_exhausted";
  }
  return "unknown";
}

inline ExtractionStop extraction_stop_from_string(const std::string& s) {
  if (s == "early_stop") return ExtractionStop::early_stop;
  if (s == "max_iterations") return ExtractionStop::max_iterations;
  if (s == "dataset_exhausted") return ExtractionStop::dataset_exhausted;
  throw Error(ErrorKind::input, "unknown extraction stop reason '" + s + "'");
}

/// Bookkeeping for one batch iteration.
struct BatchRecord {
  std::size_t iteration = 0;  // 1-based
  std::vector<std::string> pair_ids;
  std::size_t validated = 0;
  std::size_t failed = 0;
  std::size_t new_rubrics = 0;
  double gain = 0.0;
  double coding_rate = 0.0;
  std::size_t core_size = 0;

  bool operator==(const BatchRecord&) const = default;
};

/// Everything needed to continue a run after the last finished iteration.
struct PipelineState {
  std::string config_fingerprint;
  std::string rng_state;
  std::vector<std::string> remaining_ids;  // not yet sampled, current shuffle order
  std::vector<std::string> processed_ids;
  std::vector<Rubric> pool;
  CoreSet core;
  std::vector<double> batch_gain_history;
  std::vector<BatchRecord> batches;
  std::optional<ExtractionStop> stop_reason;

  bool operator==(const PipelineState&) const = default;
};

struct ExtractionResult {
  CoreSet core;
  ThemeTipsRubric structured;
  std::vector<Rubric> pool;
  std::size_t pool_size = 0;
  std::size_t pairs_processed = 0;
  std::vector<double> batch_gain_history;
  std::vector<BatchRecord> batches;
  ExtractionStop stop_reason = ExtractionStop::dataset_exhausted;
};

struct ExtractionHooks {
  std::optional<std::filesystem::path> checkpoint_path;  // written after every iteration
  std::optional<PipelineState> resume_from;
  std::function<void(const PipelineState&)> after_iteration;  // runs after the checkpoint is on disk
};

// Checkpoint serialization.

inline void to_json(json& j, const BatchRecord& b) {
  j = json{{"iteration", b.iteration}, {"pair_ids", b.pair_ids},       {"validated", b.validated},
           {"failed", b.failed},       {"new_rubrics", b.new_rubrics}, {"gain", b.gain},
           {"coding_rate", b.coding_rate}, {"core_size", b.core_size}};
}

inline void from_json(const json& j, BatchRecord& b) {
  j.at("iteration").get_to(b.iteration);
  j.at("pair_ids").get_to(b.pair_ids);
  j.at("validated").get_to(b.validated);
  j.at("failed").get_to(b.failed);
  j.at("new_rubrics").get_to(b.new_rubrics);
  j.at("gain").get_to(b.gain);
  j.at("coding_rate").get_to(b.coding_rate);
  j.at("core_size").get_to(b.core_size);
}

inline json checkpoint_json(const PipelineState& s) {
  return json{{"schema_version", kSchemaVersion},
              {"kind", "checkpoint"},
              {"config_fingerprint", s.config_fingerprint},
              {"rng_state", s.rng_state},
              {"remaining_ids", s.remaining_ids},
              {"processed_ids", s.processed_ids},
              {"pool", s.pool},
              {"core", s.core},
              {"batch_gain_history", s.batch_gain_history},
              {"batches", s.batches},
              {"stop_reason", s.stop_reason ? json(to_string(*s.stop_reason)) : json(nullptr)}};
}

inline PipelineState checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", std::string{}) != "checkpoint")
    throw Error(ErrorKind::checkpoint, "not a checkpoint document");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kSchemaVersion)
    throw Error(ErrorKind::checkpoint, "checkpoint schema_version " + j.value("schema_version", json()).dump() +
                                           " does not match supported version " + std::to_string(kSchemaVersion));
  try {
    PipelineState s;
    j.at("config_fingerprint").get_to(s.config_fingerprint);
    j.at("rng_state").get_to(s.rng_state);
    j.at("remaining_ids").get_to(s.remaining_ids);
    j.at("processed_ids").get_to(s.processed_ids);
    j.at("pool").get_to(s.pool);
    j.at("core").get_to(s.core);
    j.at("batch_gain_history").get_to(s.batch_gain_history);
    j.at("batches").get_to(s.batches);
    if (!j.at("stop_reason").is_null()) s.stop_reason = extraction_stop_from_string(j.at("stop_reason").get<std::string>());
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::checkpoint, std::string("malformed checkpoint: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::checkpoint, "malformed checkpoint: " + e.message());
  }
}

inline void save_checkpoint(const std::filesystem::path& path, const PipelineState& s) {
  write_file_atomic(path, dump(checkpoint_json(s)) + "\n");
}

inline PipelineState load_checkpoint(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::checkpoint, e.message());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::checkpoint, path.string() + " is corrupt: " + e.what());
  }
  return checkpoint_from_json(j);
}

namespace detail {

/// Uniform integer in [0, n) by rejection, so the stream is the same on every
/// standard library.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = -n % n;  // 2^64 mod n
  while (true) {
    const std::uint64_t x = rng();
    if (x >= limit) return x % n;
  }
}

inline std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

inline std::mt19937_64 rng_from_string(const std::string& s) {
  std::mt19937_64 rng;
  std::istringstream in(s);
  in >> rng;
  if (in.fail()) throw Error(ErrorKind::checkpoint, "unreadable RNG state");
  return rng;
}

/// Draws up to `b` ids from the front-shuffled `remaining` (partial
/// Fisher-Yates) and removes them.
inline std::vector<std::string> sample_without_replacement(std::vector<std::string>& remaining, std::size_t b,
                                                           std::mt19937_64& rng) {
  const auto take = std::min(b, remaining.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(bounded(rng, remaining.size() - i));
    std::swap(remaining[i], remaining[j]);
  }
  std::vector<std::string> batch(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(take));
  remaining.erase(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(take));
  return batch;
}

inline std::string fingerprint(const std::vector<PreferencePair>& dataset, const PipelineConfig& c) {
  json j{{"batch_size", c.batch_size},
         {"e_max", c.e_max},
         {"max_rubrics_per_pair", c.max_rubrics_per_pair},
         {"theme_count", c.theme_count},
         {"seed", c.seed},
         {"max_batch_iterations", c.max_batch_iterations},
         {"randomize_order", c.randomize_order},
         {"tau_min", c.selection.tau_min},
         {"patience", c.selection.patience},
         {"max_size", c.selection.max_size ? json(*c.selection.max_size) : json(nullptr)},
         {"epsilon", c.selection.params.epsilon},
         {"jitter", c.selection.params.jitter}};
  std::string ids;
  for (const auto& p : dataset) ids += p.id + '\n';
  j["dataset"] = content_hash(ids);
  return content_hash(dump(j, -1));
}

}  // namespace detail

inline PipelineState initial_state(const std::vector<PreferencePair>& dataset, const PipelineConfig& config) {
  PipelineState s;
  s.config_fingerprint = detail::fingerprint(dataset, config);
  s.rng_state = detail::rng_to_string(std::mt19937_64(config.seed));
  for (const auto& p : dataset) s.remaining_ids.push_back(p.id);
  return s;
}

/// Batch-iterative extraction: sample a batch, refine each pair, admit the
/// rubrics of validated pairs into the pool, reselect the core over
/// core + new rubrics, and stop once the per-batch coding-rate gain has
/// stalled, the iteration cap is hit or the data runs out. The final core is
/// then structured into Theme-Tips form.
inline ExtractionResult run_extraction(const std::vector<PreferencePair>& dataset, const PipelineConfig& config,
                                       ChatBackend& chat_backend, EmbedBackend& embed_backend,
                                       const ExtractionHooks& hooks = {}) {
  config.validate();
  if (dataset.empty()) throw Error(ErrorKind::input, "dataset is empty");
  std::map<std::string, const PreferencePair*> by_id;
  for (const auto& p : dataset) {
    p.validate();
    if (!by_id.emplace(p.id, &p).second) throw Error(ErrorKind::input, "duplicate pair id '" + p.id + "'");
  }

  PipelineState state = initial_state(dataset, config);
  if (hooks.resume_from) {
    if (hooks.resume_from->config_fingerprint != state.config_fingerprint)
      throw Error(ErrorKind::checkpoint, "checkpoint was written for a different configuration or dataset");
    state = *hooks.resume_from;
    for (const auto& id : state.remaining_ids)
      if (!by_id.count(id)) throw Error(ErrorKind::checkpoint, "checkpoint refers to unknown pair '" + id + "'");
  }
  auto rng = detail::rng_from_string(state.rng_state);

  std::map<std::string, Eigen::VectorXd> embedding_of;
  for (const auto& r : state.pool)
    embedding_of[r.id] = Eigen::Map<const Eigen::VectorXd>(r.embedding.data(), static_cast<Eigen::Index>(r.embedding.size()));

  RefinementOptions refine_options;
  refine_options.e_max = config.e_max;
  refine_options.max_rubrics = config.max_rubrics_per_pair;
  refine_options.seed = config.seed;
  refine_options.randomize_order = config.randomize_order;

  while (!state.stop_reason) {
    if (state.batches.size() >= config.max_batch_iterations) {
      state.stop_reason = ExtractionStop::max_iterations;
      break;
    }
    if (state.remaining_ids.empty()) {
      state.stop_reason = ExtractionStop::dataset_exhausted;
      break;
    }

    // Work on copies so a failed iteration leaves `state` at the last checkpoint.
    auto remaining = state.remaining_ids;
    const auto batch_ids = detail::sample_without_replacement(remaining, config.batch_size, rng);
    const std::size_t iteration = state.batches.size() + 1;
    std::vector<PreferencePair> batch;
    for (const auto& id : batch_ids) batch.push_back(*by_id.at(id));

    const auto outcomes = refine_batch(batch, chat_backend, refine_options, config.parallelism);
    BatchRecord record;
    record.iteration = iteration;
    record.pair_ids = batch_ids;
    std::vector<Rubric> fresh;
    std::set<std::string> seen;
    for (const auto& r : state.pool) seen.insert(r.id);
    for (const auto& o : outcomes) {
      if (o.status == RefinementStatus::error)
        throw Error(o.error_kind, "pair '" + o.pair_id + "' aborted the iteration: " + o.error_message);
      if (o.status != RefinementStatus::validated) {
        ++record.failed;
        continue;
      }
      ++record.validated;
      for (auto r : o.rubrics) {
        if (!seen.insert(r.id).second) continue;
        r.batch_iteration = static_cast<int>(iteration);
        fresh.push_back(std::move(r));
      }
    }

    CoreSet next = state.core;
    if (!fresh.empty()) {
      std::vector<std::string> texts;
      for (const auto& r : fresh) texts.push_back(r.text);
      auto vectors = embed_backend.embed(texts);
      if (vectors.size() != fresh.size()) throw Error(ErrorKind::protocol, "embedder returned the wrong number of vectors");
      std::vector<SelectionCandidate> candidates;
      for (std::size_t i = 0; i < fresh.size(); ++i) {
        Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(vectors[i].data(), static_cast<Eigen::Index>(vectors[i].size()));
        normalize_unit(v);
        fresh[i].embedding.assign(v.data(), v.data() + v.size());
        candidates.push_back({fresh[i].id, v});
      }
      next = update_core(
          state.core, [&](const std::string& id) -> const Eigen::VectorXd& { return embedding_of.at(id); }, candidates,
          config.selection);
      for (std::size_t i = 0; i < fresh.size(); ++i) embedding_of[fresh[i].id] = candidates[i].embedding;
    }

    record.new_rubrics = fresh.size();
    record.gain = fresh.empty() ? 0.0 : next.trace.final_rate() - state.core.trace.final_rate();
    record.coding_rate = next.trace.final_rate();
    record.core_size = next.rubric_ids.size();

    state.remaining_ids = std::move(remaining);
    state.rng_state = detail::rng_to_string(rng);
    state.processed_ids.insert(state.processed_ids.end(), batch_ids.begin(), batch_ids.end());
    state.pool.insert(state.pool.end(), fresh.begin(), fresh.end());
    state.core = std::move(next);
    state.batch_gain_history.push_back(record.gain);
    state.batches.push_back(record);
    spdlog::info("batch {}: {} validated, {} failed, {} new rubrics, core {}, gain {:.6f}", iteration,
                 record.validated, record.failed, record.new_rubrics, record.core_size, record.gain);

    if (early_stop_check(state.batch_gain_history, config.selection.tau_min, config.selection.patience))
      state.stop_reason = ExtractionStop::early_stop;
    if (hooks.checkpoint_path) save_checkpoint(*hooks.checkpoint_path, state);
    if (hooks.after_iteration) hooks.after_iteration(state);
  }
  if (hooks.checkpoint_path) save_checkpoint(*hooks.checkpoint_path, state);

  ExtractionResult result;
  result.core = state.core;
  result.pool = state.pool;
  result.pool_size = state.pool.size();
  result.pairs_processed = state.processed_ids.size();
  result.batch_gain_history = state.batch_gain_history;
  result.batches = state.batches;
  result.stop_reason = *state.stop_reason;
  if (!state.core.empty()) {
    std::map<std::string, std::string> queries;
    for (const auto& p : dataset) queries[p.id] = p.query;
    result.structured = structure_core(state.core, state.pool, queries, config.theme_count, chat_backend);
  } else {
    spdlog::warn("no pair validated; the core set is empty and nothing was structured");
  }
  return result;
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_PIPELINE_HPP
