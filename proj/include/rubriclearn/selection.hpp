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

#ifndef RUBRICLEARN_SELECTION_HPP
#define RUBRICLEARN_SELECTION_HPP

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "rubriclearn/coding_rate.hpp"
#include "rubriclearn/error.hpp"

namespace rubriclearn {

struct SelectionConfig {
  std::optional<std::size_t> max_size = 64;  // nullopt: unbounded
  double tau_min = 0.002;
  std::size_t patience = 2;
  CodingRateParams params;

  void validate() const {
    if (!(tau_min > 0.0)) throw Error(ErrorKind::input, "selection.tau_min must be positive");
    if (patience < 1) throw Error(ErrorKind::input, "selection.patience must be at least 1");
    if (max_size && *max_size < 1) throw Error(ErrorKind::input, "selection.max_size must be at least 1");
    params.validate();
  }
};

enum class SelectionStop { size_cap, early_stop, pool_exhausted };

inline const char* to_string(SelectionStop s) {
  switch (s) {
    case SelectionStop::size_cap: return "size_cap";
    case SelectionStop::early_stop: return "early_stop";
    case SelectionStop::pool_exhausted: return "pool_exhausted";
  }
  return "unknown";
}

inline SelectionStop selection_stop_from_string(const std::string& s) {
  if (s == "size_cap") return SelectionStop::size_cap;
  if (s == "early_stop") return SelectionStop::early_stop;
  if (s == "pool_exhausted") return SelectionStop::pool_exhausted;
  throw Error(ErrorKind::input, "unknown selection stop reason '" + s + "'");
}

struct SelectionStep {
  std::string rubric_id;
  double marginal_gain = 0.0;
  double coding_rate_after = 0.0;

  bool operator==(const SelectionStep&) const = default;
};

struct SelectionTrace {
  std::vector<SelectionStep> picks;
  SelectionStop stop_reason = SelectionStop::pool_exhausted;

  std::vector<double> gains() const {
    std::vector<double> out;
    out.reserve(picks.size());
    for (const auto& p : picks) out.push_back(p.marginal_gain);
    return out;
  }

  double final_rate() const { return picks.empty() ? 0.0 : picks.back().coding_rate_after; }

  bool operator==(const SelectionTrace&) const = default;
};

struct CoreSet {
  std::vector<std::string> rubric_ids;
  SelectionTrace trace;
  double epsilon_used = 0.0;

  bool empty() const { return rubric_ids.empty(); }
  bool operator==(const CoreSet&) const = default;
};

/// A pool member as seen by selection: an id and its unit-norm embedding.
struct SelectionCandidate {
  std::string id;
  Eigen::VectorXd embedding;
};

/// Gains within this distance of the best are ties, resolved by lowest id.
inline constexpr double kGainTieTolerance = 1e-12;

/// True iff the last `patience` gains exist and all are strictly below
/// `tau_min`. A gain equal to the threshold does not count as stalled.
inline bool early_stop_check(std::span<const double> gains, double tau_min, std::size_t patience) {
  if (patience == 0 || gains.size() < patience) return false;
  return std::all_of(gains.end() - static_cast<std::ptrdiff_t>(patience), gains.end(),
                     [tau_min](double g) { return g < tau_min; });
}

namespace detail {

inline void check_pool(std::span<const SelectionCandidate> pool) {
  if (pool.empty()) throw Error(ErrorKind::input, "selection pool is empty");
  const auto dim = pool.front().embedding.size();
  if (dim == 0) throw Error(ErrorKind::input, "rubric '" + pool.front().id + "' has no embedding");
  std::unordered_set<std::string> seen;
  for (const auto& c : pool) {
    if (c.embedding.size() != dim)
      throw Error(ErrorKind::input, "mixed embedding dimensions in pool: rubric '" + c.id + "' has " +
                                        std::to_string(c.embedding.size()) + ", expected " + std::to_string(dim));
    if (!is_unit(c.embedding)) throw Error(ErrorKind::input, "rubric '" + c.id + "' embedding is not unit norm");
    if (!seen.insert(c.id).second) throw Error(ErrorKind::input, "duplicate rubric id '" + c.id + "' in pool");
  }
}

}  // namespace detail

/// Greedy core-set construction: each step adds the remaining candidate with
/// the largest marginal coding-rate gain. Stops at the first of early stop,
/// size cap, or pool exhaustion; sub-threshold picks made before the stop
/// stay in the core.
inline CoreSet greedy_select(std::span<const SelectionCandidate> pool, const SelectionConfig& config) {
  config.validate();
  detail::check_pool(pool);

  const auto dim = pool.front().embedding.size();
  const std::size_t cap = config.max_size.value_or(pool.size());

  std::vector<std::size_t> remaining(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) remaining[i] = i;

  CoreSet core;
  core.epsilon_used = config.params.epsilon;
  Eigen::MatrixXd base(dim, 0);
  double rate = 0.0;
  std::vector<double> gains;

  while (true) {
    Eigen::MatrixXd cands(dim, static_cast<Eigen::Index>(remaining.size()));
    for (std::size_t j = 0; j < remaining.size(); ++j) cands.col(static_cast<Eigen::Index>(j)) = pool[remaining[j]].embedding;
    const auto step_gains = batch_marginal_gains(base, cands, config.params);

    std::size_t best = 0;
    for (std::size_t j = 1; j < remaining.size(); ++j) {
      const double diff = step_gains[j] - step_gains[best];
      if (diff > kGainTieTolerance ||
          (std::abs(diff) <= kGainTieTolerance && pool[remaining[j]].id < pool[remaining[best]].id))
        best = j;
    }

    const auto& pick = pool[remaining[best]];
    base.conservativeResize(Eigen::NoChange, base.cols() + 1);
    base.col(base.cols() - 1) = pick.embedding;
    const double after = detail::coding_rate_raw(base, config.params, GramForm::automatic);
    const double gain = after - rate;
    rate = after;
    gains.push_back(gain);
    core.rubric_ids.push_back(pick.id);
    core.trace.picks.push_back({pick.id, gain, after});
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));

    if (early_stop_check(gains, config.tau_min, config.patience)) {
      core.trace.stop_reason = SelectionStop::early_stop;
      break;
    }
    if (core.rubric_ids.size() >= cap) {
      core.trace.stop_reason = SelectionStop::size_cap;
      break;
    }
    if (remaining.empty()) {
      core.trace.stop_reason = SelectionStop::pool_exhausted;
      break;
    }
  }
  return core;
}

/// Reselects from scratch over the current core members plus `fresh`.
/// `embedding_of(id)` must return the embedding of every current core id.
/// Previously selected rubrics may be dropped.
template <class EmbeddingLookup>
CoreSet update_core(const CoreSet& current, EmbeddingLookup&& embedding_of, std::span<const SelectionCandidate> fresh,
                    const SelectionConfig& config) {
  std::vector<SelectionCandidate> pool;
  std::unordered_set<std::string> ids;
  for (const auto& id : current.rubric_ids) {
    if (ids.insert(id).second) pool.push_back({id, Eigen::VectorXd(embedding_of(id))});
  }
  for (const auto& c : fresh) {
    if (ids.insert(c.id).second) pool.push_back(c);
  }
  return greedy_select(pool, config);
}

}  // namespace rubriclearn

#endif  // RUBRICLEARN_SELECTION_HPP
