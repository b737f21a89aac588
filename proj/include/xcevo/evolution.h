// Copyright 2026 The xcevo Authors.
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

#ifndef XCEVO_EVOLUTION_H_
#define XCEVO_EVOLUTION_H_

// Regularized evolution over functional forms: tournament selection,
// mutation, training, FIFO aging, and the fingerprint cache that skips
// retraining of value-equivalent children.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xcevo/cmaes.h"
#include "xcevo/functional.h"
#include "xcevo/mutation.h"
#include "xcevo/objective.h"
#include "xcevo/random.h"

namespace xcevo {

using FingerprintTriple = std::array<uint64_t, kNumFactors>;

struct Individual {
  FunctionalForm form;
  std::vector<double> params;
  double j_train = 0.0;
  double j_val = 0.0;
  double fitness = 0.0;  // -j_val
  uint64_t birth_index = 0;
  FingerprintTriple fingerprints{};
};

using IndividualPtr = std::shared_ptr<const Individual>;

class Population {
 public:
  explicit Population(size_t capacity);

  size_t capacity() const { return capacity_; }
  size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  const std::deque<IndividualPtr>& members() const { return members_; }
  uint64_t next_birth_index() const { return next_birth_; }

  // Assigns the next birth index, appends, and evicts the oldest member when
  // over capacity. Returns the stored individual.
  IndividualPtr Insert(Individual individual);

  // min(k, size) distinct members sampled uniformly; the fittest wins and
  // equal fitness goes to the younger. Throws std::logic_error when empty.
  IndividualPtr TournamentSelect(size_t k, Rng& rng) const;

  // Capacity bound and strictly increasing birth order.
  bool InvariantsHold() const;

 private:
  size_t capacity_;
  uint64_t next_birth_ = 0;
  std::deque<IndividualPtr> members_;
};

struct CachedEvaluation {
  std::vector<double> params;
  double j_train = 0.0;
  double j_val = 0.0;
};

// First-write-wins map from fingerprint triples to training results.
class FingerprintCache {
 public:
  std::optional<CachedEvaluation> Lookup(const FingerprintTriple& key);
  // False (and no change) when the key is already present.
  bool Store(const FingerprintTriple& key, CachedEvaluation value);
  size_t size() const;
  uint64_t hits() const;
  uint64_t misses() const;

 private:
  mutable std::mutex mu_;
  std::map<FingerprintTriple, CachedEvaluation> entries_;
  uint64_t hits_ = 0;
  uint64_t misses_ = 0;
};

enum class SearchMode { kEvolution, kRandomSearch };

struct SearchConfig {
  size_t capacity = 100;
  size_t tournament_size = 25;
  // Number of children generated.
  size_t budget = 1000;
  SearchMode mode = SearchMode::kEvolution;
  MutationConfig mutation;
  CmaesConfig cmaes;
  uint64_t seed = 1;
  // Ends the run once a child reaches this validation error.
  std::optional<double> stop_at_jval;

  // Forces k = 1 for random search; throws std::invalid_argument when the
  // result is inconsistent.
  void Normalize();
};

struct HistoryEntry {
  uint64_t birth_index = 0;
  uint64_t parent_digest = 0;  // 0 for seeds
  uint64_t child_digest = 0;
  double j_train = 0.0;
  double j_val = 0.0;
  size_t evaluations_used = 0;
  double wall_ms = 0.0;
  bool cache_hit = false;
};

std::string HistoryCsvHeader();
std::string HistoryCsvRow(const HistoryEntry& e);

// Trained child ready for insertion.
struct EvaluatedChild {
  FunctionalForm form;
  std::vector<double> params;
  double j_train = 0.0;
  double j_val = 0.0;
  FingerprintTriple fingerprints{};
  size_t evaluations_used = 0;
  bool cache_hit = false;
};

// Train/validation objective pair and the training configuration.
struct Trainer {
  const ObjectiveContext* train = nullptr;
  const ObjectiveContext* val = nullptr;
  CmaesConfig cmaes;

  // FitFunctional then validation error; failures map to the penalty.
  EvaluatedChild Train(const FunctionalForm& form, uint64_t seed) const;
};

// Cache lookup, training on miss, and store, through caller-supplied access
// so the same path serves local and remote caches.
struct CacheAccess {
  std::function<std::optional<CachedEvaluation>(const FingerprintTriple&)>
      lookup;
  std::function<void(const FingerprintTriple&, const CachedEvaluation&)> store;
};

EvaluatedChild EvaluateWithCache(const FunctionalForm& form,
                                 const Trainer& trainer,
                                 const CacheAccess& cache, uint64_t seed);

struct SearchResult {
  std::optional<Individual> best;
  double best_j_test = 0.0;
  std::vector<HistoryEntry> history;
  size_t seeds = 0;
  uint64_t cache_hits = 0;
  uint64_t cache_misses = 0;
  size_t children = 0;
  bool stopped_early = false;
};

// Cumulative minimum of J_val over the history.
std::vector<double> CumulativeMinJval(const std::vector<HistoryEntry>& history);

class SearchEngine {
 public:
  SearchEngine(SearchConfig cfg, const ObjectiveContext& train,
               const ObjectiveContext& val);

  const SearchConfig& config() const { return cfg_; }
  Population& population() { return population_; }
  const Population& population() const { return population_; }
  FingerprintCache& cache() { return cache_; }
  const FingerprintCache& cache() const { return cache_; }
  const std::vector<HistoryEntry>& history() const { return history_; }
  // Best individual ever inserted, by validation error.
  const std::optional<Individual>& best() const { return best_; }

  // Trains and inserts a seed individual.
  IndividualPtr AddSeed(const FunctionalForm& form);

  // Tournament, mutation, cached or fresh training, insertion, aging.
  IndividualPtr EvolveStep();

  // Tournament over the current population with the engine's rng.
  IndividualPtr SelectParent();

  // Inserts an already evaluated child (the coordinator path).
  IndividualPtr Insert(EvaluatedChild child, uint64_t parent_digest,
                       double wall_ms);

  // Seed derived for the training of child `birth_index`.
  uint64_t TrainingSeed(uint64_t birth_index) const;

 private:
  SearchConfig cfg_;
  Trainer trainer_;
  Population population_;
  FingerprintCache cache_;
  Rng rng_;
  std::vector<HistoryEntry> history_;
  std::optional<Individual> best_;
};

// Seeds, then cfg.budget evolve steps (fewer when stop_at_jval triggers).
// `test` may be null.
SearchResult RunSearch(const SearchConfig& cfg,
                       const std::vector<FunctionalForm>& seeds,
                       const ObjectiveContext& train,
                       const ObjectiveContext& val,
                       const ObjectiveContext* test);

// RunSearch with tournament size 1.
SearchResult RandomSearch(SearchConfig cfg,
                          const std::vector<FunctionalForm>& seeds,
                          const ObjectiveContext& train,
                          const ObjectiveContext& val,
                          const ObjectiveContext* test);

}  // namespace xcevo

#endif  // XCEVO_EVOLUTION_H_
