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

#include "xcevo/evolution.h"

#include <chrono>
#include <cstdio>
#include <stdexcept>

#include "xcevo/fingerprint.h"

namespace xcevo {

Population::Population(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("population capacity is 0");
}

IndividualPtr Population::Insert(Individual individual) {
  individual.birth_index = next_birth_++;
  auto stored = std::make_shared<const Individual>(std::move(individual));
  members_.push_back(stored);
  while (members_.size() > capacity_) members_.pop_front();
  return stored;
}

IndividualPtr Population::TournamentSelect(size_t k, Rng& rng) const {
  if (members_.empty()) throw std::logic_error("empty-population");
  const size_t n = members_.size();
  const size_t m = std::min(std::max<size_t>(k, 1), n);
  // Partial Fisher-Yates over indices gives m distinct members.
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  IndividualPtr winner;
  for (size_t i = 0; i < m; ++i) {
    const size_t j = i + UniformIndex(rng, n - i);
    std::swap(idx[i], idx[j]);
    const IndividualPtr& c = members_[idx[i]];
    if (!winner || c->fitness > winner->fitness ||
        (c->fitness == winner->fitness &&
         c->birth_index > winner->birth_index)) {
      winner = c;
    }
  }
  return winner;
}

bool Population::InvariantsHold() const {
  if (members_.size() > capacity_) return false;
  for (size_t i = 1; i < members_.size(); ++i) {
    if (members_[i]->birth_index <= members_[i - 1]->birth_index) return false;
  }
  return true;
}

std::optional<CachedEvaluation> FingerprintCache::Lookup(
    const FingerprintTriple& key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  return it->second;
}

bool FingerprintCache::Store(const FingerprintTriple& key,
                             CachedEvaluation value) {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.emplace(key, std::move(value)).second;
}

size_t FingerprintCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

uint64_t FingerprintCache::hits() const {
  std::lock_guard<std::mutex> lock(mu_);
  return hits_;
}

uint64_t FingerprintCache::misses() const {
  std::lock_guard<std::mutex> lock(mu_);
  return misses_;
}

void SearchConfig::Normalize() {
  if (mode == SearchMode::kRandomSearch) tournament_size = 1;
  if (capacity == 0) throw std::invalid_argument("search.capacity must be >= 1");
  if (tournament_size < 1 || tournament_size > capacity) {
    throw std::invalid_argument(
        "search.tournament_size must lie in [1, capacity]");
  }
  if (mode == SearchMode::kEvolution && tournament_size == 1 && capacity > 1) {
    throw std::invalid_argument(
        "search.tournament_size = 1 is random search; set mode accordingly");
  }
  mutation.Validate();
}

std::string HistoryCsvHeader() {
  return "birth_index,parent_digest,child_digest,J_train,J_val,"
         "evaluations_used,wall_ms\n";
}

std::string HistoryCsvRow(const HistoryEntry& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%s,%s,%.17g,%.17g,%zu,%.3f\n",
                static_cast<unsigned long long>(e.birth_index),
                DigestHex(e.parent_digest).c_str(),
                DigestHex(e.child_digest).c_str(), e.j_train, e.j_val,
                e.evaluations_used, e.wall_ms);
  return buf;
}

EvaluatedChild Trainer::Train(const FunctionalForm& form,
                              uint64_t seed) const {
  CmaesConfig c = cmaes;
  c.seed = seed;
  const FitResult fit = FitFunctional(form, *train, c);
  EvaluatedChild out{form, fit.params, fit.j_train, 0.0, {}, fit.evaluations,
                     false};
  out.j_val = fit.failed ? val->penalty() : Wrmsd(form, fit.params, *val);
  return out;
}

EvaluatedChild EvaluateWithCache(const FunctionalForm& form,
                                 const Trainer& trainer,
                                 const CacheAccess& cache, uint64_t seed) {
  const FingerprintTriple fp = form.Fingerprints();
  if (auto hit = cache.lookup(fp)) {
    EvaluatedChild out{form, hit->params, hit->j_train, hit->j_val, fp, 0, true};
    return out;
  }
  EvaluatedChild out = trainer.Train(form, seed);
  out.fingerprints = fp;
  cache.store(fp, {out.params, out.j_train, out.j_val});
  return out;
}

std::vector<double> CumulativeMinJval(const std::vector<HistoryEntry>& history) {
  std::vector<double> out;
  out.reserve(history.size());
  double best = std::numeric_limits<double>::infinity();
  for (const HistoryEntry& e : history) {
    best = std::min(best, e.j_val);
    out.push_back(best);
  }
  return out;
}

SearchEngine::SearchEngine(SearchConfig cfg, const ObjectiveContext& train,
                           const ObjectiveContext& val)
    : cfg_(std::move(cfg)),
      population_((cfg_.Normalize(), cfg_.capacity)),
      rng_(MixSeed(cfg_.seed, 0)) {
  trainer_.train = &train;
  trainer_.val = &val;
  trainer_.cmaes = cfg_.cmaes;
}

uint64_t SearchEngine::TrainingSeed(uint64_t birth_index) const {
  return MixSeed(cfg_.seed, 1000 + birth_index);
}

IndividualPtr SearchEngine::Insert(EvaluatedChild child, uint64_t parent_digest,
                                   double wall_ms) {
  Individual ind{std::move(child.form), std::move(child.params),
                 child.j_train,         child.j_val,
                 -child.j_val,          0,
                 child.fingerprints};
  HistoryEntry h;
  h.parent_digest = parent_digest;
  h.child_digest = CombineDigests(ind.fingerprints);
  h.j_train = ind.j_train;
  h.j_val = ind.j_val;
  h.evaluations_used = child.evaluations_used;
  h.wall_ms = wall_ms;
  h.cache_hit = child.cache_hit;
  IndividualPtr stored = population_.Insert(std::move(ind));
  h.birth_index = stored->birth_index;
  history_.push_back(h);
  if (!best_ || stored->j_val < best_->j_val) best_ = *stored;
  return stored;
}

namespace {

double ElapsedMs(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

IndividualPtr SearchEngine::AddSeed(const FunctionalForm& form) {
  const auto start = std::chrono::steady_clock::now();
  CacheAccess access{
      [this](const FingerprintTriple& k) { return cache_.Lookup(k); },
      [this](const FingerprintTriple& k, const CachedEvaluation& v) {
        cache_.Store(k, v);
      }};
  EvaluatedChild child = EvaluateWithCache(
      form, trainer_, access, TrainingSeed(population_.next_birth_index()));
  return Insert(std::move(child), 0, ElapsedMs(start));
}

IndividualPtr SearchEngine::SelectParent() {
  return population_.TournamentSelect(cfg_.tournament_size, rng_);
}

IndividualPtr SearchEngine::EvolveStep() {
  const auto start = std::chrono::steady_clock::now();
  const IndividualPtr parent = SelectParent();
  MutationOutcome m = Mutate(parent->form, cfg_.mutation, rng_);
  CacheAccess access{
      [this](const FingerprintTriple& k) { return cache_.Lookup(k); },
      [this](const FingerprintTriple& k, const CachedEvaluation& v) {
        cache_.Store(k, v);
      }};
  EvaluatedChild child =
      EvaluateWithCache(m.form, trainer_, access,
                        TrainingSeed(population_.next_birth_index()));
  return Insert(std::move(child), CombineDigests(parent->fingerprints),
                ElapsedMs(start));
}

SearchResult RunSearch(const SearchConfig& cfg,
                       const std::vector<FunctionalForm>& seeds,
                       const ObjectiveContext& train,
                       const ObjectiveContext& val,
                       const ObjectiveContext* test) {
  SearchEngine engine(cfg, train, val);
  SearchResult result;
  for (const FunctionalForm& s : seeds) engine.AddSeed(s);
  result.seeds = seeds.size();
  const auto& c = engine.config();
  for (size_t step = 0; step < c.budget; ++step) {
    const IndividualPtr child = engine.EvolveStep();
    ++result.children;
    if (c.stop_at_jval && child->j_val <= *c.stop_at_jval) {
      result.stopped_early = true;
      break;
    }
  }
  result.best = engine.best();
  result.history = engine.history();
  result.cache_hits = engine.cache().hits();
  result.cache_misses = engine.cache().misses();
  if (test && result.best) {
    result.best_j_test = Wrmsd(result.best->form, result.best->params, *test);
  }
  return result;
}

SearchResult RandomSearch(SearchConfig cfg,
                          const std::vector<FunctionalForm>& seeds,
                          const ObjectiveContext& train,
                          const ObjectiveContext& val,
                          const ObjectiveContext* test) {
  cfg.mode = SearchMode::kRandomSearch;
  return RunSearch(cfg, seeds, train, val, test);
}

}  // namespace xcevo
