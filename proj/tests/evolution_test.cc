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


#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "doctest.h"
#include "xcevo/dataset.h"
#include "xcevo/evolution.h"
#include "xcevo/functional.h"
#include "xcevo/objective.h"
#include "test_support.h"

using namespace xcevo;
using xcevo::testing::CheapB97;
using xcevo::testing::Small;

namespace {

Individual Member(double fitness) {
  Individual i{B97ExchangeForm(), {}, 0.0, -fitness, fitness, 0, {}};
  return i;
}

}  // namespace

TEST_CASE("population ages out the oldest member") {
  Population pop(3);
  for (int i = 0; i < 4; ++i) pop.Insert(Member(-i));
  CHECK(pop.size() == 3);
  CHECK(pop.members().front()->birth_index == 1);
  CHECK(pop.members().back()->birth_index == 3);
  CHECK(pop.next_birth_index() == 4);
  CHECK(pop.InvariantsHold());
  for (int i = 0; i < 50; ++i) {
    pop.Insert(Member(i));
    CHECK(pop.size() <= 3);
    CHECK(pop.InvariantsHold());
  }
  CHECK_THROWS_AS(Population(0), std::invalid_argument);
}

TEST_CASE("tournament selection") {
  Rng rng(1);
  Population empty(5);
  CHECK_THROWS_AS(empty.TournamentSelect(2, rng), std::logic_error);

  Population pop(10);
  const double fit[] = {-3.0, -1.0, -2.0, -1.0, -5.0};
  for (double f : fit) pop.Insert(Member(f));
  // Exhaustive tournament: global argmax, the younger of the tied pair.
  for (int i = 0; i < 20; ++i) {
    CHECK(pop.TournamentSelect(5, rng)->birth_index == 3);
    CHECK(pop.TournamentSelect(50, rng)->birth_index == 3);
  }
  // k = 1 is uniform over members.
  std::array<double, 5> counts{};
  const int n = 20000;
  for (int i = 0; i < n; ++i) counts[pop.TournamentSelect(1, rng)->birth_index] += 1;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - n / 5.0) * (c - n / 5.0) / (n / 5.0);
  CHECK(chi2 < 18.47);  // 4 degrees of freedom, p = 0.001
  // k = 2: the worst member never wins.
  for (int i = 0; i < 500; ++i) CHECK(pop.TournamentSelect(2, rng)->birth_index != 4);
}

TEST_CASE("fingerprint cache is first-write-wins") {
  FingerprintCache cache;
  const FingerprintTriple key = {1, 2, 3};
  CHECK_FALSE(cache.Lookup(key));
  CHECK(cache.Store(key, {{1.0}, 0.5, 0.7}));
  CHECK_FALSE(cache.Store(key, {{2.0}, 9.0, 9.0}));
  const auto hit = cache.Lookup(key);
  REQUIRE(hit);
  CHECK(hit->j_val == 0.7);
  CHECK(hit->params == std::vector<double>{1.0});
  CHECK(cache.size() == 1);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);
}

TEST_CASE("search config normalization") {
  SearchConfig c;
  c.mode = SearchMode::kRandomSearch;
  c.tournament_size = 25;
  c.Normalize();
  CHECK(c.tournament_size == 1);

  SearchConfig big;
  big.capacity = 10;
  big.tournament_size = 11;
  CHECK_THROWS_AS(big.Normalize(), std::invalid_argument);
  SearchConfig zero;
  zero.tournament_size = 0;
  CHECK_THROWS_AS(zero.Normalize(), std::invalid_argument);
  SearchConfig one;
  one.tournament_size = 1;
  CHECK_THROWS_AS(one.Normalize(), std::invalid_argument);
  SearchConfig walk;
  walk.capacity = 1;
  walk.tournament_size = 1;
  CHECK_NOTHROW(walk.Normalize());
  SearchConfig empty;
  empty.capacity = 0;
  CHECK_THROWS_AS(empty.Normalize(), std::invalid_argument);
}

TEST_CASE("cache hits reuse the stored evaluation without training") {
  Small s;
  Trainer trainer{s.train.get(), s.val.get(), CheapB97(0, 1).cmaes};
  FingerprintCache cache;
  CacheAccess access{
      [&](const FingerprintTriple& k) { return cache.Lookup(k); },
      [&](const FingerprintTriple& k, const CachedEvaluation& v) {
        cache.Store(k, v);
      }};
  const EvaluatedChild first =
      EvaluateWithCache(B97ExchangeForm(), trainer, access, 5);
  CHECK_FALSE(first.cache_hit);
  CHECK(first.evaluations_used > 0);
  // A value-equivalent rewrite of the same form.
  FunctionalForm same = B97ExchangeForm();
  same.mutable_factor(kFactorX) =
      WithSpareCapacity(same.factor(kFactorX), 0, 0);
  const EvaluatedChild second = EvaluateWithCache(same, trainer, access, 6);
  CHECK(second.cache_hit);
  CHECK(second.evaluations_used == 0);
  CHECK(second.j_val == first.j_val);
  CHECK(second.j_train == first.j_train);
  CHECK(second.params == first.params);
}

TEST_CASE("search run: history, cache accounting, reproducibility") {
  Small s;
  const SearchConfig cfg = CheapB97(250, 3);
  const SearchResult r =
      RunSearch(cfg, {EmptyB97SearchForm()}, *s.train, *s.val, nullptr);
  CHECK(r.seeds == 1);
  CHECK(r.children == 250);
  REQUIRE(r.history.size() == 251);
  REQUIRE(r.best);
  std::map<uint64_t, double> first_jval;
  uint64_t hits = 0;
  for (size_t i = 0; i < r.history.size(); ++i) {
    const HistoryEntry& h = r.history[i];
    CHECK(h.birth_index == i);
    if (h.cache_hit) {
      ++hits;
      CHECK(h.evaluations_used == 0);
    } else {
      CHECK(h.evaluations_used > 0);
    }
    auto [it, fresh] = first_jval.emplace(h.child_digest, h.j_val);
    if (!fresh && h.cache_hit) CHECK(it->second == h.j_val);
    CHECK(r.best->j_val <= h.j_val);
  }
  CHECK(hits == r.cache_hits);
  CHECK(hits > 0);
  CHECK(r.best->fitness == -r.best->j_val);

  const auto cm = CumulativeMinJval(r.history);
  REQUIRE(cm.size() == r.history.size());
  double running = r.history[0].j_val;
  for (size_t i = 0; i < cm.size(); ++i) {
    running = std::min(running, r.history[i].j_val);
    CHECK(cm[i] == running);
    if (i > 0) CHECK(cm[i] <= cm[i - 1]);
  }

  const SearchResult again =
      RunSearch(cfg, {EmptyB97SearchForm()}, *s.train, *s.val, nullptr);
  REQUIRE(again.history.size() == r.history.size());
  for (size_t i = 0; i < r.history.size(); ++i) {
    CHECK(again.history[i].child_digest == r.history[i].child_digest);
    CHECK(again.history[i].parent_digest == r.history[i].parent_digest);
    CHECK(again.history[i].j_val == r.history[i].j_val);
    CHECK(again.history[i].evaluations_used == r.history[i].evaluations_used);
  }
}

TEST_CASE("budget zero returns the best trained seed") {
  Small s;
  SearchConfig cfg = CheapB97(0, 1);
  cfg.cmaes.max_evaluations = 2000;
  const SearchResult r = RunSearch(
      cfg, {EmptyB97SearchForm(), B97ExchangeForm()}, *s.train, *s.val, nullptr);
  CHECK(r.children == 0);
  CHECK(r.history.size() == 2);
  REQUIRE(r.best);
  CHECK(r.best->birth_index == 1);
  CHECK(r.best->j_val == std::min(r.history[0].j_val, r.history[1].j_val));
}

TEST_CASE("capacity one with k one is a random walk") {
  Small s;
  SearchConfig cfg = CheapB97(40, 9);
  cfg.capacity = 1;
  cfg.tournament_size = 1;
  SearchEngine engine(cfg, *s.train, *s.val);
  engine.AddSeed(EmptyB97SearchForm());
  for (int i = 0; i < 40; ++i) {
    engine.EvolveStep();
    CHECK(engine.population().size() == 1);
  }
  const auto& h = engine.history();
  for (size_t i = 1; i < h.size(); ++i) {
    CHECK(h[i].parent_digest == h[i - 1].child_digest);
  }
}

TEST_CASE("random search selects without regard to fitness") {
  Small s;
  SearchConfig cfg = CheapB97(30, 4);
  cfg.tournament_size = 5;
  const SearchResult r =
      RandomSearch(cfg, {EmptyB97SearchForm()}, *s.train, *s.val, nullptr);
  CHECK(r.children == 30);
  SearchConfig norm = cfg;
  norm.mode = SearchMode::kRandomSearch;
  norm.Normalize();
  CHECK(norm.tournament_size == 1);
}

TEST_CASE("training failures insert the penalty") {
  Small s;
  SearchEngine engine(CheapB97(0, 1), *s.train, *s.val);
  Program bad(MakeSchema({"x2"}, {"F", "v0"}, {"c0"}, {}));
  bad.Append("v0", Opcode::kSub, "c0", "c0").Append("F", Opcode::kDiv, "x2", "v0");
  const IndividualPtr ind = engine.AddSeed(
      FunctionalForm(bad, Program(EmptySchema()), Program(EmptySchema())));
  CHECK(ind->j_val == kObjectivePenalty);
  CHECK(ind->fitness == -kObjectivePenalty);
  CHECK(engine.population().size() == 1);
}

TEST_CASE("stop_at_jval ends the run early") {
  Small s;
  SearchConfig cfg = CheapB97(100, 2);
  cfg.cmaes.max_evaluations = 3000;
  cfg.stop_at_jval = 1e9;
  const SearchResult r =
      RunSearch(cfg, {EmptyB97SearchForm()}, *s.train, *s.val, nullptr);
  CHECK(r.stopped_early);
  CHECK(r.children == 1);
}

TEST_CASE("history CSV") {
  CHECK(HistoryCsvHeader() ==
        "birth_index,parent_digest,child_digest,J_train,J_val,"
        "evaluations_used,wall_ms\n");
  HistoryEntry e;
  e.birth_index = 7;
  e.parent_digest = 0xabc;
  e.child_digest = 0x1;
  e.j_train = 0.5;
  e.j_val = 0.25;
  e.evaluations_used = 42;
  e.wall_ms = 1.5;
  CHECK(HistoryCsvRow(e) ==
        "7,0000000000000abc,0000000000000001,0.5,0.25,42,1.500\n");
}
