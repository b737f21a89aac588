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


// Small synthetic corpus and cheap search settings shared by the tests.

#ifndef XCEVO_TESTS_TEST_SUPPORT_H_
#define XCEVO_TESTS_TEST_SUPPORT_H_

#include <memory>

#include "xcevo/dataset.h"
#include "xcevo/evolution.h"
#include "xcevo/objective.h"

namespace xcevo::testing {

struct Small {
  std::shared_ptr<const Dataset> data;
  std::shared_ptr<const FeatureCache> cache;
  std::unique_ptr<ObjectiveContext> train, val;

  Small() {
    SynthConfig c;
    c.num_systems = 12;
    c.single_records = 12;
    c.difference_records = 8;
    c.radial_points = 40;
    data = std::make_shared<const Dataset>(SynthGenerate(c));
    cache = std::make_shared<const FeatureCache>(*data, 0.0, false);
    train = std::make_unique<ObjectiveContext>(data, cache, Split::kTrain);
    val = std::make_unique<ObjectiveContext>(data, cache, Split::kVal);
  }
};

inline SearchConfig CheapB97(size_t budget, uint64_t seed) {
  SearchConfig cfg;
  cfg.capacity = 20;
  cfg.tournament_size = 5;
  cfg.budget = budget;
  cfg.seed = seed;
  cfg.mutation.max_instructions = 6;
  cfg.mutation.instruction_probs = MutationConfig::B97SubsetProbs();
  cfg.mutation.mutable_factors = {true, false, false};
  cfg.cmaes.restarts = 1;
  cfg.cmaes.max_evaluations = 150;
  return cfg;
}

}  // namespace xcevo::testing

#endif  // XCEVO_TESTS_TEST_SUPPORT_H_
