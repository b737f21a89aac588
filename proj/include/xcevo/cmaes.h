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

#ifndef XCEVO_CMAES_H_
#define XCEVO_CMAES_H_

// CMA-ES with box constraints (candidates projected onto the box before
// evaluation) and independent restarts from unit-Gaussian means.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "xcevo/functional.h"
#include "xcevo/objective.h"

namespace xcevo {

struct CmaesConfig {
  size_t dimension = 1;
  // 0 selects 4 + floor(3 ln n).
  size_t lambda = 0;
  double sigma0 = 0.5;
  double lower = -10.0;
  double upper = 10.0;
  // Per restart, never exceeded except by a first generation larger than it.
  size_t max_evaluations = 30000;
  // Stop a restart once the spread of the best values over the last
  // tol_fun_window generations (and of the current generation) is below this.
  double tol_fun = 1e-12;
  size_t tol_fun_window = 20;
  double tol_x = 1e-12;
  double max_condition = 1e14;
  size_t restarts = 1;
  uint64_t seed = 1;
  // Values at or above this count as failed evaluations; a generation of
  // only failures aborts its restart.
  double failure_threshold = std::numeric_limits<double>::infinity();
  // Ends the whole minimization once reached.
  double stop_value = -std::numeric_limits<double>::infinity();

  size_t EffectiveLambda() const;
};

struct CmaesResult {
  std::vector<double> best_x;
  double best_value = std::numeric_limits<double>::infinity();
  size_t evaluations = 0;
  size_t restarts_run = 0;
  size_t restarts_aborted = 0;
  // Best value after each generation, over all restarts.
  std::vector<double> trace;
  // Every evaluated candidate lay inside the box.
  bool all_in_bounds = true;
};

// Evaluates `count` row-major candidates of length n into `values`.
using BatchObjective = std::function<void(
    std::span<const double> candidates, size_t count, std::span<double> values)>;

CmaesResult Minimize(const BatchObjective& f, const CmaesConfig& cfg);
CmaesResult Minimize(const std::function<double(std::span<const double>)>& f,
                     const CmaesConfig& cfg);

struct FitResult {
  std::vector<double> params;  // full flat layout; dead parameters are 0
  double j_train = 0.0;
  size_t evaluations = 0;
  bool failed = false;
};

// Minimizes the training WRMSD over the live parameters of `form`. `base`
// supplies everything but the dimension.
FitResult FitFunctional(const FunctionalForm& form,
                        const ObjectiveContext& train_ctx,
                        const CmaesConfig& base);

}  // namespace xcevo

#endif  // XCEVO_CMAES_H_
