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

#ifndef XCEVO_OBJECTIVE_H_
#define XCEVO_OBJECTIVE_H_

// Weighted RMSD of record energies over one split, single and batched.

#include <atomic>
#include <memory>
#include <span>
#include <vector>

#include "xcevo/dataset.h"
#include "xcevo/functional.h"
#include "xcevo/physics.h"

namespace xcevo {

inline constexpr double kObjectivePenalty = 1e10;

class ObjectiveContext {
 public:
  // Throws DatasetError when the split has no records.
  ObjectiveContext(std::shared_ptr<const Dataset> dataset,
                   std::shared_ptr<const FeatureCache> cache, Split split,
                   double penalty = kObjectivePenalty);

  const Dataset& dataset() const { return *dataset_; }
  const FeatureCache& cache() const { return *cache_; }
  Split split() const { return split_; }
  double penalty() const { return penalty_; }

  // Records of the split in dataset order.
  const std::vector<size_t>& records() const { return records_; }
  // Dataset indices of the systems those records reference, ascending.
  const std::vector<size_t>& systems() const { return systems_; }
  // Per record, per term: position in systems().
  const std::vector<size_t>& term_slots(size_t r) const { return slots_[r]; }

  // Grid points visited by energy evaluations so far (each evaluated
  // enhancement-factor triple at a point counts once).
  uint64_t point_visits() const { return visits_.load(); }
  void AddPointVisits(uint64_t n) const { visits_ += n; }

  // Columns of all systems(), concatenated in order; the system k occupies
  // [offset(k), offset(k + 1)).
  const SystemFeatures& packed() const { return packed_; }
  size_t offset(size_t k) const { return offsets_[k]; }
  // Columns of the open-shell systems only, for the beta channel. For an
  // open-shell system k its points start at beta_offset(k); closed-shell
  // systems reuse their alpha values.
  const SystemFeatures& packed_beta() const { return packed_beta_; }
  size_t beta_offset(size_t k) const { return beta_offsets_[k]; }
  bool closed_shell(size_t k) const { return closed_[k]; }

 private:
  std::shared_ptr<const Dataset> dataset_;
  std::shared_ptr<const FeatureCache> cache_;
  Split split_;
  double penalty_;
  std::vector<size_t> records_;
  std::vector<size_t> systems_;
  std::vector<std::vector<size_t>> slots_;
  SystemFeatures packed_;
  SystemFeatures packed_beta_;
  std::vector<size_t> offsets_;
  std::vector<size_t> beta_offsets_;
  std::vector<bool> closed_;
  mutable std::atomic<uint64_t> visits_{0};
};

// e_base + ExcSl (hartree).
double TotalEnergy(const FunctionalForm& form, std::span<const double> params,
                   const SystemGrid& system, const SystemFeatures& features);

// WRMSD (kcal/mol) from per-system total energies indexed like
// ctx.systems(): sqrt(sum_i w_i (E_i - E_i^ref)^2 / N), N counting every
// record of the split. Any non-finite record energy yields the penalty.
double WrmsdFromEnergies(const ObjectiveContext& ctx,
                         std::span<const double> energies);

double Wrmsd(XcModel& model, const ObjectiveContext& ctx);
double Wrmsd(const FunctionalForm& form, std::span<const double> params,
             const ObjectiveContext& ctx);

// Per-system exchange-correlation energies ExcSl over ctx.systems(),
// bitwise equal to calling ExcSl system by system, from one factor
// evaluation per channel over the packed columns.
void SplitExcSl(XcModel& model, const ObjectiveContext& ctx,
                ExcScratch& scratch, std::span<double> exc);

// One value per row of `params_batch` (row-major, P x num_params), equal
// bitwise to Wrmsd on each row. One pass over the packed split per row, so
// each grid point is visited at most P times.
std::vector<double> WrmsdPopulation(const FunctionalForm& form,
                                    std::span<const double> params_batch,
                                    size_t population,
                                    const ObjectiveContext& ctx);

// -Wrmsd on a validation context.
double Fitness(const FunctionalForm& form, std::span<const double> params,
               const ObjectiveContext& val_ctx);

// Whether the feature cache carries what the form reads.
bool CacheSupports(const FeatureCache& cache, const FunctionalForm& form);

}  // namespace xcevo

#endif  // XCEVO_OBJECTIVE_H_
