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

#ifndef XCEVO_DATASET_H_
#define XCEVO_DATASET_H_

// Systems on quadrature grids, reference energetic records over them, the
// synthetic generator and the on-disk archive.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xcevo/physics.h"

namespace xcevo {

struct SystemGrid {
  std::string id;
  std::vector<GridPointDensities> points;
  // Every energy component outside the searched semilocal XC term (hartree).
  double e_base = 0.0;
  double electrons = 0.0;
};

enum class Split { kTrain, kVal, kTest };

std::string_view SplitName(Split s);
std::optional<Split> SplitFromName(std::string_view name);

struct RecordTerm {
  std::string system_id;
  double coefficient = 1.0;
};

struct PropertyRecord {
  std::string id;
  std::vector<RecordTerm> terms;
  double e_ref = 0.0;  // kcal/mol
  double weight = 1.0;
  Split split = Split::kTrain;
  std::string subset_tag;
};

struct Dataset {
  std::vector<SystemGrid> systems;
  std::vector<PropertyRecord> records;
  uint64_t seed = 0;
  std::string target;
  double omega = 0.0;
  // Generator settings as JSON text.
  std::string generator;

  // Throws DatasetError when absent.
  size_t SystemIndex(std::string_view id) const;
};

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { kConfig, kMalformed, kChecksum, kVersion, kIo };
  DatasetError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct SynthConfig {
  uint64_t seed = 20220101;
  size_t num_systems = 60;
  size_t radial_points = 200;
  double grid_scale = 1.0;  // bohr
  // Single exponentials versus Gaussian mixtures.
  double exponential_fraction = 0.5;
  double open_shell_fraction = 0.5;
  size_t single_records = 60;
  size_t difference_records = 60;
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  // Closed-form functional generating the reference energies.
  std::string target = "B97X";
  double omega = 0.0;
};

// Throws DatasetError(kConfig) naming the offending field.
void ValidateSynthConfig(const SynthConfig& cfg);

// Gauss-Legendre nodes and weights on [-1, 1].
void GaussLegendre(size_t n, std::vector<double>* nodes,
                   std::vector<double>* weights);

// Radial grid r = a (1 + t) / (1 - t) with weights 4 pi r^2 dr/dt w_t.
void RadialGrid(size_t n, double scale, std::vector<double>* r,
                std::vector<double>* weights);

// rho = electrons * (z^3 / pi) exp(-2 z r), tau = tau_W, closed shell.
SystemGrid ExponentialSystem(std::string id, double z, double electrons,
                             size_t radial_points, double scale);

Dataset SynthGenerate(const SynthConfig& cfg);

// Record energy in kcal/mol from per-system total energies in hartree:
// (sum over terms of coefficient * energy) * kHartreeToKcalPerMol, summed
// in term order. `system_index` maps each term to `energies`.
double RecordEnergy(const PropertyRecord& record,
                    std::span<const size_t> system_index,
                    std::span<const double> energies);

// Archive: <dir>/manifest.json plus <dir>/<system id>.sygr per system.
inline constexpr uint32_t kArchiveVersion = 1;
void SaveDataset(const Dataset& dataset, const std::string& dir);
Dataset LoadDataset(const std::string& dir);

// Binary form of one system grid (header, 8 columns, trailing CRC32).
std::string EncodeSystemGrid(const SystemGrid& system);
// Fills points of `system`; throws DatasetError on corruption.
void DecodeSystemGrid(std::string_view bytes, SystemGrid* system);

class FeatureCache {
 public:
  FeatureCache(const Dataset& dataset, double omega, bool with_densities);

  double omega() const { return omega_; }
  bool with_densities() const { return with_densities_; }
  size_t size() const { return systems_.size(); }
  const SystemFeatures& system(size_t index) const { return systems_[index]; }
  // Stored doubles; SystemFeatures::kNumColumns per grid point (plus two
  // density columns when requested).
  size_t num_values() const;

 private:
  double omega_;
  bool with_densities_;
  std::vector<SystemFeatures> systems_;
};

// FeatureCaches of one dataset keyed by (omega, with_densities).
class FeatureCacheStore {
 public:
  explicit FeatureCacheStore(std::shared_ptr<const Dataset> dataset)
      : dataset_(std::move(dataset)) {}
  std::shared_ptr<const FeatureCache> Get(double omega, bool with_densities);
  size_t num_builds() const { return builds_; }

 private:
  std::shared_ptr<const Dataset> dataset_;
  std::mutex mu_;
  std::map<std::pair<double, bool>, std::shared_ptr<const FeatureCache>>
      caches_;
  size_t builds_ = 0;
};

}  // namespace xcevo

#endif  // XCEVO_DATASET_H_
