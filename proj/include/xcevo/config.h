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


#ifndef XCEVO_CONFIG_H_
#define XCEVO_CONFIG_H_

// Run configuration: a small TOML subset parser and the RunConfig that the
// command-line tool normalizes and echoes into every run summary.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xcevo/dataset.h"
#include "xcevo/evolution.h"
#include "xcevo/functional.h"

namespace xcevo {

class ConfigError : public std::runtime_error {
 public:
  // line 0 means the error is not tied to a line of the file.
  ConfigError(size_t line, std::string field, const std::string& message);
  size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  size_t line_;
  std::string field_;
};

struct TomlValue {
  using Array = std::vector<TomlValue>;
  std::variant<bool, int64_t, double, std::string, Array> value;
  size_t line = 0;
};

// Supported: [table] headers, `key = value`, basic strings with \" \\ \n \t
// escapes, integers, floats (incl. inf/nan), booleans, single-line arrays,
// and # comments. Keys are stored as "table.key".
class TomlTable {
 public:
  static TomlTable Parse(std::string_view text);

  bool Has(const std::string& key) const;
  const TomlValue* Find(const std::string& key) const;

  std::optional<bool> GetBool(const std::string& key) const;
  std::optional<int64_t> GetInt(const std::string& key) const;
  // Accepts integers too.
  std::optional<double> GetReal(const std::string& key) const;
  std::optional<std::string> GetString(const std::string& key) const;
  std::optional<std::vector<double>> GetRealArray(const std::string& key) const;
  std::optional<std::vector<std::string>> GetStringArray(
      const std::string& key) const;
  // Non-negative integer that fits size_t.
  std::optional<size_t> GetSize(const std::string& key) const;

  // Throws ConfigError for the first key no getter asked for.
  void RejectUnknown() const;

 private:
  std::map<std::string, TomlValue> entries_;
  mutable std::set<std::string> used_;
};

enum class Preset { kB97, kWb97mv };

std::string_view PresetName(Preset p);

struct EndpointConfig {
  std::string population = "127.0.0.1:7457";
  // Empty means the population server also hosts fingerprints.
  std::string fingerprints;
  size_t backoff_initial_ms = 50;
  size_t backoff_max_ms = 2000;
  size_t max_retries = 8;
};

struct RunConfig {
  Preset preset = Preset::kB97;
  // When empty the dataset is generated from `generator`.
  std::string dataset_path;
  SynthConfig generator;
  SearchConfig search;
  // Seed individuals: "empty_b97", "b97x", "wb97mv".
  std::vector<std::string> seed_forms;
  size_t spare_variables = 0;
  size_t spare_parameters = 0;
  bool density_features = false;
  double omega = 0.0;
  std::string output_dir = "xcevo_out";
  EndpointConfig endpoints;
  size_t workers = 1;
};

// All defaults for a preset, already normalized.
RunConfig PresetConfig(Preset preset);

// Preset defaults overlaid with the file contents, then normalized. Throws
// ConfigError with line/field diagnostics.
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::string& path);

// Checks cross-field invariants and fills derived fields. Idempotent.
void NormalizeRunConfig(RunConfig& cfg);

// Every field written explicitly; ParseRunConfig(ToToml(c)) reproduces c.
std::string ToToml(const RunConfig& cfg);

// The seed individuals on the workspaces the config asks for.
std::vector<FunctionalForm> SeedForms(const RunConfig& cfg);

// Applies XCEVO_POPULATION_ENDPOINT / XCEVO_FINGERPRINT_ENDPOINT.
void ApplyEndpointEnvironment(EndpointConfig& endpoints);

}  // namespace xcevo

#endif  // XCEVO_CONFIG_H_
