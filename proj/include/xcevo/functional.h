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

#ifndef XCEVO_FUNCTIONAL_H_
#define XCEVO_FUNCTIONAL_H_

// A functional form: exchange, same-spin and opposite-spin correlation
// enhancement factors, with their parameters concatenated in that order.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xcevo/dsl.h"

namespace xcevo {

inline constexpr size_t kNumFactors = 3;
inline constexpr std::array<std::string_view, kNumFactors> kFactorNames = {
    "x", "css", "cos"};

enum Factor : size_t { kFactorX = 0, kFactorCss = 1, kFactorCos = 2 };

// Schema of a factor that contributes nothing: no features, only "F".
SchemaPtr EmptySchema();

class FunctionalForm {
 public:
  FunctionalForm(Program x, Program css, Program cos);

  const Program& factor(size_t f) const { return factors_[f]; }
  Program& mutable_factor(size_t f) { return factors_[f]; }

  size_t num_params() const;
  // Start of factor f in the flat layout.
  size_t offset(size_t f) const;
  std::span<const double> FactorParams(std::span<const double> flat,
                                       size_t f) const {
    return flat.subspan(offset(f), factors_[f].schema().num_params());
  }
  // "x.c0", "css.gamma", ...
  std::vector<std::string> FlatParamNames() const;

  std::array<uint64_t, kNumFactors> Fingerprints() const;
  // Digest of the whole form, combining the per-factor fingerprints.
  uint64_t Digest() const;

  friend bool operator==(const FunctionalForm&,
                         const FunctionalForm&) = default;

 private:
  std::array<Program, kNumFactors> factors_;
};

// The wB97M-V form on its published instruction sequences.
FunctionalForm Wb97mvForm();
std::vector<double> Wb97mvDefaultParams();

// B97 exchange-only form; correlation factors empty.
FunctionalForm B97ExchangeForm();

// Empty exchange program on the B97 search workspace, correlation empty.
FunctionalForm EmptyB97SearchForm();

// Per-factor liveness: parameters (flat layout of the program) read by some
// instruction whose result reaches "F".
std::vector<bool> LiveParameters(const Program& program);
// Indices of instructions whose results reach "F".
std::vector<size_t> LiveInstructions(const Program& program);
// Flat-layout liveness over the whole form.
std::vector<bool> LiveParameters(const FunctionalForm& form);

}  // namespace xcevo

#endif  // XCEVO_FUNCTIONAL_H_
