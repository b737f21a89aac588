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

#ifndef XCEVO_MUTATION_H_
#define XCEVO_MUTATION_H_

// The four mutation rules (insert, remove, change opcode, change argument)
// and the rule/opcode sampling distribution.

#include <array>
#include <optional>
#include <string>

#include "xcevo/dsl.h"
#include "xcevo/functional.h"
#include "xcevo/random.h"

namespace xcevo {

enum class MutationRule : uint8_t { kInsert, kRemove, kChangeOp, kChangeArg };
inline constexpr size_t kNumRules = 4;
std::string_view RuleName(MutationRule rule);

struct MutationConfig {
  size_t max_instructions = 20;
  std::array<double, kNumRules> rule_weights = {0.25, 0.25, 0.25, 0.25};
  // Indexed by Opcode.
  std::array<double, kNumOpcodes> instruction_probs = DefaultInstructionProbs();
  std::array<bool, kNumFactors> mutable_factors = {true, true, true};
  size_t max_attempts = 100;

  // Arithmetic 0.06 each, powers 0.05 each, UTRANSFORM 0.1, the four
  // building blocks 0.075 each.
  static std::array<double, kNumOpcodes> DefaultInstructionProbs();
  // ADD, MULADD, POW2, UTRANSFORM with 0.25 each.
  static std::array<double, kNumOpcodes> B97SubsetProbs();

  // Throws std::invalid_argument naming the broken invariant.
  void Validate() const;
};

// Whether `op` can appear in a program on `schema` (UTRANSFORM needs a
// gamma, EC_PBE the reserved density features).
bool OpcodeLegal(const WorkspaceSchema& schema, Opcode op);

// Single-rule applications; nullopt when the rule does not apply.
std::optional<Program> RuleInsert(const Program& p, const MutationConfig& cfg,
                                  Rng& rng);
std::optional<Program> RuleRemove(const Program& p, const MutationConfig& cfg,
                                  Rng& rng);
std::optional<Program> RuleChangeOp(const Program& p, const MutationConfig& cfg,
                                    Rng& rng);
std::optional<Program> RuleChangeArg(const Program& p,
                                     const MutationConfig& cfg, Rng& rng);
std::optional<Program> ApplyRule(MutationRule rule, const Program& p,
                                 const MutationConfig& cfg, Rng& rng);

struct MutationOutcome {
  FunctionalForm form;
  // Meaningful only when applied.
  size_t factor = 0;
  MutationRule rule = MutationRule::kInsert;
  bool applied = false;
};

// Picks a mutable factor uniformly and a rule by weight, retrying
// inapplicable picks up to cfg.max_attempts times before returning the
// parent unchanged.
MutationOutcome Mutate(const FunctionalForm& parent, const MutationConfig& cfg,
                       Rng& rng);

}  // namespace xcevo

#endif  // XCEVO_MUTATION_H_
