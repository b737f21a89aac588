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

#include "xcevo/mutation.h"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace xcevo {

namespace {

constexpr size_t Idx(Opcode op) { return static_cast<size_t>(op); }

// Draws an index with probability proportional to weights; weights must
// have a positive sum.
size_t SampleWeighted(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = UniformUnit(rng) * total;
  size_t last = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last;
}

// Opcode drawn from cfg probabilities restricted to legal ones, optionally
// excluding one. nullopt when nothing is left.
std::optional<Opcode> SampleOpcode(const WorkspaceSchema& schema,
                                   const MutationConfig& cfg, Rng& rng,
                                   std::optional<Opcode> exclude = {}) {
  std::array<double, kNumOpcodes> w{};
  bool any = false;
  for (Opcode op : kAllOpcodes) {
    if (!OpcodeLegal(schema, op) || (exclude && *exclude == op)) continue;
    w[Idx(op)] = cfg.instruction_probs[Idx(op)];
    any = any || w[Idx(op)] > 0.0;
  }
  if (!any) return std::nullopt;
  return static_cast<Opcode>(SampleWeighted(w, rng));
}

// Symbols legal as workspace inputs: features, variables, scalar parameters.
std::vector<Symbol> InputSymbols(const WorkspaceSchema& s) {
  std::vector<Symbol> out;
  for (auto kind :
       {SymbolKind::kFeature, SymbolKind::kVariable, SymbolKind::kParameter}) {
    for (size_t i = 0; i < s.Count(kind); ++i) {
      out.push_back({kind, static_cast<uint16_t>(i)});
    }
  }
  return out;
}

template <typename T>
T Pick(const std::vector<T>& v, Rng& rng) {
  return v[UniformIndex(rng, v.size())];
}

Symbol PickGamma(const WorkspaceSchema& s, Rng& rng) {
  return {SymbolKind::kGamma,
          static_cast<uint16_t>(UniformIndex(rng, s.Count(SymbolKind::kGamma)))};
}

// Resamples the operands of `ins` for a new opcode, keeping the ones whose
// slot still exists.
void FitOperands(Instruction& ins, Opcode old_op, const WorkspaceSchema& s,
                 Rng& rng) {
  const std::vector<Symbol> inputs = InputSymbols(s);
  const int before = NumInputs(old_op);
  const int after = NumInputs(ins.op);
  if (after == 0) {
    ins.in1 = {};
    ins.in2 = {};
  } else {
    if (before < 1) ins.in1 = Pick(inputs, rng);
    if (after >= 2) {
      if (before < 2) ins.in2 = Pick(inputs, rng);
    } else {
      ins.in2 = {};
    }
  }
  if (ins.op == Opcode::kUTransform) {
    if (old_op != Opcode::kUTransform) ins.gamma = PickGamma(s, rng);
  } else {
    ins.gamma = {};
  }
}

}  // namespace

std::string_view RuleName(MutationRule rule) {
  switch (rule) {
    case MutationRule::kInsert:
      return "insert";
    case MutationRule::kRemove:
      return "remove";
    case MutationRule::kChangeOp:
      return "change_op";
    case MutationRule::kChangeArg:
      return "change_arg";
  }
  return "";
}

std::array<double, kNumOpcodes> MutationConfig::DefaultInstructionProbs() {
  std::array<double, kNumOpcodes> p{};
  for (Opcode op : {Opcode::kAdd, Opcode::kSub, Opcode::kMul, Opcode::kDiv,
                    Opcode::kMulAdd}) {
    p[Idx(op)] = 0.06;
  }
  for (Opcode op : {Opcode::kPow2, Opcode::kPow3, Opcode::kPow4, Opcode::kPow6,
                    Opcode::kSqrt, Opcode::kCbrt}) {
    p[Idx(op)] = 0.05;
  }
  p[Idx(Opcode::kUTransform)] = 0.1;
  for (Opcode op : {Opcode::kFxPbe, Opcode::kFxRpbe, Opcode::kFxB88,
                    Opcode::kEcPbe}) {
    p[Idx(op)] = 0.075;
  }
  return p;
}

std::array<double, kNumOpcodes> MutationConfig::B97SubsetProbs() {
  std::array<double, kNumOpcodes> p{};
  for (Opcode op : {Opcode::kAdd, Opcode::kMulAdd, Opcode::kPow2,
                    Opcode::kUTransform}) {
    p[Idx(op)] = 0.25;
  }
  return p;
}

void MutationConfig::Validate() const {
  if (max_instructions == 0) {
    throw std::invalid_argument("max_instructions must be positive");
  }
  double rules = 0.0;
  for (double w : rule_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("rule_weights must be >= 0");
    rules += w;
  }
  if (!(rules > 0.0)) throw std::invalid_argument("rule_weights sum to zero");
  double probs = 0.0;
  for (double p : instruction_probs) {
    if (!(p >= 0.0)) {
      throw std::invalid_argument("instruction_probs must be >= 0");
    }
    probs += p;
  }
  if (std::abs(probs - 1.0) > 1e-12) {
    throw std::invalid_argument("instruction_probs must sum to 1");
  }
  bool any = false;
  for (bool m : mutable_factors) any = any || m;
  if (!any) throw std::invalid_argument("no mutable factor");
  if (max_attempts == 0) throw std::invalid_argument("max_attempts is zero");
}

bool OpcodeLegal(const WorkspaceSchema& schema, Opcode op) {
  if (op == Opcode::kUTransform) return schema.Count(SymbolKind::kGamma) > 0;
  if (op == Opcode::kEcPbe) return schema.has_reserved_density();
  return true;
}

std::optional<Program> RuleInsert(const Program& p, const MutationConfig& cfg,
                                  Rng& rng) {
  if (p.size() >= cfg.max_instructions) return std::nullopt;
  const WorkspaceSchema& s = p.schema();
  const auto op = SampleOpcode(s, cfg, rng);
  if (!op) return std::nullopt;
  const size_t pos = UniformIndex(rng, p.size() + 1);
  Instruction ins;
  ins.op = *op;
  ins.out = {SymbolKind::kVariable,
             static_cast<uint16_t>(UniformIndex(rng, s.variables().size()))};
  const std::vector<Symbol> inputs = InputSymbols(s);
  if (NumInputs(ins.op) >= 1) ins.in1 = Pick(inputs, rng);
  if (NumInputs(ins.op) >= 2) ins.in2 = Pick(inputs, rng);
  if (ins.op == Opcode::kUTransform) ins.gamma = PickGamma(s, rng);
  Program child = p;
  auto& code = child.mutable_instructions();
  code.insert(code.begin() + static_cast<std::ptrdiff_t>(pos), ins);
  return child;
}

std::optional<Program> RuleRemove(const Program& p, const MutationConfig&,
                                  Rng& rng) {
  if (p.empty()) return std::nullopt;
  Program child = p;
  auto& code = child.mutable_instructions();
  code.erase(code.begin() +
             static_cast<std::ptrdiff_t>(UniformIndex(rng, code.size())));
  return child;
}

std::optional<Program> RuleChangeOp(const Program& p, const MutationConfig& cfg,
                                    Rng& rng) {
  if (p.empty()) return std::nullopt;
  const size_t at = UniformIndex(rng, p.size());
  const Opcode old_op = p.instructions()[at].op;
  const auto op = SampleOpcode(p.schema(), cfg, rng, old_op);
  if (!op) return std::nullopt;
  Program child = p;
  Instruction& ins = child.mutable_instructions()[at];
  ins.op = *op;
  FitOperands(ins, old_op, p.schema(), rng);
  return child;
}

std::optional<Program> RuleChangeArg(const Program& p, const MutationConfig&,
                                     Rng& rng) {
  if (p.empty()) return std::nullopt;
  const WorkspaceSchema& s = p.schema();
  const size_t at = UniformIndex(rng, p.size());
  const Instruction& old = p.instructions()[at];
  // Slots: the workspace inputs, plus the gamma when there is a choice.
  std::vector<int> slots;
  if (NumInputs(old.op) >= 1) slots.push_back(1);
  if (NumInputs(old.op) >= 2) slots.push_back(2);
  if (old.op == Opcode::kUTransform && s.Count(SymbolKind::kGamma) > 1) {
    slots.push_back(3);
  }
  if (slots.empty()) return std::nullopt;
  const int slot = Pick(slots, rng);
  Program child = p;
  Instruction& ins = child.mutable_instructions()[at];
  Symbol* target = slot == 1 ? &ins.in1 : slot == 2 ? &ins.in2 : &ins.gamma;
  std::vector<Symbol> choices;
  if (slot == 3) {
    for (size_t i = 0; i < s.Count(SymbolKind::kGamma); ++i) {
      choices.push_back({SymbolKind::kGamma, static_cast<uint16_t>(i)});
    }
  } else {
    choices = InputSymbols(s);
  }
  std::erase(choices, *target);
  if (choices.empty()) return std::nullopt;
  *target = Pick(choices, rng);
  return child;
}

std::optional<Program> ApplyRule(MutationRule rule, const Program& p,
                                 const MutationConfig& cfg, Rng& rng) {
  switch (rule) {
    case MutationRule::kInsert:
      return RuleInsert(p, cfg, rng);
    case MutationRule::kRemove:
      return RuleRemove(p, cfg, rng);
    case MutationRule::kChangeOp:
      return RuleChangeOp(p, cfg, rng);
    case MutationRule::kChangeArg:
      return RuleChangeArg(p, cfg, rng);
  }
  return std::nullopt;
}

MutationOutcome Mutate(const FunctionalForm& parent, const MutationConfig& cfg,
                       Rng& rng) {
  std::vector<size_t> factors;
  for (size_t f = 0; f < kNumFactors; ++f) {
    if (cfg.mutable_factors[f]) factors.push_back(f);
  }
  for (size_t attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const size_t f = Pick(factors, rng);
    const auto rule =
        static_cast<MutationRule>(SampleWeighted(cfg.rule_weights, rng));
    auto child = ApplyRule(rule, parent.factor(f), cfg, rng);
    if (!child) continue;
    MutationOutcome out{parent, f, rule, true};
    out.form.mutable_factor(f) = std::move(*child);
    return out;
  }
  return MutationOutcome{parent, 0, MutationRule::kInsert, false};
}

}  // namespace xcevo
