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

#include "xcevo/functional.h"

#include "xcevo/fingerprint.h"

namespace xcevo {

SchemaPtr EmptySchema() {
  static const SchemaPtr schema = MakeSchema({}, {"F"}, {}, {});
  return schema;
}

FunctionalForm::FunctionalForm(Program x, Program css, Program cos)
    : factors_{std::move(x), std::move(css), std::move(cos)} {}

size_t FunctionalForm::num_params() const {
  size_t n = 0;
  for (const Program& p : factors_) n += p.schema().num_params();
  return n;
}

size_t FunctionalForm::offset(size_t f) const {
  size_t n = 0;
  for (size_t i = 0; i < f; ++i) n += factors_[i].schema().num_params();
  return n;
}

std::vector<std::string> FunctionalForm::FlatParamNames() const {
  std::vector<std::string> names;
  for (size_t f = 0; f < kNumFactors; ++f) {
    for (const std::string& n : factors_[f].schema().FlatParamNames()) {
      names.push_back(std::string(kFactorNames[f]) + "." + n);
    }
  }
  return names;
}

std::array<uint64_t, kNumFactors> FunctionalForm::Fingerprints() const {
  std::array<uint64_t, kNumFactors> d;
  for (size_t f = 0; f < kNumFactors; ++f) d[f] = Fingerprint(factors_[f]);
  return d;
}

uint64_t FunctionalForm::Digest() const {
  const auto d = Fingerprints();
  return CombineDigests(d);
}

FunctionalForm Wb97mvForm() {
  return FunctionalForm(BuiltinProgram(Builtin::kWb97mvX),
                        BuiltinProgram(Builtin::kWb97mvCss),
                        BuiltinProgram(Builtin::kWb97mvCos));
}

std::vector<double> Wb97mvDefaultParams() {
  std::vector<double> flat;
  for (Builtin b : {Builtin::kWb97mvX, Builtin::kWb97mvCss,
                    Builtin::kWb97mvCos}) {
    const auto p = BuiltinDefaultParams(b);
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return flat;
}

FunctionalForm B97ExchangeForm() {
  return FunctionalForm(BuiltinProgram(Builtin::kB97X), Program(EmptySchema()),
                        Program(EmptySchema()));
}

FunctionalForm EmptyB97SearchForm() {
  static const SchemaPtr schema = MakeSchema(
      {"x2"}, {"F", "v0", "v1"}, {"c0", "c1", "c2", "c3"}, {"gamma"});
  return FunctionalForm(Program(schema), Program(EmptySchema()),
                        Program(EmptySchema()));
}

namespace {

// Marks live instructions and parameters by a backward sweep from "F".
void SweepLiveness(const Program& program, std::vector<bool>* live_code,
                   std::vector<bool>* live_params) {
  const WorkspaceSchema& schema = program.schema();
  const auto& code = program.instructions();
  std::vector<bool> live_var(schema.variables().size(), false);
  live_var[schema.output()] = true;
  live_code->assign(code.size(), false);
  live_params->assign(schema.num_params(), false);
  auto use = [&](Symbol s) {
    if (s.kind == SymbolKind::kVariable) {
      live_var[s.index] = true;
    } else if (s.kind == SymbolKind::kParameter ||
               s.kind == SymbolKind::kGamma) {
      (*live_params)[schema.FlatIndex(s)] = true;
    }
  };
  for (size_t i = code.size(); i-- > 0;) {
    const Instruction& ins = code[i];
    if (ins.out.kind != SymbolKind::kVariable || !live_var[ins.out.index]) {
      continue;
    }
    (*live_code)[i] = true;
    // MULADD reads its accumulator; everything else overwrites it.
    if (ins.op != Opcode::kMulAdd) live_var[ins.out.index] = false;
    use(ins.in1);
    use(ins.in2);
    use(ins.gamma);
  }
}

}  // namespace

std::vector<bool> LiveParameters(const Program& program) {
  std::vector<bool> code, params;
  SweepLiveness(program, &code, &params);
  return params;
}

std::vector<size_t> LiveInstructions(const Program& program) {
  std::vector<bool> code, params;
  SweepLiveness(program, &code, &params);
  std::vector<size_t> out;
  for (size_t i = 0; i < code.size(); ++i) {
    if (code[i]) out.push_back(i);
  }
  return out;
}

std::vector<bool> LiveParameters(const FunctionalForm& form) {
  std::vector<bool> flat;
  for (size_t f = 0; f < kNumFactors; ++f) {
    const auto live = LiveParameters(form.factor(f));
    flat.insert(flat.end(), live.begin(), live.end());
  }
  return flat;
}

}  // namespace xcevo
