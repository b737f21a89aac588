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

#ifndef XCEVO_DSL_H_
#define XCEVO_DSL_H_

// Instruction-list representation of an enhancement factor. A program runs
// over a workspace of read-only features, zero-initialized variables and
// parameters; its value is the final content of the variable "F".

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xcevo {

enum class Opcode : uint8_t {
  kAdd,
  kSub,
  kMul,
  kDiv,
  kMulAdd,
  kPow2,
  kPow3,
  kPow4,
  kPow6,
  kSqrt,
  kCbrt,
  kUTransform,
  kFxPbe,
  kFxRpbe,
  kFxB88,
  kEcPbe,
};

inline constexpr size_t kNumOpcodes = 16;

inline constexpr std::array<Opcode, kNumOpcodes> kAllOpcodes = {
    Opcode::kAdd,   Opcode::kSub,   Opcode::kMul,        Opcode::kDiv,
    Opcode::kMulAdd, Opcode::kPow2, Opcode::kPow3,       Opcode::kPow4,
    Opcode::kPow6,  Opcode::kSqrt,  Opcode::kCbrt,       Opcode::kUTransform,
    Opcode::kFxPbe, Opcode::kFxRpbe, Opcode::kFxB88,     Opcode::kEcPbe,
};

std::string_view OpcodeName(Opcode op);
std::optional<Opcode> OpcodeFromName(std::string_view name);

// Number of workspace operands read (excluding the accumulator of MULADD and
// the gamma of UTRANSFORM). EC_PBE reads the reserved density features.
int NumInputs(Opcode op);

enum class SymbolKind : uint8_t {
  kNone,
  kFeature,
  kVariable,
  kParameter,
  kGamma,
  kUnknown,
};

struct Symbol {
  SymbolKind kind = SymbolKind::kNone;
  uint16_t index = 0;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

// Reserved feature names read by EC_PBE.
inline constexpr std::array<std::string_view, 4> kReservedDensityFeatures = {
    "rho_a", "rho_b", "x2_a", "x2_b"};

class WorkspaceSchema {
 public:
  static constexpr std::string_view kOutput = "F";

  // Throws std::invalid_argument when "F" is missing from the variables or a
  // name is repeated across groups.
  WorkspaceSchema(std::vector<std::string> features,
                  std::vector<std::string> variables,
                  std::vector<std::string> parameters,
                  std::vector<std::string> gammas);

  const std::vector<std::string>& features() const { return features_; }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<std::string>& parameters() const { return parameters_; }
  const std::vector<std::string>& gammas() const { return gammas_; }

  size_t Count(SymbolKind kind) const;
  bool IsValid(Symbol s) const {
    return s.kind != SymbolKind::kNone && s.kind != SymbolKind::kUnknown &&
           s.index < Count(s.kind);
  }

  // kUnknown when the name is not in the schema.
  Symbol Resolve(std::string_view name) const;
  const std::string& NameOf(Symbol s) const;

  uint16_t output() const { return output_; }

  // Flat parameter layout: scalar parameters, then gammas.
  size_t num_params() const { return parameters_.size() + gammas_.size(); }
  size_t FlatIndex(Symbol s) const;
  std::vector<std::string> FlatParamNames() const;

  bool has_reserved_density() const { return reserved_[0] >= 0; }
  // Feature indices of rho_a, rho_b, x2_a, x2_b (only if present).
  const std::array<int, 4>& reserved() const { return reserved_; }

  friend bool operator==(const WorkspaceSchema& a, const WorkspaceSchema& b) {
    return a.features_ == b.features_ && a.variables_ == b.variables_ &&
           a.parameters_ == b.parameters_ && a.gammas_ == b.gammas_;
  }

 private:
  std::vector<std::string> features_;
  std::vector<std::string> variables_;
  std::vector<std::string> parameters_;
  std::vector<std::string> gammas_;
  std::unordered_map<std::string, Symbol> lookup_;
  uint16_t output_ = 0;
  std::array<int, 4> reserved_ = {-1, -1, -1, -1};
};

using SchemaPtr = std::shared_ptr<const WorkspaceSchema>;

SchemaPtr MakeSchema(std::vector<std::string> features,
                     std::vector<std::string> variables,
                     std::vector<std::string> parameters,
                     std::vector<std::string> gammas);

struct Instruction {
  Opcode op = Opcode::kAdd;
  Symbol out;
  Symbol in1;
  Symbol in2;    // kNone for unary opcodes
  Symbol gamma;  // kGamma for UTRANSFORM, kNone otherwise

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

class Program {
 public:
  explicit Program(SchemaPtr schema, std::vector<Instruction> code = {});

  const WorkspaceSchema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  const std::vector<Instruction>& instructions() const { return code_; }
  std::vector<Instruction>& mutable_instructions() { return code_; }
  size_t size() const { return code_.size(); }
  bool empty() const { return code_.empty(); }

  // Appends an instruction by symbol names. Unknown names produce kUnknown
  // symbols, which Validate() reports.
  Program& Append(std::string_view out, Opcode op, std::string_view in1 = {},
                  std::string_view in2 = {}, std::string_view gamma = {});

  friend bool operator==(const Program& a, const Program& b) {
    return (a.schema_ == b.schema_ || *a.schema_ == *b.schema_) &&
           a.code_ == b.code_;
  }

 private:
  SchemaPtr schema_;
  std::vector<Instruction> code_;
};

struct Violation {
  // Offending instruction, or kSchemaLevel.
  size_t instruction = 0;
  std::string rule;
  std::string detail;

  static constexpr size_t kSchemaLevel = static_cast<size_t>(-1);
};

// Empty iff the program is well formed. Rules: "unknown-symbol",
// "output-is-feature", "output-is-parameter", "arity-mismatch",
// "gamma-misuse", "missing-gamma", "reserved-features-missing".
std::vector<Violation> Validate(const Program& program);

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what)
      : std::runtime_error(what) {}
};

// Throws ValidationError listing the violations, if any.
void CheckValid(const Program& program);

// Building blocks of existing functionals, as maps of p = x^2.
namespace blocks {

inline constexpr double kPbeKappa = 0.804;
inline constexpr double kPbeMu = 0.2195149727645171;
inline constexpr double kB88Beta = 0.0042;
// 4 (6 pi^2)^(2/3): s_s^2 = x_s^2 / kS2Denominator for spin-resolved x_s.
inline constexpr double kS2Denominator = 60.770664964607961831;

double FxPbe(double x2);
double FxRpbe(double x2);
double FxB88(double x2);
// PBE correlation enhancement over PW92, (eps_c + H) / eps_c, with the total
// gradient taken as |grad rho_a| + |grad rho_b|. 1 where eps_c vanishes.
double EcPbeRatio(double rho_a, double rho_b, double x2_a, double x2_b);

}  // namespace blocks

// One instruction applied to scalars. `acc` is the old value of the output
// (MULADD), `gamma` the bound gamma (UTRANSFORM). Shared by both execution
// paths so they agree bitwise.
inline double ApplyScalar(Opcode op, double a, double b, double acc,
                          double gamma) {
  switch (op) {
    case Opcode::kAdd:
      return a + b;
    case Opcode::kSub:
      return a - b;
    case Opcode::kMul:
      return a * b;
    case Opcode::kDiv:
      return a / b;
    case Opcode::kMulAdd:
      return acc + a * b;
    case Opcode::kPow2:
      return a * a;
    case Opcode::kPow3:
      return a * a * a;
    case Opcode::kPow4: {
      const double sq = a * a;
      return sq * sq;
    }
    case Opcode::kPow6: {
      const double sq = a * a;
      return sq * sq * sq;
    }
    case Opcode::kSqrt:
      return std::sqrt(a);
    case Opcode::kCbrt:
      return std::cbrt(a);
    case Opcode::kUTransform: {
      const double ga = gamma * a;
      return ga / (1.0 + ga);
    }
    case Opcode::kFxPbe:
      return blocks::FxPbe(a);
    case Opcode::kFxRpbe:
      return blocks::FxRpbe(a);
    case Opcode::kFxB88:
      return blocks::FxB88(a);
    case Opcode::kEcPbe:
      break;
  }
  return std::nan("");
}

// Pointwise execution. `features` follows schema().features(), `params` the
// flat layout. The program must validate; IEEE semantics throughout, so a
// non-finite result is returned, not thrown.
double Execute(const Program& program, std::span<const double> features,
               std::span<const double> params);

// Named-map variant; throws ValidationError for an invalid program or a map
// that does not cover the schema.
double Execute(const Program& program,
               const std::map<std::string, double>& features,
               const std::map<std::string, double>& params);

// Reusable storage for ExecuteBatch.
struct BatchScratch {
  std::vector<double> variables;
};

// Column-wise execution: one pass over instructions, each applied to all G
// points. Elementwise identical to Execute(). Throws std::invalid_argument
// when column lengths disagree with `out`.
void ExecuteBatch(const Program& program,
                  std::span<const std::span<const double>> feature_columns,
                  std::span<const double> params, std::span<double> out,
                  BatchScratch& scratch);

std::vector<double> ExecuteBatch(
    const Program& program,
    std::span<const std::span<const double>> feature_columns,
    std::span<const double> params);

// Text serialization: a schema header block, a separator, then one
// instruction per line as `out = OPCODE(in1[, in2][; gamma])`.
std::string ToText(const Program& program);

class ParseError : public std::runtime_error {
 public:
  ParseError(size_t line, size_t column, const std::string& message);
  size_t line() const { return line_; }
  size_t column() const { return column_; }

 private:
  size_t line_;
  size_t column_;
};

Program ParseProgram(std::string_view text);

// Programs transcribed from the published instruction sequences.
enum class Builtin { kB97X, kWb97mvX, kWb97mvCss, kWb97mvCos };

std::optional<Builtin> BuiltinFromName(std::string_view name);
Program BuiltinProgram(Builtin which);
// Throws std::invalid_argument for an unknown name.
Program BuiltinProgram(std::string_view name);

// Published parameter values for a builtin, in its flat layout.
std::vector<double> BuiltinDefaultParams(Builtin which);

// Copy of `program` on a schema extended by spare variables v<k> and spare
// scalar parameters k<j>, giving mutations room to work.
Program WithSpareCapacity(const Program& program, size_t spare_variables,
                          size_t spare_parameters);

// Adds the reserved density features so EC_PBE becomes usable.
Program WithReservedDensityFeatures(const Program& program);

// The 1-feature, 3-variable, 3+1-parameter workspace of the B97 search.
SchemaPtr B97Schema();

}  // namespace xcevo

#endif  // XCEVO_DSL_H_
