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

#include "xcevo/dsl.h"

#include <algorithm>
#include <cctype>
#include <numbers>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "xcevo/lda.h"

namespace xcevo {

namespace {

constexpr std::array<std::string_view, kNumOpcodes> kOpcodeNames = {
    "ADD",  "SUB",  "MUL",  "DIV",  "MULADD",     "POW2",   "POW3",  "POW4",
    "POW6", "SQRT", "CBRT", "UTRANSFORM", "FX_PBE", "FX_RPBE", "FX_B88",
    "EC_PBE",
};

}  // namespace

std::string_view OpcodeName(Opcode op) {
  return kOpcodeNames[static_cast<size_t>(op)];
}

std::optional<Opcode> OpcodeFromName(std::string_view name) {
  for (size_t i = 0; i < kNumOpcodes; ++i) {
    if (kOpcodeNames[i] == name) return static_cast<Opcode>(i);
  }
  return std::nullopt;
}

int NumInputs(Opcode op) {
  switch (op) {
    case Opcode::kAdd:
    case Opcode::kSub:
    case Opcode::kMul:
    case Opcode::kDiv:
    case Opcode::kMulAdd:
      return 2;
    case Opcode::kEcPbe:
      return 0;
    default:
      return 1;
  }
}

// ---------------------------------------------------------------------------
// WorkspaceSchema

WorkspaceSchema::WorkspaceSchema(std::vector<std::string> features,
                                 std::vector<std::string> variables,
                                 std::vector<std::string> parameters,
                                 std::vector<std::string> gammas)
    : features_(std::move(features)),
      variables_(std::move(variables)),
      parameters_(std::move(parameters)),
      gammas_(std::move(gammas)) {
  auto add_group = [this](const std::vector<std::string>& names,
                          SymbolKind kind) {
    if (names.size() > UINT16_MAX) {
      throw std::invalid_argument("workspace group too large");
    }
    for (size_t i = 0; i < names.size(); ++i) {
      if (names[i].empty()) {
        throw std::invalid_argument("workspace: empty symbol name");
      }
      const Symbol s{kind, static_cast<uint16_t>(i)};
      if (!lookup_.emplace(names[i], s).second) {
        throw std::invalid_argument("workspace: duplicate symbol '" +
                                    names[i] + "'");
      }
    }
  };
  add_group(features_, SymbolKind::kFeature);
  add_group(variables_, SymbolKind::kVariable);
  add_group(parameters_, SymbolKind::kParameter);
  add_group(gammas_, SymbolKind::kGamma);

  const Symbol f = Resolve(kOutput);
  if (f.kind != SymbolKind::kVariable) {
    throw std::invalid_argument("workspace: variable \"F\" is required");
  }
  output_ = f.index;

  for (size_t r = 0; r < kReservedDensityFeatures.size(); ++r) {
    const Symbol s = Resolve(kReservedDensityFeatures[r]);
    reserved_[r] = s.kind == SymbolKind::kFeature ? s.index : -1;
  }
  if (std::any_of(reserved_.begin(), reserved_.end(),
                  [](int i) { return i < 0; })) {
    reserved_ = {-1, -1, -1, -1};
  }
}

size_t WorkspaceSchema::Count(SymbolKind kind) const {
  switch (kind) {
    case SymbolKind::kFeature:
      return features_.size();
    case SymbolKind::kVariable:
      return variables_.size();
    case SymbolKind::kParameter:
      return parameters_.size();
    case SymbolKind::kGamma:
      return gammas_.size();
    default:
      return 0;
  }
}

Symbol WorkspaceSchema::Resolve(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return Symbol{SymbolKind::kUnknown, 0};
  return it->second;
}

const std::string& WorkspaceSchema::NameOf(Symbol s) const {
  if (!IsValid(s)) throw std::out_of_range("NameOf: invalid symbol");
  switch (s.kind) {
    case SymbolKind::kFeature:
      return features_[s.index];
    case SymbolKind::kVariable:
      return variables_[s.index];
    case SymbolKind::kParameter:
      return parameters_[s.index];
    default:
      return gammas_[s.index];
  }
}

size_t WorkspaceSchema::FlatIndex(Symbol s) const {
  if (s.kind == SymbolKind::kParameter) return s.index;
  if (s.kind == SymbolKind::kGamma) return parameters_.size() + s.index;
  throw std::invalid_argument("FlatIndex: not a parameter");
}

std::vector<std::string> WorkspaceSchema::FlatParamNames() const {
  std::vector<std::string> names = parameters_;
  names.insert(names.end(), gammas_.begin(), gammas_.end());
  return names;
}

SchemaPtr MakeSchema(std::vector<std::string> features,
                     std::vector<std::string> variables,
                     std::vector<std::string> parameters,
                     std::vector<std::string> gammas) {
  return std::make_shared<const WorkspaceSchema>(
      std::move(features), std::move(variables), std::move(parameters),
      std::move(gammas));
}

// ---------------------------------------------------------------------------
// Program

Program::Program(SchemaPtr schema, std::vector<Instruction> code)
    : schema_(std::move(schema)), code_(std::move(code)) {
  if (!schema_) throw std::invalid_argument("Program: null schema");
}

Program& Program::Append(std::string_view out, Opcode op, std::string_view in1,
                         std::string_view in2, std::string_view gamma) {
  Instruction ins;
  ins.op = op;
  ins.out = schema_->Resolve(out);
  ins.in1 = in1.empty() ? Symbol{} : schema_->Resolve(in1);
  ins.in2 = in2.empty() ? Symbol{} : schema_->Resolve(in2);
  ins.gamma = gamma.empty() ? Symbol{} : schema_->Resolve(gamma);
  code_.push_back(ins);
  return *this;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> Validate(const Program& program) {
  const WorkspaceSchema& schema = program.schema();
  std::vector<Violation> out;
  auto report = [&out](size_t i, std::string rule, std::string detail) {
    out.push_back(Violation{i, std::move(rule), std::move(detail)});
  };

  for (size_t i = 0; i < program.size(); ++i) {
    const Instruction& ins = program.instructions()[i];
    const int arity = NumInputs(ins.op);

    bool unknown = false;
    for (const Symbol* s : {&ins.out, &ins.in1, &ins.in2, &ins.gamma}) {
      if (s->kind == SymbolKind::kUnknown ||
          (s->kind != SymbolKind::kNone && !schema.IsValid(*s))) {
        unknown = true;
      }
    }
    if (unknown) {
      report(i, "unknown-symbol", "operand not in workspace");
      continue;
    }

    if (ins.out.kind == SymbolKind::kFeature) {
      report(i, "output-is-feature", "features are read-only");
    } else if (ins.out.kind == SymbolKind::kParameter ||
               ins.out.kind == SymbolKind::kGamma) {
      report(i, "output-is-parameter", "parameters are read-only");
    } else if (ins.out.kind != SymbolKind::kVariable) {
      report(i, "arity-mismatch", "missing output");
    }

    const bool has1 = ins.in1.kind != SymbolKind::kNone;
    const bool has2 = ins.in2.kind != SymbolKind::kNone;
    if ((arity >= 1) != has1 || (arity == 2) != has2) {
      report(i, "arity-mismatch",
             std::string(OpcodeName(ins.op)) + " expects " +
                 std::to_string(arity) + " operand(s)");
    }
    if (ins.in1.kind == SymbolKind::kGamma ||
        ins.in2.kind == SymbolKind::kGamma) {
      report(i, "gamma-misuse",
             "gamma parameters bind only to UTRANSFORM's gamma slot");
    }
    if (ins.op == Opcode::kUTransform) {
      if (ins.gamma.kind != SymbolKind::kGamma) {
        report(i, "missing-gamma", "UTRANSFORM needs a gamma parameter");
      }
    } else if (ins.gamma.kind != SymbolKind::kNone) {
      report(i, "gamma-misuse", "only UTRANSFORM takes a gamma");
    }
    if (ins.op == Opcode::kEcPbe && !schema.has_reserved_density()) {
      report(i, "reserved-features-missing",
             "EC_PBE reads rho_a, rho_b, x2_a, x2_b");
    }
  }
  return out;
}

void CheckValid(const Program& program) {
  const auto violations = Validate(program);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid program:";
  for (const auto& v : violations) {
    msg << " [" << v.instruction << ": " << v.rule << "]";
  }
  throw ValidationError(msg.str());
}

// ---------------------------------------------------------------------------
// Building blocks

namespace blocks {

double FxPbe(double x2) {
  const double s2 = x2 / kS2Denominator;
  return 1.0 + kPbeKappa - kPbeKappa / (1.0 + kPbeMu * s2 / kPbeKappa);
}

double FxRpbe(double x2) {
  const double s2 = x2 / kS2Denominator;
  return 1.0 + kPbeKappa * (1.0 - std::exp(-kPbeMu * s2 / kPbeKappa));
}

double FxB88(double x2) {
  const double x = std::sqrt(x2);
  return 1.0 + (kB88Beta / -kSpinExchangePrefactor) * x2 /
                   (1.0 + 6.0 * kB88Beta * x * std::asinh(x));
}

double EcPbeRatio(double rho_a, double rho_b, double x2_a, double x2_b) {
  constexpr double kPi = std::numbers::pi;
  constexpr double kBeta = 0.06672455060314922;
  const double kGamma = (1.0 - std::numbers::ln2) / (kPi * kPi);
  const double rho = rho_a + rho_b;
  if (!(rho > kDensityFloor)) return 1.0;
  const double zeta = std::clamp((rho_a - rho_b) / rho, -1.0, 1.0);
  const double eps = Pw92EpsilonC(WignerSeitzRadius(rho), zeta);
  if (eps == 0.0) return 1.0;
  const double phi =
      0.5 * (std::cbrt((1.0 + zeta) * (1.0 + zeta)) +
             std::cbrt((1.0 - zeta) * (1.0 - zeta)));
  const double grad = std::sqrt(x2_a) * rho_a * std::cbrt(rho_a) +
                      std::sqrt(x2_b) * rho_b * std::cbrt(rho_b);
  const double kf = std::cbrt(3.0 * kPi * kPi * rho);
  const double ks = std::sqrt(4.0 * kf / kPi);
  const double t = grad / (2.0 * phi * ks * rho);
  const double phi3 = phi * phi * phi;
  const double a =
      (kBeta / kGamma) / std::expm1(-eps / (kGamma * phi3));
  const double t2 = t * t;
  const double h =
      kGamma * phi3 *
      std::log1p((kBeta / kGamma) * t2 * (1.0 + a * t2) /
                 (1.0 + a * t2 + a * a * t2 * t2));
  return (eps + h) / eps;
}

}  // namespace blocks

// ---------------------------------------------------------------------------
// Pointwise execution

namespace {

inline double ResolveScalar(Symbol s, std::span<const double> features,
                            const double* vars, std::span<const double> params,
                            size_t num_scalar) {
  switch (s.kind) {
    case SymbolKind::kFeature:
      return features[s.index];
    case SymbolKind::kVariable:
      return vars[s.index];
    case SymbolKind::kParameter:
      return params[s.index];
    case SymbolKind::kGamma:
      return params[num_scalar + s.index];
    default:
      return 0.0;
  }
}

double ExecuteWith(const Program& program, std::span<const double> features,
                   std::span<const double> params, double* vars) {
  const WorkspaceSchema& schema = program.schema();
  const size_t num_scalar = schema.parameters().size();
  std::fill(vars, vars + schema.variables().size(), 0.0);
  for (const Instruction& ins : program.instructions()) {
    double& out = vars[ins.out.index];
    if (ins.op == Opcode::kEcPbe) {
      const auto& r = schema.reserved();
      out = blocks::EcPbeRatio(features[r[0]], features[r[1]], features[r[2]],
                               features[r[3]]);
      continue;
    }
    const double a = ResolveScalar(ins.in1, features, vars, params, num_scalar);
    const double b = ResolveScalar(ins.in2, features, vars, params, num_scalar);
    const double g =
        ResolveScalar(ins.gamma, features, vars, params, num_scalar);
    out = ApplyScalar(ins.op, a, b, out, g);
  }
  return vars[schema.output()];
}

}  // namespace

double Execute(const Program& program, std::span<const double> features,
               std::span<const double> params) {
  const size_t nvars = program.schema().variables().size();
  if (nvars <= 32) {
    std::array<double, 32> vars;
    return ExecuteWith(program, features, params, vars.data());
  }
  std::vector<double> vars(nvars);
  return ExecuteWith(program, features, params, vars.data());
}

double Execute(const Program& program,
               const std::map<std::string, double>& features,
               const std::map<std::string, double>& params) {
  CheckValid(program);
  const WorkspaceSchema& schema = program.schema();
  std::vector<double> fvals;
  for (const auto& name : schema.features()) {
    auto it = features.find(name);
    if (it == features.end()) {
      throw ValidationError("missing feature value '" + name + "'");
    }
    fvals.push_back(it->second);
  }
  std::vector<double> pvals;
  for (const auto& name : schema.FlatParamNames()) {
    auto it = params.find(name);
    if (it == params.end()) {
      throw ValidationError("missing parameter value '" + name + "'");
    }
    pvals.push_back(it->second);
  }
  return Execute(program, fvals, pvals);
}

// ---------------------------------------------------------------------------
// Batch execution

namespace {

struct Operand {
  const double* column = nullptr;
  double scalar = 0.0;
};

template <Opcode kOp>
void RunColumns(Operand a, Operand b, double gamma, double* out, size_t n) {
  if (a.column && b.column) {
    for (size_t g = 0; g < n; ++g) {
      out[g] = ApplyScalar(kOp, a.column[g], b.column[g], out[g], gamma);
    }
  } else if (a.column) {
    const double bs = b.scalar;
    for (size_t g = 0; g < n; ++g) {
      out[g] = ApplyScalar(kOp, a.column[g], bs, out[g], gamma);
    }
  } else if (b.column) {
    const double as = a.scalar;
    for (size_t g = 0; g < n; ++g) {
      out[g] = ApplyScalar(kOp, as, b.column[g], out[g], gamma);
    }
  } else {
    const double as = a.scalar;
    const double bs = b.scalar;
    for (size_t g = 0; g < n; ++g) {
      out[g] = ApplyScalar(kOp, as, bs, out[g], gamma);
    }
  }
}

using ColumnKernel = void (*)(Operand, Operand, double, double*, size_t);

template <size_t... I>
constexpr std::array<ColumnKernel, kNumOpcodes> MakeKernels(
    std::index_sequence<I...>) {
  return {&RunColumns<static_cast<Opcode>(I)>...};
}

constexpr std::array<ColumnKernel, kNumOpcodes> kKernels =
    MakeKernels(std::make_index_sequence<kNumOpcodes>{});

}  // namespace

void ExecuteBatch(const Program& program,
                  std::span<const std::span<const double>> feature_columns,
                  std::span<const double> params, std::span<double> out,
                  BatchScratch& scratch) {
  const WorkspaceSchema& schema = program.schema();
  const size_t n = out.size();
  if (feature_columns.size() != schema.features().size()) {
    throw std::invalid_argument("ExecuteBatch: feature column count mismatch");
  }
  for (const auto& col : feature_columns) {
    if (col.size() != n) {
      throw std::invalid_argument("ExecuteBatch: column length mismatch");
    }
  }
  if (params.size() != schema.num_params()) {
    throw std::invalid_argument("ExecuteBatch: parameter count mismatch");
  }
  if (n == 0) return;

  const size_t nvars = schema.variables().size();
  const size_t num_scalar = schema.parameters().size();
  scratch.variables.assign(nvars * n, 0.0);
  double* vars = scratch.variables.data();

  auto operand = [&](Symbol s) {
    Operand o;
    switch (s.kind) {
      case SymbolKind::kFeature:
        o.column = feature_columns[s.index].data();
        break;
      case SymbolKind::kVariable:
        o.column = vars + s.index * n;
        break;
      case SymbolKind::kParameter:
        o.scalar = params[s.index];
        break;
      case SymbolKind::kGamma:
        o.scalar = params[num_scalar + s.index];
        break;
      default:
        break;
    }
    return o;
  };

  for (const Instruction& ins : program.instructions()) {
    double* dst = vars + ins.out.index * n;
    if (ins.op == Opcode::kEcPbe) {
      const auto& r = schema.reserved();
      const double* ra = feature_columns[r[0]].data();
      const double* rb = feature_columns[r[1]].data();
      const double* xa = feature_columns[r[2]].data();
      const double* xb = feature_columns[r[3]].data();
      for (size_t g = 0; g < n; ++g) {
        dst[g] = blocks::EcPbeRatio(ra[g], rb[g], xa[g], xb[g]);
      }
      continue;
    }
    const double gamma = operand(ins.gamma).scalar;
    kKernels[static_cast<size_t>(ins.op)](operand(ins.in1), operand(ins.in2),
                                          gamma, dst, n);
  }
  const double* f = vars + schema.output() * n;
  std::copy(f, f + n, out.begin());
}

std::vector<double> ExecuteBatch(
    const Program& program,
    std::span<const std::span<const double>> feature_columns,
    std::span<const double> params) {
  const size_t n = feature_columns.empty() ? 0 : feature_columns[0].size();
  std::vector<double> out(n);
  BatchScratch scratch;
  ExecuteBatch(program, feature_columns, params, out, scratch);
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

constexpr std::string_view kHeaderKeys[] = {"features", "variables",
                                            "parameters", "gammas"};
constexpr std::string_view kSeparator = "---";

void AppendList(std::string& text, std::string_view key,
                const std::vector<std::string>& names) {
  text.append(key);
  text.push_back(':');
  for (const auto& n : names) {
    text.push_back(' ');
    text.append(n);
  }
  text.push_back('\n');
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string> SplitWords(std::string_view s) {
  std::vector<std::string> words;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

}  // namespace

std::string ToText(const Program& program) {
  const WorkspaceSchema& schema = program.schema();
  std::string text;
  AppendList(text, kHeaderKeys[0], schema.features());
  AppendList(text, kHeaderKeys[1], schema.variables());
  AppendList(text, kHeaderKeys[2], schema.parameters());
  AppendList(text, kHeaderKeys[3], schema.gammas());
  text.append(kSeparator);
  text.push_back('\n');
  auto name = [&schema](Symbol s) -> std::string {
    return schema.IsValid(s) ? schema.NameOf(s) : std::string("?");
  };
  for (const Instruction& ins : program.instructions()) {
    text += name(ins.out);
    text += " = ";
    text += OpcodeName(ins.op);
    text += '(';
    if (ins.in1.kind != SymbolKind::kNone) text += name(ins.in1);
    if (ins.in2.kind != SymbolKind::kNone) {
      text += ", ";
      text += name(ins.in2);
    }
    if (ins.gamma.kind != SymbolKind::kNone) {
      text += "; ";
      text += name(ins.gamma);
    }
    text += ")\n";
  }
  return text;
}

ParseError::ParseError(size_t line, size_t column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

Program ParseProgram(std::string_view text) {
  std::map<std::string, std::vector<std::string>, std::less<>> header;
  std::vector<std::pair<size_t, std::string>> body;
  bool in_body = false;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::string_view line = Trim(raw);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (!in_body) {
      if (line == kSeparator) {
        in_body = true;
        continue;
      }
      const size_t colon = line.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(line_no, 1, "expected 'key: names' header line");
      }
      const std::string key(Trim(line.substr(0, colon)));
      if (std::find(std::begin(kHeaderKeys), std::end(kHeaderKeys), key) ==
          std::end(kHeaderKeys)) {
        throw ParseError(line_no, 1, "unknown header key '" + key + "'");
      }
      if (header.count(key)) {
        throw ParseError(line_no, 1, "duplicate header key '" + key + "'");
      }
      header[key] = SplitWords(line.substr(colon + 1));
    } else {
      body.emplace_back(line_no, std::string(raw));
    }
    if (end == text.size()) break;
  }
  if (!in_body) throw ParseError(line_no, 1, "missing '---' separator");
  for (auto key : kHeaderKeys) {
    if (!header.count(key)) {
      throw ParseError(1, 1, "missing header key '" + std::string(key) + "'");
    }
  }

  SchemaPtr schema;
  try {
    schema = MakeSchema(header["features"], header["variables"],
                        header["parameters"], header["gammas"]);
  } catch (const std::invalid_argument& e) {
    throw ParseError(1, 1, e.what());
  }

  Program program(schema);
  for (const auto& [ln, raw] : body) {
    auto fail = [&, ln = ln](size_t col, const std::string& msg) {
      throw ParseError(ln, col, msg);
    };
    const std::string_view line(raw);
    const size_t lead = line.find_first_not_of(" \t");
    const size_t eq = line.find('=');
    const size_t open = line.find('(');
    const size_t close = line.rfind(')');
    if (eq == std::string_view::npos) fail(lead + 1, "expected '='");
    if (open == std::string_view::npos || open < eq) {
      fail(eq + 2, "expected 'OPCODE('");
    }
    if (close == std::string_view::npos || close < open) {
      fail(line.size() + 1, "expected ')'");
    }
    if (!Trim(line.substr(close + 1)).empty()) {
      fail(close + 2, "trailing characters");
    }
    const std::string_view out = Trim(line.substr(0, eq));
    const std::string_view opname = Trim(line.substr(eq + 1, open - eq - 1));
    const auto op = OpcodeFromName(opname);
    if (!op) fail(eq + 2, "unknown opcode '" + std::string(opname) + "'");

    std::string_view args = line.substr(open + 1, close - open - 1);
    std::string_view gamma;
    if (const size_t semi = args.find(';'); semi != std::string_view::npos) {
      gamma = Trim(args.substr(semi + 1));
      args = args.substr(0, semi);
    }
    std::string_view in1 = Trim(args), in2;
    if (const size_t comma = args.find(','); comma != std::string_view::npos) {
      in1 = Trim(args.substr(0, comma));
      in2 = Trim(args.substr(comma + 1));
    }
    for (auto [sym, col] :
         {std::pair{out, lead}, std::pair{in1, open + 1},
          std::pair{in2, open + 1}, std::pair{gamma, open + 1}}) {
      if (!sym.empty() && schema->Resolve(sym).kind == SymbolKind::kUnknown) {
        fail(col + 1, "unknown symbol '" + std::string(sym) + "'");
      }
    }
    program.Append(out, *op, in1, in2, gamma);
  }
  return program;
}

// ---------------------------------------------------------------------------
// Builtins

SchemaPtr B97Schema() {
  static const SchemaPtr schema =
      MakeSchema({"x2"}, {"F", "v0", "v1"}, {"c0", "c1", "c2"}, {"gamma"});
  return schema;
}

std::optional<Builtin> BuiltinFromName(std::string_view name) {
  if (name == "B97X") return Builtin::kB97X;
  if (name == "WB97MV_X") return Builtin::kWb97mvX;
  if (name == "WB97MV_CSS") return Builtin::kWb97mvCss;
  if (name == "WB97MV_COS") return Builtin::kWb97mvCos;
  return std::nullopt;
}

Program BuiltinProgram(Builtin which) {
  using enum Opcode;
  switch (which) {
    case Builtin::kB97X: {
      Program p(B97Schema());
      p.Append("v0", kUTransform, "x2", "", "gamma")
          .Append("F", kAdd, "c0", "F")
          .Append("v1", kPow2, "v0")
          .Append("F", kMulAdd, "c1", "v0")
          .Append("F", kMulAdd, "c2", "v1");
      return p;
    }
    case Builtin::kWb97mvX: {
      Program p(MakeSchema({"w", "x2"}, {"F", "v0", "v1"},
                           {"c00", "c10", "c01"}, {"gamma"}));
      p.Append("v0", kUTransform, "x2", "", "gamma")
          .Append("F", kAdd, "c00", "F")
          .Append("v1", kMul, "c10", "w")
          .Append("F", kAdd, "F", "v1")
          .Append("v1", kMul, "c01", "v0")
          .Append("F", kAdd, "F", "v1");
      return p;
    }
    case Builtin::kWb97mvCss: {
      Program p(MakeSchema({"w", "x2"}, {"F", "v0", "v1", "v2", "v3"},
                           {"c00", "c10", "c20", "c43", "c04"}, {"gamma"}));
      p.Append("v0", kUTransform, "x2", "", "gamma")
          .Append("F", kAdd, "c00", "F")
          .Append("F", kMulAdd, "c10", "w")
          .Append("v1", kPow2, "w")
          .Append("F", kMulAdd, "c20", "v1")
          .Append("v1", kPow4, "w")
          .Append("v2", kPow3, "v0")
          .Append("v3", kMul, "v1", "v2")
          .Append("F", kMulAdd, "c43", "v3")
          .Append("v2", kPow4, "v0")
          .Append("F", kMulAdd, "c04", "v2");
      return p;
    }
    case Builtin::kWb97mvCos: {
      Program p(MakeSchema({"w", "x2"}, {"F", "v0", "v1", "v2", "v3"},
                           {"c00", "c10", "c20", "c21", "c60", "c61"},
                           {"gamma"}));
      p.Append("v0", kUTransform, "x2", "", "gamma")
          .Append("F", kAdd, "c00", "F")
          .Append("F", kMulAdd, "c10", "w")
          .Append("v1", kPow2, "w")
          .Append("F", kMulAdd, "c20", "v1")
          .Append("v3", kMul, "v1", "v0")
          .Append("F", kMulAdd, "c21", "v3")
          .Append("v1", kPow6, "w")
          .Append("F", kMulAdd, "c60", "v1")
          .Append("v3", kMul, "v1", "v0")
          .Append("F", kMulAdd, "c61", "v3");
      return p;
    }
  }
  throw std::invalid_argument("unknown builtin");
}

Program BuiltinProgram(std::string_view name) {
  const auto which = BuiltinFromName(name);
  if (!which) {
    throw std::invalid_argument("unknown builtin program '" +
                                std::string(name) + "'");
  }
  return BuiltinProgram(*which);
}

std::vector<double> BuiltinDefaultParams(Builtin which) {
  switch (which) {
    case Builtin::kB97X:
      return {0.8094, 0.5073, 0.7481, 0.004};
    case Builtin::kWb97mvX:
      return {0.85, 0.259, 1.007, 0.004};
    case Builtin::kWb97mvCss:
      return {0.443, -1.437, -4.535, -3.39, 4.278, 0.2};
    case Builtin::kWb97mvCos:
      return {1.0, 1.358, 2.924, -8.812, -1.39, 9.142, 0.006};
  }
  return {};
}

namespace {

Program Rebind(const Program& program, SchemaPtr schema) {
  const WorkspaceSchema& old = program.schema();
  auto remap = [&](Symbol s) {
    if (!old.IsValid(s)) return s;
    return schema->Resolve(old.NameOf(s));
  };
  std::vector<Instruction> code;
  for (Instruction ins : program.instructions()) {
    ins.out = remap(ins.out);
    ins.in1 = remap(ins.in1);
    ins.in2 = remap(ins.in2);
    ins.gamma = remap(ins.gamma);
    code.push_back(ins);
  }
  return Program(std::move(schema), std::move(code));
}

}  // namespace

Program WithSpareCapacity(const Program& program, size_t spare_variables,
                          size_t spare_parameters) {
  const WorkspaceSchema& old = program.schema();
  auto taken = [&old](const std::string& name) {
    return old.Resolve(name).kind != SymbolKind::kUnknown;
  };
  std::vector<std::string> variables = old.variables();
  for (size_t k = 0, added = 0; added < spare_variables; ++k) {
    const std::string name = "v" + std::to_string(k);
    if (!taken(name)) {
      variables.push_back(name);
      ++added;
    }
  }
  std::vector<std::string> parameters = old.parameters();
  for (size_t k = 0, added = 0; added < spare_parameters; ++k) {
    const std::string name = "k" + std::to_string(k);
    if (!taken(name)) {
      parameters.push_back(name);
      ++added;
    }
  }
  return Rebind(program, MakeSchema(old.features(), std::move(variables),
                                    std::move(parameters), old.gammas()));
}

Program WithReservedDensityFeatures(const Program& program) {
  const WorkspaceSchema& old = program.schema();
  if (old.has_reserved_density()) return program;
  std::vector<std::string> features = old.features();
  for (auto name : kReservedDensityFeatures) {
    if (old.Resolve(name).kind == SymbolKind::kUnknown) {
      features.emplace_back(name);
    }
  }
  return Rebind(program, MakeSchema(std::move(features), old.variables(),
                                    old.parameters(), old.gammas()));
}

}  // namespace xcevo
