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

#include "xcevo/expression.h"

#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace xcevo {

ExprPtr Expr::Constant(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kConstant;
  e->value = v;
  return e;
}

ExprPtr Expr::Feature(std::string name, size_t index) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kFeature;
  e->name = std::move(name);
  e->index = index;
  return e;
}

ExprPtr Expr::Parameter(std::string name, size_t flat_index) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::kParameter;
  e->name = std::move(name);
  e->index = flat_index;
  return e;
}

bool StructurallyEqual(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case Expr::Kind::kConstant:
      // Bitwise, so NaN constants compare equal to themselves.
      return std::bit_cast<uint64_t>(a->value) ==
             std::bit_cast<uint64_t>(b->value);
    case Expr::Kind::kFeature:
    case Expr::Kind::kParameter:
      return a->name == b->name && a->index == b->index;
    case Expr::Kind::kOp:
      if (a->op != b->op || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i) {
        if (!StructurallyEqual(a->args[i], b->args[i])) return false;
      }
      if (static_cast<bool>(a->gamma) != static_cast<bool>(b->gamma)) {
        return false;
      }
      return !a->gamma || StructurallyEqual(a->gamma, b->gamma);
  }
  return false;
}

double Evaluate(const ExprPtr& expr, std::span<const double> features,
                std::span<const double> params) {
  switch (expr->kind) {
    case Expr::Kind::kConstant:
      return expr->value;
    case Expr::Kind::kFeature:
      return features[expr->index];
    case Expr::Kind::kParameter:
      return params[expr->index];
    case Expr::Kind::kOp:
      break;
  }
  if (expr->op == Opcode::kEcPbe) {
    return blocks::EcPbeRatio(Evaluate(expr->args[0], features, params),
                              Evaluate(expr->args[1], features, params),
                              Evaluate(expr->args[2], features, params),
                              Evaluate(expr->args[3], features, params));
  }
  const double a = Evaluate(expr->args[0], features, params);
  const double b =
      expr->args.size() > 1 ? Evaluate(expr->args[1], features, params) : 0.0;
  const double g = expr->gamma ? Evaluate(expr->gamma, features, params) : 0.0;
  return ApplyScalar(expr->op, a, b, 0.0, g);
}

namespace {

// Features and parameters are finite by precondition.
bool IsFiniteLeaf(const ExprPtr& e) {
  return e->kind == Expr::Kind::kFeature ||
         e->kind == Expr::Kind::kParameter ||
         (e->kind == Expr::Kind::kConstant && std::isfinite(e->value));
}

bool IsZeroConstant(const ExprPtr& e) {
  return e->kind == Expr::Kind::kConstant && e->value == 0.0;
}

ExprPtr MakeOp(Opcode op, std::vector<ExprPtr> args, ExprPtr gamma) {
  if (op == Opcode::kAdd) {
    if (IsZeroConstant(args[0])) return args[1];
    if (IsZeroConstant(args[1])) return args[0];
  }
  if (op == Opcode::kSub && IsZeroConstant(args[1])) return args[0];

  bool all_constant = op != Opcode::kEcPbe && !gamma;
  for (const auto& a : args) {
    all_constant = all_constant && a->kind == Expr::Kind::kConstant;
  }
  if (all_constant) {
    const double a = args[0]->value;
    const double b = args.size() > 1 ? args[1]->value : 0.0;
    return Expr::Constant(ApplyScalar(op, a, b, 0.0, 0.0));
  }
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::kOp;
  e->op = op;
  e->args = std::move(args);
  e->gamma = std::move(gamma);
  return e;
}

}  // namespace

ExprPtr SimplifyToExpression(const Program& program) {
  CheckValid(program);
  const WorkspaceSchema& schema = program.schema();
  std::vector<ExprPtr> vars(schema.variables().size(), Expr::Constant(0.0));

  auto leaf = [&](Symbol s) -> ExprPtr {
    switch (s.kind) {
      case SymbolKind::kFeature:
        return Expr::Feature(schema.NameOf(s), s.index);
      case SymbolKind::kVariable:
        return vars[s.index];
      case SymbolKind::kParameter:
      case SymbolKind::kGamma:
        return Expr::Parameter(schema.NameOf(s), schema.FlatIndex(s));
      default:
        throw std::logic_error("SimplifyToExpression: unresolved symbol");
    }
  };

  for (const Instruction& ins : program.instructions()) {
    ExprPtr result;
    switch (ins.op) {
      case Opcode::kEcPbe: {
        std::vector<ExprPtr> args;
        for (int r : schema.reserved()) {
          args.push_back(
              Expr::Feature(schema.features()[r], static_cast<size_t>(r)));
        }
        result = MakeOp(Opcode::kEcPbe, std::move(args), nullptr);
        break;
      }
      case Opcode::kMulAdd: {
        // acc + leaf*0 is acc: features and parameters are finite, and
        // adding a signed zero changes no value.
        const ExprPtr a = leaf(ins.in1);
        const ExprPtr b = leaf(ins.in2);
        if ((IsZeroConstant(a) && IsFiniteLeaf(b)) ||
            (IsZeroConstant(b) && IsFiniteLeaf(a))) {
          result = vars[ins.out.index];
          break;
        }
        ExprPtr product = MakeOp(Opcode::kMul, {a, b}, nullptr);
        result = MakeOp(Opcode::kAdd, {vars[ins.out.index], product}, nullptr);
        break;
      }
      case Opcode::kUTransform:
        result = MakeOp(ins.op, {leaf(ins.in1)}, leaf(ins.gamma));
        break;
      default:
        if (NumInputs(ins.op) == 2) {
          result = MakeOp(ins.op, {leaf(ins.in1), leaf(ins.in2)}, nullptr);
        } else {
          result = MakeOp(ins.op, {leaf(ins.in1)}, nullptr);
        }
    }
    vars[ins.out.index] = std::move(result);
  }
  return vars[schema.output()];
}

// ---------------------------------------------------------------------------
// Printing

namespace {

constexpr int kPrecSum = 1;
constexpr int kPrecProduct = 2;
constexpr int kPrecPower = 3;
constexpr int kPrecAtom = 4;

std::string FormatNumber(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

class Printer {
 public:
  explicit Printer(const PrintOptions& options) : options_(options) {}

  std::string Print(const ExprPtr& root) {
    std::string main = Render(root, 0);
    std::string text = main;
    // Definitions may introduce further abbreviations; iterate until stable.
    for (size_t i = 0; i < abbreviations_.size(); ++i) {
      const ExprPtr u = abbreviations_[i];
      std::string arg = Render(u->args[0], kPrecProduct);
      std::string gamma = Render(u->gamma, kPrecProduct);
      text += "\n  where " + Name(i) + " = " + gamma + "*" + arg + "/(1 + " +
              gamma + "*" + arg + ")";
    }
    return text;
  }

 private:
  static std::string Name(size_t i) {
    return i == 0 ? std::string("u") : "u" + std::to_string(i);
  }

  static int Precedence(const ExprPtr& e) {
    if (e->kind == Expr::Kind::kConstant) {
      return e->value < 0.0 ? kPrecSum : kPrecAtom;
    }
    if (e->kind != Expr::Kind::kOp) return kPrecAtom;
    switch (e->op) {
      case Opcode::kAdd:
      case Opcode::kSub:
        return kPrecSum;
      case Opcode::kMul:
      case Opcode::kDiv:
        return kPrecProduct;
      case Opcode::kPow2:
      case Opcode::kPow3:
      case Opcode::kPow4:
      case Opcode::kPow6:
        return kPrecPower;
      default:
        return kPrecAtom;
    }
  }

  std::string Render(const ExprPtr& e, int min_prec) {
    std::string s = RenderBare(e);
    if (Precedence(e) < min_prec) return "(" + s + ")";
    return s;
  }

  std::string RenderBare(const ExprPtr& e) {
    switch (e->kind) {
      case Expr::Kind::kConstant:
        return FormatNumber(e->value);
      case Expr::Kind::kFeature:
        return e->name;
      case Expr::Kind::kParameter:
        if (e->index < options_.param_values.size()) {
          const double v = options_.param_values[e->index];
          return v < 0.0 ? "(" + FormatNumber(v) + ")" : FormatNumber(v);
        }
        return e->name;
      case Expr::Kind::kOp:
        break;
    }
    const auto& a = e->args;
    switch (e->op) {
      case Opcode::kAdd:
        return Render(a[0], kPrecSum) + " + " + Render(a[1], kPrecSum);
      case Opcode::kSub:
        return Render(a[0], kPrecSum) + " - " + Render(a[1], kPrecProduct);
      case Opcode::kMul:
        return Render(a[0], kPrecProduct) + "*" + Render(a[1], kPrecProduct);
      case Opcode::kDiv:
        return Render(a[0], kPrecProduct) + "/" + Render(a[1], kPrecPower);
      case Opcode::kPow2:
        return Render(a[0], kPrecAtom) + "^2";
      case Opcode::kPow3:
        return Render(a[0], kPrecAtom) + "^3";
      case Opcode::kPow4:
        return Render(a[0], kPrecAtom) + "^4";
      case Opcode::kPow6:
        return Render(a[0], kPrecAtom) + "^6";
      case Opcode::kSqrt:
        return "sqrt(" + Render(a[0], 0) + ")";
      case Opcode::kCbrt:
        return "cbrt(" + Render(a[0], 0) + ")";
      case Opcode::kFxPbe:
        return "FxPBE(" + Render(a[0], 0) + ")";
      case Opcode::kFxRpbe:
        return "FxRPBE(" + Render(a[0], 0) + ")";
      case Opcode::kFxB88:
        return "FxB88(" + Render(a[0], 0) + ")";
      case Opcode::kEcPbe:
        return "EcPBE(" + a[0]->name + ", " + a[1]->name + ", " + a[2]->name +
               ", " + a[3]->name + ")";
      case Opcode::kUTransform:
        return Name(AbbreviationIndex(e));
      case Opcode::kMulAdd:
        break;
    }
    return "?";
  }

  size_t AbbreviationIndex(const ExprPtr& e) {
    for (size_t i = 0; i < abbreviations_.size(); ++i) {
      if (StructurallyEqual(abbreviations_[i], e)) return i;
    }
    abbreviations_.push_back(e);
    return abbreviations_.size() - 1;
  }

  const PrintOptions& options_;
  std::vector<ExprPtr> abbreviations_;
};

}  // namespace

std::string ToString(const ExprPtr& expr, const PrintOptions& options) {
  return Printer(options).Print(expr);
}

}  // namespace xcevo
