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

#ifndef XCEVO_EXPRESSION_H_
#define XCEVO_EXPRESSION_H_

// Symbolic readout of a program: the expression tree that ends up in "F",
// with dead code dropped and parameter-free subtrees folded to constants.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xcevo/dsl.h"

namespace xcevo {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { kConstant, kFeature, kParameter, kOp };

  Kind kind = Kind::kConstant;
  double value = 0.0;         // kConstant
  std::string name;           // kFeature / kParameter (gammas included)
  size_t index = 0;           // feature index or flat parameter index
  Opcode op = Opcode::kAdd;   // kOp; MULADD never appears (lowered)
  std::vector<ExprPtr> args;  // kOp operands
  ExprPtr gamma;              // UTRANSFORM only

  static ExprPtr Constant(double v);
  static ExprPtr Feature(std::string name, size_t index);
  static ExprPtr Parameter(std::string name, size_t flat_index);
};

bool StructurallyEqual(const ExprPtr& a, const ExprPtr& b);

// Features and parameters laid out like the originating program's schema.
double Evaluate(const ExprPtr& expr, std::span<const double> features,
                std::span<const double> params);

ExprPtr SimplifyToExpression(const Program& program);

struct PrintOptions {
  // When set, parameters print as these values (flat layout) instead of names.
  std::span<const double> param_values;
};

// Infix text. Each distinct UTRANSFORM subtree is abbreviated as u, u1, ...
// and defined on following "where" lines.
std::string ToString(const ExprPtr& expr, const PrintOptions& options = {});

}  // namespace xcevo

#endif  // XCEVO_EXPRESSION_H_
