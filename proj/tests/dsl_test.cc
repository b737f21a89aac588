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

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "doctest.h"
#include "xcevo/dsl.h"
#include "xcevo/functional.h"

using namespace xcevo;

namespace {

double U(double gamma, double x2) { return gamma * x2 / (1.0 + gamma * x2); }

// Independent transcriptions of the power-series factors.
double OracleWx(const std::map<std::string, double>& p, double x2, double w) {
  const double u = U(p.at("gamma"), x2);
  return p.at("c00") + p.at("c10") * w + p.at("c01") * u;
}

double OracleWss(const std::map<std::string, double>& p, double x2, double w) {
  const double u = U(p.at("gamma"), x2);
  return p.at("c00") + p.at("c10") * w + p.at("c20") * w * w +
         p.at("c43") * std::pow(w, 4) * std::pow(u, 3) +
         p.at("c04") * std::pow(u, 4);
}

double OracleWos(const std::map<std::string, double>& p, double x2, double w) {
  const double u = U(p.at("gamma"), x2);
  return p.at("c00") + p.at("c10") * w + p.at("c20") * w * w +
         p.at("c21") * w * w * u + p.at("c60") * std::pow(w, 6) +
         p.at("c61") * std::pow(w, 6) * u;
}

std::map<std::string, double> RandomParams(const Program& p, std::mt19937_64& g) {
  std::uniform_real_distribution<double> c(-2.0, 2.0), gam(0.001, 1.0);
  std::map<std::string, double> out;
  for (const auto& n : p.schema().parameters()) out[n] = c(g);
  for (const auto& n : p.schema().gammas()) out[n] = gam(g);
  return out;
}

double RelErr(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

}  // namespace

TEST_CASE("builtin instruction counts") {
  CHECK(BuiltinProgram(Builtin::kB97X).size() == 5);
  CHECK(BuiltinProgram(Builtin::kWb97mvX).size() == 6);
  CHECK(BuiltinProgram(Builtin::kWb97mvCss).size() == 11);
  CHECK(BuiltinProgram(Builtin::kWb97mvCos).size() == 11);
}

TEST_CASE("B97 program equals c0 + c1 u + c2 u^2") {
  const Program p = BuiltinProgram(Builtin::kB97X);
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> lx(-4.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    auto params = RandomParams(p, g);
    const double x2 = std::pow(10.0, lx(g));
    const double u = U(params["gamma"], x2);
    const double want = params["c0"] + params["c1"] * u + params["c2"] * u * u;
    CHECK(RelErr(Execute(p, {{"x2", x2}}, params), want) < 1e-14);
  }
}

TEST_CASE("power-series programs match their closed forms") {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> lx(-4.0, 4.0), uw(-1.0, 1.0);
  const Program px = BuiltinProgram(Builtin::kWb97mvX);
  const Program pss = BuiltinProgram(Builtin::kWb97mvCss);
  const Program pos = BuiltinProgram(Builtin::kWb97mvCos);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x2 = std::pow(10.0, lx(g)), w = uw(g);
    const std::map<std::string, double> f = {{"x2", x2}, {"w", w}};
    auto a = RandomParams(px, g), b = RandomParams(pss, g),
         c = RandomParams(pos, g);
    worst = std::max(worst, RelErr(Execute(px, f, a), OracleWx(a, x2, w)));
    worst = std::max(worst, RelErr(Execute(pss, f, b), OracleWss(b, x2, w)));
    worst = std::max(worst, RelErr(Execute(pos, f, c), OracleWos(c, x2, w)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("empty program yields zero") {
  const Program p(B97Schema());
  CHECK(Execute(p, {{"x2", 3.0}}, {{"c0", 1.0}, {"c1", 1.0}, {"c2", 1.0},
                                   {"gamma", 1.0}}) == 0.0);
}

TEST_CASE("batch execution is bitwise equal to scalar execution") {
  for (Builtin b : {Builtin::kB97X, Builtin::kWb97mvX, Builtin::kWb97mvCss,
                    Builtin::kWb97mvCos}) {
    const Program p = BuiltinProgram(b);
    const auto params = BuiltinDefaultParams(b);
    std::mt19937_64 g(3);
    std::uniform_real_distribution<double> lx(-4.0, 4.0), uw(-1.0, 1.0);
    const size_t n = 257;
    std::vector<std::vector<double>> cols(p.schema().features().size(),
                                          std::vector<double>(n));
    for (size_t k = 0; k < cols.size(); ++k) {
      for (double& v : cols[k]) {
        v = p.schema().features()[k] == "w" ? uw(g) : std::pow(10.0, lx(g));
      }
    }
    std::vector<std::span<const double>> spans(cols.begin(), cols.end());
    const auto out = ExecuteBatch(p, spans, params);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> row;
      for (const auto& c : cols) row.push_back(c[i]);
      CHECK(std::bit_cast<uint64_t>(Execute(p, row, params)) ==
            std::bit_cast<uint64_t>(out[i]));
    }
  }
}

TEST_CASE("text format round-trips") {
  for (Builtin b : {Builtin::kB97X, Builtin::kWb97mvX, Builtin::kWb97mvCss,
                    Builtin::kWb97mvCos}) {
    const Program p = BuiltinProgram(b);
    const std::string text = ToText(p);
    const Program q = ParseProgram(text);
    CHECK(q == p);
    CHECK(ToText(q) == text);
  }
  const Program spare = WithSpareCapacity(BuiltinProgram(Builtin::kWb97mvCos), 2, 2);
  CHECK(ParseProgram(ToText(spare)) == spare);
}

TEST_CASE("parse errors carry positions") {
  const std::string good = ToText(BuiltinProgram(Builtin::kB97X));
  std::string bad = good;
  bad.replace(bad.find("POW2"), 4, "POW9");
  try {
    ParseProgram(bad);
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 5);
    CHECK(e.column() >= 1);
  }
  CHECK_THROWS_AS(ParseProgram("features: x2\n"), ParseError);
}

TEST_CASE("validation rejects illegal instructions") {
  SUBCASE("gamma outside UTRANSFORM") {
    Program p(B97Schema());
    p.Append("F", Opcode::kAdd, "gamma", "c0");
    CHECK_FALSE(Validate(p).empty());
  }
  SUBCASE("write to a feature") {
    Program p(B97Schema());
    p.Append("x2", Opcode::kAdd, "c0", "c1");
    CHECK(Validate(p).at(0).rule == "output-is-feature");
  }
  SUBCASE("arity") {
    Program p(B97Schema());
    p.Append("F", Opcode::kPow2, "c0", "c1");
    CHECK(Validate(p).at(0).rule == "arity-mismatch");
  }
  SUBCASE("UTRANSFORM without gamma") {
    Program p(B97Schema());
    p.Append("v0", Opcode::kUTransform, "x2");
    CHECK(Validate(p).at(0).rule == "missing-gamma");
  }
  SUBCASE("EC_PBE needs the reserved features") {
    Program p(B97Schema());
    p.Append("v0", Opcode::kEcPbe);
    CHECK_FALSE(Validate(p).empty());
    CHECK(Validate(WithReservedDensityFeatures(p)).empty());
  }
}

TEST_CASE("liveness marks only parameters reaching F") {
  const Program b97 = BuiltinProgram(Builtin::kB97X);
  const auto live = LiveParameters(b97);
  CHECK(std::count(live.begin(), live.end(), true) == 4);

  Program p(EmptyB97SearchForm().factor(0).schema_ptr());
  p.Append("v1", Opcode::kAdd, "c3", "c2")  // dead
      .Append("F", Opcode::kAdd, "c0", "x2");
  const auto l2 = LiveParameters(p);
  const auto names = p.schema().FlatParamNames();
  for (size_t i = 0; i < names.size(); ++i) {
    CHECK(l2[i] == (names[i] == "c0"));
  }
  CHECK(LiveInstructions(p) == std::vector<size_t>{1});
}

TEST_CASE("functional form flat layout") {
  const FunctionalForm f = Wb97mvForm();
  CHECK(f.num_params() == 4 + 6 + 7);
  CHECK(f.offset(1) == 4);
  CHECK(f.offset(2) == 10);
  CHECK(f.FlatParamNames().front() == "x.c00");
  CHECK(f.FlatParamNames().back() == "cos.gamma");
  CHECK(Wb97mvDefaultParams().size() == f.num_params());
}
