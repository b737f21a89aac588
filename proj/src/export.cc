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

#include "xcevo/export.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xcevo/dsl.h"

namespace xcevo {

namespace {

using nlohmann::ordered_json;

constexpr std::string_view kFormat = "xcevo-functional";
constexpr int kVersion = 1;

ordered_json Number(double v) {
  // JSON has no inf/nan literal.
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double ReadNumber(const ordered_json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
  }
  throw ExportError(what + ": expected a number");
}

}  // namespace

std::string ExportJson(const FunctionalExport& e) {
  ordered_json root;
  root["format"] = kFormat;
  root["version"] = kVersion;
  ordered_json factors = ordered_json::object();
  for (size_t f = 0; f < kNumFactors; ++f) {
    const Program& p = e.form.factor(f);
    const auto names = p.schema().FlatParamNames();
    const auto values = e.form.FactorParams(e.params, f);
    ordered_json params = ordered_json::object();
    for (size_t i = 0; i < names.size(); ++i) {
      params[names[i]] = Number(values[i]);
    }
    ordered_json fj;
    fj["program"] = ToText(p);
    fj["parameters"] = params;
    factors[std::string(kFactorNames[f])] = fj;
  }
  root["factors"] = factors;
  if (e.j_train) root["J_train"] = Number(*e.j_train);
  if (e.j_val) root["J_val"] = Number(*e.j_val);
  if (e.j_test) root["J_test"] = Number(*e.j_test);
  return root.dump(2) + "\n";
}

FunctionalExport ImportJson(std::string_view text) {
  ordered_json root;
  try {
    root = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& err) {
    throw ExportError(std::string("malformed JSON: ") + err.what());
  }
  if (!root.is_object()) throw ExportError("top level must be an object");
  if (root.value("format", "") != kFormat) {
    throw ExportError("missing or wrong \"format\" field");
  }
  if (!root.contains("version") || root["version"] != kVersion) {
    throw ExportError("unsupported version");
  }
  if (!root.contains("factors") || !root["factors"].is_object()) {
    throw ExportError("missing \"factors\" object");
  }
  const ordered_json& factors = root["factors"];
  for (const auto& [key, unused] : factors.items()) {
    bool known = false;
    for (auto n : kFactorNames) known = known || key == n;
    if (!known) throw ExportError("unknown factor \"" + key + "\"");
  }
  std::vector<Program> programs;
  std::vector<double> flat;
  for (size_t f = 0; f < kNumFactors; ++f) {
    const std::string fname(kFactorNames[f]);
    if (!factors.contains(fname)) {
      programs.emplace_back(EmptySchema());
      continue;
    }
    const ordered_json& fj = factors[fname];
    if (!fj.contains("program") || !fj["program"].is_string()) {
      throw ExportError(fname + ": missing \"program\" text");
    }
    try {
      programs.push_back(ParseProgram(fj["program"].get<std::string>()));
    } catch (const ParseError& err) {
      throw ExportError(fname + ".program: " + err.what());
    }
    const ordered_json params =
        fj.contains("parameters") ? fj["parameters"] : ordered_json::object();
    if (!params.is_object()) {
      throw ExportError(fname + ": \"parameters\" must be an object");
    }
    const auto names = programs.back().schema().FlatParamNames();
    for (const auto& [key, unused] : params.items()) {
      bool known = false;
      for (const auto& n : names) known = known || key == n;
      if (!known) {
        throw ExportError(fname + ": parameter \"" + key +
                          "\" is not in the program schema");
      }
    }
    for (const auto& n : names) {
      if (!params.contains(n)) {
        throw ExportError("missing parameter " + fname + "." + n);
      }
      flat.push_back(ReadNumber(params[n], fname + "." + n));
    }
  }
  FunctionalExport e;
  e.form = FunctionalForm(std::move(programs[0]), std::move(programs[1]),
                          std::move(programs[2]));
  e.params = std::move(flat);
  if (root.contains("J_train")) e.j_train = ReadNumber(root["J_train"], "J_train");
  if (root.contains("J_val")) e.j_val = ReadNumber(root["J_val"], "J_val");
  if (root.contains("J_test")) e.j_test = ReadNumber(root["J_test"], "J_test");
  return e;
}

FunctionalExport LoadFunctionalFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExportError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ImportJson(ss.str());
}

void SaveFunctionalFile(const FunctionalExport& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot write " + path);
  out << ExportJson(e);
  if (!out) throw ExportError("write failed for " + path);
}

}  // namespace xcevo
