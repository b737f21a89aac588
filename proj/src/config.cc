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

#include "xcevo/config.h"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "xcevo/dsl.h"

namespace xcevo {

namespace {

std::string Located(size_t line, const std::string& field,
                    const std::string& message) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!field.empty()) out += field + ": ";
  return out + message;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool IsBareKeyChar(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
}

// Cursor over one line's value text.
class ValueParser {
 public:
  ValueParser(std::string_view text, size_t line, std::string key)
      : s_(text), line_(line), key_(std::move(key)) {}

  TomlValue ParseAll() {
    TomlValue v = Value();
    SkipSpace();
    if (pos_ < s_.size() && s_[pos_] != '#') Fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void Fail(const std::string& msg) {
    throw ConfigError(line_, key_, msg);
  }

  void SkipSpace() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  TomlValue Value() {
    SkipSpace();
    if (pos_ >= s_.size()) Fail("missing value");
    const char c = s_[pos_];
    TomlValue v;
    v.line = line_;
    if (c == '"') {
      v.value = String();
    } else if (c == '[') {
      v.value = Array();
    } else {
      v.value = Scalar();
    }
    return v;
  }

  std::string String() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) Fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          default: Fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) Fail("unterminated string");
    ++pos_;
    return out;
  }

  TomlValue::Array Array() {
    ++pos_;
    TomlValue::Array out;
    SkipSpace();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(Value());
      SkipSpace();
      if (pos_ >= s_.size()) Fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        SkipSpace();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      Fail("expected ',' or ']' in array");
    }
  }

  std::variant<bool, int64_t, double, std::string, TomlValue::Array> Scalar() {
    size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' &&
           s_[end] != ' ' && s_[end] != '\t' && s_[end] != '#') {
      ++end;
    }
    std::string tok(s_.substr(pos_, end - pos_));
    pos_ = end;
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") {
      return std::numeric_limits<double>::infinity();
    }
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::string digits;
    for (char c : tok) {
      if (c != '_') digits.push_back(c);
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    if (!is_float) {
      int64_t i = 0;
      const char* b = digits.data();
      const char* e = b + digits.size();
      if (!digits.empty() && *b == '+') ++b;
      auto [p, ec] = std::from_chars(b, e, i);
      if (ec == std::errc() && p == e && b != e) return i;
      Fail("invalid value '" + tok + "'");
    }
    errno = 0;
    char* endp = nullptr;
    const double d = std::strtod(digits.c_str(), &endp);
    if (digits.empty() || endp != digits.c_str() + digits.size() ||
        errno == ERANGE) {
      Fail("invalid number '" + tok + "'");
    }
    return d;
  }

  std::string_view s_;
  size_t pos_ = 0;
  size_t line_;
  std::string key_;
};

}  // namespace

ConfigError::ConfigError(size_t line, std::string field,
                         const std::string& message)
    : std::runtime_error(Located(line, field, message)),
      line_(line),
      field_(std::move(field)) {}

TomlTable TomlTable::Parse(std::string_view text) {
  TomlTable table;
  std::string prefix;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = Trim(text.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      const size_t close = line.find(']');
      if (close == std::string_view::npos) {
        throw ConfigError(line_no, "", "unterminated table header");
      }
      std::string_view rest = Trim(line.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') {
        throw ConfigError(line_no, "", "trailing characters after header");
      }
      std::string_view name = Trim(line.substr(1, close - 1));
      if (name.empty()) throw ConfigError(line_no, "", "empty table name");
      for (char c : name) {
        if (!IsBareKeyChar(c)) {
          throw ConfigError(line_no, std::string(name), "invalid table name");
        }
      }
      prefix = std::string(name) + ".";
    } else {
      const size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(line_no, "", "expected 'key = value'");
      }
      std::string_view key = Trim(line.substr(0, eq));
      if (key.empty()) throw ConfigError(line_no, "", "empty key");
      for (char c : key) {
        if (!IsBareKeyChar(c)) {
          throw ConfigError(line_no, std::string(key), "invalid key");
        }
      }
      const std::string full = prefix + std::string(key);
      ValueParser vp(line.substr(eq + 1), line_no, full);
      TomlValue v = vp.ParseAll();
      if (!table.entries_.emplace(full, std::move(v)).second) {
        throw ConfigError(line_no, full, "duplicate key");
      }
    }
    if (nl == text.size()) break;
  }
  return table;
}

bool TomlTable::Has(const std::string& key) const {
  return entries_.count(key) != 0;
}

const TomlValue* TomlTable::Find(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

namespace {

[[noreturn]] void TypeError(const TomlValue& v, const std::string& key,
                            const char* want) {
  throw ConfigError(v.line, key, std::string("expected ") + want);
}

double AsReal(const TomlValue& v, const std::string& key) {
  if (const auto* d = std::get_if<double>(&v.value)) return *d;
  if (const auto* i = std::get_if<int64_t>(&v.value)) {
    return static_cast<double>(*i);
  }
  TypeError(v, key, "a number");
}

std::string AsString(const TomlValue& v, const std::string& key) {
  if (const auto* s = std::get_if<std::string>(&v.value)) return *s;
  TypeError(v, key, "a string");
}

}  // namespace

std::optional<bool> TomlTable::GetBool(const std::string& key) const {
  const TomlValue* v = Find(key);
  if (!v) return std::nullopt;
  if (const auto* b = std::get_if<bool>(&v->value)) return *b;
  TypeError(*v, key, "a boolean");
}

std::optional<int64_t> TomlTable::GetInt(const std::string& key) const {
  const TomlValue* v = Find(key);
  if (!v) return std::nullopt;
  if (const auto* i = std::get_if<int64_t>(&v->value)) return *i;
  TypeError(*v, key, "an integer");
}

std::optional<size_t> TomlTable::GetSize(const std::string& key) const {
  const std::optional<int64_t> i = GetInt(key);
  if (!i) return std::nullopt;
  if (*i < 0) {
    throw ConfigError(Find(key)->line, key, "must be non-negative");
  }
  return static_cast<size_t>(*i);
}

std::optional<double> TomlTable::GetReal(const std::string& key) const {
  const TomlValue* v = Find(key);
  if (!v) return std::nullopt;
  return AsReal(*v, key);
}

std::optional<std::string> TomlTable::GetString(const std::string& key) const {
  const TomlValue* v = Find(key);
  if (!v) return std::nullopt;
  return AsString(*v, key);
}

std::optional<std::vector<double>> TomlTable::GetRealArray(
    const std::string& key) const {
  const TomlValue* v = Find(key);
  if (!v) return std::nullopt;
  const auto* a = std::get_if<TomlValue::Array>(&v->value);
  if (!a) TypeError(*v, key, "an array of numbers");
  std::vector<double> out;
  for (const TomlValue& e : *a) out.push_back(AsReal(e, key));
  return out;
}

std::optional<std::vector<std::string>> TomlTable::GetStringArray(
    const std::string& key) const {
  const TomlValue* v = Find(key);
  if (!v) return std::nullopt;
  const auto* a = std::get_if<TomlValue::Array>(&v->value);
  if (!a) TypeError(*v, key, "an array of strings");
  std::vector<std::string> out;
  for (const TomlValue& e : *a) out.push_back(AsString(e, key));
  return out;
}

void TomlTable::RejectUnknown() const {
  for (const auto& [key, v] : entries_) {
    if (!used_.count(key)) throw ConfigError(v.line, key, "unknown field");
  }
}

std::string_view PresetName(Preset p) {
  return p == Preset::kB97 ? "b97" : "wb97mv";
}

RunConfig PresetConfig(Preset preset) {
  RunConfig c;
  c.preset = preset;
  if (preset == Preset::kB97) {
    c.generator.target = "B97X";
    c.omega = 0.0;
    c.search.capacity = 100;
    c.search.tournament_size = 10;
    c.search.budget = 50000;
    c.search.mutation.max_instructions = 6;
    c.search.mutation.instruction_probs = MutationConfig::B97SubsetProbs();
    c.search.mutation.mutable_factors = {true, false, false};
    c.search.cmaes.restarts = 10;
    // J is in kcal/mol and the target is 1e-3; finer convergence only costs
    // evaluations.
    c.search.cmaes.tol_fun = 1e-7;
    c.seed_forms = {"empty_b97"};
  } else {
    c.generator.target = "GAS22";
    c.omega = 0.3;
    c.search.capacity = 100;
    c.search.tournament_size = 25;
    c.search.budget = 1000;
    c.search.mutation.max_instructions = 20;
    c.search.cmaes.restarts = 5;
    c.seed_forms = {"wb97mv"};
    c.spare_variables = 2;
    c.spare_parameters = 2;
  }
  NormalizeRunConfig(c);
  return c;
}

namespace {

const char* kSeedFormNames[] = {"empty_b97", "b97x", "wb97mv"};

void ReadGenerator(const TomlTable& t, SynthConfig& g) {
  if (auto v = t.GetSize("generator.seed")) g.seed = *v;
  if (auto v = t.GetSize("generator.num_systems")) g.num_systems = *v;
  if (auto v = t.GetSize("generator.radial_points")) g.radial_points = *v;
  if (auto v = t.GetReal("generator.grid_scale")) g.grid_scale = *v;
  if (auto v = t.GetReal("generator.exponential_fraction")) {
    g.exponential_fraction = *v;
  }
  if (auto v = t.GetReal("generator.open_shell_fraction")) {
    g.open_shell_fraction = *v;
  }
  if (auto v = t.GetSize("generator.single_records")) g.single_records = *v;
  if (auto v = t.GetSize("generator.difference_records")) {
    g.difference_records = *v;
  }
  if (auto v = t.GetReal("generator.train_fraction")) g.train_fraction = *v;
  if (auto v = t.GetReal("generator.val_fraction")) g.val_fraction = *v;
  if (auto v = t.GetReal("generator.test_fraction")) g.test_fraction = *v;
  if (auto v = t.GetString("generator.target")) g.target = *v;
}

void ReadMutation(const TomlTable& t, MutationConfig& m) {
  if (auto v = t.GetSize("mutation.max_instructions")) m.max_instructions = *v;
  if (auto v = t.GetSize("mutation.max_attempts")) m.max_attempts = *v;
  if (auto v = t.GetRealArray("mutation.rule_weights")) {
    if (v->size() != kNumRules) {
      throw ConfigError(t.Find("mutation.rule_weights")->line,
                        "mutation.rule_weights",
                        "expected " + std::to_string(kNumRules) + " weights");
    }
    for (size_t i = 0; i < kNumRules; ++i) m.rule_weights[i] = (*v)[i];
  }
  if (auto v = t.GetString("mutation.instruction_set")) {
    if (*v == "b97") {
      m.instruction_probs = MutationConfig::B97SubsetProbs();
    } else if (*v == "full") {
      m.instruction_probs = MutationConfig::DefaultInstructionProbs();
    } else {
      throw ConfigError(t.Find("mutation.instruction_set")->line,
                        "mutation.instruction_set",
                        "expected \"b97\" or \"full\", got \"" + *v + "\"");
    }
  }
  // Per-opcode overrides, applied after the named set.
  for (Opcode op : kAllOpcodes) {
    const std::string key =
        "mutation.instruction_probs." + std::string(OpcodeName(op));
    if (auto v = t.GetReal(key)) m.instruction_probs[static_cast<size_t>(op)] = *v;
  }
  if (auto v = t.GetStringArray("mutation.mutable_factors")) {
    const size_t line = t.Find("mutation.mutable_factors")->line;
    m.mutable_factors = {false, false, false};
    for (const std::string& name : *v) {
      bool found = false;
      for (size_t f = 0; f < kNumFactors; ++f) {
        if (name == kFactorNames[f]) {
          m.mutable_factors[f] = true;
          found = true;
        }
      }
      if (!found) {
        throw ConfigError(line, "mutation.mutable_factors",
                          "unknown factor \"" + name + "\"");
      }
    }
  }
}

void ReadCmaes(const TomlTable& t, CmaesConfig& c) {
  if (auto v = t.GetSize("cmaes.lambda")) c.lambda = *v;
  if (auto v = t.GetReal("cmaes.sigma0")) c.sigma0 = *v;
  if (auto v = t.GetReal("cmaes.lower")) c.lower = *v;
  if (auto v = t.GetReal("cmaes.upper")) c.upper = *v;
  if (auto v = t.GetSize("cmaes.max_evaluations")) c.max_evaluations = *v;
  if (auto v = t.GetReal("cmaes.tol_fun")) c.tol_fun = *v;
  if (auto v = t.GetSize("cmaes.tol_fun_window")) c.tol_fun_window = *v;
  if (auto v = t.GetReal("cmaes.tol_x")) c.tol_x = *v;
  if (auto v = t.GetReal("cmaes.max_condition")) c.max_condition = *v;
  if (auto v = t.GetSize("cmaes.restarts")) c.restarts = *v;
  if (auto v = t.GetReal("cmaes.stop_value")) c.stop_value = *v;
}

// Line of the first key present, for diagnostics on derived checks.
size_t LineOf(const TomlTable& t, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (t.Has(k)) return t.Find(k)->line;
  }
  return 0;
}

}  // namespace

void NormalizeRunConfig(RunConfig& c) {
  c.generator.omega = c.omega;
  if (!ClosedFormFromName(c.generator.target)) {
    throw ConfigError(0, "generator.target",
                      "unknown closed form \"" + c.generator.target + "\"");
  }
  try {
    ValidateSynthConfig(c.generator);
  } catch (const DatasetError& e) {
    throw ConfigError(0, "generator", e.what());
  }
  if (!(c.omega >= 0.0) || !std::isfinite(c.omega)) {
    throw ConfigError(0, "run.omega", "must be finite and >= 0");
  }
  if (c.seed_forms.empty()) {
    throw ConfigError(0, "search.seed_forms", "at least one seed form");
  }
  for (const std::string& s : c.seed_forms) {
    bool ok = false;
    for (const char* n : kSeedFormNames) ok = ok || s == n;
    if (!ok) {
      throw ConfigError(0, "search.seed_forms",
                        "unknown seed form \"" + s + "\"");
    }
  }
  if (c.workers == 0) throw ConfigError(0, "run.workers", "must be >= 1");
  const CmaesConfig& cm = c.search.cmaes;
  if (!(cm.lower < cm.upper)) {
    throw ConfigError(0, "cmaes.lower", "must be below cmaes.upper");
  }
  if (!(cm.sigma0 > 0.0)) throw ConfigError(0, "cmaes.sigma0", "must be > 0");
  if (cm.restarts == 0) throw ConfigError(0, "cmaes.restarts", "must be >= 1");
  if (cm.max_evaluations == 0) {
    throw ConfigError(0, "cmaes.max_evaluations", "must be >= 1");
  }
  try {
    c.search.Normalize();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, "search", e.what());
  }
  if (c.endpoints.backoff_initial_ms == 0 ||
      c.endpoints.backoff_max_ms < c.endpoints.backoff_initial_ms) {
    throw ConfigError(0, "endpoints.backoff_max_ms",
                      "need 0 < backoff_initial_ms <= backoff_max_ms");
  }
}

RunConfig ParseRunConfig(std::string_view text) {
  const TomlTable t = TomlTable::Parse(text);
  Preset preset = Preset::kB97;
  if (auto p = t.GetString("run.preset")) {
    if (*p == "b97") {
      preset = Preset::kB97;
    } else if (*p == "wb97mv") {
      preset = Preset::kWb97mv;
    } else {
      throw ConfigError(t.Find("run.preset")->line, "run.preset",
                        "expected \"b97\" or \"wb97mv\", got \"" + *p + "\"");
    }
  }
  RunConfig c = PresetConfig(preset);
  if (auto v = t.GetReal("run.omega")) c.omega = *v;
  if (auto v = t.GetString("run.output_dir")) c.output_dir = *v;
  if (auto v = t.GetSize("run.workers")) c.workers = *v;
  if (auto v = t.GetString("dataset.path")) c.dataset_path = *v;
  ReadGenerator(t, c.generator);

  SearchConfig& s = c.search;
  if (auto v = t.GetString("search.mode")) {
    if (*v == "evolution") {
      s.mode = SearchMode::kEvolution;
    } else if (*v == "random_search") {
      s.mode = SearchMode::kRandomSearch;
    } else {
      throw ConfigError(t.Find("search.mode")->line, "search.mode",
                        "expected \"evolution\" or \"random_search\"");
    }
  }
  if (auto v = t.GetSize("search.capacity")) s.capacity = *v;
  if (auto v = t.GetSize("search.tournament_size")) s.tournament_size = *v;
  if (auto v = t.GetSize("search.budget")) s.budget = *v;
  if (auto v = t.GetSize("search.seed")) s.seed = *v;
  if (auto v = t.GetReal("search.stop_at_jval")) s.stop_at_jval = *v;
  if (auto v = t.GetStringArray("search.seed_forms")) c.seed_forms = *v;
  if (auto v = t.GetSize("workspace.spare_variables")) c.spare_variables = *v;
  if (auto v = t.GetSize("workspace.spare_parameters")) c.spare_parameters = *v;
  if (auto v = t.GetBool("workspace.density_features")) {
    c.density_features = *v;
  }
  ReadMutation(t, s.mutation);
  ReadCmaes(t, s.cmaes);

  EndpointConfig& e = c.endpoints;
  if (auto v = t.GetString("endpoints.population")) e.population = *v;
  if (auto v = t.GetString("endpoints.fingerprints")) e.fingerprints = *v;
  if (auto v = t.GetSize("endpoints.backoff_initial_ms")) {
    e.backoff_initial_ms = *v;
  }
  if (auto v = t.GetSize("endpoints.backoff_max_ms")) e.backoff_max_ms = *v;
  if (auto v = t.GetSize("endpoints.max_retries")) e.max_retries = *v;
  t.RejectUnknown();

  try {
    NormalizeRunConfig(c);
  } catch (const ConfigError& err) {
    // Re-anchor derived errors to the line of the field that caused them.
    size_t line = 0;
    const std::string& f = err.field();
    if (f == "generator") {
      line = LineOf(t, {"generator.train_fraction", "generator.val_fraction",
                        "generator.test_fraction",
                        "generator.exponential_fraction",
                        "generator.open_shell_fraction",
                        "generator.num_systems", "generator.radial_points"});
    } else if (f == "search") {
      line = LineOf(t, {"search.tournament_size", "search.capacity",
                        "search.mode", "mutation.rule_weights",
                        "mutation.instruction_set", "mutation.max_instructions",
                        "mutation.mutable_factors"});
    } else {
      std::string key = f;
      if (key == "run.omega" || key.rfind("generator.", 0) == 0 ||
          key.rfind("cmaes.", 0) == 0 || key.rfind("search.", 0) == 0 ||
          key.rfind("endpoints.", 0) == 0 || key == "run.workers") {
        line = LineOf(t, {key.c_str()});
      }
    }
    if (line == 0 || err.line() != 0) throw;
    std::string msg = err.what();
    const std::string pre = f + ": ";
    if (msg.rfind(pre, 0) == 0) msg = msg.substr(pre.size());
    throw ConfigError(line, f, msg);
  }
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "", "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

namespace {

std::string Real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string Quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

}  // namespace

std::string ToToml(const RunConfig& c) {
  std::ostringstream o;
  o << "[run]\n"
    << "preset = " << Quote(std::string(PresetName(c.preset))) << "\n"
    << "omega = " << Real(c.omega) << "\n"
    << "output_dir = " << Quote(c.output_dir) << "\n"
    << "workers = " << c.workers << "\n\n";
  if (!c.dataset_path.empty()) {
    o << "[dataset]\npath = " << Quote(c.dataset_path) << "\n\n";
  }
  const SynthConfig& g = c.generator;
  o << "[generator]\n"
    << "seed = " << g.seed << "\n"
    << "num_systems = " << g.num_systems << "\n"
    << "radial_points = " << g.radial_points << "\n"
    << "grid_scale = " << Real(g.grid_scale) << "\n"
    << "exponential_fraction = " << Real(g.exponential_fraction) << "\n"
    << "open_shell_fraction = " << Real(g.open_shell_fraction) << "\n"
    << "single_records = " << g.single_records << "\n"
    << "difference_records = " << g.difference_records << "\n"
    << "train_fraction = " << Real(g.train_fraction) << "\n"
    << "val_fraction = " << Real(g.val_fraction) << "\n"
    << "test_fraction = " << Real(g.test_fraction) << "\n"
    << "target = " << Quote(g.target) << "\n\n";
  const SearchConfig& s = c.search;
  o << "[search]\n"
    << "mode = "
    << (s.mode == SearchMode::kEvolution ? "\"evolution\"" : "\"random_search\"")
    << "\n"
    << "capacity = " << s.capacity << "\n"
    << "tournament_size = " << s.tournament_size << "\n"
    << "budget = " << s.budget << "\n"
    << "seed = " << s.seed << "\n";
  if (s.stop_at_jval) o << "stop_at_jval = " << Real(*s.stop_at_jval) << "\n";
  o << "seed_forms = [";
  for (size_t i = 0; i < c.seed_forms.size(); ++i) {
    o << (i ? ", " : "") << Quote(c.seed_forms[i]);
  }
  o << "]\n\n";
  o << "[workspace]\n"
    << "spare_variables = " << c.spare_variables << "\n"
    << "spare_parameters = " << c.spare_parameters << "\n"
    << "density_features = " << (c.density_features ? "true" : "false")
    << "\n\n";
  const MutationConfig& m = s.mutation;
  o << "[mutation]\n"
    << "max_instructions = " << m.max_instructions << "\n"
    << "max_attempts = " << m.max_attempts << "\n"
    << "rule_weights = [";
  for (size_t i = 0; i < kNumRules; ++i) {
    o << (i ? ", " : "") << Real(m.rule_weights[i]);
  }
  o << "]\n"
    << "mutable_factors = [";
  bool first = true;
  for (size_t f = 0; f < kNumFactors; ++f) {
    if (!m.mutable_factors[f]) continue;
    o << (first ? "" : ", ") << Quote(std::string(kFactorNames[f]));
    first = false;
  }
  o << "]\n\n[mutation.instruction_probs]\n";
  for (Opcode op : kAllOpcodes) {
    o << OpcodeName(op) << " = "
      << Real(m.instruction_probs[static_cast<size_t>(op)]) << "\n";
  }
  const CmaesConfig& cm = s.cmaes;
  o << "\n[cmaes]\n"
    << "lambda = " << cm.lambda << "\n"
    << "sigma0 = " << Real(cm.sigma0) << "\n"
    << "lower = " << Real(cm.lower) << "\n"
    << "upper = " << Real(cm.upper) << "\n"
    << "max_evaluations = " << cm.max_evaluations << "\n"
    << "tol_fun = " << Real(cm.tol_fun) << "\n"
    << "tol_fun_window = " << cm.tol_fun_window << "\n"
    << "tol_x = " << Real(cm.tol_x) << "\n"
    << "max_condition = " << Real(cm.max_condition) << "\n"
    << "restarts = " << cm.restarts << "\n"
    << "stop_value = " << Real(cm.stop_value) << "\n\n";
  const EndpointConfig& e = c.endpoints;
  o << "[endpoints]\n"
    << "population = " << Quote(e.population) << "\n"
    << "fingerprints = " << Quote(e.fingerprints) << "\n"
    << "backoff_initial_ms = " << e.backoff_initial_ms << "\n"
    << "backoff_max_ms = " << e.backoff_max_ms << "\n"
    << "max_retries = " << e.max_retries << "\n";
  return o.str();
}

std::vector<FunctionalForm> SeedForms(const RunConfig& c) {
  std::vector<FunctionalForm> out;
  for (const std::string& name : c.seed_forms) {
    FunctionalForm form = name == "empty_b97" ? EmptyB97SearchForm()
                          : name == "b97x"    ? B97ExchangeForm()
                                              : Wb97mvForm();
    for (size_t f = 0; f < kNumFactors; ++f) {
      Program& p = form.mutable_factor(f);
      if (p.schema().features().empty()) continue;
      if (c.spare_variables || c.spare_parameters) {
        p = WithSpareCapacity(p, c.spare_variables, c.spare_parameters);
      }
      if (c.density_features) p = WithReservedDensityFeatures(p);
    }
    out.push_back(std::move(form));
  }
  return out;
}

void ApplyEndpointEnvironment(EndpointConfig& e) {
  if (const char* v = std::getenv("XCEVO_POPULATION_ENDPOINT")) {
    if (*v) e.population = v;
  }
  if (const char* v = std::getenv("XCEVO_FINGERPRINT_ENDPOINT")) {
    if (*v) e.fingerprints = v;
  }
}

}  // namespace xcevo
