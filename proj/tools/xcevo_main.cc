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

// xcevo command-line tool.
//
// Exit codes: 0 success, 2 config or usage error, 3 data error, 4 runtime
// error, 5 endpoint error.

#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xcevo/config.h"
#include "xcevo/coordinator.h"
#include "xcevo/dataset.h"
#include "xcevo/dsl.h"
#include "xcevo/evolution.h"
#include "xcevo/export.h"
#include "xcevo/expression.h"
#include "xcevo/fingerprint.h"
#include "xcevo/objective.h"
#include "xcevo/physics.h"

namespace fs = std::filesystem;
using namespace xcevo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;
constexpr int kExitEndpoint = 5;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

volatile std::sig_atomic_t g_interrupted = 0;
void OnSignal(int) { g_interrupted = 1; }

struct CommonFlags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::optional<size_t> workers;
  std::string endpoint;
};

RunConfig LoadConfig(const CommonFlags& f) {
  RunConfig c = f.config.empty() ? PresetConfig(Preset::kB97)
                                 : LoadRunConfig(f.config);
  if (f.seed) c.search.seed = *f.seed;
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.workers) c.workers = *f.workers;
  ApplyEndpointEnvironment(c.endpoints);
  if (!f.endpoint.empty()) c.endpoints.population = f.endpoint;
  NormalizeRunConfig(c);
  return c;
}

std::shared_ptr<const Dataset> LoadOrGenerate(const RunConfig& c) {
  if (!c.dataset_path.empty()) {
    auto d = std::make_shared<const Dataset>(LoadDataset(c.dataset_path));
    if (d->omega != c.omega) {
      throw ConfigError(0, "run.omega",
                        "differs from the dataset's omega " +
                            std::to_string(d->omega));
    }
    return d;
  }
  return std::make_shared<const Dataset>(SynthGenerate(c.generator));
}

bool NeedsDensities(const std::vector<FunctionalForm>& forms) {
  for (const auto& f : forms) {
    for (size_t k = 0; k < kNumFactors; ++k) {
      if (f.factor(k).schema().has_reserved_density()) return true;
    }
  }
  return false;
}

struct Contexts {
  std::shared_ptr<const Dataset> dataset;
  std::shared_ptr<const FeatureCache> cache;
  std::unique_ptr<ObjectiveContext> train, val, test;
};

Contexts MakeContexts(std::shared_ptr<const Dataset> d, double omega,
                      bool densities) {
  Contexts c;
  c.dataset = d;
  c.cache = std::make_shared<const FeatureCache>(*d, omega, densities);
  c.train = std::make_unique<ObjectiveContext>(d, c.cache, Split::kTrain);
  c.val = std::make_unique<ObjectiveContext>(d, c.cache, Split::kVal);
  bool has_test = false;
  for (const auto& r : d->records) has_test = has_test || r.split == Split::kTest;
  if (has_test) {
    c.test = std::make_unique<ObjectiveContext>(d, c.cache, Split::kTest);
  }
  return c;
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

// best.json, history.csv, summary.json and the normalized config.
void WriteSearchOutputs(const RunConfig& cfg, const SearchEngine& engine,
                        const Contexts& ctx, size_t children,
                        bool stopped_early, bool invariants_ok) {
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  const auto& best = engine.best();
  std::optional<double> j_test;
  if (best) {
    FunctionalExport e;
    e.form = best->form;
    e.params = best->params;
    e.j_train = best->j_train;
    e.j_val = best->j_val;
    if (ctx.test) j_test = Wrmsd(best->form, best->params, *ctx.test);
    e.j_test = j_test;
    SaveFunctionalFile(e, (dir / "best.json").string());
  }
  std::string csv = HistoryCsvHeader();
  for (const HistoryEntry& h : engine.history()) csv += HistoryCsvRow(h);
  WriteFile(dir / "history.csv", csv);

  const std::string toml = ToToml(cfg);
  WriteFile(dir / "config.normalized.toml", toml);
  nlohmann::ordered_json s;
  s["preset"] = std::string(PresetName(cfg.preset));
  s["mode"] = cfg.search.mode == SearchMode::kEvolution ? "evolution"
                                                         : "random_search";
  s["search_seed"] = cfg.search.seed;
  s["generator_seed"] = cfg.dataset_path.empty()
                            ? nlohmann::ordered_json(cfg.generator.seed)
                            : nlohmann::ordered_json(ctx.dataset->seed);
  s["budget"] = cfg.search.budget;
  s["tournament_size"] = cfg.search.tournament_size;
  s["capacity"] = cfg.search.capacity;
  s["seeds"] = cfg.seed_forms.size();
  s["children"] = children;
  s["stopped_early"] = stopped_early;
  s["cache_hits"] = engine.cache().hits();
  s["cache_misses"] = engine.cache().misses();
  s["population_size"] = engine.population().size();
  s["invariants_ok"] = invariants_ok;
  if (best) {
    s["best"] = {{"birth_index", best->birth_index},
                 {"J_train", best->j_train},
                 {"J_val", best->j_val}};
    if (j_test) s["best"]["J_test"] = *j_test;
  }
  s["cumulative_min_J_val"] = CumulativeMinJval(engine.history());
  s["config"] = toml;
  WriteFile(dir / "summary.json", s.dump(2) + "\n");
}

void PrintSearchSummary(const SearchEngine& engine, const Contexts& ctx) {
  const auto& best = engine.best();
  if (!best) return;
  std::printf("best birth_index %llu  J_train %.6e  J_val %.6e",
              static_cast<unsigned long long>(best->birth_index),
              best->j_train, best->j_val);
  if (ctx.test) {
    std::printf("  J_test %.6e", Wrmsd(best->form, best->params, *ctx.test));
  }
  std::printf("\n");
}

Trainer MakeTrainer(const RunConfig& cfg, const Contexts& ctx) {
  Trainer t;
  t.train = ctx.train.get();
  t.val = ctx.val.get();
  t.cmaes = cfg.search.cmaes;
  return t;
}

// ---------------------------------------------------------------------------

int CmdDatasetGen(const CommonFlags& f) {
  RunConfig c = LoadConfig(f);
  if (f.seed) c.generator.seed = *f.seed;
  const std::string out = f.out.empty() ? c.output_dir + "/dataset" : f.out;
  const Dataset d = SynthGenerate(c.generator);
  SaveDataset(d, out);
  size_t counts[3] = {0, 0, 0};
  for (const auto& r : d.records) ++counts[static_cast<size_t>(r.split)];
  std::printf("wrote %s: %zu systems, %zu records (train %zu, val %zu, test "
              "%zu), seed %llu, target %s\n",
              out.c_str(), d.systems.size(), d.records.size(), counts[0],
              counts[1], counts[2], static_cast<unsigned long long>(d.seed),
              d.target.c_str());
  return kExitOk;
}

int CmdSearch(const CommonFlags& f) {
  const RunConfig cfg = LoadConfig(f);
  const auto seeds = SeedForms(cfg);
  Contexts ctx = MakeContexts(LoadOrGenerate(cfg), cfg.omega,
                              NeedsDensities(seeds));
  SearchEngine engine(cfg.search, *ctx.train, *ctx.val);
  for (const auto& s : seeds) engine.AddSeed(s);
  size_t children = 0;
  bool stopped_early = false;
  std::signal(SIGINT, OnSignal);
  if (cfg.workers <= 1) {
    for (; children < cfg.search.budget && !g_interrupted; ++children) {
      const IndividualPtr child = engine.EvolveStep();
      if (cfg.search.stop_at_jval && child->j_val <= *cfg.search.stop_at_jval) {
        ++children;
        stopped_early = true;
        break;
      }
    }
  } else {
    PopulationService pop(engine, cfg.search.budget);
    FingerprintService fps(engine.cache());
    Handler h = MakeCoordinatorHandler(&pop, &fps);
    const Trainer trainer = MakeTrainer(cfg, ctx);
    std::vector<std::thread> threads;
    for (size_t w = 0; w < cfg.workers; ++w) {
      threads.emplace_back([&, w] {
        InProcessEndpoint ep(h);
        WorkerOptions o;
        o.seed = MixSeed(cfg.search.seed, 7000 + w);
        o.mutation = cfg.search.mutation;
        WorkerLoop(ep, ep, trainer, o);
      });
    }
    while (!pop.WaitDone(std::chrono::milliseconds(100))) {
      if (g_interrupted) pop.Stop();
    }
    for (auto& t : threads) t.join();
    children = pop.accepted();
  }
  const bool ok = engine.population().InvariantsHold();
  WriteSearchOutputs(cfg, engine, ctx, children, stopped_early, ok);
  PrintSearchSummary(engine, ctx);
  std::printf("children %zu  cache hits %llu  misses %llu  outputs in %s\n",
              children, static_cast<unsigned long long>(engine.cache().hits()),
              static_cast<unsigned long long>(engine.cache().misses()),
              cfg.output_dir.c_str());
  return ok ? kExitOk : kExitRuntime;
}

// A functional from a file, or a builtin closed form by name.
struct LoadedFunctional {
  std::optional<FunctionalExport> program;
  std::optional<ClosedForm> closed;
};

LoadedFunctional LoadFunctional(const std::string& file,
                                const std::string& builtin) {
  LoadedFunctional lf;
  if (!builtin.empty()) {
    const auto name = ClosedFormFromName(builtin);
    if (!name) throw UsageError("unknown builtin closed form \"" + builtin + "\"");
    lf.closed.emplace(*name);
  } else if (!file.empty()) {
    lf.program = LoadFunctionalFile(file);
  } else {
    throw UsageError("give a functional file or --builtin");
  }
  return lf;
}

std::unique_ptr<XcModel> MakeModel(const LoadedFunctional& lf) {
  if (lf.closed) return std::make_unique<ClosedFormModel>(*lf.closed);
  try {
    return std::make_unique<ProgramModel>(lf.program->form, lf.program->params);
  } catch (const std::invalid_argument& e) {
    // Unknown feature names and the like are defects of the file.
    throw ExportError(e.what());
  }
}

int CmdEval(const std::string& file, const std::string& builtin,
            const std::string& dataset_dir, const std::string& split_name,
            const CommonFlags& f) {
  std::vector<Split> splits;
  if (split_name == "all") {
    splits = {Split::kTrain, Split::kVal, Split::kTest};
  } else if (auto s = SplitFromName(split_name)) {
    splits = {*s};
  } else {
    throw UsageError("unknown split \"" + split_name +
                     "\" (train, val, test, all)");
  }
  const LoadedFunctional lf = LoadFunctional(file, builtin);
  std::shared_ptr<const Dataset> d;
  if (!dataset_dir.empty()) {
    d = std::make_shared<const Dataset>(LoadDataset(dataset_dir));
  } else {
    d = LoadOrGenerate(LoadConfig(f));
  }
  bool densities = false;
  if (lf.program) densities = NeedsDensities({lf.program->form});
  auto cache = std::make_shared<const FeatureCache>(*d, d->omega, densities);
  std::unique_ptr<XcModel> model = MakeModel(lf);

  // Per-record errors, reused for the subset table.
  std::vector<double> energies(d->systems.size());
  ExcScratch scratch;
  for (size_t i = 0; i < d->systems.size(); ++i) {
    energies[i] = d->systems[i].e_base + ExcSl(*model, cache->system(i), scratch);
  }
  nlohmann::ordered_json report;
  report["dataset_seed"] = d->seed;
  report["target"] = d->target;
  std::printf("%-8s %-14s %8s %16s\n", "split", "subset", "records", "RMSD");
  for (Split s : splits) {
    bool any = false;
    for (const auto& r : d->records) any = any || r.split == s;
    const std::string sname(SplitName(s));
    if (!any) {
      std::printf("%-8s %-14s %8d %16s\n", sname.c_str(), "(all)", 0, "-");
      continue;
    }
    ObjectiveContext ctx(d, cache, s);
    const double j = Wrmsd(*model, ctx);
    std::printf("%-8s %-14s %8zu %16.9e\n", sname.c_str(), "(all)",
                ctx.records().size(), j);
    report["J_" + sname] = j;
    std::map<std::string, std::pair<double, size_t>> subsets;
    for (const auto& r : d->records) {
      if (r.split != s) continue;
      std::vector<size_t> idx;
      for (const auto& t : r.terms) idx.push_back(d->SystemIndex(t.system_id));
      const double err = RecordEnergy(r, idx, energies) - r.e_ref;
      auto& acc = subsets[r.subset_tag];
      acc.first += r.weight * err * err;
      acc.second += 1;
    }
    for (const auto& [tag, acc] : subsets) {
      const double rmsd = std::sqrt(acc.first / static_cast<double>(acc.second));
      std::printf("%-8s %-14s %8zu %16.9e\n", sname.c_str(), tag.c_str(),
                  acc.second, rmsd);
      report["subsets"][sname][tag] = rmsd;
    }
  }
  if (!f.out.empty()) {
    fs::create_directories(f.out);
    WriteFile(fs::path(f.out) / "eval.json", report.dump(2) + "\n");
  }
  return kExitOk;
}

int CmdSimplify(const std::string& file, const std::string& builtin,
                bool values) {
  std::vector<std::pair<std::string, Program>> programs;
  std::vector<std::vector<double>> params;
  if (!builtin.empty()) {
    const auto b = BuiltinFromName(builtin);
    if (!b) throw UsageError("unknown builtin program \"" + builtin + "\"");
    programs.emplace_back(builtin, BuiltinProgram(*b));
    params.push_back(BuiltinDefaultParams(*b));
  } else if (!file.empty()) {
    const FunctionalExport e = LoadFunctionalFile(file);
    for (size_t k = 0; k < kNumFactors; ++k) {
      programs.emplace_back(std::string(kFactorNames[k]), e.form.factor(k));
      const auto p = e.form.FactorParams(e.params, k);
      params.emplace_back(p.begin(), p.end());
    }
  } else {
    throw UsageError("give a functional file or --builtin");
  }
  for (size_t i = 0; i < programs.size(); ++i) {
    PrintOptions opt;
    if (values) opt.param_values = params[i];
    const std::string text =
        ToString(SimplifyToExpression(programs[i].second), opt);
    std::printf("%s = %s\n", programs[i].first.c_str(), text.c_str());
  }
  return kExitOk;
}

std::vector<double> Linspace(double lo, double hi, size_t n) {
  std::vector<double> out;
  if (n == 1) return {lo};
  for (size_t i = 0; i < n; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) /
                           static_cast<double>(n - 1));
  }
  return out;
}

int CmdCurves(const std::string& file, const std::string& builtin,
              double s_min, double s_max, size_t s_points,
              const std::vector<double>& w, const std::vector<double>& rs,
              const CommonFlags& f) {
  for (double r : rs) {
    if (!(r > 0.0)) throw UsageError("rs values must be > 0");
  }
  if (s_points == 0) throw UsageError("--s-points must be >= 1");
  const LoadedFunctional lf = LoadFunctional(file, builtin);
  std::unique_ptr<XcModel> model = MakeModel(lf);
  const auto s = Linspace(s_min, s_max, s_points);
  const auto rows = FxcCurves(*model, s, w, rs);
  const std::string csv = FxcCsv(rows);
  if (f.out.empty() || f.out == "-") {
    std::fwrite(csv.data(), 1, csv.size(), stdout);
  } else {
    const fs::path p(f.out);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    WriteFile(p, csv);
    std::printf("wrote %zu rows to %s\n", rows.size(), f.out.c_str());
  }
  return kExitOk;
}

int CmdServe(const CommonFlags& f, double grace_seconds) {
  const RunConfig cfg = LoadConfig(f);
  const auto seeds = SeedForms(cfg);
  Contexts ctx = MakeContexts(LoadOrGenerate(cfg), cfg.omega,
                              NeedsDensities(seeds));
  SearchEngine engine(cfg.search, *ctx.train, *ctx.val);
  for (const auto& s : seeds) engine.AddSeed(s);
  PopulationService pop(engine, cfg.search.budget);
  FingerprintService fps(engine.cache());
  std::signal(SIGINT, OnSignal);
  std::signal(SIGTERM, OnSignal);
  TcpServer server(cfg.endpoints.population,
                   MakeCoordinatorHandler(&pop, &fps));
  std::printf("listening on port %u\n", server.port());
  std::fflush(stdout);
  // Progress at every tenth of the budget.
  const size_t step = std::max<size_t>(1, cfg.search.budget / 10);
  size_t reported = 0;
  while (!pop.WaitDone(std::chrono::milliseconds(100))) {
    if (g_interrupted) pop.Stop();
    const size_t a = pop.accepted();
    if (a / step > reported / step) {
      std::printf("progress %zu/%zu\n", a, cfg.search.budget);
      std::fflush(stdout);
      reported = a;
    }
  }
  // Workers still connected learn about the end from their next request.
  const auto until = std::chrono::steady_clock::now() +
                     std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::duration<double>(grace_seconds));
  while (server.active_connections() > 0 &&
         std::chrono::steady_clock::now() < until && !g_interrupted) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.Shutdown();
  const bool ok = pop.InvariantsHold();
  WriteSearchOutputs(cfg, engine, ctx, pop.accepted(), false, ok);
  PrintSearchSummary(engine, ctx);
  std::printf("accepted %zu children, invariants %s, outputs in %s\n",
              pop.accepted(), ok ? "ok" : "BROKEN", cfg.output_dir.c_str());
  return ok ? kExitOk : kExitRuntime;
}

int CmdWork(const CommonFlags& f) {
  const RunConfig cfg = LoadConfig(f);
  const auto seeds = SeedForms(cfg);
  Contexts ctx = MakeContexts(LoadOrGenerate(cfg), cfg.omega,
                              NeedsDensities(seeds));
  const Trainer trainer = MakeTrainer(cfg, ctx);
  BackoffPolicy backoff;
  backoff.initial = std::chrono::milliseconds(cfg.endpoints.backoff_initial_ms);
  backoff.max = std::chrono::milliseconds(cfg.endpoints.backoff_max_ms);
  backoff.max_retries = cfg.endpoints.max_retries;
  const std::string fp_address = cfg.endpoints.fingerprints.empty()
                                     ? cfg.endpoints.population
                                     : cfg.endpoints.fingerprints;
  std::vector<WorkerStats> stats(cfg.workers);
  std::vector<std::thread> threads;
  for (size_t w = 0; w < cfg.workers; ++w) {
    threads.emplace_back([&, w] {
      TcpEndpoint pop(cfg.endpoints.population, backoff);
      TcpEndpoint fps(fp_address, backoff);
      WorkerOptions o;
      o.seed = MixSeed(cfg.search.seed, 7000 + w);
      o.mutation = cfg.search.mutation;
      stats[w] = WorkerLoop(pop, fps, trainer, o);
    });
  }
  for (auto& t : threads) t.join();
  int status = kExitOk;
  for (size_t w = 0; w < stats.size(); ++w) {
    std::printf("worker %zu: submitted %zu accepted %zu cache hits %zu%s%s\n",
                w, stats[w].submitted, stats[w].accepted, stats[w].cache_hits,
                stats[w].error.empty() ? "" : "  error: ",
                stats[w].error.c_str());
    if (stats[w].exit_status != 0) status = kExitEndpoint;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary search over symbolic exchange-correlation "
               "enhancement factors"};
  app.require_subcommand(1);
  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "TOML run configuration");
    sub->add_option("--seed", flags.seed, "Override the search seed");
    sub->add_option("--out", flags.out, "Output directory or file");
    sub->add_option("--workers", flags.workers, "Worker threads");
    sub->add_option("--endpoint", flags.endpoint,
                    "Population server host:port");
  };

  auto* gen = app.add_subcommand("dataset-gen", "Generate a synthetic dataset");
  add_common(gen);

  auto* search = app.add_subcommand("search", "Run an evolutionary search");
  add_common(search);

  std::string file, builtin, dataset_dir, split = "all";
  auto* eval = app.add_subcommand("eval", "WRMSD of a functional per split");
  add_common(eval);
  eval->add_option("functional", file, "best.json-style functional file");
  eval->add_option("--builtin", builtin,
                   "Closed form: B97X, WB97MV, GAS22, GAS22A, GAS22B, GAS22C");
  eval->add_option("--dataset", dataset_dir, "Dataset archive directory");
  eval->add_option("--split", split, "train, val, test or all");

  bool values = false;
  auto* simplify = app.add_subcommand("simplify", "Print factor formulas");
  simplify->add_option("functional", file, "best.json-style functional file");
  simplify->add_option("--builtin", builtin,
                       "Program: B97X, WB97MV_X, WB97MV_CSS, WB97MV_COS");
  simplify->add_flag("--values", values, "Substitute parameter values");

  double s_min = 0.0, s_max = 3.0;
  size_t s_points = 61;
  std::vector<double> w_list = {-1.0, 0.0, 1.0}, rs_list = {1.0, 2.0, 5.0};
  auto* curves = app.add_subcommand("curves", "Export F_xc curves as CSV");
  add_common(curves);
  curves->add_option("functional", file, "best.json-style functional file");
  curves->add_option("--builtin", builtin, "Closed form name");
  curves->add_option("--s-min", s_min, "Smallest s");
  curves->add_option("--s-max", s_max, "Largest s");
  curves->add_option("--s-points", s_points, "Number of s values");
  curves->add_option("--w", w_list, "w values")->delimiter(',');
  curves->add_option("--rs", rs_list, "r_s values")->delimiter(',');

  double grace = 30.0;
  auto* serve = app.add_subcommand("serve", "Host population and fingerprints");
  add_common(serve);
  serve->add_option("--grace", grace,
                    "Seconds to wait for workers to leave after the budget");

  auto* work = app.add_subcommand("work", "Attach worker loops to a server");
  add_common(work);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return CmdDatasetGen(flags);
    if (*search) return CmdSearch(flags);
    if (*eval) return CmdEval(file, builtin, dataset_dir, split, flags);
    if (*simplify) return CmdSimplify(file, builtin, values);
    if (*curves) {
      return CmdCurves(file, builtin, s_min, s_max, s_points, w_list, rs_list,
                       flags);
    }
    if (*serve) return CmdServe(flags, grace);
    if (*work) return CmdWork(flags);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitConfig;
  } catch (const DatasetError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const ExportError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const EndpointError& e) {
    std::fprintf(stderr, "endpoint error: %s\n", e.what());
    return kExitEndpoint;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
