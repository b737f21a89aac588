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

#include "xcevo/dataset.h"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "xcevo/lda.h"
#include "xcevo/random.h"

namespace xcevo {

namespace {

using nlohmann::json;

constexpr double kPi = std::numbers::pi;
constexpr char kMagic[4] = {'S', 'Y', 'G', 'R'};
constexpr size_t kHeaderBytes = 4 + 4 + 8;
constexpr size_t kNumArchiveColumns = 8;

std::string Format(const char* fmt, size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, i);
  return buf;
}

double LogUniform(Rng& rng, double lo, double hi) {
  return std::exp(UniformReal(rng, std::log(lo), std::log(hi)));
}

// Radial profile of a spherical density: value, d/dr, and tau_W of the
// total density.
struct Radial {
  double rho;
  double drho;
  double tau_w;
};

constexpr double kTailCutoff = 1e-150;

struct DensityModel {
  double electrons = 1.0;
  // Single exponential with exponent z when `gaussians` is empty.
  double z = 1.0;
  std::vector<double> alphas;
  std::vector<double> coeffs;
  // tau = tau_W + kinetic_heg_mix * tau_HEG per channel.
  double kinetic_heg_mix = 0.0;
  double spin_fraction = 0.5;

  Radial At(double r) const {
    Radial out{0.0, 0.0, 0.0};
    if (alphas.empty()) {
      out.rho = electrons * (z * z * z / kPi) * std::exp(-2.0 * z * r);
      out.drho = -2.0 * z * out.rho;
      // |grad rho|^2 / (8 rho) for an exponential.
      out.tau_w = 0.5 * z * z * out.rho;
      return out;
    }
    for (size_t k = 0; k < alphas.size(); ++k) {
      const double a = alphas[k];
      const double g = electrons * coeffs[k] * std::pow(a / kPi, 1.5) *
                       std::exp(-a * r * r);
      out.rho += g;
      out.drho += -2.0 * a * r * g;
    }
    // Ratio first: drho^2 underflows in the far tail.
    out.tau_w = out.rho > 0.0 ? (out.drho / out.rho) * out.drho / 8.0 : 0.0;
    return out;
  }
};

SystemGrid BuildSystem(std::string id, const DensityModel& model,
                       size_t radial_points, double scale) {
  std::vector<double> r, wr;
  RadialGrid(radial_points, scale, &r, &wr);
  SystemGrid s;
  s.id = std::move(id);
  s.electrons = model.electrons;
  s.points.resize(radial_points);
  const double fa = model.spin_fraction;
  const double fb = 1.0 - model.spin_fraction;
  for (size_t g = 0; g < radial_points; ++g) {
    const Radial p = model.At(r[g]);
    GridPointDensities& q = s.points[g];
    q.weight = wr[g];
    q.rho_a = fa * p.rho;
    q.rho_b = fb * p.rho;
    q.grad_a = fa * std::abs(p.drho);
    q.grad_b = fb * std::abs(p.drho);
    q.tau_a = fa * p.tau_w + model.kinetic_heg_mix * HegKineticDensity(q.rho_a);
    q.tau_b = fb * p.tau_w + model.kinetic_heg_mix * HegKineticDensity(q.rho_b);
    // Far-tail channels would reach subnormal tau; they are below the
    // density floor anyway.
    if (q.rho_a < kTailCutoff) q.rho_a = q.grad_a = q.tau_a = 0.0;
    if (q.rho_b < kTailCutoff) q.rho_b = q.grad_b = q.tau_b = 0.0;
  }
  return s;
}

json GeneratorJson(const SynthConfig& c) {
  return json{{"seed", c.seed},
              {"num_systems", c.num_systems},
              {"radial_points", c.radial_points},
              {"grid_scale", c.grid_scale},
              {"exponential_fraction", c.exponential_fraction},
              {"open_shell_fraction", c.open_shell_fraction},
              {"single_records", c.single_records},
              {"difference_records", c.difference_records},
              {"train_fraction", c.train_fraction},
              {"val_fraction", c.val_fraction},
              {"test_fraction", c.test_fraction},
              {"target", c.target},
              {"omega", c.omega}};
}

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}
uint64_t GetLe(std::string_view bytes, size_t at, int n) {
  uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[at + i]))
         << (8 * i);
  }
  return v;
}
void PutF64(std::string& out, double d) { PutU64(out, std::bit_cast<uint64_t>(d)); }

uint32_t Crc32(std::string_view bytes) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

}  // namespace

std::string_view SplitName(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "";
}

std::optional<Split> SplitFromName(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

size_t Dataset::SystemIndex(std::string_view id) const {
  for (size_t i = 0; i < systems.size(); ++i) {
    if (systems[i].id == id) return i;
  }
  throw DatasetError(DatasetError::Kind::kMalformed,
                     "unknown system '" + std::string(id) + "'");
}

void ValidateSynthConfig(const SynthConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw DatasetError(DatasetError::Kind::kConfig, field + ": " + why);
  };
  if (c.num_systems == 0) fail("num_systems", "must be positive");
  if (c.radial_points < 2) fail("radial_points", "must be at least 2");
  if (!(c.grid_scale > 0.0)) fail("grid_scale", "must be positive");
  for (auto [name, v] : {std::pair{"exponential_fraction", c.exponential_fraction},
                         std::pair{"open_shell_fraction", c.open_shell_fraction},
                         std::pair{"train_fraction", c.train_fraction},
                         std::pair{"val_fraction", c.val_fraction},
                         std::pair{"test_fraction", c.test_fraction}}) {
    if (!(v >= 0.0 && v <= 1.0)) fail(name, "must lie in [0, 1]");
  }
  const double sum = c.train_fraction + c.val_fraction + c.test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    fail("train_fraction", "split fractions must sum to 1 (got " +
                               std::to_string(sum) + ")");
  }
  if (c.difference_records > 0 && c.num_systems < 2) {
    fail("difference_records", "need at least two systems");
  }
  if (c.single_records + c.difference_records == 0) {
    fail("single_records", "no records requested");
  }
  if (!ClosedFormFromName(c.target)) fail("target", "unknown closed form");
  if (!(c.omega >= 0.0)) fail("omega", "must be nonnegative");
}

void GaussLegendre(size_t n, std::vector<double>* nodes,
                   std::vector<double>* weights) {
  nodes->assign(n, 0.0);
  weights->assign(n, 0.0);
  for (size_t i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration from the Tricomi initial guess.
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    (*nodes)[i] = -x;
    (*nodes)[n - 1 - i] = x;
    (*weights)[i] = w;
    (*weights)[n - 1 - i] = w;
  }
  if (n % 2 == 1) (*nodes)[n / 2] = 0.0;
}

void RadialGrid(size_t n, double scale, std::vector<double>* r,
                std::vector<double>* weights) {
  std::vector<double> t, wt;
  GaussLegendre(n, &t, &wt);
  r->resize(n);
  weights->resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double om = 1.0 - t[i];
    const double ri = scale * (1.0 + t[i]) / om;
    const double drdt = 2.0 * scale / (om * om);
    (*r)[i] = ri;
    (*weights)[i] = 4.0 * kPi * ri * ri * drdt * wt[i];
  }
}

SystemGrid ExponentialSystem(std::string id, double z, double electrons,
                             size_t radial_points, double scale) {
  DensityModel m;
  m.electrons = electrons;
  m.z = z;
  return BuildSystem(std::move(id), m, radial_points, scale);
}

double RecordEnergy(const PropertyRecord& record,
                    std::span<const size_t> system_index,
                    std::span<const double> energies) {
  double e = 0.0;
  for (size_t k = 0; k < record.terms.size(); ++k) {
    e += record.terms[k].coefficient * energies[system_index[k]];
  }
  return e * kHartreeToKcalPerMol;
}

Dataset SynthGenerate(const SynthConfig& cfg) {
  ValidateSynthConfig(cfg);
  Rng rng(cfg.seed);
  Dataset d;
  d.seed = cfg.seed;
  d.target = cfg.target;
  d.omega = cfg.omega;
  d.generator = GeneratorJson(cfg).dump();

  for (size_t i = 0; i < cfg.num_systems; ++i) {
    DensityModel m;
    const bool exponential = UniformUnit(rng) < cfg.exponential_fraction;
    m.electrons = static_cast<double>(1 + UniformIndex(rng, 4));
    if (exponential) {
      m.z = UniformReal(rng, 0.6, 2.0);
    } else {
      const size_t k = 2 + UniformIndex(rng, 2);
      double total = 0.0;
      for (size_t j = 0; j < k; ++j) {
        m.alphas.push_back(LogUniform(rng, 0.3, 3.0));
        m.coeffs.push_back(UniformReal(rng, 0.2, 1.0));
        total += m.coeffs.back();
      }
      for (double& c : m.coeffs) c /= total;
      m.kinetic_heg_mix = UniformReal(rng, 0.0, 0.5);
    }
    const bool open = UniformUnit(rng) < cfg.open_shell_fraction;
    m.spin_fraction = open ? UniformReal(rng, 0.5, 1.0) : 0.5;
    SystemGrid s = BuildSystem(Format("sys%03zu", i), m, cfg.radial_points,
                               cfg.grid_scale);
    s.e_base = UniformReal(rng, -2.0, -0.1) * m.electrons;
    d.systems.push_back(std::move(s));
  }

  const size_t n_records = cfg.single_records + cfg.difference_records;
  for (size_t i = 0; i < cfg.single_records; ++i) {
    PropertyRecord r;
    r.id = Format("rec%03zu", d.records.size());
    r.terms = {{d.systems[i % cfg.num_systems].id, 1.0}};
    r.subset_tag = "single";
    d.records.push_back(std::move(r));
  }
  for (size_t i = 0; i < cfg.difference_records; ++i) {
    const size_t a = UniformIndex(rng, cfg.num_systems);
    size_t b = UniformIndex(rng, cfg.num_systems - 1);
    if (b >= a) ++b;
    PropertyRecord r;
    r.id = Format("rec%03zu", d.records.size());
    r.terms = {{d.systems[a].id, 1.0}, {d.systems[b].id, -1.0}};
    r.subset_tag = "difference";
    d.records.push_back(std::move(r));
  }

  // Split assignment: Fisher-Yates permutation, then contiguous blocks.
  std::vector<size_t> order(n_records);
  for (size_t i = 0; i < n_records; ++i) order[i] = i;
  for (size_t i = n_records; i > 1; --i) {
    std::swap(order[i - 1], order[UniformIndex(rng, i)]);
  }
  const auto n_train = static_cast<size_t>(
      std::llround(cfg.train_fraction * static_cast<double>(n_records)));
  const auto n_val = std::min(
      n_records - n_train,
      static_cast<size_t>(
          std::llround(cfg.val_fraction * static_cast<double>(n_records))));
  for (size_t k = 0; k < n_records; ++k) {
    d.records[order[k]].split = k < n_train           ? Split::kTrain
                                : k < n_train + n_val ? Split::kVal
                                                      : Split::kTest;
  }

  // Reference energies from the target closed form.
  const ClosedForm target(*ClosedFormFromName(cfg.target));
  ClosedFormModel model(target);
  ExcScratch scratch;
  std::vector<double> energies(d.systems.size());
  for (size_t i = 0; i < d.systems.size(); ++i) {
    const SystemFeatures f =
        ComputeSystemFeatures(d.systems[i].points, cfg.omega, false);
    energies[i] = d.systems[i].e_base + ExcSl(model, f, scratch);
  }
  for (PropertyRecord& r : d.records) {
    std::vector<size_t> idx;
    for (const RecordTerm& t : r.terms) idx.push_back(d.SystemIndex(t.system_id));
    r.e_ref = RecordEnergy(r, idx, energies);
  }
  return d;
}

std::string EncodeSystemGrid(const SystemGrid& s) {
  std::string out;
  const size_t n = s.points.size();
  out.reserve(kHeaderBytes + kNumArchiveColumns * 8 * n + 4);
  out.append(kMagic, 4);
  PutU32(out, kArchiveVersion);
  PutU64(out, n);
  for (size_t col = 0; col < kNumArchiveColumns; ++col) {
    for (const GridPointDensities& p : s.points) {
      const double values[kNumArchiveColumns] = {
          p.weight, p.rho_a, p.rho_b, p.grad_a, p.grad_b, p.tau_a, p.tau_b,
          0.0};
      PutF64(out, values[col]);
    }
  }
  PutU32(out, Crc32(out));
  return out;
}

void DecodeSystemGrid(std::string_view bytes, SystemGrid* s) {
  using Kind = DatasetError::Kind;
  const std::string where = "system '" + s->id + "': ";
  if (bytes.size() < kHeaderBytes + 4) {
    throw DatasetError(Kind::kChecksum, where + "truncated grid file");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DatasetError(Kind::kMalformed, where + "bad magic");
  }
  const uint32_t version = static_cast<uint32_t>(GetLe(bytes, 4, 4));
  if (version != kArchiveVersion) {
    throw DatasetError(Kind::kVersion,
                       where + "unsupported grid version " +
                           std::to_string(version));
  }
  const uint64_t n = GetLe(bytes, 8, 8);
  const uint64_t expected = kHeaderBytes + kNumArchiveColumns * 8 * n + 4;
  if (n > (bytes.size() / 8) || bytes.size() != expected) {
    throw DatasetError(Kind::kChecksum, where + "size does not match header");
  }
  const uint32_t stored =
      static_cast<uint32_t>(GetLe(bytes, bytes.size() - 4, 4));
  if (stored != Crc32(bytes.substr(0, bytes.size() - 4))) {
    throw DatasetError(Kind::kChecksum, where + "CRC32 mismatch");
  }
  s->points.assign(n, GridPointDensities{});
  auto column = [&](size_t col, size_t g) {
    return std::bit_cast<double>(GetLe(bytes, kHeaderBytes + (col * n + g) * 8, 8));
  };
  for (size_t g = 0; g < n; ++g) {
    GridPointDensities& p = s->points[g];
    p.weight = column(0, g);
    p.rho_a = column(1, g);
    p.rho_b = column(2, g);
    p.grad_a = column(3, g);
    p.grad_b = column(4, g);
    p.tau_a = column(5, g);
    p.tau_b = column(6, g);
  }
}

void SaveDataset(const Dataset& d, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DatasetError(DatasetError::Kind::kIo,
                       "cannot create '" + dir + "': " + ec.message());
  }
  json systems = json::array();
  for (const SystemGrid& s : d.systems) {
    const std::string file = s.id + ".sygr";
    std::ofstream out(fs::path(dir) / file, std::ios::binary);
    const std::string bytes = EncodeSystemGrid(s);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw DatasetError(DatasetError::Kind::kIo, "cannot write " + file);
    }
    systems.push_back({{"id", s.id},
                       {"file", file},
                       {"points", s.points.size()},
                       {"e_base", s.e_base},
                       {"electrons", s.electrons}});
  }
  json records = json::array();
  json splits = {{"train", json::array()},
                 {"val", json::array()},
                 {"test", json::array()}};
  for (const PropertyRecord& r : d.records) {
    json terms = json::array();
    for (const RecordTerm& t : r.terms) {
      terms.push_back({t.system_id, t.coefficient});
    }
    records.push_back({{"id", r.id},
                       {"terms", terms},
                       {"e_ref", r.e_ref},
                       {"weight", r.weight},
                       {"split", SplitName(r.split)},
                       {"subset_tag", r.subset_tag}});
    splits[std::string(SplitName(r.split))].push_back(r.id);
  }
  json manifest = {{"version", kArchiveVersion},
                   {"seed", d.seed},
                   {"target", d.target},
                   {"omega", d.omega},
                   {"generator", d.generator.empty()
                                     ? json::object()
                                     : json::parse(d.generator)},
                   {"systems", systems},
                   {"records", records},
                   {"splits", splits}};
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
  if (!out) {
    throw DatasetError(DatasetError::Kind::kIo, "cannot write manifest.json");
  }
}

Dataset LoadDataset(const std::string& dir) {
  namespace fs = std::filesystem;
  using Kind = DatasetError::Kind;
  auto read_file = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
      throw DatasetError(Kind::kIo, "cannot open '" + p.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  json m;
  try {
    m = json::parse(read_file(fs::path(dir) / "manifest.json"));
  } catch (const json::exception& e) {
    throw DatasetError(Kind::kMalformed,
                       std::string("manifest.json: ") + e.what());
  }
  Dataset d;
  try {
    const uint32_t version = m.at("version").get<uint32_t>();
    if (version != kArchiveVersion) {
      throw DatasetError(Kind::kVersion, "unsupported archive version " +
                                             std::to_string(version));
    }
    d.seed = m.at("seed").get<uint64_t>();
    d.target = m.at("target").get<std::string>();
    d.omega = m.at("omega").get<double>();
    const json& gen = m.at("generator");
    d.generator = gen.empty() ? "" : gen.dump();
    for (const json& js : m.at("systems")) {
      SystemGrid s;
      s.id = js.at("id").get<std::string>();
      s.e_base = js.at("e_base").get<double>();
      s.electrons = js.at("electrons").get<double>();
      DecodeSystemGrid(read_file(fs::path(dir) / js.at("file").get<std::string>()),
                       &s);
      if (s.points.size() != js.at("points").get<size_t>()) {
        throw DatasetError(Kind::kMalformed,
                           "system '" + s.id + "': point count mismatch");
      }
      d.systems.push_back(std::move(s));
    }
    for (const json& jr : m.at("records")) {
      PropertyRecord r;
      r.id = jr.at("id").get<std::string>();
      for (const json& t : jr.at("terms")) {
        r.terms.push_back({t.at(0).get<std::string>(), t.at(1).get<double>()});
      }
      r.e_ref = jr.at("e_ref").get<double>();
      r.weight = jr.at("weight").get<double>();
      const auto split = SplitFromName(jr.at("split").get<std::string>());
      if (!split) throw DatasetError(Kind::kMalformed, r.id + ": bad split");
      r.split = *split;
      r.subset_tag = jr.at("subset_tag").get<std::string>();
      if (!(r.weight >= 0.0)) {
        throw DatasetError(Kind::kMalformed, r.id + ": negative weight");
      }
      d.records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DatasetError(Kind::kMalformed,
                       std::string("manifest.json: ") + e.what());
  }
  for (const PropertyRecord& r : d.records) {
    for (const RecordTerm& t : r.terms) d.SystemIndex(t.system_id);
  }
  return d;
}

FeatureCache::FeatureCache(const Dataset& dataset, double omega,
                           bool with_densities)
    : omega_(omega), with_densities_(with_densities) {
  systems_.reserve(dataset.systems.size());
  for (const SystemGrid& s : dataset.systems) {
    systems_.push_back(ComputeSystemFeatures(s.points, omega, with_densities));
  }
}

size_t FeatureCache::num_values() const {
  size_t n = 0;
  for (const SystemFeatures& s : systems_) {
    n += s.size() * SystemFeatures::kNumColumns + s.rho_a.size() +
         s.rho_b.size();
  }
  return n;
}

std::shared_ptr<const FeatureCache> FeatureCacheStore::Get(double omega,
                                                           bool with_densities) {
  std::lock_guard<std::mutex> lock(mu_);
  auto& slot = caches_[{omega, with_densities}];
  if (!slot) {
    slot = std::make_shared<const FeatureCache>(*dataset_, omega, with_densities);
    ++builds_;
  }
  return slot;
}

}  // namespace xcevo
