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

#include "xcevo/fingerprint.h"

#include <cmath>
#include <cstdio>

#include "xcevo/random.h"

namespace xcevo {

namespace {

constexpr uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::array<std::string_view, 6> kKnownFeatures = {
    "x2", "x2_a", "x2_b", "w", "rho_a", "rho_b"};

double LogUniform(Rng& rng, double lo, double hi) {
  return std::exp(UniformReal(rng, std::log(lo), std::log(hi)));
}

}  // namespace

uint64_t Fnv1a(std::span<const unsigned char> bytes, uint64_t state) {
  for (unsigned char b : bytes) {
    state ^= b;
    state *= kFnvPrime;
  }
  return state;
}

uint64_t Fnv1a(std::string_view text, uint64_t state) {
  return Fnv1a(std::span(reinterpret_cast<const unsigned char*>(text.data()),
                         text.size()),
               state);
}

ProbeSet::ProbeSet(uint64_t seed, size_t size) : seed_(seed), size_(size) {
  Rng rng(seed);
  known_features_.resize(size);
  params_.resize(size);
  for (size_t t = 0; t < size; ++t) {
    auto& f = known_features_[t];
    f[0] = LogUniform(rng, 1e-4, 1e4);
    f[1] = LogUniform(rng, 1e-4, 1e4);
    f[2] = LogUniform(rng, 1e-4, 1e4);
    f[3] = UniformReal(rng, -1.0, 1.0);
    f[4] = LogUniform(rng, 1e-4, 1e2);
    f[5] = LogUniform(rng, 1e-4, 1e2);
    params_[t].resize(kTabulatedParams);
    for (double& p : params_[t]) p = UniformReal(rng, -2.0, 2.0);
  }
}

double ProbeSet::Feature(size_t tuple, std::string_view name) const {
  for (size_t k = 0; k < kKnownFeatures.size(); ++k) {
    if (kKnownFeatures[k] == name) return known_features_[tuple][k];
  }
  Rng rng(MixSeed(seed_ ^ Fnv1a(name), tuple));
  return UniformUnit(rng);
}

double ProbeSet::Param(size_t tuple, size_t flat_index) const {
  if (flat_index < kTabulatedParams) return params_[tuple][flat_index];
  Rng rng(MixSeed(seed_ + flat_index, tuple));
  return UniformReal(rng, -2.0, 2.0);
}

const ProbeSet& DefaultProbeSet() {
  static const ProbeSet probe;
  return probe;
}

std::vector<double> ProbeOutputs(const Program& program,
                                 const ProbeSet& probe) {
  const WorkspaceSchema& schema = program.schema();
  std::vector<double> outputs(probe.size());
  std::vector<double> features(schema.features().size());
  std::vector<double> params(schema.num_params());
  for (size_t t = 0; t < probe.size(); ++t) {
    for (size_t i = 0; i < features.size(); ++i) {
      features[i] = probe.Feature(t, schema.features()[i]);
    }
    for (size_t i = 0; i < params.size(); ++i) params[i] = probe.Param(t, i);
    outputs[t] = Execute(program, features, params);
  }
  return outputs;
}

std::string QuantizeOutput(double value) {
  if (std::isnan(value)) return "NaN";
  if (std::isinf(value)) return value > 0 ? "+Inf" : "-Inf";
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9e", value);
  return buf;
}

uint64_t Fingerprint(const Program& program, const ProbeSet& probe) {
  uint64_t state = Fnv1a(std::string_view{});
  for (double v : ProbeOutputs(program, probe)) {
    state = Fnv1a(QuantizeOutput(v), state);
    state = Fnv1a(std::string_view("|"), state);
  }
  return state;
}

uint64_t CombineDigests(std::span<const uint64_t> digests) {
  uint64_t state = Fnv1a(std::string_view{});
  for (uint64_t d : digests) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(d >> (8 * i));
    state = Fnv1a(std::span<const unsigned char>(bytes, 8), state);
  }
  return state;
}

std::string DigestHex(uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace xcevo
