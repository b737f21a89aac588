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

#ifndef XCEVO_FINGERPRINT_H_
#define XCEVO_FINGERPRINT_H_

// Semantic fingerprints: a program is identified by its outputs on a fixed
// probe set of (feature, parameter) tuples, so value-equivalent programs
// share a digest whatever their instruction text.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xcevo/dsl.h"

namespace xcevo {

// 64-bit FNV-1a.
uint64_t Fnv1a(std::span<const unsigned char> bytes,
               uint64_t state = 14695981039346656037ULL);
uint64_t Fnv1a(std::string_view text,
               uint64_t state = 14695981039346656037ULL);

class ProbeSet {
 public:
  static constexpr uint64_t kDefaultSeed = 0x5F7E5001;
  static constexpr size_t kDefaultSize = 16;
  static constexpr size_t kTabulatedParams = 256;

  explicit ProbeSet(uint64_t seed = kDefaultSeed, size_t size = kDefaultSize);

  size_t size() const { return size_; }

  // Physical ranges for known names: x2-like log-uniform in [1e-4, 1e4],
  // w uniform in [-1, 1], rho_a/rho_b log-uniform in [1e-4, 1e2]. Other
  // names get uniform [0, 1] draws keyed by the name.
  double Feature(size_t tuple, std::string_view name) const;
  // Uniform in [-2, 2], indexed by flat parameter position.
  double Param(size_t tuple, size_t flat_index) const;

 private:
  uint64_t seed_;
  size_t size_;
  std::vector<std::array<double, 6>> known_features_;
  std::vector<std::vector<double>> params_;
};

// Probe set shared by the whole process (seed kDefaultSeed).
const ProbeSet& DefaultProbeSet();

// Raw probe outputs of a valid program.
std::vector<double> ProbeOutputs(const Program& program,
                                 const ProbeSet& probe = DefaultProbeSet());

// Canonical bytes of one output: 10 significant digits, with fixed
// sentinels for NaN, +Inf and -Inf and -0 folded into 0.
std::string QuantizeOutput(double value);

uint64_t Fingerprint(const Program& program,
                     const ProbeSet& probe = DefaultProbeSet());

// Digest of a functional form from its per-factor digests.
uint64_t CombineDigests(std::span<const uint64_t> digests);

std::string DigestHex(uint64_t digest);

}  // namespace xcevo

#endif  // XCEVO_FINGERPRINT_H_
