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

#ifndef XCEVO_LDA_H_
#define XCEVO_LDA_H_

// Local (spin) density kernels: exchange with short-range attenuation, PW92
// correlation, and the same-spin / opposite-spin correlation partition.
// Energy densities are in hartree / bohr^3, densities in bohr^-3.

#include <cmath>
#include <numbers>

namespace xcevo {

inline constexpr double kHartreeToKcalPerMol = 627.509474;

// Channels with less density than this contribute nothing.
inline constexpr double kDensityFloor = 1e-12;

// -(3/4)(6/pi)^(1/3): per-spin LDA exchange prefactor under exact spin
// scaling, e_x[rho_a, rho_b] = sum_s e_x[2 rho_s] / 2.
inline constexpr double kSpinExchangePrefactor = -0.930525736349100025;

// e_x,s = kSpinExchangePrefactor * rho_s^(4/3). Throws on negative input.
double LdaExchangePerSpin(double rho_sigma);

// Short-range attenuation 1 - (2/3) a [2 sqrt(pi) erf(1/a) - 3a + a^3 +
// (2a - a^3) exp(-1/a^2)], a = omega / k_F. Result lies in [0, 1].
double SrAttenuation(double a);

// a_s = omega / (6 pi^2 rho_s)^(1/3).
double AttenuationArgument(double rho_sigma, double omega);

// PW92 uniform-gas correlation energy per electron.
double Pw92EpsilonC(double rs, double zeta);

// Correlation energy density rho * eps_c(rs, zeta). Zero for zero density.
double LsdaCorrelation(double rho_a, double rho_b);

struct StollPartition {
  double same_spin_a = 0.0;
  double same_spin_b = 0.0;
  double opposite_spin = 0.0;
};

// e_css,s = e_c(rho_s, 0); e_cos = e_c(rho_a, rho_b) - (e_c(rho_a, 0) +
// e_c(rho_b, 0)). The grouping of the subtraction keeps the result bitwise
// symmetric under rho_a <-> rho_b.
StollPartition StollSplit(double rho_a, double rho_b);

// Wigner-Seitz radius (3 / (4 pi rho))^(1/3).
inline double WignerSeitzRadius(double rho) {
  return std::cbrt(3.0 / (4.0 * std::numbers::pi * rho));
}

}  // namespace xcevo

#endif  // XCEVO_LDA_H_
