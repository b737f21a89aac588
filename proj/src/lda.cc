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

#include "xcevo/lda.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xcevo {

namespace {

constexpr double kPi = std::numbers::pi;

// Coefficients of the attenuation's expansion in b = 1/a:
// sum_k (-1)^k b^(2k+2) / kSeriesDenominators[k]. Entire in b, so the
// truncation below is exact to rounding for a >= 1.
constexpr std::array<double, 16> kSeriesDenominators = {
    9.0,
    60.0,
    420.0,
    3240.0,
    27720.0,
    262080.0,
    2721600.0,
    30844800.0,
    379209600.0,
    5029516800.0,
    71610739200.0,
    1089728640000.0,
    17653603968000.0,
    303380453376000.0,
    5513155135488000.0,
    105639166144512000.0,
};

struct Pw92Set {
  double a, alpha1, beta1, beta2, beta3, beta4;
};

constexpr Pw92Set kPw92Paramagnetic = {0.031091, 0.21370, 7.5957,
                                       3.5876,   1.6382,  0.49294};
constexpr Pw92Set kPw92Ferromagnetic = {0.015545, 0.20548, 14.1189,
                                        6.1977,   3.3662,  0.62517};
// Evaluates to minus the spin stiffness.
constexpr Pw92Set kPw92Stiffness = {0.016887, 0.11125, 10.357,
                                    3.6231,   0.88026, 0.49671};

// f''(0) for the spin interpolation f(zeta).
constexpr double kFzz0 = 1.709921;

double Pw92G(double rs, const Pw92Set& p) {
  const double srs = std::sqrt(rs);
  const double denom =
      2.0 * p.a *
      (p.beta1 * srs + p.beta2 * rs + p.beta3 * rs * srs + p.beta4 * rs * rs);
  return -2.0 * p.a * (1.0 + p.alpha1 * rs) * std::log1p(1.0 / denom);
}

}  // namespace

double LdaExchangePerSpin(double rho_sigma) {
  if (rho_sigma < 0.0) {
    throw std::invalid_argument("LdaExchangePerSpin: negative density");
  }
  return kSpinExchangePrefactor * rho_sigma * std::cbrt(rho_sigma);
}

double SrAttenuation(double a) {
  if (!(a > 0.0)) return 1.0;
  double value;
  if (a >= 1.0) {
    const double b2 = 1.0 / (a * a);
    double term = b2;
    value = 0.0;
    for (size_t k = 0; k < kSeriesDenominators.size(); ++k) {
      const double contribution = term / kSeriesDenominators[k];
      value += (k % 2 == 0) ? contribution : -contribution;
      term *= b2;
    }
  } else {
    const double a2 = a * a;
    const double a3 = a2 * a;
    const double bracket = 2.0 * std::sqrt(kPi) * std::erf(1.0 / a) -
                           3.0 * a + a3 + (2.0 * a - a3) * std::exp(-1.0 / a2);
    value = 1.0 - (2.0 / 3.0) * a * bracket;
  }
  return std::clamp(value, 0.0, 1.0);
}

double AttenuationArgument(double rho_sigma, double omega) {
  if (omega == 0.0) return 0.0;
  return omega / std::cbrt(6.0 * kPi * kPi * rho_sigma);
}

double Pw92EpsilonC(double rs, double zeta) {
  const double ec0 = Pw92G(rs, kPw92Paramagnetic);
  const double ec1 = Pw92G(rs, kPw92Ferromagnetic);
  const double alpha_c = -Pw92G(rs, kPw92Stiffness);
  const double fz = (std::pow(1.0 + zeta, 4.0 / 3.0) +
                     std::pow(1.0 - zeta, 4.0 / 3.0) - 2.0) /
                    (2.0 * std::cbrt(2.0) - 2.0);
  const double z4 = (zeta * zeta) * (zeta * zeta);
  return ec0 + alpha_c * fz / kFzz0 * (1.0 - z4) + (ec1 - ec0) * fz * z4;
}

double LsdaCorrelation(double rho_a, double rho_b) {
  const double rho = rho_a + rho_b;
  if (!(rho > 0.0)) return 0.0;
  const double zeta = std::clamp((rho_a - rho_b) / rho, -1.0, 1.0);
  return rho * Pw92EpsilonC(WignerSeitzRadius(rho), zeta);
}

StollPartition StollSplit(double rho_a, double rho_b) {
  StollPartition out;
  out.same_spin_a = LsdaCorrelation(rho_a, 0.0);
  out.same_spin_b = LsdaCorrelation(rho_b, 0.0);
  out.opposite_spin =
      LsdaCorrelation(rho_a, rho_b) - (out.same_spin_a + out.same_spin_b);
  return out;
}

}  // namespace xcevo
