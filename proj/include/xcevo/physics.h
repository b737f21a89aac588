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

#ifndef XCEVO_PHYSICS_H_
#define XCEVO_PHYSICS_H_

// Semilocal exchange-correlation energy of a functional form on a
// quadrature grid, plus the closed-form reference functionals.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xcevo/dsl.h"
#include "xcevo/functional.h"

namespace xcevo {

inline constexpr double kDefaultOmega = 0.3;

struct GridPointDensities {
  double weight = 0.0;
  double rho_a = 0.0;
  double rho_b = 0.0;
  double grad_a = 0.0;  // |grad rho_a|
  double grad_b = 0.0;
  double tau_a = 0.0;
  double tau_b = 0.0;
};

struct DerivedFeatures {
  double x2_a = 0.0;
  double x2_b = 0.0;
  double w_a = 0.0;
  double w_b = 0.0;
  double x2_ave = 0.0;
  double w_ave = 0.0;
  double e_x_sr_a = 0.0;
  double e_x_sr_b = 0.0;
  double e_css_a = 0.0;
  double e_css_b = 0.0;
  double e_cos = 0.0;
};

// (3/10)(6 pi^2)^(2/3) rho^(5/3).
double HegKineticDensity(double rho_sigma);

// Features of one point. Channels below kDensityFloor get x2 = 0, w = 0 and
// zero energy densities; they enter the spin average with t = 1.
DerivedFeatures ComputeFeatures(const GridPointDensities& point, double omega);

// Column storage of the parameter-independent quantities of one system.
// Energy densities are premultiplied by the quadrature weight.
struct SystemFeatures {
  static constexpr size_t kNumColumns = 11;

  size_t size() const { return x2_a.size(); }

  // Alpha and beta columns are bitwise equal, so beta-channel factors can
  // reuse the alpha ones.
  bool closed_shell = false;
  std::vector<double> x2_a, x2_b, w_a, w_b, x2_ave, w_ave;
  std::vector<double> e_x_a, e_x_b, e_css_a, e_css_b, e_cos;
  // Only filled for programs reading the reserved density features.
  std::vector<double> rho_a, rho_b;
};

SystemFeatures ComputeSystemFeatures(std::span<const GridPointDensities> points,
                                     double omega, bool with_densities);

// Factor input columns of one spin channel (or of the spin average).
struct FactorInputs {
  std::span<const double> x2;
  std::span<const double> w;
  std::span<const double> rho_a;
  std::span<const double> rho_b;
  std::span<const double> x2_a;
  std::span<const double> x2_b;
};

// Source of enhancement-factor values for the energy kernel.
class XcModel {
 public:
  virtual ~XcModel() = default;
  // Factor f is identically zero and may be skipped.
  virtual bool IsZero(size_t f) const = 0;
  virtual void Evaluate(size_t f, const FactorInputs& in,
                        std::span<double> out) = 0;
};

// A functional form with a fixed parameter vector.
class ProgramModel : public XcModel {
 public:
  ProgramModel(const FunctionalForm& form, std::span<const double> params);
  bool IsZero(size_t f) const override;
  void Evaluate(size_t f, const FactorInputs& in,
                std::span<double> out) override;
  // Reuse for a new parameter vector of the same form.
  void set_params(std::span<const double> params) { params_ = params; }

 private:
  const FunctionalForm& form_;
  std::span<const double> params_;
  BatchScratch scratch_;
  std::vector<std::span<const double>> columns_;
};

// Per-call buffers of ExcSl.
struct ExcScratch {
  std::vector<double> fx_a, fx_b, fss_a, fss_b, fos;
};

// Sum over points of the weighted energy densities times the enhancement
// factors, accumulated per point as
// ((e_x_a Fx_a + e_x_b Fx_b) + (e_ss_a Fss_a + e_ss_b Fss_b)) + e_os Fos.
double ExcSl(XcModel& model, const SystemFeatures& system, ExcScratch& scratch);

double ExcSl(const FunctionalForm& form, std::span<const double> params,
             std::span<const GridPointDensities> points, double omega);

// Closed-form reference functionals.
enum class ClosedFormName { kB97X, kWb97mv, kGas22, kGas22a, kGas22b, kGas22c };

std::optional<ClosedFormName> ClosedFormFromName(std::string_view name);
std::string_view ClosedFormNameString(ClosedFormName name);

class ClosedForm {
 public:
  // Published coefficients.
  explicit ClosedForm(ClosedFormName name);
  // Explicit coefficients, one vector per factor in ParamNames() order.
  ClosedForm(ClosedFormName name,
             std::array<std::vector<double>, kNumFactors> coeffs);

  ClosedFormName name() const { return name_; }
  static std::vector<std::string> ParamNames(ClosedFormName name, size_t f);
  static std::vector<double> DefaultParams(ClosedFormName name, size_t f);
  const std::vector<double>& coeffs(size_t f) const { return coeffs_[f]; }

  bool IsZero(size_t f) const;
  double Factor(size_t f, double x2, double w) const;

 private:
  ClosedFormName name_;
  std::array<std::vector<double>, kNumFactors> coeffs_;
};

class ClosedFormModel : public XcModel {
 public:
  explicit ClosedFormModel(const ClosedForm& form) : form_(form) {}
  bool IsZero(size_t f) const override { return form_.IsZero(f); }
  void Evaluate(size_t f, const FactorInputs& in,
                std::span<double> out) override;

 private:
  const ClosedForm& form_;
};

// Row of the F_xc diagnostic.
struct FxcRow {
  double w;
  double rs;
  double s;
  double fxc;
};

// Closed-shell F_xc = (e_x Fx + e_css Fcss + e_cos Fcos) / (e_x + e_css +
// e_cos) with unattenuated LDA exchange, rho = 3 / (4 pi rs^3) and
// x_s = 2 (3 pi^2)^(1/3) s. Rows are ordered w, then rs, then s. Throws
// std::invalid_argument for rs <= 0.
std::vector<FxcRow> FxcCurves(XcModel& model, std::span<const double> s_grid,
                              std::span<const double> w_values,
                              std::span<const double> rs_values);

// CSV with header "w,rs,s,Fxc".
std::string FxcCsv(std::span<const FxcRow> rows);

}  // namespace xcevo

#endif  // XCEVO_PHYSICS_H_
