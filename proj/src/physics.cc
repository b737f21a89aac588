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

#include "xcevo/physics.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "xcevo/lda.h"

namespace xcevo {

namespace {

constexpr double kPi = std::numbers::pi;
// (3/10)(6 pi^2)^(2/3).
constexpr double kHegKineticPrefactor = 4.5577998723455971;

struct Channel {
  bool present = false;
  double x2 = 0.0;
  double w = 0.0;
  double t = 1.0;
};

Channel ChannelFeatures(double rho, double grad, double tau) {
  Channel c;
  if (!(rho >= kDensityFloor)) return c;
  c.present = true;
  const double rho43 = rho * std::cbrt(rho);
  c.x2 = (grad * grad) / (rho43 * rho43);
  const double heg = HegKineticDensity(rho);
  c.t = heg / tau;
  c.w = (heg - tau) / (heg + tau);
  return c;
}

// Codes of the feature names a program may read.
enum FeatureCode : int { kX2, kW, kRhoA, kRhoB, kX2A, kX2B };

int FeatureCodeOf(std::string_view name) {
  if (name == "x2") return kX2;
  if (name == "w") return kW;
  if (name == "rho_a") return kRhoA;
  if (name == "rho_b") return kRhoB;
  if (name == "x2_a") return kX2A;
  if (name == "x2_b") return kX2B;
  return -1;
}

std::span<const double> Column(const FactorInputs& in, int code) {
  switch (code) {
    case kX2:
      return in.x2;
    case kW:
      return in.w;
    case kRhoA:
      return in.rho_a;
    case kRhoB:
      return in.rho_b;
    case kX2A:
      return in.x2_a;
    case kX2B:
      return in.x2_b;
  }
  return {};
}

}  // namespace

double HegKineticDensity(double rho_sigma) {
  const double c = std::cbrt(rho_sigma);
  return kHegKineticPrefactor * rho_sigma * c * c;
}

DerivedFeatures ComputeFeatures(const GridPointDensities& p, double omega) {
  DerivedFeatures f;
  const Channel a = ChannelFeatures(p.rho_a, p.grad_a, p.tau_a);
  const Channel b = ChannelFeatures(p.rho_b, p.grad_b, p.tau_b);
  f.x2_a = a.x2;
  f.x2_b = b.x2;
  f.w_a = a.w;
  f.w_b = b.w;
  f.x2_ave = 0.5 * (a.x2 + b.x2);
  const double t_ave = 0.5 * (a.t + b.t);
  f.w_ave = std::isinf(t_ave) ? 1.0 : (t_ave - 1.0) / (t_ave + 1.0);
  const double ra = a.present ? p.rho_a : 0.0;
  const double rb = b.present ? p.rho_b : 0.0;
  if (a.present) {
    f.e_x_sr_a =
        LdaExchangePerSpin(ra) * SrAttenuation(AttenuationArgument(ra, omega));
  }
  if (b.present) {
    f.e_x_sr_b =
        LdaExchangePerSpin(rb) * SrAttenuation(AttenuationArgument(rb, omega));
  }
  const StollPartition c = StollSplit(ra, rb);
  f.e_css_a = c.same_spin_a;
  f.e_css_b = c.same_spin_b;
  f.e_cos = c.opposite_spin;
  return f;
}

SystemFeatures ComputeSystemFeatures(std::span<const GridPointDensities> points,
                                     double omega, bool with_densities) {
  SystemFeatures s;
  const size_t n = points.size();
  for (auto* col : {&s.x2_a, &s.x2_b, &s.w_a, &s.w_b, &s.x2_ave, &s.w_ave,
                    &s.e_x_a, &s.e_x_b, &s.e_css_a, &s.e_css_b, &s.e_cos}) {
    col->resize(n);
  }
  bool closed = true;
  for (size_t g = 0; g < n; ++g) {
    const GridPointDensities& p = points[g];
    closed = closed && p.rho_a == p.rho_b && p.grad_a == p.grad_b &&
             p.tau_a == p.tau_b;
    const DerivedFeatures f = ComputeFeatures(p, omega);
    s.x2_a[g] = f.x2_a;
    s.x2_b[g] = f.x2_b;
    s.w_a[g] = f.w_a;
    s.w_b[g] = f.w_b;
    s.x2_ave[g] = f.x2_ave;
    s.w_ave[g] = f.w_ave;
    s.e_x_a[g] = p.weight * f.e_x_sr_a;
    s.e_x_b[g] = p.weight * f.e_x_sr_b;
    s.e_css_a[g] = p.weight * f.e_css_a;
    s.e_css_b[g] = p.weight * f.e_css_b;
    s.e_cos[g] = p.weight * f.e_cos;
  }
  s.closed_shell = closed;
  if (with_densities) {
    s.rho_a.resize(n);
    s.rho_b.resize(n);
    for (size_t g = 0; g < n; ++g) {
      s.rho_a[g] = points[g].rho_a >= kDensityFloor ? points[g].rho_a : 0.0;
      s.rho_b[g] = points[g].rho_b >= kDensityFloor ? points[g].rho_b : 0.0;
    }
  }
  return s;
}

ProgramModel::ProgramModel(const FunctionalForm& form,
                           std::span<const double> params)
    : form_(form), params_(params) {
  if (params.size() != form.num_params()) {
    throw std::invalid_argument("ProgramModel: parameter count mismatch");
  }
  for (size_t f = 0; f < kNumFactors; ++f) {
    for (const std::string& name : form.factor(f).schema().features()) {
      if (FeatureCodeOf(name) < 0) {
        throw std::invalid_argument("ProgramModel: unsupported feature '" +
                                    name + "'");
      }
    }
  }
}

bool ProgramModel::IsZero(size_t f) const { return form_.factor(f).empty(); }

void ProgramModel::Evaluate(size_t f, const FactorInputs& in,
                            std::span<double> out) {
  const Program& program = form_.factor(f);
  const auto& names = program.schema().features();
  columns_.clear();
  for (const std::string& name : names) {
    std::span<const double> col = Column(in, FeatureCodeOf(name));
    if (col.size() != out.size()) {
      throw std::invalid_argument("ProgramModel: feature '" + name +
                                  "' is not available");
    }
    columns_.push_back(col);
  }
  ExecuteBatch(program, columns_, form_.FactorParams(params_, f), out,
               scratch_);
}

double ExcSl(XcModel& model, const SystemFeatures& s, ExcScratch& scratch) {
  const size_t n = s.size();
  const FactorInputs in_a{s.x2_a, s.w_a, s.rho_a, s.rho_b, s.x2_a, s.x2_b};
  const FactorInputs in_b{s.x2_b, s.w_b, s.rho_a, s.rho_b, s.x2_a, s.x2_b};
  const FactorInputs in_ave{s.x2_ave, s.w_ave, s.rho_a,
                            s.rho_b,  s.x2_a,  s.x2_b};
  const bool zero_x = model.IsZero(kFactorX);
  const bool zero_ss = model.IsZero(kFactorCss);
  const bool zero_os = model.IsZero(kFactorCos);

  auto eval_pair = [&](size_t f, std::vector<double>& a, std::vector<double>& b,
                       const double*& pa, const double*& pb) {
    a.resize(n);
    model.Evaluate(f, in_a, a);
    pa = a.data();
    if (s.closed_shell) {
      pb = pa;
    } else {
      b.resize(n);
      model.Evaluate(f, in_b, b);
      pb = b.data();
    }
  };
  const double *fxa = nullptr, *fxb = nullptr, *fsa = nullptr, *fsb = nullptr,
               *fos = nullptr;
  if (!zero_x) eval_pair(kFactorX, scratch.fx_a, scratch.fx_b, fxa, fxb);
  if (!zero_ss) eval_pair(kFactorCss, scratch.fss_a, scratch.fss_b, fsa, fsb);
  if (!zero_os) {
    scratch.fos.resize(n);
    model.Evaluate(kFactorCos, in_ave, scratch.fos);
    fos = scratch.fos.data();
  }

  double total = 0.0;
  for (size_t g = 0; g < n; ++g) {
    const double x = zero_x ? 0.0 : s.e_x_a[g] * fxa[g] + s.e_x_b[g] * fxb[g];
    const double ss =
        zero_ss ? 0.0 : s.e_css_a[g] * fsa[g] + s.e_css_b[g] * fsb[g];
    const double os = zero_os ? 0.0 : s.e_cos[g] * fos[g];
    total += (x + ss) + os;
  }
  return total;
}

double ExcSl(const FunctionalForm& form, std::span<const double> params,
             std::span<const GridPointDensities> points, double omega) {
  bool reserved = false;
  for (size_t f = 0; f < kNumFactors; ++f) {
    reserved = reserved || form.factor(f).schema().has_reserved_density();
  }
  const SystemFeatures s = ComputeSystemFeatures(points, omega, reserved);
  ProgramModel model(form, params);
  ExcScratch scratch;
  return ExcSl(model, s, scratch);
}

// Closed forms.

std::optional<ClosedFormName> ClosedFormFromName(std::string_view name) {
  if (name == "B97X") return ClosedFormName::kB97X;
  if (name == "WB97MV") return ClosedFormName::kWb97mv;
  if (name == "GAS22") return ClosedFormName::kGas22;
  if (name == "GAS22A") return ClosedFormName::kGas22a;
  if (name == "GAS22B") return ClosedFormName::kGas22b;
  if (name == "GAS22C") return ClosedFormName::kGas22c;
  return std::nullopt;
}

std::string_view ClosedFormNameString(ClosedFormName name) {
  switch (name) {
    case ClosedFormName::kB97X:
      return "B97X";
    case ClosedFormName::kWb97mv:
      return "WB97MV";
    case ClosedFormName::kGas22:
      return "GAS22";
    case ClosedFormName::kGas22a:
      return "GAS22A";
    case ClosedFormName::kGas22b:
      return "GAS22B";
    case ClosedFormName::kGas22c:
      return "GAS22C";
  }
  return "";
}

namespace {

// GAS22 parameters.
constexpr double kGasX[] = {0.862139736374172, 0.317533683085033,
                            0.936993691972698, 0.003840616724010807};
constexpr double kGasSs[] = {-4.10753796482853, -5.24218990333846,
                             7.5380689617542, -1.76643208454076,
                             0.46914023462026644};
constexpr double kGasOs[] = {0.805124374375355, 7.98909430970845,
                             -7.54815900595292, 2.00093961824784,
                             -1.76098915061634};
// Opposite-spin gamma of the forms that still carry u in that factor.
constexpr double kWb97mvGammaOs = 0.006;

bool IsWb97mvLike(ClosedFormName n) {
  return n == ClosedFormName::kWb97mv || n == ClosedFormName::kGas22a;
}

double UTransform(double gamma, double x2) {
  const double gx = gamma * x2;
  return gx / (1.0 + gx);
}

}  // namespace

std::vector<std::string> ClosedForm::ParamNames(ClosedFormName n, size_t f) {
  if (n == ClosedFormName::kB97X) {
    if (f == kFactorX) return {"c0", "c1", "c2", "gamma"};
    return {};
  }
  if (IsWb97mvLike(n)) {
    switch (f) {
      case kFactorX:
        return {"c00", "c10", "c01", "gamma"};
      case kFactorCss:
        return {"c00", "c10", "c20", "c43", "c04", "gamma"};
      default:
        return {"c00", "c10", "c20", "c21", "c60", "c61", "gamma"};
    }
  }
  switch (f) {
    case kFactorX:
      return {"c0", "c1", "c2", "gamma"};
    case kFactorCss:
      return {"c1", "c2", "c3", "c4", "gamma"};
    default:
      if (n == ClosedFormName::kGas22b) {
        return {"c0", "c2", "c3", "c4", "c5", "gamma"};
      }
      return {"c0", "c2", "c3", "c4", "c5"};
  }
}

std::vector<double> ClosedForm::DefaultParams(ClosedFormName n, size_t f) {
  if (n == ClosedFormName::kB97X) {
    if (f == kFactorX) return {0.8094, 0.5073, 0.7481, 0.004};
    return {};
  }
  if (IsWb97mvLike(n)) {
    switch (f) {
      case kFactorX:
        return {0.85, 0.259, 1.007, 0.004};
      case kFactorCss:
        return {0.443, -1.437, -4.535, -3.39, 4.278, 0.2};
      default:
        return {1.0, 1.358, 2.924, -8.812, -1.39, 9.142, kWb97mvGammaOs};
    }
  }
  switch (f) {
    case kFactorX:
      return {std::begin(kGasX), std::end(kGasX)};
    case kFactorCss:
      return {std::begin(kGasSs), std::end(kGasSs)};
    default: {
      std::vector<double> c(std::begin(kGasOs), std::end(kGasOs));
      if (n == ClosedFormName::kGas22b) c.push_back(kWb97mvGammaOs);
      return c;
    }
  }
}

ClosedForm::ClosedForm(ClosedFormName name)
    : ClosedForm(name, {DefaultParams(name, 0), DefaultParams(name, 1),
                        DefaultParams(name, 2)}) {}

ClosedForm::ClosedForm(ClosedFormName name,
                       std::array<std::vector<double>, kNumFactors> coeffs)
    : name_(name), coeffs_(std::move(coeffs)) {
  for (size_t f = 0; f < kNumFactors; ++f) {
    if (coeffs_[f].size() != ParamNames(name, f).size()) {
      throw std::invalid_argument("ClosedForm: coefficient count mismatch");
    }
  }
}

bool ClosedForm::IsZero(size_t f) const {
  return name_ == ClosedFormName::kB97X && f != kFactorX;
}

double ClosedForm::Factor(size_t f, double x2, double w) const {
  const std::vector<double>& c = coeffs_[f];
  const double w2 = w * w;
  const double w4 = w2 * w2;
  const double w6 = w4 * w2;
  if (name_ == ClosedFormName::kB97X) {
    if (f != kFactorX) return 0.0;
    const double u = UTransform(c[3], x2);
    return c[0] + c[1] * u + c[2] * (u * u);
  }
  if (f == kFactorX) {
    // Same form for every member of the family.
    const double u = UTransform(c[3], x2);
    return c[0] + c[1] * w + c[2] * u;
  }
  if (IsWb97mvLike(name_)) {
    if (f == kFactorCss) {
      const double u = UTransform(c[5], x2);
      const double u3 = u * u * u;
      return c[0] + c[1] * w + c[2] * w2 + c[3] * w4 * u3 + c[4] * u3 * u;
    }
    const double u = UTransform(c[6], x2);
    return c[0] + c[1] * w + c[2] * w2 + c[3] * w2 * u + c[4] * w6 +
           c[5] * w6 * u;
  }
  if (f == kFactorCss) {
    const double u = UTransform(c[4], x2);
    const double u2 = u * u;
    const double u4 = u2 * u2;
    const double u6 = u4 * u2;
    const double gradient_term = name_ == ClosedFormName::kGas22b ? u4 : u6;
    return c[0] * w + c[1] * w2 + c[2] * w4 * u6 + c[3] * gradient_term + u;
  }
  if (name_ == ClosedFormName::kGas22b) {
    const double u = UTransform(c[5], x2);
    return c[0] + c[1] * w2 + c[2] * w6 + c[3] * w6 * u + c[4] * w2 * u;
  }
  const double x23 = std::cbrt(x2);
  return c[0] + c[1] * w2 + c[2] * w6 + c[3] * w6 * x23 + c[4] * w2 * x23;
}

void ClosedFormModel::Evaluate(size_t f, const FactorInputs& in,
                               std::span<double> out) {
  for (size_t g = 0; g < out.size(); ++g) {
    out[g] = form_.Factor(f, in.x2[g], in.w[g]);
  }
}

// F_xc diagnostic.

std::vector<FxcRow> FxcCurves(XcModel& model, std::span<const double> s_grid,
                              std::span<const double> w_values,
                              std::span<const double> rs_values) {
  for (double rs : rs_values) {
    if (!(rs > 0.0)) throw std::invalid_argument("FxcCurves: rs must be > 0");
  }
  const double x_per_s = 2.0 * std::cbrt(3.0 * kPi * kPi);
  const size_t n = s_grid.size();
  std::vector<double> x2(n), w(n), rho(n), fx(n), fss(n), fos(n);
  std::vector<FxcRow> rows;
  rows.reserve(n * w_values.size() * rs_values.size());
  for (double wv : w_values) {
    for (double rs : rs_values) {
      const double rho_total = 3.0 / (4.0 * kPi * rs * rs * rs);
      const double rho_s = 0.5 * rho_total;
      for (size_t i = 0; i < n; ++i) {
        const double x = x_per_s * s_grid[i];
        x2[i] = x * x;
        w[i] = wv;
        rho[i] = rho_s;
      }
      const FactorInputs in{x2, w, rho, rho, x2, x2};
      auto eval = [&](size_t f, std::vector<double>& out) {
        if (model.IsZero(f)) {
          std::fill(out.begin(), out.end(), 0.0);
        } else {
          model.Evaluate(f, in, out);
        }
      };
      eval(kFactorX, fx);
      eval(kFactorCss, fss);
      eval(kFactorCos, fos);
      const double e_x = 2.0 * LdaExchangePerSpin(rho_s);
      const StollPartition c = StollSplit(rho_s, rho_s);
      const double e_ss = c.same_spin_a + c.same_spin_b;
      const double e_os = c.opposite_spin;
      const double denom = e_x + e_ss + e_os;
      for (size_t i = 0; i < n; ++i) {
        rows.push_back(
            {wv, rs, s_grid[i],
             (e_x * fx[i] + e_ss * fss[i] + e_os * fos[i]) / denom});
      }
    }
  }
  return rows;
}

std::string FxcCsv(std::span<const FxcRow> rows) {
  std::string out = "w,rs,s,Fxc\n";
  char buf[128];
  for (const FxcRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", r.w, r.rs,
                  r.s, r.fxc);
    out += buf;
  }
  return out;
}

}  // namespace xcevo
