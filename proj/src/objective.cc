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

#include "xcevo/objective.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xcevo {

ObjectiveContext::ObjectiveContext(std::shared_ptr<const Dataset> dataset,
                                   std::shared_ptr<const FeatureCache> cache,
                                   Split split, double penalty)
    : dataset_(std::move(dataset)),
      cache_(std::move(cache)),
      split_(split),
      penalty_(penalty) {
  if (cache_->size() != dataset_->systems.size()) {
    throw std::invalid_argument("ObjectiveContext: cache does not match dataset");
  }
  std::vector<bool> used(dataset_->systems.size(), false);
  for (size_t r = 0; r < dataset_->records.size(); ++r) {
    if (dataset_->records[r].split != split) continue;
    records_.push_back(r);
    for (const RecordTerm& t : dataset_->records[r].terms) {
      used[dataset_->SystemIndex(t.system_id)] = true;
    }
  }
  if (records_.empty()) {
    throw DatasetError(DatasetError::Kind::kConfig,
                       "split '" + std::string(SplitName(split)) +
                           "' has no records");
  }
  std::vector<size_t> slot_of(used.size(), 0);
  for (size_t s = 0; s < used.size(); ++s) {
    if (!used[s]) continue;
    slot_of[s] = systems_.size();
    systems_.push_back(s);
  }
  for (size_t r : records_) {
    std::vector<size_t> slots;
    for (const RecordTerm& t : dataset_->records[r].terms) {
      slots.push_back(slot_of[dataset_->SystemIndex(t.system_id)]);
    }
    slots_.push_back(std::move(slots));
  }

  auto append = [](SystemFeatures& dst, const SystemFeatures& src) {
    auto cat = [](std::vector<double>& d, const std::vector<double>& v) {
      d.insert(d.end(), v.begin(), v.end());
    };
    cat(dst.x2_a, src.x2_a);
    cat(dst.x2_b, src.x2_b);
    cat(dst.w_a, src.w_a);
    cat(dst.w_b, src.w_b);
    cat(dst.x2_ave, src.x2_ave);
    cat(dst.w_ave, src.w_ave);
    cat(dst.e_x_a, src.e_x_a);
    cat(dst.e_x_b, src.e_x_b);
    cat(dst.e_css_a, src.e_css_a);
    cat(dst.e_css_b, src.e_css_b);
    cat(dst.e_cos, src.e_cos);
    cat(dst.rho_a, src.rho_a);
    cat(dst.rho_b, src.rho_b);
  };
  for (size_t s : systems_) {
    const SystemFeatures& f = cache_->system(s);
    offsets_.push_back(packed_.size());
    beta_offsets_.push_back(packed_beta_.size());
    closed_.push_back(f.closed_shell);
    append(packed_, f);
    if (!f.closed_shell) append(packed_beta_, f);
  }
  offsets_.push_back(packed_.size());
}

void SplitExcSl(XcModel& model, const ObjectiveContext& ctx,
                ExcScratch& scratch, std::span<double> exc) {
  const SystemFeatures& s = ctx.packed();
  const SystemFeatures& sb = ctx.packed_beta();
  const size_t n = s.size();
  const size_t nb = sb.size();
  if (exc.size() != ctx.systems().size()) {
    throw std::invalid_argument("SplitExcSl: output size mismatch");
  }
  const FactorInputs in_a{s.x2_a, s.w_a, s.rho_a, s.rho_b, s.x2_a, s.x2_b};
  const FactorInputs in_b{sb.x2_b, sb.w_b,  sb.rho_a,
                          sb.rho_b, sb.x2_a, sb.x2_b};
  const FactorInputs in_ave{s.x2_ave, s.w_ave, s.rho_a,
                            s.rho_b,  s.x2_a,  s.x2_b};
  const bool zero_x = model.IsZero(kFactorX);
  const bool zero_ss = model.IsZero(kFactorCss);
  const bool zero_os = model.IsZero(kFactorCos);
  auto eval_pair = [&](size_t f, std::vector<double>& a,
                       std::vector<double>& b) {
    a.resize(n);
    model.Evaluate(f, in_a, a);
    b.resize(nb);
    if (nb > 0) model.Evaluate(f, in_b, b);
  };
  if (!zero_x) eval_pair(kFactorX, scratch.fx_a, scratch.fx_b);
  if (!zero_ss) eval_pair(kFactorCss, scratch.fss_a, scratch.fss_b);
  if (!zero_os) {
    scratch.fos.resize(n);
    model.Evaluate(kFactorCos, in_ave, scratch.fos);
  }

  for (size_t k = 0; k < exc.size(); ++k) {
    const size_t begin = ctx.offset(k);
    const size_t len = ctx.offset(k + 1) - begin;
    // Same accumulation as ExcSl on the system alone.
    const double* exa = s.e_x_a.data() + begin;
    const double* exb = s.e_x_b.data() + begin;
    const double* esa = s.e_css_a.data() + begin;
    const double* esb = s.e_css_b.data() + begin;
    const double* eos = s.e_cos.data() + begin;
    const double *fxa = nullptr, *fxb = nullptr, *fsa = nullptr,
                 *fsb = nullptr, *fos = nullptr;
    const size_t bb = ctx.beta_offset(k);
    if (!zero_x) {
      fxa = scratch.fx_a.data() + begin;
      fxb = ctx.closed_shell(k) ? fxa : scratch.fx_b.data() + bb;
    }
    if (!zero_ss) {
      fsa = scratch.fss_a.data() + begin;
      fsb = ctx.closed_shell(k) ? fsa : scratch.fss_b.data() + bb;
    }
    if (!zero_os) fos = scratch.fos.data() + begin;
    double total = 0.0;
    for (size_t g = 0; g < len; ++g) {
      const double x = zero_x ? 0.0 : exa[g] * fxa[g] + exb[g] * fxb[g];
      const double ss = zero_ss ? 0.0 : esa[g] * fsa[g] + esb[g] * fsb[g];
      const double os = zero_os ? 0.0 : eos[g] * fos[g];
      total += (x + ss) + os;
    }
    exc[k] = total;
  }
}

double TotalEnergy(const FunctionalForm& form, std::span<const double> params,
                   const SystemGrid& system, const SystemFeatures& features) {
  ProgramModel model(form, params);
  ExcScratch scratch;
  return system.e_base + ExcSl(model, features, scratch);
}

double WrmsdFromEnergies(const ObjectiveContext& ctx,
                         std::span<const double> energies) {
  const auto& records = ctx.records();
  double sum = 0.0;
  for (size_t k = 0; k < records.size(); ++k) {
    const PropertyRecord& rec = ctx.dataset().records[records[k]];
    const double e = RecordEnergy(rec, ctx.term_slots(k), energies);
    if (!std::isfinite(e)) return ctx.penalty();
    const double err = e - rec.e_ref;
    sum += rec.weight * (err * err);
  }
  const double j = std::sqrt(sum / static_cast<double>(records.size()));
  return std::isfinite(j) ? j : ctx.penalty();
}

double Wrmsd(XcModel& model, const ObjectiveContext& ctx) {
  const auto& systems = ctx.systems();
  std::vector<double> energies(systems.size());
  ExcScratch scratch;
  SplitExcSl(model, ctx, scratch, energies);
  for (size_t k = 0; k < systems.size(); ++k) {
    energies[k] += ctx.dataset().systems[systems[k]].e_base;
  }
  ctx.AddPointVisits(ctx.packed().size());
  return WrmsdFromEnergies(ctx, energies);
}

double Wrmsd(const FunctionalForm& form, std::span<const double> params,
             const ObjectiveContext& ctx) {
  return WrmsdPopulation(form, params, 1, ctx)[0];
}

std::vector<double> WrmsdPopulation(const FunctionalForm& form,
                                    std::span<const double> params_batch,
                                    size_t population,
                                    const ObjectiveContext& ctx) {
  const size_t n = form.num_params();
  if (params_batch.size() != population * n) {
    throw std::invalid_argument("WrmsdPopulation: parameter dimension mismatch");
  }
  if (!CacheSupports(ctx.cache(), form)) {
    throw std::invalid_argument(
        "WrmsdPopulation: form reads density features the cache lacks");
  }
  const auto& systems = ctx.systems();
  std::vector<double> energies(systems.size());
  ProgramModel model(form, params_batch.subspan(0, n));
  ExcScratch scratch;
  std::vector<double> out(population);
  for (size_t p = 0; p < population; ++p) {
    model.set_params(params_batch.subspan(p * n, n));
    SplitExcSl(model, ctx, scratch, energies);
    for (size_t k = 0; k < systems.size(); ++k) {
      energies[k] += ctx.dataset().systems[systems[k]].e_base;
    }
    out[p] = WrmsdFromEnergies(ctx, energies);
  }
  ctx.AddPointVisits(population * ctx.packed().size());
  return out;
}

double Fitness(const FunctionalForm& form, std::span<const double> params,
               const ObjectiveContext& val_ctx) {
  return -Wrmsd(form, params, val_ctx);
}

bool CacheSupports(const FeatureCache& cache, const FunctionalForm& form) {
  if (cache.with_densities()) return true;
  for (size_t f = 0; f < kNumFactors; ++f) {
    if (form.factor(f).schema().has_reserved_density()) return false;
  }
  return true;
}

}  // namespace xcevo
