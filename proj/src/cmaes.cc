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

#include "xcevo/cmaes.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "xcevo/random.h"

namespace xcevo {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool Failed(double v, double threshold) {
  return !std::isfinite(v) || v >= threshold;
}

// One restart. Returns false when it aborted.
bool RunRestart(const BatchObjective& f, const CmaesConfig& cfg, Rng& rng,
                CmaesResult& result) {
  const size_t n = cfg.dimension;
  const size_t lambda = cfg.EffectiveLambda();
  const size_t mu = lambda / 2;
  const double nd = static_cast<double>(n);

  VectorXd weights(mu);
  for (size_t i = 0; i < mu; ++i) {
    weights[i] = std::log(static_cast<double>(mu) + 0.5) -
                 std::log(static_cast<double>(i) + 1.0);
  }
  weights /= weights.sum();
  const double mueff = 1.0 / weights.squaredNorm();
  const double cs = (mueff + 2.0) / (nd + mueff + 5.0);
  const double ds =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (nd + 1.0)) - 1.0) +
      cs;
  const double cc = (4.0 + mueff / nd) / (nd + 4.0 + 2.0 * mueff / nd);
  const double c1 = 2.0 / ((nd + 1.3) * (nd + 1.3) + mueff);
  const double cmu =
      std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) /
                             ((nd + 2.0) * (nd + 2.0) + mueff));
  const double chi_n = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) +
                                        1.0 / (21.0 * nd * nd));

  VectorXd mean(n);
  for (size_t i = 0; i < n; ++i) {
    mean[i] = std::clamp(StandardNormal(rng), cfg.lower, cfg.upper);
  }
  double sigma = cfg.sigma0;
  MatrixXd C = MatrixXd::Identity(n, n);
  MatrixXd B = MatrixXd::Identity(n, n);
  VectorXd D = VectorXd::Ones(n);
  VectorXd ps = VectorXd::Zero(n);
  VectorXd pc = VectorXd::Zero(n);

  std::vector<double> candidates(lambda * n);
  std::vector<double> values(lambda);
  MatrixXd ys(n, lambda);
  std::vector<size_t> order(lambda);
  std::vector<double> gen_best_history;
  size_t used = 0;
  double restart_best = std::numeric_limits<double>::infinity();

  for (size_t gen = 0;; ++gen) {
    // Never overrun the budget with a partial generation; the first one
    // always runs.
    if (gen > 0 && used + lambda > cfg.max_evaluations) break;
    for (size_t k = 0; k < lambda; ++k) {
      VectorXd z(n);
      for (size_t i = 0; i < n; ++i) z[i] = StandardNormal(rng);
      VectorXd x = mean + sigma * (B * D.cwiseProduct(z));
      for (size_t i = 0; i < n; ++i) {
        x[i] = std::clamp(x[i], cfg.lower, cfg.upper);
        candidates[k * n + i] = x[i];
      }
      ys.col(k) = (x - mean) / sigma;
    }
    f(candidates, lambda, values);
    used += lambda;
    result.evaluations += lambda;

    bool all_failed = true;
    for (size_t k = 0; k < lambda; ++k) {
      if (!Failed(values[k], cfg.failure_threshold)) all_failed = false;
      if (std::isnan(values[k])) {
        values[k] = std::numeric_limits<double>::infinity();
      }
    }
    if (all_failed) return false;

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return values[a] < values[b];
    });
    const double gen_best = values[order[0]];
    if (gen_best < result.best_value) {
      result.best_value = gen_best;
      result.best_x.assign(candidates.begin() + order[0] * n,
                           candidates.begin() + (order[0] + 1) * n);
    }
    restart_best = std::min(restart_best, gen_best);
    result.trace.push_back(result.best_value);
    gen_best_history.push_back(gen_best);

    // Recombination and adaptation.
    VectorXd yw = VectorXd::Zero(n);
    for (size_t i = 0; i < mu; ++i) yw += weights[i] * ys.col(order[i]);
    mean += sigma * yw;
    const VectorXd inv_sqrt_c_yw =
        B * (B.transpose() * yw).cwiseQuotient(D);
    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * inv_sqrt_c_yw;
    const double ps_norm = ps.norm();
    const double gens = static_cast<double>(gen + 1);
    const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gens)) <
                      (1.4 + 2.0 / (nd + 1.0)) * chi_n;
    pc = (1.0 - cc) * pc +
         (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * yw;
    MatrixXd rank_mu = MatrixXd::Zero(n, n);
    for (size_t i = 0; i < mu; ++i) {
      const VectorXd& y = ys.col(order[i]);
      rank_mu += weights[i] * y * y.transpose();
    }
    C = (1.0 - c1 - cmu) * C +
        c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) +
        cmu * rank_mu;
    sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1.0));

    C = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
    VectorXd ev = eig.eigenvalues();
    B = eig.eigenvectors();
    // The overall scale of C drifts against sigma, so the positivity floor
    // is relative to the largest eigenvalue.
    const double floor = 1e-14 * std::max(ev.maxCoeff(), 1e-300);
    bool repaired = false;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (!(ev[i] >= floor)) {
        ev[i] = floor;
        repaired = true;
      }
    }
    if (repaired) C = B * ev.asDiagonal() * B.transpose();
    D = ev.cwiseSqrt();

    // Termination.
    if (result.best_value <= cfg.stop_value) break;
    if (used >= cfg.max_evaluations) break;
    if (gen_best_history.size() >= cfg.tol_fun_window) {
      const auto begin = gen_best_history.end() -
                         static_cast<std::ptrdiff_t>(cfg.tol_fun_window);
      const auto [lo, hi] = std::minmax_element(begin, gen_best_history.end());
      const double spread_hist = *hi - *lo;
      const double spread_gen = values[order[lambda - 1]] - values[order[0]];
      if (spread_hist < cfg.tol_fun && spread_gen < cfg.tol_fun) break;
    }
    const double max_sd = sigma * C.diagonal().cwiseSqrt().maxCoeff();
    if (max_sd < cfg.tol_x && sigma * pc.norm() < cfg.tol_x) break;
    const double cond = (D.maxCoeff() * D.maxCoeff()) /
                        (D.minCoeff() * D.minCoeff());
    if (!(cond <= cfg.max_condition)) break;
    if (!std::isfinite(sigma) || sigma > 1e6 * (cfg.upper - cfg.lower)) break;
  }
  return true;
}

}  // namespace

size_t CmaesConfig::EffectiveLambda() const {
  if (lambda >= 2) return lambda;
  return 4 + static_cast<size_t>(
                 std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

CmaesResult Minimize(const BatchObjective& f, const CmaesConfig& cfg) {
  if (!(cfg.lower < cfg.upper)) {
    throw std::invalid_argument("Minimize: lower bound must be below upper");
  }
  if (cfg.lambda == 1) throw std::invalid_argument("Minimize: lambda < 2");
  CmaesResult result;
  if (cfg.dimension == 0) {
    double v = 0.0;
    f({}, 1, std::span<double>(&v, 1));
    result.best_value = v;
    result.evaluations = 1;
    result.restarts_run = 1;
    result.trace.push_back(v);
    return result;
  }
  for (size_t r = 0; r < std::max<size_t>(cfg.restarts, 1); ++r) {
    Rng rng(MixSeed(cfg.seed, r));
    ++result.restarts_run;
    if (!RunRestart(f, cfg, rng, result)) ++result.restarts_aborted;
    if (result.best_value <= cfg.stop_value) break;
  }
  for (double x : result.best_x) {
    if (x < cfg.lower || x > cfg.upper) result.all_in_bounds = false;
  }
  return result;
}

CmaesResult Minimize(const std::function<double(std::span<const double>)>& f,
                     const CmaesConfig& cfg) {
  const size_t n = cfg.dimension;
  return Minimize(
      [&](std::span<const double> xs, size_t count, std::span<double> out) {
        for (size_t k = 0; k < count; ++k) out[k] = f(xs.subspan(k * n, n));
      },
      cfg);
}

FitResult FitFunctional(const FunctionalForm& form,
                        const ObjectiveContext& train_ctx,
                        const CmaesConfig& base) {
  const size_t full = form.num_params();
  const std::vector<bool> live = LiveParameters(form);
  std::vector<size_t> slots;
  for (size_t i = 0; i < full; ++i) {
    if (live[i]) slots.push_back(i);
  }
  CmaesConfig cfg = base;
  cfg.dimension = slots.size();
  cfg.failure_threshold = std::min(cfg.failure_threshold, train_ctx.penalty());

  std::vector<double> expanded;
  const BatchObjective objective = [&](std::span<const double> xs,
                                       size_t count, std::span<double> out) {
    expanded.assign(count * full, 0.0);
    for (size_t k = 0; k < count; ++k) {
      for (size_t j = 0; j < slots.size(); ++j) {
        expanded[k * full + slots[j]] = xs[k * slots.size() + j];
      }
    }
    const std::vector<double> v =
        WrmsdPopulation(form, expanded, count, train_ctx);
    std::copy(v.begin(), v.end(), out.begin());
  };
  const CmaesResult r = Minimize(objective, cfg);

  FitResult fit;
  fit.evaluations = r.evaluations;
  fit.params.assign(full, 0.0);
  if (r.best_x.size() != slots.size() ||
      Failed(r.best_value, train_ctx.penalty())) {
    fit.failed = true;
    fit.j_train = train_ctx.penalty();
    return fit;
  }
  for (size_t j = 0; j < slots.size(); ++j) fit.params[slots[j]] = r.best_x[j];
  fit.j_train = r.best_value;
  return fit;
}

}  // namespace xcevo
