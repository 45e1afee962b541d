#pragma once

#include <span>
#include <vector>

#include "dosebma/cohort.hpp"

namespace dosebma {

// Linear excess-relative-risk logistic model:
//   p = logistic(sum_j alpha_j X_j + ln(1 + beta * D))
struct RiskParams {
  std::vector<double> alpha;  // length J
  double beta = 0.0;          // ERR per Gy, >= 0
};

double disease_probability(const RiskParams& params,
                           std::span<const double> covariates, double dose);

double log_likelihood(const RiskParams& params, const Cohort& cohort,
                      const DoseVector& dose);

// d/dalpha_j = sum_i (y_i - p_i) X_ij; d/dbeta = sum_i (y_i - p_i) D_i/(1+beta D_i).
// Layout: [alpha_0..alpha_{J-1}, beta].
std::vector<double> log_likelihood_gradient(const RiskParams& params,
                                            const Cohort& cohort,
                                            const DoseVector& dose);

// Flattened per-subject arrays for the hot paths (fitter, samplers). Build
// once per fit/chain; requires complete disease status.
struct LikelihoodData {
  size_t n = 0;
  size_t j = 0;
  std::vector<double> x;  // n * j, row-major
  std::vector<int> y;
  std::vector<double> dose;

  static LikelihoodData from(const Cohort& cohort, std::span<const double> dose);
  // Dose is bound later (per model); covariates and outcomes only.
  static LikelihoodData from_cohort(const Cohort& cohort);

  double log_likelihood(const RiskParams& params) const;
  double log_likelihood(const RiskParams& params, std::span<const double> dose_override) const;
  void gradient(const RiskParams& params, std::span<double> out) const;
  // (J+1)x(J+1) observed-information-style Hessian of the log-likelihood,
  // row-major.
  void hessian(const RiskParams& params, std::span<double> out) const;
};

// Excess-odds-ratio model with effect modifiers:
//   odds = exp(sum alpha_i X_i) * (1 + sum_j beta_j Y_j * exp(sum_k gamma_k Z_k))
struct EorParams {
  std::vector<double> alpha;
  std::vector<double> beta;       // per dose component
  std::vector<double> gamma_mod;  // effect modifiers
};

// Returns EOR = sum_j beta_j Y_j * exp(sum_k gamma_k Z_k); throws when the
// implied odds ratio 1 + EOR is not positive.
double excess_odds_ratio(const EorParams& params,
                         std::span<const double> dose_components,
                         std::span<const double> modifiers);

}  // namespace dosebma
