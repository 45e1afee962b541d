#pragma once

#include <optional>
#include <utility>

#include "dosebma/cohort.hpp"
#include "dosebma/risk_model.hpp"

namespace dosebma {

struct FreqFitResult {
  RiskParams params;       // alpha_hat and beta_hat at the optimum
  double beta_hat = 0.0;   // ERR per Gy
  double ci_low = 0.0;     // 95% profile-likelihood bounds
  double ci_high = 0.0;
  bool ci_unbounded = false;  // no finite upper profile crossing
  bool converged = false;
  bool at_boundary = false;  // beta_hat = 0 KKT solution
  bool separation = false;   // likelihood increasing without bound
  int n_iter = 0;
  double loglik = 0.0;
  double wald_se = 0.0;  // diagnostic only; profile CI is the reported interval
};

// Constrained maximum likelihood over (alpha, beta >= 0): BFGS with projected
// backtracking, exact-Hessian polish for the tight convergence thresholds
// (gradient norm < 1e-8, step < 1e-10). Fills ci_low/ci_high with the 95%
// profile interval. Default init: alpha = 0, beta = 1.
FreqFitResult fit_ml(const Cohort& cohort, const DoseVector& dose,
                     const std::optional<RiskParams>& init = std::nullopt);

// Bounds where 2*[l(beta_hat) - l_profile(beta)] equals the chi-square(1)
// quantile, alpha re-maximized at each beta; lower bound clipped at 0. The
// second member is +infinity when no finite upper crossing exists.
std::pair<double, double> profile_ci(const Cohort& cohort, const DoseVector& dose,
                                     const FreqFitResult& fit, double level = 0.95);

}  // namespace dosebma
