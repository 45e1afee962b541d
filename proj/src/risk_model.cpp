#include "dosebma/risk_model.hpp"

#include <cmath>
#include <stdexcept>

#include "dosebma/numeric.hpp"

namespace dosebma {

namespace {

double linear_predictor(const RiskParams& params, std::span<const double> covariates,
                        double dose) {
  if (covariates.size() != params.alpha.size())
    throw std::invalid_argument("covariate/alpha length mismatch");
  const double rr = 1.0 + params.beta * dose;
  if (!(rr > 0.0))
    throw std::domain_error("relative risk 1 + beta*dose is not positive");
  double eta = std::log(rr);
  for (size_t j = 0; j < covariates.size(); ++j)
    eta += params.alpha[j] * covariates[j];
  return eta;
}

}  // namespace

double disease_probability(const RiskParams& params,
                           std::span<const double> covariates, double dose) {
  return logistic(linear_predictor(params, covariates, dose));
}

LikelihoodData LikelihoodData::from_cohort(const Cohort& cohort) {
  LikelihoodData d;
  d.n = cohort.size();
  d.j = cohort.n_covariates();
  d.x.reserve(d.n * d.j);
  d.y.reserve(d.n);
  for (const auto& s : cohort.subjects) {
    if (!s.disease)
      throw std::invalid_argument("subject " + s.id + " has no disease status");
    if (s.covariates.size() != d.j)
      throw std::invalid_argument("covariate length mismatch for " + s.id);
    d.x.insert(d.x.end(), s.covariates.begin(), s.covariates.end());
    d.y.push_back(*s.disease);
  }
  return d;
}

LikelihoodData LikelihoodData::from(const Cohort& cohort, std::span<const double> dose) {
  LikelihoodData d = from_cohort(cohort);
  if (dose.size() != d.n)
    throw std::invalid_argument("dose vector length does not match cohort size");
  d.dose.assign(dose.begin(), dose.end());
  return d;
}

double LikelihoodData::log_likelihood(const RiskParams& params) const {
  return log_likelihood(params, dose);
}

double LikelihoodData::log_likelihood(const RiskParams& params,
                                      std::span<const double> dose_override) const {
  if (params.alpha.size() != j)
    throw std::invalid_argument("alpha length mismatch");
  // Neumaier-compensated accumulation in fixed subject order.
  double sum = 0.0, comp = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double rr = 1.0 + params.beta * dose_override[i];
    if (!(rr > 0.0))
      throw std::domain_error("relative risk 1 + beta*dose is not positive");
    double eta = std::log(rr);
    const double* xi = x.data() + i * j;
    for (size_t c = 0; c < j; ++c) eta += params.alpha[c] * xi[c];
    // y*eta - ln(1 + e^eta), stable over the full eta range
    const double term = static_cast<double>(y[i]) * eta - softplus(eta);
    const double t = sum + term;
    if (std::abs(sum) >= std::abs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return sum + comp;
}

void LikelihoodData::gradient(const RiskParams& params, std::span<double> out) const {
  if (out.size() != j + 1) throw std::invalid_argument("gradient output size");
  std::fill(out.begin(), out.end(), 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double di = dose[i];
    const double rr = 1.0 + params.beta * di;
    double eta = std::log(rr);
    const double* xi = x.data() + i * j;
    for (size_t c = 0; c < j; ++c) eta += params.alpha[c] * xi[c];
    const double resid = static_cast<double>(y[i]) - logistic(eta);
    for (size_t c = 0; c < j; ++c) out[c] += resid * xi[c];
    out[j] += resid * di / rr;
  }
}

void LikelihoodData::hessian(const RiskParams& params, std::span<double> out) const {
  const size_t p = j + 1;
  if (out.size() != p * p) throw std::invalid_argument("hessian output size");
  std::fill(out.begin(), out.end(), 0.0);
  for (size_t i = 0; i < n; ++i) {
    const double di = dose[i];
    const double rr = 1.0 + params.beta * di;
    const double g = di / rr;  // d eta / d beta
    double eta = std::log(rr);
    const double* xi = x.data() + i * j;
    for (size_t c = 0; c < j; ++c) eta += params.alpha[c] * xi[c];
    const double pi = logistic(eta);
    const double w = pi * (1.0 - pi);
    const double resid = static_cast<double>(y[i]) - pi;
    for (size_t a = 0; a < j; ++a) {
      for (size_t b = 0; b < j; ++b) out[a * p + b] -= w * xi[a] * xi[b];
      out[a * p + j] -= w * xi[a] * g;
      out[j * p + a] -= w * xi[a] * g;
    }
    // d2 eta / d beta2 = -g^2 contributes resid * (-g^2)
    out[j * p + j] += -w * g * g - resid * g * g;
  }
}

double log_likelihood(const RiskParams& params, const Cohort& cohort,
                      const DoseVector& dose) {
  const auto data = LikelihoodData::from(cohort, dose.values);
  return data.log_likelihood(params);
}

std::vector<double> log_likelihood_gradient(const RiskParams& params,
                                            const Cohort& cohort,
                                            const DoseVector& dose) {
  const auto data = LikelihoodData::from(cohort, dose.values);
  std::vector<double> g(data.j + 1);
  data.gradient(params, g);
  return g;
}

double excess_odds_ratio(const EorParams& params,
                         std::span<const double> dose_components,
                         std::span<const double> modifiers) {
  if (dose_components.size() != params.beta.size())
    throw std::invalid_argument("dose component/beta length mismatch");
  if (modifiers.size() != params.gamma_mod.size())
    throw std::invalid_argument("modifier/gamma length mismatch");
  double mod = 0.0;
  for (size_t k = 0; k < modifiers.size(); ++k)
    mod += params.gamma_mod[k] * modifiers[k];
  double dose_term = 0.0;
  for (size_t jj = 0; jj < dose_components.size(); ++jj)
    dose_term += params.beta[jj] * dose_components[jj];
  const double eor = dose_term * std::exp(mod);
  if (!(1.0 + eor > 0.0))
    throw std::domain_error("odds ratio 1 + EOR is not positive");
  return eor;
}

}  // namespace dosebma
