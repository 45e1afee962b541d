#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dosebma/risk_model.hpp"
#include "dosebma/rng.hpp"

using namespace dosebma;

namespace {

Cohort random_cohort(size_t n, size_t j, uint64_t seed, bool with_disease = true) {
  Cohort c;
  for (size_t cj = 0; cj < j; ++cj) c.covariate_names.push_back("x" + std::to_string(cj));
  auto rng = RngStream(seed);
  for (size_t i = 0; i < n; ++i) {
    Subject s;
    s.id = "s" + std::to_string(i + 1);
    s.subgroup = "g";
    for (size_t cj = 0; cj < j; ++cj) s.covariates.push_back(rng.normal());
    if (with_disease) s.disease = rng.uniform() < 0.5 ? 1 : 0;
    c.subjects.push_back(s);
  }
  return c;
}

DoseVector random_doses(size_t n, uint64_t seed) {
  DoseVector d;
  auto rng = RngStream(seed);
  for (size_t i = 0; i < n; ++i) d.values.push_back(rng.lognormal(0.3, 2.0));
  d.label = "test";
  return d;
}

}  // namespace

TEST_CASE("disease probability basics") {
  RiskParams p{{0.0}, 0.0};
  const std::vector<double> x{1.0};
  CHECK(disease_probability(p, x, 0.7) == doctest::Approx(0.5));

  // Zero dose: logistic of the baseline alone, any beta.
  RiskParams p2{{-1.2}, 55.0};
  CHECK(disease_probability(p2, x, 0.0) ==
        doctest::Approx(1.0 / (1.0 + std::exp(1.2))));

  // alpha.x = -3, beta = 12, D = 0.1 -> e^-3 * 2.2 / (1 + e^-3 * 2.2)
  RiskParams p3{{-3.0}, 12.0};
  const double expected = std::exp(-3.0) * 2.2 / (1.0 + std::exp(-3.0) * 2.2);
  CHECK(disease_probability(p3, x, 0.1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(disease_probability(p3, x, 0.1) == doctest::Approx(0.09872).epsilon(1e-4));
}

TEST_CASE("disease probability is monotone in dose and slope") {
  RiskParams p{{0.3}, 4.0};
  const std::vector<double> x{1.0};
  double last = 0.0;
  for (double d = 0.0; d < 2.0; d += 0.1) {
    const double v = disease_probability(p, x, d);
    CHECK(v > last);
    last = v;
  }
  double last_b = 0.0;
  for (double b = 0.0; b < 30.0; b += 1.0) {
    RiskParams pb{{0.3}, b};
    const double v = disease_probability(pb, x, 0.5);
    CHECK(v >= last_b);
    last_b = v;
  }
}

TEST_CASE("beta-dose rescaling invariance") {
  RiskParams p{{0.2, -0.4}, 8.0};
  const std::vector<double> x{1.0, 0.5};
  const double c = 37.5;
  RiskParams scaled{p.alpha, p.beta / c};
  CHECK(disease_probability(p, x, 0.31) ==
        doctest::Approx(disease_probability(scaled, x, 0.31 * c)).epsilon(1e-13));
}

TEST_CASE("log likelihood hand values") {
  // Single subject at p = 0.5.
  Cohort c = random_cohort(1, 1, 21);
  c.subjects[0].covariates = {0.0};
  c.subjects[0].disease = 1;
  DoseVector d{{0.0}, "zero"};
  RiskParams p{{0.7}, 3.0};
  p.alpha = {0.0};
  p.beta = 0.0;
  CHECK(log_likelihood(p, c, d) == doctest::Approx(std::log(0.5)));

  // Two subjects: (y=1, p=0.9), (y=0, p=0.2) -> ln 0.9 + ln 0.8.
  Cohort c2 = random_cohort(2, 1, 22);
  c2.subjects[0].covariates = {std::log(9.0)};  // logistic = 0.9
  c2.subjects[0].disease = 1;
  c2.subjects[1].covariates = {std::log(0.25)};  // logistic = 0.2
  c2.subjects[1].disease = 0;
  DoseVector d2{{0.0, 0.0}, "zero"};
  RiskParams p2{{1.0}, 0.0};
  CHECK(log_likelihood(p2, c2, d2) ==
        doctest::Approx(std::log(0.9) + std::log(0.8)).epsilon(1e-12));
  CHECK(log_likelihood(p2, c2, d2) == doctest::Approx(-0.3285).epsilon(1e-3));
}

TEST_CASE("log likelihood is permutation invariant") {
  Cohort c = random_cohort(25, 2, 31);
  DoseVector d = random_doses(25, 32);
  RiskParams p{{0.4, -0.2}, 5.0};
  const double before = log_likelihood(p, c, d);

  // Rotate subjects and doses together.
  std::rotate(c.subjects.begin(), c.subjects.begin() + 7, c.subjects.end());
  std::rotate(d.values.begin(), d.values.begin() + 7, d.values.end());
  CHECK(log_likelihood(p, c, d) == doctest::Approx(before).epsilon(1e-13));
}

TEST_CASE("missing disease status is an error") {
  Cohort c = random_cohort(5, 2, 41);
  c.subjects[2].disease.reset();
  DoseVector d = random_doses(5, 42);
  RiskParams p{{0.0, 0.0}, 1.0};
  CHECK_THROWS_AS(log_likelihood(p, c, d), std::invalid_argument);
}

TEST_CASE("gradient zero-dose beta component") {
  Cohort c = random_cohort(10, 2, 51);
  DoseVector d{std::vector<double>(10, 0.0), "zero"};
  RiskParams p{{0.3, 0.1}, 2.0};
  const auto g = log_likelihood_gradient(p, c, d);
  CHECK(g.back() == 0.0);
}

TEST_CASE("gradient matches central finite differences") {
  auto rng = RngStream(61);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 30 + rng.uniform_int(40);
    Cohort c = random_cohort(n, 3, 1000 + trial);
    DoseVector d = random_doses(n, 2000 + trial);
    RiskParams p;
    p.alpha = {rng.normal(), rng.normal(), rng.normal()};
    p.beta = std::abs(rng.normal()) * 4.0 + 0.05;

    const auto g = log_likelihood_gradient(p, c, d);
    for (size_t idx = 0; idx <= 3; ++idx) {
      const double scale = idx < 3 ? std::max(1.0, std::abs(p.alpha[idx]))
                                   : std::max(1.0, p.beta);
      const double h = 1e-6 * scale;
      RiskParams lo = p, hi = p;
      if (idx < 3) {
        lo.alpha[idx] -= h;
        hi.alpha[idx] += h;
      } else {
        lo.beta -= h;
        hi.beta += h;
      }
      const double fd =
          (log_likelihood(hi, c, d) - log_likelihood(lo, c, d)) / (2.0 * h);
      // Relative error floored at unit scale so near-zero components compare
      // against the finite-difference noise floor instead of blowing up.
      const double rel = std::abs(fd - g[idx]) / std::max(1.0, std::abs(g[idx]));
      CHECK(rel < 1e-6);
    }
  }
}

TEST_CASE("log likelihood is concave in alpha") {
  // Quadratic form of the alpha block of the numeric Hessian is negative at
  // random points.
  auto rng = RngStream(71);
  Cohort c = random_cohort(60, 3, 72);
  DoseVector d = random_doses(60, 73);
  for (int trial = 0; trial < 20; ++trial) {
    RiskParams p;
    p.alpha = {rng.normal(), rng.normal(), rng.normal()};
    p.beta = std::abs(rng.normal()) + 0.1;
    std::vector<double> dir{rng.normal(), rng.normal(), rng.normal()};
    const double h = 1e-4;
    RiskParams lo = p, hi = p;
    for (size_t j = 0; j < 3; ++j) {
      lo.alpha[j] -= h * dir[j];
      hi.alpha[j] += h * dir[j];
    }
    const double second = (log_likelihood(hi, c, d) -
                           2.0 * log_likelihood(p, c, d) +
                           log_likelihood(lo, c, d)) /
                          (h * h);
    CHECK(second < 0.0);
  }
}

TEST_CASE("excess odds ratio") {
  EorParams p;
  p.alpha = {0.5};
  p.beta = {2.0, 4.0};
  p.gamma_mod = {0.3};

  // All doses zero: EOR 0, OR 1.
  CHECK(excess_odds_ratio(p, std::vector<double>{0.0, 0.0},
                          std::vector<double>{1.0}) == 0.0);

  // No modification: plain sum of beta_j Y_j.
  EorParams nomod = p;
  nomod.gamma_mod = {0.0};
  CHECK(excess_odds_ratio(nomod, std::vector<double>{0.5, 0.25},
                          std::vector<double>{1.0}) ==
        doctest::Approx(2.0 * 0.5 + 4.0 * 0.25));

  // Sex modifier coded -1/+1: male-to-female EOR ratio is exp(-2 gamma).
  // gamma chosen so the ratio matches ~28.5 (9.99 vs 0.35).
  const double target_ratio = 9.99 / 0.35;
  const double gamma = -0.5 * std::log(target_ratio);
  EorParams sex;
  sex.alpha = {0.0};
  sex.beta = {1.0};
  sex.gamma_mod = {gamma};
  const double male =
      excess_odds_ratio(sex, std::vector<double>{1.0}, std::vector<double>{-1.0});
  const double female =
      excess_odds_ratio(sex, std::vector<double>{1.0}, std::vector<double>{1.0});
  CHECK(male / female == doctest::Approx(target_ratio).epsilon(1e-9));
  CHECK(male / female == doctest::Approx(std::exp(-2.0 * gamma)).epsilon(1e-12));

  // OR <= 0 is a domain error.
  EorParams bad;
  bad.alpha = {0.0};
  bad.beta = {-4.0};
  bad.gamma_mod = {};
  CHECK_THROWS_AS(
      excess_odds_ratio(bad, std::vector<double>{1.0}, std::vector<double>{}),
      std::domain_error);
}
