#include <doctest.h>

#include <cmath>
#include <vector>

#include "dosebma/bma_samc.hpp"
#include "dosebma/numeric.hpp"
#include "dosebma/rng.hpp"
#include "grid_oracle.hpp"

using namespace dosebma;

namespace {

struct Toy {
  Cohort cohort;
  DoseMatrix matrix;
};

// Small single-covariate problem with K columns; column `true_col` generates
// the outcomes, the others get multiplicative noise of the given GSD. Half
// the cohort is unexposed (dose 0): with cases and controls on both sides of
// the exposure split, the likelihood decays fast in beta and the posterior
// stays well concentrated even at small n, which grid quadrature needs.
Toy make_toy(size_t n, size_t k, double alpha, double beta, uint64_t seed,
             double noise_gsd = 1.6, size_t true_col = 0) {
  Toy t;
  t.cohort.covariate_names = {"one"};
  auto rng = RngStream(seed);
  std::vector<double> true_dose(n);
  for (size_t i = 0; i < n; ++i)
    true_dose[i] = i % 2 == 0 ? 0.0 : rng.lognormal(0.8, 1.3);

  t.matrix.n_subjects = n;
  t.matrix.n_vectors = k;
  t.matrix.values.resize(n * k);
  for (size_t col = 0; col < k; ++col)
    for (size_t i = 0; i < n; ++i)
      t.matrix.at(i, col) = col == true_col
                                ? true_dose[i]
                                : true_dose[i] * rng.lognormal(1.0, noise_gsd);

  for (size_t i = 0; i < n; ++i) {
    Subject s;
    s.id = "s" + std::to_string(i + 1);
    s.subgroup = "g";
    s.covariates = {1.0};
    const double p = logistic(alpha + std::log1p(beta * true_dose[i]));
    s.disease = rng.uniform() < p ? 1 : 0;
    t.cohort.subjects.push_back(s);
  }
  return t;
}

PriorSpec tight_priors() {
  PriorSpec p;  // defaults: N(0,1000), exp mean 100
  return p;
}

}  // namespace

TEST_CASE("log posterior carries the -ln K model prior") {
  const Toy one = make_toy(20, 1, -0.5, 4.0, 11);
  Toy four = one;
  four.matrix.n_vectors = 4;
  four.matrix.values.clear();
  for (size_t i = 0; i < 20; ++i)
    for (int rep = 0; rep < 4; ++rep)
      four.matrix.values.push_back(one.matrix.at(i, 0));

  RiskParams params{{0.2}, 3.0};
  const PriorSpec priors = tight_priors();
  const double lp1 = log_posterior(params, 0, one.cohort, one.matrix, priors);
  for (size_t g = 0; g < 4; ++g) {
    const double lp4 = log_posterior(params, g, four.cohort, four.matrix, priors);
    CHECK(lp4 == doctest::Approx(lp1 - std::log(4.0)).epsilon(1e-12));
  }
}

TEST_CASE("negative beta is outside the prior support") {
  const Toy t = make_toy(10, 2, 0.0, 2.0, 12);
  RiskParams params{{0.0}, -0.5};
  CHECK(log_posterior(params, 0, t.cohort, t.matrix, tight_priors()) ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("normalized posterior matches direct integration pointwise (K=1)") {
  const Toy t = make_toy(30, 1, -0.6, 6.0, 13);
  const PriorSpec priors = tight_priors();
  const BmaProblem problem(t.cohort, t.matrix, priors);
  const auto col = t.matrix.column(0);

  // Shared normalization grid over (alpha, beta).
  std::vector<double> lp_mod, lp_dir;
  for (double a = -3.0; a <= 1.0; a += 0.08) {
    for (double b = 0.5; b <= 24.0; b += 0.4) {
      RiskParams params{{a}, b};
      lp_mod.push_back(problem.log_posterior(params, 0));
      lp_dir.push_back(grid_oracle::direct_log_posterior(
          t.cohort, col, priors, params.alpha, b, 1));
    }
  }
  const double z_mod = log_sum_exp(lp_mod);
  const double z_dir = log_sum_exp(lp_dir);
  for (size_t i = 0; i < lp_mod.size(); ++i) {
    const double dens_mod = std::exp(lp_mod[i] - z_mod);
    const double dens_dir = std::exp(lp_dir[i] - z_dir);
    if (dens_dir > 1e-10)
      CHECK(dens_mod == doctest::Approx(dens_dir).epsilon(1e-3));
  }
}

TEST_CASE("vanishing proposal scale drives within-model acceptance to one") {
  const Toy t = make_toy(25, 1, -0.5, 5.0, 14);
  const PriorSpec priors = tight_priors();
  const BmaProblem problem(t.cohort, t.matrix, priors);
  SamcConfig cfg;
  cfg.alpha_scale = 1e-7;
  cfg.lnbeta_scale = 1e-7;
  cfg.adapt_scales = false;

  SamcState state = make_initial_state(problem, cfg);
  auto rng = RngStream(140);
  int accepted = 0;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    state = mh_within_model_step(std::move(state), problem, cfg, rng);
    accepted += state.within_accepted ? 1 : 0;
  }
  CHECK(static_cast<double>(accepted) / n > 0.99);
}

TEST_CASE("jump acceptance: hand-evaluated omega correction") {
  // omega = (0, ln 2), equal densities, symmetric proposal: jump 1 -> 2
  // accepts with probability exactly 1/2.
  const double log_acc = jump_log_acceptance(0.0, std::log(2.0), -12.3, -12.3, 0.0);
  CHECK(std::exp(log_acc) == doctest::Approx(0.5).epsilon(1e-12));

  // Equal omega, equal densities, symmetric Q: ratio exactly 1.
  CHECK(jump_log_acceptance(0.7, 0.7, -5.0, -5.0, 0.0) == 0.0);
}

TEST_CASE("omega translation invariance") {
  auto rng = RngStream(15);
  for (int i = 0; i < 200; ++i) {
    const double w1 = rng.normal() * 3.0, w2 = rng.normal() * 3.0;
    const double lp1 = rng.normal() * 10.0, lp2 = rng.normal() * 10.0;
    const double c = rng.normal() * 50.0;
    CHECK(jump_log_acceptance(w1 + c, w2 + c, lp2, lp1, 0.0) ==
          doctest::Approx(jump_log_acceptance(w1, w2, lp2, lp1, 0.0))
              .epsilon(1e-12));
  }
}

TEST_CASE("weight update arithmetic") {
  SamcConfig cfg;
  cfg.t0 = 5000.0;

  // K = 1: e - f = 0 forever.
  SamcState s1;
  s1.omega = {0.0};
  s1.visit_counts = {0};
  s1.gamma = 0;
  s1 = update_weights(std::move(s1), cfg);
  CHECK(s1.omega[0] == 0.0);
  CHECK(s1.visit_counts[0] == 1);

  // K = 2, delta = 1 while t <= t0, gamma = first model.
  SamcState s2;
  s2.omega = {0.0, 0.0};
  s2.visit_counts = {0, 0};
  s2.gamma = 0;
  s2 = update_weights(std::move(s2), cfg);
  CHECK(s2.omega[0] == doctest::Approx(0.5));
  CHECK(s2.omega[1] == doctest::Approx(-0.5));

  // Gain factor schedule: flat at 1 until t0, then t0/t.
  CHECK(gain_factor(5000.0, 1) == 1.0);
  CHECK(gain_factor(5000.0, 5000) == 1.0);
  CHECK(gain_factor(5000.0, 10000) == doctest::Approx(0.5));
  CHECK(gain_factor(5000.0, 50000) == doctest::Approx(0.1));
}

TEST_CASE("K=1: SAMC and plain MH coincide on the same seed stream") {
  const Toy t = make_toy(30, 1, -0.5, 6.0, 16);
  const PriorSpec priors = tight_priors();
  SamcConfig cfg;
  const auto samc = run_bma(t.cohort, t.matrix, priors, cfg, 4000, 1000,
                            SamplerKind::Samc, 777);
  const auto plain = run_bma(t.cohort, t.matrix, priors, cfg, 4000, 1000,
                             SamplerKind::PlainMh, 777);
  REQUIRE(samc.weights.size() == 1);
  CHECK(samc.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(plain.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(samc.beta_summary.mean == plain.beta_summary.mean);
  CHECK(samc.beta_summary.ci_low == plain.beta_summary.ci_low);
  CHECK(samc.beta_summary.ci_high == plain.beta_summary.ci_high);
}

TEST_CASE("run_bma is deterministic given the seed") {
  const Toy t = make_toy(30, 3, -0.5, 6.0, 17);
  SamcConfig cfg;
  const auto a = run_bma(t.cohort, t.matrix, tight_priors(), cfg, 3000, 500,
                         SamplerKind::Samc, 31);
  const auto b = run_bma(t.cohort, t.matrix, tight_priors(), cfg, 3000, 500,
                         SamplerKind::Samc, 31);
  CHECK(a.beta_summary.mean == b.beta_summary.mean);
  CHECK(a.weights == b.weights);
  CHECK(a.diagnostics.visit_counts == b.diagnostics.visit_counts);
}

TEST_CASE("exchangeable columns share the weights evenly") {
  Toy t = make_toy(40, 1, -0.5, 5.0, 18);
  const size_t k = 5;
  DoseMatrix m;
  m.n_subjects = t.matrix.n_subjects;
  m.n_vectors = k;
  m.values.resize(m.n_subjects * k);
  for (size_t i = 0; i < m.n_subjects; ++i)
    for (size_t col = 0; col < k; ++col) m.at(i, col) = t.matrix.at(i, 0);

  SamcConfig cfg;
  cfg.t0 = 2000.0;
  const auto res = run_bma(t.cohort, m, tight_priors(), cfg, 100000, 10000,
                           SamplerKind::Samc, 19);
  for (double w : res.weights) CHECK(w == doctest::Approx(0.2).epsilon(0.25));
  for (double w : res.weights) CHECK(std::abs(w - 0.2) < 0.05);
  CHECK_FALSE(res.diagnostics.flat_histogram_warning);
}

TEST_CASE("grid oracle: weights and posterior mean (K=3, N=30)") {
  const Toy t = make_toy(30, 3, -0.5, 8.0, 20, 1.5);
  const PriorSpec priors = tight_priors();
  const auto oracle = grid_oracle::integrate_bma(t.cohort, t.matrix, priors);

  SamcConfig cfg;
  cfg.t0 = 2000.0;
  const auto samc = run_bma(t.cohort, t.matrix, priors, cfg, 400000, 40000,
                            SamplerKind::Samc, 21);
  const auto plain = run_bma(t.cohort, t.matrix, priors, cfg, 400000, 40000,
                             SamplerKind::PlainMh, 22);

  for (size_t m = 0; m < 3; ++m) {
    CHECK(std::abs(samc.weights[m] - oracle.weights[m]) < 0.02);
    CHECK(std::abs(plain.weights[m] - oracle.weights[m]) < 0.02);
  }
  CHECK(samc.beta_summary.mean ==
        doctest::Approx(oracle.beta_mean).epsilon(0.05));
  CHECK(plain.beta_summary.mean ==
        doctest::Approx(oracle.beta_mean).epsilon(0.05));

  // Sampler agreement within 3 combined MC standard errors.
  const double se = std::sqrt(samc.diagnostics.mcse_beta * samc.diagnostics.mcse_beta +
                              plain.diagnostics.mcse_beta * plain.diagnostics.mcse_beta);
  CHECK(std::abs(samc.beta_summary.mean - plain.beta_summary.mean) < 3.0 * se);
}

TEST_CASE("single-model chain reproduces the grid posterior mean") {
  const Toy t = make_toy(30, 1, -0.4, 7.0, 23);
  const PriorSpec priors = tight_priors();
  const auto oracle =
      grid_oracle::integrate_model(t.cohort, t.matrix.column(0), priors, 1);
  SamcConfig cfg;
  const auto res = run_bma(t.cohort, t.matrix, priors, cfg, 120000, 15000,
                           SamplerKind::PlainMh, 24);
  const double tol = std::max(3.0 * res.diagnostics.mcse_beta,
                              0.01 * oracle.beta_mean);
  CHECK(std::abs(res.beta_summary.mean - oracle.beta_mean) < tol);
}

TEST_CASE("within-model acceptance lands in the tuned band") {
  const Toy t = make_toy(60, 2, -0.5, 6.0, 25);
  SamcConfig cfg;
  const auto res = run_bma(t.cohort, t.matrix, tight_priors(), cfg, 20000, 8000,
                           SamplerKind::Samc, 26);
  CHECK(res.diagnostics.within_acceptance > 0.15);
  CHECK(res.diagnostics.within_acceptance < 0.55);
}

TEST_CASE("anti-trapping: SAMC escapes where plain MH stays stuck") {
  // Two models whose conditional posteriors sit far apart in ln(beta):
  // column 0 is the generating doses scaled by 30, so its slope optimum is
  // 30x smaller. Chains start at the wrong model's conditional mode; a jump
  // proposal carries the current (alpha, ln beta) into the other model where
  // the density is astronomically lower, so plain MH cannot leave.
  const size_t n = 300;
  Toy t = make_toy(n, 1, -1.0, 10.0, 27, 1.0, 0);
  DoseMatrix m;
  m.n_subjects = n;
  m.n_vectors = 2;
  m.values.resize(n * 2);
  for (size_t i = 0; i < n; ++i) {
    m.at(i, 0) = t.matrix.at(i, 0) * 30.0;  // wrong model
    m.at(i, 1) = t.matrix.at(i, 0);         // generating model
  }

  ChainInit init;
  init.gamma = 0;
  init.params.alpha = {-1.0};
  init.params.beta = 10.0 / 30.0;  // near the wrong model's slope optimum

  SamcConfig cfg;
  const long iters = 10000;
  int plain_trapped = 0, samc_both = 0, samc_flat = 0;
  const int n_seeds = 20;
  for (int s = 0; s < n_seeds; ++s) {
    const auto plain = run_bma(t.cohort, m, tight_priors(), cfg, iters, 0,
                               SamplerKind::PlainMh, 9000 + s, nullptr, &init);
    if (plain.diagnostics.models_visited_full == 1) ++plain_trapped;

    const auto samc = run_bma(t.cohort, m, tight_priors(), cfg, iters, 0,
                              SamplerKind::Samc, 9000 + s, nullptr, &init);
    if (samc.diagnostics.models_visited_full == 2) ++samc_both;
    const auto& v = samc.diagnostics.visit_counts;
    const double f0 = static_cast<double>(v[0]) / iters;
    if (std::abs(f0 - 0.5) / 0.5 < 0.2) ++samc_flat;
  }
  CHECK(plain_trapped > n_seeds / 2);
  CHECK(samc_both == n_seeds);
  CHECK(samc_flat >= n_seeds - 1);
}

TEST_CASE("generating column attains the largest weight") {
  // One clean column among heavily noised ones; continuous doses so every
  // subject contributes discrimination.
  int wins = 0;
  const int n_seeds = 10;
  for (int s = 0; s < n_seeds; ++s) {
    Toy t;
    t.cohort.covariate_names = {"one"};
    auto rng = RngStream(400 + s);
    const size_t n = 300, k = 6;
    std::vector<double> true_dose(n);
    for (size_t i = 0; i < n; ++i) true_dose[i] = rng.lognormal(0.15, 2.0);
    t.matrix.n_subjects = n;
    t.matrix.n_vectors = k;
    t.matrix.values.resize(n * k);
    for (size_t col = 0; col < k; ++col)
      for (size_t i = 0; i < n; ++i)
        t.matrix.at(i, col) =
            col == 0 ? true_dose[i] : true_dose[i] * rng.lognormal(1.0, 3.0);
    for (size_t i = 0; i < n; ++i) {
      Subject subj;
      subj.id = "s" + std::to_string(i + 1);
      subj.subgroup = "g";
      subj.covariates = {1.0};
      const double p = logistic(-1.0 + std::log1p(12.0 * true_dose[i]));
      subj.disease = rng.uniform() < p ? 1 : 0;
      t.cohort.subjects.push_back(subj);
    }

    SamcConfig cfg;
    cfg.t0 = 2000.0;
    const auto res = run_bma(t.cohort, t.matrix, tight_priors(), cfg, 30000,
                             6000, SamplerKind::Samc, 500 + s);
    const size_t argmax =
        std::max_element(res.weights.begin(), res.weights.end()) -
        res.weights.begin();
    if (argmax == 0) ++wins;
  }
  CHECK(wins >= 9);
}

TEST_CASE("choose_partition quantile cuts") {
  const auto p = choose_partition({1.0, 2.0, 3.0, 4.0}, 2);
  REQUIRE_FALSE(p.collapsed);
  REQUIRE(p.u_levels.size() == 1);
  CHECK(p.u_levels[0] == doctest::Approx(2.5));

  const auto c = choose_partition({3.3, 3.3, 3.3, 3.3}, 4);
  CHECK(c.collapsed);
  CHECK(c.u_levels.empty());

  CHECK_THROWS_AS(choose_partition({}, 3), std::invalid_argument);
  CHECK_THROWS_AS(choose_partition({1.0, 2.0}, 1), std::invalid_argument);
}

TEST_CASE("energy-partitioned SAMC hits the target occupancies") {
  // Bimodal 1D target; the energy bands above the modes act as barriers that
  // plain Metropolis crosses rarely.
  const auto log_target = [](std::span<const double> x) {
    const double a = std::exp(-0.5 * (x[0] + 4.0) * (x[0] + 4.0) / 0.49);
    const double b = std::exp(-0.5 * (x[0] - 4.0) * (x[0] - 4.0) / 0.49);
    return std::log(0.5 * a / 0.7 + 0.5 * b / 0.7 + 1e-300);
  };

  const auto pilot = pilot_energy_sample(log_target, {-4.0}, 0.5, 4000, 1);
  const auto partition = choose_partition(pilot, 4);
  REQUIRE_FALSE(partition.collapsed);

  SamcConfig cfg;
  cfg.u_levels = partition.u_levels;
  cfg.t0 = 2000.0;
  cfg.alpha_scale = 0.6;
  const long iters = 200000;
  const auto res = run_energy_samc(log_target, {-4.0}, cfg, iters, 2);

  REQUIRE(res.region_visits.size() == 4);
  for (long v : res.region_visits) {
    const double occ = static_cast<double>(v) / static_cast<double>(iters);
    CHECK(std::abs(occ - 0.25) / 0.25 < 0.2);
  }
}

TEST_CASE("config validation") {
  SamcConfig cfg;
  cfg.u_levels = {1.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.u_levels = {0.5, 1.0};
  CHECK_NOTHROW(cfg.validate());
  cfg.f = {0.5, 0.4};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.f = {0.2, 0.3, 0.5};
  CHECK_NOTHROW(cfg.validate());

  PriorSpec p;
  p.beta_mean = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
