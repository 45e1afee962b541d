#include "dosebma/bma_samc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dosebma/numeric.hpp"

namespace dosebma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normal_density(double x, double sd) {
  return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) -
         x * x / (2.0 * sd * sd);
}

double log_exponential_density(double x, double mean) {
  if (x < 0.0) return kNegInf;
  return -std::log(mean) - x / mean;
}

// Chain coordinates are (alpha, ln beta); the +ln(beta) term is the Jacobian
// of the transform, so random walks on ln beta need no proposal correction.
double chain_log_density(double log_post, double log_beta) {
  return log_post + log_beta;
}

size_t region_of(double energy, std::span<const double> u_levels) {
  size_t r = 0;
  while (r < u_levels.size() && energy > u_levels[r]) ++r;
  return r;
}

}  // namespace

void PriorSpec::validate() const {
  if (!(alpha_sd > 0.0)) throw std::invalid_argument("alpha prior SD must be > 0");
  if (!(beta_mean > 0.0)) throw std::invalid_argument("beta prior mean must be > 0");
  if (!(dirichlet_conc > 0.0))
    throw std::invalid_argument("Dirichlet concentration must be > 0");
}

void SamcConfig::validate() const {
  if (n_regions < 1) throw std::invalid_argument("need at least one sub-region");
  for (size_t i = 0; i + 1 < u_levels.size(); ++i)
    if (!(u_levels[i] < u_levels[i + 1]))
      throw std::invalid_argument("u_levels must be strictly increasing");
  if (!f.empty()) {
    double total = 0.0;
    for (double v : f) {
      if (!(v > 0.0)) throw std::invalid_argument("frequencies must be positive");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("frequencies must sum to 1");
  }
  if (!(t0 >= 1.0)) throw std::invalid_argument("t0 must be >= 1");
  if (!(theta_bound > 0.0)) throw std::invalid_argument("theta bound must be > 0");
  if (!(alpha_scale > 0.0) || !(lnbeta_scale > 0.0))
    throw std::invalid_argument("proposal scales must be > 0");
}

double gain_factor(double t0, long t) {
  return t0 / std::max(t0, static_cast<double>(t));
}

double jump_log_acceptance(double omega_current, double omega_proposed,
                           double chain_log_density_proposed,
                           double chain_log_density_current, double log_q_ratio) {
  return omega_current - omega_proposed + chain_log_density_proposed -
         chain_log_density_current + log_q_ratio;
}

BmaProblem::BmaProblem(const Cohort& cohort, const DoseMatrix& matrix,
                       const PriorSpec& priors)
    : data_(LikelihoodData::from_cohort(cohort)),
      n_models_(matrix.n_vectors),
      priors_(priors) {
  priors_.validate();
  matrix.validate();
  if (matrix.n_subjects != data_.n)
    throw std::invalid_argument("dose matrix rows do not match cohort size");
  // Model-major column cache: the per-iteration likelihood walks one model's
  // doses contiguously.
  columns_.resize(n_models_ * data_.n);
  for (size_t k = 0; k < n_models_; ++k)
    for (size_t i = 0; i < data_.n; ++i)
      columns_[k * data_.n + i] = matrix.at(i, k);
  log_model_prior_ = -std::log(static_cast<double>(n_models_));
}

double BmaProblem::log_posterior(const RiskParams& params, size_t gamma) const {
  if (gamma >= n_models_) throw std::out_of_range("model index out of range");
  if (params.beta < 0.0) return kNegInf;
  const std::span<const double> dose{columns_.data() + gamma * data_.n, data_.n};
  double lp = data_.log_likelihood(params, dose);
  for (double a : params.alpha) lp += log_normal_density(a, priors_.alpha_sd);
  lp += log_exponential_density(params.beta, priors_.beta_mean);
  lp += log_model_prior_;
  return lp;
}

double BmaProblem::energy(const RiskParams& params, size_t gamma) const {
  return -log_posterior(params, gamma);
}

double log_posterior(const RiskParams& params, size_t gamma, const Cohort& cohort,
                     const DoseMatrix& matrix, const PriorSpec& priors) {
  if (params.beta < 0.0) return kNegInf;
  const BmaProblem problem(cohort, matrix, priors);
  return problem.log_posterior(params, gamma);
}

SamcState make_initial_state(const BmaProblem& problem, const SamcConfig& config) {
  config.validate();
  SamcState state;
  state.params.alpha.assign(problem.n_alpha(), 0.0);
  state.params.beta = 1.0;
  state.log_beta = 0.0;
  state.gamma = 0;
  state.omega.assign(problem.n_models(), 0.0);
  state.visit_counts.assign(problem.n_models(), 0);
  state.t = 0;
  state.log_post = problem.log_posterior(state.params, state.gamma);
  return state;
}

namespace {

struct Proposal {
  RiskParams params;
  double log_beta;
  bool in_bounds;
};

Proposal propose_params(const SamcState& state, const SamcConfig& config,
                        RngStream& rng) {
  Proposal p;
  p.params.alpha.resize(state.params.alpha.size());
  for (size_t j = 0; j < p.params.alpha.size(); ++j)
    p.params.alpha[j] = state.params.alpha[j] + config.alpha_scale * rng.normal();
  p.log_beta = state.log_beta + config.lnbeta_scale * rng.normal();
  p.params.beta = std::exp(p.log_beta);
  p.in_bounds = p.params.beta <= config.theta_bound;
  for (double a : p.params.alpha)
    if (std::abs(a) > config.theta_bound) p.in_bounds = false;
  return p;
}

}  // namespace

SamcState mh_within_model_step(SamcState state, const BmaProblem& problem,
                               const SamcConfig& config, RngStream& rng) {
  const Proposal prop = propose_params(state, config, rng);
  const double u = rng.uniform_pos();
  state.within_accepted = false;
  if (!prop.in_bounds) return state;

  const double lp_new = problem.log_posterior(prop.params, state.gamma);
  const double log_ratio = chain_log_density(lp_new, prop.log_beta) -
                           chain_log_density(state.log_post, state.log_beta);
  if (std::log(u) < log_ratio) {
    state.params = prop.params;
    state.log_beta = prop.log_beta;
    state.log_post = lp_new;
    state.within_accepted = true;
  }
  return state;
}

SamcState samc_jump_step(SamcState state, const BmaProblem& problem,
                         const SamcConfig& config, RngStream& rng,
                         bool use_omega) {
  const size_t k = problem.n_models();
  state.jump_proposed = false;
  state.jump_accepted = false;
  if (k == 1) {
    // Q must propose the only model: a self-proposal is a within-model move.
    return mh_within_model_step(std::move(state), problem, config, rng);
  }

  // Q(M_i -> M_j): uniform over all j != i, so the ratio Q(back)/Q(forward)
  // is 1.
  const uint64_t offset = rng.uniform_int(k - 1);
  const size_t gamma_new =
      offset >= state.gamma ? static_cast<size_t>(offset + 1)
                            : static_cast<size_t>(offset);

  const Proposal prop = propose_params(state, config, rng);
  const double u = rng.uniform_pos();
  state.jump_proposed = true;
  if (!prop.in_bounds) return state;

  const double lp_new = problem.log_posterior(prop.params, gamma_new);
  const double omega_cur = use_omega ? state.omega[state.gamma] : 0.0;
  const double omega_prop = use_omega ? state.omega[gamma_new] : 0.0;
  const double log_ratio = jump_log_acceptance(
      omega_cur, omega_prop, chain_log_density(lp_new, prop.log_beta),
      chain_log_density(state.log_post, state.log_beta), 0.0);
  if (std::log(u) < log_ratio) {
    state.params = prop.params;
    state.log_beta = prop.log_beta;
    state.gamma = gamma_new;
    state.log_post = lp_new;
    state.jump_accepted = true;
  }
  return state;
}

SamcState update_weights(SamcState state, const SamcConfig& config) {
  state.t += 1;
  const double delta = gain_factor(config.t0, state.t);
  const size_t k = state.omega.size();
  const double f_uniform = 1.0 / static_cast<double>(k);
  for (size_t m = 0; m < k; ++m) {
    const double e = m == state.gamma ? 1.0 : 0.0;
    state.omega[m] += delta * (e - f_uniform);
  }
  state.visit_counts[state.gamma] += 1;
  return state;
}

namespace {

ParamSummary weighted_summary(std::vector<double> values,
                              const std::vector<double>& weights) {
  // weights are normalized. Quantiles via the weighted empirical CDF.
  std::vector<size_t> order(values.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });

  ParamSummary s;
  double mean = 0.0;
  for (size_t i = 0; i < values.size(); ++i) mean += weights[i] * values[i];
  s.mean = mean;

  const auto quantile = [&](double q) {
    double cum = 0.0;
    for (size_t idx : order) {
      cum += weights[idx];
      if (cum >= q) return values[idx];
    }
    return values[order.back()];
  };
  s.ci_low = quantile(0.025);
  s.median = quantile(0.5);
  s.ci_high = quantile(0.975);
  return s;
}

double batch_means_mcse(const std::vector<double>& values,
                        const std::vector<double>& weights) {
  const size_t n = values.size();
  const size_t n_batches = std::min<size_t>(50, std::max<size_t>(2, n / 20));
  if (n < 2 * n_batches) return 0.0;
  const size_t len = n / n_batches;
  std::vector<double> batch_means;
  for (size_t b = 0; b < n_batches; ++b) {
    double w = 0.0, m = 0.0;
    for (size_t i = b * len; i < (b + 1) * len; ++i) {
      w += weights[i];
      m += weights[i] * values[i];
    }
    if (w > 0.0) batch_means.push_back(m / w);
  }
  if (batch_means.size() < 2) return 0.0;
  return std::sqrt(variance_of(batch_means) /
                   static_cast<double>(batch_means.size()));
}

}  // namespace

BmaResult run_bma(const Cohort& cohort, const DoseMatrix& matrix,
                  const PriorSpec& priors, const SamcConfig& config,
                  long n_samples, long burn_in, SamplerKind sampler,
                  uint64_t seed, std::vector<ChainTraceRow>* trace,
                  const ChainInit* init) {
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  if (burn_in < 0) throw std::invalid_argument("negative burn-in");
  config.validate();
  priors.validate();
  if (!cohort.all_have_disease())
    throw std::invalid_argument("cohort has subjects without disease status");

  const BmaProblem problem(cohort, matrix, priors);
  const size_t k = problem.n_models();
  const bool samc = sampler == SamplerKind::Samc;

  SamcConfig cfg = config;  // adapted copy; proposal scales may change in burn-in
  SamcState state = make_initial_state(problem, cfg);
  if (init) {
    if (init->params.alpha.size() != problem.n_alpha())
      throw std::invalid_argument("chain init alpha length mismatch");
    if (init->gamma >= k) throw std::invalid_argument("chain init gamma out of range");
    if (!(init->params.beta > 0.0))
      throw std::invalid_argument("chain init beta must be positive");
    state.params = init->params;
    state.log_beta = std::log(init->params.beta);
    state.gamma = init->gamma;
    state.log_post = problem.log_posterior(state.params, state.gamma);
  }
  auto rng = RngStream::derive(seed, StreamDomain::Chain);

  const long total = burn_in + n_samples;
  std::vector<char> visited(k, 0);
  visited[state.gamma] = 1;

  // Post-burn-in tallies.
  std::vector<long> visits_post(k, 0);
  long within_accept_post = 0, jump_prop_post = 0, jump_accept_post = 0;

  // Burn-in adaptation window.
  long window_count = 0, window_accept = 0;
  constexpr long kWindow = 200;

  std::vector<double> beta_draws;
  std::vector<std::vector<double>> alpha_draws(problem.n_alpha());
  std::vector<size_t> gamma_draws;
  std::vector<double> omega_avg(k, 0.0);  // Polyak average over the sample window
  beta_draws.reserve(n_samples);
  gamma_draws.reserve(n_samples);

  for (long t = 1; t <= total; ++t) {
    state = mh_within_model_step(std::move(state), problem, cfg, rng);
    const bool within_ok = state.within_accepted;
    if (k > 1)
      state = samc_jump_step(std::move(state), problem, cfg, rng, samc);
    if (samc) {
      state = update_weights(std::move(state), cfg);
    } else {
      state.t += 1;
      state.visit_counts[state.gamma] += 1;
    }
    visited[state.gamma] = 1;

    if (t <= burn_in && cfg.adapt_scales) {
      window_count += 1;
      window_accept += within_ok ? 1 : 0;
      if (window_count == kWindow) {
        const double rate =
            static_cast<double>(window_accept) / static_cast<double>(kWindow);
        if (rate < 0.23) {
          cfg.alpha_scale = std::max(1e-3, cfg.alpha_scale * 0.8);
          cfg.lnbeta_scale = std::max(1e-3, cfg.lnbeta_scale * 0.8);
        } else if (rate > 0.44) {
          cfg.alpha_scale = std::min(10.0, cfg.alpha_scale * 1.25);
          cfg.lnbeta_scale = std::min(10.0, cfg.lnbeta_scale * 1.25);
        }
        window_count = 0;
        window_accept = 0;
      }
    }

    if (t > burn_in) {
      within_accept_post += within_ok ? 1 : 0;
      if (state.jump_proposed) {
        jump_prop_post += 1;
        jump_accept_post += state.jump_accepted ? 1 : 0;
      }
      visits_post[state.gamma] += 1;
      beta_draws.push_back(state.params.beta);
      for (size_t j = 0; j < problem.n_alpha(); ++j)
        alpha_draws[j].push_back(state.params.alpha[j]);
      gamma_draws.push_back(state.gamma);
      if (samc)
        for (size_t m = 0; m < k; ++m) omega_avg[m] += state.omega[m];
    }
    if (trace) {
      trace->push_back(
          {t, state.gamma, state.params.beta, state.params.alpha,
           -state.log_post});
    }
  }

  // Normalized per-draw importance weights exp(omega_gamma) evaluated at the
  // time-averaged weight estimates: they undo the flat-over-models working
  // density so summaries estimate the true posterior. The Polyak average over
  // the sample window suppresses the gain-factor jitter that the running (or
  // terminal) omega would inject into the exp weights.
  std::vector<double> model_logw(k, 0.0);
  if (samc)
    for (size_t m = 0; m < k; ++m)
      model_logw[m] = omega_avg[m] / static_cast<double>(n_samples);
  double lw_max = model_logw[gamma_draws.empty() ? 0 : gamma_draws[0]];
  for (size_t g : gamma_draws) lw_max = std::max(lw_max, model_logw[g]);
  std::vector<double> w(gamma_draws.size());
  double w_total = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    w[i] = std::exp(model_logw[gamma_draws[i]] - lw_max);
    w_total += w[i];
  }
  for (double& wi : w) wi /= w_total;

  BmaResult result;
  result.beta_summary = weighted_summary(beta_draws, w);
  for (size_t j = 0; j < problem.n_alpha(); ++j)
    result.alpha_summary.push_back(weighted_summary(alpha_draws[j], w));

  result.weights.assign(k, 0.0);
  for (size_t i = 0; i < gamma_draws.size(); ++i)
    result.weights[gamma_draws[i]] += w[i];
  // Renormalize away accumulation rounding so the weights sum to 1 exactly.
  const double w_sum = stable_sum(result.weights);
  if (w_sum > 0.0)
    for (double& wk : result.weights) wk /= w_sum;

  auto& d = result.diagnostics;
  d.within_acceptance = static_cast<double>(within_accept_post) /
                        static_cast<double>(n_samples);
  d.jump_acceptance =
      jump_prop_post > 0 ? static_cast<double>(jump_accept_post) /
                               static_cast<double>(jump_prop_post)
                         : 0.0;
  d.visit_counts = visits_post;
  d.visit_counts_full = state.visit_counts;
  d.models_visited_full = std::count(visited.begin(), visited.end(), 1);
  if (samc) {
    double dev = 0.0;
    for (long v : visits_post) {
      const double freq = static_cast<double>(v) / static_cast<double>(n_samples);
      dev = std::max(dev, std::abs(freq * static_cast<double>(k) - 1.0));
    }
    d.flat_histogram_deviation = dev;
    d.flat_histogram_warning = dev > cfg.flat_threshold;
  }
  d.mcse_beta = batch_means_mcse(beta_draws, w);
  d.omega_final = state.omega;
  d.adapted_alpha_scale = cfg.alpha_scale;
  d.adapted_lnbeta_scale = cfg.lnbeta_scale;
  return result;
}

PartitionChoice choose_partition(std::vector<double> pilot_energies, int n_regions) {
  if (pilot_energies.empty())
    throw std::invalid_argument("empty pilot energy sample");
  if (n_regions < 2)
    throw std::invalid_argument("need at least two sub-regions");
  std::sort(pilot_energies.begin(), pilot_energies.end());

  PartitionChoice choice;
  const double span = pilot_energies.back() - pilot_energies.front();
  if (!(span > 1e-12 * (1.0 + std::abs(pilot_energies.back())))) {
    choice.collapsed = true;  // constant energies: single region
    return choice;
  }
  for (int i = 1; i < n_regions; ++i) {
    const double u = quantile_sorted(
        pilot_energies, static_cast<double>(i) / static_cast<double>(n_regions));
    if (choice.u_levels.empty() || u > choice.u_levels.back())
      choice.u_levels.push_back(u);
  }
  if (choice.u_levels.empty()) choice.collapsed = true;
  return choice;
}

std::vector<double> pilot_energy_sample(
    const std::function<double(std::span<const double>)>& log_target,
    std::vector<double> init, double scale, long n_iter, uint64_t seed) {
  auto rng = RngStream::derive(seed, StreamDomain::Pilot);
  std::vector<double> x = std::move(init);
  std::vector<double> cand(x.size());
  double lp = log_target(x);
  std::vector<double> energies;
  energies.reserve(n_iter);
  for (long t = 0; t < n_iter; ++t) {
    for (size_t i = 0; i < x.size(); ++i) cand[i] = x[i] + scale * rng.normal();
    const double lp_new = log_target(cand);
    if (std::log(rng.uniform_pos()) < lp_new - lp) {
      x = cand;
      lp = lp_new;
    }
    energies.push_back(-lp);
  }
  return energies;
}

EnergySamcResult run_energy_samc(
    const std::function<double(std::span<const double>)>& log_target,
    std::vector<double> init, const SamcConfig& config, long n_iter,
    uint64_t seed) {
  config.validate();
  const size_t s = config.u_levels.size() + 1;
  std::vector<double> f = config.f;
  if (f.empty()) f.assign(s, 1.0 / static_cast<double>(s));
  if (f.size() != s)
    throw std::invalid_argument("frequency vector does not match region count");

  auto rng = RngStream::derive(seed, StreamDomain::Chain);
  std::vector<double> x = std::move(init);
  std::vector<double> cand(x.size());
  double lp = log_target(x);
  size_t region = region_of(-lp, config.u_levels);

  EnergySamcResult result;
  result.region_visits.assign(s, 0);
  result.omega.assign(s, 0.0);
  long accepted = 0;

  for (long t = 1; t <= n_iter; ++t) {
    for (size_t i = 0; i < x.size(); ++i)
      cand[i] = x[i] + config.alpha_scale * rng.normal();
    const double lp_new = log_target(cand);
    const size_t region_new = region_of(-lp_new, config.u_levels);
    const double log_ratio = jump_log_acceptance(
        result.omega[region], result.omega[region_new], lp_new, lp, 0.0);
    if (std::log(rng.uniform_pos()) < log_ratio) {
      x = cand;
      lp = lp_new;
      region = region_new;
      ++accepted;
    }
    const double delta = gain_factor(config.t0, t);
    for (size_t r = 0; r < s; ++r)
      result.omega[r] += delta * ((r == region ? 1.0 : 0.0) - f[r]);
    result.region_visits[region] += 1;
  }
  result.acceptance = static_cast<double>(accepted) / static_cast<double>(n_iter);
  return result;
}

}  // namespace dosebma
