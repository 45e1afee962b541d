#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dosebma/cohort.hpp"
#include "dosebma/risk_model.hpp"
#include "dosebma/rng.hpp"

namespace dosebma {

struct PriorSpec {
  double alpha_sd = 31.622776601683793;  // N(0, variance 1000)
  double beta_mean = 100.0;              // exponential, mean parameterization
  double dirichlet_conc = 1.0;           // symmetric; marginalized to uniform 1/K

  void validate() const;
};

struct SamcConfig {
  // Energy partition (generic variant): S sub-regions cut at u_levels,
  // sampled with frequencies f. The model-space sampler partitions by the
  // dose-vector index instead and uses uniform frequencies.
  int n_regions = 10;
  std::vector<double> u_levels;  // length n_regions-1, strictly increasing
  std::vector<double> f;         // length n_regions; empty means uniform

  double t0 = 5000.0;        // gain factor delta_t = t0 / max(t0, t)
  double nu = 1.5;           // gain-condition exponent, in (1,2); documentation
  double theta_bound = 1e100;  // compact support, enforced by proposal rejection
  double alpha_scale = 0.1;    // random-walk step for alpha
  double lnbeta_scale = 0.4;   // random-walk step for ln beta
  bool adapt_scales = true;    // burn-in only; frozen afterward
  double flat_threshold = 0.25;  // flat-histogram warning level

  void validate() const;
};

// Unnormalized log joint posterior of (alpha, beta, gamma):
// log-likelihood + normal(0, alpha_sd^2) log-densities + exponential(beta_mean)
// log-density + log(1/K). Returns -infinity for beta < 0.
double log_posterior(const RiskParams& params, size_t gamma, const Cohort& cohort,
                     const DoseMatrix& matrix, const PriorSpec& priors);

// Immutable per-run view: flattened likelihood arrays plus contiguous
// per-model dose columns.
class BmaProblem {
 public:
  BmaProblem(const Cohort& cohort, const DoseMatrix& matrix, const PriorSpec& priors);

  size_t n_models() const { return n_models_; }
  size_t n_alpha() const { return data_.j; }
  const PriorSpec& priors() const { return priors_; }

  double log_posterior(const RiskParams& params, size_t gamma) const;
  // Negative log posterior, the energy U of the Appendix formulation.
  double energy(const RiskParams& params, size_t gamma) const;

 private:
  LikelihoodData data_;
  std::vector<double> columns_;  // n_models * n, model-major
  size_t n_models_ = 0;
  PriorSpec priors_;
  double log_model_prior_ = 0.0;  // -ln K
};

struct SamcState {
  RiskParams params;
  double log_beta = 0.0;  // proposals act on ln beta
  size_t gamma = 0;
  std::vector<double> omega;       // working estimates of log(w_k / f_k)
  std::vector<long> visit_counts;  // incremented by update_weights
  long t = 0;
  double log_post = 0.0;  // cached log_posterior at (params, gamma)

  bool within_accepted = false;  // outcome of the last within-model step
  bool jump_proposed = false;    // outcome of the last jump step
  bool jump_accepted = false;
};

SamcState make_initial_state(const BmaProblem& problem, const SamcConfig& config);

// Gaussian random walk on (alpha, ln beta) with gamma fixed; standard MH
// against the posterior (the ln-beta Jacobian is handled internally).
SamcState mh_within_model_step(SamcState state, const BmaProblem& problem,
                               const SamcConfig& config, RngStream& rng);

// Proposes gamma* uniformly over the other models with fresh (alpha*, beta*)
// from the within-model proposal; accepts with the omega-corrected ratio.
// A self-proposal (only possible when K = 1) delegates to the within-model
// step. `use_omega = false` gives the plain-MH jump.
SamcState samc_jump_step(SamcState state, const BmaProblem& problem,
                         const SamcConfig& config, RngStream& rng,
                         bool use_omega = true);

// omega += delta_t * (e_t - f) with e_t the one-hot indicator of the current
// gamma and f uniform over models; increments visit_counts[gamma] and t.
SamcState update_weights(SamcState state, const SamcConfig& config);

// Gain factor t0 / max(t0, t); satisfies sum delta = inf and
// sum delta^nu < inf for nu in (1, 2].
double gain_factor(double t0, long t);

// Log of the model-jump acceptance probability before min(1, .): the
// Appendix ratio in log space. `log_q_ratio` is log Q(back)/Q(forward).
double jump_log_acceptance(double omega_current, double omega_proposed,
                           double chain_log_density_proposed,
                           double chain_log_density_current, double log_q_ratio);

enum class SamplerKind { Samc, PlainMh };

struct ParamSummary {
  double mean = 0.0;
  double median = 0.0;
  double ci_low = 0.0;  // equal-tailed 2.5% / 97.5%
  double ci_high = 0.0;
};

struct BmaDiagnostics {
  double within_acceptance = 0.0;
  double jump_acceptance = 0.0;
  std::vector<long> visit_counts;       // post burn-in, raw
  std::vector<long> visit_counts_full;  // including burn-in
  long models_visited_full = 0;
  double flat_histogram_deviation = 0.0;  // max_k |v_k/T - f_k| / f_k
  bool flat_histogram_warning = false;
  double mcse_beta = 0.0;  // batch-means MC standard error of the beta mean
  std::vector<double> omega_final;
  double adapted_alpha_scale = 0.0;
  double adapted_lnbeta_scale = 0.0;
};

struct BmaResult {
  ParamSummary beta_summary;
  std::vector<ParamSummary> alpha_summary;
  // Normalized posterior model probabilities: omega-corrected visit
  // frequencies under SAMC, raw visit frequencies under plain MH.
  std::vector<double> weights;
  BmaDiagnostics diagnostics;
};

// Optional per-iteration trace: t, gamma, beta, alpha..., energy U.
struct ChainTraceRow {
  long t;
  size_t gamma;
  double beta;
  std::vector<double> alpha;
  double energy;
};

// Optional chain start (defaults: alpha = 0, beta = 1, gamma = 0).
struct ChainInit {
  RiskParams params;
  size_t gamma = 0;
};

BmaResult run_bma(const Cohort& cohort, const DoseMatrix& matrix,
                  const PriorSpec& priors, const SamcConfig& config,
                  long n_samples, long burn_in, SamplerKind sampler,
                  uint64_t seed, std::vector<ChainTraceRow>* trace = nullptr,
                  const ChainInit* init = nullptr);

// ---- Energy-partitioned variant (generic targets) ----

struct PartitionChoice {
  std::vector<double> u_levels;
  bool collapsed = false;  // constant pilot energies: single region
};

// Equally spaced quantile cuts of pilot energies (U = -log unnormalized
// posterior) into S sub-regions.
PartitionChoice choose_partition(std::vector<double> pilot_energies, int n_regions);

// Plain random-walk MH pilot recording the energy at every iteration.
std::vector<double> pilot_energy_sample(
    const std::function<double(std::span<const double>)>& log_target,
    std::vector<double> init, double scale, long n_iter, uint64_t seed);

struct EnergySamcResult {
  std::vector<long> region_visits;
  std::vector<double> omega;
  double acceptance = 0.0;
};

// SAMC over an arbitrary continuous target with the energy partition from
// config.u_levels / config.f.
EnergySamcResult run_energy_samc(
    const std::function<double(std::span<const double>)>& log_target,
    std::vector<double> init, const SamcConfig& config, long n_iter,
    uint64_t seed);

}  // namespace dosebma
