#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dosebma/bma_samc.hpp"
#include "dosebma/cohort.hpp"
#include "dosebma/freq_fit.hpp"
#include "dosebma/twodmc.hpp"

namespace dosebma {

struct TrueScenario {
  double true_beta = 12.0;
  std::vector<double> true_alpha;  // matches the cohort covariate order
  size_t true_vector_index = 0;    // matrix column that generated the disease data
  ScenarioPreset scenario = ScenarioPreset::Total;
};

enum class Method { ConvMean, ConvMedian, BmaOriginal, BmaCm, BmaCmd };

std::string method_name(Method m);
Method parse_method(const std::string& name);
const std::vector<Method>& all_methods();

struct EvalRecord {
  Method method = Method::ConvMean;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool included = false;        // ci_low <= true_beta <= ci_high
  double relative_bias = 0.0;   // |estimate - true| / true
  double half_width = 0.0;      // (ci_high - ci_low) / 2
  double relative_ucl = 0.0;    // ci_high / estimate
  bool relative_ucl_defined = true;
  bool converged = true;
};

// Synthetic study cohort: covariates (age in [0,1], male, female), subgroups
// g00..gNN assigned round-robin, no disease status.
Cohort make_scenario_cohort(size_t n_subjects, size_t n_subgroups, uint64_t seed);

// Default generating coefficients for (age, male, female).
std::vector<double> default_true_alpha();

// Bernoulli outcomes from the disease-probability model at the true
// parameters; deterministic given seed.
Cohort simulate_disease(const Cohort& cohort, const DoseVector& true_dose,
                        const TrueScenario& scenario, uint64_t seed);

// Sorts estimates ascending, splits into n_groups contiguous blocks (the last
// absorbs any remainder) and draws per_group original-position indices
// uniformly without replacement from each block.
std::vector<size_t> select_test_sets(const std::vector<double>& slope_estimates,
                                     size_t n_groups, size_t per_group,
                                     uint64_t seed);

EvalRecord evaluate(double true_beta, Method method, double estimate,
                    double ci_low, double ci_high, bool converged = true);

// Matrix with one column removed; used to honor the rule that the generating
// dose vector is excluded from the model space.
DoseMatrix drop_column(const DoseMatrix& matrix, size_t column);

struct BenchmarkConfig {
  ScenarioPreset scenario = ScenarioPreset::Total;
  size_t n_subjects = 500;
  size_t n_subgroups = 20;
  size_t k_vectors = 200;
  size_t m_resamples = 100;
  std::vector<double> true_slopes{3.0, 12.0, 20.0};
  std::vector<double> true_alpha = default_true_alpha();
  size_t n_groups = 10;
  size_t sets_per_slope = 10;  // must be a multiple of n_groups
  long bma_samples = 20000;
  long bma_burn_in = 5000;
  SamplerKind sampler = SamplerKind::Samc;
  PriorSpec priors{};
  SamcConfig samc{};
  std::vector<Method> methods = all_methods();
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
  // N = 2376, K = 5000, 30 sets per slope, 40000 + 10000 iterations.
  BenchmarkConfig paper_scale() const;
};

struct BenchmarkCase {
  double true_slope = 0.0;
  size_t slope_index = 0;
  size_t set_index = 0;         // generating column
  size_t bma_model_count = 0;   // K - 1 after exclusion
  std::vector<EvalRecord> records;
};

struct MethodAggregate {
  std::string slope_label;  // "3", "12", "20" or "overall"
  Method method;
  double inclusion_pct = 0.0;
  double mean_relative_bias = 0.0;   // mean of |estimate - true| / true
  double median_half_width = 0.0;   // medians: robust to rare blown-up fits
  double median_relative_ucl = 0.0;
  size_t n_tests = 0;
  size_t n_failed = 0;
};

struct FullPoolInclusion {
  std::string slope_label;
  Method method;  // conventional methods only
  double inclusion_pct = 0.0;
};

struct BenchmarkReport {
  ScenarioPreset scenario = ScenarioPreset::Total;
  size_t k_vectors = 0;
  std::vector<BenchmarkCase> cases;
  std::vector<MethodAggregate> aggregates;
  std::vector<FullPoolInclusion> full_pool;
};

// Hook for persisting/reloading completed cases so interrupted runs resume.
class PartialStore {
 public:
  virtual ~PartialStore() = default;
  virtual std::optional<std::vector<EvalRecord>> load(const std::string& case_key) = 0;
  virtual void save(const std::string& case_key, const BenchmarkCase& c) = 0;
};

std::string benchmark_case_key(ScenarioPreset scenario, double slope, size_t set_index);

BenchmarkReport run_benchmark(const BenchmarkConfig& config, uint64_t seed,
                              PartialStore* store = nullptr);

// Classical-error sweep over a fixed slope: per GSD level the raw matrix gets
// per-realization injection and the conditional matrices are regenerated with
// the per-conditional-resample flag, then each BMA variant is re-run.
struct SweepConfig {
  BenchmarkConfig base{};
  std::vector<double> gsd_levels{1.0, 1.3, 1.5, 2.0, 3.0};
  double true_slope = 12.0;
  size_t n_sets = 3;  // disease sets averaged per level
  std::vector<Method> methods{Method::BmaOriginal, Method::BmaCm, Method::BmaCmd};
};

struct SweepRow {
  double gsd = 1.0;
  Method method = Method::BmaOriginal;
  double estimate = 0.0;  // mean over sets
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SweepCaseRecord {
  double gsd = 1.0;
  Method method = Method::BmaOriginal;
  size_t set_index = 0;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<SweepCaseRecord> records;
};

SweepReport classical_error_sweep(const SweepConfig& config, uint64_t seed);

}  // namespace dosebma
