#include "dosebma/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "dosebma/numeric.hpp"
#include "dosebma/parallel.hpp"
#include "dosebma/rng.hpp"

namespace dosebma {

namespace {

// Sub-seed tags; every stage derives its streams from (master seed, tag, ids).
constexpr uint64_t kTagCohort = 0xC0;
constexpr uint64_t kTagDose = 0xD0;
constexpr uint64_t kTagDiseasePool = 0xD15;
constexpr uint64_t kTagSelection = 0x5E1;
constexpr uint64_t kTagCase = 0xCA5E;
constexpr uint64_t kTagSweepDisease = 0x51D;
constexpr uint64_t kTagSweepClassical = 0x51C;
constexpr uint64_t kTagSweepCase = 0x51E;

uint64_t sub_seed(std::initializer_list<uint64_t> words) {
  RngStream s(words);
  return s.next_u64();
}

Cohort with_disease(const Cohort& base, const std::vector<int>& y) {
  Cohort out = base;
  for (size_t i = 0; i < out.subjects.size(); ++i) out.subjects[i].disease = y[i];
  return out;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::ConvMean: return "conv-mean";
    case Method::ConvMedian: return "conv-median";
    case Method::BmaOriginal: return "bma-original";
    case Method::BmaCm: return "bma-cm";
    case Method::BmaCmd: return "bma-cmd";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods())
    if (method_name(m) == name) return m;
  throw std::invalid_argument("unknown method: " + name);
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::ConvMean, Method::ConvMedian,
                                           Method::BmaOriginal, Method::BmaCm,
                                           Method::BmaCmd};
  return methods;
}

std::vector<double> default_true_alpha() {
  // Age enters with odds factor 2 and the female:male odds ratio is
  // 3 : 1.5 = 2; the common sex-term offset centers the zero-dose prevalence
  // near the one third observed in screened cohorts, which keeps the slope
  // identifiable in moderate-size simulations.
  constexpr double offset = 1.8;
  return {std::log(2.0), std::log(1.5) - offset, std::log(3.0) - offset};
}

Cohort make_scenario_cohort(size_t n_subjects, size_t n_subgroups, uint64_t seed) {
  if (n_subjects == 0) throw std::invalid_argument("empty cohort requested");
  if (n_subgroups == 0 || n_subgroups > n_subjects)
    throw std::invalid_argument("bad subgroup count");
  Cohort cohort;
  cohort.covariate_names = {"age", "male", "female"};
  cohort.subjects.reserve(n_subjects);
  for (size_t i = 0; i < n_subjects; ++i) {
    auto rng = RngStream::derive(seed, StreamDomain::CohortGen, {i});
    Subject s;
    char id[32];
    std::snprintf(id, sizeof(id), "s%05zu", i + 1);
    s.id = id;
    char grp[32];
    std::snprintf(grp, sizeof(grp), "g%02zu", i % n_subgroups);
    s.subgroup = grp;
    const double age = rng.uniform();  // standardized age in [0,1]
    const bool male = rng.uniform() < 0.5;
    s.covariates = {age, male ? 1.0 : 0.0, male ? 0.0 : 1.0};
    cohort.subjects.push_back(std::move(s));
  }
  cohort.validate();
  return cohort;
}

Cohort simulate_disease(const Cohort& cohort, const DoseVector& true_dose,
                        const TrueScenario& scenario, uint64_t seed) {
  if (!(scenario.true_beta >= 0.0))
    throw std::invalid_argument("true slope must be nonnegative");
  if (true_dose.values.size() != cohort.size())
    throw std::invalid_argument("true dose length does not match cohort");
  RiskParams params{scenario.true_alpha, scenario.true_beta};
  Cohort out = cohort;
  for (size_t i = 0; i < out.subjects.size(); ++i) {
    auto rng = RngStream::derive(seed, StreamDomain::Disease, {i});
    const double p = disease_probability(params, out.subjects[i].covariates,
                                         true_dose.values[i]);
    out.subjects[i].disease = rng.uniform() < p ? 1 : 0;
  }
  return out;
}

std::vector<size_t> select_test_sets(const std::vector<double>& slope_estimates,
                                     size_t n_groups, size_t per_group,
                                     uint64_t seed) {
  const size_t n = slope_estimates.size();
  if (n == 0) throw std::invalid_argument("no slope estimates to select from");
  if (n_groups == 0) throw std::invalid_argument("need at least one group");
  if (n_groups > n) throw std::invalid_argument("more groups than estimates");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return slope_estimates[a] < slope_estimates[b];
  });

  // Contiguous blocks; the last absorbs the remainder.
  const size_t base = n / n_groups;
  std::vector<size_t> selected;
  selected.reserve(n_groups * per_group);
  for (size_t g = 0; g < n_groups; ++g) {
    const size_t begin = g * base;
    const size_t end = g + 1 == n_groups ? n : begin + base;
    const size_t block = end - begin;
    if (per_group > block)
      throw std::invalid_argument("per_group exceeds block size");
    auto rng = RngStream::derive(seed, StreamDomain::Selection, {g});
    // Partial Fisher-Yates over the block positions.
    std::vector<size_t> pos(block);
    for (size_t i = 0; i < block; ++i) pos[i] = begin + i;
    for (size_t i = 0; i < per_group; ++i) {
      const size_t pick = i + rng.uniform_int(block - i);
      std::swap(pos[i], pos[pick]);
      selected.push_back(order[pos[i]]);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

EvalRecord evaluate(double true_beta, Method method, double estimate,
                    double ci_low, double ci_high, bool converged) {
  if (!(true_beta > 0.0))
    throw std::invalid_argument("relative metrics need a positive true slope");
  EvalRecord r;
  r.method = method;
  r.estimate = estimate;
  r.ci_low = ci_low;
  r.ci_high = ci_high;
  r.converged = converged;
  r.included = ci_low <= true_beta && true_beta <= ci_high;
  r.relative_bias = std::abs(estimate - true_beta) / true_beta;
  r.half_width = 0.5 * (ci_high - ci_low);
  if (estimate == 0.0) {
    r.relative_ucl_defined = false;
    r.relative_ucl = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.relative_ucl = ci_high / estimate;
  }
  return r;
}

DoseMatrix drop_column(const DoseMatrix& matrix, size_t column) {
  if (column >= matrix.n_vectors) throw std::out_of_range("column out of range");
  if (matrix.n_vectors < 2)
    throw std::invalid_argument("cannot drop the only column");
  DoseMatrix out;
  out.n_subjects = matrix.n_subjects;
  out.n_vectors = matrix.n_vectors - 1;
  out.kind = matrix.kind;
  out.provenance = matrix.provenance + ";dropped_column=" + std::to_string(column);
  out.values.reserve(out.n_subjects * out.n_vectors);
  for (size_t i = 0; i < matrix.n_subjects; ++i)
    for (size_t k = 0; k < matrix.n_vectors; ++k)
      if (k != column) out.values.push_back(matrix.at(i, k));
  return out;
}

void BenchmarkConfig::validate() const {
  if (n_subjects < 2) throw std::invalid_argument("cohort too small");
  if (k_vectors < 1) throw std::invalid_argument("need at least one dose vector");
  const bool any_bma =
      std::find(methods.begin(), methods.end(), Method::BmaOriginal) != methods.end() ||
      std::find(methods.begin(), methods.end(), Method::BmaCm) != methods.end() ||
      std::find(methods.begin(), methods.end(), Method::BmaCmd) != methods.end();
  if (any_bma && k_vectors < 2)
    throw std::invalid_argument(
        "BMA methods need at least two dose vectors (the generating one is excluded)");
  if (true_slopes.empty()) throw std::invalid_argument("no true slopes");
  for (double s : true_slopes)
    if (!(s > 0.0)) throw std::invalid_argument("true slopes must be positive");
  if (sets_per_slope == 0 || n_groups == 0 || sets_per_slope % n_groups != 0)
    throw std::invalid_argument("sets_per_slope must be a multiple of n_groups");
  if (sets_per_slope > k_vectors)
    throw std::invalid_argument("more test sets than dose vectors");
  if (true_alpha.size() != 3)
    throw std::invalid_argument("true alpha must cover (age, male, female)");
  if (methods.empty()) throw std::invalid_argument("no methods requested");
  priors.validate();
  samc.validate();
}

BenchmarkConfig BenchmarkConfig::paper_scale() const {
  BenchmarkConfig c = *this;
  c.n_subjects = 2376;
  c.k_vectors = 5000;
  c.sets_per_slope = 30;
  c.bma_samples = 40000;
  c.bma_burn_in = 10000;
  return c;
}

std::string benchmark_case_key(ScenarioPreset scenario, double slope,
                               size_t set_index) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s_slope%g_set%05zu",
                preset_name(scenario).c_str(), slope, set_index);
  return buf;
}

namespace {

bool wants(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

struct PoolFits {
  std::vector<FreqFitResult> mean_fits;    // per pool set
  std::vector<FreqFitResult> median_fits;  // per pool set
};

double inclusion_over_pool(const std::vector<FreqFitResult>& fits, double slope) {
  size_t included = 0;
  for (const auto& f : fits)
    if (f.converged && f.ci_low <= slope && slope <= f.ci_high) ++included;
  return 100.0 * static_cast<double>(included) / static_cast<double>(fits.size());
}

MethodAggregate aggregate_records(const std::string& label, Method method,
                                  const std::vector<const EvalRecord*>& records) {
  MethodAggregate a;
  a.slope_label = label;
  a.method = method;
  a.n_tests = records.size();
  size_t included = 0;
  double bias = 0.0;
  size_t n_bias = 0;
  // Interval widths are aggregated by median: at moderate cohort sizes a
  // single degenerate fit can carry a CI orders of magnitude wide, and the
  // mean would report only that outlier.
  std::vector<double> hws, rucls;
  for (const auto* r : records) {
    if (!r->converged) {
      a.n_failed += 1;
      continue;
    }
    if (r->included) ++included;
    if (std::isfinite(r->relative_bias)) {
      bias += r->relative_bias;
      ++n_bias;
    }
    if (std::isfinite(r->half_width)) hws.push_back(r->half_width);
    if (r->relative_ucl_defined && std::isfinite(r->relative_ucl))
      rucls.push_back(r->relative_ucl);
  }
  a.inclusion_pct = a.n_tests == 0
                        ? 0.0
                        : 100.0 * static_cast<double>(included) /
                              static_cast<double>(a.n_tests);
  a.mean_relative_bias = n_bias ? bias / static_cast<double>(n_bias) : 0.0;
  a.median_half_width = hws.empty() ? 0.0 : median_of(hws);
  a.median_relative_ucl = rucls.empty() ? 0.0 : median_of(rucls);
  return a;
}

std::string slope_label_of(double slope) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", slope);
  return buf;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config, uint64_t seed,
                              PartialStore* store) {
  config.validate();
  const size_t per_group = config.sets_per_slope / config.n_groups;
  const size_t k = config.k_vectors;

  const uint64_t cohort_seed = sub_seed({seed, kTagCohort});
  const Cohort base =
      make_scenario_cohort(config.n_subjects, config.n_subgroups, cohort_seed);
  const auto dose_cfg = preset_config(config.scenario, base.subgroup_labels());
  const uint64_t dose_seed = sub_seed({seed, kTagDose});

  const DoseMatrix raw = generate_dose_matrix(base, dose_cfg, k, dose_seed);
  const bool need_cm = wants(config.methods, Method::BmaCm);
  const bool need_cmd = wants(config.methods, Method::BmaCmd);
  DoseMatrix cm, cmd;
  if (need_cm)
    cm = generate_conditional_matrix(base, dose_cfg, k, config.m_resamples,
                                     CollapseStat::Mean, dose_seed);
  if (need_cmd)
    cmd = generate_conditional_matrix(base, dose_cfg, k, config.m_resamples,
                                      CollapseStat::Median, dose_seed);

  const DoseVector mean_vec = collapse_to_vector(raw, CollapseStat::Mean);
  const DoseVector median_vec = collapse_to_vector(raw, CollapseStat::Median);

  BenchmarkReport report;
  report.scenario = config.scenario;
  report.k_vectors = k;

  struct CaseSpec {
    size_t slope_index;
    double slope;
    size_t set_index;
  };
  std::vector<CaseSpec> case_specs;
  // Disease outcomes per (slope, pool set); kept as bare 0/1 vectors.
  std::vector<std::vector<std::vector<int>>> pool_y(config.true_slopes.size());
  std::vector<PoolFits> pool_fits(config.true_slopes.size());

  for (size_t si = 0; si < config.true_slopes.size(); ++si) {
    const double slope = config.true_slopes[si];
    auto& ys = pool_y[si];
    ys.resize(k);
    TrueScenario scen;
    scen.true_beta = slope;
    scen.true_alpha = config.true_alpha;
    scen.scenario = config.scenario;
    RiskParams true_params{config.true_alpha, slope};

    // One disease set per dose vector: set j is generated by raw column j.
    parallel_for(k, config.threads, [&](size_t j) {
      const uint64_t dseed = sub_seed({seed, kTagDiseasePool, si, j});
      std::vector<int>& y = ys[j];
      y.resize(base.size());
      for (size_t i = 0; i < base.size(); ++i) {
        auto rng = RngStream::derive(dseed, StreamDomain::Disease, {i});
        const double p = disease_probability(true_params,
                                             base.subjects[i].covariates,
                                             raw.at(i, j));
        y[i] = rng.uniform() < p ? 1 : 0;
      }
    });

    // Pre-fit both conventional methods on the full pool (conv-median drives
    // the balanced selection; both feed the full-pool inclusion columns).
    auto& fits = pool_fits[si];
    fits.mean_fits.resize(k);
    fits.median_fits.resize(k);
    parallel_for(k, config.threads, [&](size_t j) {
      const Cohort diseased = with_disease(base, ys[j]);
      try {
        fits.median_fits[j] = fit_ml(diseased, median_vec);
      } catch (const std::exception&) {
        fits.median_fits[j] = FreqFitResult{};
      }
      try {
        fits.mean_fits[j] = fit_ml(diseased, mean_vec);
      } catch (const std::exception&) {
        fits.mean_fits[j] = FreqFitResult{};
      }
    });

    const std::string label = slope_label_of(slope);
    report.full_pool.push_back(
        {label, Method::ConvMean, inclusion_over_pool(fits.mean_fits, slope)});
    report.full_pool.push_back(
        {label, Method::ConvMedian, inclusion_over_pool(fits.median_fits, slope)});

    std::vector<double> estimates(k);
    for (size_t j = 0; j < k; ++j) estimates[j] = fits.median_fits[j].beta_hat;
    const uint64_t sel_seed = sub_seed({seed, kTagSelection, si});
    const auto selected =
        select_test_sets(estimates, config.n_groups, per_group, sel_seed);
    for (size_t j : selected) case_specs.push_back({si, slope, j});
  }

  // Independent work items; every case derives its own chain seeds so
  // scheduling cannot change results.
  std::vector<BenchmarkCase> cases(case_specs.size());
  std::mutex store_mutex;
  parallel_for(case_specs.size(), config.threads, [&](size_t ci) {
    const CaseSpec& spec = case_specs[ci];
    BenchmarkCase result;
    result.true_slope = spec.slope;
    result.slope_index = spec.slope_index;
    result.set_index = spec.set_index;
    result.bma_model_count = k - 1;

    const std::string key =
        benchmark_case_key(config.scenario, spec.slope, spec.set_index);
    if (store) {
      std::optional<std::vector<EvalRecord>> loaded;
      {
        std::lock_guard<std::mutex> lock(store_mutex);
        loaded = store->load(key);
      }
      if (loaded) {
        result.records = std::move(*loaded);
        cases[ci] = std::move(result);
        return;
      }
    }

    const Cohort diseased = with_disease(base, pool_y[spec.slope_index][spec.set_index]);
    for (Method m : config.methods) {
      EvalRecord rec;
      switch (m) {
        case Method::ConvMean: {
          const auto& f = pool_fits[spec.slope_index].mean_fits[spec.set_index];
          rec = evaluate(spec.slope, m, f.beta_hat, f.ci_low, f.ci_high, f.converged);
          break;
        }
        case Method::ConvMedian: {
          const auto& f = pool_fits[spec.slope_index].median_fits[spec.set_index];
          rec = evaluate(spec.slope, m, f.beta_hat, f.ci_low, f.ci_high, f.converged);
          break;
        }
        case Method::BmaOriginal:
        case Method::BmaCm:
        case Method::BmaCmd: {
          const DoseMatrix& source = m == Method::BmaOriginal ? raw
                                     : m == Method::BmaCm     ? cm
                                                              : cmd;
          // The generating vector is excluded from the model space.
          const DoseMatrix mat = drop_column(source, spec.set_index);
          const uint64_t case_seed =
              sub_seed({seed, kTagCase, spec.slope_index, spec.set_index,
                        static_cast<uint64_t>(m)});
          const BmaResult res =
              run_bma(diseased, mat, config.priors, config.samc,
                      config.bma_samples, config.bma_burn_in, config.sampler,
                      case_seed);
          // Posterior median: the ERR posterior is right-skewed, so the
          // median is the stable central estimate.
          rec = evaluate(spec.slope, m, res.beta_summary.median,
                         res.beta_summary.ci_low, res.beta_summary.ci_high);
          break;
        }
      }
      result.records.push_back(rec);
    }
    if (store) {
      std::lock_guard<std::mutex> lock(store_mutex);
      store->save(key, result);
    }
    cases[ci] = std::move(result);
  });
  report.cases = std::move(cases);

  // Aggregates per slope and overall, in method order.
  for (Method m : config.methods) {
    for (size_t si = 0; si < config.true_slopes.size(); ++si) {
      std::vector<const EvalRecord*> records;
      for (const auto& c : report.cases) {
        if (c.slope_index != si) continue;
        for (const auto& r : c.records)
          if (r.method == m) records.push_back(&r);
      }
      report.aggregates.push_back(aggregate_records(
          slope_label_of(config.true_slopes[si]), m, records));
    }
    std::vector<const EvalRecord*> records;
    for (const auto& c : report.cases)
      for (const auto& r : c.records)
        if (r.method == m) records.push_back(&r);
    report.aggregates.push_back(aggregate_records("overall", m, records));
  }
  // Overall full-pool inclusion rows.
  for (Method m : {Method::ConvMean, Method::ConvMedian}) {
    if (!wants(config.methods, m)) continue;
    double total = 0.0;
    size_t n = 0;
    for (const auto& fp : report.full_pool)
      if (fp.method == m && fp.slope_label != "overall") {
        total += fp.inclusion_pct;
        ++n;
      }
    if (n > 0) report.full_pool.push_back({"overall", m, total / static_cast<double>(n)});
  }
  return report;
}

SweepReport classical_error_sweep(const SweepConfig& config, uint64_t seed) {
  const BenchmarkConfig& bc = config.base;
  bc.validate();
  if (config.gsd_levels.empty()) throw std::invalid_argument("no GSD levels");
  for (double g : config.gsd_levels)
    if (!(g >= 1.0)) throw std::invalid_argument("GSD levels must be >= 1");
  if (config.n_sets == 0 || config.n_sets > bc.k_vectors)
    throw std::invalid_argument("bad sweep set count");
  if (!(config.true_slope > 0.0))
    throw std::invalid_argument("sweep slope must be positive");

  const uint64_t cohort_seed = sub_seed({seed, kTagCohort});
  const Cohort base =
      make_scenario_cohort(bc.n_subjects, bc.n_subgroups, cohort_seed);
  const auto dose_cfg = preset_config(bc.scenario, base.subgroup_labels());
  const uint64_t dose_seed = sub_seed({seed, kTagDose});
  const size_t k = bc.k_vectors;
  const DoseMatrix raw = generate_dose_matrix(base, dose_cfg, k, dose_seed);

  // Evenly spread generating columns.
  std::vector<size_t> set_indices;
  for (size_t r = 0; r < config.n_sets; ++r)
    set_indices.push_back(((2 * r + 1) * k) / (2 * config.n_sets));

  // Disease sets from the clean raw columns (the truth carries no injected
  // error; only the estimated doses do).
  std::vector<std::vector<int>> ys(config.n_sets);
  RiskParams true_params{bc.true_alpha, config.true_slope};
  for (size_t r = 0; r < config.n_sets; ++r) {
    const uint64_t dseed = sub_seed({seed, kTagSweepDisease, r});
    ys[r].resize(base.size());
    for (size_t i = 0; i < base.size(); ++i) {
      auto rng = RngStream::derive(dseed, StreamDomain::Disease, {i});
      const double p = disease_probability(
          true_params, base.subjects[i].covariates, raw.at(i, set_indices[r]));
      ys[r][i] = rng.uniform() < p ? 1 : 0;
    }
  }

  SweepReport report;
  const bool want_orig = wants(config.methods, Method::BmaOriginal);
  const bool want_cm = wants(config.methods, Method::BmaCm);
  const bool want_cmd = wants(config.methods, Method::BmaCmd);

  for (size_t li = 0; li < config.gsd_levels.size(); ++li) {
    const double gsd = config.gsd_levels[li];
    const ClassicalErrorSpec spec{gsd};
    const uint64_t cls_seed = sub_seed({seed, kTagSweepClassical, li});

    DoseMatrix raw_level, cm_level, cmd_level;
    if (want_orig)
      raw_level = gsd == 1.0 ? raw : inject_classical_error(raw, spec, cls_seed);
    if (want_cm)
      cm_level = generate_conditional_matrix(base, dose_cfg, k, bc.m_resamples,
                                             CollapseStat::Mean, dose_seed, spec,
                                             cls_seed);
    if (want_cmd)
      cmd_level = generate_conditional_matrix(base, dose_cfg, k, bc.m_resamples,
                                              CollapseStat::Median, dose_seed,
                                              spec, cls_seed);

    struct Item {
      Method method;
      size_t set_pos;
    };
    std::vector<Item> items;
    for (Method m : config.methods)
      for (size_t r = 0; r < config.n_sets; ++r) items.push_back({m, r});

    std::vector<SweepCaseRecord> recs(items.size());
    parallel_for(items.size(), bc.threads, [&](size_t ii) {
      const auto& item = items[ii];
      const DoseMatrix& source = item.method == Method::BmaOriginal ? raw_level
                                 : item.method == Method::BmaCm     ? cm_level
                                                                    : cmd_level;
      const size_t set_index = set_indices[item.set_pos];
      const DoseMatrix mat = drop_column(source, set_index);
      const Cohort diseased = with_disease(base, ys[item.set_pos]);
      // Chain seed shared across levels so only the injected error moves the
      // estimates between rows.
      const uint64_t case_seed = sub_seed({seed, kTagSweepCase, item.set_pos,
                                           static_cast<uint64_t>(item.method)});
      const BmaResult res =
          run_bma(diseased, mat, bc.priors, bc.samc, bc.bma_samples,
                  bc.bma_burn_in, bc.sampler, case_seed);
      recs[ii] = {gsd, item.method, set_index, res.beta_summary.median,
                  res.beta_summary.ci_low, res.beta_summary.ci_high};
    });
    for (auto& r : recs) report.records.push_back(r);

    for (Method m : config.methods) {
      double est = 0.0, lo = 0.0, hi = 0.0;
      size_t n = 0;
      for (const auto& r : recs)
        if (r.method == m) {
          est += r.estimate;
          lo += r.ci_low;
          hi += r.ci_high;
          ++n;
        }
      if (n > 0)
        report.rows.push_back({gsd, m, est / static_cast<double>(n),
                               lo / static_cast<double>(n),
                               hi / static_cast<double>(n)});
    }
  }
  return report;
}

}  // namespace dosebma
