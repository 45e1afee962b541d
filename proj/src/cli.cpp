#include "dosebma/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "dosebma/config.hpp"
#include "dosebma/csv.hpp"
#include "dosebma/harness.hpp"
#include "dosebma/manifest.hpp"

namespace dosebma::cli {

namespace fs = std::filesystem;

namespace {

struct GlobalOpts {
  uint64_t seed = 0;
  std::string config_path;
  std::string out_dir;
  int threads = 0;
  bool paper_scale = false;
};

Config load_config_or_default(const GlobalOpts& g) {
  Config cfg = g.config_path.empty() ? Config() : Config::load(g.config_path);
  if (g.threads > 0) cfg.set("harness.threads", std::to_string(g.threads));
  return cfg;
}

fs::path require_out_dir(const GlobalOpts& g) {
  if (g.out_dir.empty())
    throw std::runtime_error("this command needs --out <dir>");
  fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

RunManifest start_manifest(const std::string& command, const Config& cfg,
                           const GlobalOpts& g) {
  RunManifest m;
  m.command = command;
  m.config_digest = digest_of_bytes(cfg.dump());
  m.master_seed = g.seed;
  m.version = kVersion;
  m.started_utc = utc_now_iso8601();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& dir) {
  m.finished_utc = utc_now_iso8601();
  m.write(dir / "manifest");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create " + path.string());
  out << kFormatVersionLine << "\n";
  return out;
}

std::string bool_str(bool v) { return v ? "1" : "0"; }

Cohort load_or_make_cohort(const Config& cfg, const std::string& cohort_path,
                           uint64_t seed) {
  if (!cohort_path.empty()) return read_cohort_csv(cohort_path);
  const auto n = static_cast<size_t>(cfg.get_long("cohort.n"));
  const auto groups = static_cast<size_t>(cfg.get_long("cohort.subgroups"));
  return make_scenario_cohort(n, groups, seed);
}

std::vector<std::string> ids_of(const Cohort& cohort) {
  std::vector<std::string> ids;
  ids.reserve(cohort.size());
  for (const auto& s : cohort.subjects) ids.push_back(s.id);
  return ids;
}

void write_freq_result(const fs::path& path, const FreqFitResult& fit,
                       const std::vector<std::string>& covariate_names) {
  auto out = open_out(path);
  out << "field,value\n";
  out << "beta_hat," << format_double(fit.beta_hat) << "\n";
  out << "ci_low," << format_double(fit.ci_low) << "\n";
  out << "ci_high," << format_double(fit.ci_high) << "\n";
  out << "loglik," << format_double(fit.loglik) << "\n";
  out << "wald_se," << format_double(fit.wald_se) << "\n";
  out << "converged," << bool_str(fit.converged) << "\n";
  out << "at_boundary," << bool_str(fit.at_boundary) << "\n";
  out << "separation," << bool_str(fit.separation) << "\n";
  out << "ci_unbounded," << bool_str(fit.ci_unbounded) << "\n";
  out << "n_iter," << fit.n_iter << "\n";
  for (size_t j = 0; j < covariate_names.size(); ++j)
    out << "alpha_" << covariate_names[j] << ","
        << format_double(fit.params.alpha[j]) << "\n";
}

void write_bma_result(const fs::path& dir, const BmaResult& res,
                      const std::vector<std::string>& covariate_names,
                      RunManifest& manifest) {
  {
    auto out = open_out(dir / "result.csv");
    out << "param,mean,median,ci_low,ci_high\n";
    const auto row = [&](const std::string& name, const ParamSummary& s) {
      out << name << "," << format_double(s.mean) << "," << format_double(s.median)
          << "," << format_double(s.ci_low) << "," << format_double(s.ci_high)
          << "\n";
    };
    row("beta", res.beta_summary);
    for (size_t j = 0; j < res.alpha_summary.size(); ++j)
      row("alpha_" + covariate_names[j], res.alpha_summary[j]);
  }
  {
    auto out = open_out(dir / "weights.csv");
    out << "vector,weight\n";
    for (size_t k = 0; k < res.weights.size(); ++k)
      out << vector_label(k) << "," << format_double(res.weights[k]) << "\n";
  }
  {
    auto out = open_out(dir / "diagnostics.csv");
    out << "field,value\n";
    out << "within_acceptance," << format_double(res.diagnostics.within_acceptance)
        << "\n";
    out << "jump_acceptance," << format_double(res.diagnostics.jump_acceptance)
        << "\n";
    out << "flat_histogram_deviation,"
        << format_double(res.diagnostics.flat_histogram_deviation) << "\n";
    out << "flat_histogram_warning,"
        << bool_str(res.diagnostics.flat_histogram_warning) << "\n";
    out << "models_visited," << res.diagnostics.models_visited_full << "\n";
    out << "mcse_beta," << format_double(res.diagnostics.mcse_beta) << "\n";
    for (size_t k = 0; k < res.diagnostics.visit_counts.size(); ++k)
      out << "visits_" << vector_label(k) << ","
          << res.diagnostics.visit_counts[k] << "\n";
  }
  manifest.add_output(dir / "result.csv");
  manifest.add_output(dir / "weights.csv");
  manifest.add_output(dir / "diagnostics.csv");
}

std::string eval_record_header() {
  return "scenario,true_slope,set_index,method,estimate,ci_low,ci_high,included,"
         "relative_bias,half_width,relative_ucl,relative_ucl_defined,converged";
}

std::string eval_record_row(const std::string& scenario, double slope,
                            size_t set_index, const EvalRecord& r) {
  std::ostringstream os;
  os << scenario << "," << format_double(slope) << "," << set_index << ","
     << method_name(r.method) << "," << format_double(r.estimate) << ","
     << format_double(r.ci_low) << "," << format_double(r.ci_high) << ","
     << bool_str(r.included) << "," << format_double(r.relative_bias) << ","
     << format_double(r.half_width) << ","
     << (r.relative_ucl_defined ? format_double(r.relative_ucl) : "") << ","
     << bool_str(r.relative_ucl_defined) << "," << bool_str(r.converged);
  return os.str();
}

EvalRecord parse_eval_record(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  f.push_back(cur);
  if (f.size() != 13) throw std::runtime_error("bad eval record: " + line);
  EvalRecord r;
  r.method = parse_method(f[3]);
  r.estimate = parse_double(f[4], "eval record");
  r.ci_low = parse_double(f[5], "eval record");
  r.ci_high = parse_double(f[6], "eval record");
  r.included = f[7] == "1";
  r.relative_bias = parse_double(f[8], "eval record");
  r.half_width = parse_double(f[9], "eval record");
  r.relative_ucl_defined = f[11] == "1";
  r.relative_ucl = r.relative_ucl_defined ? parse_double(f[10], "eval record")
                                          : std::numeric_limits<double>::quiet_NaN();
  r.converged = f[12] == "1";
  return r;
}

// One small CSV per completed benchmark case; reloaded to resume a run.
class FileCaseStore : public PartialStore {
 public:
  explicit FileCaseStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  std::optional<std::vector<EvalRecord>> load(const std::string& key) override {
    const fs::path path = dir_ / (key + ".csv");
    if (!fs::exists(path)) return std::nullopt;
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::vector<EvalRecord> records;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#' || line.rfind("scenario,", 0) == 0)
        continue;
      records.push_back(parse_eval_record(line));
    }
    if (records.empty()) return std::nullopt;
    return records;
  }

  void save(const std::string& key, const BenchmarkCase& c) override {
    const fs::path path = dir_ / (key + ".csv");
    std::ofstream out(path);
    out << kFormatVersionLine << "\n" << eval_record_header() << "\n";
    for (const auto& r : c.records)
      out << eval_record_row(scenario_, c.true_slope, c.set_index, r) << "\n";
  }

  void set_scenario(const std::string& s) { scenario_ = s; }

 private:
  fs::path dir_;
  std::string scenario_ = "unknown";
};

void write_benchmark_reports(const fs::path& dir,
                             const std::vector<BenchmarkReport>& reports,
                             const std::vector<Method>& methods,
                             RunManifest& manifest) {
  {
    auto out = open_out(dir / "eval_records.csv");
    out << eval_record_header() << "\n";
    for (const auto& rep : reports) {
      const std::string scen = preset_name(rep.scenario);
      for (const auto& c : rep.cases)
        for (const auto& r : c.records)
          out << eval_record_row(scen, c.true_slope, c.set_index, r) << "\n";
    }
  }
  {
    auto out = open_out(dir / "table2_analog.csv");
    out << "scenario,true_slope";
    for (Method m : methods) out << "," << method_name(m);
    out << ",conv-mean-full-pool,conv-median-full-pool\n";
    for (const auto& rep : reports) {
      const std::string scen = preset_name(rep.scenario);
      std::vector<std::string> labels;
      for (const auto& a : rep.aggregates) {
        if (std::find(labels.begin(), labels.end(), a.slope_label) == labels.end())
          labels.push_back(a.slope_label);
      }
      for (const auto& label : labels) {
        out << scen << "," << label;
        for (Method m : methods) {
          double v = 0.0;
          for (const auto& a : rep.aggregates)
            if (a.method == m && a.slope_label == label) v = a.inclusion_pct;
          out << "," << format_double(v);
        }
        for (Method m : {Method::ConvMean, Method::ConvMedian}) {
          double v = -1.0;
          for (const auto& fp : rep.full_pool)
            if (fp.method == m && fp.slope_label == label) v = fp.inclusion_pct;
          out << "," << (v >= 0.0 ? format_double(v) : std::string());
        }
        out << "\n";
      }
    }
  }
  {
    auto out = open_out(dir / "table3_analog.csv");
    out << "scenario,metric,true_slope";
    for (Method m : methods) out << "," << method_name(m);
    out << "\n";
    const std::vector<std::pair<std::string, double MethodAggregate::*>> metrics = {
        {"relative_bias", &MethodAggregate::mean_relative_bias},
        {"half_width", &MethodAggregate::median_half_width},
        {"relative_ucl", &MethodAggregate::median_relative_ucl},
    };
    for (const auto& rep : reports) {
      const std::string scen = preset_name(rep.scenario);
      std::vector<std::string> labels;
      for (const auto& a : rep.aggregates)
        if (std::find(labels.begin(), labels.end(), a.slope_label) == labels.end())
          labels.push_back(a.slope_label);
      for (const auto& [metric_name, member] : metrics) {
        for (const auto& label : labels) {
          out << scen << "," << metric_name << "," << label;
          for (Method m : methods) {
            double v = 0.0;
            for (const auto& a : rep.aggregates)
              if (a.method == m && a.slope_label == label) v = a.*member;
            out << "," << format_double(v);
          }
          out << "\n";
        }
      }
    }
  }
  manifest.add_output(dir / "eval_records.csv");
  manifest.add_output(dir / "table2_analog.csv");
  manifest.add_output(dir / "table3_analog.csv");
}

int cmd_simulate_doses(const GlobalOpts& g, const std::string& cohort_path,
                       const std::string& kind, bool binary) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("simulate-doses", cfg, g);

  const uint64_t cohort_seed = RngStream({g.seed, 0xC0}).next_u64();
  const Cohort cohort = load_or_make_cohort(cfg, cohort_path, cohort_seed);
  if (!cohort_path.empty()) manifest.add_input(cohort_path);
  const auto dose_cfg = cfg.twodmc(cohort.subgroup_labels());
  const auto k = static_cast<size_t>(cfg.get_long("twodmc.k"));
  const auto m = static_cast<size_t>(cfg.get_long("twodmc.m"));
  const uint64_t dose_seed = RngStream({g.seed, 0xD0}).next_u64();

  DoseMatrix matrix;
  if (kind == "raw") {
    matrix = generate_dose_matrix(cohort, dose_cfg, k, dose_seed);
  } else if (kind == "conditional-mean") {
    matrix = generate_conditional_matrix(cohort, dose_cfg, k, m,
                                         CollapseStat::Mean, dose_seed);
  } else if (kind == "conditional-median") {
    matrix = generate_conditional_matrix(cohort, dose_cfg, k, m,
                                         CollapseStat::Median, dose_seed);
  } else {
    throw std::runtime_error("unknown matrix kind: " + kind);
  }

  if (cohort_path.empty()) {
    write_cohort_csv(dir / "cohort.csv", cohort);
    manifest.add_output(dir / "cohort.csv");
  }
  const fs::path dose_path = dir / (binary ? "doses.bin" : "doses.csv");
  if (binary)
    write_matrix_binary(dose_path, matrix);
  else
    write_matrix_csv(dose_path, matrix, ids_of(cohort));
  manifest.add_output(dose_path);

  // Sidecar generation record: config digest, seed, K, M.
  {
    auto out = open_out(dir / "doses.manifest");
    out << "kind = " << kind << "\n";
    out << "config_digest = " << digest_of_bytes(dose_cfg.digest_text()) << "\n";
    out << "seed = " << dose_seed << "\n";
    out << "k = " << k << "\n";
    out << "m = " << m << "\n";
    out << "provenance = " << matrix.provenance << "\n";
  }
  manifest.add_output(dir / "doses.manifest");
  finish_manifest(manifest, dir);
  return 0;
}

int cmd_simulate_disease(const GlobalOpts& g, const std::string& cohort_path,
                         const std::string& matrix_path, long column,
                         double slope) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("simulate-disease", cfg, g);

  const uint64_t cohort_seed = RngStream({g.seed, 0xC0}).next_u64();
  const Cohort cohort = load_or_make_cohort(cfg, cohort_path, cohort_seed);
  if (!cohort_path.empty()) manifest.add_input(cohort_path);
  const auto mf = read_matrix_any(matrix_path);
  manifest.add_input(matrix_path);
  if (column < 0 || static_cast<size_t>(column) >= mf.matrix.n_vectors)
    throw std::runtime_error("--column out of range");

  TrueScenario scen;
  scen.true_beta = slope;
  scen.true_alpha = cfg.get_double_list("harness.true_alpha");
  if (scen.true_alpha.size() != cohort.n_covariates())
    throw std::runtime_error("harness.true_alpha length does not match cohort");
  scen.true_vector_index = static_cast<size_t>(column);

  DoseVector true_dose;
  true_dose.values = mf.matrix.column(scen.true_vector_index);
  true_dose.label = "matrix column " + std::to_string(column);
  const uint64_t dseed = RngStream({g.seed, 0xD15}).next_u64();
  const Cohort diseased = simulate_disease(cohort, true_dose, scen, dseed);
  write_cohort_csv(dir / "cohort.csv", diseased);
  manifest.add_output(dir / "cohort.csv");
  finish_manifest(manifest, dir);
  return 0;
}

int cmd_fit_conventional(const GlobalOpts& g, const std::string& cohort_path,
                         const std::string& matrix_path, const std::string& stat) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("fit-conventional", cfg, g);

  const Cohort cohort = read_cohort_csv(cohort_path);
  manifest.add_input(cohort_path);
  const auto mf = read_matrix_any(matrix_path);
  manifest.add_input(matrix_path);

  DoseVector dose;
  if (mf.matrix.n_vectors == 1) {
    dose.values = mf.matrix.column(0);
    dose.label = "single vector";
  } else {
    dose = collapse_to_vector(mf.matrix,
                              stat == "mean" ? CollapseStat::Mean
                                             : CollapseStat::Median);
  }

  const FreqFitResult fit = fit_ml(cohort, dose);
  write_freq_result(dir / "result.csv", fit, cohort.covariate_names);
  manifest.add_output(dir / "result.csv");
  finish_manifest(manifest, dir);
  if (!fit.converged) {
    std::cerr << "fit did not converge"
              << (fit.separation ? " (separation detected)" : "") << "\n";
    return 3;
  }
  return 0;
}

int cmd_fit_bma(const GlobalOpts& g, const std::string& cohort_path,
                const std::string& matrix_path, bool with_trace) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("fit-bma", cfg, g);

  const Cohort cohort = read_cohort_csv(cohort_path);
  manifest.add_input(cohort_path);
  const auto mf = read_matrix_any(matrix_path);
  manifest.add_input(matrix_path);

  const PriorSpec priors = cfg.priors();
  const SamcConfig samc = cfg.samc();
  const long n_samples = cfg.get_long("bma.n_samples");
  const long burn_in = cfg.get_long("bma.burn_in");
  const SamplerKind sampler = cfg.get("bma.sampler") == "plain-mh"
                                  ? SamplerKind::PlainMh
                                  : SamplerKind::Samc;

  std::vector<ChainTraceRow> trace;
  const uint64_t chain_seed = RngStream({g.seed, 0xB}).next_u64();
  const BmaResult res =
      run_bma(cohort, mf.matrix, priors, samc, n_samples, burn_in, sampler,
              chain_seed, with_trace ? &trace : nullptr);

  write_bma_result(dir, res, cohort.covariate_names, manifest);
  if (with_trace) {
    auto out = open_out(dir / "trace.csv");
    out << "t,gamma,beta";
    for (const auto& name : cohort.covariate_names) out << ",alpha_" << name;
    out << ",energy\n";
    for (const auto& row : trace) {
      out << row.t << "," << vector_label(row.gamma) << ","
          << format_double(row.beta);
      for (double a : row.alpha) out << "," << format_double(a);
      out << "," << format_double(row.energy) << "\n";
    }
    manifest.add_output(dir / "trace.csv");
  }
  finish_manifest(manifest, dir);
  if (res.diagnostics.flat_histogram_warning)
    std::cerr << "warning: flat-histogram deviation "
              << res.diagnostics.flat_histogram_deviation << " exceeds threshold\n";
  return 0;
}

int cmd_benchmark(const GlobalOpts& g, const std::string& scenario_arg) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("benchmark", cfg, g);

  std::vector<ScenarioPreset> scenarios;
  if (scenario_arg == "both") {
    scenarios = {ScenarioPreset::External, ScenarioPreset::Total};
  } else {
    scenarios = {parse_preset(scenario_arg)};
  }

  BenchmarkConfig base = cfg.benchmark(g.paper_scale);
  FileCaseStore store(dir / "partial");
  std::vector<BenchmarkReport> reports;
  for (ScenarioPreset scen : scenarios) {
    BenchmarkConfig bc = base;
    bc.scenario = scen;
    store.set_scenario(preset_name(scen));
    reports.push_back(run_benchmark(bc, g.seed, &store));
  }
  write_benchmark_reports(dir, reports, base.methods, manifest);
  finish_manifest(manifest, dir);
  return 0;
}

int cmd_sweep(const GlobalOpts& g, const std::string& gsd_arg) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("sweep", cfg, g);

  SweepConfig sc = cfg.sweep(g.paper_scale);
  if (!gsd_arg.empty()) {
    sc.gsd_levels.clear();
    std::stringstream ss(gsd_arg);
    std::string item;
    while (std::getline(ss, item, ','))
      sc.gsd_levels.push_back(parse_double(item, "--gsd"));
  }
  const SweepReport report = classical_error_sweep(sc, g.seed);
  {
    auto out = open_out(dir / "sweep.csv");
    out << "gsd,method,estimate,ci_low,ci_high\n";
    for (const auto& row : report.rows)
      out << format_double(row.gsd) << "," << method_name(row.method) << ","
          << format_double(row.estimate) << "," << format_double(row.ci_low)
          << "," << format_double(row.ci_high) << "\n";
  }
  {
    auto out = open_out(dir / "sweep_records.csv");
    out << "gsd,method,set_index,estimate,ci_low,ci_high\n";
    for (const auto& r : report.records)
      out << format_double(r.gsd) << "," << method_name(r.method) << ","
          << r.set_index << "," << format_double(r.estimate) << ","
          << format_double(r.ci_low) << "," << format_double(r.ci_high) << "\n";
  }
  manifest.add_output(dir / "sweep.csv");
  manifest.add_output(dir / "sweep_records.csv");
  finish_manifest(manifest, dir);
  return 0;
}

int cmd_summarize(const GlobalOpts& g, const std::vector<std::string>& matrices) {
  const Config cfg = load_config_or_default(g);
  const fs::path dir = require_out_dir(g);
  RunManifest manifest = start_manifest("summarize", cfg, g);

  auto out = open_out(dir / "summary.csv");
  out << "source,statistic,mean_vector,median_vector,ci_low,ci_high\n";
  for (const auto& path : matrices) {
    const auto mf = read_matrix_any(path);
    manifest.add_input(path);
    const DoseSummary summary = summarize_matrix(mf.matrix);
    const std::string source = fs::path(path).stem().string();
    for (const auto& row : summary.rows)
      out << source << "," << row.statistic << ","
          << format_double(row.mean_vector_value) << ","
          << format_double(row.median_vector_value) << ","
          << format_double(row.ci_low) << "," << format_double(row.ci_high)
          << "\n";
  }
  out.close();
  manifest.add_output(dir / "summary.csv");
  finish_manifest(manifest, dir);
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Dose-response estimation under shared and unshared dose "
               "uncertainty: conventional regression and Bayesian model "
               "averaging over multiple dose-vector realizations"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed; all randomness derives from it");
  app.add_option("--config", g.config_path, "configuration file");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
  app.add_flag("--paper-scale", g.paper_scale,
               "full-size study (N=2376, K=5000, 30 sets, 40k+10k iterations)");

  auto* sim_doses = app.add_subcommand(
      "simulate-doses", "generate cohort dose-vector realizations");
  std::string sd_cohort, sd_kind = "raw";
  bool sd_binary = false;
  sim_doses->add_option("--cohort", sd_cohort,
                        "cohort CSV (synthesized when omitted)");
  sim_doses->add_option("--kind", sd_kind,
                        "raw | conditional-mean | conditional-median");
  sim_doses->add_flag("--binary", sd_binary, "write the compact binary format");

  auto* sim_disease = app.add_subcommand(
      "simulate-disease", "draw disease status from a true dose vector");
  std::string dd_cohort, dd_matrix;
  long dd_column = 0;
  double dd_slope = 12.0;
  sim_disease->add_option("--cohort", dd_cohort, "cohort CSV");
  sim_disease->add_option("--matrix", dd_matrix, "dose matrix file")->required();
  sim_disease->add_option("--column", dd_column, "generating column index (0-based)");
  sim_disease->add_option("--slope", dd_slope, "true ERR/Gy slope");

  auto* fit_conv = app.add_subcommand(
      "fit-conventional", "single-vector constrained ML with profile CI");
  std::string fc_cohort, fc_matrix, fc_stat = "median";
  fit_conv->add_option("--cohort", fc_cohort, "cohort CSV with disease status")
      ->required();
  fit_conv->add_option("--doses", fc_matrix, "dose matrix or single-vector file")
      ->required();
  fit_conv->add_option("--stat", fc_stat, "collapse statistic: mean | median");

  auto* fit_bma = app.add_subcommand(
      "fit-bma", "Bayesian model averaging over the dose vectors");
  std::string fb_cohort, fb_matrix;
  bool fb_trace = false;
  fit_bma->add_option("--cohort", fb_cohort, "cohort CSV with disease status")
      ->required();
  fit_bma->add_option("--matrix", fb_matrix, "dose matrix file")->required();
  fit_bma->add_flag("--trace", fb_trace, "dump the chain trace CSV");

  auto* benchmark = app.add_subcommand(
      "benchmark", "simulation study comparing all methods");
  std::string bm_scenario = "both";
  benchmark->add_option("--scenario", bm_scenario, "external | total | both");

  auto* sweep = app.add_subcommand(
      "sweep", "classical-error sweep over the BMA variants");
  std::string sw_gsd;
  sweep->add_option("--gsd", sw_gsd, "comma-separated GSD levels");

  auto* summarize = app.add_subcommand(
      "summarize", "per-statistic dispersion summary of dose matrices");
  std::vector<std::string> su_matrices;
  summarize->add_option("matrices", su_matrices, "dose matrix files")
      ->required()
      ->expected(1, 3);

  std::vector<std::string> argv_copy = args;
  std::vector<char*> argv;
  argv.reserve(argv_copy.size());
  for (auto& a : argv_copy) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (sim_doses->parsed())
      return cmd_simulate_doses(g, sd_cohort, sd_kind, sd_binary);
    if (sim_disease->parsed())
      return cmd_simulate_disease(g, dd_cohort, dd_matrix, dd_column, dd_slope);
    if (fit_conv->parsed())
      return cmd_fit_conventional(g, fc_cohort, fc_matrix, fc_stat);
    if (fit_bma->parsed()) return cmd_fit_bma(g, fb_cohort, fb_matrix, fb_trace);
    if (benchmark->parsed()) return cmd_benchmark(g, bm_scenario);
    if (sweep->parsed()) return cmd_sweep(g, sw_gsd);
    if (summarize->parsed()) return cmd_summarize(g, su_matrices);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "no subcommand given\n";
  return 1;
}

}  // namespace dosebma::cli
