#include "dosebma/cohort.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include "dosebma/numeric.hpp"

namespace dosebma {

bool Cohort::all_have_disease() const {
  return std::all_of(subjects.begin(), subjects.end(),
                     [](const Subject& s) { return s.disease.has_value(); });
}

std::vector<std::string> Cohort::subgroup_labels() const {
  std::vector<std::string> labels;
  std::unordered_set<std::string> seen;
  for (const auto& s : subjects) {
    if (seen.insert(s.subgroup).second) labels.push_back(s.subgroup);
  }
  return labels;
}

void Cohort::validate() const {
  if (subjects.empty()) throw std::invalid_argument("cohort is empty");
  std::unordered_set<std::string> ids;
  const size_t j = covariate_names.size();
  for (const auto& s : subjects) {
    if (!ids.insert(s.id).second)
      throw std::invalid_argument("duplicate subject id: " + s.id);
    if (s.covariates.size() != j)
      throw std::invalid_argument("subject " + s.id +
                                  " has wrong covariate count");
    if (s.subgroup.empty())
      throw std::invalid_argument("subject " + s.id + " has empty subgroup");
    if (s.disease && *s.disease != 0 && *s.disease != 1)
      throw std::invalid_argument("subject " + s.id +
                                  " has non-binary disease status");
  }
}

std::vector<double> DoseMatrix::column(size_t vector) const {
  std::vector<double> out(n_subjects);
  for (size_t i = 0; i < n_subjects; ++i) out[i] = at(i, vector);
  return out;
}

void DoseMatrix::validate() const {
  if (n_subjects == 0 || n_vectors == 0)
    throw std::invalid_argument("empty dose matrix");
  if (values.size() != n_subjects * n_vectors)
    throw std::invalid_argument("dose matrix storage size mismatch");
  for (double v : values)
    if (!(v >= 0.0)) throw std::invalid_argument("negative dose in matrix");
}

void DoseVector::validate() const {
  if (values.empty()) throw std::invalid_argument("empty dose vector");
  for (double v : values)
    if (!(v >= 0.0)) throw std::invalid_argument("negative dose in vector");
}

DoseVector collapse_to_vector(const DoseMatrix& matrix, CollapseStat stat) {
  if (matrix.n_subjects == 0 || matrix.n_vectors == 0)
    throw std::invalid_argument("empty dose matrix");
  DoseVector out;
  out.values.resize(matrix.n_subjects);
  for (size_t i = 0; i < matrix.n_subjects; ++i) {
    const auto row = matrix.row(i);
    if (stat == CollapseStat::Mean) {
      out.values[i] = mean_of(row);
    } else {
      out.values[i] = median_of(std::vector<double>(row.begin(), row.end()));
    }
  }
  out.label = std::string("per-subject ") +
              (stat == CollapseStat::Mean ? "mean" : "median") + " of " +
              std::to_string(matrix.n_vectors) + " realizations";
  return out;
}

namespace {

struct VectorStats {
  double minimum, maximum, median, mean, variance;
};

VectorStats stats_over_subjects(std::span<const double> doses) {
  VectorStats s{};
  s.minimum = *std::min_element(doses.begin(), doses.end());
  s.maximum = *std::max_element(doses.begin(), doses.end());
  s.median = median_of(std::vector<double>(doses.begin(), doses.end()));
  s.mean = mean_of(doses);
  s.variance = variance_of(doses);
  return s;
}

}  // namespace

DoseSummary summarize_matrix(const DoseMatrix& matrix) {
  if (matrix.n_subjects == 0 || matrix.n_vectors == 0)
    throw std::invalid_argument("empty dose matrix");

  const size_t k = matrix.n_vectors;
  std::vector<VectorStats> per_vector(k);
  for (size_t v = 0; v < k; ++v)
    per_vector[v] = stats_over_subjects(matrix.column(v));

  const auto mean_vec = collapse_to_vector(matrix, CollapseStat::Mean);
  const auto median_vec = collapse_to_vector(matrix, CollapseStat::Median);
  const VectorStats mean_stats = stats_over_subjects(mean_vec.values);
  const VectorStats median_stats = stats_over_subjects(median_vec.values);

  DoseSummary summary;
  summary.n_subjects = matrix.n_subjects;
  summary.n_vectors = k;

  const auto make_row = [&](const std::string& name, auto member) {
    std::vector<double> xs(k);
    for (size_t v = 0; v < k; ++v) xs[v] = per_vector[v].*member;
    std::sort(xs.begin(), xs.end());
    DoseSummaryRow row;
    row.statistic = name;
    row.mean_vector_value = mean_stats.*member;
    row.median_vector_value = median_stats.*member;
    row.ci_low = quantile_sorted(xs, 0.025);
    row.ci_high = quantile_sorted(xs, 0.975);
    return row;
  };

  summary.rows.push_back(make_row("minimum", &VectorStats::minimum));
  summary.rows.push_back(make_row("maximum", &VectorStats::maximum));
  summary.rows.push_back(make_row("median", &VectorStats::median));
  summary.rows.push_back(make_row("mean", &VectorStats::mean));
  summary.rows.push_back(make_row("variance", &VectorStats::variance));
  return summary;
}

}  // namespace dosebma
