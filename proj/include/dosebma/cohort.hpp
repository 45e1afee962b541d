#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dosebma {

struct Subject {
  std::string id;
  std::vector<double> covariates;  // fixed length J across the cohort
  std::string subgroup;            // shared-error group label
  std::optional<int> disease;      // 0/1 when known
};

// Immutable after construction; validate() enforces the invariants.
struct Cohort {
  std::vector<Subject> subjects;
  std::vector<std::string> covariate_names;  // length J

  size_t size() const { return subjects.size(); }
  size_t n_covariates() const { return covariate_names.size(); }

  bool all_have_disease() const;
  // Distinct subgroup labels in first-appearance order.
  std::vector<std::string> subgroup_labels() const;

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

enum class MatrixKind { RawRealizations, ConditionalMean, ConditionalMedian };

enum class CollapseStat { Mean, Median };

// N subjects x K realizations of nonnegative dose in Gy, row-major.
// Row order matches the cohort subject order.
struct DoseMatrix {
  size_t n_subjects = 0;
  size_t n_vectors = 0;
  std::vector<double> values;  // n_subjects * n_vectors
  MatrixKind kind = MatrixKind::RawRealizations;
  std::string provenance;  // generator config digest + seed

  double at(size_t subject, size_t vector) const {
    return values[subject * n_vectors + vector];
  }
  double& at(size_t subject, size_t vector) {
    return values[subject * n_vectors + vector];
  }
  std::span<const double> row(size_t subject) const {
    return {values.data() + subject * n_vectors, n_vectors};
  }
  std::vector<double> column(size_t vector) const;

  void validate() const;
};

struct DoseVector {
  std::vector<double> values;  // length N, Gy
  std::string label;

  void validate() const;
};

// One column collapsed per subject; even-count median averages the two
// middle order statistics.
DoseVector collapse_to_vector(const DoseMatrix& matrix, CollapseStat stat);

// Per-cohort-vector summary statistics in the layout of the dose-comparison
// table: for each statistic, the value on the collapsed mean and median
// vectors plus the 2.5th/97.5th percentile across the K vectors.
struct DoseSummaryRow {
  std::string statistic;     // "minimum", "maximum", "median", "mean", "variance"
  double mean_vector_value;  // statistic of the collapsed per-subject-mean vector
  double median_vector_value;
  double ci_low;   // 2.5th percentile of the statistic across vectors
  double ci_high;  // 97.5th percentile
};

struct DoseSummary {
  size_t n_subjects = 0;
  size_t n_vectors = 0;
  std::vector<DoseSummaryRow> rows;  // min, max, median, mean, variance
};

DoseSummary summarize_matrix(const DoseMatrix& matrix);

}  // namespace dosebma
