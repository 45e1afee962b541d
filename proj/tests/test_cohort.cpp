#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "dosebma/cohort.hpp"
#include "dosebma/csv.hpp"
#include "dosebma/numeric.hpp"
#include "dosebma/rng.hpp"

using namespace dosebma;

namespace {

DoseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  DoseMatrix m;
  m.n_subjects = rows.size();
  m.n_vectors = rows.front().size();
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

Cohort tiny_cohort(size_t n) {
  Cohort c;
  c.covariate_names = {"x1", "x2"};
  for (size_t i = 0; i < n; ++i) {
    Subject s;
    s.id = "s" + std::to_string(i + 1);
    s.subgroup = i % 2 == 0 ? "a" : "b";
    s.covariates = {static_cast<double>(i), 1.0};
    s.disease = static_cast<int>(i % 2);
    c.subjects.push_back(s);
  }
  return c;
}

}  // namespace

TEST_CASE("collapse: constant row mean") {
  const auto m = from_rows({{1.0, 1.0, 1.0}});
  CHECK(collapse_to_vector(m, CollapseStat::Mean).values[0] == 1.0);
}

TEST_CASE("collapse: even-count median averages the middle pair") {
  const auto m = from_rows({{1.0, 2.0, 4.0, 8.0}});
  CHECK(collapse_to_vector(m, CollapseStat::Median).values[0] == 3.0);
}

TEST_CASE("collapse: empty matrix is rejected") {
  DoseMatrix empty;
  CHECK_THROWS_WITH_AS(collapse_to_vector(empty, CollapseStat::Mean),
                       "empty dose matrix", std::invalid_argument);
}

TEST_CASE("collapse: lognormal row matches closed-form moments") {
  // GM 0.1, GSD 3: mean = 0.1*exp(ln(3)^2/2) ~ 0.18284, median ~ 0.1.
  const size_t k = 10000;
  DoseMatrix m;
  m.n_subjects = 1;
  m.n_vectors = k;
  auto rng = RngStream(99);
  for (size_t i = 0; i < k; ++i) m.values.push_back(rng.lognormal(0.1, 3.0));

  const double ln3 = std::log(3.0);
  const double expected_mean = 0.1 * std::exp(ln3 * ln3 / 2.0);
  const double mean = collapse_to_vector(m, CollapseStat::Mean).values[0];
  const double median = collapse_to_vector(m, CollapseStat::Median).values[0];
  CHECK(mean == doctest::Approx(expected_mean).epsilon(0.05));
  CHECK(median == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("collapse: column permutation leaves the mean unchanged") {
  auto rng = RngStream(5);
  std::vector<double> row(17);
  for (auto& v : row) v = rng.uniform() * 10.0;
  const auto m1 = from_rows({row});
  std::vector<double> shuffled = row;
  for (size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
  const auto m2 = from_rows({shuffled});
  CHECK(collapse_to_vector(m1, CollapseStat::Mean).values[0] ==
        doctest::Approx(collapse_to_vector(m2, CollapseStat::Mean).values[0])
            .epsilon(1e-12));
}

TEST_CASE("right-skewed rows: mean dominates median") {
  // Lognormal with GSD > 1 and many realizations.
  const size_t n = 40, k = 2000;
  DoseMatrix m;
  m.n_subjects = n;
  m.n_vectors = k;
  m.values.resize(n * k);
  for (size_t i = 0; i < n; ++i) {
    auto rng = RngStream::derive(1234, StreamDomain::UnsharedFactor, {i});
    for (size_t v = 0; v < k; ++v) m.at(i, v) = rng.lognormal(0.2, 2.5);
  }
  const auto mean_vec = collapse_to_vector(m, CollapseStat::Mean);
  const auto median_vec = collapse_to_vector(m, CollapseStat::Median);
  for (size_t i = 0; i < n; ++i) CHECK(mean_vec.values[i] > median_vec.values[i]);
}

TEST_CASE("summarize: constant matrix gives degenerate intervals") {
  const auto m = from_rows({{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}});
  const auto s = summarize_matrix(m);
  for (const auto& row : s.rows) {
    if (row.statistic == "variance") {
      CHECK(row.ci_low == 0.0);
      CHECK(row.ci_high == 0.0);
    } else {
      CHECK(row.ci_low == 0.5);
      CHECK(row.ci_high == 0.5);
    }
  }
}

TEST_CASE("summarize: symmetric 2x2 example") {
  const auto m = from_rows({{1.0, 3.0}, {3.0, 1.0}});
  const auto s = summarize_matrix(m);
  const auto& mean_row = s.rows[3];
  REQUIRE(mean_row.statistic == "mean");
  CHECK(mean_row.ci_low == 2.0);
  CHECK(mean_row.ci_high == 2.0);
}

TEST_CASE("summarize: single column collapses the interval") {
  const auto m = from_rows({{1.0}, {2.0}, {5.0}});
  const auto s = summarize_matrix(m);
  for (const auto& row : s.rows) CHECK(row.ci_low == row.ci_high);
}

TEST_CASE("summarize: recovers generator dispersion") {
  // All rows share GM 0.2 / GSD 2; the per-vector cohort median across many
  // subjects concentrates near the GM.
  const size_t n = 400, k = 50;
  DoseMatrix m;
  m.n_subjects = n;
  m.n_vectors = k;
  m.values.resize(n * k);
  for (size_t i = 0; i < n; ++i) {
    auto rng = RngStream::derive(77, StreamDomain::UnsharedFactor, {i});
    for (size_t v = 0; v < k; ++v) m.at(i, v) = rng.lognormal(0.2, 2.0);
  }
  const auto s = summarize_matrix(m);
  const auto& median_row = s.rows[2];
  REQUIRE(median_row.statistic == "median");
  CHECK(median_row.ci_low == doctest::Approx(0.2).epsilon(0.15));
  CHECK(median_row.ci_high == doctest::Approx(0.2).epsilon(0.15));
  const auto& mean_row = s.rows[3];
  const double expected_mean = 0.2 * std::exp(std::log(2.0) * std::log(2.0) / 2.0);
  CHECK(mean_row.mean_vector_value == doctest::Approx(expected_mean).epsilon(0.1));
}

TEST_CASE("cohort validation") {
  Cohort c = tiny_cohort(4);
  CHECK_NOTHROW(c.validate());
  c.subjects[1].id = c.subjects[0].id;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  Cohort d = tiny_cohort(4);
  d.subjects[2].disease = 3;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);

  Cohort e = tiny_cohort(3);
  e.subjects[0].covariates.push_back(1.0);
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
}

TEST_CASE("matrix validation rejects negative doses") {
  auto m = from_rows({{1.0, -0.5}});
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("cohort CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "dosebma_test_cohort";
  std::filesystem::create_directories(dir);
  Cohort c = tiny_cohort(5);
  c.subjects[3].disease.reset();  // blank disease field
  write_cohort_csv(dir / "cohort.csv", c);
  const Cohort back = read_cohort_csv(dir / "cohort.csv");
  REQUIRE(back.size() == c.size());
  CHECK(back.covariate_names == c.covariate_names);
  for (size_t i = 0; i < c.size(); ++i) {
    CHECK(back.subjects[i].id == c.subjects[i].id);
    CHECK(back.subjects[i].subgroup == c.subjects[i].subgroup);
    CHECK(back.subjects[i].disease == c.subjects[i].disease);
    CHECK(back.subjects[i].covariates == c.subjects[i].covariates);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("matrix CSV and binary round trips are exact") {
  const auto dir = std::filesystem::temp_directory_path() / "dosebma_test_matrix";
  std::filesystem::create_directories(dir);
  auto rng = RngStream(3);
  DoseMatrix m;
  m.n_subjects = 7;
  m.n_vectors = 4;
  for (size_t i = 0; i < 28; ++i) m.values.push_back(rng.lognormal(0.3, 2.7));
  std::vector<std::string> ids;
  for (size_t i = 0; i < 7; ++i) ids.push_back("s" + std::to_string(i + 1));

  write_matrix_csv(dir / "m.csv", m, ids);
  const auto back = read_matrix_csv(dir / "m.csv");
  CHECK(back.subject_ids == ids);
  CHECK(back.matrix.values == m.values);  // to_chars round-trips exactly

  write_matrix_binary(dir / "m.bin", m);
  const auto bin = read_matrix_binary(dir / "m.bin");
  CHECK(bin.values == m.values);
  CHECK(read_matrix_any(dir / "m.bin").matrix.values == m.values);
  CHECK(read_matrix_any(dir / "m.csv").matrix.values == m.values);
  std::filesystem::remove_all(dir);
}
