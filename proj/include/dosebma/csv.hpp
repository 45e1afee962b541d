#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dosebma/cohort.hpp"

namespace dosebma {

// All text formats start with this comment line.
inline constexpr const char* kFormatVersionLine = "# dosebma-format v1";

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

// Cohort CSV: subject_id,subgroup,disease,<covariate names...>
// disease is blank when unknown.
void write_cohort_csv(const std::filesystem::path& path, const Cohort& cohort);
Cohort read_cohort_csv(const std::filesystem::path& path);

// Dose matrix CSV: header subject_id,v0001,v0002,... one row per subject.
struct MatrixFile {
  std::vector<std::string> subject_ids;
  DoseMatrix matrix;
};

void write_matrix_csv(const std::filesystem::path& path, const DoseMatrix& matrix,
                      const std::vector<std::string>& subject_ids);
MatrixFile read_matrix_csv(const std::filesystem::path& path);

// Compact binary matrix: magic "DBMAMX1\n", then N, K as little-endian
// uint64, then N*K little-endian float64 row-major. No subject ids; row
// order is the cohort order.
void write_matrix_binary(const std::filesystem::path& path, const DoseMatrix& matrix);
DoseMatrix read_matrix_binary(const std::filesystem::path& path);

// Reads either format, sniffing the binary magic.
MatrixFile read_matrix_any(const std::filesystem::path& path);

// One-based column label: v0001, v0002, ...
std::string vector_label(size_t index);

}  // namespace dosebma
