#include "dosebma/csv.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dosebma {

namespace {

constexpr char kBinaryMagic[8] = {'D', 'B', 'M', 'A', 'M', 'X', '1', '\n'};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  return in;
}

std::ofstream create_text(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create file: " + path.string());
  return out;
}

// Skips blank lines and '#' comment lines (including the version line).
bool next_data_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    return true;
  }
  return false;
}

uint64_t read_u64_le(std::istream& in) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
  return v;
}

void write_u64_le(std::ostream& out, uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw std::runtime_error("bad number '" + s + "' in " + context);
  return v;
}

std::string vector_label(size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "v%04zu", index + 1);
  return buf;
}

void write_cohort_csv(const std::filesystem::path& path, const Cohort& cohort) {
  auto out = create_text(path);
  out << kFormatVersionLine << "\n";
  out << "subject_id,subgroup,disease";
  for (const auto& name : cohort.covariate_names) out << "," << name;
  out << "\n";
  for (const auto& s : cohort.subjects) {
    out << s.id << "," << s.subgroup << ",";
    if (s.disease) out << *s.disease;
    for (double c : s.covariates) out << "," << format_double(c);
    out << "\n";
  }
}

Cohort read_cohort_csv(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::string line;
  if (!next_data_line(in, line))
    throw std::runtime_error("empty cohort file: " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "subject_id" || header[1] != "subgroup" ||
      header[2] != "disease")
    throw std::runtime_error("bad cohort header in " + path.string());

  Cohort cohort;
  cohort.covariate_names.assign(header.begin() + 3, header.end());
  while (next_data_line(in, line)) {
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("wrong field count in " + path.string() + ": " + line);
    Subject s;
    s.id = fields[0];
    s.subgroup = fields[1];
    if (!fields[2].empty()) {
      if (fields[2] != "0" && fields[2] != "1")
        throw std::runtime_error("disease must be 0, 1 or blank: " + line);
      s.disease = fields[2] == "1" ? 1 : 0;
    }
    for (size_t i = 3; i < fields.size(); ++i)
      s.covariates.push_back(parse_double(fields[i], path.string()));
    cohort.subjects.push_back(std::move(s));
  }
  cohort.validate();
  return cohort;
}

void write_matrix_csv(const std::filesystem::path& path, const DoseMatrix& matrix,
                      const std::vector<std::string>& subject_ids) {
  if (subject_ids.size() != matrix.n_subjects)
    throw std::invalid_argument("subject id count does not match matrix rows");
  auto out = create_text(path);
  out << kFormatVersionLine << "\n";
  out << "subject_id";
  for (size_t v = 0; v < matrix.n_vectors; ++v) out << "," << vector_label(v);
  out << "\n";
  for (size_t i = 0; i < matrix.n_subjects; ++i) {
    out << subject_ids[i];
    for (size_t v = 0; v < matrix.n_vectors; ++v)
      out << "," << format_double(matrix.at(i, v));
    out << "\n";
  }
}

MatrixFile read_matrix_csv(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::string line;
  if (!next_data_line(in, line))
    throw std::runtime_error("empty dose matrix file: " + path.string());
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "subject_id")
    throw std::runtime_error("bad dose matrix header in " + path.string());

  MatrixFile mf;
  mf.matrix.n_vectors = header.size() - 1;
  while (next_data_line(in, line)) {
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("wrong field count in " + path.string() + ": " + line);
    mf.subject_ids.push_back(fields[0]);
    for (size_t i = 1; i < fields.size(); ++i)
      mf.matrix.values.push_back(parse_double(fields[i], path.string()));
  }
  mf.matrix.n_subjects = mf.subject_ids.size();
  mf.matrix.validate();
  return mf;
}

void write_matrix_binary(const std::filesystem::path& path, const DoseMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create file: " + path.string());
  out.write(kBinaryMagic, sizeof(kBinaryMagic));
  write_u64_le(out, matrix.n_subjects);
  write_u64_le(out, matrix.n_vectors);
  static_assert(sizeof(double) == 8);
  // Host is little-endian on every supported target.
  out.write(reinterpret_cast<const char*>(matrix.values.data()),
            static_cast<std::streamsize>(matrix.values.size() * sizeof(double)));
}

DoseMatrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a binary dose matrix: " + path.string());
  DoseMatrix m;
  m.n_subjects = read_u64_le(in);
  m.n_vectors = read_u64_le(in);
  m.values.resize(m.n_subjects * m.n_vectors);
  in.read(reinterpret_cast<char*>(m.values.data()),
          static_cast<std::streamsize>(m.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated binary dose matrix: " + path.string());
  m.validate();
  return m;
}

MatrixFile read_matrix_any(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::runtime_error("cannot open file: " + path.string());
    char magic[8];
    probe.read(magic, sizeof(magic));
    if (probe && std::memcmp(magic, kBinaryMagic, sizeof(magic)) == 0) {
      MatrixFile mf;
      mf.matrix = read_matrix_binary(path);
      for (size_t i = 0; i < mf.matrix.n_subjects; ++i)
        mf.subject_ids.push_back("s" + std::to_string(i + 1));
      return mf;
    }
  }
  return read_matrix_csv(path);
}

}  // namespace dosebma
