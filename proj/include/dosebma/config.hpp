#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dosebma/bma_samc.hpp"
#include "dosebma/harness.hpp"
#include "dosebma/twodmc.hpp"

namespace dosebma {

// Flat `key = value` configuration with a closed schema: every key has a
// documented default, unknown keys are hard errors, and dump(load(x))
// parses back to an equal tree. '#' starts a comment.
class Config {
 public:
  Config();  // all defaults

  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  std::string dump() const;
  void save(const std::filesystem::path& path) const;

  const std::string& get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  bool operator==(const Config& other) const { return values_ == other.values_; }

  const std::map<std::string, std::string>& values() const { return values_; }

  // Typed views over the tree.
  PriorSpec priors() const;
  SamcConfig samc() const;
  // Dose model: preset or the custom subgroup.* table.
  TwoDmcConfig twodmc(const std::vector<std::string>& labels) const;
  BenchmarkConfig benchmark(bool paper_scale) const;
  SweepConfig sweep(bool paper_scale) const;

 private:
  std::map<std::string, std::string> values_;
};

// Schema documentation: one line per key, "key = default  # help".
std::string config_schema_help();

}  // namespace dosebma
