#include "dosebma/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dosebma/csv.hpp"

namespace dosebma {

namespace {

enum class KeyType { Double, Integer, Boolean, String, DoubleList, StringList };

struct KeyInfo {
  const char* key;
  KeyType type;
  const char* default_value;
  const char* help;
};

// The closed schema. Anything not listed here (except the subgroup.* table)
// is rejected by name.
constexpr KeyInfo kSchema[] = {
    {"cohort.n", KeyType::Integer, "500", "synthetic cohort size"},
    {"cohort.subgroups", KeyType::Integer, "20", "number of shared-error subgroups"},
    {"twodmc.preset", KeyType::String, "total",
     "exposure preset: external, total, or custom (uses subgroup.* table)"},
    {"twodmc.k", KeyType::Integer, "200", "number of dose vectors"},
    {"twodmc.m", KeyType::Integer, "100", "conditional resamples per vector"},
    {"twodmc.global_gsd", KeyType::Double, "1",
     "custom preset: cohort-wide shared GSD"},
    {"twodmc.internal_gsd", KeyType::Double, "1",
     "custom preset: shared GSD across internal-pathway subgroups"},
    {"twodmc.unshared_gsd", KeyType::Double, "1", "custom preset: unshared GSD"},
    {"twodmc.n_shared_factors", KeyType::Integer, "1",
     "custom preset: shared factors per subgroup"},
    {"priors.alpha_sd", KeyType::Double, "31.622776601683793",
     "normal prior SD for each alpha (variance 1000)"},
    {"priors.beta_mean", KeyType::Double, "100", "exponential prior mean for beta"},
    {"priors.dirichlet_conc", KeyType::Double, "1",
     "symmetric Dirichlet concentration for the vector prior"},
    {"bma.n_samples", KeyType::Integer, "40000", "posterior samples after burn-in"},
    {"bma.burn_in", KeyType::Integer, "10000", "burn-in iterations"},
    {"bma.sampler", KeyType::String, "samc", "sampler: samc or plain-mh"},
    {"samc.t0", KeyType::Double, "5000", "gain factor pivot t0"},
    {"samc.nu", KeyType::Double, "1.5", "gain condition exponent (documentation)"},
    {"samc.theta_bound", KeyType::Double, "1e100", "compact parameter bound"},
    {"samc.alpha_scale", KeyType::Double, "0.1", "random-walk step for alpha"},
    {"samc.lnbeta_scale", KeyType::Double, "0.4", "random-walk step for ln beta"},
    {"samc.adapt_scales", KeyType::Boolean, "true", "adapt step sizes during burn-in"},
    {"samc.flat_threshold", KeyType::Double, "0.25",
     "flat-histogram warning threshold"},
    {"samc.n_regions", KeyType::Integer, "10",
     "energy sub-regions for the energy-partitioned variant"},
    {"harness.true_slopes", KeyType::DoubleList, "3,12,20",
     "true ERR/Gy slopes for the benchmark"},
    {"harness.true_alpha", KeyType::DoubleList,
     "0.6931471805599453,-1.3945348918918356,-0.7013877113318902",
     "generating log-odds coefficients (age, male, female): ln 2 for age and"
     " ln 1.5 / ln 3 for sex shifted by -1.8 to center prevalence"},
    {"harness.sets_per_slope", KeyType::Integer, "10",
     "disease sets tested per slope (multiple of n_groups)"},
    {"harness.n_groups", KeyType::Integer, "10", "selection blocks"},
    {"harness.n_samples", KeyType::Integer, "20000",
     "BMA samples per benchmark test (desk scale)"},
    {"harness.burn_in", KeyType::Integer, "5000",
     "BMA burn-in per benchmark test (desk scale)"},
    {"harness.methods", KeyType::StringList,
     "conv-mean,conv-median,bma-original,bma-cm,bma-cmd", "methods to compare"},
    {"harness.threads", KeyType::Integer, "0", "worker threads, 0 = hardware"},
    {"sweep.gsd_levels", KeyType::DoubleList, "1,1.3,1.5,2,3",
     "classical error GSD levels"},
    {"sweep.n_sets", KeyType::Integer, "3", "disease sets averaged per level"},
    {"sweep.true_slope", KeyType::Double, "12", "generating slope for the sweep"},
};

const KeyInfo* find_key(const std::string& key) {
  for (const auto& info : kSchema)
    if (key == info.key) return &info;
  return nullptr;
}

bool is_subgroup_key(const std::string& key) {
  if (key.rfind("subgroup.", 0) != 0) return false;
  const size_t last_dot = key.rfind('.');
  if (last_dot == std::string::npos || last_dot < 9) return false;
  const std::string field = key.substr(last_dot + 1);
  const std::string label = key.substr(9, last_dot - 9);
  return !label.empty() &&
         (field == "base_dose" || field == "shared_gsd" || field == "internal" ||
          field == "unshared_gsd");
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

void check_value(const std::string& key, const std::string& value, KeyType type,
                 const std::string& where) {
  const auto fail = [&](const char* what) {
    throw std::runtime_error(where + ": key '" + key + "' " + what + ": '" +
                             value + "'");
  };
  switch (type) {
    case KeyType::Double: {
      double v;
      auto r = std::from_chars(value.data(), value.data() + value.size(), v);
      if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
        fail("expects a number");
      break;
    }
    case KeyType::Integer: {
      long v;
      auto r = std::from_chars(value.data(), value.data() + value.size(), v);
      if (r.ec != std::errc{} || r.ptr != value.data() + value.size())
        fail("expects an integer");
      break;
    }
    case KeyType::Boolean:
      if (value != "true" && value != "false") fail("expects true or false");
      break;
    case KeyType::DoubleList: {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        double v;
        auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || r.ec != std::errc{} ||
            r.ptr != item.data() + item.size())
          fail("expects a comma-separated list of numbers");
      }
      break;
    }
    case KeyType::String:
    case KeyType::StringList:
      if (value.empty()) fail("expects a value");
      break;
  }
}

}  // namespace

Config::Config() {
  for (const auto& info : kSchema) values_[info.key] = info.default_value;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config config;  // defaults
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    // Strip comments.
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeyInfo* info = find_key(key);
    if (info) {
      check_value(key, value, info->type, where);
    } else if (is_subgroup_key(key)) {
      check_value(key, value, KeyType::Double, where);
    } else {
      throw std::runtime_error(where + ": unknown key '" + key + "'");
    }
    config.values_[key] = value;
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::string Config::dump() const {
  std::ostringstream out;
  out << kFormatVersionLine << "\n";
  for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
  return out.str();
}

void Config::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create config file: " + path.string());
  out << dump();
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw std::runtime_error("config key not present: " + key);
  return it->second;
}

void Config::set(const std::string& key, const std::string& value) {
  const KeyInfo* info = find_key(key);
  if (info)
    check_value(key, value, info->type, "<set>");
  else if (is_subgroup_key(key))
    check_value(key, value, KeyType::Double, "<set>");
  else
    throw std::runtime_error("unknown key '" + key + "'");
  values_[key] = value;
}

double Config::get_double(const std::string& key) const {
  return parse_double(get(key), "config key " + key);
}

long Config::get_long(const std::string& key) const {
  const std::string& s = get(key);
  long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw std::runtime_error("config key " + key + " is not an integer: " + s);
  return v;
}

bool Config::get_bool(const std::string& key) const { return get(key) == "true"; }

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_double(trim(item), "config key " + key));
  return out;
}

std::vector<std::string> Config::get_string_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

PriorSpec Config::priors() const {
  PriorSpec p;
  p.alpha_sd = get_double("priors.alpha_sd");
  p.beta_mean = get_double("priors.beta_mean");
  p.dirichlet_conc = get_double("priors.dirichlet_conc");
  p.validate();
  return p;
}

SamcConfig Config::samc() const {
  SamcConfig s;
  s.n_regions = static_cast<int>(get_long("samc.n_regions"));
  s.t0 = get_double("samc.t0");
  s.nu = get_double("samc.nu");
  s.theta_bound = get_double("samc.theta_bound");
  s.alpha_scale = get_double("samc.alpha_scale");
  s.lnbeta_scale = get_double("samc.lnbeta_scale");
  s.adapt_scales = get_bool("samc.adapt_scales");
  s.flat_threshold = get_double("samc.flat_threshold");
  s.validate();
  return s;
}

TwoDmcConfig Config::twodmc(const std::vector<std::string>& labels) const {
  const std::string preset = get("twodmc.preset");
  if (preset != "custom") return preset_config(parse_preset(preset), labels);

  TwoDmcConfig config;
  config.global_gsd = get_double("twodmc.global_gsd");
  config.internal_gsd = get_double("twodmc.internal_gsd");
  config.unshared_gsd = get_double("twodmc.unshared_gsd");
  config.n_shared_factors = static_cast<int>(get_long("twodmc.n_shared_factors"));
  for (const auto& label : labels) {
    const std::string base_key = "subgroup." + label + ".base_dose";
    const std::string gsd_key = "subgroup." + label + ".shared_gsd";
    const std::string internal_key = "subgroup." + label + ".internal";
    if (!values_.count(base_key) || !values_.count(gsd_key))
      throw std::runtime_error("custom preset: missing " + base_key + " or " +
                               gsd_key);
    SubgroupExposure sg{parse_double(values_.at(base_key), base_key),
                        parse_double(values_.at(gsd_key), gsd_key), false, 0.0};
    if (values_.count(internal_key))
      sg.internal_pathway = parse_double(values_.at(internal_key), internal_key) != 0.0;
    const std::string ugsd_key = "subgroup." + label + ".unshared_gsd";
    if (values_.count(ugsd_key))
      sg.unshared_gsd = parse_double(values_.at(ugsd_key), ugsd_key);
    config.subgroups[label] = sg;
  }
  config.validate();
  return config;
}

BenchmarkConfig Config::benchmark(bool paper_scale) const {
  BenchmarkConfig b;
  b.scenario = parse_preset(get("twodmc.preset") == "custom" ? "total"
                                                             : get("twodmc.preset"));
  b.n_subjects = static_cast<size_t>(get_long("cohort.n"));
  b.n_subgroups = static_cast<size_t>(get_long("cohort.subgroups"));
  b.k_vectors = static_cast<size_t>(get_long("twodmc.k"));
  b.m_resamples = static_cast<size_t>(get_long("twodmc.m"));
  b.true_slopes = get_double_list("harness.true_slopes");
  b.true_alpha = get_double_list("harness.true_alpha");
  b.sets_per_slope = static_cast<size_t>(get_long("harness.sets_per_slope"));
  b.n_groups = static_cast<size_t>(get_long("harness.n_groups"));
  b.bma_samples = get_long("harness.n_samples");
  b.bma_burn_in = get_long("harness.burn_in");
  b.sampler = get("bma.sampler") == "plain-mh" ? SamplerKind::PlainMh
                                               : SamplerKind::Samc;
  b.priors = priors();
  b.samc = samc();
  b.methods.clear();
  for (const auto& name : get_string_list("harness.methods"))
    b.methods.push_back(parse_method(name));
  b.threads = static_cast<int>(get_long("harness.threads"));
  if (paper_scale) b = b.paper_scale();
  b.validate();
  return b;
}

SweepConfig Config::sweep(bool paper_scale) const {
  SweepConfig s;
  s.base = benchmark(paper_scale);
  s.gsd_levels = get_double_list("sweep.gsd_levels");
  s.n_sets = static_cast<size_t>(get_long("sweep.n_sets"));
  s.true_slope = get_double("sweep.true_slope");
  return s;
}

std::string config_schema_help() {
  std::ostringstream out;
  out << "Configuration keys (key = default):\n";
  for (const auto& info : kSchema)
    out << "  " << info.key << " = " << info.default_value << "\n    "
        << info.help << "\n";
  out << "  subgroup.<label>.base_dose, subgroup.<label>.shared_gsd\n"
      << "    per-subgroup dose model table for twodmc.preset = custom\n";
  return out.str();
}

}  // namespace dosebma
