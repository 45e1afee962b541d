#include "dosebma/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dosebma/csv.hpp"

namespace dosebma {

uint64_t fnv1a64(const void* data, size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_of_bytes(const std::string& bytes) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

std::string digest_of_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for digest: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return digest_of_bytes(buf.str());
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.filename().string(), digest_of_file(path));
}

void RunManifest::add_output(const std::filesystem::path& path) {
  outputs.emplace_back(path.filename().string(), digest_of_file(path));
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create manifest: " + path.string());
  out << kFormatVersionLine << "\n";
  out << "command = " << command << "\n";
  out << "config_digest = " << config_digest << "\n";
  out << "master_seed = " << master_seed << "\n";
  out << "version = " << version << "\n";
  out << "started_utc = " << started_utc << "\n";
  out << "finished_utc = " << finished_utc << "\n";
  for (const auto& [name, digest] : inputs)
    out << "input." << name << " = " << digest << "\n";
  for (const auto& [name, digest] : outputs)
    out << "output." << name << " = " << digest << "\n";
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  RunManifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t");
      const size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "command") m.command = value;
    else if (key == "config_digest") m.config_digest = value;
    else if (key == "master_seed") m.master_seed = std::stoull(value);
    else if (key == "version") m.version = value;
    else if (key == "started_utc") m.started_utc = value;
    else if (key == "finished_utc") m.finished_utc = value;
    else if (key.rfind("input.", 0) == 0)
      m.inputs.emplace_back(key.substr(6), value);
    else if (key.rfind("output.", 0) == 0)
      m.outputs.emplace_back(key.substr(7), value);
  }
  return m;
}

bool RunManifest::verify(const std::filesystem::path& base_dir) const {
  for (const auto& [name, digest] : outputs) {
    const auto path = base_dir / name;
    if (!std::filesystem::exists(path)) return false;
    if (digest_of_file(path) != digest) return false;
  }
  return true;
}

}  // namespace dosebma
