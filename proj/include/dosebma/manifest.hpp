#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dosebma {

// FNV-1a 64-bit; integrity bookkeeping for reproducibility, not security.
uint64_t fnv1a64(const void* data, size_t size);
std::string digest_of_bytes(const std::string& bytes);
std::string digest_of_file(const std::filesystem::path& path);

// Everything needed to re-run a command: the command, its config digest,
// seed, version, timestamps, and input/output file digests. Timestamps live
// only here; data files carry none.
struct RunManifest {
  std::string command;
  std::string config_digest;
  uint64_t master_seed = 0;
  std::string version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, digest)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, digest)

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);

  // Recomputes every stored digest against the filesystem.
  bool verify(const std::filesystem::path& base_dir) const;
};

std::string utc_now_iso8601();

}  // namespace dosebma
