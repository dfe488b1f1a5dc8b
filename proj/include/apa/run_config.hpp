#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

// Plain-text key = value run configuration, plus run manifests and input
// checksums. Unknown keys are rejected; every key has a default, and every
// effective value is echoed into the manifest so a run is reproducible from
// its record.

namespace apa {

class RunConfig {
public:
  // Defaults for every known key.
  RunConfig();

  static RunConfig from_file(const std::filesystem::path& path);

  // Parses "key = value"; throws std::invalid_argument on unknown keys.
  void set(const std::string& key, const std::string& value);
  bool has_default(const std::string& key) const;

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Gaussian smoothing scale for a noise level: the explicit override if
  // set, otherwise the per-level default nearest to sigma_255.
  double resolve_gaussian_sigma(double sigma_255) const;

private:
  std::map<std::string, std::string> values_;
};

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string file_checksum_hex(const std::filesystem::path& path);

// Manifest: ordered key = value lines (command, tool version, config echo,
// seeds, input checksums).
void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

}  // namespace apa
