#include "apa/run_config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "apa/errors.hpp"

namespace apa {

namespace {

const std::map<std::string, std::string>& default_values() {
  static const std::map<std::string, std::string> defaults = {
      {"sigma_255", "20"},
      {"seed", "0"},
      {"patch_size", "32"},
      {"stride", "16"},
      {"threads", "1"},
      {"deterministic", "1"},
      {"guided.radius", "8"},
      {"guided.epsilon", "1e-4"},
      {"gaussian.sigma_g", "0"},  // 0 = pick per-level default below
      {"gaussian.sigma10", "1.0"},
      {"gaussian.sigma20", "1.5"},
      {"gaussian.sigma50", "2.5"},
      {"syn.widths", "64,64,64"},
      {"syn.residual", "0"},
      {"view.widths", "32,32,16"},
      {"view.per_sai", "0"},
      {"view.patches_per_sai", "0"},
      {"hyper.alpha", "1e-4"},
      {"hyper.beta1", "0.9"},
      {"hyper.beta2", "0.999"},
      {"hyper.eps_adam", "1e-8"},
      {"hyper.batch_size", "50"},
      {"hyper.epochs", "60"},
  };
  return defaults;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig::RunConfig() : values_(default_values()) {}

bool RunConfig::has_default(const std::string& key) const {
  return default_values().count(key) > 0;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!has_default(key)) throw std::invalid_argument("unknown config key: " + key);
  values_[key] = value;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open: " + path.string());
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value': " + line);
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("unknown config key: " + key);
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("config: bad number for " + key + ": " + v);
  return d;
}

int RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  const int i = std::stoi(v, &used);
  if (used != v.size()) throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  return i;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t used = 0;
  const unsigned long long u = std::stoull(v, &used);
  if (used != v.size()) throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  return u;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  const std::string& v = get(key);
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

double RunConfig::resolve_gaussian_sigma(double sigma_255) const {
  const double explicit_sigma = get_double("gaussian.sigma_g");
  if (explicit_sigma > 0) return explicit_sigma;
  if (sigma_255 < 15.0) return get_double("gaussian.sigma10");
  if (sigma_255 < 35.0) return get_double("gaussian.sigma20");
  return get_double("gaussian.sigma50");
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string file_checksum_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checksum: cannot open: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("manifest: cannot open for writing: " + path.string());
  for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
  if (!out) throw IoError("manifest: write failed: " + path.string());
}

}  // namespace apa
