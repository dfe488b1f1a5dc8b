#include "cli_common.hpp"

#include <cstdio>
#include <exception>
#include <iostream>

#include "apa/lft_io.hpp"
#include "apa/pgm_io.hpp"
#include "apa/version.hpp"

namespace apa::cli {

int run_guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

LightField<float> load_lf_any(const std::filesystem::path& path, int n_h, int n_v) {
  if (std::filesystem::is_directory(path)) {
    if (n_h < 1 || n_v < 1)
      throw std::invalid_argument("loading a PGM grid requires --nh and --nv: " + path.string());
    return load_pgm_grid<float>(path, n_h, n_v);
  }
  return load_lft<float>(path);
}

void require_input(const std::filesystem::path& path, const std::string& flag) {
  if (!std::filesystem::exists(path))
    throw std::invalid_argument(flag + ": no such file or directory: " + path.string());
}

TrainConfig train_config_from(const RunConfig& cfg) {
  TrainConfig t;
  t.sigma_255 = cfg.get_double("sigma_255");
  t.patch_size = cfg.get_int("patch_size");
  t.stride = cfg.get_int("stride");
  t.threads = cfg.get_int("threads");
  t.guided.radius = cfg.get_int("guided.radius");
  t.guided.epsilon = cfg.get_double("guided.epsilon");
  t.gaussian = GaussianParams::from_sigma(cfg.resolve_gaussian_sigma(t.sigma_255));

  const auto syn_widths = cfg.get_int_list("syn.widths");
  const auto view_widths = cfg.get_int_list("view.widths");
  if (syn_widths.size() != 3 || view_widths.size() != 3)
    throw std::invalid_argument("config: syn.widths and view.widths need exactly 3 entries");
  for (int i = 0; i < 3; ++i) {
    t.syn.hidden[static_cast<std::size_t>(i)] = syn_widths[static_cast<std::size_t>(i)];
    t.view.hidden[static_cast<std::size_t>(i)] = view_widths[static_cast<std::size_t>(i)];
  }
  t.syn.residual = cfg.get_bool("syn.residual");
  t.view.per_sai = cfg.get_bool("view.per_sai");
  t.view_patches_per_sai = cfg.get_int("view.patches_per_sai");

  t.hyper.alpha = cfg.get_double("hyper.alpha");
  t.hyper.beta1 = cfg.get_double("hyper.beta1");
  t.hyper.beta2 = cfg.get_double("hyper.beta2");
  t.hyper.eps_adam = cfg.get_double("hyper.eps_adam");
  t.hyper.batch_size = cfg.get_int("hyper.batch_size");
  t.hyper.epochs = cfg.get_int("hyper.epochs");
  t.hyper.seed = cfg.get_u64("seed");
  t.validate();
  return t;
}

std::vector<std::pair<std::string, std::string>> manifest_base(const std::string& command,
                                                               const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("command", command);
  entries.emplace_back("tool_version", kToolVersion);
  for (const auto& [k, v] : cfg.values()) entries.emplace_back("config." + k, v);
  return entries;
}

void append_input_checksum(std::vector<std::pair<std::string, std::string>>& entries,
                           const std::string& label, const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string combined;
    for (const auto& f : files) combined += file_checksum_hex(f);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(combined.data(), combined.size())));
    entries.emplace_back("input." + label, path.string());
    entries.emplace_back("input." + label + ".checksum", buf);
    entries.emplace_back("input." + label + ".files", std::to_string(files.size()));
  } else {
    entries.emplace_back("input." + label, path.string());
    entries.emplace_back("input." + label + ".checksum", file_checksum_hex(path));
  }
}

}  // namespace apa::cli
