#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "apa/light_field.hpp"
#include "apa/run_config.hpp"
#include "apa/train.hpp"

// Shared plumbing for the apa tool: guarded execution with the exit-code
// contract, light-field loading that accepts .lft files or PGM grid
// directories, and manifest assembly.

namespace apa::cli {

// Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// std::invalid_argument / std::out_of_range -> 2, everything else -> 1.
int run_guarded(const std::function<int()>& body);

// Loads a light field from an .lft file, or from a directory of
// view_VV_SS.pgm files when the path is a directory (n_h/n_v required then).
LightField<float> load_lf_any(const std::filesystem::path& path, int n_h, int n_v);

// Requires the path to exist (usage error otherwise).
void require_input(const std::filesystem::path& path, const std::string& flag);

TrainConfig train_config_from(const RunConfig& cfg);

// Manifest rows: command + tool version + full config echo + extras.
std::vector<std::pair<std::string, std::string>> manifest_base(const std::string& command,
                                                               const RunConfig& cfg);
void append_input_checksum(std::vector<std::pair<std::string, std::string>>& entries,
                           const std::string& label, const std::filesystem::path& path);

}  // namespace apa::cli
