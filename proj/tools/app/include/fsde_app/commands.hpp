#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsde_app/report.hpp"

namespace fsde::app {

struct CommandOutput {
  nlohmann::json report;  // deterministic: no timestamps, no thread count
  std::vector<CsvTable> tables;
  bool passed = false;
};

/// Runs a subcommand in memory. Throws ConfigError for invalid input and the
/// core errors for hard failures.
CommandOutput execute(const std::string& command, const nlohmann::json& config,
                      unsigned threads, const std::filesystem::path& base_dir = {});

enum class Format { json, csv, both };

Format parse_format(const std::string& text);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  Format format = Format::both;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;

/// Reads the config, executes and writes <command>.json, <command>.meta.json
/// and <command>_<table>.csv into out_dir. Diagnostics go to `log`.
int run(const std::string& command, const std::filesystem::path& config_path,
        const RunOptions& options, std::ostream& log);

}  // namespace fsde::app
