#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fsde/errors.hpp"
#include "fsde/estimate.hpp"
#include "fsde/functional.hpp"
#include "fsde/model_io.hpp"
#include "fsde/segment.hpp"
#include "fsde/simulate.hpp"
#include "fsde/verify.hpp"

namespace fsde::app {

// Invalid configuration; what() starts with the offending field path.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Keys shared by several commands; each command accepts a subset.
enum class Field { model, r0, T, dt, n_paths, seed, xi, h, f };

struct CommandSchema {
  std::string name;
  std::set<Field> required;
  std::set<Field> optional;
  std::set<std::string> params;  // command-specific top-level keys
};

/// Schema of a subcommand; throws ConfigError for an unknown command.
const CommandSchema& command_schema(const std::string& command);
std::vector<std::string> command_names();

// Read accessor for command-specific keys with path-prefixed diagnostics.
class Params {
 public:
  Params() = default;
  explicit Params(nlohmann::json obj) : obj_(std::move(obj)) {}
  bool has(const std::string& key) const { return obj_.contains(key); }
  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback = {}) const;
  std::vector<std::string> strings(const std::string& key, std::vector<std::string> fallback = {}) const;
  const nlohmann::json& object(const std::string& key) const;
  const nlohmann::json& raw() const { return obj_; }

 private:
  nlohmann::json obj_ = nlohmann::json::object();
};

struct ExperimentConfig {
  std::string command;
  LoadedModel model;
  std::optional<double> horizon;
  std::optional<double> dt;
  MonteCarloOptions mc;
  std::optional<Segment> xi;
  std::optional<Segment> h;
  std::optional<TerminalFunctional> f;
  Params params;
  nlohmann::json normalized;  // echoed in every report

  double r0() const { return model.model->r0(); }
  SimGrid grid() const;  // needs T and dt
  const LyapunovSuite* suite() const { return model.suite ? &*model.suite : nullptr; }
  const LyapunovSuite& require_suite() const;
};

/// Validates `config` against the command schema. Relative model-file paths
/// resolve against `base_dir`. Throws ConfigError.
ExperimentConfig parse_config(const std::string& command, const nlohmann::json& config,
                              const std::filesystem::path& base_dir = {});

/// Parses a segment spec: a number (d = 1), a constant vector, {"constant": [...]}
/// or {"values": [[component 0 nodes], ...]} on a uniform grid over [-r0, 0].
Segment parse_segment(const nlohmann::json& spec, int dim, double r0, const std::string& where);

GridSpec parse_grid_spec(const nlohmann::json& spec, const std::string& where);

}  // namespace fsde::app
