#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fsde/model.hpp"

namespace fsde {

struct LoadedModel {
  std::shared_ptr<const ModelSpec> model;
  std::optional<LyapunovSuite> suite;  // built-in examples only
  nlohmann::json definition;           // normalized input, echoed in reports
};

// Named coefficient forms usable from model files. Each factory receives the
// form's parameter object (with "form" removed) and the dimensions, and fills
// the corresponding members of the oracle. Factories must reject unknown keys.
class CoefficientRegistry {
 public:
  using Factory = std::function<void(const nlohmann::json& params, int m, int d,
                                     double r0, CoefficientOracle& out)>;

  static CoefficientRegistry& instance();

  void register_z_form(const std::string& name, Factory factory);
  void register_b_form(const std::string& name, Factory factory);
  void apply_z(const std::string& name, const nlohmann::json& params, int m, int d,
               double r0, CoefficientOracle& out) const;
  void apply_b(const std::string& name, const nlohmann::json& params, int m, int d,
               double r0, CoefficientOracle& out) const;

 private:
  CoefficientRegistry();
  std::map<std::string, Factory> z_forms_;
  std::map<std::string, Factory> b_forms_;
};

/// Builds a model from its JSON definition:
///   {"example": "4.1", "eps": .., "r0": .., "delay_weight": number | [..]}
///   {"example": "4.2", "r0": ..}
///   {"example": "ou", "r0": .., "rate": ..}
///   {"m", "d", "r0", "A", "M", "sigma", "Z": {"form": ..}, "b": {"form": ..}}
/// Unknown fields throw InvalidArgument naming the offending path.
LoadedModel load_model(const nlohmann::json& definition);

/// Built-in name ("example-4.1", "example-4.2", "ou") with optional overrides.
LoadedModel builtin_model(const std::string& name, const nlohmann::json& params);

namespace json_util {

/// Throws InvalidArgument("<where>: unknown field '<k>'") for keys outside
/// `allowed`.
void reject_unknown(const nlohmann::json& obj,
                    std::initializer_list<const char*> allowed,
                    const std::string& where);
DenseMatrix matrix_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json matrix_to_json(const Eigen::Ref<const DenseMatrix>& mat);

}  // namespace json_util

}  // namespace fsde
