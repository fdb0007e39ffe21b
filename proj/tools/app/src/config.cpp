#include "fsde_app/config.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace fsde::app {

using nlohmann::json;

namespace {

const char* field_name(Field f) {
  switch (f) {
    case Field::model: return "model";
    case Field::r0: return "r0";
    case Field::T: return "T";
    case Field::dt: return "dt";
    case Field::n_paths: return "n_paths";
    case Field::seed: return "seed";
    case Field::xi: return "xi";
    case Field::h: return "h";
    case Field::f: return "f";
  }
  return "?";
}

const std::map<std::string, CommandSchema>& schemas() {
  using F = Field;
  static const std::map<std::string, CommandSchema> table = [] {
    const std::set<F> mc = {F::r0, F::n_paths, F::seed};
    const std::set<F> gradient_fields = {F::model, F::T, F::dt, F::xi, F::h, F::f};
    std::map<std::string, CommandSchema> t;
    t["gramian"] = {"gramian", {F::model, F::T, F::dt}, {F::r0}, {"tau", "quad_step"}};
    t["plan"] = {"plan", {F::model, F::T, F::dt, F::h}, {F::r0}, {}};
    t["simulate"] = {"simulate",
                     {F::model, F::T, F::dt, F::xi},
                     {F::r0, F::n_paths, F::seed, F::f},
                     {"export_paths", "export_stride"}};
    t["gradient"] = {"gradient", gradient_fields, mc, {"eps_fd", "control_variate", "z_max"}};
    t["girsanov-check"] = {"girsanov-check", gradient_fields, mc, {"eps", "z_max"}};
    t["verify-assumptions"] = {
        "verify-assumptions", {F::model}, {F::r0}, {"assumptions", "grid", "e28_eps"}};
    t["moment-bound"] = {
        "moment-bound", {F::model, F::dt, F::xi}, mc, {"t_list", "growth"}};
    t["log-harnack"] = {"log-harnack", gradient_fields, mc, {"h_scales"}};
    t["harnack"] = {"harnack", gradient_fields, mc, {"p", "l", "p_sweep"}};
    t["gradient-bound-sweep"] = {
        "gradient-bound-sweep", gradient_fields, mc, {"tau_sweep", "entropy"}};
    return t;
  }();
  return table;
}

double require_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(where + ": not finite");
  return v;
}

bool is_builtin(const std::string& name) {
  for (const char* b : {"example-4.1", "4.1", "example-4.2", "4.2", "ou"}) {
    if (name == b) return true;
  }
  return false;
}

json read_json_file(const std::filesystem::path& path, const std::string& where) {
  std::ifstream in(path);
  if (!in) throw ConfigError(where + ": cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(where + ": " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
}

LoadedModel load_model_field(const json& spec, const std::optional<double>& r0,
                             const std::filesystem::path& base_dir) {
  json def = spec;
  if (spec.is_string()) {
    const std::string name = spec.get<std::string>();
    if (is_builtin(name)) {
      def = json{{"example", name}};
    } else {
      std::filesystem::path p(name);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      def = read_json_file(p, "model");
    }
  } else if (!spec.is_object()) {
    throw ConfigError("model: expected a built-in name, a file path or an object");
  }
  if (r0) {
    if (def.contains("example")) {
      if (def.contains("r0") && def.at("r0") != json(*r0)) {
        throw ConfigError("r0: differs from model.r0");
      }
      def["r0"] = *r0;
    }
  }
  LoadedModel out;
  try {
    out = load_model(def);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (r0 && std::abs(out.model->r0() - *r0) > 1e-12 * *r0) {
    throw ConfigError("r0: differs from model.r0");
  }
  return out;
}

TerminalFunctional parse_functional(const json& spec, int m, int d) {
  std::string name;
  json params = json::object();
  if (spec.is_string()) {
    name = spec.get<std::string>();
  } else if (spec.is_object()) {
    json_util::reject_unknown(spec, {"name", "params"}, "f");
    if (!spec.contains("name") || !spec.at("name").is_string()) {
      throw ConfigError("f.name: expected a functional name");
    }
    name = spec.at("name").get<std::string>();
    if (spec.contains("params")) params = spec.at("params");
  } else {
    throw ConfigError("f: expected a name or {\"name\", \"params\"}");
  }
  try {
    return make_functional(name, params, m, d);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

const CommandSchema& command_schema(const std::string& command) {
  const auto it = schemas().find(command);
  if (it == schemas().end()) throw ConfigError("command: unknown command '" + command + "'");
  return it->second;
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, schema] : schemas()) out.push_back(name);
  return out;
}

double Params::number(const std::string& key, std::optional<double> fallback) const {
  if (!obj_.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(key + ": required field missing");
  }
  return require_number(obj_.at(key), key);
}

int Params::integer(const std::string& key, std::optional<int> fallback) const {
  if (!obj_.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(key + ": required field missing");
  }
  const json& j = obj_.at(key);
  if (!j.is_number_integer()) throw ConfigError(key + ": expected an integer");
  return j.get<int>();
}

bool Params::boolean(const std::string& key, bool fallback) const {
  if (!obj_.contains(key)) return fallback;
  if (!obj_.at(key).is_boolean()) throw ConfigError(key + ": expected true or false");
  return obj_.at(key).get<bool>();
}

std::vector<double> Params::numbers(const std::string& key, std::vector<double> fallback) const {
  if (!obj_.contains(key)) return fallback;
  const json& j = obj_.at(key);
  if (!j.is_array()) throw ConfigError(key + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(require_number(j[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::string> Params::strings(const std::string& key,
                                         std::vector<std::string> fallback) const {
  if (!obj_.contains(key)) return fallback;
  const json& j = obj_.at(key);
  if (!j.is_array()) throw ConfigError(key + ": expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) {
      throw ConfigError(key + "[" + std::to_string(i) + "]: expected a string");
    }
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

const json& Params::object(const std::string& key) const {
  static const json empty = json::object();
  if (!obj_.contains(key)) return empty;
  if (!obj_.at(key).is_object()) throw ConfigError(key + ": expected an object");
  return obj_.at(key);
}

SimGrid ExperimentConfig::grid() const {
  if (!horizon || !dt) throw ConfigError("T: this command needs T and dt");
  try {
    return SimGrid::make(*horizon, r0(), *dt);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("dt: ") + e.what());
  }
}

const LyapunovSuite& ExperimentConfig::require_suite() const {
  if (!model.suite) {
    throw ConfigError("model: command '" + command +
                      "' needs a built-in model with a Lyapunov suite");
  }
  return *model.suite;
}

Segment parse_segment(const json& spec, int dim, double r0, const std::string& where) {
  auto constant = [&](const json& arr) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != dim) {
      throw ConfigError(where + ": expected " + std::to_string(dim) + " components");
    }
    DenseVector v(dim);
    for (int i = 0; i < dim; ++i) {
      v(i) = require_number(arr[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    }
    return Segment::constant(v, 1, r0);
  };
  if (spec.is_number()) {
    if (dim != 1) throw ConfigError(where + ": a scalar needs a one-dimensional state");
    return constant(json::array({spec}));
  }
  if (spec.is_array()) return constant(spec);
  if (spec.is_object()) {
    json_util::reject_unknown(spec, {"constant", "values"}, where);
    if (spec.contains("constant") == spec.contains("values")) {
      throw ConfigError(where + ": give exactly one of 'constant' and 'values'");
    }
    if (spec.contains("constant")) return constant(spec.at("constant"));
    DenseMatrix values;
    try {
      values = json_util::matrix_from_json(spec.at("values"), where + ".values");
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (values.rows() != dim) {
      throw ConfigError(where + ".values: expected " + std::to_string(dim) + " rows");
    }
    if (values.cols() < 2) throw ConfigError(where + ".values: need at least two nodes");
    try {
      return Segment(values, r0);
    } catch (const InvalidArgument& e) {
      throw ConfigError(where + ".values: " + e.what());
    }
  }
  throw ConfigError(where + ": expected a number, a vector or {\"constant\" | \"values\"}");
}

GridSpec parse_grid_spec(const json& spec, const std::string& where) {
  GridSpec g;
  if (spec.is_null()) return g;
  if (!spec.is_object()) throw ConfigError(where + ": expected an object");
  try {
    json_util::reject_unknown(spec, {"lo", "hi", "step", "n_segments", "segment_knots",
                                     "segment_nodes", "segment_seed"},
                              where);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  auto num = [&](const char* key, double& out) {
    if (spec.contains(key)) out = require_number(spec.at(key), where + "." + key);
  };
  auto integer = [&](const char* key, auto& out) {
    if (!spec.contains(key)) return;
    const json& j = spec.at(key);
    if (!j.is_number_integer() || j.get<long long>() < 0) {
      throw ConfigError(where + "." + key + ": expected a non-negative integer");
    }
    out = j.get<std::remove_reference_t<decltype(out)>>();
  };
  num("lo", g.lo);
  num("hi", g.hi);
  num("step", g.step);
  integer("n_segments", g.n_segments);
  integer("segment_knots", g.segment_knots);
  integer("segment_nodes", g.segment_nodes);
  integer("segment_seed", g.segment_seed);
  try {
    (void)g.axis_points();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (g.n_segments < 1 || g.segment_knots < 2 || g.segment_nodes < 1) {
    throw ConfigError(where + ": need n_segments >= 1, segment_knots >= 2, segment_nodes >= 1");
  }
  return g;
}

ExperimentConfig parse_config(const std::string& command, const json& config,
                              const std::filesystem::path& base_dir) {
  const CommandSchema& schema = command_schema(command);
  if (!config.is_object()) throw ConfigError("config: expected a JSON object");

  json params = json::object();
  for (const auto& [key, value] : config.items()) {
    bool known = false;
    for (Field f : schema.required) known = known || key == field_name(f);
    for (Field f : schema.optional) known = known || key == field_name(f);
    if (known) continue;
    if (schema.params.count(key)) {
      params[key] = value;
      continue;
    }
    throw ConfigError(key + ": unknown field for command '" + command + "'");
  }
  for (Field f : schema.required) {
    if (!config.contains(field_name(f))) {
      throw ConfigError(std::string(field_name(f)) + ": required field missing");
    }
  }

  ExperimentConfig out;
  out.command = command;
  std::optional<double> r0;
  if (config.contains("r0")) {
    r0 = require_number(config.at("r0"), "r0");
    if (!(*r0 > 0.0)) throw ConfigError("r0: must be positive");
  }
  out.model = load_model_field(config.at("model"), r0, base_dir);
  const ModelSpec& model = *out.model.model;

  if (config.contains("T")) out.horizon = require_number(config.at("T"), "T");
  if (config.contains("dt")) {
    out.dt = require_number(config.at("dt"), "dt");
    if (!(*out.dt > 0.0)) throw ConfigError("dt: must be positive");
  }
  if (out.horizon && !(*out.horizon > model.r0())) throw ConfigError("T: must exceed r0");
  if (out.horizon && out.dt) (void)out.grid();
  if (out.dt && !out.horizon) {
    const double ratio = model.r0() / *out.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio)) {
      throw ConfigError("dt: does not divide r0");
    }
  }

  if (config.contains("n_paths")) {
    const json& j = config.at("n_paths");
    if (!j.is_number_integer() || j.get<long long>() < 2) {
      throw ConfigError("n_paths: expected an integer >= 2");
    }
    out.mc.n_paths = j.get<std::size_t>();
  }
  if (config.contains("seed")) {
    const json& j = config.at("seed");
    if (!j.is_number_integer() || j.get<long long>() < 0) {
      throw ConfigError("seed: expected a non-negative integer");
    }
    out.mc.seed = j.get<std::uint64_t>();
  }
  if (config.contains("xi")) out.xi = parse_segment(config.at("xi"), model.dim(), model.r0(), "xi");
  if (config.contains("h")) out.h = parse_segment(config.at("h"), model.dim(), model.r0(), "h");
  if (config.contains("f")) out.f = parse_functional(config.at("f"), model.m(), model.d());
  out.params = Params(params);

  out.normalized = config;
  out.normalized["model"] = out.model.definition;
  if (schema.optional.count(Field::n_paths)) out.normalized["n_paths"] = out.mc.n_paths;
  if (schema.optional.count(Field::seed)) out.normalized["seed"] = out.mc.seed;
  out.normalized["r0"] = model.r0();
  return out;
}

}  // namespace fsde::app
