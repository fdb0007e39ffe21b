#include "fsde/model_io.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fsde/errors.hpp"

namespace fsde {

using nlohmann::json;

namespace json_util {

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw InvalidArgument(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) {
      throw InvalidArgument(where + ": unknown field '" + item.key() + "'");
    }
  }
}

DenseMatrix matrix_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return DenseMatrix::Constant(1, 1, j.get<double>());
  if (!j.is_array()) throw InvalidArgument(where + ": expected a matrix (array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return DenseMatrix(0, 0);
  if (!j[0].is_array()) throw InvalidArgument(where + ": expected an array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  DenseMatrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw InvalidArgument(where + ": ragged matrix rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw InvalidArgument(where + ": non-numeric entry");
      out(r, c) = v.get<double>();
    }
  }
  return out;
}

json matrix_to_json(const Eigen::Ref<const DenseMatrix>& mat) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < mat.cols(); ++c) row.push_back(mat(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace json_util

namespace {

using json_util::matrix_from_json;
using json_util::reject_unknown;

DenseMatrix optional_matrix(const json& params, const char* key, Eigen::Index rows,
                            Eigen::Index cols, const std::string& where) {
  if (!params.contains(key)) return DenseMatrix::Zero(rows, cols);
  DenseMatrix mat = matrix_from_json(params.at(key), where + "." + key);
  if (mat.rows() != rows || mat.cols() != cols) {
    throw InvalidArgument(where + "." + key + ": expected " + std::to_string(rows) +
                          "x" + std::to_string(cols));
  }
  return mat;
}

SampledFunction weight_from_json(const json& j, double r0, const std::string& where) {
  if (j.is_number()) return SampledFunction::constant(j.get<double>(), r0);
  if (j.is_array()) {
    std::vector<double> values;
    for (const auto& v : j) {
      if (!v.is_number()) throw InvalidArgument(where + ": non-numeric entry");
      values.push_back(v.get<double>());
    }
    return SampledFunction(std::move(values), r0);
  }
  throw InvalidArgument(where + ": expected a number or an array of samples");
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw InvalidArgument(where + "." + key + ": expected a number");
  const double out = v.get<double>();
  if (!std::isfinite(out)) throw InvalidArgument(where + "." + key + ": not finite");
  return out;
}

StateVec x_part(const StateVec& z, int m) { return z.head(m); }

void register_builtin_forms(CoefficientRegistry& reg) {
  reg.register_z_form("zero", [](const json& p, int, int d, double, CoefficientOracle& o) {
    reject_unknown(p, {}, "Z");
    o.z_value = [d](const StateVec&, const StateVec&) { return StateVec(StateVec::Zero(d)); };
    o.z_dir = [d](const StateVec&, const StateVec&, const StateVec&) {
      return StateVec(StateVec::Zero(d));
    };
  });
  // Z(x, y) = Kx x + Ky y - cubic * y.^3
  reg.register_z_form("linear_cubic", [](const json& p, int m, int d, double,
                                         CoefficientOracle& o) {
    reject_unknown(p, {"Kx", "Ky", "cubic"}, "Z");
    const SmallMat kx = optional_matrix(p, "Kx", d, m, "Z");
    const SmallMat ky = optional_matrix(p, "Ky", d, d, "Z");
    const double c = number(p, "cubic", 0.0, "Z");
    o.z_value = [kx, ky, c, m](const StateVec& x, const StateVec& y) {
      StateVec out(ky.rows());
      out.noalias() = ky * y;
      if (m > 0) out.noalias() += kx * x;
      out -= c * y.cwiseProduct(y).cwiseProduct(y);
      return out;
    };
    o.z_dir = [kx, ky, c, m, d](const StateVec&, const StateVec& y, const StateVec& u) {
      const StateVec ux = x_part(u, m);
      const StateVec uy = u.tail(d);
      StateVec out(d);
      out.noalias() = ky * uy;
      if (m > 0) out.noalias() += kx * ux;
      out -= 3.0 * c * y.cwiseProduct(y).cwiseProduct(uy);
      return out;
    };
  });

  reg.register_b_form("zero", [](const json& p, int, int d, double, CoefficientOracle& o) {
    reject_unknown(p, {}, "b");
    o.b_value = [d](const SegmentView&) { return StateVec(StateVec::Zero(d)); };
    o.b_dir = [d](const SegmentView&, const SegmentView&) {
      return StateVec(StateVec::Zero(d));
    };
    o.discrete_delay = true;
  });
  // b(xi) = Bx xi_1(-r0) + By xi_2(-r0) + cubic * xi_2(-r0).^3
  reg.register_b_form("discrete", [](const json& p, int m, int d, double,
                                     CoefficientOracle& o) {
    reject_unknown(p, {"Bx", "By", "cubic"}, "b");
    const SmallMat bx = optional_matrix(p, "Bx", d, m, "b");
    const SmallMat by = optional_matrix(p, "By", d, d, "b");
    const double c = number(p, "cubic", 0.0, "b");
    auto split = [m, d](const SegmentView& s, StateVec& x, StateVec& y) {
      const auto node = s.oldest();
      x = node.head(m);
      y = node.segment(m, d);
    };
    o.b_value = [=](const SegmentView& s) {
      StateVec x, y;
      split(s, x, y);
      StateVec out(d);
      out.noalias() = by * y;
      if (m > 0) out.noalias() += bx * x;
      out += c * y.cwiseProduct(y).cwiseProduct(y);
      return out;
    };
    o.b_dir = [=](const SegmentView& s, const SegmentView& dir) {
      StateVec x, y, ux, uy;
      split(s, x, y);
      split(dir, ux, uy);
      StateVec out(d);
      out.noalias() = by * uy;
      if (m > 0) out.noalias() += bx * ux;
      out += 3.0 * c * y.cwiseProduct(y).cwiseProduct(uy);
      return out;
    };
    o.discrete_delay = true;
  });
  // b(xi) = int w(theta) Bx xi_1(theta) dtheta + By xi_2(-r0), trapezoid rule.
  reg.register_b_form("distributed", [](const json& p, int m, int d, double r0,
                                        CoefficientOracle& o) {
    reject_unknown(p, {"weight", "Bx", "By"}, "b");
    const SampledFunction w =
        p.contains("weight") ? weight_from_json(p.at("weight"), r0, "b.weight")
                             : SampledFunction::constant(1.0, r0);
    const SmallMat bx = optional_matrix(p, "Bx", d, m, "b");
    const SmallMat by = optional_matrix(p, "By", d, d, "b");
    auto linear = [=](const SegmentView& s) {
      StateVec acc = StateVec::Zero(m);
      const int n = s.n_hist();
      const double h = s.step();
      for (int j = 0; j <= n; ++j) {
        const double wj = ((j == 0 || j == n) ? 0.5 * h : h) * w(-s.r0() + j * h);
        acc += wj * s.node(j).head(m);
      }
      StateVec out(d);
      out.noalias() = by * s.oldest().segment(m, d);
      if (m > 0) out.noalias() += bx * acc;
      return out;
    };
    o.b_value = linear;
    o.b_dir = [linear](const SegmentView&, const SegmentView& dir) { return linear(dir); };
    o.discrete_delay = false;
  });
}

LoadedModel load_explicit(const json& def) {
  reject_unknown(def, {"name", "m", "d", "r0", "A", "M", "sigma", "Z", "b"}, "model");
  for (const char* key : {"m", "d", "r0", "sigma", "Z", "b"}) {
    if (!def.contains(key)) {
      throw InvalidArgument(std::string("model.") + key + ": required field missing");
    }
  }
  ModelDefinition md;
  md.name = def.value("name", std::string("custom"));
  md.m = def.at("m").get<int>();
  md.d = def.at("d").get<int>();
  md.r0 = number(def, "r0", 0.0, "model");
  md.a = def.contains("A") ? matrix_from_json(def.at("A"), "model.A")
                           : DenseMatrix(md.m, md.m);
  md.mm = def.contains("M") ? matrix_from_json(def.at("M"), "model.M")
                            : DenseMatrix(md.m, md.d);
  if (md.m == 0) {
    md.a = DenseMatrix(0, 0);
    md.mm = DenseMatrix(0, md.d);
  }
  md.sigma = matrix_from_json(def.at("sigma"), "model.sigma");

  auto apply = [&](const char* key, bool is_z) {
    const json& spec = def.at(key);
    if (!spec.is_object() || !spec.contains("form") || !spec.at("form").is_string()) {
      throw InvalidArgument(std::string("model.") + key + ": expected {\"form\": name, ...}");
    }
    json params = spec;
    params.erase("form");
    const auto form = spec.at("form").get<std::string>();
    const auto& reg = CoefficientRegistry::instance();
    if (is_z) {
      reg.apply_z(form, params, md.m, md.d, md.r0, md.coeffs);
    } else {
      reg.apply_b(form, params, md.m, md.d, md.r0, md.coeffs);
    }
  };
  apply("Z", true);
  apply("b", false);

  LoadedModel out;
  out.model = std::make_shared<const ModelSpec>(std::move(md));
  out.definition = def;
  return out;
}

LoadedModel from_suite(ModelWithSuite ms, json definition) {
  LoadedModel out;
  out.model = std::move(ms.model);
  out.suite = std::move(ms.suite);
  out.definition = std::move(definition);
  return out;
}

}  // namespace

CoefficientRegistry::CoefficientRegistry() { register_builtin_forms(*this); }

CoefficientRegistry& CoefficientRegistry::instance() {
  static CoefficientRegistry registry;
  return registry;
}

void CoefficientRegistry::register_z_form(const std::string& name, Factory factory) {
  z_forms_[name] = std::move(factory);
}

void CoefficientRegistry::register_b_form(const std::string& name, Factory factory) {
  b_forms_[name] = std::move(factory);
}

void CoefficientRegistry::apply_z(const std::string& name, const json& params, int m,
                                  int d, double r0, CoefficientOracle& out) const {
  const auto it = z_forms_.find(name);
  if (it == z_forms_.end()) throw InvalidArgument("model.Z.form: unknown form '" + name + "'");
  it->second(params, m, d, r0, out);
}

void CoefficientRegistry::apply_b(const std::string& name, const json& params, int m,
                                  int d, double r0, CoefficientOracle& out) const {
  const auto it = b_forms_.find(name);
  if (it == b_forms_.end()) throw InvalidArgument("model.b.form: unknown form '" + name + "'");
  it->second(params, m, d, r0, out);
}

LoadedModel builtin_model(const std::string& name, const json& params) {
  const json p = params.is_null() ? json::object() : params;
  if (name == "example-4.1" || name == "4.1") {
    reject_unknown(p, {"eps", "r0", "delay_weight"}, "model");
    const double r0 = number(p, "r0", 0.5, "model");
    const double eps = number(p, "eps", 0.1, "model");
    const SampledFunction w = p.contains("delay_weight")
                                  ? weight_from_json(p.at("delay_weight"), r0, "model.delay_weight")
                                  : SampledFunction::constant(1.0, r0);
    json def = {{"example", "4.1"}, {"eps", eps}, {"r0", r0}};
    def["delay_weight"] = p.contains("delay_weight") ? p.at("delay_weight") : json(1.0);
    return from_suite(make_example_4_1(eps, w, r0), def);
  }
  if (name == "example-4.2" || name == "4.2") {
    reject_unknown(p, {"r0"}, "model");
    const double r0 = number(p, "r0", 0.5, "model");
    return from_suite(make_example_4_2(r0), {{"example", "4.2"}, {"r0", r0}});
  }
  if (name == "ou") {
    reject_unknown(p, {"r0", "rate"}, "model");
    const double r0 = number(p, "r0", 0.5, "model");
    const double rate = number(p, "rate", 1.0, "model");
    return from_suite(make_ou_benchmark(r0, rate),
                      {{"example", "ou"}, {"r0", r0}, {"rate", rate}});
  }
  throw InvalidArgument("model: unknown built-in model '" + name + "'");
}

LoadedModel load_model(const json& definition) {
  if (definition.is_string()) return builtin_model(definition.get<std::string>(), json::object());
  if (!definition.is_object()) throw InvalidArgument("model: expected an object or a name");
  if (definition.contains("example")) {
    json params = definition;
    params.erase("example");
    const json& ex = definition.at("example");
    if (!ex.is_string()) throw InvalidArgument("model.example: expected a string");
    return builtin_model(ex.get<std::string>(), params);
  }
  return load_explicit(definition);
}

}  // namespace fsde
