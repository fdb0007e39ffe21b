#include "fsde/functional.hpp"

#include <cmath>

#include "fsde/errors.hpp"
#include "fsde/model_io.hpp"

namespace fsde {

TerminalFunctional make_functional(const std::string& name, const nlohmann::json& params,
                                   int m, int d) {
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  if (!p.is_object()) throw InvalidArgument("f.params: expected an object");
  json_util::reject_unknown(p, {"component", "lag"}, "f.params");
  const int comp = p.value("component", 0);
  const bool x_form = name == "x";
  const int limit = x_form ? m : d;
  if (comp < 0 || comp >= limit) {
    throw InvalidArgument("f.params.component: " + std::to_string(comp) + " out of range for '" +
                          name + "'");
  }
  const int idx = x_form ? comp : m + comp;

  TerminalFunctional f;
  f.name = name;
  if (name == "one") {
    f.eval = [](const SegmentView&) { return 1.0; };
    f.positive = true;
  } else if (name == "x" || name == "y") {
    f.eval = [idx](const SegmentView& s) { return s.value(s.n_hist(), idx); };
  } else if (name == "y_squared") {
    f.eval = [idx](const SegmentView& s) {
      const double y = s.value(s.n_hist(), idx);
      return y * y;
    };
  } else if (name == "tanh_y") {
    f.eval = [idx](const SegmentView& s) { return std::tanh(s.value(s.n_hist(), idx)); };
  } else if (name == "one_plus_tanh2_y") {
    f.eval = [idx](const SegmentView& s) {
      const double t = std::tanh(s.value(s.n_hist(), idx));
      return 1.0 + t * t;
    };
    f.positive = true;
  } else if (name == "exp_neg_y2") {
    f.eval = [idx](const SegmentView& s) {
      const double y = s.value(s.n_hist(), idx);
      return std::exp(-y * y);
    };
    f.positive = true;
  } else if (name == "y_lag") {
    const double lag = p.value("lag", 0.0);
    if (!(lag >= 0.0)) throw InvalidArgument("f.params.lag: must be >= 0");
    f.eval = [idx, lag](const SegmentView& s) { return s.eval(-lag)(idx); };
  } else if (name == "y_window_mean") {
    f.eval = [idx](const SegmentView& s) {
      const int n = s.n_hist();
      double acc = 0.5 * (s.value(0, idx) + s.value(n, idx));
      for (int j = 1; j < n; ++j) acc += s.value(j, idx);
      return acc / n;
    };
  } else {
    throw InvalidArgument("f.name: unknown functional '" + name + "'");
  }
  if (name != "y_lag" && p.contains("lag")) {
    throw InvalidArgument("f.params.lag: only valid for y_lag");
  }
  return f;
}

}  // namespace fsde
