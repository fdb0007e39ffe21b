#pragma once

#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "fsde/segment.hpp"

namespace fsde {

// Cylindrical functional of the terminal segment (finitely many reads).
struct TerminalFunctional {
  std::string name;
  std::function<double(const SegmentView& terminal)> eval;
  bool positive = false;  // eval > 0 everywhere
};

/// Built-in functionals by name. Components index the full state (x, y); the
/// "y" forms take a Y-index and are offset by m.
///   one                      1
///   x, y                     component at theta = 0
///   y_squared                Y(T)^2
///   tanh_y                   tanh(Y(T))
///   one_plus_tanh2_y         1 + tanh(Y(T))^2          (positive)
///   exp_neg_y2               exp(-Y(T)^2)               (positive)
///   y_lag                    Y(T - lag), lag in [0, r0]
///   y_window_mean            trapezoid mean of Y over the terminal window
/// params: {"component": int, "lag": real}; unknown keys throw.
TerminalFunctional make_functional(const std::string& name, const nlohmann::json& params,
                                   int m, int d);

}  // namespace fsde
