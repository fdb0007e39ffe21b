#pragma once

#include <map>
#include <string>
#include <vector>

#include "fsde/estimate.hpp"
#include "fsde/model.hpp"

namespace fsde {

struct MomentRow {
  double t = 0.0;
  Estimate w_mean;     // E W(X(t), Y(t))
  double bound = 0.0;  // delta e^{2 alpha t}
  bool passed = false;
};

struct MomentBoundReport {
  double delta = 0.0;
  double lyap_alpha = 0.0;
  std::vector<MomentRow> rows;
  std::size_t n_rejected = 0;
  bool passed = false;  // every row passed and no path blew up
};

/// One-sided check E W(X(t), Y(t)) <= delta e^{2 alpha t} + 3 SE with
/// delta = (alpha r0 + 1) ||W(xi)|| + gamma r0 ||U(xi)||. Every t must be a
/// multiple of dt.
MomentBoundReport check_moment_bound(const ModelSpec& model, const LyapunovSuite& suite,
                                     const Segment& xi, const std::vector<double>& t_list,
                                     double dt, const MonteCarloOptions& opts);

struct GrowthReport {
  std::vector<double> t;
  std::vector<Estimate> sup_w;  // E sup_{s <= t} W(X(s), Y(s))
  double fitted_rate = 0.0;     // least-squares slope of log E sup W against t
  std::size_t n_rejected = 0;
  bool finite = false;
};

/// Running supremum of W along paths; a qualitative growth check.
GrowthReport sup_w_growth(const ModelSpec& model, const LyapunovSuite& suite,
                          const Segment& xi, const std::vector<double>& t_list, double dt,
                          const MonteCarloOptions& opts);

struct SweepRow {
  double parameter = 0.0;
  Estimate lhs;
  double rhs_shape = 0.0;
  double fitted_c = 0.0;
  std::map<std::string, double> extra;
};

struct InequalityReport {
  std::string name;
  Estimate lhs;
  double rhs_shape_value = 0.0;  // structural expression with every C = 1
  double fitted_c = 0.0;
  bool passed_structural = false;
  std::map<std::string, bool> checks;
  std::map<std::string, double> info;
  std::string sweep_parameter;
  std::vector<SweepRow> sweep;
};

// Quantities shared by the shapes: norms of the direction and the horizon
// factor (T - r0) ^ 1.
struct ShapeInputs {
  double h0 = 0.0;      // |h(0)|
  double h_sup = 0.0;   // ||h||_inf
  double w_sup = 1.0;   // ||W(xi)||_inf
  double m_norm = 0.0;  // ||M||
  int k = 0;            // Kalman index
  double tau = 0.0;     // T - r0
  double horizon = 0.0;
  double r0 = 0.0;
  double tau_min1() const { return tau < 1.0 ? tau : 1.0; }
};

ShapeInputs shape_inputs(const ModelSpec& model, const LyapunovSuite* suite, const Segment& xi,
                         const Segment& h, const SimGrid& grid);

/// P_T log f(xi + h) - log P_T f(xi) against
///   [||W(xi + h)||^{2l} + U(||h|| + ||M|| |h(0)| / tau1)^2] ||h||^2
///     + |h(0)|^2 / tau1 + ||M||^2 |h(0)|^2 / tau1^{4k+3},   tau1 = (T - r0) ^ 1,
/// swept over the h scalings. The Jensen check at h = 0 is structural.
InequalityReport check_log_harnack(const ModelSpec& model, const LyapunovSuite* suite,
                                   const Segment& xi, const Segment& h,
                                   const TerminalFunctional& f, const SimGrid& grid,
                                   const MonteCarloOptions& opts,
                                   const std::vector<double>& h_scales = {0.5, 1.0, 2.0});

/// (P_T f)^p(xi + h) against P_T f^p(xi) exp[C E(p)]; rhs_shape_value is the
/// exponent E(p) with C = 1 and fitted_c = log(lhs / P_T f^p(xi)) / E(p).
/// The Jensen baseline P_T f^p >= (P_T f)^p - 3 SE is structural.
InequalityReport check_power_harnack(const ModelSpec& model, const LyapunovSuite* suite,
                                     const Segment& xi, const Segment& h,
                                     const TerminalFunctional& f, const SimGrid& grid, double p,
                                     double l, const MonteCarloOptions& opts,
                                     const std::vector<double>& p_sweep = {});

/// |grad_h P_T f(xi)| against sqrt(P_T f^2) times the gradient-bound bracket.
/// Discrete-delay models whose suite supplies lyap_alpha, gamma and U use the
/// delta-weighted bracket. Each tau in tau_sweep reruns at T = r0 + tau.
InequalityReport gradient_bound_report(const ModelSpec& model, const LyapunovSuite* suite,
                                       const Segment& xi, const Segment& h,
                                       const TerminalFunctional& f, const SimGrid& grid,
                                       const MonteCarloOptions& opts,
                                       const std::vector<double>& tau_sweep = {});

/// |grad_h P_T f| <= r Ent(f) + C P_T f / (2r) B over an r-sweep; fitted_c(r)
/// is the C that makes the inequality tight. Default r values are
/// {1, 2, 4, 8, 16} / (T - r0)^{2k+1}.
InequalityReport entropy_gradient_report(const ModelSpec& model, const LyapunovSuite& suite,
                                         const Segment& xi, const Segment& h,
                                         const TerminalFunctional& f, const SimGrid& grid,
                                         double eps_param, const MonteCarloOptions& opts,
                                         const std::vector<double>& r_values = {});

}  // namespace fsde
