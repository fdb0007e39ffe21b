#include "fsde/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsde/errors.hpp"
#include "fsde/verify.hpp"

namespace fsde {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sup_w(const LyapunovSuite* suite, const Segment& seg) {
  if (!suite || !suite->w_value) return 1.0;
  double best = -std::numeric_limits<double>::infinity();
  const SegmentView v = seg.view();
  for (int j = 0; j <= v.n_hist(); ++j) best = std::max(best, suite->w_value(StateVec(v.node(j))));
  return best;
}

double sup_u(const LyapunovSuite& suite, const Segment& seg) {
  double best = 0.0;
  const SegmentView v = seg.view();
  for (int j = 0; j <= v.n_hist(); ++j) best = std::max(best, suite.u_value(StateVec(v.node(j))));
  return best;
}

double suite_l(const LyapunovSuite* suite) {
  return suite && suite->has_constant("l") ? suite->constant("l") : 0.0;
}

bool finite(double v) { return std::isfinite(v); }

double ratio(double num, double den) { return den != 0.0 ? num / den : kNaN; }

Estimate abs_estimate(Estimate e) {
  e.mean = std::abs(e.mean);
  return e;
}

// Index of time t on the grid; throws unless t is a multiple of dt.
int time_index(double t, double dt) {
  const double pos = t / dt;
  const double rounded = std::round(pos);
  if (t < 0.0 || std::abs(pos - rounded) > 1e-9 * std::max(1.0, pos)) {
    throw InvalidArgument("t = " + std::to_string(t) + " is not a non-negative multiple of dt");
  }
  return static_cast<int>(rounded);
}

SimGrid grid_covering(double t_max, double r0, double dt) {
  const int n_hist = time_index(r0, dt);
  const int n = std::max(time_index(t_max, dt), n_hist + 1);
  SimGrid g;
  g.dt = dt;
  g.n_steps = n;
  g.n_hist = n_hist;
  return g;
}

void grid_w_means(const ModelSpec& model, const LyapunovSuite& suite,
                  const Segment& xi, const std::vector<int>& idx, const SimGrid& grid,
                  const MonteCarloOptions& opts, bool running_sup, std::vector<Estimate>& out) {
  const int dim = model.dim();
  out = estimate_path_statistics(
      model, xi, grid, opts, static_cast<int>(idx.size()),
      [&](const DenseMatrix& states, const SimGrid& g, double* res) {
        double running = -std::numeric_limits<double>::infinity();
        std::size_t next = 0;
        StateVec z(dim);
        for (int n = 0; n <= g.n_steps && next < idx.size(); ++n) {
          z = states.col(g.column(n));
          const double w = suite.w_value(z);
          running = std::max(running, w);
          while (next < idx.size() && idx[next] == n) {
            res[next] = running_sup ? running : w;
            ++next;
          }
        }
      });
}

std::vector<int> sorted_indices(const std::vector<double>& t_list, double dt) {
  std::vector<int> idx;
  for (double t : t_list) idx.push_back(time_index(t, dt));
  if (!std::is_sorted(idx.begin(), idx.end())) {
    throw InvalidArgument("t_list must be increasing");
  }
  return idx;
}

}  // namespace

MomentBoundReport check_moment_bound(const ModelSpec& model, const LyapunovSuite& suite,
                                     const Segment& xi_in, const std::vector<double>& t_list,
                                     double dt, const MonteCarloOptions& opts) {
  if (t_list.empty()) throw InvalidArgument("moment bound: empty t_list");
  if (!suite.w_value || !suite.u_value) {
    throw InvalidArgument("moment bound: suite needs W and U maps");
  }
  const std::vector<int> idx = sorted_indices(t_list, dt);
  const SimGrid grid = grid_covering(t_list.back(), model.r0(), dt);
  const Segment xi = on_grid(xi_in, grid);

  MomentBoundReport rep;
  rep.lyap_alpha = suite.constant("lyap_alpha");
  const double gamma = suite.constant("gamma");
  rep.delta = (rep.lyap_alpha * model.r0() + 1.0) * sup_w(&suite, xi) +
              gamma * model.r0() * sup_u(suite, xi);

  std::vector<Estimate> est;
  grid_w_means(model, suite, xi, idx, grid, opts, false, est);
  rep.passed = true;
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    MomentRow row;
    row.t = t_list[i];
    row.w_mean = est[i];
    row.bound = rep.delta * std::exp(2.0 * rep.lyap_alpha * row.t);
    row.passed = row.w_mean.mean <= row.bound + 3.0 * row.w_mean.std_err;
    rep.passed = rep.passed && row.passed;
    rep.rows.push_back(row);
  }
  rep.n_rejected = est.front().n_rejected;
  rep.passed = rep.passed && rep.n_rejected == 0;
  return rep;
}

GrowthReport sup_w_growth(const ModelSpec& model, const LyapunovSuite& suite,
                          const Segment& xi_in, const std::vector<double>& t_list, double dt,
                          const MonteCarloOptions& opts) {
  if (t_list.empty()) throw InvalidArgument("growth: empty t_list");
  if (!suite.w_value) throw InvalidArgument("growth: suite needs a W map");
  const std::vector<int> idx = sorted_indices(t_list, dt);
  const SimGrid grid = grid_covering(t_list.back(), model.r0(), dt);
  const Segment xi = on_grid(xi_in, grid);

  GrowthReport rep;
  rep.t = t_list;
  grid_w_means(model, suite, xi, idx, grid, opts, true, rep.sup_w);
  rep.n_rejected = rep.sup_w.front().n_rejected;
  double st = 0, sy = 0, stt = 0, sty = 0;
  rep.finite = true;
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    const double y = std::log(rep.sup_w[i].mean);
    rep.finite = rep.finite && finite(y);
    st += t_list[i];
    sy += y;
    stt += t_list[i] * t_list[i];
    sty += t_list[i] * y;
  }
  const double n = static_cast<double>(t_list.size());
  const double den = n * stt - st * st;
  rep.fitted_rate = den > 0.0 ? (n * sty - st * sy) / den : 0.0;
  return rep;
}

ShapeInputs shape_inputs(const ModelSpec& model, const LyapunovSuite* suite, const Segment& xi,
                         const Segment& h, const SimGrid& grid) {
  ShapeInputs s;
  s.h0 = h.view().newest().norm();
  s.h_sup = h.sup_norm();
  s.w_sup = sup_w(suite, xi);
  s.m_norm = model.m() > 0 ? model.m_norm() : 0.0;
  s.k = model.k_star();
  s.horizon = grid.horizon();
  s.r0 = grid.r0();
  s.tau = s.horizon - s.r0;
  return s;
}

InequalityReport check_log_harnack(const ModelSpec& model, const LyapunovSuite* suite,
                                   const Segment& xi_in, const Segment& h_in,
                                   const TerminalFunctional& f, const SimGrid& grid,
                                   const MonteCarloOptions& opts,
                                   const std::vector<double>& h_scales) {
  if (!f.positive) throw InvalidArgument("log-harnack: f must be positive");
  const Segment xi = on_grid(xi_in, grid);
  const Segment h = on_grid(h_in, grid);
  const auto term = [&f](const DenseMatrix& states, const SimGrid& g, double* out) {
    const SegmentView t = terminal_view(states, g);
    const double v = f.eval(t);
    out[0] = v;
    out[1] = std::log(v);
  };
  const std::vector<Estimate> base = estimate_path_statistics(model, xi, grid, opts, 2, term);
  const double log_pf = std::log(base[0].mean);
  const double se_log_pf = base[0].std_err / base[0].mean;

  InequalityReport rep;
  rep.name = "log-harnack";
  const double jensen = base[1].mean - log_pf;
  const double jensen_se = std::hypot(base[1].std_err, se_log_pf);
  rep.checks["jensen_h0"] = jensen <= 3.0 * jensen_se;
  rep.info["jensen_lhs_h0"] = jensen;
  rep.info["jensen_se_h0"] = jensen_se;

  const double l = suite_l(suite);
  const bool has_u = suite && suite->u_increment;
  rep.sweep_parameter = "h_scale";
  bool all_finite = finite(jensen);
  std::vector<double> fitted;
  for (double c : h_scales) {
    const Segment hc = h * c;
    const Segment shifted = xi + hc;
    const std::vector<Estimate> sh = estimate_path_statistics(model, shifted, grid, opts, 2, term);
    ShapeInputs s = shape_inputs(model, suite, xi, hc, grid);
    const double tau1 = s.tau_min1();
    const double w_shift = sup_w(suite, shifted);
    const double u_arg = s.h_sup + s.m_norm * s.h0 / tau1;
    const double u = has_u ? suite->u_increment(u_arg) : 0.0;
    const double shape = (std::pow(w_shift, 2.0 * l) + u * u) * s.h_sup * s.h_sup +
                         s.h0 * s.h0 / tau1 +
                         s.m_norm * s.m_norm * s.h0 * s.h0 / std::pow(tau1, 4 * s.k + 3);
    SweepRow row;
    row.parameter = c;
    row.lhs.mean = sh[1].mean - log_pf;
    row.lhs.std_err = std::hypot(sh[1].std_err, se_log_pf);
    row.lhs.n = sh[1].n;
    row.lhs.n_rejected = sh[1].n_rejected;
    row.rhs_shape = shape;
    row.fitted_c = ratio(row.lhs.mean, shape);
    all_finite = all_finite && finite(row.lhs.mean) && finite(shape);
    if (row.fitted_c > 0.0) fitted.push_back(row.fitted_c);
    if (c == 1.0) {
      rep.lhs = row.lhs;
      rep.rhs_shape_value = shape;
      rep.fitted_c = row.fitted_c;
    }
    rep.sweep.push_back(row);
  }
  if (std::find(h_scales.begin(), h_scales.end(), 1.0) == h_scales.end() && !rep.sweep.empty()) {
    rep.lhs = rep.sweep.front().lhs;
    rep.rhs_shape_value = rep.sweep.front().rhs_shape;
    rep.fitted_c = rep.sweep.front().fitted_c;
  }
  if (fitted.size() == h_scales.size() && !fitted.empty()) {
    const auto [lo, hi] = std::minmax_element(fitted.begin(), fitted.end());
    rep.info["fitted_c_spread"] = *hi / *lo;
  }
  rep.checks["finite"] = all_finite;
  rep.passed_structural = rep.checks["jensen_h0"] && all_finite;
  return rep;
}

InequalityReport check_power_harnack(const ModelSpec& model, const LyapunovSuite* suite,
                                     const Segment& xi_in, const Segment& h_in,
                                     const TerminalFunctional& f, const SimGrid& grid, double p,
                                     double l, const MonteCarloOptions& opts,
                                     const std::vector<double>& p_sweep) {
  if (!f.positive) throw InvalidArgument("power-harnack: f must be positive");
  if (!(p > 1.0)) throw InvalidArgument("power-harnack: p must exceed 1");
  if (!(l >= 0.0 && l < 0.5)) throw InvalidArgument("power-harnack: l must lie in [0, 1/2)");
  const Segment xi = on_grid(xi_in, grid);
  const Segment h = on_grid(h_in, grid);
  std::vector<double> ps = p_sweep;
  if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.insert(ps.begin(), p);
  for (double q : ps) {
    if (!(q > 1.0)) throw InvalidArgument("power-harnack: every p must exceed 1");
  }
  const int k_out = static_cast<int>(ps.size());
  const auto moments = [&f, &ps, k_out](const DenseMatrix& states, const SimGrid& g,
                                        double* out) {
    const SegmentView t = terminal_view(states, g);
    const double v = f.eval(t);
    out[0] = v;
    for (int i = 0; i < k_out; ++i) out[i + 1] = std::pow(v, ps[static_cast<std::size_t>(i)]);
  };
  const std::vector<Estimate> base =
      estimate_path_statistics(model, xi, grid, opts, k_out + 1, moments);
  const Segment shifted = xi + h;
  const std::vector<Estimate> sh =
      estimate_path_statistics(model, shifted, grid, opts, k_out + 1, moments);

  const ShapeInputs s = shape_inputs(model, suite, xi, h, grid);
  // int_0^1 ||W(xi + s h)|| ds by Simpson on 20 intervals.
  const std::vector<double> w = quadrature::simpson_weights(20, 1.0 / 20);
  double w_int = 0.0;
  for (int j = 0; j <= 20; ++j) w_int += w[static_cast<std::size_t>(j)] * sup_w(suite, xi + h * (j / 20.0));
  const double tau1 = s.tau_min1();
  const double core = s.h_sup * s.h_sup +
                      s.m_norm * s.m_norm * s.h0 * s.h0 / std::pow(tau1, 4 * s.k + 2);

  InequalityReport rep;
  rep.name = "power-harnack";
  rep.sweep_parameter = "p";
  bool jensen_ok = true;
  bool all_finite = true;
  const double m = base[0].mean;
  for (int i = 0; i < k_out; ++i) {
    const double q = ps[static_cast<std::size_t>(i)];
    const Estimate& fq = base[static_cast<std::size_t>(i + 1)];
    const double mq = std::pow(m, q);
    const double se_mq = q * std::pow(m, q - 1.0) * base[0].std_err;
    const bool ok = fq.mean >= mq - 3.0 * std::hypot(fq.std_err, se_mq);
    jensen_ok = jensen_ok && ok;

    const double ms = sh[0].mean;
    SweepRow row;
    row.parameter = q;
    row.lhs.mean = std::pow(ms, q);
    row.lhs.std_err = q * std::pow(ms, q - 1.0) * sh[0].std_err;
    row.lhs.n = sh[0].n;
    row.lhs.n_rejected = sh[0].n_rejected;
    double tail = std::pow(core, 1.0 / (1.0 - 2.0 * l));
    if (l > 0.0) {
      const double a = s.h_sup > 0.0 ? (q - 1.0) * (q - 1.0) / (s.h_sup * s.h_sup)
                                     : std::numeric_limits<double>::infinity();
      tail *= std::pow(std::max(a, 1.0), 2.0 * l / (1.0 - 2.0 * l));
    }
    row.rhs_shape = q / (q - 1.0) * (s.h_sup * s.h_sup * w_int + tail);
    row.fitted_c = ratio(std::log(row.lhs.mean / fq.mean), row.rhs_shape);
    row.extra["baseline_f_p"] = fq.mean;
    row.extra["baseline_f_p_se"] = fq.std_err;
    row.extra["jensen_ok"] = ok ? 1.0 : 0.0;
    row.extra["fitted_c_times_p_over_p_minus_1"] = row.fitted_c * q / (q - 1.0);
    all_finite = all_finite && finite(row.lhs.mean) && finite(row.rhs_shape) && finite(fq.mean);
    if (q == p) {
      rep.lhs = row.lhs;
      rep.rhs_shape_value = row.rhs_shape;
      rep.fitted_c = row.fitted_c;
      rep.info["baseline_f_p"] = fq.mean;
      rep.info["baseline_f_p_se"] = fq.std_err;
      rep.info["p"] = q;
    }
    rep.sweep.push_back(row);
  }
  rep.info["l"] = l;
  rep.checks["jensen_baseline"] = jensen_ok;
  rep.checks["finite"] = all_finite;
  rep.passed_structural = jensen_ok && all_finite;
  return rep;
}

namespace {

double gradient_bracket(const ModelSpec& model, const LyapunovSuite* suite, const Segment& xi,
                        const ShapeInputs& s, bool& delta_form) {
  const double tk = std::pow(s.tau, 2 * s.k + 1);
  const double first = s.h0 * (1.0 + s.m_norm / std::min(tk, 1.0));
  delta_form = model.coeffs().discrete_delay && suite && suite->u_value &&
               suite->has_constant("lyap_alpha") && suite->has_constant("gamma");
  const double t_cap = std::sqrt(std::min(s.horizon, 1.0 + s.r0));
  if (delta_form) {
    const double delta = (suite->constant("lyap_alpha") * s.r0 + 1.0) * s.w_sup +
                         suite->constant("gamma") * s.r0 * sup_u(*suite, xi);
    return first + std::sqrt(s.r0 * s.w_sup) * s.h_sup +
           s.h0 * std::sqrt(delta) * t_cap * (1.0 + s.m_norm / tk);
  }
  const double l = suite_l(suite);
  return first + std::pow(s.w_sup, l) * t_cap *
                     (s.h_sup + s.m_norm * s.h0 / std::min(tk, 1.0));
}

}  // namespace

InequalityReport gradient_bound_report(const ModelSpec& model, const LyapunovSuite* suite,
                                       const Segment& xi_in, const Segment& h_in,
                                       const TerminalFunctional& f, const SimGrid& grid,
                                       const MonteCarloOptions& opts,
                                       const std::vector<double>& tau_sweep) {
  InequalityReport rep;
  rep.name = "gradient-bound";
  rep.sweep_parameter = "T_minus_r0";
  const auto f_sq = [&f](const DenseMatrix& states, const SimGrid& g, double* out) {
    const SegmentView t = terminal_view(states, g);
    const double v = f.eval(t);
    out[0] = v * v;
  };
  bool all_finite = true;
  auto run = [&](const SimGrid& g, SweepRow& row) {
    const Segment xi = on_grid(xi_in, g);
    const Segment h = on_grid(h_in, g);
    const BismutResult b = estimate_gradient_bismut(model, xi, h, f, g, opts);
    const Estimate pf2 = estimate_path_statistics(model, xi, g, opts, 1, f_sq)[0];
    const ShapeInputs s = shape_inputs(model, suite, xi, h, g);
    bool delta_form = false;
    const double bracket = gradient_bracket(model, suite, xi, s, delta_form);
    row.parameter = s.tau;
    row.lhs = abs_estimate(b.estimate);
    row.rhs_shape = std::sqrt(pf2.mean) * bracket;
    row.fitted_c = ratio(row.lhs.mean, row.rhs_shape);
    row.extra["sqrt_P_f2"] = std::sqrt(pf2.mean);
    row.extra["bracket"] = bracket;
    row.extra["delta_form"] = delta_form ? 1.0 : 0.0;
    row.extra["weight_variance"] = b.weight_variance;
    all_finite = all_finite && finite(row.lhs.mean) && finite(row.rhs_shape);
  };
  SweepRow main;
  run(grid, main);
  rep.lhs = main.lhs;
  rep.rhs_shape_value = main.rhs_shape;
  rep.fitted_c = main.fitted_c;
  rep.info = main.extra;
  for (double tau : tau_sweep) {
    SweepRow row;
    run(SimGrid::make(grid.r0() + tau, grid.r0(), grid.dt), row);
    rep.sweep.push_back(row);
  }
  rep.checks["finite"] = all_finite;
  rep.checks["lhs_nonnegative"] = rep.lhs.mean >= 0.0;
  rep.passed_structural = all_finite;
  return rep;
}

InequalityReport entropy_gradient_report(const ModelSpec& model, const LyapunovSuite& suite,
                                         const Segment& xi_in, const Segment& h_in,
                                         const TerminalFunctional& f, const SimGrid& grid,
                                         double eps_param, const MonteCarloOptions& opts,
                                         const std::vector<double>& r_values) {
  if (!f.positive) throw InvalidArgument("entropy-gradient: f must be positive");
  if (!suite.u_value || !suite.w_tilde_log) {
    throw InvalidArgument("entropy-gradient: suite needs U~ and log W~ maps");
  }
  const Segment xi = on_grid(xi_in, grid);
  const Segment h = on_grid(h_in, grid);
  const double lambda2 = suite.constant("e28_lambda2");
  const double lambda4 = suite.constant("e28_lambda4");
  const double k_const = e28_constant_k(eps_param);

  const BismutResult b = estimate_gradient_bismut(model, xi, h, f, grid, opts);
  const std::vector<Estimate> mom = estimate_path_statistics(
      model, xi, grid, opts, 2, [&f](const DenseMatrix& states, const SimGrid& g, double* out) {
        const SegmentView t = terminal_view(states, g);
        const double v = f.eval(t);
        out[0] = v;
        out[1] = v * std::log(v);
      });
  const double pf = mom[0].mean;
  const double ent = mom[1].mean - pf * std::log(pf);

  const ShapeInputs s = shape_inputs(model, &suite, xi, h, grid);
  const double tau1 = s.tau_min1();
  const double m2 = s.m_norm * s.m_norm;
  const double log_wt = suite.w_tilde_log(StateVec(xi.view().newest()));
  const double bracket =
      s.h0 * s.h0 * (1.0 / tau1 + m2 / std::pow(tau1, 4 * s.k + 3)) +
      (1.0 + m2) * s.h0 * s.h0 / std::pow(tau1, 4 * s.k + 2) *
          (lambda2 * s.r0 * s.w_sup + lambda4 * s.r0 * sup_u(suite, xi) + k_const * s.horizon +
           log_wt);
  const double r_min = 1.0 / std::pow(s.tau, 2 * s.k + 1);
  std::vector<double> rs = r_values;
  if (rs.empty()) {
    for (double c : {1.0, 2.0, 4.0, 8.0, 16.0}) rs.push_back(c * r_min);
  }

  InequalityReport rep;
  rep.name = "entropy-gradient";
  rep.sweep_parameter = "r";
  rep.lhs = abs_estimate(b.estimate);
  bool all_finite = finite(rep.lhs.mean) && finite(ent) && finite(bracket);
  for (double r : rs) {
    if (!(r > 0.0)) throw InvalidArgument("entropy-gradient: r must be positive");
    SweepRow row;
    row.parameter = r;
    row.lhs = rep.lhs;
    row.rhs_shape = r * ent + pf / (2.0 * r) * bracket;
    row.fitted_c = ratio((rep.lhs.mean - r * ent) * 2.0 * r, pf * bracket);
    row.extra["below_floor"] = r < r_min * (1.0 - 1e-12) ? 1.0 : 0.0;
    all_finite = all_finite && finite(row.rhs_shape);
    rep.sweep.push_back(row);
  }
  rep.rhs_shape_value = rep.sweep.front().rhs_shape;
  rep.fitted_c = rep.sweep.front().fitted_c;
  rep.info["entropy"] = ent;
  rep.info["P_f"] = pf;
  rep.info["bracket"] = bracket;
  rep.info["K"] = k_const;
  rep.info["r_floor"] = r_min;
  const double ent_se = std::hypot(mom[1].std_err, (std::log(pf) + 1.0) * mom[0].std_err);
  rep.checks["entropy_nonnegative"] = ent >= -3.0 * ent_se;
  rep.checks["finite"] = all_finite;
  rep.passed_structural = rep.checks["entropy_nonnegative"] && all_finite;
  return rep;
}

}  // namespace fsde
