// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fsde/coupling.hpp"
#include "fsde/errors.hpp"
#include "fsde/estimate.hpp"
#include "fsde/functional.hpp"
#include "fsde/harness.hpp"
#include "fsde/matops.hpp"
#include "fsde/model.hpp"
#include "fsde/verify.hpp"
#include "fsde_app/commands.hpp"

namespace {

using namespace fsde;
using nlohmann::json;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Segment constant(std::initializer_list<double> v, int n_hist, double r0) {
  DenseVector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double c : v) x(i++) = c;
  return Segment::constant(x, n_hist, r0);
}

ModelWithSuite example_41(double eps) {
  return make_example_4_1(eps, SampledFunction::constant(1.0, 0.5), 0.5);
}

TerminalFunctional functional(const std::string& name, const ModelSpec& model) {
  return make_functional(name, json::object(), model.m(), model.d());
}

Outcome coupling_identity() {
  const ModelWithSuite ex = example_41(0.1);
  const double eps = 0.5;
  auto sup_error = [&](double dt) {
    const SimGrid g = SimGrid::make(1.5, 0.5, dt);
    const Segment xi = constant({1.0, 1.0}, g.n_hist, 0.5);
    const CouplingPlan plan = build_plan(*ex.model, constant({1.0, 1.0}, g.n_hist, 0.5), g);
    double worst = 0.0;
    for (std::uint64_t p = 0; p < 100; ++p) {
      const PathBundle base =
          simulate_path(*ex.model, xi, g, generate_increments(2024, p, g.n_steps, 1, dt));
      const PathBundle shifted = simulate_shifted(*ex.model, plan, base, eps);
      worst = std::max(worst, check_coupling_identity(base, shifted, plan, eps).sup_error);
    }
    return worst;
  };
  const double coarse = sup_error(1e-3);
  const double fine = sup_error(5e-4);
  const double order = observed_order(coarse, fine);
  return {order >= 0.8 && order <= 1.2 && coarse <= 0.05,
          "sup error " + fmt("%.3g", coarse) + " at dt=1e-3, " + fmt("%.3g", fine) +
              " at dt=5e-4, order " + fmt("%.3f", order)};
}

Outcome plan_constraints() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  std::uniform_int_distribution<int> steps(60, 250);
  const double dt = 0.01;
  int checked = 0;
  int failed = 0;
  double worst_ll = 0.0;
  double worst_tail = 0.0;
  for (const ModelWithSuite& ex :
       {example_41(0.1), make_example_4_2(0.5), make_ou_benchmark(0.5, 1.0)}) {
    const ModelSpec& model = *ex.model;
    for (int trial = 0; trial < 20; ++trial) {
      const SimGrid g = SimGrid::make(steps(rng) * dt, 0.5, dt);
      // Piecewise-linear direction through random knots.
      const int knots = 5;
      DenseMatrix kv(model.dim(), knots);
      for (Eigen::Index i = 0; i < kv.size(); ++i) kv.data()[i] = unit(rng);
      const Segment h = Segment(kv, 0.5).resampled(g.n_hist);
      ++checked;
      try {
        const CouplingPlan plan = build_plan(model, h, g);
        const double h0 = h.values().col(g.n_hist).norm();
        const double alpha0 = model.d() > 0 ? plan.alpha().col(0).norm() : 0.0;
        worst_ll = std::max(worst_ll, plan.ll_residual() / (1.0 + h0));
        worst_tail = std::max(worst_tail, plan.theta_tail_max() / (1.0 + h.sup_norm()));
        const bool ok = plan.v()[0] == 1.0 && alpha0 == 0.0 &&
                        plan.ll_residual() <= kPlanTolerance * (1.0 + h0) &&
                        plan.theta_tail_max() <= kPlanTolerance * (1.0 + h.sup_norm());
        failed += ok ? 0 : 1;
      } catch (const Error&) {
        ++failed;
      }
    }
  }
  return {failed == 0, std::to_string(checked) + " plans, " + std::to_string(failed) +
                           " failed, worst scaled residual " + fmt("%.2e", worst_ll) +
                           ", worst scaled tail " + fmt("%.2e", worst_tail)};
}

Outcome gramian_closed_form() {
  const DenseMatrix a = DenseMatrix::Zero(1, 1);
  const DenseMatrix m = DenseMatrix::Ones(1, 1);
  double worst = 0.0;
  for (double tau : {0.5, 1.0}) {
    const GramianResult g = gramian(a, m, tau, tau, 0.01);
    worst = std::max(worst, std::abs(g.q(0, 0) - tau / 6.0));
  }
  return {worst <= 1e-10, "max |Q - tau/6| = " + fmt("%.2e", worst)};
}

MonteCarloOptions mc(std::size_t n, std::uint64_t seed) { return {n, seed, 0}; }

Outcome bismut_oracles() {
  std::ostringstream detail;
  bool ok = true;
  {
    const ModelWithSuite ou = make_ou_benchmark(0.5, 1.0);
    const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
    const BismutResult r =
        estimate_gradient_bismut(*ou.model, constant({1.0}, g.n_hist, 0.5),
                                 constant({1.0}, g.n_hist, 0.5),
                                 functional("y", *ou.model), g, mc(200000, 41));
    const double exact = std::exp(-1.5);
    const double rel = std::abs(r.estimate.mean - exact) / exact;
    ok = ok && rel <= 0.02;
    detail << "OU rel err " << fmt("%.4f", rel);
  }
  auto z_with_retry = [&](const ModelWithSuite& ex, const char* name) {
    const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
    const Segment xi = constant({1.0, 1.0}, g.n_hist, 0.5);
    const Segment h = constant({0.2, 0.2}, g.n_hist, 0.5);
    const TerminalFunctional f = functional("tanh_y", *ex.model);
    double z = 0.0;
    int attempts = 0;
    for (std::uint64_t seed : {101u, 202u}) {
      ++attempts;
      z = gradient_report(*ex.model, xi, h, f, g, mc(100000, seed)).z_score;
      if (z <= 3.0) break;
    }
    ok = ok && z <= 3.0;
    detail << ", " << name << " z " << fmt("%.2f", z) << " (" << attempts << " run"
           << (attempts > 1 ? "s" : "") << ")";
  };
  z_with_retry(example_41(0.1), "Ex4.1");
  z_with_retry(make_example_4_2(0.5), "Ex4.2");
  return {ok, detail.str()};
}

Outcome girsanov_identity() {
  const ModelWithSuite ex = example_41(0.1);
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const GirsanovCheck c = girsanov_identity_check(
      *ex.model, constant({1.0, 1.0}, g.n_hist, 0.5), constant({1.0, 1.0}, g.n_hist, 0.5),
      functional("tanh_y", *ex.model), g, 0.5, mc(100000, 55));
  return {c.valid && c.density_z <= 3.0 && c.z_score <= 3.0,
          "E R = " + fmt("%.5f", c.density.mean) + " (" + fmt("%.2f", c.density_z) +
              " SE), identity z " + fmt("%.2f", c.z_score) + ", non-finite " +
              std::to_string(c.non_finite)};
}

Outcome assumption_grids() {
  GridSpec fine;
  fine.step = 0.25;
  const AssumptionReport a1 = check_assumption_grid(example_41(0.1).suite, "A1", fine, 0);
  const ModelWithSuite e42 = make_example_4_2(0.5);
  const GridSpec grid;
  const AssumptionReport e21 = check_assumption_grid(e42.suite, "E21", grid, 0);
  const AssumptionReport bound = check_assumption_grid(e42.suite, "E21-bound", grid, 0);
  const AssumptionReport e28 = check_e28_grid(e42.suite, grid, 0.1, 0);
  const std::size_t v = a1.violation_count + e21.violation_count + bound.violation_count +
                        e28.violation_count;
  return {v == 0 && a1.passed && e21.passed && bound.passed && e28.passed,
          "violations A1 " + std::to_string(a1.violation_count) + "/" + std::to_string(a1.points) +
              ", E21 " + std::to_string(e21.violation_count) + ", E21-bound " +
              std::to_string(bound.violation_count) + ", E28 " +
              std::to_string(e28.violation_count) + "/" + std::to_string(e28.points)};
}

Outcome moment_bound() {
  const ModelWithSuite ex = make_example_4_2(0.5);
  const MomentBoundReport r = check_moment_bound(*ex.model, ex.suite, constant({1.0, 1.0}, 50, 0.5),
                                                 {0.5, 1.0}, 0.01, mc(10000, 77));
  std::ostringstream d;
  d << "delta " << r.delta;
  for (const MomentRow& row : r.rows) {
    d << ", t=" << row.t << ": " << fmt("%.3f", row.w_mean.mean) << " <= " << fmt("%.3f", row.bound);
  }
  return {r.passed && r.delta == 4.75 && r.lyap_alpha == 1.0, d.str()};
}

Outcome jensen_checks() {
  bool ok = true;
  std::ostringstream d;
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const Segment xi = constant({1.0, 1.0}, g.n_hist, 0.5);
  const Segment h = constant({1.0, 0.5}, g.n_hist, 0.5);
  for (const ModelWithSuite& ex : {example_41(0.1), make_example_4_2(0.5)}) {
    const ModelSpec& model = *ex.model;
    const InequalityReport lh = check_log_harnack(model, &ex.suite, xi, h,
                                                  functional("one_plus_tanh2_y", model), g, mc(20000, 3));
    const InequalityReport ph = check_power_harnack(model, &ex.suite, xi, h,
                                                    functional("exp_neg_y2", model), g, 2.0, 0.0,
                                                    mc(20000, 4));
    const InequalityReport lh1 =
        check_log_harnack(model, &ex.suite, xi, h, functional("one", model), g, mc(500, 5));
    const InequalityReport ph1 = check_power_harnack(model, &ex.suite, xi, h, functional("one", model),
                                                     g, 2.0, 0.0, mc(500, 6));
    const bool this_ok = lh.checks.at("jensen_h0") && ph.checks.at("jensen_baseline") &&
                         lh1.lhs.mean == 0.0 && ph1.lhs.mean == 1.0 &&
                         lh1.checks.at("jensen_h0") && ph1.checks.at("jensen_baseline");
    ok = ok && this_ok;
    d << (d.tellp() > 0 ? ", " : "") << model.name() << " "
      << (this_ok ? "ok" : "violated") << " (log lhs at h=0 " << fmt("%.2e", lh.info.at("jensen_lhs_h0"))
      << ")";
  }
  return {ok, d.str()};
}

Outcome cli_determinism() {
  const json harness = {{"model", "example-4.2"}, {"T", 1.5}, {"dt", 0.01}, {"xi", {1.0, 1.0}},
                        {"h", {1.0, 0.5}}, {"f", "one_plus_tanh2_y"}, {"n_paths", 2000}, {"seed", 9}};
  json sweep = harness;
  sweep["tau_sweep"] = {0.5, 1.0};
  sweep["entropy"] = {{"eps_param", 0.1}};
  json gradient = harness;
  gradient["model"] = "example-4.1";
  gradient["f"] = "tanh_y";
  json girsanov = gradient;
  girsanov["eps"] = 0.5;
  const std::vector<std::pair<std::string, json>> runs = {
      {"gramian", {{"model", "example-4.1"}, {"T", 1.5}, {"dt", 0.01}}},
      {"plan", {{"model", "example-4.2"}, {"T", 1.5}, {"dt", 0.01}, {"h", {1.0, 1.0}}}},
      {"simulate",
       {{"model", "example-4.1"}, {"T", 1.5}, {"dt", 0.01}, {"xi", {1.0, 1.0}}, {"n_paths", 2000},
        {"seed", 4}, {"f", "tanh_y"}, {"export_paths", 3}}},
      {"gradient", gradient},
      {"girsanov-check", girsanov},
      {"verify-assumptions", {{"model", "example-4.2"}, {"grid", {{"n_segments", 20}}}}},
      {"moment-bound",
       {{"model", "example-4.2"}, {"dt", 0.01}, {"xi", {1.0, 1.0}}, {"n_paths", 2000},
        {"t_list", {0.5, 1.0}}, {"growth", true}}},
      {"log-harnack", harness},
      {"harnack", [&] {
         json c = harness;
         c["p_sweep"] = {1.5, 3.0};
         return c;
       }()},
      {"gradient-bound-sweep", sweep}};
  int mismatched = 0;
  std::string which;
  for (const auto& [command, cfg] : runs) {
    const app::CommandOutput one = app::execute(command, cfg, 1);
    const app::CommandOutput eight = app::execute(command, cfg, 8);
    std::ostringstream csv1;
    std::ostringstream csv8;
    for (const auto& t : one.tables) app::write_csv(csv1, t);
    for (const auto& t : eight.tables) app::write_csv(csv8, t);
    if (one.report.dump(2) != eight.report.dump(2) || csv1.str() != csv8.str()) {
      ++mismatched;
      which += " " + command;
    }
  }
  return {mismatched == 0, std::to_string(runs.size()) + " commands, " + std::to_string(mismatched) +
                               " differ between 1 and 8 threads" + which};
}

Outcome linearity() {
  const ModelWithSuite ex = example_41(0.1);
  const SimGrid g = SimGrid::make(1.5, 0.5, 0.01);
  const Segment xi = constant({1.0, 1.0}, g.n_hist, 0.5);
  const Segment h = constant({0.3, -0.7}, g.n_hist, 0.5);
  const TerminalFunctional f = functional("tanh_y", *ex.model);
  const double a = estimate_gradient_bismut(*ex.model, xi, h, f, g, mc(20000, 12)).estimate.mean;
  const double b = estimate_gradient_bismut(*ex.model, xi, h * 2.0, f, g, mc(20000, 12)).estimate.mean;
  const double rel = std::abs(b - 2.0 * a) / std::abs(b);
  return {rel <= 1e-10, "relative gap " + fmt("%.2e", rel)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"coupling identity order", coupling_identity},
      {"plan constraints", plan_constraints},
      {"gramian closed form", gramian_closed_form},
      {"bismut vs oracles", bismut_oracles},
      {"girsanov identity", girsanov_identity},
      {"assumption grids", assumption_grids},
      {"moment bound", moment_bound},
      {"jensen checks", jensen_checks},
      {"cli determinism", cli_determinism},
      {"linearity in h", linearity},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.passed ? 0 : 1;
    std::cout << (o.passed ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].name << ": "
              << o.detail << " [" << fmt("%.1f", secs) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
