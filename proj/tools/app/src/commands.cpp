#include "fsde_app/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#include "fsde/coupling.hpp"
#include "fsde/errors.hpp"
#include "fsde/harness.hpp"
#include "fsde/matops.hpp"
#include "fsde/verify.hpp"
#include "fsde_app/config.hpp"

namespace fsde::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) { return format_number(v); }

json matrix_json(const DenseMatrix& m) { return json_util::matrix_to_json(m); }

json vector_json(const DenseVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(finite_or_string(v(i)));
  return out;
}

double h0_norm(const Segment& h) { return h.values().col(h.n_hist()).norm(); }

std::vector<double> positive_list(const Params& p, const std::string& key,
                                  std::vector<double> fallback) {
  std::vector<double> out = p.numbers(key, std::move(fallback));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0.0)) throw ConfigError(key + "[" + std::to_string(i) + "]: must be positive");
  }
  return out;
}

CommandOutput cmd_gramian(const ExperimentConfig& cfg) {
  const ModelSpec& model = *cfg.model.model;
  const SimGrid grid = cfg.grid();
  const double tau = cfg.params.number("tau", grid.horizon() - grid.r0());
  const double step = cfg.params.number("quad_step", grid.dt);
  if (!(tau > 0.0)) throw ConfigError("tau: must be positive");
  if (!(step > 0.0)) throw ConfigError("quad_step: must be positive");
  const KalmanRank kr = kalman_rank(model.a(), model.mm());
  GramianResult g;
  try {
    g = gramian(model.a(), model.mm(), tau, tau, step);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("quad_step: ") + e.what());
  }
  CommandOutput out;
  out.passed = true;
  out.report = {{"tau", tau},
                {"quad_step", step},
                {"kalman_rank", kr.rank},
                {"k_star", kr.k_star ? json(*kr.k_star) : json(nullptr)},
                {"rank_condition", kr.satisfied},
                {"q", matrix_json(g.q)},
                {"q_inverse", matrix_json(g.inverse)},
                {"condition_estimate", finite_or_string(g.condition_estimate)},
                {"inverse_norm", finite_or_string(g.inverse_norm)},
                {"bound_ratio", finite_or_string(g.bound_ratio)}};
  CsvTable t{"q", {"row", "col", "q", "q_inverse"}, {}};
  for (Eigen::Index i = 0; i < g.q.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.q.cols(); ++j) {
      t.add({std::to_string(i), std::to_string(j), num(g.q(i, j)), num(g.inverse(i, j))});
    }
  }
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput cmd_plan(const ExperimentConfig& cfg) {
  const ModelSpec& model = *cfg.model.model;
  const SimGrid grid = cfg.grid();
  const Segment h = on_grid(*cfg.h, grid);
  const CouplingPlan plan = build_plan(model, h, grid);
  const int d = model.d();
  const int dim = model.dim();
  const double theta_tol = kPlanTolerance * (1.0 + h.sup_norm());
  const double ll_tol = kPlanTolerance * (1.0 + h0_norm(h));
  const double alpha0 = d > 0 ? plan.alpha().col(0).norm() : 0.0;

  json checks = {{"v0_is_one", plan.v()[0] == 1.0},
                 {"alpha0_is_zero", alpha0 == 0.0},
                 {"theta_tail", plan.theta_tail_max() <= theta_tol},
                 {"ll_residual", plan.ll_residual() <= ll_tol}};
  bool passed = true;
  for (const auto& [k, v] : checks.items()) passed = passed && v.get<bool>();

  json t = json::array();
  json v = json::array();
  json v_prime = json::array();
  for (int n = 0; n <= grid.n_steps; ++n) {
    t.push_back(grid.time(n));
    v.push_back(plan.v()[static_cast<std::size_t>(n)]);
    v_prime.push_back(plan.v_prime()[static_cast<std::size_t>(n)]);
  }
  const DenseMatrix theta_fwd = plan.theta().rightCols(grid.n_steps + 1);

  CommandOutput out;
  out.passed = passed;
  out.report = {{"tau", plan.tau()},
                {"tau_index", plan.tau_index()},
                {"v0", plan.v()[0]},
                {"alpha0_norm", alpha0},
                {"ll_residual", plan.ll_residual()},
                {"ll_tolerance", ll_tol},
                {"theta_tail_max", plan.theta_tail_max()},
                {"theta_tolerance", theta_tol},
                {"q_inv_vec", vector_json(plan.q_inv_vec())},
                {"gramian_condition", finite_or_string(plan.gramian().condition_estimate)},
                {"checks", checks},
                {"samples",
                 {{"t", t},
                  {"v", v},
                  {"v_prime", v_prime},
                  {"alpha", matrix_json(plan.alpha())},
                  {"alpha_prime", matrix_json(plan.alpha_prime())},
                  {"phi", matrix_json(plan.phi())},
                  {"theta", matrix_json(theta_fwd)}}}};

  CsvTable table{"samples", {"t", "v", "v_prime"}, {}};
  for (int i = 0; i < d; ++i) {
    table.columns.push_back("alpha_" + std::to_string(i));
    table.columns.push_back("alpha_prime_" + std::to_string(i));
    table.columns.push_back("phi_" + std::to_string(i));
  }
  for (int j = 0; j < dim; ++j) table.columns.push_back("theta_" + std::to_string(j));
  for (int n = 0; n <= grid.n_steps; ++n) {
    std::vector<std::string> row = {num(grid.time(n)), num(plan.v()[static_cast<std::size_t>(n)]),
                                    num(plan.v_prime()[static_cast<std::size_t>(n)])};
    for (int i = 0; i < d; ++i) {
      row.push_back(num(plan.alpha()(i, n)));
      row.push_back(num(plan.alpha_prime()(i, n)));
      row.push_back(num(plan.phi()(i, n)));
    }
    for (int j = 0; j < dim; ++j) row.push_back(num(theta_fwd(j, n)));
    table.add(std::move(row));
  }
  out.tables.push_back(std::move(table));
  return out;
}

CommandOutput cmd_simulate(const ExperimentConfig& cfg) {
  const ModelSpec& model = *cfg.model.model;
  const SimGrid grid = cfg.grid();
  const Segment xi = on_grid(*cfg.xi, grid);
  const int dim = model.dim();
  const int export_paths = cfg.params.integer("export_paths", 0);
  const int stride = cfg.params.integer("export_stride", 1);
  if (export_paths < 0) throw ConfigError("export_paths: must be non-negative");
  if (static_cast<std::size_t>(export_paths) > cfg.mc.n_paths) {
    throw ConfigError("export_paths: exceeds n_paths");
  }
  if (stride < 1) throw ConfigError("export_stride: must be positive");

  const std::optional<TerminalFunctional>& f = cfg.f;
  const int n_out = dim + (f ? 1 : 0);
  const std::vector<Estimate> est = estimate_path_statistics(
      model, xi, grid, cfg.mc, n_out,
      [&](const DenseMatrix& states, const SimGrid& g, double* o) {
        const auto last = states.col(g.column(g.n_steps));
        for (int j = 0; j < dim; ++j) o[j] = last(j);
        if (f) o[dim] = f->eval(terminal_view(states, g));
      });

  CommandOutput out;
  json terminal = json::array();
  CsvTable stats{"terminal", {"component", "mean", "std_err"}, {}};
  for (int j = 0; j < dim; ++j) {
    terminal.push_back(to_json(est[static_cast<std::size_t>(j)]));
    stats.add({std::to_string(j), num(est[static_cast<std::size_t>(j)].mean),
               num(est[static_cast<std::size_t>(j)].std_err)});
  }
  const std::size_t rejected = est.front().n_rejected;
  out.passed = rejected == 0;
  out.report = {{"n_steps", grid.n_steps}, {"terminal_mean", terminal}, {"n_rejected", rejected}};
  if (f) {
    out.report["functional"] = {{"name", f->name}, {"estimate", to_json(est.back())}};
  }
  out.tables.push_back(std::move(stats));

  if (export_paths > 0) {
    CsvTable paths{"paths", {"path", "t"}, {}};
    for (int j = 0; j < dim; ++j) paths.columns.push_back("z_" + std::to_string(j));
    json blowups = json::array();
    for (int p = 0; p < export_paths; ++p) {
      try {
        const PathBundle path = simulate_path(
            model, xi, grid,
            generate_increments(cfg.mc.seed, static_cast<std::uint64_t>(p), grid.n_steps,
                                model.d(), grid.dt));
        for (int n = -grid.n_hist; n <= grid.n_steps; n += stride) {
          std::vector<std::string> row = {std::to_string(p), num(grid.time(n))};
          for (int j = 0; j < dim; ++j) row.push_back(num(path.states(j, grid.column(n))));
          paths.add(std::move(row));
        }
      } catch (const BlowUpError& e) {
        blowups.push_back({{"path", p}, {"step", e.step()}});
      }
    }
    out.report["exported_paths"] = export_paths;
    out.report["export_stride"] = stride;
    out.report["exported_blowups"] = blowups;
    out.tables.push_back(std::move(paths));
  }
  return out;
}

double z_max(const Params& p) {
  const double z = p.number("z_max", 3.0);
  if (!(z > 0.0)) throw ConfigError("z_max: must be positive");
  return z;
}

CommandOutput cmd_gradient(const ExperimentConfig& cfg) {
  const ModelSpec& model = *cfg.model.model;
  const SimGrid grid = cfg.grid();
  std::optional<double> eps_fd;
  if (cfg.params.has("eps_fd")) {
    eps_fd = cfg.params.number("eps_fd");
    if (!(*eps_fd > 0.0)) throw ConfigError("eps_fd: must be positive");
  }
  const bool cv = cfg.params.boolean("control_variate", true);
  const double zmax = z_max(cfg.params);
  const GradientReport r = gradient_report(model, *cfg.xi, *cfg.h, *cfg.f, grid, cfg.mc, eps_fd, cv);

  CommandOutput out;
  const bool finite = std::isfinite(r.bismut.mean) && std::isfinite(r.fd.mean);
  out.passed = finite && r.z_score <= zmax;
  out.report = {{"bismut", to_json(r.bismut)},
                {"fd", to_json(r.fd)},
                {"z_score", finite_or_string(r.z_score)},
                {"z_max", zmax},
                {"weight_variance", finite_or_string(r.weight_variance)},
                {"eps_fd", r.eps_fd},
                {"control_variate", cv},
                {"ll_residual", r.ll_residual}};
  CsvTable t{"gradient", {"estimator", "mean", "std_err", "n", "n_rejected"}, {}};
  for (const auto& [name, e] : {std::pair{"bismut", r.bismut}, std::pair{"fd", r.fd}}) {
    t.add({name, num(e.mean), num(e.std_err), format_number(e.n), format_number(e.n_rejected)});
  }
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput cmd_girsanov(const ExperimentConfig& cfg) {
  const ModelSpec& model = *cfg.model.model;
  const SimGrid grid = cfg.grid();
  const double eps = cfg.params.number("eps", 0.5);
  const double zmax = z_max(cfg.params);
  const GirsanovCheck r = girsanov_identity_check(model, *cfg.xi, *cfg.h, *cfg.f, grid, eps, cfg.mc);

  CommandOutput out;
  out.passed = r.valid && r.density_z <= zmax && r.z_score <= zmax;
  out.report = {{"eps", eps},
                {"lhs", to_json(r.lhs)},
                {"rhs", to_json(r.rhs)},
                {"density", to_json(r.density)},
                {"z_score", finite_or_string(r.z_score)},
                {"density_z", finite_or_string(r.density_z)},
                {"z_max", zmax},
                {"non_finite", r.non_finite},
                {"valid", r.valid}};
  CsvTable t{"girsanov", {"quantity", "mean", "std_err"}, {}};
  t.add({"weighted_functional", num(r.lhs.mean), num(r.lhs.std_err)});
  t.add({"shifted_functional", num(r.rhs.mean), num(r.rhs.std_err)});
  t.add({"density", num(r.density.mean), num(r.density.std_err)});
  out.tables.push_back(std::move(t));
  return out;
}

std::vector<std::string> default_assumptions(const std::string& model_name) {
  if (model_name == "example-4.1") return {"A1", "A2", "A3", "A4", "A3'", "A4'"};
  if (model_name == "example-4.2") return {"E21", "E21-bound", "E25", "E28"};
  return {"A1"};
}

CommandOutput cmd_verify(const ExperimentConfig& cfg, unsigned threads) {
  const LyapunovSuite& suite = cfg.require_suite();
  const std::vector<std::string> which =
      cfg.params.strings("assumptions", default_assumptions(cfg.model.model->name()));
  const GridSpec grid = parse_grid_spec(cfg.params.has("grid") ? cfg.params.raw().at("grid") : json(),
                                        "grid");
  const double e28_eps = cfg.params.number("e28_eps", 0.1);

  CommandOutput out;
  out.passed = true;
  json reports = json::array();
  CsvTable t{"assumptions",
             {"assumption", "evidence", "points", "violation_count", "worst_margin", "passed"},
             {}};
  for (std::size_t i = 0; i < which.size(); ++i) {
    AssumptionReport r;
    try {
      r = which[i] == "E28" ? check_e28_grid(suite, grid, e28_eps, threads)
                            : check_assumption_grid(suite, which[i], grid, threads);
    } catch (const InvalidArgument& e) {
      const std::string key = which[i] == "E28" && cfg.params.has("e28_eps")
                                  ? "e28_eps"
                                  : "assumptions[" + std::to_string(i) + "]";
      throw ConfigError(key + ": " + e.what());
    }
    out.passed = out.passed && r.passed;
    t.add({r.assumption, r.evidence, format_number(r.points), format_number(r.violation_count),
           num(r.worst_margin), r.passed ? "true" : "false"});
    reports.push_back(to_json(r));
  }
  out.report = {{"grid", to_json(grid)}, {"assumptions", reports}};
  out.tables.push_back(std::move(t));
  return out;
}

CommandOutput cmd_moment(const ExperimentConfig& cfg) {
  const LyapunovSuite& suite = cfg.require_suite();
  const ModelSpec& model = *cfg.model.model;
  if (!cfg.params.has("t_list")) throw ConfigError("t_list: required field missing");
  const std::vector<double> t_list = positive_list(cfg.params, "t_list", {});
  if (t_list.empty()) throw ConfigError("t_list: must not be empty");
  MomentBoundReport r;
  try {
    r = check_moment_bound(model, suite, *cfg.xi, t_list, *cfg.dt, cfg.mc);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("t_list: ") + e.what());
  }

  CommandOutput out;
  out.passed = r.passed;
  json rows = json::array();
  CsvTable t{"moment", {"t", "w_mean", "w_std_err", "bound", "passed"}, {}};
  for (const MomentRow& row : r.rows) {
    rows.push_back({{"t", row.t},
                    {"w_mean", to_json(row.w_mean)},
                    {"bound", finite_or_string(row.bound)},
                    {"passed", row.passed}});
    t.add({num(row.t), num(row.w_mean.mean), num(row.w_mean.std_err), num(row.bound),
           row.passed ? "true" : "false"});
  }
  out.report = {{"delta", r.delta},
                {"lyap_alpha", r.lyap_alpha},
                {"rows", rows},
                {"n_rejected", r.n_rejected}};
  out.tables.push_back(std::move(t));

  if (cfg.params.boolean("growth", false)) {
    const GrowthReport g = sup_w_growth(model, suite, *cfg.xi, t_list, *cfg.dt, cfg.mc);
    json sup = json::array();
    CsvTable gt{"growth", {"t", "sup_w_mean", "sup_w_std_err"}, {}};
    for (std::size_t i = 0; i < g.t.size(); ++i) {
      sup.push_back({{"t", g.t[i]}, {"sup_w", to_json(g.sup_w[i])}});
      gt.add({num(g.t[i]), num(g.sup_w[i].mean), num(g.sup_w[i].std_err)});
    }
    out.report["growth"] = {{"rows", sup},
                            {"fitted_rate", finite_or_string(g.fitted_rate)},
                            {"n_rejected", g.n_rejected},
                            {"finite", g.finite}};
    out.tables.push_back(std::move(gt));
  }
  return out;
}

// Inequality harnesses: the Jensen and finiteness checks are the hard
// assertions; fitted constants are reported only.
CommandOutput inequality_output(const InequalityReport& r, const std::string& table) {
  CommandOutput out;
  out.passed = r.passed_structural;
  out.report = to_json(r);
  out.tables.push_back(sweep_table(table, r));
  return out;
}

CommandOutput cmd_log_harnack(const ExperimentConfig& cfg) {
  const std::vector<double> scales = positive_list(cfg.params, "h_scales", {0.5, 1.0, 2.0});
  if (!cfg.f->positive) throw ConfigError("f: log-harnack needs a positive functional");
  const InequalityReport r = check_log_harnack(*cfg.model.model, cfg.suite(), *cfg.xi, *cfg.h,
                                               *cfg.f, cfg.grid(), cfg.mc, scales);
  return inequality_output(r, "sweep");
}

CommandOutput cmd_harnack(const ExperimentConfig& cfg) {
  const double p = cfg.params.number("p", 2.0);
  const double l = cfg.params.number("l", 0.0);
  const std::vector<double> sweep = positive_list(cfg.params, "p_sweep", {});
  InequalityReport r;
  try {
    r = check_power_harnack(*cfg.model.model, cfg.suite(), *cfg.xi, *cfg.h, *cfg.f, cfg.grid(), p,
                            l, cfg.mc, sweep);
  } catch (const ConstraintViolation&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("p: ") + e.what());
  }
  return inequality_output(r, "sweep");
}

CommandOutput cmd_gradient_bound(const ExperimentConfig& cfg) {
  const std::vector<double> taus = positive_list(cfg.params, "tau_sweep", {});
  const SimGrid grid = cfg.grid();
  InequalityReport r;
  try {
    r = gradient_bound_report(*cfg.model.model, cfg.suite(), *cfg.xi, *cfg.h, *cfg.f, grid,
                              cfg.mc, taus);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("tau_sweep: ") + e.what());
  }
  CommandOutput out = inequality_output(r, "tau_sweep");
  out.report = {{"gradient_bound", out.report}};

  if (cfg.params.has("entropy")) {
    const json& spec = cfg.params.object("entropy");
    try {
      json_util::reject_unknown(spec, {"eps_param", "r_values"}, "entropy");
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    const Params ep(spec);
    const double eps_param = ep.number("eps_param", 0.1);
    const std::vector<double> r_values = positive_list(ep, "r_values", {});
    InequalityReport er;
    try {
      er = entropy_gradient_report(*cfg.model.model, cfg.require_suite(), *cfg.xi, *cfg.h,
                                   *cfg.f, grid, eps_param, cfg.mc, r_values);
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("entropy: ") + e.what());
    }
    out.passed = out.passed && er.passed_structural;
    out.report["entropy_gradient"] = to_json(er);
    out.tables.push_back(sweep_table("r_sweep", er));
  }
  return out;
}

std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

Format parse_format(const std::string& text) {
  if (text == "json") return Format::json;
  if (text == "csv") return Format::csv;
  if (text == "both") return Format::both;
  throw ConfigError("format: expected json, csv or both");
}

CommandOutput execute(const std::string& command, const json& config, unsigned threads,
                      const fs::path& base_dir) {
  ExperimentConfig cfg = parse_config(command, config, base_dir);
  cfg.mc.threads = threads;

  static const std::map<std::string, std::function<CommandOutput(const ExperimentConfig&)>>
      table = {{"gramian", cmd_gramian},
               {"plan", cmd_plan},
               {"simulate", cmd_simulate},
               {"gradient", cmd_gradient},
               {"girsanov-check", cmd_girsanov},
               {"moment-bound", cmd_moment},
               {"log-harnack", cmd_log_harnack},
               {"harnack", cmd_harnack},
               {"gradient-bound-sweep", cmd_gradient_bound}};
  CommandOutput result = command == "verify-assumptions" ? cmd_verify(cfg, threads)
                                                         : table.at(command)(cfg);

  std::vector<std::string> failures;
  if (!result.passed) failures.push_back(command + ": hard check failed");
  result.report = {{"schema_version", kReportSchema},
                   {"command", command},
                   {"config", cfg.normalized},
                   {"model", {{"name", cfg.model.model->name()},
                              {"m", cfg.model.model->m()},
                              {"d", cfg.model.model->d()},
                              {"r0", cfg.r0()},
                              {"definition", cfg.model.definition}}},
                   {"result", std::move(result.report)},
                   {"passed", result.passed},
                   {"failures", failures}};
  return result;
}

int run(const std::string& command, const fs::path& config_path, const RunOptions& options,
        std::ostream& log) {
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  json config;
  {
    std::ifstream in(config_path);
    if (!in) {
      log << "config: cannot open '" << config_path.string() << "'\n";
      return kExitConfig;
    }
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      log << "config: invalid JSON (" << e.what() << ")\n";
      return kExitConfig;
    }
  }

  CommandOutput out;
  try {
    out = execute(command, config, options.threads, config_path.parent_path());
  } catch (const ConfigError& e) {
    log << "invalid config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    log << "invalid config: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    log << command << " failed: " << e.what() << '\n';
    return kExitFail;
  }

  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
  const unsigned threads = options.threads ? options.threads
                                           : std::max(1u, std::thread::hardware_concurrency());
  try {
    fs::create_directories(options.out_dir);
    if (options.format != Format::csv) {
      write_text(options.out_dir / (command + ".json"), out.report.dump(2) + "\n");
    }
    if (options.format != Format::json) {
      for (const CsvTable& t : out.tables) {
        std::ostringstream s;
        write_csv(s, t);
        write_text(options.out_dir / (command + "_" + t.name + ".csv"), s.str());
      }
    }
    const json meta = {{"schema_version", kReportSchema},
                       {"command", command},
                       {"config_path", config_path.string()},
                       {"started_utc", utc_timestamp(started)},
                       {"wall_seconds", elapsed.count()},
                       {"threads", threads}};
    write_text(options.out_dir / (command + ".meta.json"), meta.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "output: " << e.what() << '\n';
    return kExitFail;
  }

  log << command << ": " << (out.passed ? "passed" : "FAILED") << '\n';
  return out.passed ? kExitPass : kExitFail;
}

}  // namespace fsde::app
