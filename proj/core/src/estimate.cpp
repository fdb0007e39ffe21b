#include "fsde/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsde/errors.hpp"
#include "fsde/parallel.hpp"
#include "fsde/rng.hpp"

namespace fsde {
namespace {

constexpr std::size_t kChunk = 64;

struct Workspace {
  DenseMatrix increments;
  DenseMatrix states;
  DenseMatrix states_alt;
  detail::GirsanovScratch girsanov;
};

// fn(path_id, workspace) for every path; chunking is independent of threads.
template <class Fn>
void for_each_path(std::size_t n_paths, unsigned threads, Fn&& fn) {
  parallel_chunks(n_paths, threads, kChunk, [&](std::size_t begin, std::size_t end) {
    Workspace ws;
    for (std::size_t i = begin; i < end; ++i) fn(i, ws);
  });
}

void check_paths(const MonteCarloOptions& opts) {
  if (opts.n_paths < 2) throw InvalidArgument("n_paths must be >= 2");
}

double sample_variance(std::span<const double> xs, std::span<const char> ok, double mean) {
  std::vector<double> dev;
  dev.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ok[i]) dev.push_back((xs[i] - mean) * (xs[i] - mean));
  }
  if (dev.size() < 2) return 0.0;
  return pairwise_sum(dev) / static_cast<double>(dev.size() - 1);
}

}  // namespace

Estimate summarize(std::span<const double> samples, std::span<const char> accepted) {
  std::vector<double> kept;
  kept.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (accepted[i]) kept.push_back(samples[i]);
  }
  Estimate e;
  e.n = kept.size();
  e.n_rejected = samples.size() - kept.size();
  if (e.n < 2) {
    throw Error("estimate: only " + std::to_string(e.n) + " of " +
                std::to_string(samples.size()) + " paths accepted");
  }
  e.mean = pairwise_sum(kept) / static_cast<double>(e.n);
  for (double& v : kept) v = (v - e.mean) * (v - e.mean);
  const double var = pairwise_sum(kept) / static_cast<double>(e.n - 1);
  e.std_err = std::sqrt(var / static_cast<double>(e.n));
  return e;
}

Estimate summarize(std::span<const double> samples) {
  const std::vector<char> all(samples.size(), 1);
  return summarize(samples, all);
}

double z_score(const Estimate& a, const Estimate& b) {
  const double diff = std::abs(a.mean - b.mean);
  const double se = std::sqrt(a.std_err * a.std_err + b.std_err * b.std_err);
  if (se == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / se;
}

Segment on_grid(const Segment& seg, const SimGrid& grid) {
  if (std::abs(seg.r0() - grid.r0()) > 1e-9 * grid.r0()) {
    throw InvalidArgument("segment r0 " + std::to_string(seg.r0()) + " differs from grid r0 " +
                          std::to_string(grid.r0()));
  }
  if (seg.n_hist() == grid.n_hist && seg.r0() == grid.r0()) return seg;
  return Segment(seg.resampled(grid.n_hist).values(), grid.r0());
}

std::vector<Estimate> estimate_path_statistics(const ModelSpec& model, const Segment& xi_in,
                                               const SimGrid& grid,
                                               const MonteCarloOptions& opts,
                                               int n_outputs, const PathStatistic& stat) {
  check_paths(opts);
  if (n_outputs < 1) throw InvalidArgument("estimate: need at least one output");
  const Segment xi = on_grid(xi_in, grid);
  detail::check_compatible(model, xi, grid);
  const std::size_t n = opts.n_paths;
  const auto k = static_cast<std::size_t>(n_outputs);
  std::vector<double> values(n * k, 0.0);
  std::vector<char> ok(n, 0);
  for_each_path(n, opts.threads, [&](std::size_t i, Workspace& ws) {
    ws.increments.resize(model.d(), grid.n_steps);
    fill_increments(opts.seed, i, grid.dt, ws.increments);
    if (detail::euler_into(model, xi.view(), grid, ws.increments, ws.states, nullptr)) return;
    stat(ws.states, grid, values.data() + i * k);
    bool finite = true;
    for (std::size_t j = 0; j < k; ++j) finite = finite && std::isfinite(values[i * k + j]);
    ok[i] = finite ? 1 : 0;
  });
  std::vector<Estimate> out;
  std::vector<double> column(n);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = values[i * k + j];
    out.push_back(summarize(column, ok));
  }
  return out;
}

Estimate estimate_functional(const ModelSpec& model, const Segment& xi,
                             const TerminalFunctional& f, const SimGrid& grid,
                             const MonteCarloOptions& opts) {
  const auto eval = f.eval;
  return estimate_path_statistics(
      model, xi, grid, opts, 1, [&eval](const DenseMatrix& states, const SimGrid& g, double* out) {
        const SegmentView term = terminal_view(states, g);
        out[0] = eval(term);
      })[0];
}

namespace detail {

double bismut_weight(const ModelSpec& model, const CouplingPlan& plan,
                     const DenseMatrix& states, const DenseMatrix& increments) {
  const SimGrid& grid = plan.grid();
  const int m = model.m();
  const int d = model.d();
  const int dim = m + d;
  const auto& coeffs = model.coeffs();
  const SmallMat& sigma_inv = model.sigma_inv();
  const StateVec h2 = plan.h2_at_zero();
  const DenseMatrix& theta = plan.theta();
  StateVec x(m), y(d), dir(dim), nvec(d), u(d);
  double acc = 0.0;
  for (int n = 0; n < grid.n_steps; ++n) {
    const int col = grid.column(n);
    x = states.col(col).head(m);
    y = states.col(col).tail(d);
    dir = theta.col(col);
    const SegmentView seg(states.data() + static_cast<std::ptrdiff_t>(n) * dim, dim,
                          grid.n_hist, grid.r0());
    nvec = coeffs.z_dir(x, y, dir);
    nvec += coeffs.b_dir(seg, plan.theta_window(n));
    nvec -= plan.v_prime()[n] * h2;
    nvec -= plan.alpha_prime().col(n);
    u.noalias() = sigma_inv * nvec;
    acc += u.dot(increments.col(n));
  }
  return acc;
}

}  // namespace detail

double bismut_weight_path(const ModelSpec& model, const CouplingPlan& plan,
                          const PathBundle& path) {
  if (!plan.matches(path.grid)) {
    throw InvalidArgument("bismut_weight_path: plan and path use different grids");
  }
  const double w = detail::bismut_weight(model, plan, path.states, path.noise.increments);
  if (!std::isfinite(w)) throw Error("bismut_weight_path: non-finite weight");
  return w;
}

BismutResult estimate_gradient_bismut(const ModelSpec& model, const Segment& xi_in,
                                      const Segment& h_in, const TerminalFunctional& f,
                                      const SimGrid& grid, const MonteCarloOptions& opts,
                                      bool control_variate) {
  check_paths(opts);
  const Segment xi = on_grid(xi_in, grid);
  detail::check_compatible(model, xi, grid);
  const CouplingPlan plan = build_plan(model, on_grid(h_in, grid), grid);
  const std::size_t n = opts.n_paths;
  std::vector<double> fv(n, 0.0), wv(n, 0.0);
  std::vector<char> ok(n, 0);
  for_each_path(n, opts.threads, [&](std::size_t i, Workspace& ws) {
    ws.increments.resize(model.d(), grid.n_steps);
    fill_increments(opts.seed, i, grid.dt, ws.increments);
    if (detail::euler_into(model, xi.view(), grid, ws.increments, ws.states, nullptr)) return;
    const SegmentView term = terminal_view(ws.states, grid);
    fv[i] = f.eval(term);
    wv[i] = detail::bismut_weight(model, plan, ws.states, ws.increments);
    ok[i] = std::isfinite(fv[i]) && std::isfinite(wv[i]) ? 1 : 0;
  });

  BismutResult out;
  out.ll_residual = plan.ll_residual();
  out.weight = summarize(wv, ok);
  out.weight_variance = sample_variance(wv, ok, out.weight.mean);
  const double centre = control_variate ? summarize(fv, ok).mean : 0.0;
  std::vector<double> prod(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) prod[i] = (fv[i] - centre) * wv[i];
  }
  out.estimate = summarize(prod, ok);
  return out;
}

double default_fd_eps(const Segment& xi, const Segment& h) {
  const double xi_inf = xi.values().cwiseAbs().maxCoeff();
  const double h_inf = h.values().cwiseAbs().maxCoeff();
  return 0.05 * (1.0 + xi_inf) / (1.0 + h_inf);
}

Estimate estimate_gradient_fd(const ModelSpec& model, const Segment& xi_in,
                              const Segment& h_in, const TerminalFunctional& f,
                              const SimGrid& grid, const MonteCarloOptions& opts,
                              double eps_fd) {
  check_paths(opts);
  if (!(eps_fd > 0.0) || !std::isfinite(eps_fd)) {
    throw InvalidArgument("eps_fd must be positive");
  }
  const Segment xi = on_grid(xi_in, grid);
  const Segment h = on_grid(h_in, grid);
  detail::check_compatible(model, xi, grid);
  if (h.dim() != model.dim()) throw InvalidArgument("h: dimension does not match the model");
  const Segment plus = xi + h * eps_fd;
  const Segment minus = xi + h * (-eps_fd);
  const std::size_t n = opts.n_paths;
  std::vector<double> diff(n, 0.0);
  std::vector<char> ok(n, 0);
  for_each_path(n, opts.threads, [&](std::size_t i, Workspace& ws) {
    ws.increments.resize(model.d(), grid.n_steps);
    fill_increments(opts.seed, i, grid.dt, ws.increments);
    if (detail::euler_into(model, plus.view(), grid, ws.increments, ws.states, nullptr)) return;
    if (detail::euler_into(model, minus.view(), grid, ws.increments, ws.states_alt, nullptr)) {
      return;
    }
    const double fp = f.eval(terminal_view(ws.states, grid));
    const double fm = f.eval(terminal_view(ws.states_alt, grid));
    diff[i] = (fp - fm) / (2.0 * eps_fd);
    ok[i] = std::isfinite(diff[i]) ? 1 : 0;
  });
  return summarize(diff, ok);
}

GradientReport gradient_report(const ModelSpec& model, const Segment& xi, const Segment& h,
                               const TerminalFunctional& f, const SimGrid& grid,
                               const MonteCarloOptions& opts, std::optional<double> eps_fd,
                               bool control_variate) {
  GradientReport rep;
  const BismutResult b = estimate_gradient_bismut(model, xi, h, f, grid, opts, control_variate);
  rep.bismut = b.estimate;
  rep.weight_variance = b.weight_variance;
  rep.ll_residual = b.ll_residual;
  rep.eps_fd = eps_fd.value_or(default_fd_eps(xi, h));
  rep.fd = estimate_gradient_fd(model, xi, h, f, grid, opts, rep.eps_fd);
  rep.z_score = z_score(rep.bismut, rep.fd);
  return rep;
}

GirsanovCheck girsanov_identity_check(const ModelSpec& model, const Segment& xi_in,
                                      const Segment& h_in, const TerminalFunctional& f,
                                      const SimGrid& grid, double eps,
                                      const MonteCarloOptions& opts) {
  check_paths(opts);
  if (!std::isfinite(eps)) throw InvalidArgument("eps must be finite");
  const Segment xi = on_grid(xi_in, grid);
  const Segment h = on_grid(h_in, grid);
  detail::check_compatible(model, xi, grid);
  const CouplingPlan plan = build_plan(model, h, grid);
  const Segment shifted_start = xi + h * eps;
  const std::size_t n = opts.n_paths;
  std::vector<double> lhs(n, 0.0), rhs(n, 0.0), dens(n, 0.0);
  std::vector<char> ok(n, 0), weight_bad(n, 0);
  for_each_path(n, opts.threads, [&](std::size_t i, Workspace& ws) {
    ws.increments.resize(model.d(), grid.n_steps);
    fill_increments(opts.seed, i, grid.dt, ws.increments);
    if (detail::euler_into(model, xi.view(), grid, ws.increments, ws.states, nullptr)) return;
    if (detail::euler_into(model, shifted_start.view(), grid, ws.increments, ws.states_alt,
                           nullptr)) {
      return;
    }
    const GirsanovRecord rec =
        detail::girsanov_weight(model, plan, ws.states, ws.increments, eps, ws.girsanov);
    if (!rec.finite) {
      weight_bad[i] = 1;
      return;
    }
    const double fb = f.eval(terminal_view(ws.states, grid));
    const double fs = f.eval(terminal_view(ws.states_alt, grid));
    lhs[i] = rec.r * fb;
    rhs[i] = fs;
    dens[i] = rec.r;
    ok[i] = std::isfinite(lhs[i]) && std::isfinite(rhs[i]) ? 1 : 0;
  });
  GirsanovCheck out;
  for (char b : weight_bad) out.non_finite += b ? 1 : 0;
  out.valid = static_cast<double>(out.non_finite) <= 0.01 * static_cast<double>(n);
  out.lhs = summarize(lhs, ok);
  out.rhs = summarize(rhs, ok);
  out.density = summarize(dens, ok);
  out.z_score = z_score(out.lhs, out.rhs);
  out.density_z = out.density.std_err > 0.0
                      ? std::abs(out.density.mean - 1.0) / out.density.std_err
                      : (out.density.mean == 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace fsde
