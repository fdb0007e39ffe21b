#include "fsde/simulate.hpp"

#include <cmath>
#include <string>

#include "fsde/coupling.hpp"
#include "fsde/errors.hpp"

namespace fsde {

SimGrid SimGrid::make(double horizon, double r0, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InvalidArgument("grid: dt must be positive");
  }
  if (!(r0 > 0.0)) throw InvalidArgument("grid: r0 must be positive");
  if (!(horizon > r0)) throw InvalidArgument("grid: T must exceed r0");
  auto count = [dt](double length, const char* what) {
    const double ratio = length / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
      throw InvalidArgument(std::string("grid: dt does not divide ") + what);
    }
    return static_cast<int>(rounded);
  };
  SimGrid g;
  g.dt = dt;
  g.n_steps = count(horizon, "T");
  g.n_hist = count(r0, "r0");
  if (g.n_hist < 1 || g.n_steps <= g.n_hist) {
    throw InvalidArgument("grid: need n_hist >= 1 and T > r0 on the grid");
  }
  return g;
}

namespace detail {

void check_compatible(const ModelSpec& model, const Segment& xi, const SimGrid& grid) {
  if (xi.dim() != model.dim()) {
    throw InvalidArgument("simulate: initial segment has dimension " +
                          std::to_string(xi.dim()) + ", model needs " +
                          std::to_string(model.dim()));
  }
  if (xi.n_hist() != grid.n_hist) {
    throw InvalidArgument("simulate: initial segment has " + std::to_string(xi.n_hist()) +
                          " history intervals, grid has " + std::to_string(grid.n_hist));
  }
  if (std::abs(model.r0() - grid.r0()) > 1e-9 * model.r0() ||
      std::abs(xi.r0() - grid.r0()) > 1e-9 * grid.r0()) {
    throw InvalidArgument("simulate: r0 of model, segment and grid disagree");
  }
}

std::optional<int> euler_into(const ModelSpec& model, const SegmentView& xi,
                              const SimGrid& grid, const DenseMatrix& increments,
                              DenseMatrix& states, DenseMatrix* drift) {
  const int m = model.m();
  const int d = model.d();
  const int dim = m + d;
  states.resize(dim, grid.columns());
  if (drift) drift->resize(d, grid.n_steps);
  for (int j = 0; j <= grid.n_hist; ++j) states.col(j) = xi.node(j);

  const auto& coeffs = model.coeffs();
  const SmallMat& a = model.a();
  const SmallMat& mm = model.mm();
  const SmallMat& sigma = model.sigma();
  const double dt = grid.dt;

  StateVec x(m), y(d), dx(m), noise(d), dy(d);
  for (int n = 0; n < grid.n_steps; ++n) {
    const int col = grid.column(n);
    x = states.col(col).head(m);
    y = states.col(col).tail(d);
    const SegmentView seg(states.data() + static_cast<std::ptrdiff_t>(n) * dim, dim,
                          grid.n_hist, grid.r0());
    dy = coeffs.z_value(x, y);
    dy += coeffs.b_value(seg);
    if (!dy.allFinite()) return n;
    if (drift) drift->col(n) = dy;

    if (m > 0) {
      dx.noalias() = a * x;
      dx.noalias() += mm * y;
      states.col(col + 1).head(m) = x + dx * dt;
    }
    noise.noalias() = sigma * increments.col(n);
    states.col(col + 1).tail(d) = (y + dy * dt) + noise;

    const auto next = states.col(col + 1);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kBlowUpThreshold) {
      return n;
    }
  }
  return std::nullopt;
}

}  // namespace detail

PathBundle simulate_path(const ModelSpec& model, const Segment& xi, const SimGrid& grid,
                         const BrownianIncrements& noise) {
  detail::check_compatible(model, xi, grid);
  if (noise.n_steps() != grid.n_steps || noise.d() != model.d()) {
    throw InvalidArgument("simulate: increments do not match grid/model");
  }
  PathBundle out;
  out.grid = grid;
  out.noise = noise;
  const auto bad = detail::euler_into(model, xi.view(), grid, noise.increments,
                                      out.states, &out.drift);
  if (bad) {
    throw BlowUpError("simulate: path blew up at step " + std::to_string(*bad), *bad);
  }
  return out;
}

PathBundle simulate_shifted(const ModelSpec& model, const CouplingPlan& plan,
                            const PathBundle& base, double eps) {
  const SimGrid& grid = base.grid;
  if (!plan.matches(grid)) {
    throw InvalidArgument("simulate_shifted: plan and base path use different grids");
  }
  if (base.drift.cols() != grid.n_steps) {
    throw InvalidArgument("simulate_shifted: base path carries no drift record");
  }
  const int m = model.m();
  const int d = model.d();
  const double dt = grid.dt;

  PathBundle out;
  out.grid = grid;
  out.noise = base.noise;
  out.drift = base.drift;
  out.states.resize(model.dim(), grid.columns());
  const DenseMatrix& h = plan.h().values();
  for (int j = 0; j <= grid.n_hist; ++j) {
    out.states.col(j) = base.states.col(j) + eps * h.col(j);
  }

  const SmallMat& a = model.a();
  const SmallMat& mm = model.mm();
  const SmallMat& sigma = model.sigma();
  const StateVec h2 = plan.h2_at_zero();
  StateVec x(m), y(d), dx(m), noise(d), shift(d);
  for (int n = 0; n < grid.n_steps; ++n) {
    const int col = grid.column(n);
    x = out.states.col(col).head(m);
    y = out.states.col(col).tail(d);
    if (m > 0) {
      dx.noalias() = a * x;
      dx.noalias() += mm * y;
      out.states.col(col + 1).head(m) = x + dx * dt;
    }
    noise.noalias() = sigma * base.noise.increments.col(n);
    shift = plan.v_prime()[n] * h2 + plan.alpha_prime().col(n);
    out.states.col(col + 1).tail(d) =
        ((y + base.drift.col(n) * dt) + noise) + eps * shift * dt;
    const auto next = out.states.col(col + 1);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kBlowUpThreshold) {
      throw BlowUpError("simulate_shifted: path blew up at step " + std::to_string(n), n);
    }
  }
  return out;
}

}  // namespace fsde
