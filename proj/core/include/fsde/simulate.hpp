#pragma once

#include <cstdint>
#include <optional>

#include "fsde/model.hpp"
#include "fsde/rng.hpp"
#include "fsde/segment.hpp"

namespace fsde {

class CouplingPlan;

// Uniform time grid: T = n_steps * dt, r0 = n_hist * dt, T > r0.
struct SimGrid {
  double dt = 0.0;
  int n_steps = 0;
  int n_hist = 0;

  double horizon() const noexcept { return n_steps * dt; }
  double r0() const noexcept { return n_hist * dt; }
  double time(int n) const noexcept { return n * dt; }
  // Column index of time index n (n may be negative down to -n_hist).
  int column(int n) const noexcept { return n + n_hist; }
  int columns() const noexcept { return n_hist + n_steps + 1; }

  /// Throws InvalidArgument unless dt divides both T and r0 (relative 1e-9)
  /// and T > r0.
  static SimGrid make(double horizon, double r0, double dt);
};

inline constexpr double kBlowUpThreshold = 1e8;

// One trajectory on [-r0, T]. Column c of `states` is the state at time
// (c - n_hist) * dt. `drift` column n holds Z(X_n, Y_n) + b(segment at t_n).
struct PathBundle {
  SimGrid grid;
  DenseMatrix states;  // (m + d) x grid.columns()
  DenseMatrix drift;   // d x n_steps
  BrownianIncrements noise;

  /// Segment theta -> state(t_n + theta), a view into `states`.
  SegmentView window(int n) const {
    return {states.data() + static_cast<std::ptrdiff_t>(n) * states.rows(),
            static_cast<int>(states.rows()), grid.n_hist, grid.r0()};
  }
  SegmentView terminal() const { return window(grid.n_steps); }
  Eigen::Block<const DenseMatrix, Eigen::Dynamic, 1, true> state(int n) const {
    return states.col(grid.column(n));
  }
};

/// Window theta -> state(t_n + theta) of a states matrix laid out as in
/// PathBundle.
inline SegmentView window_view(const DenseMatrix& states, const SimGrid& grid, int n) {
  return {states.data() + static_cast<std::ptrdiff_t>(n) * states.rows(),
          static_cast<int>(states.rows()), grid.n_hist, grid.r0()};
}
inline SegmentView terminal_view(const DenseMatrix& states, const SimGrid& grid) {
  return window_view(states, grid, grid.n_steps);
}

/// Explicit Euler-Maruyama for the model. xi must be sampled on the grid's
/// history (n_hist nodes, same r0). Throws BlowUpError carrying the first
/// step whose result is non-finite or exceeds kBlowUpThreshold.
PathBundle simulate_path(const ModelSpec& model, const Segment& xi, const SimGrid& grid,
                         const BrownianIncrements& noise);

/// Euler scheme of the shifted equation: the base path's drift and noise,
/// plus eps (v'(t_n) h_2(0) + alpha'(t_n)) dt in Y; starts from xi + eps h.
PathBundle simulate_shifted(const ModelSpec& model, const CouplingPlan& plan,
                            const PathBundle& base, double eps);

// Non-throwing building blocks for Monte Carlo workers; buffers are reused.
namespace detail {

/// Writes the path into `states` (resized as needed) and `drift` (optional).
/// Returns the first blow-up step, or nullopt on success.
std::optional<int> euler_into(const ModelSpec& model, const SegmentView& xi,
                              const SimGrid& grid, const DenseMatrix& increments,
                              DenseMatrix& states, DenseMatrix* drift);

void check_compatible(const ModelSpec& model, const Segment& xi, const SimGrid& grid);

}  // namespace detail

}  // namespace fsde
