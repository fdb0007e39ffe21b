#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fsde/coupling.hpp"
#include "fsde/functional.hpp"
#include "fsde/model.hpp"
#include "fsde/simulate.hpp"

namespace fsde {

struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  std::size_t n_rejected = 0;
};

/// Mean and standard error of the accepted samples (accepted[i] != 0), in
/// index order with pairwise summation. Throws Error when fewer than two
/// samples are accepted.
Estimate summarize(std::span<const double> samples, std::span<const char> accepted);
Estimate summarize(std::span<const double> samples);

/// |a.mean - b.mean| / sqrt(a.std_err^2 + b.std_err^2); 0 when both are exact.
double z_score(const Estimate& a, const Estimate& b);

struct MonteCarloOptions {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;  // 0 = hardware concurrency; never changes results
};

/// Fills `out` (n_outputs values) from one accepted path's states.
using PathStatistic =
    std::function<void(const DenseMatrix& states, const SimGrid& grid, double* out)>;

/// Simulates n_paths paths from xi (path i uses Philox stream (seed, i)) and
/// returns one Estimate per statistic output. Paths that blow up are
/// rejected from every output.
std::vector<Estimate> estimate_path_statistics(const ModelSpec& model, const Segment& xi,
                                               const SimGrid& grid,
                                               const MonteCarloOptions& opts,
                                               int n_outputs, const PathStatistic& stat);

/// P_T f(xi) by plain Monte Carlo.
Estimate estimate_functional(const ModelSpec& model, const Segment& xi,
                             const TerminalFunctional& f, const SimGrid& grid,
                             const MonteCarloOptions& opts);

/// sum_n <sigma^{-1} N(t_n), dB_n> along one path, with
/// N = grad_Theta Z + grad_{Theta_s} b - v' h_2(0) - alpha'.
double bismut_weight_path(const ModelSpec& model, const CouplingPlan& plan,
                          const PathBundle& path);

namespace detail {
double bismut_weight(const ModelSpec& model, const CouplingPlan& plan,
                     const DenseMatrix& states, const DenseMatrix& increments);
}  // namespace detail

struct BismutResult {
  Estimate estimate;
  Estimate weight;          // mean of the weight (0 in expectation)
  double weight_variance = 0.0;
  double ll_residual = 0.0;
};

/// E[f(terminal) * weight]. With the control variate the sample is
/// (f - mean f) * weight, which has the same expectation.
BismutResult estimate_gradient_bismut(const ModelSpec& model, const Segment& xi,
                                      const Segment& h, const TerminalFunctional& f,
                                      const SimGrid& grid, const MonteCarloOptions& opts,
                                      bool control_variate = true);

/// 0.05 (1 + ||xi||_inf) / (1 + ||h||_inf).
double default_fd_eps(const Segment& xi, const Segment& h);

/// (f(path from xi + eps h) - f(path from xi - eps h)) / (2 eps) with common
/// increments per path.
Estimate estimate_gradient_fd(const ModelSpec& model, const Segment& xi, const Segment& h,
                              const TerminalFunctional& f, const SimGrid& grid,
                              const MonteCarloOptions& opts, double eps_fd);

struct GradientReport {
  Estimate bismut;
  Estimate fd;
  double z_score = 0.0;
  double weight_variance = 0.0;
  double eps_fd = 0.0;
  double ll_residual = 0.0;
};

GradientReport gradient_report(const ModelSpec& model, const Segment& xi, const Segment& h,
                               const TerminalFunctional& f, const SimGrid& grid,
                               const MonteCarloOptions& opts,
                               std::optional<double> eps_fd = std::nullopt,
                               bool control_variate = true);

struct GirsanovCheck {
  Estimate lhs;      // E[R^eps(T) f(base terminal)]
  Estimate rhs;      // P_T f(xi + eps h)
  Estimate density;  // E[R^eps(T)]
  double z_score = 0.0;
  double density_z = 0.0;  // |density.mean - 1| / density.std_err
  std::size_t non_finite = 0;
  bool valid = true;  // false when more than 1% of weights are non-finite
};

/// Both sides of P_T f(xi + eps h) = E[R^eps(T) f(X_T, Y_T)]; the two sides
/// share increments per path.
GirsanovCheck girsanov_identity_check(const ModelSpec& model, const Segment& xi,
                                      const Segment& h, const TerminalFunctional& f,
                                      const SimGrid& grid, double eps,
                                      const MonteCarloOptions& opts);

/// xi re-sampled onto the grid's history nodes (copy when already matching).
Segment on_grid(const Segment& seg, const SimGrid& grid);

}  // namespace fsde
