#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fsde/model.hpp"

namespace fsde {

// Axis-aligned grid {lo, lo + step, ..., hi} per coordinate. Segment-valued
// conditions draw n_segments piecewise-linear segments (knots in [lo, hi])
// from the Philox stream keyed by segment_seed.
struct GridSpec {
  double lo = -5.0;
  double hi = 5.0;
  double step = 0.5;
  int n_segments = 200;
  int segment_knots = 5;
  int segment_nodes = 50;
  std::uint64_t segment_seed = 20110101;

  int axis_points() const;
};

struct Violation {
  std::vector<double> point;  // (z) or (z, z'); segment id for sampled checks
  double margin = 0.0;        // lhs - rhs
};

struct AssumptionReport {
  std::string assumption;
  GridSpec grid;
  std::string evidence;  // "grid" or "sampled-segments"
  std::size_t points = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first kMaxListedViolations
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::vector<double> worst_point;
  bool passed = false;  // violation_count == 0
  std::map<std::string, double> info;
};

inline constexpr std::size_t kMaxListedViolations = 100;

/// Identifiers: "A1", "A2", "A3", "A4", "A3'", "A4'", "E21", "E21-bound",
/// "E25". A margin counts as a violation when lhs - rhs exceeds
/// 1e-12 (1 + |lhs| + |rhs|). Throws InvalidArgument for an unknown id or
/// when the suite lacks a map or constant the condition needs.
AssumptionReport check_assumption_grid(const LyapunovSuite& suite, const std::string& which,
                                       const GridSpec& grid, unsigned threads = 1);

/// Displayed bound for L W~ / W~ of the quartic example:
///   K - (0.2325 - eps) x^2 - 0.5 y^4 - 0.175 y^6 + 0.1375 y'^6,
///   K = 0.5 (0.35^2 / eps + 1.4)^2, eps in (0, 0.2325).
AssumptionReport check_e28_grid(const LyapunovSuite& suite, const GridSpec& grid,
                                double eps_param, unsigned threads = 1);

double e28_constant_k(double eps_param);

/// The piecewise-linear segment family used by the segment-valued checks.
std::vector<Segment> sample_segments(const GridSpec& grid, int dim, double r0);

}  // namespace fsde
