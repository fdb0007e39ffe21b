#include "fsde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fsde/errors.hpp"
#include "fsde/parallel.hpp"
#include "fsde/rng.hpp"

namespace fsde {
namespace {

struct Sides {
  double lhs = 0.0;
  double rhs = 0.0;
  bool skip = false;
};

double tolerance(const Sides& s) { return 1e-12 * (1.0 + std::abs(s.lhs) + std::abs(s.rhs)); }

void require(bool present, const std::string& which, const char* what) {
  if (!present) {
    throw InvalidArgument("check " + which + ": suite has no " + what);
  }
}

// Evaluates `sides` at every point of a k-dimensional Cartesian grid (or at
// every index of an enumerated family) and collects the report. Results are
// stored per index, so the scan order is fixed.
AssumptionReport scan(const std::string& name, const GridSpec& grid, const std::string& evidence,
                      std::size_t n_points, unsigned threads,
                      const std::function<Sides(std::size_t)>& sides,
                      const std::function<std::vector<double>(std::size_t)>& coords) {
  std::vector<Sides> results(n_points);
  parallel_chunks(n_points, threads, 4096, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) results[i] = sides(i);
  });
  AssumptionReport rep;
  rep.assumption = name;
  rep.grid = grid;
  rep.evidence = evidence;
  std::size_t worst = n_points;
  for (std::size_t i = 0; i < n_points; ++i) {
    const Sides& s = results[i];
    if (s.skip) continue;
    ++rep.points;
    double margin = s.lhs - s.rhs;
    if (std::isnan(margin)) margin = std::numeric_limits<double>::infinity();
    if (margin > rep.worst_margin) {
      rep.worst_margin = margin;
      worst = i;
    }
    if (!(margin <= tolerance(s))) {
      ++rep.violation_count;
      if (rep.violations.size() < kMaxListedViolations) {
        rep.violations.push_back({coords(i), margin});
      }
    }
  }
  if (worst < n_points) rep.worst_point = coords(worst);
  rep.passed = rep.violation_count == 0;
  return rep;
}

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Coordinates of grid point `index`; the last coordinate varies fastest.
template <class Out>
void grid_point(const GridSpec& grid, std::size_t index, int k, Out& out) {
  const auto n = static_cast<std::size_t>(grid.axis_points());
  for (int c = k - 1; c >= 0; --c) {
    out[c] = grid.lo + static_cast<double>(index % n) * grid.step;
    index /= n;
  }
}

std::function<std::vector<double>(std::size_t)> grid_coords(const GridSpec& grid, int k) {
  return [grid, k](std::size_t i) {
    std::vector<double> c(static_cast<std::size_t>(k));
    grid_point(grid, i, k, c);
    return c;
  };
}

using PairSides = std::function<Sides(const StateVec& z, const StateVec& zp)>;

AssumptionReport scan_pairs(const std::string& name, const GridSpec& grid, int dim,
                            unsigned threads, const PairSides& fn) {
  const std::size_t n = ipow(static_cast<std::size_t>(grid.axis_points()), 2 * dim);
  return scan(
      name, grid, "grid", n, threads,
      [&](std::size_t i) {
        StateVec both(2 * dim);
        grid_point(grid, i, 2 * dim, both);
        return fn(StateVec(both.head(dim)), StateVec(both.tail(dim)));
      },
      grid_coords(grid, 2 * dim));
}

double segment_sup_w(const LyapunovSuite& suite, const Segment& seg) {
  double best = -std::numeric_limits<double>::infinity();
  const SegmentView v = seg.view();
  for (int j = 0; j <= v.n_hist(); ++j) best = std::max(best, suite.w_value(StateVec(v.node(j))));
  return best;
}

double segment_sup_diff(const Segment& a, const Segment& b) {
  return (a.values() - b.values()).colwise().norm().maxCoeff();
}

// Perturbations with knots in [-scale, scale]^dim / sqrt(dim), so the sup of
// the Euclidean norm is at most `scale`.
std::vector<Segment> perturbations(const GridSpec& grid, int dim, double r0, double scale,
                                   std::uint64_t salt) {
  GridSpec g = grid;
  g.lo = -scale / std::sqrt(static_cast<double>(dim));
  g.hi = -g.lo;
  g.segment_seed = grid.segment_seed ^ salt;
  return sample_segments(g, dim, r0);
}

AssumptionReport check_segments(const LyapunovSuite& suite, const std::string& which,
                                const GridSpec& grid, unsigned threads) {
  const int dim = suite.m + suite.d;
  require(static_cast<bool>(suite.b_value), which, "b map");
  require(static_cast<bool>(suite.w_value), which, "W map");
  const std::vector<Segment> family = sample_segments(grid, dim, suite.r0);
  std::vector<double> sup_w(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) sup_w[i] = segment_sup_w(suite, family[i]);
  const double lambda = suite.constant_for("lambda", which);

  if (which == "A2") {
    require(static_cast<bool>(suite.w_grad2), which, "grad_y W map");
    return scan(
        which, grid, "sampled-segments", family.size(), threads,
        [&](std::size_t i) {
          const SegmentView v = family[i].view();
          const StateVec b = suite.b_value(v);
          const StateVec g = suite.w_grad2(StateVec(v.newest()));
          return Sides{b.dot(g), lambda * sup_w[i]};
        },
        [](std::size_t i) { return std::vector<double>{static_cast<double>(i)}; });
  }
  const double l = suite.constant("l");
  const bool prime = which == "A4'";
  if (prime) require(static_cast<bool>(suite.u_increment), which, "U map");
  const double scale = prime ? (grid.hi - grid.lo) : 1.0;
  const std::vector<Segment> deltas = perturbations(grid, dim, suite.r0, scale, 0x9e3779b9u);
  const std::size_t n_pairs = family.size() * deltas.size();
  const std::size_t n_delta = deltas.size();
  return scan(
      which, grid, "sampled-segments", n_pairs, threads,
      [&](std::size_t idx) {
        const std::size_t i = idx / n_delta;
        const std::size_t j = idx % n_delta;
        // xi' is the family member, xi = xi' + delta.
        const Segment& xp = family[i];
        const Segment x = xp + deltas[j];
        const double diff = segment_sup_diff(x, xp);
        const double lhs = (suite.b_value(x.view()) - suite.b_value(xp.view())).norm();
        double weight = std::pow(sup_w[i], l);
        if (prime) weight += suite.u_increment(diff);
        return Sides{lhs, lambda * diff * weight};
      },
      [n_delta](std::size_t idx) {
        return std::vector<double>{static_cast<double>(idx / n_delta),
                                   static_cast<double>(idx % n_delta)};
      });
}

}  // namespace

int GridSpec::axis_points() const {
  if (!(step > 0.0) || !(hi >= lo)) throw InvalidArgument("grid: need step > 0 and hi >= lo");
  const double ratio = (hi - lo) / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidArgument("grid: step does not divide hi - lo");
  }
  return static_cast<int>(rounded) + 1;
}

std::vector<Segment> sample_segments(const GridSpec& grid, int dim, double r0) {
  if (grid.n_segments < 1 || grid.segment_knots < 2 || grid.segment_nodes < 1) {
    throw InvalidArgument("grid: segment family needs n_segments >= 1, knots >= 2, nodes >= 1");
  }
  const Philox4x32::Key key{static_cast<std::uint32_t>(grid.segment_seed),
                            static_cast<std::uint32_t>(grid.segment_seed >> 32)};
  const int knots = grid.segment_knots;
  std::vector<Segment> out;
  out.reserve(static_cast<std::size_t>(grid.n_segments));
  for (int s = 0; s < grid.n_segments; ++s) {
    DenseMatrix kv(dim, knots);
    for (int k = 0; k < knots; ++k) {
      for (int c = 0; c < dim; c += 2) {
        const auto r = Philox4x32::generate(
            {static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(k),
             static_cast<std::uint32_t>(c / 2), 0x5e6u},
            key);
        kv(c, k) = grid.lo + (grid.hi - grid.lo) * uniform_open01(r[0], r[1]);
        if (c + 1 < dim) kv(c + 1, k) = grid.lo + (grid.hi - grid.lo) * uniform_open01(r[2], r[3]);
      }
    }
    out.push_back(Segment::from_function(dim, grid.segment_nodes, r0, [&](double theta) {
      const double pos = (theta + r0) / r0 * (knots - 1);
      const int lo = std::clamp(static_cast<int>(std::floor(pos)), 0, knots - 2);
      const double frac = pos - lo;
      return StateVec((1.0 - frac) * kv.col(lo) + frac * kv.col(lo + 1));
    }));
  }
  return out;
}

AssumptionReport check_assumption_grid(const LyapunovSuite& suite, const std::string& which,
                                       const GridSpec& grid, unsigned threads) {
  const int m = suite.m;
  const int dim = suite.m + suite.d;
  auto split_z = [&](const StateVec& z) {
    return suite.z_value(StateVec(z.head(m)), StateVec(z.tail(suite.d)));
  };

  if (which == "A1") {
    require(static_cast<bool>(suite.l_w) && static_cast<bool>(suite.w_value) &&
                static_cast<bool>(suite.w_grad2),
            which, "L W, W or grad_y W map");
    const double lambda = suite.constant_for("lambda", which);
    const std::size_t n = ipow(static_cast<std::size_t>(grid.axis_points()), dim);
    return scan(
        which, grid, "grid", n, threads,
        [&](std::size_t i) {
          StateVec z(dim);
          grid_point(grid, i, dim, z);
          const double w = suite.w_value(z);
          const Sides first{suite.l_w(z), lambda * w};
          const Sides second{suite.w_grad2(z).norm(), lambda * w};
          return (first.lhs - first.rhs) >= (second.lhs - second.rhs) ? first : second;
        },
        grid_coords(grid, dim));
  }
  if (which == "A2" || which == "A4" || which == "A4'") {
    return check_segments(suite, which, grid, threads);
  }
  if (which == "A3" || which == "A3'") {
    require(static_cast<bool>(suite.z_value) && static_cast<bool>(suite.w_value), which,
            "Z or W map");
    const bool prime = which == "A3'";
    if (prime) require(static_cast<bool>(suite.u_increment), which, "U map");
    const double lambda = suite.constant_for("lambda", which);
    const double l = suite.constant("l");
    return scan_pairs(which, grid, dim, threads, [&](const StateVec& z, const StateVec& zp) {
      const double dist = (z - zp).norm();
      if (!prime && dist > 1.0 + 1e-12) return Sides{0.0, 0.0, true};
      double weight = std::pow(suite.w_value(zp), l);
      if (prime) weight += suite.u_increment(dist);
      return Sides{(split_z(z) - split_z(zp)).norm(), lambda * dist * weight};
    });
  }
  if (which == "E21") {
    require(static_cast<bool>(suite.two_point_l_w) && static_cast<bool>(suite.u_value), which,
            "two-point L W or U map");
    const double alpha = suite.constant("lyap_alpha");
    const double beta = suite.constant("beta");
    const double gamma = suite.constant("gamma");
    return scan_pairs(which, grid, dim, threads, [&](const StateVec& z, const StateVec& zp) {
      return Sides{suite.two_point_l_w(z, zp),
                   alpha * (suite.w_value(z) + suite.w_value(zp)) - beta * suite.u_value(z) +
                       gamma * suite.u_value(zp)};
    });
  }
  if (which == "E21-bound") {
    require(static_cast<bool>(suite.two_point_l_w_first_order) &&
                static_cast<bool>(suite.e21_displayed_bound),
            which, "displayed generator bound");
    AssumptionReport rep =
        scan_pairs(which, grid, dim, threads, [&](const StateVec& z, const StateVec& zp) {
          return Sides{suite.two_point_l_w_first_order(z, zp), suite.e21_displayed_bound(z, zp)};
        });
    if (suite.two_point_l_w) {
      const AssumptionReport full =
          scan_pairs(which, grid, dim, threads, [&](const StateVec& z, const StateVec& zp) {
            return Sides{suite.two_point_l_w(z, zp), suite.e21_displayed_bound(z, zp)};
          });
      rep.info["full_generator_violations"] = static_cast<double>(full.violation_count);
      rep.info["full_generator_worst_margin"] = full.worst_margin;
    }
    return rep;
  }
  if (which == "E25") {
    require(static_cast<bool>(suite.z_value) && static_cast<bool>(suite.b_tilde) &&
                static_cast<bool>(suite.w_value),
            which, "Z, b~ or W map");
    const double nu = suite.constant("nu");
    return scan_pairs(which, grid, dim, threads, [&](const StateVec& z, const StateVec& zp) {
      const double dist = (z - zp).norm();
      if (dist > 1.0 + 1e-12) return Sides{0.0, 0.0, true};
      const double dz = (split_z(z) - split_z(zp)).squaredNorm();
      const double db = (suite.b_tilde(z) - suite.b_tilde(zp)).squaredNorm();
      return Sides{std::max(dz, db), nu * dist * dist * suite.w_value(zp)};
    });
  }
  throw InvalidArgument("unknown assumption '" + which + "'");
}

double e28_constant_k(double eps_param) {
  const double inner = 0.35 * 0.35 / eps_param + 1.4;
  return 0.5 * inner * inner;
}

AssumptionReport check_e28_grid(const LyapunovSuite& suite, const GridSpec& grid,
                                double eps_param, unsigned threads) {
  if (!(eps_param > 0.0 && eps_param < 0.2325)) {
    throw InvalidArgument("E28: eps_param must lie in (0, 0.2325)");
  }
  require(static_cast<bool>(suite.l_w_tilde_ratio), "E28", "L W~ / W~ map");
  if (suite.m != 1 || suite.d != 1) {
    throw InvalidArgument("E28: the displayed bound is for m = d = 1");
  }
  const double k = e28_constant_k(eps_param);
  AssumptionReport rep =
      scan_pairs("E28", grid, 2, threads, [&](const StateVec& z, const StateVec& zp) {
        const double x = z(0), y2 = z(1) * z(1), yp2 = zp(1) * zp(1);
        const double bound = k - (0.2325 - eps_param) * x * x - 0.5 * y2 * y2 -
                             0.175 * y2 * y2 * y2 + 0.1375 * yp2 * yp2 * yp2;
        return Sides{suite.l_w_tilde_ratio(z, zp), bound};
      });
  rep.info["K"] = k;
  rep.info["eps_param"] = eps_param;
  return rep;
}

}  // namespace fsde
