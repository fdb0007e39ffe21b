#pragma once

#include <array>
#include <cstdint>

#include "fsde/types.hpp"

namespace fsde {

// Philox4x32-10 counter-based generator: a keyed bijection of a 128-bit
// counter. Output depends only on (key, counter), so any stream position can
// be computed directly without shared state.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

// 52-bit uniform in the open interval (0, 1) from two 32-bit words.
double uniform_open01(std::uint32_t hi, std::uint32_t lo) noexcept;

struct BrownianIncrements {
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
  double dt = 0.0;
  DenseMatrix increments;  // d x n_steps, column n ~ Normal(0, dt I)

  int n_steps() const noexcept { return static_cast<int>(increments.cols()); }
  int d() const noexcept { return static_cast<int>(increments.rows()); }
};

/// Standard normals keyed by (seed, path_id, step, component): Box-Muller on
/// Philox output with counter (step, component / 2, path_id lo, path_id hi)
/// and key (seed lo, seed hi).
BrownianIncrements generate_increments(std::uint64_t seed, std::uint64_t path_id,
                                       int n_steps, int d, double dt);

/// Fills `out` (d x n_steps) in place; same stream as generate_increments.
void fill_increments(std::uint64_t seed, std::uint64_t path_id, double dt,
                     DenseMatrix& out);

}  // namespace fsde
