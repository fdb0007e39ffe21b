#include "fsde/rng.hpp"

#include <cmath>
#include <numbers>

#include "fsde/errors.hpp"

namespace fsde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

double uniform_open01(std::uint32_t hi, std::uint32_t lo) noexcept {
  // 52 bits keep (bits + 0.5) exactly representable, so 1.0 is never reached.
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

void fill_increments(std::uint64_t seed, std::uint64_t path_id, double dt,
                     DenseMatrix& out) {
  if (!(dt > 0.0)) throw InvalidArgument("increments: dt must be positive");
  const Philox4x32::Key key = {static_cast<std::uint32_t>(seed),
                               static_cast<std::uint32_t>(seed >> 32)};
  const auto plo = static_cast<std::uint32_t>(path_id);
  const auto phi = static_cast<std::uint32_t>(path_id >> 32);
  const double scale = std::sqrt(dt);
  const Eigen::Index d = out.rows();
  for (Eigen::Index step = 0; step < out.cols(); ++step) {
    for (Eigen::Index pair = 0; 2 * pair < d; ++pair) {
      const auto r = Philox4x32::generate(
          {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(pair), plo, phi},
          key);
      const double u1 = uniform_open01(r[0], r[1]);
      const double u2 = uniform_open01(r[2], r[3]);
      const double radius = std::sqrt(-2.0 * std::log(u1));
      const double angle = 2.0 * std::numbers::pi * u2;
      out(2 * pair, step) = scale * radius * std::cos(angle);
      if (2 * pair + 1 < d) out(2 * pair + 1, step) = scale * radius * std::sin(angle);
    }
  }
}

BrownianIncrements generate_increments(std::uint64_t seed, std::uint64_t path_id,
                                       int n_steps, int d, double dt) {
  if (n_steps < 1) throw InvalidArgument("increments: n_steps must be >= 1");
  if (d < 1) throw InvalidArgument("increments: d must be >= 1");
  BrownianIncrements out;
  out.seed = seed;
  out.path_id = path_id;
  out.dt = dt;
  out.increments.resize(d, n_steps);
  fill_increments(seed, path_id, dt, out.increments);
  return out;
}

}  // namespace fsde
