#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "error.hpp"

namespace lanecheck {

inline constexpr double kZ95 = 1.959964;

struct Interval {
  double low = 0.0;
  double high = 1.0;

  double width() const noexcept { return high - low; }
  double half_width() const noexcept { return 0.5 * width(); }
};

/// Wilson score interval for k successes in n trials. The bounds are exactly
/// 0 when k = 0 and exactly 1 when k = n.
inline Interval wilson_ci(std::size_t k, std::size_t n, double z = kZ95) {
  if (n == 0) throw Error("wilson_ci: need at least one trial");
  if (k > n) throw Error("wilson_ci: successes exceed trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * nn)) / (1.0 + z2 / nn);
  const double spread = z / (1.0 + z2 / nn) * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  Interval ci{std::max(0.0, centre - spread), std::min(1.0, centre + spread)};
  if (k == 0) ci.low = 0.0;
  if (k == n) ci.high = 1.0;
  return ci;
}

}  // namespace lanecheck
