#pragma once

#include <cmath>

namespace pwolff {

// Quintic smoothstep s(z) = 6z^5 - 15z^4 + 10z^3 on [0,1]; C^2 at both ends.
inline double smoothstep5(double z) {
  if (z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  return ((6.0 * z - 15.0) * z + 10.0) * z * z * z;
}

inline double smoothstep5_slope(double z) {
  if (z <= 0.0 || z >= 1.0) return 0.0;
  const double w = z * (1.0 - z);
  return 30.0 * w * w;
}

// One-sided C^2 plateau bump: 1 on [0,1/2], smoothstep transition on
// [1/2,1], 0 beyond. Max slope is 2 * sup smoothstep5' = 2 * 15/8 = 3.75,
// attained at r = 3/4.
struct BumpProfile {
  static constexpr double max_abs_slope = 3.75;

  static double value(double r) {
    r = std::abs(r);
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    return 1.0 - smoothstep5(2.0 * r - 1.0);
  }

  static double slope(double r) {
    const double a = std::abs(r);
    if (a <= 0.5 || a >= 1.0) return 0.0;
    const double d = -2.0 * smoothstep5_slope(2.0 * a - 1.0);
    return r >= 0.0 ? d : -d;
  }
};

}  // namespace pwolff
