#pragma once

#include <cmath>

namespace conreg {

// value and first derivative of a scalar profile
struct D1 {
  double f = 0.0;
  double df = 0.0;
};

// quintic smoothstep on [0,1], clamped outside; C2
inline D1 smoothstep5(double u) {
  if (u <= 0.0) return {0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0};
  double u2 = u * u;
  return {u2 * u * (10.0 + u * (-15.0 + 6.0 * u)), 30.0 * u2 * (1.0 - u) * (1.0 - u)};
}

// C-infinity step from 0 (u<=0) to 1 (u>=1)
inline D1 smoothstep_inf(double u) {
  if (u <= 0.0) return {0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0};
  double a = std::exp(-1.0 / u);
  double b = std::exp(-1.0 / (1.0 - u));
  double s = a + b;
  double da = a / (u * u);
  double db = -b / ((1.0 - u) * (1.0 - u));
  return {a / s, (da * s - a * (da + db)) / (s * s)};
}

// 1 for |x|<=r0, 0 for |x|>=r1, C-infinity in between
inline D1 plateau(double x, double r0, double r1) {
  double ax = std::abs(x);
  if (ax <= r0) return {1.0, 0.0};
  if (ax >= r1) return {0.0, 0.0};
  D1 s = smoothstep_inf((r1 - ax) / (r1 - r0));
  double sg = x < 0 ? -1.0 : 1.0;
  return {s.f, -s.df * sg / (r1 - r0)};
}

// channel profile: 1 at 0, 0 for |u|>=1, built from the quintic smoothstep
inline D1 channel_bump(double u) {
  double au = std::abs(u);
  if (au >= 1.0) return {0.0, 0.0};
  D1 s = smoothstep5(1.0 - au);
  return {s.f, u < 0 ? s.df : -s.df};
}

}  // namespace conreg
