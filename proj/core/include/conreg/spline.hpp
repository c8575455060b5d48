#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace conreg {

// centered cardinal B-spline of degree d (0..4), support [-(d+1)/2, (d+1)/2]
inline double bspline(int d, double x) {
  double a = std::abs(x);
  switch (d) {
    case 0:
      return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0;
    case 1:
      return a < 1.0 ? 1.0 - a : 0.0;
    case 2:
      if (a < 0.5) return 0.75 - a * a;
      if (a < 1.5) return 0.5 * (1.5 - a) * (1.5 - a);
      return 0.0;
    case 3:
      if (a < 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
      if (a < 2.0) {
        double u = 2.0 - a;
        return u * u * u / 6.0;
      }
      return 0.0;
    case 4:
      if (a < 0.5) return 115.0 / 192.0 - 0.625 * a * a + 0.25 * a * a * a * a;
      if (a < 1.5)
        return (55.0 + 20.0 * a - 120.0 * a * a + 80.0 * a * a * a - 16.0 * a * a * a * a) / 96.0;
      if (a < 2.5) {
        double u = 5.0 - 2.0 * a;
        return u * u * u * u / 384.0;
      }
      return 0.0;
    default:
      return 0.0;
  }
}

// k-th derivative (k <= 2, k <= d) via the difference recursion
inline double bspline_deriv(int d, int k, double x) {
  if (k == 0) return bspline(d, x);
  if (k == 1) return bspline(d - 1, x + 0.5) - bspline(d - 1, x - 0.5);
  return bspline(d - 2, x + 1.0) - 2.0 * bspline(d - 2, x) + bspline(d - 2, x - 1.0);
}

// uniform knot axis: basis i is centered at x0 + (i + off) * h
struct SplineAxis {
  double x0 = 0.0;
  double h = 1.0;
  int n = 0;
  int deg = 3;
  double off = 0.0;

  double center(int i) const { return x0 + (i + off) * h; }
  double lo() const { return x0 + (off - 0.5 * (deg + 1)) * h; }
  double hi() const { return x0 + (n - 1 + off + 0.5 * (deg + 1)) * h; }
};

// nonzero basis values near one coordinate, derivatives 0..2 in physical units
struct BasisWindow {
  int first = 0;
  int count = 0;
  std::array<std::array<double, 6>, 3> w{};
};

inline BasisWindow basis_window(const SplineAxis& ax, double x, int maxk) {
  BasisWindow bw;
  double s = (x - ax.x0) / ax.h - ax.off;
  double r = 0.5 * (ax.deg + 1);
  int i0 = static_cast<int>(std::ceil(s - r));
  int i1 = static_cast<int>(std::floor(s + r));
  if (i0 < 0) i0 = 0;
  if (i1 > ax.n - 1) i1 = ax.n - 1;
  bw.first = i0;
  bw.count = i1 >= i0 ? std::min(i1 - i0 + 1, 6) : 0;
  double inv = 1.0 / ax.h;
  for (int q = 0; q < bw.count; ++q) {
    double u = s - (i0 + q);
    bw.w[0][q] = bspline(ax.deg, u);
    if (maxk >= 1) bw.w[1][q] = bspline_deriv(ax.deg, 1, u) * inv;
    if (maxk >= 2) bw.w[2][q] = bspline_deriv(ax.deg, 2, u) * inv * inv;
  }
  return bw;
}

// value and derivatives of a scalar tensor spline
struct SplineD2 {
  double f = 0, fx = 0, fy = 0, fxx = 0, fxy = 0, fyy = 0;
};

// tensor-product spline with coefficients c[j * ax.n + i]; T is the storage type
template <class T>
struct TensorSpline {
  SplineAxis ax, ay;
  std::vector<T> c;

  TensorSpline() = default;
  TensorSpline(const SplineAxis& a, const SplineAxis& b) : ax(a), ay(b), c(size_t(a.n) * b.n, T(0)) {}

  T& at(int i, int j) { return c[size_t(j) * ax.n + i]; }
  T at(int i, int j) const { return c[size_t(j) * ax.n + i]; }

  bool in_support(double x, double y) const {
    return x > ax.lo() && x < ax.hi() && y > ay.lo() && y < ay.hi();
  }

  double value(double x, double y) const {
    if (c.empty() || !in_support(x, y)) return 0.0;
    BasisWindow bx = basis_window(ax, x, 0), by = basis_window(ay, y, 0);
    double s = 0.0;
    for (int q = 0; q < by.count; ++q) {
      double rs = 0.0;
      const T* row = &c[size_t(by.first + q) * ax.n + bx.first];
      for (int p = 0; p < bx.count; ++p) rs += bx.w[0][p] * double(row[p]);
      s += by.w[0][q] * rs;
    }
    return s;
  }

  SplineD2 eval(double x, double y, int maxk = 2) const {
    SplineD2 o;
    if (c.empty() || !in_support(x, y)) return o;
    BasisWindow bx = basis_window(ax, x, maxk), by = basis_window(ay, y, maxk);
    for (int q = 0; q < by.count; ++q) {
      double r0 = 0, r1 = 0, r2 = 0;
      const T* row = &c[size_t(by.first + q) * ax.n + bx.first];
      for (int p = 0; p < bx.count; ++p) {
        double cv = double(row[p]);
        r0 += bx.w[0][p] * cv;
        r1 += bx.w[1][p] * cv;
        r2 += bx.w[2][p] * cv;
      }
      o.f += by.w[0][q] * r0;
      o.fx += by.w[0][q] * r1;
      o.fy += by.w[1][q] * r0;
      o.fxx += by.w[0][q] * r2;
      o.fxy += by.w[1][q] * r1;
      o.fyy += by.w[2][q] * r0;
    }
    return o;
  }
};

// 1-D cubic quasi-interpolant weights: exact on cubics
inline double quasi_interp_cubic(double fm, double f0, double fp) {
  return (-fm + 8.0 * f0 - fp) / 6.0;
}

}  // namespace conreg
