#pragma once
// Reference computations written without the library's algorithms.

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

// (t, i, j): the square [i, i+1] x [j, j+1] * 2^-t
using Sq = std::tuple<int, int64_t, int64_t>;

// good squares of (0,1)^2 by exhaustive search over every dyadic square with t <= tmax:
// small = side <= eps and the closed 3x3 block of same-size squares around it lies in the open
// unit square; good = small with a parent that is not small
inline std::set<Sq> whitney_squares(double eps, int tmax) {
  auto small = [&](int t, int64_t i, int64_t j) {
    if (std::ldexp(1.0, -t) > eps) return false;
    int64_t N = int64_t(1) << t;
    return i - 1 > 0 && i + 2 < N && j - 1 > 0 && j + 2 < N;
  };
  std::set<Sq> out;
  for (int t = 0; t <= tmax; ++t) {
    int64_t N = int64_t(1) << t;
    for (int64_t i = 0; i < N; ++i)
      for (int64_t j = 0; j < N; ++j)
        if (small(t, i, j) && !(t > 0 && small(t - 1, i >> 1, j >> 1))) out.insert({t, i, j});
  }
  return out;
}

// points and segments in integer coordinates at scale 2^-T
using Pt = std::pair<int64_t, int64_t>;
using Seg = std::pair<Pt, Pt>;

struct Faces {
  std::set<Pt> vertices;
  std::set<Seg> edges;
};

// corners of the squares and their sides cut at every corner lying on them, kept when the cell equals
// the intersection of all squares meeting its relative interior
inline Faces faces(const std::set<Sq>& squares, int T) {
  Faces f;
  std::vector<std::array<int64_t, 4>> boxes;
  for (auto [t, i, j] : squares) {
    int64_t s = int64_t(1) << (T - t);
    boxes.push_back({i * s, j * s, (i + 1) * s, (j + 1) * s});
    for (int64_t a : {i, i + 1})
      for (int64_t b : {j, j + 1}) f.vertices.insert({a * s, b * s});
  }
  // corners on each side, by line
  std::map<int64_t, std::set<int64_t>> on_x, on_y;  // x = const -> ys; y = const -> xs
  for (auto [x, y] : f.vertices) {
    on_x[x].insert(y);
    on_y[y].insert(x);
  }
  auto split = [&](const std::set<int64_t>& marks, int64_t lo, int64_t hi, const std::function<Seg(int64_t, int64_t)>& mk) {
    int64_t prev = lo;
    for (auto it = marks.upper_bound(lo); it != marks.end() && *it <= hi; ++it) {
      f.edges.insert(mk(prev, *it));
      prev = *it;
    }
  };
  for (const auto& b : boxes) {
    for (int64_t y : {b[1], b[3]})
      split(on_y[y], b[0], b[2], [y](int64_t a, int64_t c) { return Seg{{a, y}, {c, y}}; });
    for (int64_t x : {b[0], b[2]})
      split(on_x[x], b[1], b[3], [x](int64_t a, int64_t c) { return Seg{{x, a}, {x, c}}; });
  }
  // doubled coordinates so that midpoints stay integral
  auto is_meet = [&](Pt lo, Pt hi) {
    int64_t mx = lo.first + hi.first, my = lo.second + hi.second;
    int64_t ix0 = INT64_MIN, iy0 = INT64_MIN, ix1 = INT64_MAX, iy1 = INT64_MAX;
    for (const auto& b : boxes)
      if (2 * b[0] <= mx && mx <= 2 * b[2] && 2 * b[1] <= my && my <= 2 * b[3]) {
        ix0 = std::max(ix0, b[0]);
        iy0 = std::max(iy0, b[1]);
        ix1 = std::min(ix1, b[2]);
        iy1 = std::min(iy1, b[3]);
      }
    return ix0 == lo.first && iy0 == lo.second && ix1 == hi.first && iy1 == hi.second;
  };
  std::erase_if(f.vertices, [&](const Pt& p) { return !is_meet(p, p); });
  std::erase_if(f.edges, [&](const Seg& e) { return !is_meet(e.first, e.second); });
  return f;
}

// radial map z -> rho(|z|) z/|z| with det = 1 + phi for a radial phi: rho^2 = r^2 + 2 int_0^r s phi(s) ds,
// the integral by composite Simpson
inline double radial_rho(const std::function<double(double)>& phi_r, double r, int n = 4000) {
  if (r <= 0) return 0.0;
  double h = r / n, acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    double s = k * h, w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    acc += w * s * phi_r(s);
  }
  return std::sqrt(r * r + 2.0 * acc * h / 3.0);
}

// determinant of a 2x2 matrix given by rows
inline double det2(double a, double b, double c, double d) { return a * d - b * c; }

}  // namespace oracle
