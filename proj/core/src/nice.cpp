#include <conreg/regularizer.hpp>

#include <algorithm>
#include <cmath>
#include <map>

namespace conreg {

std::shared_ptr<AffinePrim> affine_seed(const InputMap& f, const Vec2& b, double tau_in) {
  Jet j = f.jet(b);
  double d = j.J.determinant();
  if (!(std::abs(d - 1.0) <= tau_in)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "det Df = %.17g at (%g, %g)", d, b.x(), b.y());
    throw Error(ErrorCode::input_error, buf);
  }
  return std::make_shared<AffinePrim>(j.J, j.v - j.J * b);
}

NiceReport check_nice(const MapLike& h, const InputMap& f, const Box2& R, const AffinePrim& H, const Rescale& lam,
                      int n, uint64_t seed) {
  NiceReport r;
  if (n <= 0) return r;
  std::vector<Vec2> pts = halton_points(R, n, seed);
  r.c1 = c1_distance(h, f, pts);
  double eta = 1e-3 * lam.s;
  for (const Vec2& z : pts) {
    // rescaled: G(w) = (h(b + s w) - b) / s, DG = Dh, D2G = s D2h; the seed has D2 = 0
    Jet a = h.jet(z);
    double d0 = (a.v - H.eval(z)).cwiseAbs().maxCoeff() / lam.s;
    double d1 = (a.J - H.A()).cwiseAbs().maxCoeff();
    double d2 = 0.0;
    for (int k = 0; k < 2; ++k) {
      Vec2 e = Vec2::Zero();
      e[k] = eta;
      Mat2 D = (h.jet(z + e).J - h.jet(z - e).J) / (2.0 * eta);
      d2 = std::max(d2, lam.s * D.cwiseAbs().maxCoeff());
    }
    r.regularity = std::max({r.regularity, d0, d1, d2});
  }
  return r;
}

ProbeTable smoothness_probe(const MapLike& input, const MapLike& output, const std::vector<Vec2>& points,
                            const std::vector<double>& scales) {
  ProbeTable t;
  t.h = scales;
  t.samples = points.size();
  auto q = [&](const MapLike& g, double h) {
    double m = 0.0;
    for (const Vec2& z : points) {
      Vec2 c = g.eval(z);
      for (int k = 0; k < 2; ++k) {
        Vec2 e = Vec2::Zero();
        e[k] = h;
        Vec2 d = g.eval(z + e) - 2.0 * c + g.eval(z - e);
        m = std::max(m, d.cwiseAbs().maxCoeff() / (h * h));
      }
    }
    return m;
  };
  for (double h : scales) {
    t.input.push_back(q(input, h));
    t.output.push_back(q(output, h));
  }
  return t;
}

Polygon hole_boundary(const Box2& x, const std::vector<Box2>& cut) {
  std::vector<double> xs{x.lo.x(), x.hi.x()}, ys{x.lo.y(), x.hi.y()};
  for (const Box2& b : cut) {
    for (double v : {b.lo.x(), b.hi.x()})
      if (v > x.lo.x() && v < x.hi.x()) xs.push_back(v);
    for (double v : {b.lo.y(), b.hi.y()})
      if (v > x.lo.y() && v < x.hi.y()) ys.push_back(v);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  int nx = int(xs.size()) - 1, ny = int(ys.size()) - 1;
  std::vector<char> in(size_t(nx) * ny, 0);
  auto at = [&](int i, int j) { return i >= 0 && j >= 0 && i < nx && j < ny && in[size_t(j) * nx + i]; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Vec2 c(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
      bool covered = false;
      for (const Box2& b : cut) covered = covered || b.contains(c);
      in[size_t(j) * nx + i] = !covered;
    }
  // directed boundary edges of the marked cells, counter-clockwise
  std::map<std::pair<int, int>, std::pair<int, int>> next;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!at(i, j)) continue;
      if (!at(i, j - 1)) next[{i, j}] = {i + 1, j};
      if (!at(i + 1, j)) next[{i + 1, j}] = {i + 1, j + 1};
      if (!at(i, j + 1)) next[{i + 1, j + 1}] = {i, j + 1};
      if (!at(i - 1, j)) next[{i, j + 1}] = {i, j};
    }
  if (next.empty()) throw Error(ErrorCode::invalid_geometry, "nothing left of the cell");
  std::vector<std::pair<int, int>> loop;
  auto start = next.begin()->first, cur = start;
  do {
    loop.push_back(cur);
    auto it = next.find(cur);
    if (it == next.end()) throw Error(ErrorCode::invalid_geometry, "open hole boundary");
    cur = it->second;
  } while (cur != start && loop.size() <= next.size());
  if (loop.size() != next.size()) throw Error(ErrorCode::invalid_geometry, "hole is not simply connected");
  Polygon p;
  size_t n = loop.size();
  for (size_t k = 0; k < n; ++k) {
    auto a = loop[(k + n - 1) % n], b = loop[k], c = loop[(k + 1) % n];
    bool straight = (a.first == b.first && b.first == c.first) || (a.second == b.second && b.second == c.second);
    if (!straight) p.emplace_back(xs[b.first], ys[b.second]);
  }
  return p;
}

}  // namespace conreg
