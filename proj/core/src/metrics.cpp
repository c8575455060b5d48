#include <conreg/metrics.hpp>

#include <cmath>

namespace conreg {

uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double radical_inverse(uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * double(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

std::vector<Vec2> halton_points(const Box2& box, int n, uint64_t seed) {
  uint64_t s1 = mix_seed(seed, 1), s2 = mix_seed(seed, 2);
  double u0 = double(s1 >> 11) * 0x1.0p-53, u1 = double(s2 >> 11) * 0x1.0p-53;
  std::vector<Vec2> pts;
  pts.reserve(n);
  Vec2 sz = box.size();
  for (int i = 0; i < n; ++i) {
    double a = radical_inverse(uint64_t(i) + 1, 2) + u0;
    double b = radical_inverse(uint64_t(i) + 1, 3) + u1;
    a -= std::floor(a);
    b -= std::floor(b);
    pts.emplace_back(box.lo.x() + a * sz.x(), box.lo.y() + b * sz.y());
  }
  return pts;
}

double c1_distance(const MapLike& g, const MapLike& h, const std::vector<Vec2>& pts) {
  double m = 0.0;
  for (const Vec2& z : pts) {
    Jet a = g.jet(z), b = h.jet(z);
    m = std::max(m, linf(a.v - b.v) + max_abs(a.J - b.J));
  }
  return m;
}

double c1_distance(const MapLike& g, const MapLike& h, const Box2& region, const C1Metric& m) {
  std::vector<Vec2> pts = halton_points(region, m.samples, m.seed);
  if (m.include_corners) {
    pts.push_back(region.lo);
    pts.push_back(region.hi);
    pts.emplace_back(region.lo.x(), region.hi.y());
    pts.emplace_back(region.hi.x(), region.lo.y());
  }
  return c1_distance(g, h, pts);
}

VolumeEstimate region_volume(const std::function<bool(const Vec2&)>& inside, const Box2& box,
                             uint64_t seed, long budget) {
  if (budget <= 0) throw Error(ErrorCode::invalid_parameter, "zero budget");
  std::vector<Vec2> pts = halton_points(box, int(budget), seed);
  long hit = 0;
  for (const Vec2& z : pts) hit += inside(z) ? 1 : 0;
  double a = box.area();
  double p = double(hit) / double(budget);
  VolumeEstimate e;
  e.value = a * p;
  // binomial standard error scaled by 3, floored at one point's weight
  e.error = 3.0 * a * std::sqrt(std::max(p * (1 - p), 0.25 / double(budget)) / double(budget)) + a / double(budget);
  return e;
}

double polygon_area(const Polygon& p) {
  size_t n = p.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  // shoelace relative to the first vertex to limit cancellation
  const Vec2& o = p[0];
  for (size_t i = 1; i + 1 < n; ++i) {
    Vec2 a = p[i] - o, b = p[i + 1] - o;
    s += a.x() * b.y() - a.y() * b.x();
  }
  return 0.5 * s;
}

namespace {

template <class Inside, class Cross>
Polygon clip_half(const Polygon& in, Inside inside, Cross cross) {
  Polygon out;
  size_t n = in.size();
  if (n == 0) return out;
  out.reserve(n + 4);
  for (size_t i = 0; i < n; ++i) {
    const Vec2& a = in[i];
    const Vec2& b = in[(i + 1) % n];
    bool ia = inside(a), ib = inside(b);
    if (ia) out.push_back(a);
    if (ia != ib) out.push_back(cross(a, b));
  }
  return out;
}

}  // namespace

Polygon clip_to_box(const Polygon& p, const Box2& b) {
  Polygon r = p;
  for (int axis = 0; axis < 2; ++axis) {
    double lo = b.lo[axis], hi = b.hi[axis];
    auto cut = [axis](double v) {
      return [axis, v](const Vec2& a, const Vec2& c) {
        double t = (v - a[axis]) / (c[axis] - a[axis]);
        Vec2 x = a + t * (c - a);
        x[axis] = v;
        return x;
      };
    };
    r = clip_half(r, [axis, lo](const Vec2& z) { return z[axis] >= lo; }, cut(lo));
    r = clip_half(r, [axis, hi](const Vec2& z) { return z[axis] <= hi; }, cut(hi));
  }
  return r;
}

VolumeEstimate clipped_area(const Polygon& p, const Box2& b) {
  VolumeEstimate e;
  e.value = polygon_area(clip_to_box(p, b));
  Polygon half;
  half.reserve(p.size() / 2 + 1);
  for (size_t i = 0; i < p.size(); i += 2) half.push_back(p[i]);
  e.error = std::abs(e.value - polygon_area(clip_to_box(half, b)));
  return e;
}

namespace {

void side_points(Polygon& out, const Vec2& a, const Vec2& b, int axis, double h, double hf,
                 const std::vector<Band>& bands) {
  double s0 = a[axis], s1 = b[axis];
  double dir = s1 > s0 ? 1.0 : -1.0;
  std::vector<double> cuts{s0, s1};
  for (const Band& bd : bands) {
    if (bd.axis != axis) continue;
    for (double c : {bd.lo, bd.hi})
      if ((c - s0) * dir > 0 && (s1 - c) * dir > 0) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  if (dir < 0) std::reverse(cuts.begin(), cuts.end());
  size_t start = out.size();
  for (size_t k = 0; k + 1 < cuts.size(); ++k) {
    double u0 = cuts[k], u1 = cuts[k + 1];
    double mid = 0.5 * (u0 + u1);
    double sp = h;
    if (hf > 0)
      for (const Band& bd : bands)
        if (bd.axis == axis && mid > bd.lo && mid < bd.hi) sp = hf;
    int n = std::max(1, int(std::ceil(std::abs(u1 - u0) / sp)));
    for (int i = 0; i < n; ++i) {
      Vec2 z = a;
      z[axis] = u0 + (u1 - u0) * double(i) / n;
      out.push_back(z);
    }
  }
  // keep the side's point count even so corners survive decimation by two
  if ((out.size() - start) % 2 == 1) {
    Vec2 m = 0.5 * (out[start] + (out.size() > start + 1 ? out[start + 1] : b));
    out.insert(out.begin() + long(start) + 1, m);
  }
}

}  // namespace

Polygon box_boundary(const Box2& b, double h, double h_fine, const std::vector<Band>& bands) {
  Polygon p;
  side_points(p, b.lo, Vec2(b.hi.x(), b.lo.y()), 0, h, h_fine, bands);
  side_points(p, Vec2(b.hi.x(), b.lo.y()), b.hi, 1, h, h_fine, bands);
  side_points(p, b.hi, Vec2(b.lo.x(), b.hi.y()), 0, h, h_fine, bands);
  side_points(p, Vec2(b.lo.x(), b.hi.y()), b.lo, 1, h, h_fine, bands);
  return p;
}

Polygon refine_polygon(const Polygon& corners, double h, double h_fine, const std::vector<Band>& bands) {
  Polygon p;
  size_t n = corners.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 &a = corners[i], &b = corners[(i + 1) % n];
    int axis = std::abs(b.x() - a.x()) >= std::abs(b.y() - a.y()) ? 0 : 1;
    if (std::abs(b[1 - axis] - a[1 - axis]) > 1e-12 * (1.0 + std::abs(b[axis] - a[axis])))
      throw Error(ErrorCode::invalid_geometry, "polygon edge is not axis-parallel");
    side_points(p, a, b, axis, h, h_fine, bands);
  }
  return p;
}

}  // namespace conreg
