#include <conreg/dyadic.hpp>

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace conreg {

bool DyadicCell::in_interior(const double* z) const {
  for (int k = 0; k < n; ++k) {
    if (b[k]) {
      if (!(z[k] > lo(k) && z[k] < hi(k))) return false;
    } else if (z[k] != lo(k)) {
      return false;
    }
  }
  return true;
}

bool DyadicCell::contains(const double* z) const {
  for (int k = 0; k < n; ++k)
    if (z[k] < lo(k) || z[k] > hi(k)) return false;
  return true;
}

bool DyadicCell::operator==(const DyadicCell& o) const {
  if (n != o.n || t != o.t) return false;
  for (int k = 0; k < n; ++k)
    if (a[k] != o.a[k] || b[k] != o.b[k]) return false;
  return true;
}

std::string DyadicCell::str() const {
  std::ostringstream s;
  s << "t=" << t << " a=(";
  for (int k = 0; k < n; ++k) s << (k ? "," : "") << a[k];
  s << ") b=(";
  for (int k = 0; k < n; ++k) s << (k ? "," : "") << int(b[k]);
  s << ")";
  return s.str();
}

size_t CellKeyHash::operator()(const DyadicCell& c) const {
  uint64_t h = uint64_t(c.t) * 0x9e3779b97f4a7c15ULL;
  for (int k = 0; k < c.n; ++k) {
    h ^= uint64_t(c.a[k]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= uint64_t(c.b[k]) << (7 + k);
  }
  h ^= h >> 31;
  h *= 0xbf58476d1ce4e5b9ULL;
  return size_t(h ^ (h >> 29));
}

BoxRegion::BoxRegion(std::vector<double> lo, std::vector<double> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size() || lo_.empty() || lo_.size() > size_t(kMaxDim))
    throw Error(ErrorCode::invalid_parameter, "box dimension");
  for (size_t k = 0; k < lo_.size(); ++k)
    if (!(hi_[k] > lo_[k])) throw Error(ErrorCode::empty_domain, "box has no interior");
}

std::array<double, 2 * kMaxDim> BoxRegion::bbox() const {
  std::array<double, 2 * kMaxDim> r{};
  int n = dim();
  for (int k = 0; k < n; ++k) {
    r[k] = lo_[k];
    r[n + k] = hi_[k];
  }
  return r;
}

bool BoxRegion::contains_ball(const double* z, double r) const {
  for (int k = 0; k < dim(); ++k)
    if (!(z[k] - r > lo_[k] && z[k] + r < hi_[k])) return false;
  return true;
}

bool BoxRegion::may_intersect_ball(const double* z, double r) const {
  for (int k = 0; k < dim(); ++k)
    if (z[k] + r <= lo_[k] || z[k] - r >= hi_[k]) return false;
  return true;
}

std::array<double, 2 * kMaxDim> ImplicitRegion::bbox() const {
  return {bb_.lo.x(), bb_.lo.y(), bb_.hi.x(), bb_.hi.y(), 0, 0};
}

bool ImplicitRegion::contains_ball(const double* z, double r) const {
  // the L-inf ball of radius r sits in the Euclidean ball of radius r*sqrt(2)
  return sdf_(Vec2(z[0], z[1])) < -r * std::sqrt(2.0);
}

bool ImplicitRegion::may_intersect_ball(const double* z, double r) const {
  return sdf_(Vec2(z[0], z[1])) < r * std::sqrt(2.0);
}

namespace {

using json = nlohmann::json;

Vec2 vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::input_error, "expected a pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

ImplicitRegion::Sdf build_sdf(const json& e) {
  if (!e.is_object() || e.size() != 1) throw Error(ErrorCode::input_error, "bad implicit expression");
  auto it = e.begin();
  const std::string& op = it.key();
  const json& v = it.value();
  if (op == "disk") {
    Vec2 c = vec2(v.at("c"));
    double r = v.at("r").get<double>();
    if (!(r > 0)) throw Error(ErrorCode::input_error, "disk radius");
    return [c, r](const Vec2& z) { return (z - c).norm() - r; };
  }
  if (op == "box") {
    Vec2 lo = vec2(v.at("lo")), hi = vec2(v.at("hi"));
    Vec2 c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    return [c, h](const Vec2& z) {
      Vec2 q = (z - c).cwiseAbs() - h;
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    };
  }
  if (op == "union" || op == "intersect") {
    std::vector<ImplicitRegion::Sdf> parts;
    for (const json& s : v) parts.push_back(build_sdf(s));
    if (parts.empty()) throw Error(ErrorCode::input_error, "empty " + op);
    bool uni = op == "union";
    return [parts, uni](const Vec2& z) {
      double m = parts[0](z);
      for (size_t i = 1; i < parts.size(); ++i) m = uni ? std::min(m, parts[i](z)) : std::max(m, parts[i](z));
      return m;
    };
  }
  if (op == "minus") {
    if (!v.is_array() || v.size() != 2) throw Error(ErrorCode::input_error, "minus takes two operands");
    auto a = build_sdf(v[0]), b = build_sdf(v[1]);
    return [a, b](const Vec2& z) { return std::max(a(z), -b(z)); };
  }
  throw Error(ErrorCode::input_error, "unknown implicit operator " + op);
}

}  // namespace

std::shared_ptr<RegionSpec> region_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input_error, std::string("domain json: ") + e.what());
  }
  try {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "box") {
      auto lo = j.at("lo").get<std::vector<double>>();
      auto hi = j.at("hi").get<std::vector<double>>();
      return std::make_shared<BoxRegion>(lo, hi);
    }
    if (kind == "implicit") {
      auto bb = j.at("bbox").get<std::vector<double>>();
      if (bb.size() != 4 || !(bb[2] > bb[0]) || !(bb[3] > bb[1]))
        throw Error(ErrorCode::input_error, "implicit bbox");
      return std::make_shared<ImplicitRegion>(build_sdf(j.at("expr")),
                                              Box2{Vec2(bb[0], bb[1]), Vec2(bb[2], bb[3])});
    }
    throw Error(ErrorCode::input_error, "unknown domain kind " + kind);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input_error, std::string("domain json: ") + e.what());
  }
}

void Margins::validate(int n) const {
  if (!(c > 0) || !(glue_ratio > 0) || !(glue_ratio < 1)) throw Error(ErrorCode::invalid_margins, "margin constants");
  // D of an m-cell must not reach past half the (m-1)-margin, and D of a vertex stays inside its neighbours
  for (int m = 1; m < n; ++m)
    if (!(w(m) < 0.5 * w(m - 1))) throw Error(ErrorCode::invalid_margins, "w(m) >= w(m-1)/2");
  for (int m = 1; m <= n; ++m)
    if (!(glue(m) < 0.5 * w(m - 1))) throw Error(ErrorCode::invalid_margins, "glue too wide");
  if (!(2 * w(0) < 1)) throw Error(ErrorCode::invalid_margins, "vertex box too wide");
  if (!(w(0) + glue(0) < 1)) throw Error(ErrorCode::invalid_margins, "glue leaves the neighbours");
}

bool BoxRegionSet::contains(const Vec2& z) const {
  bool in = false;
  for (const Box2& b : plus)
    if (b.contains(z)) {
      in = true;
      break;
    }
  if (!in) return false;
  for (const Box2& b : minus)
    if (b.contains_open(z)) return false;
  return true;
}

bool BoxRegionSet::contains_open(const Vec2& z) const {
  double s = 1e-12;
  for (const Box2& b : plus) s = std::max(s, 1e-12 * linf(b.size()));
  for (int dx = -1; dx <= 1; dx += 2)
    for (int dy = -1; dy <= 1; dy += 2) {
      Vec2 w = z + s * Vec2(dx, dy);
      bool in = false;
      for (const Box2& b : plus)
        if (b.contains(w)) {
          in = true;
          break;
        }
      if (!in) return false;
      for (const Box2& b : minus)
        if (b.contains(w)) return false;
    }
  return true;
}

Box2 BoxRegionSet::hull() const {
  if (plus.empty()) return {Vec2::Zero(), Vec2::Zero()};
  Box2 h = plus[0];
  for (const Box2& b : plus) {
    h.lo = h.lo.cwiseMin(b.lo);
    h.hi = h.hi.cwiseMax(b.hi);
  }
  return h;
}

std::vector<DyadicCell> neighbors_at(const DyadicCell& x, int t) {
  if (t < x.t) throw Error(ErrorCode::invalid_parameter, "neighbour scale coarser than the cell");
  std::vector<DyadicCell> out;
  int64_t f = int64_t(1) << (t - x.t);
  int free = 0;
  std::array<int, kMaxDim> fixed{};
  for (int k = 0; k < x.n; ++k)
    if (!x.b[k]) fixed[free++] = k;
  // for m < n only the same-size cells are meant; a finer t is used for m = n as a single cell
  if (free == 0 && f == 1) return {x};
  for (int mask = 0; mask < (1 << free); ++mask) {
    DyadicCell c;
    c.n = x.n;
    c.t = t;
    for (int k = 0; k < x.n; ++k) {
      c.a[k] = x.a[k] * f;
      c.b[k] = 1;
    }
    for (int i = 0; i < free; ++i) c.a[fixed[i]] -= (mask >> i) & 1;
    out.push_back(c);
  }
  return out;
}

std::vector<DyadicCell> neighbors(const WhitneyDecomposition&, const DyadicCell& x) {
  return neighbors_at(x, x.t);
}

bool epsilon_small(const RegionSpec& dom, const DyadicCell& x, double eps) {
  double h = x.side();
  if (!(h <= eps)) return false;
  std::array<double, kMaxDim> c{};
  for (int k = 0; k < x.n; ++k) c[k] = 0.5 * (x.lo(k) + x.hi(k));
  return dom.contains_ball(c.data(), 1.5 * h);
}

Rescale lambda_rescale(const DyadicCell& x, int rank) {
  return {x.barycenter(), std::ldexp(1.0, -rank + 1)};
}

}  // namespace conreg
