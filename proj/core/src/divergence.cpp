#include <conreg/divergence.hpp>

#include <cmath>
#include <cstdio>
#include <limits>

namespace conreg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

// composite rule with 8-point panels on [0, 1], total count rounded up to a multiple of 8
void composite_unit(int n, std::vector<double>& x, std::vector<double>& w) {
  std::vector<double> gx, gw;
  gauss_legendre(8, gx, gw);
  int panels = std::max(1, (n + 7) / 8);
  x.clear();
  w.clear();
  for (int p = 0; p < panels; ++p)
    for (int k = 0; k < 8; ++k) {
      x.push_back((p + 0.5 * (gx[k] + 1.0)) / panels);
      w.push_back(0.5 * gw[k] / panels);
    }
}

double bump_profile(double s2) { return s2 < 1.0 ? std::exp(-1.0 / (1.0 - s2)) : 0.0; }

}  // namespace

bool Region::contains(const Vec2& z) const {
  if (kind == Kind::ball) return (z - c).norm() <= half.x();
  Vec2 d = (z - c).cwiseAbs();
  return d.x() <= half.x() && d.y() <= half.y();
}

double Region::volume() const {
  if (kind == Kind::ball) return kPi * half.x() * half.x();
  return 4.0 * half.x() * half.y();
}

double Region::margin_around(const Region& in) const {
  if (kind == Kind::box) {
    Vec2 d = (in.c - c).cwiseAbs();
    return std::min(half.x() - d.x() - in.half.x(), half.y() - d.y() - in.half.y());
  }
  double R = half.x(), dist = (in.c - c).norm();
  if (in.kind == Kind::ball) return R - dist - in.half.x();
  double far = 0;
  for (int sx = -1; sx <= 1; sx += 2)
    for (int sy = -1; sy <= 1; sy += 2)
      far = std::max(far, (in.c + Vec2(sx * in.half.x(), sy * in.half.y()) - c).norm());
  return R - far;
}

SupportPair SupportPair::nested(const Region& b1, const Region& b2, double min_margin) {
  SupportPair s;
  s.B1 = b1;
  s.B2 = b2;
  s.star_c = b1.c;
  s.star_r = b1.half.minCoeff();
  s.min_margin = min_margin;
  return s;
}

void SupportPair::validate() const {
  double m = B2.margin_around(B1);
  if (!(m > 0.0) || m < min_margin) throw Error(ErrorCode::invalid_geometry, "closure of B1 not inside B2 with margin");
  if (!(star_r > 0.0) || B2.margin_around(Region::ball(star_c, star_r)) < 0.0)
    throw Error(ErrorCode::invalid_geometry, "B2 not star-shaped with respect to the stated ball");
}

BogovskiiField::BogovskiiField(std::shared_ptr<const ScalarField> phi, SupportPair geom, int nodes, int angles)
    : phi_(std::move(phi)), geom_(std::move(geom)), nodes_(nodes), angles_(angles) {
  composite_unit(nodes, gx_, gw_);
  composite_unit(32, bx_, bw_);
  dirs_.resize(angles);
  for (int j = 0; j < angles; ++j) {
    double a = 2.0 * kPi * j / angles;
    dirs_[j] = Vec2(std::cos(a), std::sin(a));
  }
  std::vector<double> x, w;
  composite_unit(512, x, w);
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * bump_profile(x[i] * x[i]) * x[i];
  wnorm_ = 1.0 / (2.0 * kPi * s * geom_.star_r * geom_.star_r);
  fd_h_ = 1e-3 * geom_.B2.half.maxCoeff();
}

double BogovskiiField::omega(const Vec2& y) const {
  double r = geom_.star_r;
  return wnorm_ * bump_profile((y - geom_.star_c).squaredNorm() / (r * r));
}

Vec2 BogovskiiField::value(const Vec2& z) const {
  if (!geom_.B2.contains(z)) return Vec2::Zero();
  Box2 S = phi_->support();
  Vec2 d = z - geom_.star_c;
  double rho2 = geom_.star_r * geom_.star_r;
  Vec2 acc = Vec2::Zero();
  size_t nq = gx_.size();
  for (const Vec2& th : dirs_) {
    // rays z - r th meeting the density box
    double r0 = 0.0, r1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 2; ++k) {
      if (th[k] == 0.0) {
        if (z[k] < S.lo[k] || z[k] > S.hi[k]) r1 = -1.0;
        continue;
      }
      double a = (z[k] - S.lo[k]) / th[k], b = (z[k] - S.hi[k]) / th[k];
      r0 = std::max(r0, std::min(a, b));
      r1 = std::min(r1, std::max(a, b));
    }
    if (!(r1 > r0)) continue;
    // rays z + s th through the bump ball
    double dt = d.dot(th);
    double disc = dt * dt - (d.squaredNorm() - rho2);
    if (!(disc > 0.0)) continue;
    double sq = std::sqrt(disc);
    double s0 = std::max(0.0, -dt - sq), s1 = -dt + sq;
    if (!(s1 > s0)) continue;
    double A0 = 0, A1 = 0, B0 = 0, B1 = 0;
    double lr = r1 - r0, ls = s1 - s0;
    for (size_t q = 0; q < nq; ++q) {
      double r = r0 + lr * gx_[q];
      double f = gw_[q] * phi_->value(z - r * th);
      A0 += f;
      A1 += f * r;
    }
    for (size_t q = 0; q < bx_.size(); ++q) {
      double s = s0 + ls * bx_[q];
      double f = bw_[q] * omega(z + s * th);
      B0 += f;
      B1 += f * s;
    }
    A0 *= lr;
    A1 *= lr;
    B0 *= ls;
    B1 *= ls;
    acc += (A0 * B1 + A1 * B0) * th;
  }
  return acc * (2.0 * kPi / double(angles_));
}

Box2 BogovskiiField::hull() const {
  Box2 S = phi_->support();
  Box2 b = Box2::centered(geom_.star_c, geom_.star_r);
  return {S.lo.cwiseMin(b.lo), S.hi.cwiseMax(b.hi)};
}

Mat2 BogovskiiField::jacobian(const Vec2& z) const {
  Mat2 J;
  double h = fd_h_;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = h;
    J.col(k) = (-value(z + 2 * e) + 8.0 * value(z + e) - 8.0 * value(z - e) + value(z - 2 * e)) / (12.0 * h);
  }
  return J;
}

bool BogovskiiField::sample(const Vec2& z, FlowSample& out) const {
  if (!geom_.B2.contains(z)) return false;
  out.v = value(z);
  out.Dv = jacobian(z);
  out.phi = phi_->value(z);
  out.dphi = phi_->gradient(z);
  return true;
}

double integrate(const ScalarField& f, const Box2& box, int n) {
  std::vector<double> x, w;
  composite_unit(n, x, w);
  Vec2 sz = box.size();
  double s = 0.0;
  for (size_t j = 0; j < x.size(); ++j) {
    double row = 0.0;
    double y = box.lo.y() + sz.y() * x[j];
    for (size_t i = 0; i < x.size(); ++i) row += w[i] * f.value(Vec2(box.lo.x() + sz.x() * x[i], y));
    s += w[j] * row;
  }
  return s * sz.x() * sz.y();
}

double fd_divergence(const std::function<Vec2(const Vec2&)>& v, const Vec2& z, double h) {
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = h;
    s += (-v(z + 2 * e)[k] + 8.0 * v(z + e)[k] - 8.0 * v(z - e)[k] + v(z - 2 * e)[k]) / (12.0 * h);
  }
  return s;
}

double divergence_residual(const BogovskiiField& v, const Box2& box, int n) {
  // 6th-order central differences on a grid padded by three nodes
  Vec2 h = box.size() / double(n);
  int m = n + 7;
  std::vector<Vec2> g(size_t(m) * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      g[size_t(j) * m + i] = v.value(box.lo + Vec2((i - 3) * h.x(), (j - 3) * h.y()));
  auto at = [&](int i, int j) -> const Vec2& { return g[size_t(j + 3) * m + (i + 3)]; };
  const double c[3] = {45.0, -9.0, 1.0};
  double err = 0.0, ref = 0.0;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      double dx = 0, dy = 0;
      for (int k = 1; k <= 3; ++k) {
        dx += c[k - 1] * (at(i + k, j).x() - at(i - k, j).x());
        dy += c[k - 1] * (at(i, j + k).y() - at(i, j - k).y());
      }
      dx /= 60 * h.x();
      dy /= 60 * h.y();
      double p = v.density().value(box.lo + Vec2(i * h.x(), j * h.y()));
      err = std::max(err, std::abs(dx + dy - p));
      ref = std::max(ref, std::abs(p));
    }
  return ref > 0 ? err / ref : err;
}

namespace {

double self_check(const BogovskiiField& v, const Box2& box, int n) {
  double err = 0.0, ref = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec2 z = box.lo + Vec2((i + 0.5) * box.size().x() / n, (j + 0.5) * box.size().y() / n);
      double p = v.density().value(z);
      err = std::max(err, std::abs(v.jacobian(z).trace() - p));
      ref = std::max(ref, std::abs(p));
    }
  return ref > 0 ? err / ref : err;
}

}  // namespace

std::shared_ptr<BogovskiiField> solve_divergence(std::shared_ptr<const ScalarField> phi, const SupportPair& geom,
                                                 const DivOptions& opt) {
  if (!phi) throw Error(ErrorCode::invalid_parameter, "null density");
  if (opt.nodes < 8 || opt.angles < 8) throw Error(ErrorCode::invalid_parameter, "quadrature too coarse");
  geom.validate();
  Box2 S = phi->support();
  if (!geom.B1.bbox().inflated(1e-12).contains(S)) throw Error(ErrorCode::invalid_geometry, "density support leaves B1");

  double norm = 0.0;
  for (int j = 0; j <= 64; ++j)
    for (int i = 0; i <= 64; ++i)
      norm = std::max(norm, std::abs(phi->value(S.lo + Vec2(i * S.size().x() / 64, j * S.size().y() / 64))));
  double mean = integrate(*phi, S, 256);
  if (std::abs(mean) > opt.tol_integral * std::max(norm, 1e-300) * geom.B1.volume() && norm > 0)
    throw Error(ErrorCode::nonzero_mean, "density integral " + std::to_string(mean));

  auto v = std::make_shared<BogovskiiField>(phi, geom, opt.nodes, opt.angles);
  if (opt.check_grid <= 0 || norm == 0.0) return v;
  double r = self_check(*v, S, opt.check_grid);
  if (r > opt.tol) {
    v = std::make_shared<BogovskiiField>(phi, geom, 2 * opt.nodes, 2 * opt.angles);
    r = self_check(*v, S, opt.check_grid);
    if (r > opt.tol) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "divergence residual %.3e above %.3e", r, opt.tol);
      throw Error(ErrorCode::resolution_exceeded, buf);
    }
  }
  v->set_residual(r);
  return v;
}

std::shared_ptr<GridFlow> resample_flow(const BogovskiiField& v, double h) {
  Box2 b = intersect(v.hull().inflated(2 * h), v.support());
  int nx = int(std::ceil(b.size().x() / h)) + 1, ny = int(std::ceil(b.size().y() / h)) + 1;
  double hh = std::max(b.size().x() / (nx - 1), b.size().y() / (ny - 1));
  std::vector<Vec2> vals(size_t(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) vals[size_t(j) * nx + i] = v.value(b.lo + Vec2(i * hh, j * hh));
  return std::make_shared<GridFlow>(b.lo, hh, nx, ny, vals, b);
}

}  // namespace conreg
