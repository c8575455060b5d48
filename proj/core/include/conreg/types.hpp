#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

namespace conreg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// value and derivative of a planar map at one point
struct Jet {
  Vec2 v = Vec2::Zero();
  Mat2 J = Mat2::Identity();
};

enum class ErrorCode {
  invalid_parameter,
  empty_domain,
  depth_exceeded,
  unknown_cell,
  invalid_margins,
  out_of_domain,
  not_invertible,
  nonzero_mean,
  invalid_geometry,
  resolution_exceeded,
  degenerate_density,
  nonconvergent,
  amplitude_exceeded,
  f_too_far,
  budget_exceeded,
  blend_width_exceeded,
  hole_mismatch,
  orientation_degenerate,
  fairness_unavailable,
  input_error,
  internal_error,
};

const char* to_string(ErrorCode c);

// true for failures of numerical procedures, false for bad inputs
bool is_convergence_failure(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}
  ErrorCode code() const { return code_; }
  // the message without the code prefix
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// closed axis-aligned box in the plane
struct Box2 {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  static Box2 centered(const Vec2& c, double half) {
    return {c - Vec2(half, half), c + Vec2(half, half)};
  }
  static Box2 centered(const Vec2& c, const Vec2& half) { return {c - half, c + half}; }

  bool contains(const Vec2& z) const {
    return z.x() >= lo.x() && z.x() <= hi.x() && z.y() >= lo.y() && z.y() <= hi.y();
  }
  bool contains_open(const Vec2& z) const {
    return z.x() > lo.x() && z.x() < hi.x() && z.y() > lo.y() && z.y() < hi.y();
  }
  bool contains(const Box2& b) const {
    return b.lo.x() >= lo.x() && b.hi.x() <= hi.x() && b.lo.y() >= lo.y() &&
           b.hi.y() <= hi.y();
  }
  bool intersects(const Box2& b) const {
    return !(b.lo.x() > hi.x() || b.hi.x() < lo.x() || b.lo.y() > hi.y() || b.hi.y() < lo.y());
  }
  Box2 inflated(double r) const { return {lo - Vec2(r, r), hi + Vec2(r, r)}; }
  Vec2 center() const { return 0.5 * (lo + hi); }
  Vec2 size() const { return hi - lo; }
  double area() const { return (hi - lo).prod(); }
  bool empty() const { return !(hi.x() > lo.x() && hi.y() > lo.y()); }
};

inline Box2 intersect(const Box2& a, const Box2& b) {
  return {a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)};
}

inline double linf(const Vec2& z) { return z.cwiseAbs().maxCoeff(); }

// L-infinity distance from a point to a box (0 inside)
inline double linf_dist(const Vec2& z, const Box2& b) {
  double dx = std::max({b.lo.x() - z.x(), 0.0, z.x() - b.hi.x()});
  double dy = std::max({b.lo.y() - z.y(), 0.0, z.y() - b.hi.y()});
  return std::max(dx, dy);
}

inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace conreg
