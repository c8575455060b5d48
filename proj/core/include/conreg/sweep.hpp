#pragma once

#include <conreg/fields.hpp>

#include <functional>
#include <memory>
#include <vector>

namespace conreg {

// nodes origin + (i hx, j hy), 0 <= i <= nx, 0 <= j <= ny; cubic B-spline basis per node
struct Lattice {
  Vec2 origin = Vec2::Zero();
  double hx = 1.0, hy = 1.0;
  int nx = 0, ny = 0;

  // spans `box` with spacing at most h
  static Lattice covering(const Box2& box, double h);
  Vec2 node(int i, int j) const { return origin + Vec2(i * hx, j * hy); }
  int stride() const { return nx + 1; }
  size_t size() const { return size_t(nx + 1) * (ny + 1); }
  size_t idx(int i, int j) const { return size_t(j) * stride() + i; }
};

// cubic coefficients of phi on the lattice by the tensor quasi-interpolant (exact on cubics)
std::vector<double> quasi_interpolate(const Lattice& L, const std::function<double(const Vec2&)>& phi);

// index rectangle of coefficient nodes; long_x: transport along x after the sweep across y
struct Strip {
  int i0, i1, j0, j1;
  bool long_x;
};

// v with div v equal to the spline sum_{nodes in s} c_ij B(.-node); requires sum c = 0 over s.
// v vanishes outside the closed box spanned by the node supports of s.
std::shared_ptr<SplineFlow<float>> sweep_strip(const Lattice& L, const std::vector<double>& c, const Strip& s);

// the box of the strip's basis supports
Box2 strip_box(const Lattice& L, const Strip& s);

struct SweepReport {
  int nodes = 0;              // coefficient nodes carrying density
  double mass = 0.0;          // integral of the interpolated density before the mean fix
  double dropped = 0.0;       // max |coefficient| on nodes whose support leaves the domain
  double mean_fix = 0.0;      // max density change from the mean fix
  size_t bytes = 0;
  double peak = 0.0;           // max |coefficient| of the interpolated density
};

// div v = phi on outer minus the open inner box, v = 0 off that closed annulus; four strips
// with mass handed around the corners
class AnnulusFlow : public FlowField {
 public:
  AnnulusFlow(std::vector<std::shared_ptr<SplineFlow<float>>> parts, Box2 outer, Box2 inner);
  bool sample(const Vec2& z, FlowSample& out) const override;
  Box2 support() const override { return outer_; }
  bool inert(const Vec2& z) const override { return inner_.contains_open(z); }
  size_t bytes() const override;
  const Box2& inner() const { return inner_; }

 private:
  std::vector<std::shared_ptr<SplineFlow<float>>> parts_;
  Box2 outer_, inner_;
};

std::shared_ptr<AnnulusFlow> solve_annulus(const std::function<double(const Vec2&)>& phi, const Box2& outer,
                                           const Box2& inner, double h, SweepReport* report = nullptr);

// same on a box: one strip, transport along the longer side
std::shared_ptr<SplineFlow<float>> solve_box(const std::function<double(const Vec2&)>& phi, const Box2& box, double h,
                                             SweepReport* report = nullptr);

}  // namespace conreg
