#pragma once

#include <conreg/fields.hpp>
#include <conreg/types.hpp>

#include <functional>
#include <memory>

namespace conreg {

// a box or a Euclidean ball in the plane
struct Region {
  enum class Kind { box, ball };
  Kind kind = Kind::box;
  Vec2 c = Vec2::Zero();
  Vec2 half = Vec2::Ones();  // half extents; a ball uses half.x() as radius

  static Region box(const Box2& b) { return {Kind::box, b.center(), 0.5 * b.size()}; }
  static Region ball(const Vec2& c, double r) { return {Kind::ball, c, Vec2(r, r)}; }
  bool contains(const Vec2& z) const;
  Box2 bbox() const { return {c - half, c + half}; }
  double volume() const;
  // largest m with the closed m-neighbourhood of `inner` inside this region (negative when it sticks out)
  double margin_around(const Region& inner) const;
};

// B1 carries the density, B2 the solution; B2 is star-shaped with respect to the ball (star_c, star_r)
struct SupportPair {
  Region B1, B2;
  Vec2 star_c = Vec2::Zero();
  double star_r = 0.25;
  double min_margin = 0.0;

  // the ball witness is the largest centred ball of B1 shrunk by a quarter
  static SupportPair nested(const Region& b1, const Region& b2, double min_margin = 0.0);
  // throws invalid_geometry
  void validate() const;
};

struct DivOptions {
  int nodes = 64;    // Gauss nodes along each ray through supp(phi)
  int angles = 128;  // directions of the trapezoidal rule on the circle
  double tol = 1e-3;
  double tol_integral = 1e-4;
  int check_grid = 40;  // per-axis points of the residual self-check, 0 disables it
};

// v(x) = int phi(y) K(x, y) dy with the kernel built from a bump centred at the star ball;
// evaluated by ray quadrature in polar coordinates around x
class BogovskiiField : public FlowField {
 public:
  BogovskiiField(std::shared_ptr<const ScalarField> phi, SupportPair geom, int nodes, int angles);

  Vec2 value(const Vec2& z) const;
  // 4th-order central differences of the quadrature
  Mat2 jacobian(const Vec2& z) const;
  bool sample(const Vec2& z, FlowSample& out) const override;
  Box2 support() const override { return geom_.B2.bbox(); }
  // box around supp(phi) and the star ball, outside which v vanishes
  Box2 hull() const;

  const SupportPair& geometry() const { return geom_; }
  const ScalarField& density() const { return *phi_; }
  int nodes() const { return nodes_; }
  int angles() const { return angles_; }
  double achieved_residual() const { return residual_; }
  void set_residual(double r) { residual_ = r; }

 private:
  double omega(const Vec2& y) const;

  std::shared_ptr<const ScalarField> phi_;
  SupportPair geom_;
  int nodes_, angles_;
  double wnorm_ = 1.0;
  double fd_h_ = 1e-3;
  double residual_ = -1.0;
  std::vector<double> gx_, gw_;  // rays through supp(phi)
  std::vector<double> bx_, bw_;  // chords of the star ball
  std::vector<Vec2> dirs_;
};

// tensor Gauss integral of f over a box, `n` nodes per axis
double integrate(const ScalarField& f, const Box2& box, int n = 64);

// 4th-order central-difference divergence
double fd_divergence(const std::function<Vec2(const Vec2&)>& v, const Vec2& z, double h);

// max |div v - phi| / max |phi| with v tabulated on an (n+1)^2 grid of `box` and 6th-order differences
double divergence_residual(const BogovskiiField& v, const Box2& box, int n);

std::shared_ptr<BogovskiiField> solve_divergence(std::shared_ptr<const ScalarField> phi, const SupportPair& geom,
                                                 const DivOptions& opt = {});

// tabulate on a node grid of spacing about h over the hull and interpolate with C2 splines
std::shared_ptr<GridFlow> resample_flow(const BogovskiiField& v, double h);

}  // namespace conreg
