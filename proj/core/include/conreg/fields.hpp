#pragma once

#include <conreg/spline.hpp>
#include <conreg/types.hpp>

#include <functional>
#include <memory>
#include <vector>

namespace conreg {

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual double value(const Vec2& z) const = 0;
  virtual Vec2 gradient(const Vec2& z) const = 0;
  virtual Box2 support() const = 0;
};

class ClosedFormScalar : public ScalarField {
 public:
  using Fn = std::function<double(const Vec2&)>;
  using GFn = std::function<Vec2(const Vec2&)>;
  ClosedFormScalar(Fn f, GFn g, Box2 support) : f_(std::move(f)), g_(std::move(g)), s_(support) {}
  double value(const Vec2& z) const override { return s_.contains(z) ? f_(z) : 0.0; }
  Vec2 gradient(const Vec2& z) const override { return s_.contains(z) ? g_(z) : Vec2::Zero(); }
  Box2 support() const override { return s_; }

 private:
  Fn f_;
  GFn g_;
  Box2 s_;
};

// samples on a uniform node grid with a C2 cubic spline interpolant
class GridScalar : public ScalarField {
 public:
  // nodes x0 + i*h; values row-major (j outer)
  GridScalar(const Vec2& origin, double h, int nx, int ny, const std::vector<double>& values);
  double value(const Vec2& z) const override;
  Vec2 gradient(const Vec2& z) const override;
  Box2 support() const override;
  double node(int i, int j) const { return vals_[size_t(j) * nx_ + i]; }

 private:
  Vec2 o_;
  double h_;
  int nx_, ny_;
  std::vector<double> vals_;
  TensorSpline<double> s_;
};

// what the flow integrator needs from a velocity field at one point
struct FlowSample {
  Vec2 v = Vec2::Zero();
  Mat2 Dv = Mat2::Zero();
  double phi = 0.0;  // density perturbation paired with v (div v = phi)
  Vec2 dphi = Vec2::Zero();
};

class FlowField {
 public:
  virtual ~FlowField() = default;
  // returns false when z is outside the support (v, phi vanish)
  virtual bool sample(const Vec2& z, FlowSample& out) const = 0;
  virtual Box2 support() const = 0;
  virtual size_t bytes() const { return 0; }
  // true where v vanishes on a neighbourhood, so orbits starting there stay put
  virtual bool inert(const Vec2&) const { return false; }
};

// v given in closed form together with the density it solves for
class ClosedFormFlow : public FlowField {
 public:
  using Fn = std::function<FlowSample(const Vec2&)>;
  ClosedFormFlow(Fn f, Box2 support) : f_(std::move(f)), s_(support) {}
  bool sample(const Vec2& z, FlowSample& out) const override {
    if (!s_.contains(z)) return false;
    out = f_(z);
    return true;
  }
  Box2 support() const override { return s_; }

 private:
  Fn f_;
  Box2 s_;
};

// vector field (v1, v2) as two tensor splines; density is div v, exact for the spline
template <class T>
class SplineFlow : public FlowField {
 public:
  SplineFlow(TensorSpline<T> v1, TensorSpline<T> v2, Box2 support)
      : v1_(std::move(v1)), v2_(std::move(v2)), s_(support) {}
  bool sample(const Vec2& z, FlowSample& out) const override {
    if (!s_.contains(z)) return false;
    SplineD2 a = v1_.eval(z.x(), z.y(), 2);
    SplineD2 b = v2_.eval(z.x(), z.y(), 2);
    out.v = Vec2(a.f, b.f);
    out.Dv << a.fx, a.fy, b.fx, b.fy;
    out.phi = a.fx + b.fy;
    out.dphi = Vec2(a.fxx + b.fxy, a.fxy + b.fyy);
    return true;
  }
  Box2 support() const override { return s_; }
  size_t bytes() const override { return (v1_.c.size() + v2_.c.size()) * sizeof(T); }
  const TensorSpline<T>& v1() const { return v1_; }
  const TensorSpline<T>& v2() const { return v2_; }

 private:
  TensorSpline<T> v1_, v2_;
  Box2 s_;
};

// sum of fields with (possibly overlapping) supports
class SumFlow : public FlowField {
 public:
  explicit SumFlow(std::vector<std::shared_ptr<const FlowField>> parts);
  bool sample(const Vec2& z, FlowSample& out) const override;
  Box2 support() const override { return s_; }
  size_t bytes() const override;
  const std::vector<std::shared_ptr<const FlowField>>& parts() const { return parts_; }

 private:
  std::vector<std::shared_ptr<const FlowField>> parts_;
  Box2 s_;
};

// field sampled at grid nodes and interpolated by cubic splines (C2);
// density is taken as div of the interpolant
class GridFlow : public FlowField {
 public:
  GridFlow(const Vec2& origin, double h, int nx, int ny, const std::vector<Vec2>& values, Box2 support);
  bool sample(const Vec2& z, FlowSample& out) const override;
  Box2 support() const override { return s_; }
  size_t bytes() const override { return (a_.c.size() + b_.c.size()) * sizeof(double); }

 private:
  TensorSpline<double> a_, b_;
  Box2 s_;
};

// cubic spline coefficients for node values via the quasi-interpolant; out-of-grid neighbors read as 0
TensorSpline<double> cubic_from_nodes(const Vec2& origin, double h, int nx, int ny,
                                      const std::vector<double>& values);

}  // namespace conreg
