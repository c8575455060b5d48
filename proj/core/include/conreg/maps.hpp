#pragma once

#include <conreg/types.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace conreg {

class MapLike {
 public:
  virtual ~MapLike() = default;
  virtual Vec2 eval(const Vec2& z) const = 0;
  virtual Jet jet(const Vec2& z) const = 0;
};

// wraps a callable; jacobian by central differences unless one is given
class FunctionMap : public MapLike {
 public:
  using Fn = std::function<Vec2(const Vec2&)>;
  using JFn = std::function<Mat2(const Vec2&)>;
  explicit FunctionMap(Fn f, JFn j = nullptr, double fd_step = 1e-6)
      : f_(std::move(f)), j_(std::move(j)), h_(fd_step) {}
  Vec2 eval(const Vec2& z) const override { return f_(z); }
  Jet jet(const Vec2& z) const override;

 private:
  Fn f_;
  JFn j_;
  double h_;
};

class Primitive;
using PrimitivePtr = std::shared_ptr<const Primitive>;

class Primitive {
 public:
  virtual ~Primitive() = default;
  virtual std::string kind() const = 0;
  virtual Vec2 eval(const Vec2& z) const = 0;
  virtual Jet jet(const Vec2& z) const = 0;
  // throws not_invertible by default
  virtual PrimitivePtr inverse() const;
  // compact set outside which the primitive is the identity; nullptr-like empty box if global
  virtual bool local() const { return false; }
  virtual Box2 support() const { return {}; }
  // one-line JSON object describing the primitive
  virtual std::string describe() const = 0;
};

// composition chain, primitives applied in order (first element first)
class SmoothMap : public MapLike {
 public:
  SmoothMap() = default;
  explicit SmoothMap(std::vector<PrimitivePtr> chain) : chain_(std::move(chain)) {}

  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;

  SmoothMap then(const PrimitivePtr& p) const;
  SmoothMap then(const SmoothMap& m) const;
  const std::vector<PrimitivePtr>& chain() const { return chain_; }
  bool empty() const { return chain_.empty(); }

  // JSON list of primitives
  std::string dump() const;

 private:
  std::vector<PrimitivePtr> chain_;
};

SmoothMap invert(const SmoothMap& m);

class AffinePrim : public Primitive {
 public:
  AffinePrim(const Mat2& A, const Vec2& c) : A_(A), c_(c) {}
  std::string kind() const override { return "affine"; }
  Vec2 eval(const Vec2& z) const override { return A_ * z + c_; }
  Jet jet(const Vec2& z) const override { return {A_ * z + c_, A_}; }
  PrimitivePtr inverse() const override;
  std::string describe() const override;
  const Mat2& A() const { return A_; }
  const Vec2& c() const { return c_; }

 private:
  Mat2 A_;
  Vec2 c_;
};

// shear along a channel of a unit-ball cluster, conjugated to physical units:
// z -> z + scale * t * phi((z - center)/scale) * (p - p')
// phi depends only on the coordinate transverse to p' - p
class ShearPrim : public Primitive {
 public:
  struct Geometry {
    Vec2 center = Vec2::Zero();  // cluster origin in physical units
    double scale = 1.0;          // physical length of one cluster unit
    Vec2 p = Vec2::Zero();       // ball centers in cluster units, adjacent
    Vec2 pp = Vec2::Zero();
    double delta = 0.08;
  };
  ShearPrim(const Geometry& g, double t);
  std::string kind() const override { return "shear"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  PrimitivePtr inverse() const override;
  bool local() const override { return false; }
  std::string describe() const override;

  // channel profile in cluster units and its gradient
  double profile(const Vec2& w, Vec2* grad = nullptr) const;
  const Geometry& geometry() const { return g_; }
  double amplitude() const { return t_; }
  int axis() const { return axis_; }
  // physical band (along the transverse coordinate) where the shear moves points
  std::pair<double, double> band() const;

 private:
  Geometry g_;
  double t_;
  int axis_;     // shear direction index
  double q_;     // channel center, transverse coordinate, cluster units
  double half_;  // channel half width, cluster units
  Vec2 dir_;     // p - p'
};

}  // namespace conreg
