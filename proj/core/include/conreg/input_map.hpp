#pragma once

#include <conreg/maps.hpp>
#include <conreg/types.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace conreg {

// the map being regularized: C1, volume preserving within tau_in
class InputMap : public MapLike {
 public:
  virtual std::string name() const = 0;
  virtual bool has_inverse() const { return false; }
  virtual Vec2 inverse_eval(const Vec2& w) const;
  // upper bound for |Df(z) - Df(z')|_max when |z - z'|_inf <= r
  virtual double modulus(double r) const = 0;
  // true where the map is known to be C-infinity
  virtual bool smooth_at(const Vec2&) const { return false; }
  virtual std::string describe() const = 0;
};

using InputMapPtr = std::shared_ptr<const InputMap>;

// Newton inverse seeded by the local affine map at `seed`; throws fairness_unavailable on divergence
Vec2 newton_inverse(const MapLike& f, const Vec2& w, const Vec2& seed, int max_iter = 50,
                    double tol = 1e-14);

class AffineMap : public InputMap {
 public:
  AffineMap(const Mat2& A, const Vec2& c) : A_(A), c_(c), Ainv_(A.inverse()) {}
  std::string name() const override { return "affine"; }
  Vec2 eval(const Vec2& z) const override { return A_ * z + c_; }
  Jet jet(const Vec2& z) const override { return {A_ * z + c_, A_}; }
  bool has_inverse() const override { return true; }
  Vec2 inverse_eval(const Vec2& w) const override { return Ainv_ * (w - c_); }
  double modulus(double) const override { return 0.0; }
  bool smooth_at(const Vec2&) const override { return true; }
  std::string describe() const override;
  const Mat2& A() const { return A_; }
  const Vec2& c() const { return c_; }

 private:
  Mat2 A_;
  Vec2 c_;
  Mat2 Ainv_;
};

// (x, y) -> (x + amp * chi(y) * G(y), y) with G' = sum_{j<=J} a^j cos(b^j pi y);
// chi is a C-infinity cutoff vanishing on y <= band_lo, equal to 1 on y >= band_hi
class C1ShearMap : public InputMap {
 public:
  struct Params {
    double amp = 1e-7;
    double a = 0.8;
    double b = 7.0;
    int J = 12;
    double band_lo = 0.2;
    double band_hi = 0.3;
  };
  explicit C1ShearMap(const Params& p);
  std::string name() const override { return "c1_shear"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  bool has_inverse() const override { return true; }
  Vec2 inverse_eval(const Vec2& w) const override;
  double modulus(double r) const override;
  bool smooth_at(const Vec2& z) const override { return z.y() < p_.band_lo; }
  std::string describe() const override;

  // G and G' without the amplitude and cutoff
  double G(double y) const;
  double Gp(double y) const;
  const Params& params() const { return p_; }

 private:
  // horizontal displacement and its derivative in y
  void disp(double y, double& u, double& du) const;
  Params p_;
  std::vector<double> aj_, bj_;
};

// rotation about c by angle amp * w(|z-c|/radius), w a C-infinity bump (w(0)=1, w(r>=1)=0)
class TwistMap : public InputMap {
 public:
  struct Params {
    Vec2 c = Vec2(0.5, 0.5);
    double radius = 0.4;
    double amp = 0.1;
  };
  explicit TwistMap(const Params& p) : p_(p) {}
  std::string name() const override { return "twist"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  bool has_inverse() const override { return true; }
  Vec2 inverse_eval(const Vec2& w) const override;
  double modulus(double r) const override;
  bool smooth_at(const Vec2&) const override { return true; }
  std::string describe() const override;

 private:
  // angle and its radial derivative
  void angle(double r, double& a, double& da) const;
  Params p_;
};

// composition: parts applied in order
class CompositeMap : public InputMap {
 public:
  explicit CompositeMap(std::vector<InputMapPtr> parts) : parts_(std::move(parts)) {}
  std::string name() const override { return "composite"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  bool has_inverse() const override;
  Vec2 inverse_eval(const Vec2& w) const override;
  double modulus(double r) const override;
  bool smooth_at(const Vec2& z) const override;
  std::string describe() const override;

 private:
  std::vector<InputMapPtr> parts_;
};

// map given by samples on a grid, C1 through bicubic Hermite interpolation of the displacement
class SampledMap : public InputMap {
 public:
  SampledMap(const Box2& box, int nx, int ny, std::vector<Vec2> values);
  static std::shared_ptr<SampledMap> from_csv(const std::string& path);
  std::string name() const override { return "sampled"; }
  Vec2 eval(const Vec2& z) const override { return jet(z).v; }
  Jet jet(const Vec2& z) const override;
  bool has_inverse() const override { return false; }
  double modulus(double r) const override;
  std::string describe() const override;
  const Box2& box() const { return box_; }

 private:
  Vec2 disp(int i, int j) const;
  Box2 box_;
  int nx_, ny_;
  double hx_, hy_;
  std::vector<Vec2> vals_;
  double lip_ = 0.0;  // max second difference quotient, for the modulus
};

// parse {"kind":..., "params":{...}}; throws input_error
InputMapPtr map_from_json(const std::string& json_text);

// max |det Df - 1| over n low-discrepancy points of box
double det_defect(const MapLike& f, const Box2& box, int n);

}  // namespace conreg
