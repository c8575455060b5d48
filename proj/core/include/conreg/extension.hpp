#pragma once

#include <conreg/input_map.hpp>
#include <conreg/maps.hpp>
#include <conreg/moser.hpp>
#include <conreg/sweep.hpp>

#include <functional>
#include <memory>
#include <vector>

namespace conreg {

// the input map itself as a chain element (frozen cells)
class InputPrim : public Primitive {
 public:
  explicit InputPrim(InputMapPtr f) : f_(std::move(f)) {}
  std::string kind() const override { return "input"; }
  Vec2 eval(const Vec2& z) const override { return f_->eval(z); }
  Jet jet(const Vec2& z) const override { return f_->jet(z); }
  std::string describe() const override;
  const InputMap& map() const { return *f_; }

 private:
  InputMapPtr f_;
};

// smooth weight equal to 1 on a region and 0 away from it
struct Cutoff {
  enum class Kind {
    plateau,  // 1 on the box `box` shrunk to half-width r0 around its center, 0 beyond r1
    frame,    // 1 within depth r0 of the boundary of `box`, 0 at depth >= r1
  };
  Kind kind = Kind::plateau;
  Box2 box;
  double r0 = 0.0, r1 = 0.0;

  static Cutoff around(const Vec2& c, double r0, double r1) {
    return {Kind::plateau, Box2::centered(c, r1), r0, r1};
  }
  static Cutoff frame(const Box2& b, double r0, double r1) { return {Kind::frame, b, r0, r1}; }
  double value(const Vec2& z, Vec2* grad = nullptr) const;
  // where the weight is not identically 0
  Box2 support() const;
  double width() const { return r1 - r0; }
};

// z -> H(z) + sum_k chi_k(z) (G_k(z) - H(z)); returns G_k unchanged where chi_k = 1
class BlendPrim : public Primitive {
 public:
  struct Piece {
    Cutoff chi;
    SmoothMap germ;
  };
  BlendPrim(std::shared_ptr<const AffinePrim> reference, std::vector<Piece> pieces)
      : H_(std::move(reference)), pieces_(std::move(pieces)) {}
  std::string kind() const override { return "blend"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  std::string describe() const override;
  const std::vector<Piece>& pieces() const { return pieces_; }
  const AffinePrim& reference() const { return *H_; }

 private:
  std::shared_ptr<const AffinePrim> H_;
  std::vector<Piece> pieces_;
};

// picks one chain per point; `fallback` where no piece claims the point
class GluePrim : public Primitive {
 public:
  using Locate = std::function<int(const Vec2&)>;
  GluePrim(Locate locate, std::vector<SmoothMap> pieces, PrimitivePtr fallback, std::string label = "glue")
      : locate_(std::move(locate)), pieces_(std::move(pieces)), fallback_(std::move(fallback)),
        label_(std::move(label)) {}
  std::string kind() const override { return "glue"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  std::string describe() const override;
  int owner(const Vec2& z) const { return locate_(z); }
  const std::vector<SmoothMap>& pieces() const { return pieces_; }

 private:
  Locate locate_;
  std::vector<SmoothMap> pieces_;
  PrimitivePtr fallback_;
  std::string label_;
};

// a bounded region where the determinant defect is removed: an annulus outer \ inner,
// or the box `outer` when inner is empty
struct Hole {
  Box2 outer;
  Box2 inner;
  bool annular() const { return !inner.empty(); }
  bool contains(const Vec2& z) const { return outer.contains(z) && !(annular() && inner.contains_open(z)); }
};

struct ExtensionProblem {
  std::vector<BlendPrim::Piece> germs;  // germ k is kept where its cutoff is 1
  std::vector<Hole> holes;
  double min_blend = 0.0;  // smallest admissible cutoff transition width
  double tol_hole = 1e-4;  // admissible |mean of det - 1| per hole
};

// H blended into the germs; throws blend_width_exceeded when a transition is thinner than min_blend
// or cutoffs of different germs overlap
SmoothMap smooth_extend(const ExtensionProblem& pb, std::shared_ptr<const AffinePrim> reference);

struct CorrectionOptions {
  double h = 0.0;          // sweep lattice spacing; default: hole width / 48
  int steps = 4;           // Moser steps
  double margin = 0.5;     // positivity margin for det
  int positivity_grid = 24;
  int check_grid = 0;      // >0: measure |det - 1| on this grid per hole
};

struct HoleReport {
  double mass = 0.0;  // integral of det - 1 over the hole
  double dropped = 0.0;
  double det_residual = -1.0;
  size_t bytes = 0;
  bool trivial = false;  // det - 1 vanished at every node
};

// f o psi_1^-1 o ... o psi_m^-1 with det D psi_i = det Df on hole i and psi_i = id off it
SmoothMap correct_volume(const SmoothMap& f, const ExtensionProblem& pb, const CorrectionOptions& opt = {},
                         std::vector<HoleReport>* reports = nullptr);

}  // namespace conreg
