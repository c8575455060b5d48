#pragma once

#include <conreg/divergence.hpp>
#include <conreg/fields.hpp>
#include <conreg/maps.hpp>

#include <atomic>
#include <memory>

namespace conreg {

struct MoserProblem {
  std::shared_ptr<const FlowField> v;  // carries phi = div v alongside v
  double margin = 0.05;                // required lower bound for 1 + phi
  int steps = 200;
  double tol_det = 1e-4;
  int check_grid = 32;  // 0 disables the determinant check
  bool retry = true;    // one step-doubling retry when the check fails
};

// time-1 map of dz/dt = v(z) / (1 + (1 - t) phi(z)) with the Jacobian carried along;
// the identity wherever the orbit never meets the support of v
class MoserFlowMap : public Primitive {
 public:
  MoserFlowMap(std::shared_ptr<const FlowField> v, int steps, double margin, bool backward = false);
  std::string kind() const override { return "moser"; }
  Vec2 eval(const Vec2& z) const override;
  Jet jet(const Vec2& z) const override;
  PrimitivePtr inverse() const override;
  bool local() const override { return true; }
  Box2 support() const override { return v_->support(); }
  std::string describe() const override;

  int steps() const { return steps_; }
  long clamp_events() const { return clamps_->load(); }
  const FlowField& field() const { return *v_; }

 private:
  Jet integrate(const Vec2& z, bool with_jacobian) const;

  std::shared_ptr<const FlowField> v_;
  int steps_;
  double margin_;
  bool backward_;
  std::shared_ptr<std::atomic<long>> clamps_;
};

struct MoserReport {
  int steps = 0;
  double det_residual = 0.0;
  long clamp_events = 0;
};

// checks positivity, integrates, verifies det D psi = 1 + phi on a grid
SmoothMap moser_map(const MoserProblem& problem, MoserReport* report = nullptr);

struct PrescribedOptions {
  DivOptions div;
  MoserProblem flow;     // flow.v is filled in
  double grid_h = 0.0;   // resampling step of v, default B2 width / 192
};

// psi with det D psi = g, psi = id outside B2
SmoothMap prescribed_jacobian(std::shared_ptr<const ScalarField> g, const SupportPair& geom,
                              const PrescribedOptions& opt = {}, MoserReport* report = nullptr);

// max |det D psi - (1 + phi)| over an n x n cell-centred grid of `box`, phi taken from the field
double det_residual(const MapLike& psi, const FlowField& v, const Box2& box, int n);

}  // namespace conreg
