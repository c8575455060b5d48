#include <conreg/moser.hpp>

#include <cstdio>

namespace conreg {

MoserFlowMap::MoserFlowMap(std::shared_ptr<const FlowField> v, int steps, double margin, bool backward)
    : v_(std::move(v)), steps_(steps), margin_(margin), backward_(backward),
      clamps_(std::make_shared<std::atomic<long>>(0)) {
  if (!v_) throw Error(ErrorCode::invalid_parameter, "null field");
  if (steps_ < 1) throw Error(ErrorCode::invalid_parameter, "steps");
  if (!(margin_ > 0.0 && margin_ < 1.0)) throw Error(ErrorCode::invalid_parameter, "positivity margin");
}

Jet MoserFlowMap::integrate(const Vec2& z0, bool with_jacobian) const {
  Jet o;
  o.v = z0;
  if (!v_->support().contains(z0) || v_->inert(z0)) return o;
  FlowSample s;
  auto rhs = [&](double t, const Vec2& z, Vec2& u, Mat2& Du) {
    if (!v_->sample(z, s)) {
      u.setZero();
      Du.setZero();
      return;
    }
    double phi = s.phi;
    Vec2 dphi = s.dphi;
    if (1.0 + phi < margin_) {
      phi = margin_ - 1.0;
      dphi.setZero();
      clamps_->fetch_add(1, std::memory_order_relaxed);
    }
    double d = 1.0 + (1.0 - t) * phi;
    u = s.v / d;
    if (with_jacobian) Du = s.Dv / d - (1.0 - t) / (d * d) * s.v * dphi.transpose();
  };
  double dt = (backward_ ? -1.0 : 1.0) / steps_;
  Vec2 z = z0;
  Mat2 J = Mat2::Identity();
  Vec2 u1, u2, u3, u4;
  Mat2 D1, D2, D3, D4;
  for (int k = 0; k < steps_; ++k) {
    double t = backward_ ? 1.0 - double(k) / steps_ : double(k) / steps_;
    rhs(t, z, u1, D1);
    rhs(t + 0.5 * dt, z + 0.5 * dt * u1, u2, D2);
    rhs(t + 0.5 * dt, z + 0.5 * dt * u2, u3, D3);
    rhs(t + dt, z + dt * u3, u4, D4);
    z += dt / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4);
    if (with_jacobian) {
      // variational equation dJ/dt = Du(z(t)) J along the same stages
      Mat2 K1 = D1 * J;
      Mat2 K2 = D2 * (J + 0.5 * dt * K1);
      Mat2 K3 = D3 * (J + 0.5 * dt * K2);
      Mat2 K4 = D4 * (J + dt * K3);
      J += dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
    }
  }
  o.v = z;
  o.J = J;
  return o;
}

Vec2 MoserFlowMap::eval(const Vec2& z) const { return integrate(z, false).v; }

Jet MoserFlowMap::jet(const Vec2& z) const { return integrate(z, true); }

PrimitivePtr MoserFlowMap::inverse() const {
  return std::make_shared<MoserFlowMap>(v_, steps_, margin_, !backward_);
}

std::string MoserFlowMap::describe() const {
  Box2 b = v_->support();
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"kind\":\"moser\",\"steps\":%d,\"backward\":%s,\"support\":[%.17g,%.17g,%.17g,%.17g]}", steps_,
                backward_ ? "true" : "false", b.lo.x(), b.lo.y(), b.hi.x(), b.hi.y());
  return buf;
}

double det_residual(const MapLike& psi, const FlowField& v, const Box2& box, int n) {
  double err = 0.0;
  FlowSample s;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec2 z = box.lo + Vec2((i + 0.5) * box.size().x() / n, (j + 0.5) * box.size().y() / n);
      double target = v.sample(z, s) ? 1.0 + s.phi : 1.0;
      err = std::max(err, std::abs(psi.jet(z).J.determinant() - target));
    }
  return err;
}

SmoothMap moser_map(const MoserProblem& pb, MoserReport* report) {
  if (!pb.v) throw Error(ErrorCode::invalid_parameter, "null field");
  Box2 b = pb.v->support();
  FlowSample s;
  double lo = 1.0;
  int n = 96;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      if (pb.v->sample(b.lo + Vec2(i * b.size().x() / n, j * b.size().y() / n), s)) lo = std::min(lo, 1.0 + s.phi);
  if (!(lo > 0.0)) throw Error(ErrorCode::degenerate_density, "min(1+phi) = " + std::to_string(lo));
  if (lo < pb.margin) throw Error(ErrorCode::degenerate_density, "1+phi below the positivity margin");

  int steps = pb.steps;
  for (int attempt = 0;; ++attempt) {
    auto m = std::make_shared<MoserFlowMap>(pb.v, steps, pb.margin);
    SmoothMap psi({m});
    double r = pb.check_grid > 0 ? det_residual(psi, *pb.v, b, pb.check_grid) : 0.0;
    if (r <= pb.tol_det || pb.check_grid <= 0) {
      if (report) *report = {steps, r, m->clamp_events()};
      return psi;
    }
    if (!pb.retry || attempt >= 1) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "det residual %.3e above %.3e at %d steps", r, pb.tol_det, steps);
      throw Error(ErrorCode::nonconvergent, buf);
    }
    steps *= 2;
  }
}

namespace {

class ShiftedScalar : public ScalarField {
 public:
  explicit ShiftedScalar(std::shared_ptr<const ScalarField> g) : g_(std::move(g)) {}
  double value(const Vec2& z) const override { return g_->support().contains(z) ? g_->value(z) - 1.0 : 0.0; }
  Vec2 gradient(const Vec2& z) const override { return g_->gradient(z); }
  Box2 support() const override { return g_->support(); }

 private:
  std::shared_ptr<const ScalarField> g_;
};

}  // namespace

SmoothMap prescribed_jacobian(std::shared_ptr<const ScalarField> g, const SupportPair& geom,
                              const PrescribedOptions& opt, MoserReport* report) {
  if (!g) throw Error(ErrorCode::invalid_parameter, "null density");
  Box2 S = g->support();
  double lo = 1.0;
  for (int j = 0; j < 96; ++j)
    for (int i = 0; i < 96; ++i)
      lo = std::min(lo, g->value(S.lo + Vec2((i + 0.5) * S.size().x() / 96, (j + 0.5) * S.size().y() / 96)));
  if (!(lo > 0.0)) throw Error(ErrorCode::degenerate_density, "min g = " + std::to_string(lo));
  auto phi = std::make_shared<ShiftedScalar>(g);
  auto v = solve_divergence(phi, geom, opt.div);
  double h = opt.grid_h > 0 ? opt.grid_h : geom.B2.bbox().size().maxCoeff() / 192.0;
  MoserProblem pb = opt.flow;
  pb.v = resample_flow(*v, h);
  return moser_map(pb, report);
}

}  // namespace conreg
