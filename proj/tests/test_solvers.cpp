#include "oracles.hpp"

#include <conreg/divergence.hpp>
#include <conreg/extension.hpp>
#include <conreg/moser.hpp>
#include <conreg/smooth.hpp>
#include <conreg/sweep.hpp>

#include <doctest.h>

using namespace conreg;

namespace {

double bump(const Vec2& z, double R) {
  double s = z.squaredNorm() / (R * R);
  return s < 1 ? std::exp(-1 / (1 - s)) : 0.0;
}

// z + eps b(x) b(y) e_x with a compact plateau bump b
struct Push : Primitive {
  double eps, r;
  Vec2 c;
  Push(double e, Vec2 c_, double r_) : eps(e), r(r_), c(c_) {}
  std::string kind() const override { return "push"; }
  Vec2 eval(const Vec2& z) const override { return jet(z).v; }
  Jet jet(const Vec2& z) const override {
    D1 px = plateau(z.x() - c.x(), 0.0, r), py = plateau(z.y() - c.y(), 0.0, r);
    Jet o;
    o.v = z + Vec2(eps * px.f * py.f, 0);
    o.J << 1 + eps * px.df * py.f, eps * px.f * py.df, 0, 1;
    return o;
  }
  std::string describe() const override { return "{}"; }
};

}  // namespace

TEST_CASE("gauss integration is exact on polynomials") {
  ClosedFormScalar p([](const Vec2& z) { return z.x() * z.x() * z.y() + 3 * z.y() * z.y() * z.y(); },
                     [](const Vec2&) { return Vec2(0, 0); }, Box2{Vec2(0, 0), Vec2(2, 1)});
  // int_0^2 int_0^1 x^2 y + 3 y^3 dy dx = 8/3 * 1/2 + 2 * 3/4
  CHECK(integrate(p, Box2{Vec2(0, 0), Vec2(2, 1)}, 8) == doctest::Approx(4.0 / 3 + 1.5).epsilon(1e-14));
}

TEST_CASE("difference divergence of a linear field") {
  auto v = [](const Vec2& z) { return Vec2(3 * z.x() - z.y(), 2 * z.x() + 0.5 * z.y()); };
  CHECK(fd_divergence(v, Vec2(0.3, -2), 1e-3) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("nonzero mean density is rejected") {
  auto phi = std::make_shared<ClosedFormScalar>([](const Vec2& z) { return bump(z, 0.3); },
                                                [](const Vec2&) { return Vec2(0, 0); },
                                                Box2{Vec2(-0.5, -0.5), Vec2(0.5, 0.5)});
  auto geom = SupportPair::nested(Region::box({Vec2(-0.5, -0.5), Vec2(0.5, 0.5)}), Region::box({Vec2(-1, -1), Vec2(1, 1)}));
  CHECK_THROWS_AS(solve_divergence(phi, geom), Error);
}

TEST_CASE("support pair must nest") {
  auto geom = SupportPair::nested(Region::box({Vec2(-1, -1), Vec2(1, 1)}), Region::box({Vec2(-0.5, -0.5), Vec2(0.5, 0.5)}));
  CHECK_THROWS_AS(geom.validate(), Error);
}

TEST_CASE("dipole field vanishes far away and solves the equation") {
  Vec2 q(0.15, 0.0);
  auto f = [q](const Vec2& z) { return bump(z - q, 0.2) - bump(z + q, 0.2); };
  auto phi = std::make_shared<ClosedFormScalar>(f, [](const Vec2&) { return Vec2(0, 0); },
                                                Box2{Vec2(-0.5, -0.5), Vec2(0.5, 0.5)});
  auto geom = SupportPair::nested(Region::box({Vec2(-0.5, -0.5), Vec2(0.5, 0.5)}), Region::box({Vec2(-1, -1), Vec2(1, 1)}));
  auto v = solve_divergence(phi, geom);
  CHECK(v->value(Vec2(0.99, 0.99)).norm() == 0.0);
  CHECK(v->value(Vec2(-1.5, 0.2)).norm() == 0.0);
  double e = 0.0;
  for (int j = 0; j < 24; ++j)
    for (int i = 0; i < 24; ++i) {
      Vec2 z(-0.6 + (i + 0.5) * 0.05, -0.6 + (j + 0.5) * 0.05);
      e = std::max(e, std::abs(v->jacobian(z).trace() - f(z)));
    }
  CHECK(e / std::exp(-1.0) < 1e-3);
}

TEST_CASE("flow of a field is the identity off its support") {
  auto cf = std::make_shared<ClosedFormFlow>(
      [](const Vec2& z) {
        FlowSample s;
        double b = bump(z, 0.3);
        s.v = Vec2(-z.y(), z.x()) * b;  // divergence free rotation
        return s;
      },
      Box2{Vec2(-0.3, -0.3), Vec2(0.3, 0.3)});
  MoserFlowMap m(cf, 50, 0.05);
  Vec2 far(0.8, -0.4);
  CHECK(m.eval(far) == far);
  Vec2 z(0.1, 0.05);
  // rotation preserves the radius
  CHECK(m.eval(z).norm() == doctest::Approx(z.norm()).epsilon(1e-8));
  CHECK(std::abs(m.jet(z).J.determinant() - 1) < 1e-8);
}

TEST_CASE("radial prescribed jacobian against quadrature") {
  const double A = 0.005, rc = 0.3, w = 0.2;
  auto Fp = [=](double r) {
    double u = (r - rc) / w;
    return std::abs(u) < 1 ? -8.0 * A * u * std::pow(1 - u * u, 3) / w : 0.0;
  };
  auto phi_r = [=](double r) { return r > 1e-12 ? Fp(r) / r : 0.0; };
  auto g = std::make_shared<ClosedFormScalar>([=](const Vec2& z) { return 1 + phi_r(z.norm()); },
                                              [](const Vec2&) { return Vec2(0, 0); },
                                              Box2{Vec2(-0.55, -0.55), Vec2(0.55, 0.55)});
  auto geom = SupportPair::nested(Region::box({Vec2(-0.55, -0.55), Vec2(0.55, 0.55)}),
                                  Region::box({Vec2(-0.75, -0.75), Vec2(0.75, 0.75)}));
  MoserReport rep;
  SmoothMap psi = prescribed_jacobian(g, geom, {}, &rep);
  for (double r : {0.12, 0.25, 0.33, 0.45}) {
    Vec2 z = r * Vec2(std::cos(0.7), std::sin(0.7));
    CHECK(psi.eval(z).norm() == doctest::Approx(oracle::radial_rho(phi_r, r)).epsilon(1e-5));
  }
  CHECK(psi.eval(Vec2(0.9, 0.0)) == Vec2(0.9, 0.0));
}

TEST_CASE("box sweep reproduces a balanced density") {
  auto pb = [](const Vec2& z) { return 1e-3 * smoothstep_inf((0.4 - z.norm()) / 0.2).f * z.x(); };
  SweepReport rb;
  auto vb = solve_box(pb, Box2::centered(Vec2(0, 0), 0.5), 0.02, &rb);
  double e = 0;
  FlowSample s;
  for (int j = 0; j <= 50; ++j)
    for (int i = 0; i <= 50; ++i) {
      Vec2 z(-0.5 + i * 0.02, -0.5 + j * 0.02);
      double ph = vb->sample(z, s) ? s.phi : 0;
      e = std::max(e, std::abs(ph - pb(z)));
    }
  CHECK(e / 4e-4 < 1e-2);
  CHECK(std::abs(rb.mass) < 1e-9);
}

TEST_CASE("volume correction in a box hole and an annular hole") {
  for (int annular = 0; annular <= 1; ++annular) {
    SmoothMap f({std::make_shared<Push>(2e-3, annular ? Vec2(0.62, 0) : Vec2(0, 0), 0.3)});
    ExtensionProblem pb;
    pb.holes = {Hole{Box2::centered(Vec2(0, 0), 1.0), annular ? Box2::centered(Vec2(0, 0), 0.25) : Box2{}}};
    CorrectionOptions o;
    o.h = 0.01;
    o.steps = 8;
    o.check_grid = 64;
    std::vector<HoleReport> rep;
    SmoothMap g = correct_volume(f, pb, o, &rep);
    REQUIRE(rep.size() == 1);
    // the defect before correction is about 1.3e-2
    CHECK(rep[0].det_residual < 5e-5);
    for (Vec2 z : {Vec2(1.2, 0.0), Vec2(-1.01, 0.7), Vec2(0.0, 3.0)}) CHECK(g.eval(z) == f.eval(z));
    if (annular) CHECK(g.eval(Vec2(0.05, -0.1)) == f.eval(Vec2(0.05, -0.1)));
  }
}
