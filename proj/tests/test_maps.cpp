#include "oracles.hpp"

#include <conreg/input_map.hpp>
#include <conreg/mass_mover.hpp>
#include <conreg/maps.hpp>

#include <doctest.h>

#include <random>

using namespace conreg;

namespace {

Mat2 fd_jacobian(const MapLike& f, const Vec2& z, double h = 1e-6) {
  Mat2 J;
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = h;
    J.col(k) = (f.eval(z + e) - f.eval(z - e)) / (2 * h);
  }
  return J;
}

std::shared_ptr<AffinePrim> unimodular(double a, double b, double c, Vec2 shift) {
  Mat2 A;
  A << a, b, c, (1 + b * c) / a;
  return std::make_shared<AffinePrim>(A, shift);
}

}  // namespace

TEST_CASE("affine primitive inverse") {
  auto p = unimodular(1.7, 0.4, -0.2, Vec2(0.3, -1));
  auto q = p->inverse();
  Vec2 z(0.25, 0.8);
  CHECK((q->eval(p->eval(z)) - z).norm() < 1e-14);
  CHECK(oracle::det2(p->A()(0, 0), p->A()(0, 1), p->A()(1, 0), p->A()(1, 1)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("shear jet matches differences and inverts exactly") {
  BallCluster cl = BallCluster::make(2, {}, 0.08);
  auto path = gray_path(cl);
  Frame fr{Vec2(0.2, -0.1), 0.6};
  auto s = build_shear(cl, corner2(path[0]), corner2(path[1]), 5e-4, fr);
  auto si = s->inverse();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    Vec2 z(U(rng), U(rng));
    Jet j = s->jet(z);
    CHECK(max_abs(j.J - fd_jacobian(SmoothMap({s}), z)) < 1e-6);
    CHECK(std::abs(j.J.determinant() - 1) < 1e-15);
    CHECK((si->eval(s->eval(z)) - z).norm() < 1e-15);
  }
}

TEST_CASE("shear amplitude limit") {
  BallCluster cl = BallCluster::make(2, {}, 0.08);
  auto path = gray_path(cl);
  CHECK_THROWS_AS(build_shear(cl, corner2(path[0]), corner2(path[1]), 0.08 / 100), Error);
  CHECK_NOTHROW(build_shear(cl, corner2(path[0]), corner2(path[1]), 0.99 * 0.08 / 100));
}

TEST_CASE("gray path visits every corner through adjacent steps") {
  for (std::vector<int> S : {std::vector<int>{}, std::vector<int>{0}, std::vector<int>{1}}) {
    BallCluster cl = BallCluster::make(2, S, 0.08);
    auto pts = cl.points();
    auto path = gray_path(cl);
    CHECK(path.size() == pts.size());
    CHECK(pts.size() == size_t(1) << (2 - S.size()));
    for (size_t j = 0; j + 1 < path.size(); ++j) CHECK(adjacent(path[j], path[j + 1]));
    std::set<Corner> seen(path.begin(), path.end());
    CHECK(seen.size() == pts.size());
  }
}

TEST_CASE("chain composition order and inverse") {
  auto a = unimodular(2.0, 0.0, 0.0, Vec2(1, 0));
  auto b = unimodular(1.0, 1.0, 0.0, Vec2(0, 0));
  SmoothMap m({a, b});
  Vec2 z(1, 1);
  CHECK((m.eval(z) - b->eval(a->eval(z))).norm() == 0.0);
  SmoothMap inv = invert(m);
  CHECK((inv.eval(m.eval(z)) - z).norm() < 1e-14);
  Jet j = m.jet(z);
  CHECK(max_abs(j.J - b->A() * a->A()) < 1e-15);
}

TEST_CASE("c1 shear input: jet against differences, unit determinant, inverse") {
  C1ShearMap f(C1ShearMap::Params{});
  C1ShearMap::Params big;
  big.amp = 1e-2;
  big.J = 3;  // few terms, so differences resolve the derivative
  C1ShearMap g(big);
  for (double y : {0.1, 0.27, 0.5, 0.93}) {
    Vec2 z(0.4, y);
    CHECK(std::abs(g.jet(z).J.determinant() - 1) < 1e-15);
    CHECK(max_abs(g.jet(z).J - fd_jacobian(g, z, 1e-7)) < 1e-4);
    CHECK((g.inverse_eval(g.eval(z)) - z).norm() < 1e-14);
  }
  CHECK((f.eval(Vec2(0.3, 0.1)) - Vec2(0.3, 0.1)).norm() == 0.0);
}

TEST_CASE("maps survive a JSON round trip") {
  C1ShearMap::Params p;
  p.amp = 3e-3;
  p.a = 0.7;
  C1ShearMap f(p);
  auto g = map_from_json(f.describe());
  for (double y : {0.05, 0.3, 0.71}) CHECK((g->eval(Vec2(0.2, y)) - f.eval(Vec2(0.2, y))).norm() == 0.0);
  Mat2 A;
  A << 2, 0.3, 0, 0.5;
  AffineMap h(A, Vec2(1, 2));
  auto k = map_from_json(h.describe());
  CHECK((k->eval(Vec2(0.5, 0.5)) - h.eval(Vec2(0.5, 0.5))).norm() == 0.0);
  CHECK_THROWS_AS(map_from_json(R"({"kind":"nope"})"), Error);
  CHECK_THROWS_AS(map_from_json("{"), Error);
}

TEST_CASE("newton inverse of an affine map") {
  Mat2 A;
  A << 2, 0.3, 0, 0.5;
  AffineMap f(A, Vec2(0.1, -0.2));
  Vec2 w(0.7, 0.4);
  Vec2 z = newton_inverse(f, w, Vec2(0, 0));
  CHECK((f.eval(z) - w).norm() < 1e-14);
}

TEST_CASE("twist map preserves area") {
  TwistMap t(TwistMap::Params{Vec2(0.5, 0.5), 0.3, 0.2});
  for (double r : {0.0, 0.1, 0.25, 0.35}) {
    Vec2 z(0.5 + r, 0.5 + 0.3 * r);
    CHECK(std::abs(t.jet(z).J.determinant() - 1) < 1e-13);
    CHECK((t.inverse_eval(t.eval(z)) - z).norm() < 1e-13);
  }
}

TEST_CASE("balancing the identity needs no shear") {
  FunctionMap id([](const Vec2& z) { return z; }, [](const Vec2&) { return Mat2(Mat2::Identity()); });
  BallCluster c = BallCluster::make(2, {}, 0.08);
  std::vector<Box2> W = {{Vec2(-1, -1), Vec2(0, 0)}, {Vec2(0, -1), Vec2(1, 0)}, {Vec2(-1, 0), Vec2(0, 1)},
                         {Vec2(0, 0), Vec2(1, 1)}};
  BalanceReport r;
  SmoothMap s = balance_volumes(id, W, c, {}, &r);
  CHECK(r.max_residual < 1e-12);
  for (const auto& st : r.steps) CHECK(std::abs(st.t) < 1e-12);
  CHECK(r.locality_ok);
  for (size_t j = 0; j < r.target.size(); ++j) CHECK(r.target[j] == doctest::Approx(1.0).epsilon(1e-12));
}
