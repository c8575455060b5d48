#include "oracles.hpp"

#include <conreg/dyadic.hpp>

#include <doctest.h>

using namespace conreg;

namespace {

std::shared_ptr<BoxRegion> unit() {
  return std::make_shared<BoxRegion>(std::vector<double>{0, 0}, std::vector<double>{1, 1});
}

DyadicCell square(int t, int64_t i, int64_t j) {
  DyadicCell c;
  c.t = t;
  c.a = {i, j, 0};
  c.b = {1, 1, 0};
  return c;
}

WhitneyDecomposition build(double eps, int tmax) {
  WhitneyOptions o;
  o.t_max = tmax;
  return whitney_decompose(unit(), eps, o);
}

}  // namespace

TEST_CASE("good squares of the unit square at eps 0.3") {
  auto d = build(0.3, 8);
  CHECK(d.find(square(3, 3, 3)) >= 0);
  for (const auto& r : d.cells(2)) CHECK(r.cell.t >= 3);
  auto brute = oracle::whitney_squares(0.3, 8);
  CHECK(brute.count({3, 3, 3}) == 1);
  for (const auto& s : brute) CHECK(std::get<0>(s) != 2);
}

TEST_CASE("huge eps still shrinks toward the boundary") {
  auto d = build(4.0, 9);
  int finest = 0;
  for (const auto& r : d.cells(2)) finest = std::max(finest, r.cell.t);
  CHECK(finest == 9);
  CHECK(d.count(2) == oracle::whitney_squares(4.0, 9).size());
}

TEST_CASE("epsilon_small agrees with the neighbour block test") {
  auto U = unit();
  for (double eps : {0.5, 0.2, 0.07})
    for (int t = 0; t <= 6; ++t) {
      int64_t N = int64_t(1) << t;
      for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < N; ++j) {
          bool ref = std::ldexp(1.0, -t) <= eps && i >= 2 && i + 2 < N && j >= 2 && j + 2 < N;
          CHECK(epsilon_small(*U, square(t, i, j), eps) == ref);
        }
    }
}

TEST_CASE("rank of a vertex is the finest incident square") {
  auto d = build(0.3, 8);
  const auto& sq = d.cells(2);
  for (size_t v = 0; v < d.count(0); v += 37) {
    const DyadicCell& x = d.cells(0)[v].cell;
    Vec2 p(x.lo(0), x.lo(1));
    int t = -1;
    for (const auto& s : sq)
      if (s.cell.box().contains(p)) t = std::max(t, s.cell.t);
    CHECK(rank(d, x) == t);
  }
}

TEST_CASE("unknown cell has no rank") {
  auto d = build(0.3, 6);
  CHECK_THROWS_AS(rank(d, square(1, 0, 0)), Error);
}

TEST_CASE("locate returns the square whose interior holds the point") {
  auto d = build(0.3, 7);
  for (const Vec2& z : {Vec2(0.4, 0.4), Vec2(0.11, 0.83), Vec2(0.5 + 1e-9, 0.25 + 1e-9)}) {
    int id = d.locate(z);
    REQUIRE(id >= 0);
    CHECK(d.cells(2)[id].cell.box().contains_open(z));
  }
  CHECK(d.locate(Vec2(0.001, 0.5)) == -1);
}

TEST_CASE("vertex neighbourhoods") {
  auto d = build(0.3, 6);
  Margins mg;
  int id = 0;
  while (!d.cells(0)[id].complete) ++id;
  auto nb = neighborhoods(d, 0, id, mg);
  CHECK(nb.I.plus.empty());
  REQUIRE(nb.J.plus.size() == 1);
  REQUIRE(nb.D.plus.size() == 1);
  CHECK(nb.J.plus[0].lo == nb.D.plus[0].lo);
  CHECK(nb.J.plus[0].hi == nb.D.plus[0].hi);
  CHECK(nb.J.minus.empty());
}

TEST_CASE("the two ends of an edge have disjoint J") {
  auto d = build(0.3, 6);
  Margins mg;
  for (size_t e = 0; e < d.count(1); e += 11) {
    const auto& r = d.cells(1)[e];
    if (r.sub[0].size() != 2) continue;
    Box2 a = neighborhoods(d, 0, r.sub[0][0], mg).J.hull();
    Box2 b = neighborhoods(d, 0, r.sub[0][1], mg).J.hull();
    CHECK(intersect(a, b).empty());
  }
}

TEST_CASE("every cell has 2^(2-m) neighbours of its rank") {
  auto d = build(0.15, 7);
  for (int m = 0; m <= 2; ++m)
    for (const auto& r : d.cells(m)) {
      auto nb = neighbors(d, r.cell);
      REQUIRE(nb.size() == size_t(1) << (2 - m));
      for (const auto& y : nb) {
        CHECK(y.t == r.rank);
        CHECK(y.box().contains(r.cell.box()));
      }
    }
}

TEST_CASE("frontier cells are incomplete, inner ones complete") {
  auto d = build(0.3, 7);
  double h = std::ldexp(1.0, -7);
  for (int m = 0; m <= 2; ++m)
    for (const auto& r : d.cells(m)) {
      Box2 b = r.cell.box();
      double gap = std::min({b.lo.x(), b.lo.y(), 1 - b.hi.x(), 1 - b.hi.y()});
      if (gap > 4 * h) CHECK(r.complete);
      if (gap <= 2 * h) CHECK_FALSE(r.complete);
    }
}

TEST_CASE("lambda rescale maps the unit window to twice the cell") {
  DyadicCell x = square(4, 5, 9);
  Rescale l = lambda_rescale(x, 4);
  CHECK(l.apply(Vec2(0, 0)) == x.barycenter());
  CHECK(l.s == doctest::Approx(2.0 / 16));
  Vec2 z(0.3, -0.7);
  CHECK((l.inverse(l.apply(z)) - z).norm() < 1e-15);
}

TEST_CASE("region parsing") {
  auto r = region_from_json(R"({"kind":"box","lo":[0,0],"hi":[2,1]})");
  double in[2] = {1.0, 0.5}, edge[2] = {1.9, 0.5};
  CHECK(r->contains_ball(in, 0.4));
  CHECK_FALSE(r->contains_ball(edge, 0.2));
  CHECK_THROWS_AS(region_from_json(R"({"kind":"blob"})"), Error);
}
