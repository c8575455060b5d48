#include <conreg/metrics.hpp>
#include <conreg/regularizer.hpp>

#include <doctest.h>
#include <json.hpp>

using namespace conreg;
using json = nlohmann::json;

namespace {

double box_overlap(const Box2& a, const Box2& b) {
  Box2 c = intersect(a, b);
  return c.empty() ? 0.0 : c.area();
}

std::shared_ptr<AffineMap> skew() {
  Mat2 A;
  A << 2, 0.3, 0, 0.5;
  return std::make_shared<AffineMap>(A, Vec2(0.1, -0.2));
}

}  // namespace

TEST_CASE("hole boundary of a square with corner and side cuts") {
  Box2 x{Vec2(0, 0), Vec2(1, 1)};
  std::vector<Box2> cut = {Box2::centered(Vec2(0, 0), 0.1), Box2::centered(Vec2(1, 1), 0.2),
                           Box2{Vec2(0.4, -0.05), Vec2(0.6, 0.07)}};
  Polygon p = hole_boundary(x, cut);
  double expect = 1.0;
  for (const Box2& c : cut) expect -= box_overlap(x, c);
  CHECK(std::abs(polygon_area(p)) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(polygon_area(p) > 0);
}

TEST_CASE("hole boundary without cuts is the square") {
  Box2 x{Vec2(0.25, 0.5), Vec2(0.5, 0.75)};
  Polygon p = hole_boundary(x, {});
  CHECK(p.size() == 4);
  CHECK(polygon_area(p) == doctest::Approx(x.area()).epsilon(1e-15));
}

TEST_CASE("second differences of a quadratic are scale free") {
  FunctionMap q([](const Vec2& z) { return Vec2(z.x() + 0.5 * z.y() * z.y(), z.y()); });
  FunctionMap r([](const Vec2& z) { return Vec2(z.x() + std::pow(std::abs(z.y() - 0.5), 1.5), z.y()); });
  std::vector<double> scales = {1.0 / 64, 1.0 / 512, 1.0 / 4096};
  ProbeTable t = smoothness_probe(r, q, {Vec2(0.3, 0.5), Vec2(0.6, 0.2)}, scales);
  REQUIRE(t.output.size() == 3);
  CHECK(t.output[2] == doctest::Approx(t.output[0]).epsilon(1e-3));
  // |y|^1.5 at the kink: quotient grows like h^-1/2
  CHECK(t.input[2] / t.input[0] == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("affine seed rejects non conservative maps") {
  Mat2 A;
  A << 2, 0, 0, 1;
  AffineMap f(A, Vec2(0, 0));
  CHECK_THROWS_AS(affine_seed(f, Vec2(0.5, 0.5)), Error);
  auto H = affine_seed(*skew(), Vec2(0.5, 0.5));
  CHECK((H->eval(Vec2(0.2, 0.9)) - skew()->eval(Vec2(0.2, 0.9))).norm() < 1e-15);
}

TEST_CASE("pipeline config round trip") {
  PipelineConfig c;
  c.epsilon = 0.125;
  c.t_max = 7;
  c.K0 = {Vec2(0.5, 0.06), Vec2(0.2, 0.8)};
  c.geometry.edge_h = 0.02;
  c.seed = 99;
  std::string s = config_to_json(c);
  PipelineConfig d = config_from_json(s);
  CHECK(config_to_json(d) == s);
  CHECK(d.K0.size() == 2);
  CHECK(d.seed == 99);
}

TEST_CASE("invalid pipeline settings") {
  CHECK_THROWS_AS(config_from_json(R"({"epsilon": -1})"), Error);
  CHECK_THROWS_AS(config_from_json(R"({"rho": 0.5})"), Error);
  CHECK_THROWS_AS(config_from_json("[1,2"), Error);
}

TEST_CASE("report verification") {
  json rep = {{"metrics",
               {{"c1_distance", 0.01},
                {"det_max", 2e-4},
                {"dual_max", 0.0},
                {"exact_outside", true},
                {"exact_near_K0", true},
                {"telescoping_ok", true},
                {"probe", {{"h", {0.1, 0.01}}, {"input", {1.0, 20.0}}, {"output", {1.0, 1.5}}}}}},
             {"holes", {{{"square", 0}, {"residual", 1e-6}, {"error", 1e-9}, {"fairness_abs_sum", 2e-6},
                         {"fairness_signed", 1e-6}}}}};
  json th = {{"c1_distance", 0.1}, {"det_max", 1e-3}, {"dual_max", 1e-12}, {"probe_input_growth", 10},
             {"probe_output_growth", 4}, {"exact_outside", true}, {"exact_near_K0", true}, {"telescoping", true}};
  auto all_pass = [](const std::vector<CheckResult>& v) {
    for (const auto& c : v)
      if (!c.pass) return false;
    return !v.empty();
  };
  CHECK(all_pass(verify_report(rep.dump(), th.dump())));
  rep["metrics"]["det_max"] = 5e-3;
  CHECK_FALSE(all_pass(verify_report(rep.dump(), th.dump())));
  th["det_max"] = nullptr;
  CHECK(all_pass(verify_report(rep.dump(), th.dump())));
  rep["metrics"]["probe"]["input"] = {1.0, 3.0};
  CHECK_FALSE(all_pass(verify_report(rep.dump(), th.dump())));
  rep["metrics"]["probe"]["input"] = {1.0, 30.0};
  rep["holes"][0]["residual"] = 1e-5;
  CHECK_FALSE(all_pass(verify_report(rep.dump(), th.dump())));
  CHECK_THROWS_AS(verify_report("{}", th.dump()), Error);
}

TEST_CASE("affine input is reproduced and left alone outside the domain") {
  auto f = skew();
  auto U = std::make_shared<BoxRegion>(std::vector<double>{0, 0}, std::vector<double>{1, 1});
  PipelineConfig c;
  c.epsilon = 0.25;
  c.t_max = 5;
  c.K0 = {Vec2(0.5, 0.5)};
  Regularized R = regularize(f, U, c);
  measure(R, *f, c);
  CHECK(R.report.metrics.c1_distance < 1e-6);
  CHECK(R.report.metrics.exact_outside);
  CHECK(R.report.metrics.exact_near_K0);
  for (Vec2 z : {Vec2(-0.3, 0.5), Vec2(1.2, 2.0)}) CHECK(R.map.eval(z) == f->eval(z));
  // the square holding K0 keeps the input
  int id = R.decomposition->locate(Vec2(0.5 + 1e-9, 0.5 + 1e-9));
  REQUIRE(id >= 0);
  CHECK(R.frozen[2][id]);
  auto j = json::parse(R.report.to_json());
  CHECK(j["metrics"]["telescoping_ok"].get<bool>());
}

TEST_CASE("a map far from conservative is refused") {
  Mat2 A;
  A << 1.1, 0, 0, 1;
  auto f = std::make_shared<AffineMap>(A, Vec2(0, 0));
  auto U = std::make_shared<BoxRegion>(std::vector<double>{0, 0}, std::vector<double>{1, 1});
  PipelineConfig c;
  c.epsilon = 0.25;
  c.t_max = 5;
  CHECK_THROWS_AS(regularize(f, U, c), Error);
}
