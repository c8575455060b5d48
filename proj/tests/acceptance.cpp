// One line per acceptance criterion; exit status 1 when any fails.
// usage: acceptance [criterion ...]   (all when none given)

#include "oracles.hpp"

#include <conreg/dyadic.hpp>
#include <conreg/input_map.hpp>
#include <conreg/mass_mover.hpp>
#include <conreg/moser.hpp>
#include <conreg/regularizer.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace conreg;
using json = nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kReport = "acceptance_c1_shear_report.json";

// ---- 1 -------------------------------------------------------------------

Outcome primitive_exactness() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<PrimitivePtr> chain;
  for (int k = 0; k < 4; ++k) {
    double a = 0.5 + 1.5 * (U(rng) + 1.0) / 2.0, b = U(rng), c = U(rng);
    Mat2 A;
    A << a, b, c, (1.0 + b * c) / a;
    chain.push_back(std::make_shared<AffinePrim>(A, Vec2(U(rng), U(rng))));
  }
  BallCluster cl = BallCluster::make(2, {}, 0.08);
  auto path = gray_path(cl);
  for (size_t j = 0; j + 1 < path.size(); ++j) {
    Frame fr{Vec2(0.1 * U(rng), 0.1 * U(rng)), 0.5 + 0.25 * (U(rng) + 1.0)};
    chain.push_back(build_shear(cl, corner2(path[j]), corner2(path[j + 1]), 7e-4 * U(rng), fr));
  }
  SmoothMap F(chain);
  double worst = 0.0, worst_single = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Vec2 z(2.0 * U(rng), 2.0 * U(rng));
    worst = std::max(worst, std::abs(F.jet(z).J.determinant() - 1.0));
    for (const auto& p : chain) worst_single = std::max(worst_single, std::abs(p->jet(z).J.determinant() - 1.0));
  }
  return {worst <= 1e-12 && worst_single <= 1e-12,
          fmt("max |det-1| chain %.2e, single primitives %.2e over 1e4 points", worst, worst_single)};
}

// ---- 2 -------------------------------------------------------------------

// radial density 1 + phi with phi = F'(r)/r, F a compact bump in r
struct RadialBump {
  double A, rc, w;
  double F(double r) const {
    double u = (r - rc) / w;
    return std::abs(u) < 1 ? A * std::pow(1 - u * u, 4) : 0.0;
  }
  double Fp(double r) const {
    double u = (r - rc) / w;
    return std::abs(u) < 1 ? -8.0 * A * u * std::pow(1 - u * u, 3) / w : 0.0;
  }
  double Fpp(double r) const {
    double u = (r - rc) / w;
    return std::abs(u) < 1 ? A * (-8 * std::pow(1 - u * u, 3) + 48 * u * u * std::pow(1 - u * u, 2)) / (w * w) : 0.0;
  }
  double phi_r(double r) const { return r > 1e-12 ? Fp(r) / r : 0.0; }
  double phi(const Vec2& z) const { return phi_r(z.norm()); }
};

Outcome moser_law() {
  RadialBump rb{0.01, 0.45, 0.3};
  auto g = std::make_shared<ClosedFormScalar>([&](const Vec2& z) { return 1.0 + rb.phi(z); },
                                              [](const Vec2&) { return Vec2(0, 0); },
                                              Box2{Vec2(-0.8, -0.8), Vec2(0.8, 0.8)});
  auto geom = SupportPair::nested(Region::box({Vec2(-0.8, -0.8), Vec2(0.8, 0.8)}),
                                  Region::box({Vec2(-1, -1), Vec2(1, 1)}));
  PrescribedOptions po;
  po.flow.steps = 200;
  MoserReport rep;
  SmoothMap psi = prescribed_jacobian(g, geom, po, &rep);
  double map_err = 0.0, det_err = 0.0;
  auto phi_r = [&](double s) { return rb.phi_r(s); };
  for (int j = 0; j < 128; ++j)
    for (int i = 0; i < 128; ++i) {
      Vec2 z(-1 + (i + 0.5) / 64.0, -1 + (j + 0.5) / 64.0);
      Jet J = psi.jet(z);
      double r = z.norm();
      Vec2 ex = z * (oracle::radial_rho(phi_r, r, 400) / r);
      map_err = std::max(map_err, linf(J.v - ex));
      det_err = std::max(det_err, std::abs(J.J.determinant() - 1.0 - rb.phi(z)));
    }

  // step halving on the exact radial field v = F(r)/r^2 z
  RadialBump big{0.08, 0.45, 0.3};
  auto cf = std::make_shared<ClosedFormFlow>(
      [big](const Vec2& z) {
        FlowSample s;
        double r = z.norm();
        if (r < 1e-9) return s;
        double f = big.F(r), fp = big.Fp(r);
        Vec2 e = z / r;
        double a = f / (r * r), ap = fp / (r * r) - 2 * f / (r * r * r);
        s.v = a * z;
        s.Dv = a * Mat2::Identity() + ap * e * z.transpose();
        s.phi = fp / r;
        s.dphi = (big.Fpp(r) / r - fp / (r * r)) * e;
        return s;
      },
      Box2{Vec2(-1, -1), Vec2(1, 1)});
  const double floor = 1e-10;
  std::vector<double> res;
  for (int st : {25, 50, 100, 200, 400}) {
    MoserFlowMap m(cf, st, 0.05);
    double e = 0.0;
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) {
        Vec2 z(-1 + (i + 0.5) / 32.0, -1 + (j + 0.5) / 32.0);
        e = std::max(e, std::abs(m.jet(z).J.determinant() - 1.0 - big.phi(z)));
      }
    res.push_back(e);
  }
  bool halving = true;
  std::string ratios;
  for (size_t k = 1; k < res.size(); ++k) {
    double q = res[k - 1] / res[k];
    ratios += fmt(" %.1f", q);
    if (res[k - 1] > floor && q < 8.0) halving = false;
  }
  return {map_err <= 1e-4 && det_err <= 1e-4 && halving,
          fmt("map err %.2e, det err %.2e at %d steps; halving ratios%s", map_err, det_err, rep.steps,
              ratios.c_str())};
}

// ---- 3 -------------------------------------------------------------------

double bump(const Vec2& z, double R) {
  double s = z.squaredNorm() / (R * R);
  return s < 1 ? std::exp(-1 / (1 - s)) : 0.0;
}

Outcome divergence_solver() {
  struct Dipole {
    double sep, R, tilt;
  };
  double worst = 0.0, outside = 0.0;
  for (Dipole dp : {Dipole{0.3, 0.25, 0.05}, Dipole{0.5, 0.2, 0.0}, Dipole{0.2, 0.3, 0.15}}) {
    Vec2 q1(-dp.sep / 2, dp.tilt), q2(dp.sep / 2, -dp.tilt);
    double R = dp.R;
    auto f = [=](const Vec2& z) { return bump(z - q1, R) - bump(z - q2, R); };
    auto phi = std::make_shared<ClosedFormScalar>(f, [](const Vec2&) { return Vec2(0, 0); },
                                                  Box2{Vec2(-0.6, -0.6), Vec2(0.6, 0.6)});
    auto geom = SupportPair::nested(Region::box({Vec2(-0.6, -0.6), Vec2(0.6, 0.6)}),
                                    Region::box({Vec2(-1, -1), Vec2(1, 1)}));
    DivOptions o;
    o.check_grid = 0;
    auto v = solve_divergence(phi, geom, o);
    double e = 0.0, ref = 0.0;
    for (int j = 0; j < 128; ++j)
      for (int i = 0; i < 128; ++i) {
        Vec2 z(-1 + (i + 0.5) / 64.0, -1 + (j + 0.5) / 64.0);
        e = std::max(e, std::abs(v->jacobian(z).trace() - f(z)));
        ref = std::max(ref, std::abs(f(z)));
      }
    worst = std::max(worst, e / ref);
    for (int k = 0; k < 2000; ++k) {
      double a = 2 * M_PI * k / 2000.0, r = 1.0 + 0.5 * (k % 7) / 7.0;
      Vec2 z = r * Vec2(std::cos(a), std::sin(a)) / std::max(std::abs(std::cos(a)), std::abs(std::sin(a)));
      outside = std::max(outside, linf(v->value(z)));
    }
  }
  return {worst <= 1e-3 && outside == 0.0,
          fmt("max relative residual %.2e on 128^2, max |v| outside B2 %.1e", worst, outside)};
}

// ---- 4 -------------------------------------------------------------------

Outcome volume_balance() {
  const double amp = 1e-3;
  bool pass = true;
  std::string detail;
  for (int k = 0; k <= 1; ++k) {
    auto t1 = std::make_shared<TwistMap>(TwistMap::Params{Vec2(0.0, k ? 0.9 : 1.0), 0.3, amp});
    auto t2 = std::make_shared<TwistMap>(TwistMap::Params{Vec2(1.0, -0.3), 0.3, -0.7 * amp});
    CompositeMap F({t1, t2});
    FunctionMap id([](const Vec2& z) { return z; }, [](const Vec2&) { return Mat2(Mat2::Identity()); });
    double c1 = c1_distance(F, id, Box2{Vec2(-2.2, -2.2), Vec2(2.2, 2.2)});
    BallCluster c = BallCluster::make(2, k ? std::vector<int>{1} : std::vector<int>{}, 0.08);
    std::vector<Box2> W;
    if (k == 0)
      W = {{Vec2(-1, -1), Vec2(0, 0)}, {Vec2(0, -1), Vec2(1, 0)}, {Vec2(-1, 0), Vec2(0, 1)}, {Vec2(0, 0), Vec2(1, 1)}};
    else
      W = {{Vec2(-1, -0.9), Vec2(0, 0.9)}, {Vec2(0, -0.9), Vec2(1, 0.9)}};
    BalanceOptions o;
    o.qmc_budget = 100000;
    o.seed = 7;
    BalanceReport r;
    balance_volumes(F, W, c, o, &r, {}, [&](const Vec2& z) { return F.inverse_eval(z); });
    bool ok = c1 <= 0.05 && r.max_residual <= 1e-3 && r.qmc_max_residual <= 1e-3 &&
              std::abs(r.conservation) <= r.conservation_error && r.locality_ok;
    pass = pass && ok;
    detail += fmt("%sk=%d: c1(F,id) %.1e, residual %.1e (sampled %.1e), conservation %.1e <= %.1e, locality %.1e",
                  k ? "; " : "", k, c1, r.max_residual, r.qmc_max_residual, std::abs(r.conservation),
                  r.conservation_error, r.locality_max);
  }
  return {pass, detail};
}

// ---- 5 -------------------------------------------------------------------

Outcome affine_fixed_point() {
  Mat2 A;
  A << 2, 0.3, 0, 0.5;
  auto f = std::make_shared<AffineMap>(A, Vec2(0.1, -0.2));
  auto U = std::make_shared<BoxRegion>(std::vector<double>{0, 0}, std::vector<double>{1, 1});
  PipelineConfig c;
  c.epsilon = 0.25;
  c.t_max = 6;
  c.K0 = {Vec2(0.5, 0.06)};
  Regularized R = regularize(f, U, c);
  measure(R, *f, c);
  const GlobalMetrics& g = R.report.metrics;
  return {g.c1_distance <= 1e-6 && g.exact_outside,
          fmt("c1 %.2e, bit-exact outside U %s (%ld samples), det %.1e", g.c1_distance,
              g.exact_outside ? "yes" : "no", g.outside_samples, g.det_max)};
}

// ---- 6 -------------------------------------------------------------------

Outcome end_to_end() {
  std::remove(kReport.c_str());
  json run = json::parse(slurp(std::string(CONREG_CONFIG_DIR) + "/c1_shear.json"));
  InputMapPtr f = map_from_json(run["map"].dump());
  auto U = region_from_json(run["domain"].dump());
  PipelineConfig c = config_from_json(run["pipeline"].dump());
  Regularized R = regularize(f, U, c);
  measure(R, *f, c);
  std::string text = R.report.to_json();
  std::ofstream(kReport) << text;
  auto checks = verify_report(text, slurp(std::string(CONREG_CONFIG_DIR) + "/thresholds.json"));
  bool pass = true;
  std::string detail = fmt("eps %.2g, t_max %d, %ld squares:", c.epsilon, c.t_max, R.report.processed);
  for (const CheckResult& k : checks) {
    pass = pass && k.pass;
    detail += fmt(" %s %.3g%s", k.name.c_str(), k.value, k.pass ? "" : " (FAIL)");
  }
  return {pass, detail};
}

// ---- 7 -------------------------------------------------------------------

// common coordinate grid of box sets, clipped to `h`
void grid_lines(const std::vector<const BoxRegionSet*>& sets, const Box2& h, std::vector<double>& xs,
                std::vector<double>& ys) {
  xs = {h.lo.x(), h.hi.x()};
  ys = {h.lo.y(), h.hi.y()};
  for (const auto* s : sets)
    for (const auto* l : {&s->plus, &s->minus})
      for (const Box2& q : *l) {
        for (double x : {q.lo.x(), q.hi.x()})
          if (x > h.lo.x() && x < h.hi.x()) xs.push_back(x);
        for (double y : {q.lo.y(), q.hi.y()})
          if (y > h.lo.y() && y < h.hi.y()) ys.push_back(y);
      }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
}

// overlapping interiors of two box sets, tested on the cells of their common grid
bool interiors_meet(const BoxRegionSet& a, const BoxRegionSet& b) {
  Box2 h = intersect(a.hull(), b.hull());
  if (h.empty()) return false;
  std::vector<double> xs, ys;
  grid_lines({&a, &b}, h, xs, ys);
  for (size_t i = 0; i + 1 < xs.size(); ++i)
    for (size_t j = 0; j + 1 < ys.size(); ++j) {
      Vec2 z(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
      if (a.contains_open(z) && b.contains_open(z)) return true;
    }
  return false;
}

// the r-neighbourhood of the closure of a's interior lies in the open box u
bool grown_inside(const BoxRegionSet& a, double r, const Box2& u) {
  std::vector<double> xs, ys;
  grid_lines({&a}, a.hull(), xs, ys);
  for (size_t i = 0; i + 1 < xs.size(); ++i)
    for (size_t j = 0; j + 1 < ys.size(); ++j) {
      Vec2 z(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
      if (!a.contains_open(z)) continue;
      Box2 g = Box2{Vec2(xs[i], ys[j]), Vec2(xs[i + 1], ys[j + 1])}.inflated(r);
      if (!(g.lo.x() > u.lo.x() && g.lo.y() > u.lo.y() && g.hi.x() < u.hi.x() && g.hi.y() < u.hi.y()))
        return false;
    }
  return true;
}

std::string whitney_invariants(const WhitneyDecomposition& d, const Margins& mg) {
  const auto& sq = d.cells(2);
  // disjoint interiors and cover, by area at the lattice scale
  double area = 0.0;
  for (const auto& r : sq) area += r.cell.box().area();
  std::set<oracle::Sq> keys;
  for (const auto& r : sq) {
    Box2 b = r.cell.box();
    for (int t = r.cell.t - 1; t >= 0; --t)
      if (keys.count({t, r.cell.a[0] >> (r.cell.t - t), r.cell.a[1] >> (r.cell.t - t)})) return "nested squares";
    keys.insert({r.cell.t, r.cell.a[0], r.cell.a[1]});
    (void)b;
  }
  // the squares cover [2^-tmax*2, 1 - 2^-tmax*2]^2 exactly when truncation is the only gap
  double inner = 1.0 - 4.0 * std::ldexp(1.0, -d.t_max());
  if (std::abs(area - inner * inner) > 1e-12) return fmt("area %.17g vs %.17g", area, inner * inner);
  // rank differences of intersecting cells
  for (int m = 0; m <= 2; ++m)
    for (const auto& r : d.cells(m)) {
      for (int k = 0; k < m; ++k)
        for (int s : r.sub[k])
          if (std::abs(d.cells(k)[s].rank - r.rank) > 1) return "rank jump";
      for (int x : r.incident)
        if (std::abs(sq[x].rank - r.rank) > 1) return "rank jump";
    }
  for (const auto& r : sq)
    for (const auto& q : sq)
      if (&r != &q && r.cell.box().intersects(q.cell.box()) && std::abs(r.rank - q.rank) > 1) return "rank jump";
  // neighbours: 2^(2-m) distinct same-size cells containing x
  for (int m = 0; m <= 2; ++m)
    for (const auto& r : d.cells(m)) {
      auto nb = neighbors(d, r.cell);
      if (int(nb.size()) != (1 << (2 - m))) return fmt("%zu neighbours of a %d-cell", nb.size(), m);
      std::set<oracle::Sq> uniq;
      Box2 x = r.cell.box();
      for (const auto& y : nb) {
        uniq.insert({y.t, y.a[0], y.a[1]});
        if (y.t != r.rank || !y.box().contains(x)) return "neighbour does not contain the cell";
      }
      if (uniq.size() != nb.size()) return "repeated neighbour";
    }
  // J-disjointness over all pairs of cells with overlapping hulls, and the glue margin inside the neighbours
  struct Item {
    Box2 hull;
    BoxRegionSet J;
    Box2 nbhd;
    double glue;
    int m, id;
  };
  std::vector<Item> items;
  for (int m = 0; m <= 2; ++m)
    for (size_t id = 0; id < d.count(m); ++id) {
      CellNeighborhoods nh = neighborhoods(d, m, int(id), mg);
      Box2 u{Vec2(1e300, 1e300), Vec2(-1e300, -1e300)};
      for (const auto& y : neighbors(d, d.cells(m)[id].cell)) {
        u.lo = u.lo.cwiseMin(y.box().lo);
        u.hi = u.hi.cwiseMax(y.box().hi);
      }
      items.push_back({nh.J.hull(), nh.J, u, nh.dGlue, m, int(id)});
    }
  // frontier cells of the truncation are frozen by the pipeline; the margin is checked on the others
  for (const Item& it : items)
    if (d.cells(it.m)[it.id].complete && !grown_inside(it.J, it.glue, it.nbhd)) {
      const auto& r = d.cells(it.m)[it.id];
      return fmt("glue margin of %d-cell %s (rank %d, complete %d) leaves the neighbours", it.m, r.cell.str().c_str(),
                 r.rank, int(r.complete));
    }
  std::vector<size_t> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return items[a].hull.lo.x() < items[b].hull.lo.x(); });
  for (size_t i = 0; i < order.size(); ++i)
    for (size_t j = i + 1; j < order.size(); ++j) {
      const Item &a = items[order[i]], &b = items[order[j]];
      if (b.hull.lo.x() >= a.hull.hi.x()) break;
      if (interiors_meet(a.J, b.J)) return "J regions overlap";
    }
  return "";
}

Outcome whitney_oracle() {
  auto dom = std::make_shared<BoxRegion>(std::vector<double>{0, 0}, std::vector<double>{1, 1});
  std::string detail;
  bool pass = true;
  // below 1/8 the unit square starts to depend on eps
  for (double eps : {0.5, 0.3, 0.15, 0.1, 0.05}) {
    const int tmax = 8;
    WhitneyOptions o;
    o.t_max = tmax;
    WhitneyDecomposition d = whitney_decompose(dom, eps, o);
    auto sq = oracle::whitney_squares(eps, tmax);
    const int T = tmax + 1;
    auto F = oracle::faces(sq, T);
    auto P = [&](double x) { return int64_t(std::ldexp(x, T)); };
    std::set<oracle::Sq> ls;
    std::set<oracle::Pt> lv;
    std::set<oracle::Seg> le;
    for (const auto& r : d.cells(2)) ls.insert({r.cell.t, r.cell.a[0], r.cell.a[1]});
    for (const auto& r : d.cells(1))
      le.insert({{P(r.cell.lo(0)), P(r.cell.lo(1))}, {P(r.cell.hi(0)), P(r.cell.hi(1))}});
    for (const auto& r : d.cells(0)) lv.insert({P(r.cell.lo(0)), P(r.cell.lo(1))});
    bool same = ls == sq && lv == F.vertices && le == F.edges;
    std::string inv = whitney_invariants(d, Margins{});
    pass = pass && same && inv.empty();
    detail += fmt("%seps %.2f: %zu/%zu/%zu cells %s%s", detail.empty() ? "" : "; ", eps, lv.size(), le.size(),
                  ls.size(), same ? "match" : "DIFFER", inv.empty() ? ", invariants hold" : (", " + inv).c_str());
  }
  return {pass, detail};
}

// ---- 8 -------------------------------------------------------------------

Outcome telescoping() {
  std::ifstream in(kReport);
  if (!in) return {false, "no c1_shear report (criterion 6 must run first)"};
  json r = json::parse(in);
  size_t n = 0, bad = 0;
  double worst = 0.0;
  for (const auto& h : r["holes"]) {
    double res = std::abs(h["residual"].get<double>());
    double bound = h["fairness_abs_sum"].get<double>() + h["error"].get<double>();
    ++n;
    if (res > bound) ++bad;
    if (bound > 0) worst = std::max(worst, res / bound);
  }
  bool flag = r["metrics"]["telescoping_ok"].get<bool>();
  return {n > 0 && bad == 0 && flag,
          fmt("%zu top-stage holes, %zu over budget, worst residual/budget %.3f", n, bad, worst)};
}

struct Criterion {
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all = {
      {"primitive exactness", 1, primitive_exactness},
      {"moser law", 30, moser_law},
      {"divergence solver", 60, divergence_solver},
      {"volume balance", 60, volume_balance},
      {"affine fixed point", 60, affine_fixed_point},
      {"c1_shear regularization", 600, end_to_end},
      {"whitney oracle", 30, whitney_oracle},
      {"fairness telescoping", 1, telescoping},
  };
  std::vector<int> pick;
  for (int i = 1; i < argc; ++i) pick.push_back(std::atoi(argv[i]));
  if (pick.empty())
    for (int i = 1; i <= int(all.size()); ++i) pick.push_back(i);
  int failed = 0;
  for (int k : pick) {
    if (k < 1 || k > int(all.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", k);
      return 2;
    }
    const Criterion& c = all[k - 1];
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass && dt <= c.limit_s;
    failed += !pass;
    std::printf("criterion %d %-24s %s  %s  [%.2f s, limit %.0f s]\n", k, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), dt, c.limit_s);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
