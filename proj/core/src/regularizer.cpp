#include <conreg/regularizer.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

namespace conreg {

void StageGeometry::validate(const Margins& mg) const {
  auto bad = [](const char* m) { throw Error(ErrorCode::invalid_margins, m); };
  if (!(mg.w(0) < edge_keep && edge_keep < edge_blend0 && edge_blend0 < edge_blend1 && edge_blend1 < edge_outer &&
        edge_outer < 0.5))
    bad("edge lengths must increase from w(0) and stay below 1/2");
  if (!(edge_h > 0 && 4 * edge_h < edge_outer - edge_keep)) bad("edge lattice too coarse for its annulus");
  if (!(mg.w(0) < sq_outer && sq_outer < sq_blend0 && sq_blend0 < sq_blend1 && sq_blend1 < sq_inner &&
        sq_inner < 0.5))
    bad("square depths must increase from w(0) and stay below 1/2");
  if (!(sq_vertex >= sq_blend1 && 2 * sq_vertex < edge_keep))
    bad("vertex boxes must cover the frame corners and stay inside the kept part of the edges");
  if (!(sq_h > 0 && 4 * sq_h < sq_inner - sq_outer)) bad("square lattice too coarse for its ring");
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::invalid_parameter, m); };
  if (n != 2) bad("only n = 2 is supported");
  if (!(epsilon > 0)) bad("epsilon must be positive");
  if (!(theta > 0)) bad("theta must be positive");
  if (!(rho > 0 && rho <= 0.25)) bad("rho must lie in (0, 1/4]");
  if (t_max < 1) bad("t_max must be at least 1");
  if (!(delta_vertex > 0 && delta_edge > 0)) bad("delta must be positive");
  if (!(tol_det > 0 && tol_hole > 0 && tau_in >= 0)) bad("tolerances must be positive");
  if (moser_steps < 1 || threads < 1) bad("steps and threads must be at least 1");
  margins.validate(n);
  geometry.validate(margins);
  // compatibility is sampled on D(y) grown by rho; it must stay inside the kept germs
  if ((1 + rho) * margins.w(0) >= geometry.sq_outer) throw Error(ErrorCode::invalid_margins, "rho too large");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (int k = 0; k < threads; ++k)
    pool.emplace_back([&] {
      for (int i; !failed && (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

double dist_to_points(const Box2& b, const std::vector<Vec2>& K) {
  double best = INFINITY;
  for (const Vec2& p : K) best = std::min(best, (p - p.cwiseMax(b.lo).cwiseMin(b.hi)).norm());
  return best;
}

// w -> Fr^-1(f^-1(h(Fr(w))))
FunctionMap pull_back(const InputMap& f, const SmoothMap& h, const Frame& fr) {
  return FunctionMap([&f, h, fr](const Vec2& w) {
    Vec2 z = fr.center + fr.scale * w;
    Vec2 y = h.eval(z);
    Vec2 x = f.has_inverse() ? f.inverse_eval(y) : newton_inverse(f, y, z);
    return Vec2((x - fr.center) / fr.scale);
  });
}

struct Pipeline {
  const InputMapPtr f;
  const WhitneyDecomposition& d;
  const PipelineConfig& cfg;
  std::array<std::vector<char>, 3> frozen;
  std::array<std::vector<CellAssignment>, 3> out;

  double L(int m, int id) const { return std::ldexp(1.0, -d.cells(m)[id].rank); }
  Vec2 vertex(int id) const {
    const DyadicCell& c = d.cells(0)[id].cell;
    return {c.lo(0), c.lo(1)};
  }
  Box2 region(int m, int id) const {
    const CellRecord& r = d.cells(m)[id];
    Box2 b = r.cell.box();
    for (int s : (m == 2 ? std::vector<int>{id} : r.incident)) {
      const Box2 q = d.cells(2)[s].cell.box();
      b = {b.lo.cwiseMin(q.lo), b.hi.cwiseMax(q.hi)};
    }
    return b;
  }
  SmoothMap input_chain() const { return SmoothMap({std::make_shared<InputPrim>(f)}); }

  void mark_frozen() {
    for (int m = 0; m < 3; ++m) frozen[m].assign(d.count(m), 0);
    for (int m = 2; m >= 0; --m)
      for (size_t i = 0; i < d.count(m); ++i) {
        const CellRecord& r = d.cells(m)[i];
        bool fz = !cfg.K0.empty() && dist_to_points(r.cell.box(), cfg.K0) <= cfg.frozen_radius(m);
        fz = fz || !r.complete;
        for (int s : r.incident) fz = fz || frozen[2][s];
        if (fz) frozen[m][i] = 1;
      }
    // a frozen edge freezes its end points
    for (size_t e = 0; e < d.count(1); ++e)
      if (frozen[1][e])
        for (int v : d.cells(1)[e].sub[0]) frozen[0][v] = 1;
  }

  void fairness(CellAssignment& a, const BalanceReport& rep, const Frame& fr) const {
    double s2 = fr.scale * fr.scale;
    for (size_t j = 0; j < rep.path.size(); ++j) {
      FairnessEntry e;
      e.square = d.locate(fr.center + fr.scale * rep.path[j]);
      e.residual = (rep.achieved[j] - rep.target[j]) * s2;
      e.error = rep.error[j] * s2;
      a.fairness.push_back(e);
      a.nice.fairness = std::max(a.nice.fairness, std::abs(rep.achieved[j] - rep.target[j]));
    }
  }

  void finish(CellAssignment& a, const AffinePrim& H) const {
    const CellRecord& r = d.cells(a.m)[a.id];
    a.nice = [&] {
      NiceReport n = check_nice(a.h, *f, region(a.m, a.id), H, lambda_rescale(r.cell, r.rank), cfg.nice_samples,
                                derive_seed(cfg.seed, 7, a.m, a.id));
      n.fairness = a.nice.fairness;
      return n;
    }();
    a.primitives = int(a.h.chain().size());
  }

  // |h - g| on a grid over the box, which must vanish
  void assert_equal(const SmoothMap& h, const SmoothMap& g, const Box2& b, const char* what, int m, int id) const {
    int n = cfg.compat_samples;
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i) {
        Vec2 z = b.lo + Vec2(b.size().x() * i / n, b.size().y() * j / n);
        double e = (h.eval(z) - g.eval(z)).cwiseAbs().maxCoeff();
        if (!(e <= cfg.tol_compat)) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "%s: maps differ by %.3e at (%.17g, %.17g) in cell m=%d id=%d", what, e, z.x(),
                        z.y(), m, id);
          throw Error(ErrorCode::internal_error, buf);
        }
      }
  }

  CellAssignment vertex_cell(int id) const {
    CellAssignment a;
    a.m = 0;
    a.id = id;
    if (frozen[0][id]) {
      a.h = input_chain();
      return a;
    }
    a.provenance = Provenance::constructed;
    double Lv = L(0, id);
    Vec2 v = vertex(id);
    auto H = affine_seed(*f, v, cfg.tau_in);
    Frame fr{v, Lv / 2};
    BallCluster cl = BallCluster::make(2, {}, cfg.delta_vertex);
    std::vector<Box2> W{Box2::centered(Vec2::Zero(), cfg.margins.w(0) * Lv / fr.scale)};
    BalanceOptions bo = cfg.balance;
    bo.seed = derive_seed(cfg.seed, 0, id);
    BalanceReport rep;
    SmoothMap s = balance_volumes(pull_back(*f, SmoothMap({H}), fr), W, cl, bo, &rep, fr);
    a.h = s.then(H);
    fairness(a, rep, fr);
    finish(a, *H);
    return a;
  }

  CellAssignment edge_cell(int id) const {
    CellAssignment a;
    a.m = 1;
    a.id = id;
    if (frozen[1][id]) {
      a.h = input_chain();
      return a;
    }
    a.provenance = Provenance::constructed;
    const CellRecord& r = d.cells(1)[id];
    if (r.cell.t != r.rank) throw Error(ErrorCode::internal_error, "edge rank differs from its size");
    const StageGeometry& g = cfg.geometry;
    double Le = L(1, id);
    int ax = r.cell.b[0] ? 0 : 1;
    Box2 eb = r.cell.box();
    Vec2 mid = eb.center();
    std::vector<int> vs = r.sub[0];
    if (vs.size() != 2) throw Error(ErrorCode::internal_error, "edge without two end points");
    if (vertex(vs[0])[ax] > vertex(vs[1])[ax]) std::swap(vs[0], vs[1]);
    auto H = affine_seed(*f, mid, cfg.tau_in);

    ExtensionProblem pb;
    pb.tol_hole = cfg.tol_hole;
    for (int v : vs) {
      Vec2 p = vertex(v);
      pb.germs.push_back({Cutoff::around(p, g.edge_blend0 * Le, g.edge_blend1 * Le), out[0][v].h});
      pb.holes.push_back({Box2::centered(p, g.edge_outer * Le), Box2::centered(p, g.edge_keep * Le)});
    }
    SmoothMap g0 = smooth_extend(pb, H);
    CorrectionOptions co;
    co.h = g.edge_h * Le;
    co.steps = cfg.moser_steps;
    std::vector<HoleReport> hr;
    SmoothMap h1 = correct_volume(g0, pb, co, &hr);
    for (const auto& x : hr) a.bytes += x.bytes;

    Frame fr{mid, Le / 2};
    BallCluster cl = BallCluster::make(2, {ax}, cfg.delta_edge);
    double r0 = cfg.margins.w(0) * L(0, vs[0]) / fr.scale, r1 = cfg.margins.w(0) * L(0, vs[1]) / fr.scale;
    double th = cfg.margins.w(1) * Le / fr.scale;
    Box2 W;
    W.lo[ax] = -1 + r0;
    W.hi[ax] = 1 - r1;
    W.lo[1 - ax] = -th;
    W.hi[1 - ax] = th;
    BalanceOptions bo = cfg.balance;
    bo.seed = derive_seed(cfg.seed, 1, id);
    BalanceReport rep;
    SmoothMap s = balance_volumes(pull_back(*f, h1, fr), {W}, cl, bo, &rep, fr);
    a.h = s.then(h1);
    fairness(a, rep, fr);
    for (int v : vs) {
      Box2 Dv = Box2::centered(vertex(v), (1 + cfg.rho) * cfg.margins.w(0) * L(0, v));
      assert_equal(a.h, out[0][v].h, Dv, "edge and end point", 1, id);
    }
    finish(a, *H);
    return a;
  }

  CellAssignment square_cell(int id, HoleEntry& he) const {
    CellAssignment a;
    a.m = 2;
    a.id = id;
    he.square = id;
    if (frozen[2][id]) {
      a.h = input_chain();
      return a;
    }
    a.provenance = Provenance::constructed;
    const CellRecord& r = d.cells(2)[id];
    const StageGeometry& g = cfg.geometry;
    Box2 xb = r.cell.box();
    double Lx = xb.size().x();
    auto H = affine_seed(*f, xb.center(), cfg.tau_in);

    std::vector<Vec2> vp;
    std::vector<Box2> eb;
    std::vector<int> eax;
    std::vector<SmoothMap> pieces;
    for (int v : r.sub[0]) {
      vp.push_back(vertex(v));
      pieces.push_back(out[0][v].h);
    }
    for (int e : r.sub[1]) {
      const DyadicCell& c = d.cells(1)[e].cell;
      eb.push_back(c.box());
      eax.push_back(c.b[0] ? 0 : 1);
      pieces.push_back(out[1][e].h);
    }
    double rv = g.sq_vertex * Lx;
    auto locate = [vp, eb, eax, xb, rv](const Vec2& z) -> int {
      for (size_t k = 0; k < vp.size(); ++k)
        if ((z - vp[k]).cwiseAbs().maxCoeff() <= rv) return int(k);
      double dep[4] = {z.x() - xb.lo.x(), xb.hi.x() - z.x(), z.y() - xb.lo.y(), xb.hi.y() - z.y()};
      int s = int(std::min_element(dep, dep + 4) - dep);
      int ax = s < 2 ? 1 : 0;  // axis of the edges on that side
      double at = s == 0 ? xb.lo.x() : s == 1 ? xb.hi.x() : s == 2 ? xb.lo.y() : xb.hi.y();
      for (size_t k = 0; k < eb.size(); ++k)
        if (eax[k] == ax && eb[k].lo[1 - ax] == at && z[ax] >= eb[k].lo[ax] && z[ax] <= eb[k].hi[ax])
          return int(vp.size() + k);
      return -1;
    };
    auto glue = std::make_shared<GluePrim>(locate, pieces, H, "frame");

    ExtensionProblem pb;
    pb.tol_hole = cfg.tol_hole;
    pb.germs.push_back({Cutoff::frame(xb, g.sq_blend0 * Lx, g.sq_blend1 * Lx), SmoothMap({glue})});
    pb.holes.push_back({xb.inflated(-g.sq_outer * Lx), xb.inflated(-g.sq_inner * Lx)});
    SmoothMap g0 = smooth_extend(pb, H);
    CorrectionOptions co;
    co.h = g.sq_h * Lx;
    co.steps = cfg.moser_steps;
    std::vector<HoleReport> hr;
    a.h = correct_volume(g0, pb, co, &hr);
    a.bytes = hr[0].bytes;
    a.correction_mass = hr[0].mass;

    // the hole left inside x by the neighbourhoods of its boundary cells, and its image
    std::vector<Box2> cut;
    std::vector<Band> bands;
    for (int v : r.sub[0]) cut.push_back(Box2::centered(vertex(v), cfg.margins.w(0) * L(0, v)));
    for (int e : r.sub[1]) cut.push_back(d.cells(1)[e].cell.box().inflated(cfg.margins.w(1) * L(1, e)));
    double fine = Lx;
    for (const SmoothMap& p : pieces)
      for (const PrimitivePtr& q : p.chain())
        if (auto sh = std::dynamic_pointer_cast<const ShearPrim>(q)) {
          auto [lo, hi] = sh->band();
          bands.push_back({1 - sh->axis(), lo, hi});
          fine = std::min(fine, (hi - lo) / 16);
        }
    Polygon corners = hole_boundary(xb, cut);
    Polygon ring = refine_polygon(corners, Lx / 256, fine, bands);
    Polygon img, half;
    img.reserve(ring.size());
    for (const Vec2& z : ring) img.push_back(a.h.eval(z));
    for (size_t k = 0; k < img.size(); k += 2) half.push_back(img[k]);
    double A = polygon_area(img);
    a.hole = A - polygon_area(corners);
    // decimation estimate plus the rounding of the shoelace sums
    a.hole_error = std::abs(A - polygon_area(half)) + 1e-13 * Lx * Lx;
    for (int k = 0; k < 2; ++k)
      for (int c : r.sub[k])
        for (const FairnessEntry& e : out[k][c].fairness)
          if (e.square == id) {
            a.hole_budget += std::abs(e.residual);
            a.hole_signed -= e.residual;
            a.hole_error += e.error;
          }
    he.hole = a.hole;
    he.error = a.hole_error;
    he.budget = a.hole_budget;
    he.signed_sum = a.hole_signed;

    for (size_t k = 0; k < r.sub[0].size(); ++k) {
      int v = r.sub[0][k];
      Box2 Dv = Box2::centered(vp[k], (1 + cfg.rho) * cfg.margins.w(0) * L(0, v));
      assert_equal(a.h, out[0][v].h, Dv, "square and vertex", 2, id);
    }
    for (int e : r.sub[1]) {
      Box2 De = intersect(d.cells(1)[e].cell.box().inflated((1 + cfg.rho) * cfg.margins.w(1) * L(1, e)), xb);
      assert_equal(a.h, out[1][e].h, De, "square and edge", 2, id);
    }
    finish(a, *H);
    return a;
  }

  void stage(int m, StageSummary& sum, std::vector<HoleEntry>* holes) {
    auto t0 = Clock::now();
    int n = int(d.count(m));
    out[m].assign(n, {});
    if (holes) holes->assign(n, {});
    parallel_for(n, cfg.threads, [&](int i) {
      auto c0 = Clock::now();
      try {
        if (m == 0) out[0][i] = vertex_cell(i);
        if (m == 1) out[1][i] = edge_cell(i);
        if (m == 2) out[2][i] = square_cell(i, (*holes)[i]);
      } catch (const Error& e) {
        throw Error(e.code(), e.detail() + " [cell " + d.cells(m)[i].cell.str() + "]");
      }
      out[m][i].seconds = seconds_since(c0);
    });
    sum.cells = n;
    sum.histogram.assign(15, 0);
    double acc = 0.0;
    for (const CellAssignment& a : out[m]) {
      if (a.provenance == Provenance::frozen) {
        ++sum.frozen;
        continue;
      }
      ++sum.constructed;
      sum.fairness_max = std::max(sum.fairness_max, a.nice.fairness);
      acc += a.nice.fairness;
      sum.c1_max = std::max(sum.c1_max, a.nice.c1);
      sum.regularity_max = std::max(sum.regularity_max, a.nice.regularity);
      sum.bytes += a.bytes;
      sum.primitives += a.primitives;
      if (m < 2) {
        int b = a.nice.fairness > 0 ? int(std::floor(std::log10(a.nice.fairness))) + 16 : 0;
        ++sum.histogram[std::clamp(b, 0, 14)];
      }
    }
    sum.fairness_mean = sum.constructed ? acc / sum.constructed : 0.0;
    sum.seconds = seconds_since(t0);
  }
};

}  // namespace

Regularized regularize(InputMapPtr f, std::shared_ptr<const RegionSpec> U, const PipelineConfig& cfg) {
  cfg.validate();
  if (!f || !U) throw Error(ErrorCode::invalid_parameter, "null map or region");
  auto t0 = Clock::now();
  WhitneyOptions wo;
  wo.t_max = cfg.t_max;
  auto d = std::make_shared<WhitneyDecomposition>(whitney_decompose(U, cfg.epsilon, wo));
  Pipeline P{f, *d, cfg, {}, {}};
  P.mark_frozen();
  Regularized R;
  R.decomposition = d;
  P.stage(0, R.report.stages[0], nullptr);
  P.stage(1, R.report.stages[1], nullptr);
  P.stage(2, R.report.stages[2], &R.report.holes);
  R.report.holes.erase(std::remove_if(R.report.holes.begin(), R.report.holes.end(),
                                      [&](const HoleEntry& h) { return P.frozen[2][h.square]; }),
                       R.report.holes.end());

  std::vector<SmoothMap> squares;
  for (const CellAssignment& a : P.out[2]) squares.push_back(a.h);
  auto locate = [d](const Vec2& z) { return d->locate(z); };
  R.map = SmoothMap({std::make_shared<GluePrim>(locate, std::move(squares), std::make_shared<InputPrim>(f), "cells")});
  R.cells = std::move(P.out);
  R.frozen = std::move(P.frozen);
  for (char c : R.frozen[2]) R.report.processed += !c;
  R.report.map = f->describe();
  R.report.config = config_to_json(cfg);
  R.report.seed = cfg.seed;
  R.report.seconds = seconds_since(t0);
  return R;
}

}  // namespace conreg
