#include <conreg/mass_mover.hpp>
#include <conreg/smooth.hpp>

#include <cmath>
#include <cstdio>

namespace conreg {

BallCluster BallCluster::make(int n, std::vector<int> S, double delta) {
  if (n < 1) throw Error(ErrorCode::invalid_parameter, "dimension");
  if (int(S.size()) > n - 1) throw Error(ErrorCode::invalid_parameter, "k must be at most n-1");
  for (size_t i = 0; i < S.size(); ++i) {
    if (S[i] < 0 || S[i] >= n) throw Error(ErrorCode::invalid_parameter, "axis index");
    for (size_t j = 0; j < i; ++j)
      if (S[j] == S[i]) throw Error(ErrorCode::invalid_parameter, "repeated axis");
  }
  if (!(delta > 0.0 && delta < 0.1)) throw Error(ErrorCode::invalid_parameter, "delta must lie in (0, 1/10)");
  return {n, std::move(S), delta};
}

std::vector<Corner> BallCluster::points() const {
  std::vector<int> freeax;
  for (int i = 0; i < n; ++i)
    if (std::find(S.begin(), S.end(), i) == S.end()) freeax.push_back(i);
  std::vector<Corner> out;
  int m = int(freeax.size());
  for (int mask = 0; mask < (1 << m); ++mask) {
    Corner p(n, 0);
    for (int j = 0; j < m; ++j) p[freeax[j]] = ((mask >> j) & 1) ? 1 : -1;
    out.push_back(p);
  }
  return out;
}

bool adjacent(const Corner& a, const Corner& b) {
  if (a.size() != b.size()) return false;
  int diff = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    int d = a[i] - b[i];
    if (d == 0) continue;
    if (std::abs(d) != 2) return false;
    ++diff;
  }
  return diff == 1;
}

std::vector<Corner> gray_path(const BallCluster& c) {
  std::vector<int> freeax;
  for (int i = 0; i < c.n; ++i)
    if (std::find(c.S.begin(), c.S.end(), i) == c.S.end()) freeax.push_back(i);
  int m = int(freeax.size());
  std::vector<Corner> out;
  for (int i = 0; i < (1 << m); ++i) {
    int g = i ^ (i >> 1);
    Corner p(c.n, 0);
    for (int j = 0; j < m; ++j) p[freeax[j]] = ((g >> j) & 1) ? 1 : -1;
    out.push_back(p);
  }
  return out;
}

Vec2 corner2(const Corner& p) {
  if (p.size() != 2) throw Error(ErrorCode::invalid_parameter, "planar corner expected");
  return {double(p[0]), double(p[1])};
}

PrimitivePtr build_shear(const BallCluster& c, const Vec2& p, const Vec2& pp, double t, const Frame& fr) {
  if (!(std::abs(t) < c.delta / 100.0)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "|t| = %.3e not below delta/100 = %.3e", std::abs(t), c.delta / 100.0);
    throw Error(ErrorCode::amplitude_exceeded, buf);
  }
  ShearPrim::Geometry g{fr.center, fr.scale, p, pp, c.delta};
  return std::make_shared<ShearPrim>(g, t);
}

double channel_flux(const BallCluster& c) {
  int n = 4000;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    double u = -1.0 + 2.0 * i / n;
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * channel_bump(u).f;
  }
  s *= (2.0 / n) / 3.0;
  return 2.0 * (c.delta / 4.0) * s;
}

std::vector<VolumeEstimate> ball_volumes(const MapLike& F, const SmoothMap& s, const std::vector<Box2>& W,
                                         const std::vector<Vec2>& balls, double h, double h_fine,
                                         const std::vector<Band>& bands) {
  std::vector<VolumeEstimate> out(balls.size());
  for (const Box2& b : W) {
    Polygon poly = box_boundary(b, h, h_fine, bands);
    for (Vec2& z : poly) z = F.eval(s.eval(z));
    for (size_t j = 0; j < balls.size(); ++j) {
      VolumeEstimate e = clipped_area(poly, unit_ball(balls[j]));
      out[j].value += e.value;
      out[j].error += e.error;
    }
  }
  return out;
}

namespace {

struct Tracker {
  const MapLike& F;
  std::vector<Vec2> balls;
  std::vector<Polygon> cur, img;  // sheared boundary points and their images

  std::vector<VolumeEstimate> volumes(const std::vector<Polygon>& im) const {
    std::vector<VolumeEstimate> v(balls.size());
    for (const Polygon& p : im)
      for (size_t j = 0; j < balls.size(); ++j) {
        VolumeEstimate e = clipped_area(p, unit_ball(balls[j]));
        v[j].value += e.value;
        v[j].error += e.error;
      }
    return v;
  }
  double volume(const std::vector<Polygon>& im, size_t j) const {
    double s = 0.0;
    for (const Polygon& p : im) s += polygon_area(clip_to_box(p, unit_ball(balls[j])));
    return s;
  }
};

}  // namespace

SmoothMap balance_volumes(const MapLike& F, const std::vector<Box2>& W, const BallCluster& c,
                          const BalanceOptions& opt, BalanceReport* report, const Frame& fr,
                          const std::function<Vec2(const Vec2&)>& F_inverse) {
  if (c.n != 2) throw Error(ErrorCode::invalid_parameter, "volume balancing is planar");
  if (W.empty()) throw Error(ErrorCode::invalid_geometry, "empty region");
  std::vector<Corner> path = gray_path(c);
  std::vector<Vec2> balls;
  for (const Corner& p : path) balls.push_back(corner2(p));

  // the delta-neighbourhood of W inside the union of balls, and B(0, delta) inside W
  Box2 hull = unit_ball(balls[0]);
  for (const Vec2& b : balls) {
    hull.lo = hull.lo.cwiseMin(b - Vec2(1, 1));
    hull.hi = hull.hi.cwiseMax(b + Vec2(1, 1));
  }
  for (const Box2& b : W)
    if (!hull.contains(b.inflated(c.delta))) throw Error(ErrorCode::invalid_geometry, "W too close to the cluster boundary");
  for (int j = 0; j <= 8; ++j)
    for (int i = 0; i <= 8; ++i) {
      Vec2 z(-c.delta + i * c.delta / 4, -c.delta + j * c.delta / 4);
      bool in = false;
      for (const Box2& b : W) in = in || b.contains(z);
      if (!in) throw Error(ErrorCode::invalid_geometry, "W does not contain B(0, delta)");
    }

  std::vector<Band> bands;
  for (size_t l = 0; l + 1 < path.size(); ++l) {
    ShearPrim probe({Vec2::Zero(), 1.0, balls[l], balls[l + 1], c.delta}, 0.0);
    auto [lo, hi] = probe.band();
    bands.push_back({1 - probe.axis(), lo, hi});
  }

  Tracker tr{F, balls, {}, {}};
  for (const Box2& b : W) {
    tr.cur.push_back(box_boundary(b, opt.boundary_h, opt.fine_h, bands));
    Polygon im = tr.cur.back();
    for (Vec2& z : im) z = F.eval(z);
    tr.img.push_back(std::move(im));
  }
  std::vector<double> target(balls.size(), 0.0);
  for (const Box2& b : W)
    for (size_t j = 0; j < balls.size(); ++j) target[j] += intersect(b, unit_ball(balls[j])).area();

  BalanceReport rep;
  rep.path = balls;
  rep.target = target;
  std::vector<std::pair<size_t, double>> chosen;
  double tmax = 0.999 * c.delta / 100.0;

  for (size_t l = 0; l + 1 < path.size(); ++l) {
    BalanceStep st;
    st.p = balls[l];
    st.pp = balls[l + 1];
    auto before = tr.volumes(tr.img);
    for (auto& v : before) st.before.push_back(v.value);

    ShearPrim base({Vec2::Zero(), 1.0, st.p, st.pp, c.delta}, 0.0);
    auto [blo, bhi] = base.band();
    int ta = 1 - base.axis();
    // boundary points the channel can move
    std::vector<std::vector<size_t>> moved(tr.cur.size());
    for (size_t i = 0; i < tr.cur.size(); ++i)
      for (size_t k = 0; k < tr.cur[i].size(); ++k)
        if (tr.cur[i][k][ta] > blo && tr.cur[i][k][ta] < bhi) moved[i].push_back(k);

    auto trial = [&](double t, std::vector<Polygon>* cur_out) {
      ShearPrim sh({Vec2::Zero(), 1.0, st.p, st.pp, c.delta}, t);
      std::vector<Polygon> im = tr.img;
      for (size_t i = 0; i < tr.cur.size(); ++i)
        for (size_t k : moved[i]) {
          Vec2 w = sh.eval(tr.cur[i][k]);
          im[i][k] = F.eval(w);
          if (cur_out) (*cur_out)[i][k] = w;
        }
      return im;
    };
    auto g = [&](double t) { return tr.volume(trial(t, nullptr), l) - target[l]; };

    double t = 0.0;
    double g0 = g(0.0);
    int it = 0;
    if (std::abs(g0) > opt.eta / 10) {
      double a = -tmax, b = tmax, ga = g(a), gb = g(b);
      if (ga * gb > 0) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "ball (%g,%g): imbalance %.3e not reachable with |t| < delta/100", st.p.x(),
                      st.p.y(), g0);
        throw Error(ErrorCode::f_too_far, buf);
      }
      // Illinois regula falsi
      int side = 0;
      t = 0.0;
      for (it = 1; it <= opt.max_iter; ++it) {
        t = (a * gb - b * ga) / (gb - ga);
        double gt = g(t);
        if (std::abs(gt) <= opt.eta / 10) break;
        if (gt * gb > 0) {
          b = t;
          gb = gt;
          if (side == 1) ga *= 0.5;
          side = 1;
        } else {
          a = t;
          ga = gt;
          if (side == -1) gb *= 0.5;
          side = -1;
        }
      }
      if (it > opt.max_iter) throw Error(ErrorCode::nonconvergent, "volume balance did not converge");
    }
    st.t = t;
    st.iterations = it;
    if (t != 0.0) {
      std::vector<Polygon> nc = tr.cur;
      tr.img = trial(t, &nc);
      tr.cur = std::move(nc);
      chosen.emplace_back(l, t);
    }
    auto after = tr.volumes(tr.img);
    for (size_t j = 0; j < balls.size(); ++j) {
      st.after.push_back(after[j].value);
      if (j == l || j == l + 1) continue;
      st.locality = std::max(st.locality, std::abs(after[j].value - before[j].value));
    }
    rep.locality_max = std::max(rep.locality_max, st.locality);
    if (st.locality > opt.locality_tol) rep.locality_ok = false;
    rep.steps.push_back(std::move(st));
  }

  auto fin = tr.volumes(tr.img);
  double sa = 0, stg = 0;
  for (size_t j = 0; j < balls.size(); ++j) {
    rep.achieved.push_back(fin[j].value);
    rep.error.push_back(fin[j].error);
    rep.max_residual = std::max(rep.max_residual, std::abs(fin[j].value - target[j]));
    sa += fin[j].value;
    stg += target[j];
    rep.conservation_error += fin[j].error;
  }
  rep.conservation = sa - stg;

  std::vector<PrimitivePtr> unit_chain, chain;
  for (auto [l, t] : chosen) {
    unit_chain.push_back(build_shear(c, balls[l], balls[l + 1], t));
    chain.push_back(build_shear(c, balls[l], balls[l + 1], t, fr));
  }

  if (opt.qmc_budget > 0 && F_inverse) {
    SmoothMap sinv = invert(SmoothMap(unit_chain));
    for (size_t j = 0; j < balls.size(); ++j) {
      auto inside = [&](const Vec2& z) {
        Vec2 w = sinv.eval(F_inverse(z));
        for (const Box2& b : W)
          if (b.contains(w)) return true;
        return false;
      };
      VolumeEstimate e = region_volume(inside, unit_ball(balls[j]), derive_seed(opt.seed, j), opt.qmc_budget);
      rep.qmc.push_back(e.value);
      rep.qmc_error.push_back(e.error);
      rep.qmc_max_residual = std::max(rep.qmc_max_residual, std::abs(e.value - target[j]));
    }
  }
  if (report) *report = std::move(rep);
  return SmoothMap(std::move(chain));
}

}  // namespace conreg
