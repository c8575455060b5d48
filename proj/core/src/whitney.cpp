#include <conreg/dyadic.hpp>

#include <cmath>
#include <unordered_set>

namespace conreg {

namespace {

using Lat = std::array<int64_t, kMaxDim>;

int64_t floor_div(int64_t p, int64_t q) {
  int64_t d = p / q;
  if ((p % q != 0) && ((p < 0) != (q < 0))) --d;
  return d;
}

int64_t pow2(int e) { return int64_t(1) << e; }

// closed box of a cell in lattice units
void lattice_box(const DyadicCell& c, int T, Lat& lo, Lat& hi) {
  int64_t f = pow2(T - c.t);
  for (int k = 0; k < c.n; ++k) {
    lo[k] = c.a[k] * f;
    hi[k] = (c.a[k] + c.b[k]) * f;
  }
}

DyadicCell vertex_key(int n, int T, const Lat& p) {
  DyadicCell v;
  v.n = n;
  v.t = T;
  for (int k = 0; k < n; ++k) v.a[k] = p[k];
  return v;
}

struct Builder {
  WhitneyDecomposition* d;
  int n, T, tmin, tmax;
  const std::unordered_map<DyadicCell, int, CellKeyHash>* squares;

  // ids of n-cells containing the lattice point p
  void containing(const Lat& p, std::vector<int>& out) const {
    out.clear();
    for (int s = tmin; s <= tmax; ++s) {
      int64_t q = pow2(T - s);
      std::array<std::array<int64_t, 2>, kMaxDim> cand{};
      std::array<int, kMaxDim> nc{};
      for (int k = 0; k < n; ++k) {
        int64_t i = floor_div(p[k], q);
        cand[k][0] = i;
        nc[k] = 1;
        if (i * q == p[k]) cand[k][nc[k]++] = i - 1;
      }
      int total = 1;
      for (int k = 0; k < n; ++k) total *= nc[k];
      for (int c = 0; c < total; ++c) {
        DyadicCell x;
        x.n = n;
        x.t = s;
        int r = c;
        for (int k = 0; k < n; ++k) {
          x.a[k] = cand[k][r % nc[k]];
          r /= nc[k];
          x.b[k] = 1;
        }
        auto it = squares->find(x);
        if (it != squares->end()) out.push_back(it->second);
      }
    }
  }
};

}  // namespace

WhitneyDecomposition whitney_decompose(std::shared_ptr<const RegionSpec> domain, double epsilon,
                                       const WhitneyOptions& opt) {
  if (!domain) throw Error(ErrorCode::invalid_parameter, "null domain");
  int n = domain->dim();
  if (n < 1 || n > kMaxDim) throw Error(ErrorCode::invalid_parameter, "dimension");
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw Error(ErrorCode::invalid_parameter, "epsilon");
  if (opt.t_max > opt.max_depth) throw Error(ErrorCode::depth_exceeded, "t_max beyond max_depth");

  auto bb = domain->bbox();
  double ext = 0;
  for (int k = 0; k < n; ++k) ext = std::max(ext, bb[n + k] - bb[k]);
  if (!(ext > 0)) throw Error(ErrorCode::empty_domain, "empty bounding box");
  int t0 = -int(std::ceil(std::log2(ext)));
  int T = opt.t_max + 3;
  double reach = 0;
  for (int k = 0; k < 2 * n; ++k) reach = std::max(reach, std::abs(bb[k]) + ext);
  if (T - t0 > 60 || std::ldexp(reach, T) > 4e18) throw Error(ErrorCode::depth_exceeded, "lattice overflow");

  WhitneyDecomposition d;
  d.n_ = n;
  d.eps_ = epsilon;
  d.tmax_ = opt.t_max;
  d.T_ = T;
  d.dom_ = domain;

  std::vector<DyadicCell> stack;
  {
    Lat lo{}, hi{};
    for (int k = 0; k < n; ++k) {
      lo[k] = int64_t(std::floor(std::ldexp(bb[k], t0)));
      hi[k] = int64_t(std::floor(std::ldexp(bb[n + k], t0)));
    }
    Lat i = lo;
    while (true) {
      DyadicCell c;
      c.n = n;
      c.t = t0;
      for (int k = 0; k < n; ++k) {
        c.a[k] = i[k];
        c.b[k] = 1;
      }
      stack.push_back(c);
      int k = 0;
      while (k < n && ++i[k] > hi[k]) {
        i[k] = lo[k];
        ++k;
      }
      if (k == n) break;
    }
  }

  auto& sq = d.cells_[n];
  auto& sqi = d.index_[n];
  int tmin = opt.t_max;
  while (!stack.empty()) {
    DyadicCell x = stack.back();
    stack.pop_back();
    std::array<double, kMaxDim> c{};
    for (int k = 0; k < n; ++k) c[k] = 0.5 * (x.lo(k) + x.hi(k));
    if (!domain->may_intersect_ball(c.data(), 0.5 * x.side())) continue;
    if (epsilon_small(*domain, x, epsilon)) {
      CellRecord r;
      r.cell = x;
      r.rank = x.t;
      sqi.emplace(x, int(sq.size()));
      sq.push_back(std::move(r));
      tmin = std::min(tmin, x.t);
      if (long(sq.size()) > opt.max_cells) throw Error(ErrorCode::depth_exceeded, "too many cells");
      continue;
    }
    if (x.t >= opt.t_max) continue;
    for (int ch = 0; ch < (1 << n); ++ch) {
      DyadicCell y;
      y.n = n;
      y.t = x.t + 1;
      for (int k = 0; k < n; ++k) {
        y.a[k] = 2 * x.a[k] + ((ch >> k) & 1);
        y.b[k] = 1;
      }
      stack.push_back(y);
    }
  }
  if (sq.empty()) throw Error(ErrorCode::empty_domain, "no epsilon-small cells down to t_max");
  d.tmin_ = tmin;

  Builder bld{&d, n, T, tmin, opt.t_max, &sqi};

  // candidate faces of every good n-cell, at the cell's own scale
  std::array<std::unordered_set<DyadicCell, CellKeyHash>, kMaxDim> seen;
  std::vector<std::vector<DyadicCell>> cand(n);
  int combos = 1;
  for (int k = 0; k < n; ++k) combos *= 3;
  for (const CellRecord& r : sq) {
    for (int c = 0; c < combos - 1; ++c) {
      DyadicCell y;
      y.n = n;
      y.t = r.cell.t;
      int q = c;
      for (int k = 0; k < n; ++k) {
        int st = q % 3;
        q /= 3;
        y.a[k] = r.cell.a[k] + (st == 1 ? 1 : 0);
        y.b[k] = st == 2 ? 1 : 0;
      }
      int m = y.m();
      if (m == n) continue;
      if (m == 0) {
        Lat lo{}, hi{};
        lattice_box(y, T, lo, hi);
        y = vertex_key(n, T, lo);
      }
      if (seen[m].insert(y).second) cand[m].push_back(y);
    }
  }

  std::vector<int> hits, all;
  for (int m = 0; m < n; ++m) {
    for (const DyadicCell& y : cand[m]) {
      Lat ylo{}, yhi{};
      lattice_box(y, T, ylo, yhi);
      // sample int(y) on an eighth-grid of its own scale
      int64_t step = m ? pow2(T - y.t - 3) : 0;
      int ns = 1;
      for (int k = 0; k < m; ++k) ns *= 7;
      all.clear();
      bool complete = true;
      std::array<int, kMaxDim> freek{};
      int nf = 0;
      for (int k = 0; k < n; ++k)
        if (y.b[k]) freek[nf++] = k;
      for (int s = 0; s < ns; ++s) {
        Lat p = ylo;
        int q = s;
        for (int i = 0; i < nf; ++i) {
          p[freek[i]] += step * (1 + q % 7);
          q /= 7;
        }
        bld.containing(p, hits);
        for (int o = 0; o < (1 << n) && complete; ++o) {
          bool cov = false;
          for (int id : hits) {
            Lat lo{}, hi{};
            lattice_box(sq[id].cell, T, lo, hi);
            bool ok = true;
            for (int k = 0; k < n && ok; ++k)
              ok = ((o >> k) & 1) ? (lo[k] <= p[k] && p[k] < hi[k]) : (lo[k] < p[k] && p[k] <= hi[k]);
            if (ok) {
              cov = true;
              break;
            }
          }
          complete = cov;
        }
        all.insert(all.end(), hits.begin(), hits.end());
      }
      std::sort(all.begin(), all.end());
      all.erase(std::unique(all.begin(), all.end()), all.end());
      if (all.empty()) continue;
      // an n-cell with an uncovered face borders the truncated part of the domain
      if (!complete)
        for (int id : all) sq[id].complete = false;
      Lat ilo{}, ihi{};
      lattice_box(sq[all[0]].cell, T, ilo, ihi);
      int rk = sq[all[0]].cell.t;
      for (int id : all) {
        Lat lo{}, hi{};
        lattice_box(sq[id].cell, T, lo, hi);
        for (int k = 0; k < n; ++k) {
          ilo[k] = std::max(ilo[k], lo[k]);
          ihi[k] = std::min(ihi[k], hi[k]);
        }
        rk = std::max(rk, sq[id].cell.t);
      }
      if (ilo != ylo || ihi != yhi) continue;
      CellRecord r;
      r.cell = y;
      if (m == 0) {
        // store vertices at their rank scale
        r.cell.t = rk;
        for (int k = 0; k < n; ++k) r.cell.a[k] = ylo[k] / pow2(T - rk);
      }
      r.rank = rk;
      r.complete = complete;
      r.incident = all;
      d.index_[m].emplace(y, int(d.cells_[m].size()));
      d.cells_[m].push_back(std::move(r));
    }
  }

  // sub-cells: faces of squares from the incidence lists, faces of faces by lookup
  for (int m = 0; m < n; ++m)
    for (int id = 0; id < int(d.cells_[m].size()); ++id)
      for (int x : d.cells_[m][id].incident) sq[x].sub[m].push_back(id);
  for (int m = 1; m < n; ++m) {
    for (CellRecord& r : d.cells_[m]) {
      int nc = 1;
      for (int k = 0; k < m; ++k) nc *= 3;
      for (int c = 0; c < nc - 1; ++c) {
        DyadicCell y = r.cell;
        int q = c;
        for (int k = 0; k < n; ++k) {
          if (!r.cell.b[k]) continue;
          int st = q % 3;
          q /= 3;
          y.a[k] = r.cell.a[k] + (st == 1 ? 1 : 0);
          y.b[k] = st == 2 ? 1 : 0;
        }
        int k2 = y.m();
        int id = d.find(y);
        if (id >= 0) r.sub[k2].push_back(id);
      }
    }
  }

  // a cell whose boundary is not tiled by good cells ends on the truncated part
  if (n == 2) {
    for (CellRecord& r : d.cells_[1])
      if (r.sub[0].size() < 2) r.complete = false;
    for (CellRecord& r : sq) {
      double len = 0.0;
      for (int e : r.sub[1]) len += d.cells_[1][e].cell.side();
      if (len < 4.0 * r.cell.side()) r.complete = false;
    }
  }

  // incompleteness spreads upward from faces
  for (int m = 1; m <= n; ++m)
    for (CellRecord& r : d.cells_[m])
      for (int k = 0; k < m && r.complete; ++k)
        for (int id : r.sub[k])
          if (!d.cells_[k][id].complete) {
            r.complete = false;
            break;
          }
  return d;
}

int WhitneyDecomposition::find(const DyadicCell& c) const {
  int m = c.m();
  if (c.n != n_ || m > n_) return -1;
  DyadicCell key = c;
  if (m == 0) {
    if (c.t > T_) return -1;
    for (int k = 0; k < n_; ++k) key.a[k] = c.a[k] * pow2(T_ - c.t);
    key.t = T_;
  }
  auto it = index_[m].find(key);
  return it == index_[m].end() ? -1 : it->second;
}

std::vector<int> WhitneyDecomposition::containing(const Vec2& z) const {
  std::vector<int> out;
  if (n_ != 2) return out;
  for (int s = tmin_; s <= tmax_; ++s) {
    double u = std::ldexp(z.x(), s), v = std::ldexp(z.y(), s);
    int64_t i = int64_t(std::floor(u)), j = int64_t(std::floor(v));
    int ni = (double(i) == u) ? 2 : 1, nj = (double(j) == v) ? 2 : 1;
    for (int a = 0; a < ni; ++a)
      for (int b = 0; b < nj; ++b) {
        DyadicCell x;
        x.n = 2;
        x.t = s;
        x.a = {i - a, j - b, 0};
        x.b = {1, 1, 0};
        auto it = index_[2].find(x);
        if (it != index_[2].end()) out.push_back(it->second);
      }
  }
  return out;
}

int WhitneyDecomposition::locate(const Vec2& z) const {
  std::vector<int> c = containing(z);
  for (int id : c) {
    double p[2] = {z.x(), z.y()};
    if (cells_[2][id].cell.in_interior(p)) return id;
  }
  return c.empty() ? -1 : c.front();
}

int rank(const WhitneyDecomposition& d, const DyadicCell& x) {
  int id = d.find(x);
  if (id < 0) throw Error(ErrorCode::unknown_cell, "not a good cell: " + x.str());
  return d.cells(x.m())[id].rank;
}

std::vector<std::pair<int, int>> subcells(const WhitneyDecomposition& d, int m, int id) {
  if (m < 0 || m > d.n() || id < 0 || id >= int(d.count(m))) throw Error(ErrorCode::unknown_cell, "cell id");
  std::vector<std::pair<int, int>> out;
  const CellRecord& r = d.cells(m)[id];
  for (int k = 0; k < m; ++k)
    for (int s : r.sub[k]) out.emplace_back(k, s);
  return out;
}

CellNeighborhoods neighborhoods(const WhitneyDecomposition& d, int m, int id, const Margins& mg) {
  if (d.n() != 2) throw Error(ErrorCode::invalid_parameter, "neighbourhoods are planar");
  if (m < 0 || m > 2 || id < 0 || id >= int(d.count(m))) throw Error(ErrorCode::unknown_cell, "cell id");
  const CellRecord& r = d.cells(m)[id];
  auto dbox = [&](int k, int j) {
    const CellRecord& c = d.cells(k)[j];
    return c.cell.box().inflated(mg.w(k) * std::ldexp(1.0, -c.rank));
  };
  CellNeighborhoods nb;
  nb.dD = mg.w(m) * std::ldexp(1.0, -r.rank);
  nb.dGlue = mg.glue(m) * std::ldexp(1.0, -r.rank);
  Box2 D = dbox(m, id);
  nb.D.plus = {D};
  nb.J.plus = {D};
  nb.B.plus = {D};
  std::vector<int> inc = m == 2 ? std::vector<int>{id} : r.incident;
  for (auto [k, j] : subcells(d, m, id)) {
    Box2 b = dbox(k, j);
    nb.I.plus.push_back(b);
    nb.J.minus.push_back(b);
    nb.B.plus.push_back(b);
    const auto& ci = d.cells(k)[j].incident;
    inc.insert(inc.end(), ci.begin(), ci.end());
  }
  std::sort(inc.begin(), inc.end());
  inc.erase(std::unique(inc.begin(), inc.end()), inc.end());
  for (int x : inc) nb.R.plus.push_back(d.cells(2)[x].cell.box());
  return nb;
}

}  // namespace conreg
