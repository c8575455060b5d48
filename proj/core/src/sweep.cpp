#include <conreg/smooth.hpp>
#include <conreg/sweep.hpp>

#include <cmath>

namespace conreg {

Lattice Lattice::covering(const Box2& box, double h) {
  if (!(h > 0.0) || box.empty()) throw Error(ErrorCode::invalid_parameter, "lattice spacing or box");
  Lattice L;
  L.origin = box.lo;
  L.nx = std::max(1, int(std::ceil(box.size().x() / h - 1e-9)));
  L.ny = std::max(1, int(std::ceil(box.size().y() / h - 1e-9)));
  L.hx = box.size().x() / L.nx;
  L.hy = box.size().y() / L.ny;
  return L;
}

std::vector<double> quasi_interpolate(const Lattice& L, const std::function<double(const Vec2&)>& phi) {
  std::vector<double> f(L.size()), g(L.size()), c(L.size());
  for (int j = 0; j <= L.ny; ++j)
    for (int i = 0; i <= L.nx; ++i) f[L.idx(i, j)] = phi(L.node(i, j));
  auto at = [&](const std::vector<double>& a, int i, int j) {
    return (i < 0 || j < 0 || i > L.nx || j > L.ny) ? 0.0 : a[L.idx(i, j)];
  };
  for (int j = 0; j <= L.ny; ++j)
    for (int i = 0; i <= L.nx; ++i) g[L.idx(i, j)] = quasi_interp_cubic(at(f, i - 1, j), at(f, i, j), at(f, i + 1, j));
  for (int j = 0; j <= L.ny; ++j)
    for (int i = 0; i <= L.nx; ++i) c[L.idx(i, j)] = quasi_interp_cubic(at(g, i, j - 1), at(g, i, j), at(g, i, j + 1));
  return c;
}

Box2 strip_box(const Lattice& L, const Strip& s) {
  return {L.node(s.i0 - 2, s.j0 - 2), L.node(s.i1 + 2, s.j1 + 2)};
}

namespace {

// smooth positive weights over [k0, k1] summing to 1 / h
std::vector<double> transport_profile(int k0, int k1, double h) {
  std::vector<double> r(k1 - k0 + 1);
  double mid = 0.5 * (k0 + k1), half = 0.5 * (k1 - k0) + 1.0, s = 0.0;
  for (int k = k0; k <= k1; ++k) s += r[k - k0] = channel_bump((k - mid) / half).f;
  for (double& x : r) x /= s * h;
  return r;
}

}  // namespace

std::shared_ptr<SplineFlow<float>> sweep_strip(const Lattice& L, const std::vector<double>& c, const Strip& s) {
  int ni = s.i1 - s.i0 + 1, nj = s.j1 - s.j0 + 1;
  if (ni < 1 || nj < 1) throw Error(ErrorCode::invalid_parameter, "empty strip");
  auto C = [&](int a, int b) { return c[L.idx(s.i0 + a, s.j0 + b)]; };
  SplineAxis cx{L.origin.x(), L.hx, ni, 3, double(s.i0)};
  SplineAxis cy{L.origin.y(), L.hy, nj, 3, double(s.j0)};
  SplineAxis qx{L.origin.x(), L.hx, ni - 1, 4, s.i0 + 0.5};
  SplineAxis qy{L.origin.y(), L.hy, nj - 1, 4, s.j0 + 0.5};
  TensorSpline<float> v1, v2;
  if (!s.long_x) {
    // sweep across x, then carry the row masses along y
    std::vector<double> mu(nj, 0.0), r = transport_profile(s.i0, s.i1, L.hx);
    for (int b = 0; b < nj; ++b)
      for (int a = 0; a < ni; ++a) mu[b] += L.hx * C(a, b);
    v1 = TensorSpline<float>(qx, cy);
    for (int b = 0; b < nj; ++b) {
      double acc = 0.0;
      for (int a = 0; a + 1 < ni; ++a) {
        acc += C(a, b) - r[a] * mu[b];
        v1.at(a, b) = float(L.hx * acc);
      }
    }
    v2 = TensorSpline<float>(cx, qy);
    double M = 0.0;
    for (int b = 0; b + 1 < nj; ++b) {
      M += mu[b];
      for (int a = 0; a < ni; ++a) v2.at(a, b) = float(r[a] * L.hy * M);
    }
  } else {
    std::vector<double> mu(ni, 0.0), r = transport_profile(s.j0, s.j1, L.hy);
    for (int a = 0; a < ni; ++a)
      for (int b = 0; b < nj; ++b) mu[a] += L.hy * C(a, b);
    v2 = TensorSpline<float>(cx, qy);
    for (int a = 0; a < ni; ++a) {
      double acc = 0.0;
      for (int b = 0; b + 1 < nj; ++b) {
        acc += C(a, b) - r[b] * mu[a];
        v2.at(a, b) = float(L.hy * acc);
      }
    }
    v1 = TensorSpline<float>(qx, cy);
    double M = 0.0;
    for (int a = 0; a + 1 < ni; ++a) {
      M += mu[a];
      for (int b = 0; b < nj; ++b) v1.at(a, b) = float(r[b] * L.hx * M);
    }
  }
  return std::make_shared<SplineFlow<float>>(std::move(v1), std::move(v2), strip_box(L, s));
}

AnnulusFlow::AnnulusFlow(std::vector<std::shared_ptr<SplineFlow<float>>> parts, Box2 outer, Box2 inner)
    : parts_(std::move(parts)), outer_(outer), inner_(inner) {}

bool AnnulusFlow::sample(const Vec2& z, FlowSample& out) const {
  if (!outer_.contains(z) || inner_.contains_open(z)) return false;
  out = FlowSample{};
  FlowSample s;
  bool any = false;
  for (const auto& p : parts_)
    if (p->sample(z, s)) {
      out.v += s.v;
      out.Dv += s.Dv;
      out.phi += s.phi;
      out.dphi += s.dphi;
      any = true;
    }
  return any;
}

size_t AnnulusFlow::bytes() const {
  size_t b = 0;
  for (const auto& p : parts_) b += p->bytes();
  return b;
}

std::shared_ptr<AnnulusFlow> solve_annulus(const std::function<double(const Vec2&)>& phi, const Box2& outer,
                                           const Box2& inner, double h, SweepReport* report) {
  if (!outer.contains(inner) || inner.empty()) throw Error(ErrorCode::invalid_geometry, "inner box not inside outer box");
  Lattice L = Lattice::covering(outer, h);
  double ia = (inner.lo.x() - L.origin.x()) / L.hx, ib = (inner.hi.x() - L.origin.x()) / L.hx;
  double ja = (inner.lo.y() - L.origin.y()) / L.hy, jb = (inner.hi.y() - L.origin.y()) / L.hy;
  int iL = int(std::floor(ia + 1e-9)) - 2, iR = int(std::ceil(ib - 1e-9)) + 2;
  int jB = int(std::floor(ja + 1e-9)) - 2, jT = int(std::ceil(jb - 1e-9)) + 2;
  if (iL < 2 || jB < 2 || iR > L.nx - 2 || jT > L.ny - 2)
    throw Error(ErrorCode::resolution_exceeded, "annulus thinner than four lattice steps");

  std::vector<double> c = quasi_interpolate(L, phi);
  enum { SL, SR, SB, ST };
  Strip st[4] = {{2, iL, 2, L.ny - 2, false},
                 {iR, L.nx - 2, 2, L.ny - 2, false},
                 {2, L.nx - 2, 2, jB, true},
                 {2, L.nx - 2, jT, L.ny - 2, true}};
  std::vector<std::vector<double>> cs(4, std::vector<double>(L.size(), 0.0));
  double sum[4] = {0, 0, 0, 0}, dropped = 0.0, peak = 0.0;
  for (double x : c) peak = std::max(peak, std::abs(x));
  int nodes = 0;
  std::vector<size_t> top_nodes;
  for (int j = 0; j <= L.ny; ++j)
    for (int i = 0; i <= L.nx; ++i) {
      size_t k = L.idx(i, j);
      int owner = -1;
      if (i >= 2 && i <= L.nx - 2 && j >= 2 && j <= L.ny - 2) {
        if (i <= iL) owner = SL;
        else if (i >= iR) owner = SR;
        else if (j <= jB) owner = SB;
        else if (j >= jT) owner = ST;
      }
      if (owner < 0) {
        dropped = std::max(dropped, std::abs(c[k]));
        continue;
      }
      cs[owner][k] = c[k];
      sum[owner] += c[k];
      ++nodes;
      if (owner == ST) top_nodes.push_back(k);
    }
  // hand each strip's mass to the next one through a shared corner node
  auto hand = [&](int from, int to, int i, int j) {
    size_t k = L.idx(i, j);
    cs[from][k] -= sum[from];
    cs[to][k] += sum[from];
    sum[to] += sum[from];
    sum[from] = 0.0;
  };
  hand(SL, SB, (2 + iL) / 2, (2 + jB) / 2);
  hand(SB, SR, (iR + L.nx - 2) / 2, (2 + jB) / 2);
  hand(SR, ST, (iR + L.nx - 2) / 2, (jT + L.ny - 2) / 2);
  double S = sum[ST];
  double fix = S / double(top_nodes.size());
  for (size_t k : top_nodes) cs[ST][k] -= fix;

  std::vector<std::shared_ptr<SplineFlow<float>>> parts;
  for (int q = 0; q < 4; ++q) parts.push_back(sweep_strip(L, cs[q], st[q]));
  auto out = std::make_shared<AnnulusFlow>(std::move(parts), outer, inner);
  if (report) *report = {nodes, S * L.hx * L.hy, dropped, std::abs(fix), out->bytes(), peak};
  return out;
}

std::shared_ptr<SplineFlow<float>> solve_box(const std::function<double(const Vec2&)>& phi, const Box2& box, double h,
                                             SweepReport* report) {
  Lattice L = Lattice::covering(box, h);
  if (L.nx < 4 || L.ny < 4) throw Error(ErrorCode::resolution_exceeded, "box narrower than four lattice steps");
  std::vector<double> c = quasi_interpolate(L, phi);
  Strip s{2, L.nx - 2, 2, L.ny - 2, box.size().x() >= box.size().y()};
  double S = 0.0, dropped = 0.0, peak = 0.0;
  for (double x : c) peak = std::max(peak, std::abs(x));
  int nodes = 0;
  for (int j = 0; j <= L.ny; ++j)
    for (int i = 0; i <= L.nx; ++i) {
      size_t k = L.idx(i, j);
      if (i >= s.i0 && i <= s.i1 && j >= s.j0 && j <= s.j1) {
        S += c[k];
        ++nodes;
      } else {
        dropped = std::max(dropped, std::abs(c[k]));
        c[k] = 0.0;
      }
    }
  double fix = S / nodes;
  for (int j = s.j0; j <= s.j1; ++j)
    for (int i = s.i0; i <= s.i1; ++i) c[L.idx(i, j)] -= fix;
  auto out = sweep_strip(L, c, s);
  if (report) *report = {nodes, S * L.hx * L.hy, dropped, std::abs(fix), out->bytes(), peak};
  return out;
}

}  // namespace conreg
