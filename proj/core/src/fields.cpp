#include <conreg/fields.hpp>

#include <limits>

namespace conreg {

namespace {

// solve (c[i-1] + 4 c[i] + c[i+1]) / 6 = f[i], c[-1] = c[n] = 0
void spline_solve(std::vector<double>& f) {
  int n = static_cast<int>(f.size());
  if (n == 0) return;
  std::vector<double> cp(n), dp(n);
  double a = 1.0 / 6.0, b = 4.0 / 6.0;
  cp[0] = a / b;
  dp[0] = f[0] / b;
  for (int i = 1; i < n; ++i) {
    double m = b - a * cp[i - 1];
    cp[i] = a / m;
    dp[i] = (f[i] - a * dp[i - 1]) / m;
  }
  f[n - 1] = dp[n - 1];
  for (int i = n - 2; i >= 0; --i) f[i] = dp[i] - cp[i] * f[i + 1];
}

}  // namespace

TensorSpline<double> cubic_from_nodes(const Vec2& origin, double h, int nx, int ny,
                                      const std::vector<double>& values) {
  SplineAxis ax{origin.x(), h, nx, 3, 0.0}, ay{origin.y(), h, ny, 3, 0.0};
  TensorSpline<double> s(ax, ay);
  s.c = values;
  std::vector<double> line;
  for (int j = 0; j < ny; ++j) {
    line.assign(s.c.begin() + size_t(j) * nx, s.c.begin() + size_t(j + 1) * nx);
    spline_solve(line);
    std::copy(line.begin(), line.end(), s.c.begin() + size_t(j) * nx);
  }
  line.resize(ny);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) line[j] = s.c[size_t(j) * nx + i];
    spline_solve(line);
    for (int j = 0; j < ny; ++j) s.c[size_t(j) * nx + i] = line[j];
  }
  return s;
}

GridScalar::GridScalar(const Vec2& origin, double h, int nx, int ny, const std::vector<double>& values)
    : o_(origin), h_(h), nx_(nx), ny_(ny), vals_(values) {
  if (int(values.size()) != nx * ny) throw Error(ErrorCode::invalid_parameter, "grid size mismatch");
  s_ = cubic_from_nodes(origin, h, nx, ny, values);
}

double GridScalar::value(const Vec2& z) const { return s_.value(z.x(), z.y()); }

Vec2 GridScalar::gradient(const Vec2& z) const {
  SplineD2 d = s_.eval(z.x(), z.y(), 1);
  return {d.fx, d.fy};
}

Box2 GridScalar::support() const {
  return {Vec2(s_.ax.lo(), s_.ay.lo()), Vec2(s_.ax.hi(), s_.ay.hi())};
}

SumFlow::SumFlow(std::vector<std::shared_ptr<const FlowField>> parts) : parts_(std::move(parts)) {
  double inf = std::numeric_limits<double>::infinity();
  s_ = {Vec2(inf, inf), Vec2(-inf, -inf)};
  for (const auto& p : parts_) {
    Box2 b = p->support();
    s_.lo = s_.lo.cwiseMin(b.lo);
    s_.hi = s_.hi.cwiseMax(b.hi);
  }
}

bool SumFlow::sample(const Vec2& z, FlowSample& out) const {
  if (!s_.contains(z)) return false;
  bool any = false;
  out = FlowSample{};
  FlowSample tmp;
  for (const auto& p : parts_) {
    if (p->sample(z, tmp)) {
      any = true;
      out.v += tmp.v;
      out.Dv += tmp.Dv;
      out.phi += tmp.phi;
      out.dphi += tmp.dphi;
    }
  }
  return any;
}

size_t SumFlow::bytes() const {
  size_t b = 0;
  for (const auto& p : parts_) b += p->bytes();
  return b;
}

GridFlow::GridFlow(const Vec2& origin, double h, int nx, int ny, const std::vector<Vec2>& values,
                   Box2 support)
    : s_(support) {
  std::vector<double> a(values.size()), b(values.size());
  for (size_t k = 0; k < values.size(); ++k) {
    a[k] = values[k].x();
    b[k] = values[k].y();
  }
  a_ = cubic_from_nodes(origin, h, nx, ny, a);
  b_ = cubic_from_nodes(origin, h, nx, ny, b);
}

bool GridFlow::sample(const Vec2& z, FlowSample& out) const {
  if (!s_.contains(z)) return false;
  SplineD2 a = a_.eval(z.x(), z.y(), 2);
  SplineD2 b = b_.eval(z.x(), z.y(), 2);
  out.v = Vec2(a.f, b.f);
  out.Dv << a.fx, a.fy, b.fx, b.fy;
  out.phi = a.fx + b.fy;
  out.dphi = Vec2(a.fxx + b.fxy, a.fxy + b.fyy);
  return true;
}

}  // namespace conreg
