#include <conreg/input_map.hpp>
#include <conreg/metrics.hpp>
#include <conreg/smooth.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace conreg {

using json = nlohmann::json;

Vec2 InputMap::inverse_eval(const Vec2& w) const { return newton_inverse(*this, w, w); }

Vec2 newton_inverse(const MapLike& f, const Vec2& w, const Vec2& seed, int max_iter, double tol) {
  Vec2 z = seed;
  for (int it = 0; it < max_iter; ++it) {
    Jet j = f.jet(z);
    Vec2 r = j.v - w;
    if (linf(r) <= tol * std::max(1.0, linf(w))) return z;
    double det = j.J.determinant();
    if (!(std::abs(det) > 1e-12))
      throw Error(ErrorCode::fairness_unavailable, "singular jacobian in Newton inverse");
    z -= j.J.inverse() * r;
    if (!z.allFinite()) break;
  }
  Vec2 r = f.eval(z) - w;
  if (z.allFinite() && linf(r) <= 1e3 * tol * std::max(1.0, linf(w))) return z;
  throw Error(ErrorCode::fairness_unavailable, "Newton inverse did not converge");
}

static std::string num(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::string AffineMap::describe() const {
  return "{\"kind\":\"affine\",\"params\":{\"A\":[" + num(A_(0, 0)) + "," + num(A_(0, 1)) + "," +
         num(A_(1, 0)) + "," + num(A_(1, 1)) + "],\"c\":[" + num(c_.x()) + "," + num(c_.y()) + "]}}";
}

C1ShearMap::C1ShearMap(const Params& p) : p_(p) {
  if (p.J < 0 || p.b <= 0 || p.a < 0 || !(p.band_hi > p.band_lo))
    throw Error(ErrorCode::input_error, "invalid c1_shear parameters");
  double aj = 1.0, bj = 1.0;
  for (int j = 0; j <= p.J; ++j) {
    aj_.push_back(aj);
    bj_.push_back(bj);
    aj *= p.a;
    bj *= p.b;
  }
}

double C1ShearMap::G(double y) const {
  double s = 0.0;
  for (size_t j = 0; j < aj_.size(); ++j) s += aj_[j] * std::sin(bj_[j] * M_PI * y) / (bj_[j] * M_PI);
  return s;
}

double C1ShearMap::Gp(double y) const {
  double s = 0.0;
  for (size_t j = 0; j < aj_.size(); ++j) s += aj_[j] * std::cos(bj_[j] * M_PI * y);
  return s;
}

void C1ShearMap::disp(double y, double& u, double& du) const {
  D1 c = smoothstep_inf((y - p_.band_lo) / (p_.band_hi - p_.band_lo));
  if (c.f == 0.0 && c.df == 0.0) {
    u = 0.0;
    du = 0.0;
    return;
  }
  double g = 0.0, gp = 0.0;
  for (size_t j = 0; j < aj_.size(); ++j) {
    double arg = bj_[j] * M_PI * y;
    g += aj_[j] * std::sin(arg) / (bj_[j] * M_PI);
    gp += aj_[j] * std::cos(arg);
  }
  double dc = c.df / (p_.band_hi - p_.band_lo);
  u = p_.amp * c.f * g;
  du = p_.amp * (dc * g + c.f * gp);
}

Vec2 C1ShearMap::eval(const Vec2& z) const {
  double u, du;
  disp(z.y(), u, du);
  return {z.x() + u, z.y()};
}

Jet C1ShearMap::jet(const Vec2& z) const {
  double u, du;
  disp(z.y(), u, du);
  Jet o;
  o.v = Vec2(z.x() + u, z.y());
  o.J << 1.0, du, 0.0, 1.0;
  return o;
}

Vec2 C1ShearMap::inverse_eval(const Vec2& w) const {
  double u, du;
  disp(w.y(), u, du);
  return {w.x() - u, w.y()};
}

double C1ShearMap::modulus(double r) const {
  double s = 0.0, sa = 0.0;
  for (size_t j = 0; j < aj_.size(); ++j) {
    s += aj_[j] * std::min(2.0, bj_[j] * M_PI * r);
    sa += aj_[j];
  }
  double w = p_.band_hi - p_.band_lo;
  double band = std::min(2.0 * sa, r * (8.0 / (w * w) * sa + 4.0 / w * sa));
  return p_.amp * (s + band);
}

std::string C1ShearMap::describe() const {
  return "{\"kind\":\"c1_shear\",\"params\":{\"amp\":" + num(p_.amp) + ",\"a\":" + num(p_.a) +
         ",\"b\":" + num(p_.b) + ",\"J\":" + std::to_string(p_.J) + ",\"band_lo\":" + num(p_.band_lo) +
         ",\"band_hi\":" + num(p_.band_hi) + "}}";
}

void TwistMap::angle(double r, double& a, double& da) const {
  D1 s = smoothstep_inf(r / p_.radius);
  a = p_.amp * (1.0 - s.f);
  da = -p_.amp * s.df / p_.radius;
}

Vec2 TwistMap::eval(const Vec2& z) const {
  Vec2 d = z - p_.c;
  double a, da;
  angle(d.norm(), a, da);
  double c = std::cos(a), s = std::sin(a);
  return p_.c + Vec2(c * d.x() - s * d.y(), s * d.x() + c * d.y());
}

Jet TwistMap::jet(const Vec2& z) const {
  Vec2 d = z - p_.c;
  double r = d.norm();
  double a, da;
  angle(r, a, da);
  double c = std::cos(a), s = std::sin(a);
  Mat2 R;
  R << c, -s, s, c;
  Jet o;
  o.v = p_.c + R * d;
  o.J = R;
  if (r > 0 && da != 0.0) {
    Mat2 Rp;
    Rp << -s, -c, c, -s;
    o.J += (Rp * d) * (d.transpose() * (da / r));
  }
  return o;
}

Vec2 TwistMap::inverse_eval(const Vec2& w) const {
  Vec2 d = w - p_.c;
  double a, da;
  angle(d.norm(), a, da);
  double c = std::cos(a), s = std::sin(a);
  return p_.c + Vec2(c * d.x() + s * d.y(), -s * d.x() + c * d.y());
}

double TwistMap::modulus(double r) const {
  return std::min(4.0 * std::abs(p_.amp), r * 10.0 * std::abs(p_.amp) / p_.radius);
}

std::string TwistMap::describe() const {
  return "{\"kind\":\"twist\",\"params\":{\"c\":[" + num(p_.c.x()) + "," + num(p_.c.y()) +
         "],\"radius\":" + num(p_.radius) + ",\"amp\":" + num(p_.amp) + "}}";
}

Vec2 CompositeMap::eval(const Vec2& z) const {
  Vec2 w = z;
  for (const auto& p : parts_) w = p->eval(w);
  return w;
}

Jet CompositeMap::jet(const Vec2& z) const {
  Jet o;
  o.v = z;
  for (const auto& p : parts_) {
    Jet j = p->jet(o.v);
    o.v = j.v;
    o.J = j.J * o.J;
  }
  return o;
}

bool CompositeMap::has_inverse() const {
  for (const auto& p : parts_)
    if (!p->has_inverse()) return false;
  return true;
}

Vec2 CompositeMap::inverse_eval(const Vec2& w) const {
  if (!has_inverse()) return newton_inverse(*this, w, w);
  Vec2 z = w;
  for (auto it = parts_.rbegin(); it != parts_.rend(); ++it) z = (*it)->inverse_eval(z);
  return z;
}

double CompositeMap::modulus(double r) const {
  double s = 0.0;
  for (const auto& p : parts_) s += p->modulus(2.0 * r);
  return s;
}

bool CompositeMap::smooth_at(const Vec2& z) const {
  Vec2 w = z;
  for (const auto& p : parts_) {
    if (!p->smooth_at(w)) return false;
    w = p->eval(w);
  }
  return true;
}

std::string CompositeMap::describe() const {
  std::string s = "{\"kind\":\"composite\",\"params\":{\"parts\":[";
  for (size_t i = 0; i < parts_.size(); ++i) s += (i ? "," : "") + parts_[i]->describe();
  return s + "]}}";
}

SampledMap::SampledMap(const Box2& box, int nx, int ny, std::vector<Vec2> values)
    : box_(box), nx_(nx), ny_(ny), vals_(std::move(values)) {
  if (nx < 4 || ny < 4 || int(vals_.size()) != nx * ny || box.empty())
    throw Error(ErrorCode::input_error, "sampled map grid is malformed");
  hx_ = (box.hi.x() - box.lo.x()) / (nx - 1);
  hy_ = (box.hi.y() - box.lo.y()) / (ny - 1);
  for (int j = 1; j + 1 < ny; ++j)
    for (int i = 1; i + 1 < nx; ++i) {
      Vec2 dxx = (disp(i + 1, j) - 2 * disp(i, j) + disp(i - 1, j)) / (hx_ * hx_);
      Vec2 dyy = (disp(i, j + 1) - 2 * disp(i, j) + disp(i, j - 1)) / (hy_ * hy_);
      lip_ = std::max({lip_, linf(dxx), linf(dyy)});
    }
}

Vec2 SampledMap::disp(int i, int j) const {
  i = std::clamp(i, 0, nx_ - 1);
  j = std::clamp(j, 0, ny_ - 1);
  Vec2 z(box_.lo.x() + i * hx_, box_.lo.y() + j * hy_);
  return vals_[size_t(j) * nx_ + i] - z;
}

namespace {
// Catmull-Rom weights and derivatives for local parameter s in [0,1]
void cr_weights(double s, double w[4], double dw[4]) {
  double s2 = s * s, s3 = s2 * s;
  w[0] = 0.5 * (-s3 + 2 * s2 - s);
  w[1] = 0.5 * (3 * s3 - 5 * s2 + 2);
  w[2] = 0.5 * (-3 * s3 + 4 * s2 + s);
  w[3] = 0.5 * (s3 - s2);
  dw[0] = 0.5 * (-3 * s2 + 4 * s - 1);
  dw[1] = 0.5 * (9 * s2 - 10 * s);
  dw[2] = 0.5 * (-9 * s2 + 8 * s + 1);
  dw[3] = 0.5 * (3 * s2 - 2 * s);
}
}  // namespace

Jet SampledMap::jet(const Vec2& z) const {
  if (!box_.contains(z)) throw Error(ErrorCode::out_of_domain, "point outside sampled map box");
  double gx = (z.x() - box_.lo.x()) / hx_, gy = (z.y() - box_.lo.y()) / hy_;
  int i = std::min(int(std::floor(gx)), nx_ - 2), j = std::min(int(std::floor(gy)), ny_ - 2);
  double sx = gx - i, sy = gy - j;
  double wx[4], dwx[4], wy[4], dwy[4];
  cr_weights(sx, wx, dwx);
  cr_weights(sy, wy, dwy);
  Vec2 d = Vec2::Zero(), ddx = Vec2::Zero(), ddy = Vec2::Zero();
  for (int b = 0; b < 4; ++b)
    for (int a = 0; a < 4; ++a) {
      Vec2 v = disp(i - 1 + a, j - 1 + b);
      d += wx[a] * wy[b] * v;
      ddx += dwx[a] * wy[b] * v;
      ddy += wx[a] * dwy[b] * v;
    }
  Jet o;
  o.v = z + d;
  o.J = Mat2::Identity();
  o.J.col(0) += ddx / hx_;
  o.J.col(1) += ddy / hy_;
  return o;
}

double SampledMap::modulus(double r) const { return lip_ * r; }

std::string SampledMap::describe() const {
  return "{\"kind\":\"sampled\",\"params\":{\"box\":[" + num(box_.lo.x()) + "," + num(box_.lo.y()) +
         "," + num(box_.hi.x()) + "," + num(box_.hi.y()) + "],\"nx\":" + std::to_string(nx_) +
         ",\"ny\":" + std::to_string(ny_) + "}}";
}

std::shared_ptr<SampledMap> SampledMap::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::input_error, "cannot open sampled map " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::input_error, "empty sampled map file");
  std::replace(line.begin(), line.end(), ',', ' ');
  std::istringstream hs(line);
  std::string tag;
  Box2 b;
  int nx = 0, ny = 0;
  hs >> tag >> b.lo.x() >> b.lo.y() >> b.hi.x() >> b.hi.y() >> nx >> ny;
  if (tag != "box" || !hs || nx < 4 || ny < 4)
    throw Error(ErrorCode::input_error, "sampled map header must be box,lox,loy,hix,hiy,nx,ny");
  std::vector<Vec2> v;
  v.reserve(size_t(nx) * ny);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, c;
    if (!(ls >> a >> c)) throw Error(ErrorCode::input_error, "bad sampled map row: " + line);
    v.emplace_back(a, c);
  }
  if (int(v.size()) != nx * ny) throw Error(ErrorCode::input_error, "sampled map row count mismatch");
  return std::make_shared<SampledMap>(b, nx, ny, std::move(v));
}

namespace {

Vec2 vec2_of(const json& j, const char* key, Vec2 def) {
  if (!j.contains(key)) return def;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw Error(ErrorCode::input_error, std::string(key) + " must be [x,y]");
  return {a[0].get<double>(), a[1].get<double>()};
}

InputMapPtr map_from(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw Error(ErrorCode::input_error, "map needs a kind");
  std::string kind = j.at("kind").get<std::string>();
  json p = j.value("params", json::object());
  if (kind == "affine") {
    Mat2 A = Mat2::Identity();
    if (p.contains("A")) {
      const auto& a = p.at("A");
      if (!a.is_array() || a.size() != 4) throw Error(ErrorCode::input_error, "affine A must have 4 entries");
      A << a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>();
    }
    if (std::abs(A.determinant() - 1.0) > 1e-12)
      throw Error(ErrorCode::input_error, "affine map must have det A = 1");
    return std::make_shared<AffineMap>(A, vec2_of(p, "c", Vec2::Zero()));
  }
  if (kind == "c1_shear") {
    C1ShearMap::Params q;
    q.amp = p.value("amp", q.amp);
    q.a = p.value("a", q.a);
    q.b = p.value("b", q.b);
    q.J = p.value("J", q.J);
    q.band_lo = p.value("band_lo", q.band_lo);
    q.band_hi = p.value("band_hi", q.band_hi);
    return std::make_shared<C1ShearMap>(q);
  }
  if (kind == "twist") {
    TwistMap::Params q;
    q.c = vec2_of(p, "c", q.c);
    q.radius = p.value("radius", q.radius);
    q.amp = p.value("amp", q.amp);
    if (!(q.radius > 0)) throw Error(ErrorCode::input_error, "twist radius must be positive");
    return std::make_shared<TwistMap>(q);
  }
  if (kind == "composite") {
    std::vector<InputMapPtr> parts;
    for (const auto& e : p.at("parts")) parts.push_back(map_from(e));
    if (parts.empty()) throw Error(ErrorCode::input_error, "composite needs parts");
    return std::make_shared<CompositeMap>(std::move(parts));
  }
  if (kind == "sampled") return SampledMap::from_csv(p.at("path").get<std::string>());
  throw Error(ErrorCode::input_error, "unknown map kind " + kind);
}

}  // namespace

InputMapPtr map_from_json(const std::string& text) {
  try {
    return map_from(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input_error, std::string("map json: ") + e.what());
  }
}

double det_defect(const MapLike& f, const Box2& box, int n) {
  double m = 0.0;
  for (const Vec2& z : halton_points(box, n, 7)) m = std::max(m, std::abs(f.jet(z).J.determinant() - 1.0));
  return m;
}

}  // namespace conreg
