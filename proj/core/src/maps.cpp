#include <conreg/maps.hpp>
#include <conreg/smooth.hpp>

#include <cstdio>
#include <sstream>

namespace conreg {

const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::empty_domain: return "empty-domain";
    case ErrorCode::depth_exceeded: return "depth-exceeded";
    case ErrorCode::unknown_cell: return "unknown-cell";
    case ErrorCode::invalid_margins: return "invalid-margins";
    case ErrorCode::out_of_domain: return "out-of-domain";
    case ErrorCode::not_invertible: return "not-invertible";
    case ErrorCode::nonzero_mean: return "nonzero-mean";
    case ErrorCode::invalid_geometry: return "invalid-geometry";
    case ErrorCode::resolution_exceeded: return "resolution-exceeded";
    case ErrorCode::degenerate_density: return "degenerate-density";
    case ErrorCode::nonconvergent: return "nonconvergent";
    case ErrorCode::amplitude_exceeded: return "amplitude-exceeded";
    case ErrorCode::f_too_far: return "f-too-far";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::blend_width_exceeded: return "blend-width-exceeded";
    case ErrorCode::hole_mismatch: return "hole-mismatch";
    case ErrorCode::orientation_degenerate: return "orientation-degenerate";
    case ErrorCode::fairness_unavailable: return "fairness-unavailable";
    case ErrorCode::input_error: return "input-error";
    case ErrorCode::internal_error: return "internal-error";
  }
  return "unknown";
}

bool is_convergence_failure(ErrorCode c) {
  switch (c) {
    case ErrorCode::resolution_exceeded:
    case ErrorCode::nonconvergent:
    case ErrorCode::f_too_far:
    case ErrorCode::budget_exceeded:
    case ErrorCode::fairness_unavailable:
    case ErrorCode::hole_mismatch:
    case ErrorCode::internal_error:
      return true;
    default:
      return false;
  }
}

Jet FunctionMap::jet(const Vec2& z) const {
  Jet o;
  o.v = f_(z);
  if (j_) {
    o.J = j_(z);
    return o;
  }
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e[k] = h_;
    o.J.col(k) = (f_(z + e) - f_(z - e)) / (2 * h_);
  }
  return o;
}

PrimitivePtr Primitive::inverse() const {
  throw Error(ErrorCode::not_invertible, kind() + " has no inverse");
}

Vec2 SmoothMap::eval(const Vec2& z) const {
  Vec2 w = z;
  for (const auto& p : chain_) w = p->eval(w);
  return w;
}

Jet SmoothMap::jet(const Vec2& z) const {
  Jet o;
  o.v = z;
  for (const auto& p : chain_) {
    Jet j = p->jet(o.v);
    o.v = j.v;
    o.J = j.J * o.J;
  }
  return o;
}

SmoothMap SmoothMap::then(const PrimitivePtr& p) const {
  std::vector<PrimitivePtr> c = chain_;
  c.push_back(p);
  return SmoothMap(std::move(c));
}

SmoothMap SmoothMap::then(const SmoothMap& m) const {
  std::vector<PrimitivePtr> c = chain_;
  c.insert(c.end(), m.chain_.begin(), m.chain_.end());
  return SmoothMap(std::move(c));
}

std::string SmoothMap::dump() const {
  std::string s = "[";
  for (size_t i = 0; i < chain_.size(); ++i) {
    if (i) s += ",";
    s += chain_[i]->describe();
  }
  return s + "]";
}

SmoothMap invert(const SmoothMap& m) {
  std::vector<PrimitivePtr> c;
  c.reserve(m.chain().size());
  for (auto it = m.chain().rbegin(); it != m.chain().rend(); ++it) c.push_back((*it)->inverse());
  return SmoothMap(std::move(c));
}

static std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

PrimitivePtr AffinePrim::inverse() const {
  Mat2 Ai = A_.inverse();
  return std::make_shared<AffinePrim>(Ai, -Ai * c_);
}

std::string AffinePrim::describe() const {
  return "{\"kind\":\"affine\",\"A\":[" + num(A_(0, 0)) + "," + num(A_(0, 1)) + "," + num(A_(1, 0)) +
         "," + num(A_(1, 1)) + "],\"c\":[" + num(c_.x()) + "," + num(c_.y()) + "]}";
}

ShearPrim::ShearPrim(const Geometry& g, double t) : g_(g), t_(t) {
  dir_ = g.p - g.pp;
  if (std::abs(std::abs(dir_.x()) - 2.0) < 1e-12 && std::abs(dir_.y()) < 1e-12)
    axis_ = 0;
  else if (std::abs(std::abs(dir_.y()) - 2.0) < 1e-12 && std::abs(dir_.x()) < 1e-12)
    axis_ = 1;
  else
    throw Error(ErrorCode::invalid_geometry, "shear pair is not adjacent");
  Vec2 q = g.delta * (g.p + g.pp) / 4.0;
  q_ = q[1 - axis_];
  half_ = g.delta / 4.0;
}

double ShearPrim::profile(const Vec2& w, Vec2* grad) const {
  int tr = 1 - axis_;
  D1 b = channel_bump((w[tr] - q_) / half_);
  if (grad) {
    *grad = Vec2::Zero();
    (*grad)[tr] = b.df / half_;
  }
  return b.f;
}

std::pair<double, double> ShearPrim::band() const {
  int tr = 1 - axis_;
  double c = g_.center[tr] + g_.scale * q_;
  return {c - g_.scale * half_, c + g_.scale * half_};
}

Vec2 ShearPrim::eval(const Vec2& z) const {
  int tr = 1 - axis_;
  double u = ((z[tr] - g_.center[tr]) / g_.scale - q_) / half_;
  if (!(std::abs(u) < 1.0)) return z;
  double ph = channel_bump(u).f;
  Vec2 out = z;
  out[axis_] += g_.scale * t_ * ph * dir_[axis_];
  return out;
}

Jet ShearPrim::jet(const Vec2& z) const {
  Jet o;
  int tr = 1 - axis_;
  double u = ((z[tr] - g_.center[tr]) / g_.scale - q_) / half_;
  o.v = z;
  if (!(std::abs(u) < 1.0)) return o;
  D1 b = channel_bump(u);
  o.v[axis_] += g_.scale * t_ * b.f * dir_[axis_];
  // d/dz_tr of scale*t*phi = t * phi'(u) / half
  o.J(axis_, tr) = t_ * b.df / half_ * dir_[axis_];
  return o;
}

PrimitivePtr ShearPrim::inverse() const { return std::make_shared<ShearPrim>(g_, -t_); }

std::string ShearPrim::describe() const {
  return "{\"kind\":\"shear\",\"center\":[" + num(g_.center.x()) + "," + num(g_.center.y()) +
         "],\"scale\":" + num(g_.scale) + ",\"p\":[" + num(g_.p.x()) + "," + num(g_.p.y()) +
         "],\"pp\":[" + num(g_.pp.x()) + "," + num(g_.pp.y()) + "],\"delta\":" + num(g_.delta) +
         ",\"t\":" + num(t_) + "}";
}

}  // namespace conreg
