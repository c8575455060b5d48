#include <conreg/extension.hpp>
#include <conreg/smooth.hpp>

#include <cstdio>

namespace conreg {

std::string InputPrim::describe() const { return "{\"kind\":\"input\",\"map\":" + f_->describe() + "}"; }

double Cutoff::value(const Vec2& z, Vec2* grad) const {
  if (kind == Kind::plateau) {
    Vec2 c = box.center();
    D1 px = plateau(z.x() - c.x(), r0, r1), py = plateau(z.y() - c.y(), r0, r1);
    if (grad) *grad = Vec2(px.df * py.f, px.f * py.df);
    return px.f * py.f;
  }
  double w = r1 - r0;
  double lx = z.x() - box.lo.x(), hx = box.hi.x() - z.x();
  double ly = z.y() - box.lo.y(), hy = box.hi.y() - z.y();
  double dx = std::min(lx, hx), dy = std::min(ly, hy);
  double gx = lx < hx ? 1.0 : -1.0, gy = ly < hy ? 1.0 : -1.0;
  D1 sx = smoothstep_inf((dx - r0) / w), sy = smoothstep_inf((dy - r0) / w);
  if (grad) *grad = -Vec2(sx.df / w * gx * sy.f, sx.f * sy.df / w * gy);
  return 1.0 - sx.f * sy.f;
}

Box2 Cutoff::support() const { return box; }

Vec2 BlendPrim::eval(const Vec2& z) const {
  Vec2 h = H_->eval(z), acc = h;
  for (const Piece& p : pieces_) {
    double w = p.chi.value(z);
    if (w == 0.0) continue;
    Vec2 g = p.germ.eval(z);
    if (w == 1.0) return g;
    acc += w * (g - h);
  }
  return acc;
}

Jet BlendPrim::jet(const Vec2& z) const {
  Jet h = H_->jet(z), acc = h;
  for (const Piece& p : pieces_) {
    Vec2 gw;
    double w = p.chi.value(z, &gw);
    if (w == 0.0) continue;
    Jet g = p.germ.jet(z);
    if (w == 1.0) return g;
    acc.v += w * (g.v - h.v);
    acc.J += w * (g.J - h.J) + (g.v - h.v) * gw.transpose();
  }
  return acc;
}

static std::string num(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.17g", x);
  return b;
}

static std::string box_json(const Box2& b) {
  return "[" + num(b.lo.x()) + "," + num(b.lo.y()) + "," + num(b.hi.x()) + "," + num(b.hi.y()) + "]";
}

std::string BlendPrim::describe() const {
  std::string s = "{\"kind\":\"blend\",\"reference\":" + H_->describe() + ",\"pieces\":[";
  for (size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& p = pieces_[i];
    if (i) s += ",";
    s += std::string("{\"cutoff\":\"") + (p.chi.kind == Cutoff::Kind::plateau ? "plateau" : "frame") +
         "\",\"box\":" + box_json(p.chi.box) + ",\"r0\":" + num(p.chi.r0) + ",\"r1\":" + num(p.chi.r1) +
         ",\"germ\":" + p.germ.dump() + "}";
  }
  return s + "]}";
}

Vec2 GluePrim::eval(const Vec2& z) const {
  int k = locate_(z);
  if (k >= 0) return pieces_[k].eval(z);
  return fallback_ ? fallback_->eval(z) : z;
}

Jet GluePrim::jet(const Vec2& z) const {
  int k = locate_(z);
  if (k >= 0) return pieces_[k].jet(z);
  if (fallback_) return fallback_->jet(z);
  return {z, Mat2::Identity()};
}

std::string GluePrim::describe() const {
  size_t prims = 0;
  for (const auto& p : pieces_) prims += p.chain().size();
  return "{\"kind\":\"glue\",\"label\":\"" + label_ + "\",\"pieces\":" + std::to_string(pieces_.size()) +
         ",\"primitives\":" + std::to_string(prims) +
         ",\"fallback\":" + (fallback_ ? fallback_->describe() : std::string("null")) + "}";
}

SmoothMap smooth_extend(const ExtensionProblem& pb, std::shared_ptr<const AffinePrim> reference) {
  if (!reference) throw Error(ErrorCode::invalid_parameter, "null reference map");
  for (size_t i = 0; i < pb.germs.size(); ++i) {
    const Cutoff& c = pb.germs[i].chi;
    if (!(c.r1 > c.r0) || c.width() < pb.min_blend) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "transition %.3e thinner than %.3e", c.width(), pb.min_blend);
      throw Error(ErrorCode::blend_width_exceeded, buf);
    }
    for (size_t j = 0; j < i; ++j) {
      Box2 a = c.support(), b = pb.germs[j].chi.support();
      if (!intersect(a, b).empty())
        throw Error(ErrorCode::blend_width_exceeded, "cutoffs of different germs overlap");
    }
  }
  return SmoothMap({std::make_shared<BlendPrim>(std::move(reference), pb.germs)});
}

SmoothMap correct_volume(const SmoothMap& f, const ExtensionProblem& pb, const CorrectionOptions& opt,
                         std::vector<HoleReport>* reports) {
  std::vector<PrimitivePtr> pre;
  std::vector<HoleReport> reps;
  for (const Hole& H : pb.holes) {
    HoleReport hr;
    int n = opt.positivity_grid;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec2 z = H.outer.lo + Vec2((i + 0.5) * H.outer.size().x() / n, (j + 0.5) * H.outer.size().y() / n);
        if (!H.contains(z)) continue;
        double d = f.jet(z).J.determinant();
        if (!(d > 0.0)) throw Error(ErrorCode::orientation_degenerate, "det <= 0 inside a hole");
      }
    auto phi = [&](const Vec2& z) { return H.contains(z) ? f.jet(z).J.determinant() - 1.0 : 0.0; };
    double h = opt.h > 0 ? opt.h : H.outer.size().maxCoeff() / 48.0;
    SweepReport sr;
    std::shared_ptr<const FlowField> v;
    if (H.annular())
      v = solve_annulus(phi, H.outer, H.inner, h, &sr);
    else
      v = solve_box(phi, H.outer, h, &sr);
    hr.mass = sr.mass;
    hr.dropped = sr.dropped;
    hr.bytes = sr.bytes;
    double area = H.outer.area() - (H.annular() ? H.inner.area() : 0.0);
    if (std::abs(sr.mass) > pb.tol_hole * area) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "mean of det-1 over a hole is %.3e (tolerance %.3e)", sr.mass / area, pb.tol_hole);
      throw Error(ErrorCode::hole_mismatch, buf);
    }
    if (sr.peak == 0.0) {
      hr.trivial = true;
      hr.bytes = 0;
      reps.push_back(hr);
      continue;
    }
    auto psi_inv = std::make_shared<MoserFlowMap>(v, opt.steps, opt.margin, true);
    if (opt.check_grid > 0) {
      SmoothMap g = SmoothMap({psi_inv}).then(f);
      double r = 0.0;
      int m = opt.check_grid;
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
          Vec2 z = H.outer.lo + Vec2((i + 0.5) * H.outer.size().x() / m, (j + 0.5) * H.outer.size().y() / m);
          r = std::max(r, std::abs(g.jet(z).J.determinant() - 1.0));
        }
      hr.det_residual = r;
    }
    pre.insert(pre.begin(), psi_inv);
    reps.push_back(hr);
  }
  if (reports) *reports = std::move(reps);
  return SmoothMap(std::move(pre)).then(f);
}

}  // namespace conreg
