#include <conreg/regularizer.hpp>

#include <json.hpp>

#include <cmath>

namespace conreg {

using json = nlohmann::json;

namespace {

Box2 domain_box(const WhitneyDecomposition& d) {
  auto b = d.domain().bbox();
  return {Vec2(b[0], b[1]), Vec2(b[2], b[3])};
}

bool same(const Vec2& a, const Vec2& b) { return a.x() == b.x() && a.y() == b.y(); }

}  // namespace

void measure(Regularized& r, const InputMap& f, const PipelineConfig& cfg) {
  const WhitneyDecomposition& d = *r.decomposition;
  GlobalMetrics& g = r.report.metrics;
  Box2 W = domain_box(d);
  C1Metric cm;
  cm.seed = derive_seed(cfg.seed, 100);
  g.c1_distance = c1_distance(r.map, f, W, cm);

  auto processed = [&](const Vec2& z) {
    int s = d.locate(z);
    return s >= 0 && !r.frozen[2][s];
  };
  const int N = 256;
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      Vec2 z = W.lo + Vec2(W.size().x() * (i + 0.5) / N, W.size().y() * (j + 0.5) / N);
      if (!processed(z)) continue;
      g.det_max = std::max(g.det_max, std::abs(r.map.jet(z).J.determinant() - 1.0));
      ++g.det_samples;
    }

  // both squares' chains on points of shared edges
  const auto& E = d.cells(1);
  int per = std::max(1, int(std::ceil(1000.0 / std::max<size_t>(1, E.size()))));
  for (size_t e = 0; e < E.size(); ++e) {
    const auto& inc = E[e].incident;
    if (inc.size() < 2) continue;
    Box2 b = E[e].cell.box();
    for (int k = 0; k < per; ++k) {
      double u = (k + 0.5 + 0.37 * double(e % 7) / 7) / (per + 1);
      Vec2 z = b.lo + u * b.size();
      Vec2 a = r.cells[2][inc[0]].h.eval(z);
      for (size_t q = 1; q < inc.size(); ++q)
        g.dual_max = std::max(g.dual_max, (r.cells[2][inc[q]].h.eval(z) - a).cwiseAbs().maxCoeff());
      ++g.dual_samples;
    }
  }

  // delegation: outside the domain and on the cells left to f
  Box2 big = W.inflated(0.5 * W.size().maxCoeff());
  for (const Vec2& z : halton_points(big, 4096, derive_seed(cfg.seed, 101))) {
    if (processed(z)) continue;
    ++g.outside_samples;
    if (!same(r.map.eval(z), f.eval(z))) g.exact_outside = false;
  }
  for (size_t k = 0; k < cfg.K0.size(); ++k) {
    double rad = cfg.theta / 2;
    for (const Vec2& z : halton_points(Box2::centered(cfg.K0[k], rad), 1024, derive_seed(cfg.seed, 102, k))) {
      if ((z - cfg.K0[k]).norm() > rad) continue;
      ++g.K0_samples;
      if (!same(r.map.eval(z), f.eval(z))) g.exact_near_K0 = false;
    }
  }

  // second differences well inside the larger constructed squares
  std::vector<double> scales;
  for (int k = 6; k <= 12; ++k) scales.push_back(std::ldexp(1.0, -k));
  std::vector<Vec2> pts;
  for (size_t s = 0; s < d.count(2); ++s) {
    const CellRecord& c = d.cells(2)[s];
    if (r.frozen[2][s] || c.cell.side() < 4 * scales.front()) continue;
    bool clean = true;
    for (int k = 0; k < 2; ++k)
      for (int y : c.sub[k]) clean = clean && !r.frozen[k][y];
    if (!clean) continue;
    Box2 b = c.cell.box();
    for (double u : {0.3, 0.7})
      for (double v : {0.3, 0.7}) pts.push_back(b.lo + Vec2(u * b.size().x(), v * b.size().y()));
  }
  g.probe = smoothness_probe(f, r.map, pts, scales);

  g.hole_worst = -INFINITY;
  g.telescoping_ok = true;
  for (const HoleEntry& h : r.report.holes) {
    double x = std::abs(h.hole) - h.budget - h.error;
    g.hole_worst = std::max(g.hole_worst, x);
    g.telescoping_ok = g.telescoping_ok && x <= 0;
  }
  if (r.report.holes.empty()) g.hole_worst = 0;
}

std::string config_to_json(const PipelineConfig& c) {
  json k0 = json::array();
  for (const Vec2& p : c.K0) k0.push_back({p.x(), p.y()});
  const StageGeometry& g = c.geometry;
  json j = {{"n", c.n},
            {"epsilon", c.epsilon},
            {"theta", c.theta},
            {"K0", k0},
            {"rho", c.rho},
            {"t_max", c.t_max},
            {"margins", {{"c", c.margins.c}, {"glue_ratio", c.margins.glue_ratio}}},
            {"geometry",
             {{"edge_keep", g.edge_keep},
              {"edge_blend0", g.edge_blend0},
              {"edge_blend1", g.edge_blend1},
              {"edge_outer", g.edge_outer},
              {"edge_h", g.edge_h},
              {"sq_outer", g.sq_outer},
              {"sq_blend0", g.sq_blend0},
              {"sq_blend1", g.sq_blend1},
              {"sq_inner", g.sq_inner},
              {"sq_vertex", g.sq_vertex},
              {"sq_h", g.sq_h}}},
            {"delta_vertex", c.delta_vertex},
            {"delta_edge", c.delta_edge},
            {"balance",
             {{"eta", c.balance.eta},
              {"boundary_h", c.balance.boundary_h},
              {"fine_h", c.balance.fine_h},
              {"max_iter", c.balance.max_iter},
              {"qmc_budget", c.balance.qmc_budget}}},
            {"tol_det", c.tol_det},
            {"tau_in", c.tau_in},
            {"tol_hole", c.tol_hole},
            {"tol_compat", c.tol_compat},
            {"moser_steps", c.moser_steps},
            {"compat_samples", c.compat_samples},
            {"nice_samples", c.nice_samples},
            {"seed", c.seed},
            {"threads", c.threads}};
  return j.dump();
}

PipelineConfig config_from_json(const std::string& text) {
  PipelineConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::input_error, std::string("pipeline config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::input_error, "pipeline config must be an object");
  try {
    auto get = [&](const json& o, const char* k, auto& v) {
      if (o.contains(k)) v = o.at(k).get<std::decay_t<decltype(v)>>();
    };
    get(j, "n", c.n);
    get(j, "epsilon", c.epsilon);
    get(j, "theta", c.theta);
    get(j, "rho", c.rho);
    get(j, "t_max", c.t_max);
    get(j, "delta_vertex", c.delta_vertex);
    get(j, "delta_edge", c.delta_edge);
    get(j, "tol_det", c.tol_det);
    get(j, "tau_in", c.tau_in);
    get(j, "tol_hole", c.tol_hole);
    get(j, "tol_compat", c.tol_compat);
    get(j, "moser_steps", c.moser_steps);
    get(j, "compat_samples", c.compat_samples);
    get(j, "nice_samples", c.nice_samples);
    get(j, "seed", c.seed);
    get(j, "threads", c.threads);
    if (j.contains("K0"))
      for (const auto& p : j.at("K0")) c.K0.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    if (j.contains("margins")) {
      get(j["margins"], "c", c.margins.c);
      get(j["margins"], "glue_ratio", c.margins.glue_ratio);
    }
    if (j.contains("geometry")) {
      const json& g = j["geometry"];
      StageGeometry& s = c.geometry;
      get(g, "edge_keep", s.edge_keep);
      get(g, "edge_blend0", s.edge_blend0);
      get(g, "edge_blend1", s.edge_blend1);
      get(g, "edge_outer", s.edge_outer);
      get(g, "edge_h", s.edge_h);
      get(g, "sq_outer", s.sq_outer);
      get(g, "sq_blend0", s.sq_blend0);
      get(g, "sq_blend1", s.sq_blend1);
      get(g, "sq_inner", s.sq_inner);
      get(g, "sq_vertex", s.sq_vertex);
      get(g, "sq_h", s.sq_h);
    }
    if (j.contains("balance")) {
      const json& b = j["balance"];
      get(b, "eta", c.balance.eta);
      get(b, "boundary_h", c.balance.boundary_h);
      get(b, "fine_h", c.balance.fine_h);
      get(b, "max_iter", c.balance.max_iter);
      get(b, "qmc_budget", c.balance.qmc_budget);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input_error, std::string("pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string RegularizationReport::to_json() const {
  json st = json::array();
  const char* names[3] = {"vertex", "edge", "square"};
  for (int m = 0; m < 3; ++m) {
    const StageSummary& s = stages[m];
    st.push_back({{"stage", names[m]},
                  {"cells", s.cells},
                  {"frozen", s.frozen},
                  {"constructed", s.constructed},
                  {"seconds", s.seconds},
                  {"fairness_max", s.fairness_max},
                  {"fairness_mean", s.fairness_mean},
                  {"fairness_histogram_log10_from_-16", s.histogram},
                  {"c1_max", s.c1_max},
                  {"regularity_c2_max", s.regularity_max},
                  {"bytes", s.bytes},
                  {"primitives", s.primitives}});
  }
  const GlobalMetrics& g = metrics;
  json holes_j = json::array();
  for (const HoleEntry& h : holes)
    holes_j.push_back({{"square", h.square},
                       {"residual", h.hole},
                       {"error", h.error},
                       {"fairness_abs_sum", h.budget},
                       {"fairness_signed", h.signed_sum}});
  json j = {{"map", json::parse(map)},
            {"config", json::parse(config)},
            {"seed", seed},
            {"processed_squares", processed},
            {"seconds", seconds},
            {"stages", st},
            {"metrics",
             {{"c1_distance", g.c1_distance},
              {"det_max", g.det_max},
              {"det_samples", g.det_samples},
              {"dual_max", g.dual_max},
              {"dual_samples", g.dual_samples},
              {"exact_outside", g.exact_outside},
              {"outside_samples", g.outside_samples},
              {"exact_near_K0", g.exact_near_K0},
              {"K0_samples", g.K0_samples},
              {"probe",
               {{"h", g.probe.h}, {"input", g.probe.input}, {"output", g.probe.output}, {"samples", g.probe.samples}}},
              {"hole_worst", g.hole_worst},
              {"telescoping_ok", g.telescoping_ok},
              {"regularity_proxy", "C2 distance at unit scale; higher derivatives not certified"}}},
            {"holes", holes_j}};
  return j.dump(1);
}

}  // namespace conreg

namespace conreg {

std::vector<CheckResult> verify_report(const std::string& report_json, const std::string& thresholds_json) {
  json r, t;
  try {
    r = json::parse(report_json);
    t = json::parse(thresholds_json);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::input_error, std::string("verify: ") + e.what());
  }
  if (!t.is_object() || !r.is_object() || !r.contains("metrics"))
    throw Error(ErrorCode::input_error, "verify: report needs metrics and thresholds must be an object");
  std::vector<CheckResult> out;
  try {
    const json& m = r.at("metrics");
    auto skip = [&](const char* k) {
      return !t.contains(k) || t[k].is_null() || (t[k].is_string() && t[k].get<std::string>() == "inf");
    };
    auto at_most = [&](const char* k, double v) {
      if (skip(k)) return;
      double th = t[k].get<double>();
      out.push_back({k, v <= th, v, th});
    };
    auto flag = [&](const char* k, bool v) {
      if (skip(k)) return;
      bool want = t[k].get<bool>();
      out.push_back({k, !want || v, v ? 1.0 : 0.0, want ? 1.0 : 0.0});
    };
    at_most("c1_distance", m.at("c1_distance").get<double>());
    at_most("det_max", m.at("det_max").get<double>());
    at_most("dual_max", m.at("dual_max").get<double>());
    const json& p = m.at("probe");
    std::vector<double> in = p.at("input"), ou = p.at("output");
    if (!in.empty()) {
      double gi = std::max(in.back(), kProbeFloor) / std::max(in.front(), kProbeFloor);
      double go = 0.0;
      for (double x : ou) go = std::max(go, std::max(x, kProbeFloor) / std::max(ou.front(), kProbeFloor));
      if (!skip("probe_input_growth")) {
        double th = t["probe_input_growth"].get<double>();
        out.push_back({"probe_input_growth", gi >= th, gi, th});
      }
      at_most("probe_output_growth", go);
    }
    flag("exact_outside", m.at("exact_outside").get<bool>());
    flag("exact_near_K0", m.at("exact_near_K0").get<bool>());
    if (!skip("telescoping")) {
      double worst = -INFINITY;
      for (const json& h : r.at("holes"))
        worst = std::max(worst, std::abs(h.at("residual").get<double>()) - h.at("fairness_abs_sum").get<double>() -
                                    h.at("error").get<double>());
      if (r.at("holes").empty()) worst = 0.0;
      bool want = t["telescoping"].get<bool>();
      out.push_back({"telescoping", !want || worst <= 0.0, worst, 0.0});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input_error, std::string("verify: ") + e.what());
  }
  return out;
}

}  // namespace conreg
