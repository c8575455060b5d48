#include <conreg/regularizer.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace conreg;
using json = nlohmann::json;

namespace {

enum Exit { ok = 0, failed = 1, input = 2, convergence = 3 };

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::input_error, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::input_error, "cannot write " + path);
  out << text;
}

struct RunSpec {
  InputMapPtr map;
  std::shared_ptr<RegionSpec> domain;
  PipelineConfig cfg;
};

// {"map":{...},"domain":{...},"pipeline":{...}}
RunSpec load_run(const std::string& path) {
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::input_error, path + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("map") || !j.contains("domain"))
    throw Error(ErrorCode::input_error, path + ": needs \"map\" and \"domain\"");
  RunSpec r;
  r.map = map_from_json(j["map"].dump());
  r.domain = region_from_json(j["domain"].dump());
  r.cfg = config_from_json(j.value("pipeline", json::object()).dump());
  return r;
}

void dump_fields(const std::string& dir, const Regularized& R, const InputMap& f) {
  std::filesystem::create_directories(dir);
  const WhitneyDecomposition& d = *R.decomposition;
  auto bb = d.domain().bbox();
  Box2 W{Vec2(bb[0], bb[1]), Vec2(bb[2], bb[3])};
  const int N = 128;
  std::ofstream det(dir + "/det_error.csv"), diff(dir + "/difference.csv"), cells(dir + "/cells.csv");
  det << "x,y,det_minus_1\n";
  diff << "x,y,abs_difference\n";
  det.precision(17);
  diff.precision(17);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      Vec2 z = W.lo + Vec2(W.size().x() * (i + 0.5) / N, W.size().y() * (j + 0.5) / N);
      det << z.x() << "," << z.y() << "," << R.map.jet(z).J.determinant() - 1.0 << "\n";
      diff << z.x() << "," << z.y() << "," << (R.map.eval(z) - f.eval(z)).cwiseAbs().maxCoeff() << "\n";
    }
  cells << "dim,id,t,x0,y0,x1,y1,rank,complete,frozen\n";
  for (int m = 0; m < 3; ++m)
    for (size_t i = 0; i < d.count(m); ++i) {
      const CellRecord& c = d.cells(m)[i];
      Box2 b = c.cell.box();
      cells << m << "," << i << "," << c.cell.t << "," << b.lo.x() << "," << b.lo.y() << "," << b.hi.x() << ","
            << b.hi.y() << "," << c.rank << "," << c.complete << "," << int(R.frozen[m][i]) << "\n";
    }
}

int run_regularize(const std::string& config, const std::string& out, const std::string& dump,
                   std::optional<uint64_t> seed, std::optional<int> threads) {
  RunSpec r = load_run(config);
  if (seed) r.cfg.seed = *seed;
  if (threads) r.cfg.threads = *threads;
  Regularized R = regularize(r.map, r.domain, r.cfg);
  measure(R, *r.map, r.cfg);
  std::string text = R.report.to_json();
  if (out.empty())
    std::cout << text << "\n";
  else
    write_file(out, text);
  if (!dump.empty()) dump_fields(dump, R, *r.map);
  const GlobalMetrics& g = R.report.metrics;
  std::fprintf(stderr, "processed %ld squares in %.1f s; c1 %.3e det %.3e dual %.3e\n", R.report.processed,
               R.report.seconds, g.c1_distance, g.det_max, g.dual_max);
  return ok;
}

int run_probe(const std::string& config, const std::string& out, int per_side) {
  RunSpec r = load_run(config);
  auto bb = r.domain->bbox();
  Box2 W{Vec2(bb[0], bb[1]), Vec2(bb[2], bb[3])};
  std::vector<Vec2> pts;
  for (int j = 0; j < per_side; ++j)
    for (int i = 0; i < per_side; ++i) {
      Vec2 z = W.lo + Vec2(W.size().x() * (i + 0.5) / per_side, W.size().y() * (j + 0.5) / per_side);
      double p[2] = {z.x(), z.y()};
      if (r.domain->contains_ball(p, 0.0)) pts.push_back(z);
    }
  std::vector<double> scales;
  for (int k = 6; k <= 12; ++k) scales.push_back(std::ldexp(1.0, -k));
  ProbeTable t = smoothness_probe(*r.map, *r.map, pts, scales);
  json j = {{"h", t.h}, {"quotient", t.input}, {"samples", t.samples}};
  json ratio = json::array();
  for (double q : t.input) ratio.push_back(std::max(q, kProbeFloor) / std::max(t.input.front(), kProbeFloor));
  j["ratio_to_coarsest"] = ratio;
  if (out.empty())
    std::cout << j.dump(1) << "\n";
  else
    write_file(out, j.dump(1));
  return ok;
}

int run_verify(const std::string& report, const std::string& thresholds) {
  auto checks = verify_report(slurp(report), slurp(thresholds));
  bool all = true;
  for (const CheckResult& c : checks) {
    std::printf("%-22s %s  value %.6g  threshold %.6g\n", c.name.c_str(), c.pass ? "pass" : "FAIL", c.value,
                c.threshold);
    all = all && c.pass;
  }
  return all ? ok : failed;
}

int run_cells(const std::string& config, const std::string& out) {
  RunSpec r = load_run(config);
  WhitneyOptions wo;
  wo.t_max = r.cfg.t_max;
  WhitneyDecomposition d = whitney_decompose(r.domain, r.cfg.epsilon, wo);
  json j = {{"epsilon", d.epsilon()}, {"t_max", d.t_max()}};
  const char* names[3] = {"vertices", "edges", "squares"};
  for (int m = 0; m < 3; ++m) {
    std::map<int, int> by_rank;
    int incomplete = 0;
    for (const CellRecord& c : d.cells(m)) {
      ++by_rank[c.rank];
      incomplete += !c.complete;
    }
    json br = json::object();
    for (auto [k, n] : by_rank) br[std::to_string(k)] = n;
    j[names[m]] = {{"count", d.count(m)}, {"incomplete", incomplete}, {"by_rank", br}};
  }
  if (out.empty())
    std::cout << j.dump(1) << "\n";
  else
    write_file(out, j.dump(1));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smooth volume-preserving approximation of C1 area-preserving maps"};
  app.require_subcommand(1);
  std::string config, out, dump, report, thresholds;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  int per_side = 64;

  auto* reg = app.add_subcommand("regularize", "run the pipeline and write a report");
  reg->add_option("--config", config, "run config (map, domain, pipeline)")->required()->check(CLI::ExistingFile);
  reg->add_option("--out", out, "report path (stdout if omitted)");
  reg->add_option("--dump-fields", dump, "directory for CSV field dumps");
  reg->add_option("--seed", seed, "master seed");
  reg->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* probe = app.add_subcommand("probe", "second-difference table of the input map");
  probe->add_option("--config", config, "run config")->required()->check(CLI::ExistingFile);
  probe->add_option("--out", out, "output path");
  probe->add_option("--points", per_side, "sample grid per side")->check(CLI::PositiveNumber);

  auto* ver = app.add_subcommand("verify", "check a report against thresholds");
  ver->add_option("report", report, "report JSON")->required()->check(CLI::ExistingFile);
  ver->add_option("thresholds", thresholds, "thresholds JSON")->required()->check(CLI::ExistingFile);

  auto* cel = app.add_subcommand("cells", "summary of the Whitney decomposition");
  cel->add_option("--config", config, "run config")->required()->check(CLI::ExistingFile);
  cel->add_option("--out", out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? ok : input;
  }
  try {
    if (*reg) return run_regularize(config, out, dump, seed, threads);
    if (*probe) return run_probe(config, out, per_side);
    if (*ver) return run_verify(report, thresholds);
    if (*cel) return run_cells(config, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_convergence_failure(e.code()) ? convergence : input;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return input;
  }
  return input;
}
