#pragma once

#include <conreg/dyadic.hpp>
#include <conreg/extension.hpp>
#include <conreg/input_map.hpp>
#include <conreg/mass_mover.hpp>
#include <conreg/metrics.hpp>

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace conreg {

// cell-relative lengths used by the edge and square stages, as multiples of the cell side
struct StageGeometry {
  // edge: vertex germs kept on boxes of half-width keep, blended out over [blend0, blend1],
  // volume corrected on the annulus between keep and outer
  double edge_keep = 0.30, edge_blend0 = 0.34, edge_blend1 = 0.44, edge_outer = 0.49;
  double edge_h = 0.025;
  // square: boundary germ kept to depth blend0, gone at depth blend1, volume corrected on the
  // depth range [outer, inner]; vertex germs own boxes of half-width vertex_box
  double sq_outer = 0.07, sq_blend0 = 0.09, sq_blend1 = 0.12, sq_inner = 0.14, sq_vertex = 0.14;
  double sq_h = 0.01;
  void validate(const Margins& mg) const;
};

struct PipelineConfig {
  int n = 2;
  double epsilon = 0.1;
  double theta = 0.04;
  std::vector<Vec2> K0;
  double rho = 1.0 / 16;
  int t_max = 10;
  Margins margins;
  StageGeometry geometry;
  double delta_vertex = 0.08;
  double delta_edge = 0.025;
  BalanceOptions balance;
  double tol_det = 1e-3;
  double tau_in = 1e-9;
  double tol_hole = 1e-4;
  double tol_compat = 1e-12;
  int moser_steps = 4;
  int compat_samples = 16;
  int nice_samples = 5;
  uint64_t seed = 1;
  int threads = 1;
  // throws invalid_parameter / invalid_margins
  void validate() const;
  // frozen radius at stage m
  double frozen_radius(int m) const { return std::ldexp(theta, n - m - 1); }
};

enum class Provenance { frozen, constructed };

struct NiceReport {
  double c1 = 0.0;          // c1 distance to f on R(x)
  double regularity = 0.0;  // C2 distance of the rescaled map to the rescaled affine seed
  double fairness = 0.0;    // max over neighbours of the volume residual
};

struct FairnessEntry {
  int square = -1;         // good square containing the neighbour ball
  double residual = 0.0;   // achieved - target, physical area
  double error = 0.0;
};

struct CellAssignment {
  int m = 0, id = -1;
  Provenance provenance = Provenance::frozen;
  SmoothMap h;
  NiceReport nice;
  std::vector<FairnessEntry> fairness;
  size_t bytes = 0;
  int primitives = 0;
  double seconds = 0.0;
  // squares only
  double hole = 0.0;          // area enclosed by the image of the hole boundary minus its area
  double hole_error = 0.0;
  double hole_budget = 0.0;   // sum of |fairness residuals| of the sub-cells landing in the square
  double hole_signed = 0.0;   // minus the signed sum
  double correction_mass = 0.0;
};

struct StageSummary {
  int cells = 0, frozen = 0, constructed = 0;
  double seconds = 0.0;
  double fairness_max = 0.0, fairness_mean = 0.0;
  double c1_max = 0.0, regularity_max = 0.0;
  size_t bytes = 0;
  long primitives = 0;
  std::vector<int> histogram;  // fairness residuals by decade, 1e-16 .. 1e-2
};

struct ProbeTable {
  std::vector<double> h;
  std::vector<double> input, output;  // max second-difference quotient per scale
  size_t samples = 0;
};

struct GlobalMetrics {
  double c1_distance = 0.0;
  double det_max = 0.0;
  long det_samples = 0;
  double dual_max = 0.0;
  long dual_samples = 0;
  bool exact_outside = true;
  long outside_samples = 0;
  bool exact_near_K0 = true;
  long K0_samples = 0;
  ProbeTable probe;
  double hole_worst = 0.0;  // max of |hole| - budget - error over squares
  bool telescoping_ok = true;
};

struct HoleEntry {
  int square = -1;
  double hole = 0.0, error = 0.0, budget = 0.0, signed_sum = 0.0;
};

struct RegularizationReport {
  std::array<StageSummary, 3> stages;
  GlobalMetrics metrics;
  double seconds = 0.0;
  std::string map, config;
  uint64_t seed = 1;
  long processed = 0;
  std::vector<HoleEntry> holes;
  std::string to_json() const;
};

struct Regularized {
  SmoothMap map;  // f~
  std::shared_ptr<WhitneyDecomposition> decomposition;
  std::array<std::vector<CellAssignment>, 3> cells;
  std::array<std::vector<char>, 3> frozen;
  RegularizationReport report;
};

// the affine map with matrix Df(b) at the barycenter b; throws input_error when |det - 1| > tau_in
std::shared_ptr<AffinePrim> affine_seed(const InputMap& f, const Vec2& b, double tau_in = 1e-9);

// residuals (i) and (ii) on R(x) given as a box, with `n` low-discrepancy samples
NiceReport check_nice(const MapLike& h, const InputMap& f, const Box2& R, const AffinePrim& H, const Rescale& lam,
                      int n, uint64_t seed);

// max |g(z + h e) - 2 g(z) + g(z - h e)| / h^2 over points and the two axis directions
ProbeTable smoothness_probe(const MapLike& input, const MapLike& output, const std::vector<Vec2>& points,
                            const std::vector<double>& scales);

// boundary of the part of the box left after removing the given boxes, which all touch its boundary
Polygon hole_boundary(const Box2& x, const std::vector<Box2>& cut);

Regularized regularize(InputMapPtr f, std::shared_ptr<const RegionSpec> U, const PipelineConfig& cfg);

// fills report.metrics; sample counts as in the acceptance suite
void measure(Regularized& r, const InputMap& f, const PipelineConfig& cfg);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0, threshold = 0.0;
};

// quotients below this are rounding noise in the probe growth ratios
constexpr double kProbeFloor = 1e-6;

// compares a report against thresholds {"c1_distance":..,"det_max":..,"dual_max":..,"probe_input_growth":..,
// "probe_output_growth":..,"exact_outside":bool,"exact_near_K0":bool,"telescoping":bool}; a missing or null
// threshold, or the string "inf", skips the check. Throws input_error on schema mismatch.
std::vector<CheckResult> verify_report(const std::string& report_json, const std::string& thresholds_json);

PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& c);

}  // namespace conreg
