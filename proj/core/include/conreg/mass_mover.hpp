#pragma once

#include <conreg/maps.hpp>
#include <conreg/metrics.hpp>

#include <functional>
#include <vector>

namespace conreg {

using Corner = std::vector<int>;  // entries in {-1, 0, 1}

// balls B(p, 1) around the corners p = sum_{i not in S} (+-1) e_i
struct BallCluster {
  int n = 2;
  std::vector<int> S;  // spanned axes, |S| = k <= n - 1
  double delta = 0.08;

  static BallCluster make(int n, std::vector<int> S, double delta = 0.08);
  int k() const { return int(S.size()); }
  std::vector<Corner> points() const;
};

bool adjacent(const Corner& a, const Corner& b);
// Hamiltonian path on P through the reflected binary code
std::vector<Corner> gray_path(const BallCluster& c);

Vec2 corner2(const Corner& p);
inline Box2 unit_ball(const Vec2& p) { return Box2::centered(p, 1.0); }

// physical = center + scale * cluster coordinates
struct Frame {
  Vec2 center = Vec2::Zero();
  double scale = 1.0;
};

// s_t(z) = z + t phi(z) (p - p') in the given frame; throws amplitude-exceeded for |t| >= delta/100
PrimitivePtr build_shear(const BallCluster& c, const Vec2& p, const Vec2& pp, double t, const Frame& fr = {});

// d/dt vol(s_t(W) n B(p,1)) for a region crossing the channel: 2 * (delta/4) * int phi
double channel_flux(const BallCluster& c);

struct BalanceOptions {
  double eta = 1e-7;         // balance tolerance on per-ball volumes (cluster units)
  double boundary_h = 2e-3;  // boundary spacing of W
  double fine_h = 2.5e-4;    // spacing inside the channel bands
  int max_iter = 60;
  long qmc_budget = 0;       // >0: cross-check volumes with low-discrepancy sampling
  uint64_t seed = 1;
  double locality_tol = 1e-12;
};

struct BalanceStep {
  Vec2 p, pp;
  double t = 0.0;
  int iterations = 0;
  std::vector<double> before, after;  // ball volumes around the step
  double locality = 0.0;              // max change on balls outside the pair
};

struct BalanceReport {
  std::vector<Vec2> path;
  std::vector<double> target;    // vol(W n B(p,1))
  std::vector<double> achieved;  // vol(F(s(W)) n B(p,1))
  std::vector<double> error;     // estimator error per ball
  double max_residual = 0.0;
  double conservation = 0.0;  // sum achieved - sum target
  double conservation_error = 0.0;
  std::vector<BalanceStep> steps;
  double locality_max = 0.0;
  bool locality_ok = true;
  std::vector<double> qmc, qmc_error;
  double qmc_max_residual = 0.0;
};

// W: disjoint boxes in cluster units; F in cluster units (F_inverse only used by the sampling cross-check).
// Returns the shear chain in the frame `fr`.
SmoothMap balance_volumes(const MapLike& F, const std::vector<Box2>& W, const BallCluster& c,
                          const BalanceOptions& opt = {}, BalanceReport* report = nullptr, const Frame& fr = {},
                          const std::function<Vec2(const Vec2&)>& F_inverse = nullptr);

// per-ball volumes of F(s(W)) measured with boundary polygons
std::vector<VolumeEstimate> ball_volumes(const MapLike& F, const SmoothMap& s, const std::vector<Box2>& W,
                                         const std::vector<Vec2>& balls, double h, double h_fine,
                                         const std::vector<Band>& bands);

}  // namespace conreg
