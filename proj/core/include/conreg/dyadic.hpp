#pragma once

#include <conreg/types.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace conreg {

constexpr int kMaxDim = 3;

struct DyadicCell {
  int n = 2;
  int t = 0;
  std::array<int64_t, kMaxDim> a{};
  std::array<uint8_t, kMaxDim> b{};

  int m() const {
    int s = 0;
    for (int k = 0; k < n; ++k) s += b[k];
    return s;
  }
  double side() const { return std::ldexp(1.0, -t); }
  double lo(int k) const { return std::ldexp(double(a[k]), -t); }
  double hi(int k) const { return std::ldexp(double(a[k] + b[k]), -t); }
  // planar helpers (n == 2)
  Box2 box() const { return {Vec2(lo(0), lo(1)), Vec2(hi(0), hi(1))}; }
  Vec2 barycenter() const { return box().center(); }
  // interior: open product for m >= 1, the point itself for m = 0
  bool in_interior(const double* z) const;
  bool contains(const double* z) const;
  bool operator==(const DyadicCell& o) const;
  std::string str() const;
};

struct CellKeyHash {
  size_t operator()(const DyadicCell& c) const;
};

// open bounded domain with a conservative containment query for closed L-inf balls
class RegionSpec {
 public:
  virtual ~RegionSpec() = default;
  virtual int dim() const = 0;
  virtual std::array<double, 2 * kMaxDim> bbox() const = 0;  // lo..., hi...
  // closed L-inf ball B(z, r) contained in the (open) domain; never true when false
  virtual bool contains_ball(const double* z, double r) const = 0;
  // conservative "may intersect" test for a closed L-inf ball
  virtual bool may_intersect_ball(const double* z, double r) const = 0;
  virtual bool exact() const = 0;
};

class BoxRegion : public RegionSpec {
 public:
  BoxRegion(std::vector<double> lo, std::vector<double> hi);
  int dim() const override { return int(lo_.size()); }
  std::array<double, 2 * kMaxDim> bbox() const override;
  bool contains_ball(const double* z, double r) const override;
  bool may_intersect_ball(const double* z, double r) const override;
  bool exact() const override { return true; }

 private:
  std::vector<double> lo_, hi_;
};

// planar CSG of disks and boxes described by a signed distance bound
class ImplicitRegion : public RegionSpec {
 public:
  // negative inside; |value| is a lower bound on the Euclidean distance to the boundary
  using Sdf = std::function<double(const Vec2&)>;
  ImplicitRegion(Sdf sdf, Box2 bbox) : sdf_(std::move(sdf)), bb_(bbox) {}
  int dim() const override { return 2; }
  std::array<double, 2 * kMaxDim> bbox() const override;
  bool contains_ball(const double* z, double r) const override;
  bool may_intersect_ball(const double* z, double r) const override;
  bool exact() const override { return false; }

 private:
  Sdf sdf_;
  Box2 bb_;
};

// {"kind":"box","lo":[..],"hi":[..]} or {"kind":"implicit","expr":{...},"bbox":[lox,loy,hix,hiy]}
std::shared_ptr<RegionSpec> region_from_json(const std::string& text);

// margin widths w(m) * 2^-t for D and the gluing margin, as multiples of 2^-t
struct Margins {
  double c = 0.25;
  double glue_ratio = 0.25;
  double w(int m) const { return c * std::pow(4.0, -(m + 1)); }
  double glue(int m) const { return glue_ratio * w(m); }
  // throws invalid_margins when the nesting used by the construction fails
  void validate(int n) const;
};

struct CellRecord {
  DyadicCell cell;
  int rank = 0;
  // false when the cell touches the part of the domain left out by rank truncation
  bool complete = true;
  std::vector<int> incident;  // ids of good n-cells containing the cell
  std::array<std::vector<int>, kMaxDim> sub;  // sub[k]: ids of k-cells contained in the cell
};

struct WhitneyOptions {
  int t_max = 14;
  int max_depth = 48;
  long max_cells = 4000000;
};

class WhitneyDecomposition {
 public:
  int n() const { return n_; }
  double epsilon() const { return eps_; }
  int t_max() const { return tmax_; }
  const RegionSpec& domain() const { return *dom_; }
  const std::vector<CellRecord>& cells(int m) const { return cells_[m]; }
  size_t count(int m) const { return cells_[m].size(); }
  // id of a cell of dimension m, or -1
  int find(const DyadicCell& c) const;
  // id of the good n-cell whose interior contains z (n == 2), -1 if none
  int locate(const Vec2& z) const;
  // ids of all good n-cells containing z
  std::vector<int> containing(const Vec2& z) const;
  int min_t() const { return tmin_; }
  // lattice scale used for exact integer coordinates
  int lattice_t() const { return T_; }

  friend WhitneyDecomposition whitney_decompose(std::shared_ptr<const RegionSpec>, double,
                                                const WhitneyOptions&);

 private:
  int n_ = 2;
  double eps_ = 0;
  int tmax_ = 0;
  int tmin_ = 0;
  int T_ = 0;
  std::shared_ptr<const RegionSpec> dom_;
  std::array<std::vector<CellRecord>, kMaxDim + 1> cells_;
  std::array<std::unordered_map<DyadicCell, int, CellKeyHash>, kMaxDim + 1> index_;
};

WhitneyDecomposition whitney_decompose(std::shared_ptr<const RegionSpec> domain, double epsilon,
                                       const WhitneyOptions& opt = {});

// is the n-cell epsilon-small (diameter <= eps and its same-size neighbours lie in the domain)
bool epsilon_small(const RegionSpec& dom, const DyadicCell& x, double eps);

int rank(const WhitneyDecomposition& d, const DyadicCell& x);

// the 2^(n-m) n-cells of diameter 2^-t(x) containing x
std::vector<DyadicCell> neighbors(const WhitneyDecomposition& d, const DyadicCell& x);
std::vector<DyadicCell> neighbors_at(const DyadicCell& x, int t);

// lambda_x(z) = b + 2^(-t+1) z
struct Rescale {
  Vec2 b;
  double s;
  Vec2 apply(const Vec2& z) const { return b + s * z; }
  Vec2 inverse(const Vec2& z) const { return (z - b) / s; }
};
Rescale lambda_rescale(const DyadicCell& x, int rank);

// planar region made of boxes: (union of plus) minus (union of minus)
struct BoxRegionSet {
  std::vector<Box2> plus, minus;
  bool contains(const Vec2& z) const;
  bool contains_open(const Vec2& z) const;
  Box2 hull() const;
};

struct CellNeighborhoods {
  BoxRegionSet D, I, J, B, R;
  double dD = 0, dGlue = 0;
};

// D, I, J, B, R for a cell of dimension m with id `id` (n == 2)
CellNeighborhoods neighborhoods(const WhitneyDecomposition& d, int m, int id, const Margins& mg);

// sub-cells of a cell: vertices and edges contained in it (n == 2)
std::vector<std::pair<int, int>> subcells(const WhitneyDecomposition& d, int m, int id);

}  // namespace conreg
