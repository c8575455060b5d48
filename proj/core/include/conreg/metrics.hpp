#pragma once

#include <conreg/maps.hpp>
#include <conreg/types.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace conreg {

// hierarchical seed derivation (splitmix64 mixing)
uint64_t mix_seed(uint64_t a, uint64_t b);
template <class... Ts>
uint64_t derive_seed(uint64_t master, Ts... tags) {
  uint64_t s = master;
  ((s = mix_seed(s, static_cast<uint64_t>(tags))), ...);
  return s;
}

// radical inverse in base b
double radical_inverse(uint64_t i, int base);

// 2-D Halton points in box, Cranley-Patterson shifted by a seed-derived offset
std::vector<Vec2> halton_points(const Box2& box, int n, uint64_t seed);

struct C1Metric {
  int samples = 4096;
  uint64_t seed = 1;
  bool include_corners = true;
};

// max over samples of |g-h|_inf + |Jg-Jh|_max
double c1_distance(const MapLike& g, const MapLike& h, const Box2& region, const C1Metric& m = {});
// same, over an explicit point list
double c1_distance(const MapLike& g, const MapLike& h, const std::vector<Vec2>& pts);

struct VolumeEstimate {
  double value = 0.0;
  double error = 0.0;
};

// low-discrepancy estimate of vol{z in box : inside(z)}
VolumeEstimate region_volume(const std::function<bool(const Vec2&)>& inside, const Box2& box,
                             uint64_t seed, long budget);

using Polygon = std::vector<Vec2>;

// signed area (counter-clockwise positive)
double polygon_area(const Polygon& p);
// Sutherland-Hodgman clip of a polygon against a closed box
Polygon clip_to_box(const Polygon& p, const Box2& b);
// area of p inside box, and the estimate obtained from every other vertex
VolumeEstimate clipped_area(const Polygon& p, const Box2& b);

// boundary of a box as a counter-clockwise polygon; points are inserted so that spacing is
// at most `h` everywhere and at most `h_fine` inside any of the given coordinate bands
struct Band {
  int axis;  // 0: band in x, 1: band in y
  double lo, hi;
};
Polygon box_boundary(const Box2& b, double h, double h_fine = 0.0, const std::vector<Band>& bands = {});
// same for a closed polygon with axis-parallel edges, given by its corners
Polygon refine_polygon(const Polygon& corners, double h, double h_fine = 0.0, const std::vector<Band>& bands = {});

}  // namespace conreg
