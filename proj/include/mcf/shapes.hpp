#pragma once

// Test zoo of closed immersions with closed-form derivatives.
//
//   round-sphere(r [, tilt])     axisym in any space form (r is the geodesic
//                                radius), latlong in flat charts
//   ellipsoid(a, b, ...)         axisym when all semi-axes after the first
//                                agree (a lies on the symmetry axis); latlong
//                                with three semi-axes (polar, x, y)
//   product-torus(r_1..r_n)      S^1(r_1) x ... x S^1(r_n) in R^{2n}
//   clifford-torus([R])          R/sqrt2 (cos u, sin u, cos v, sin v) in S^3(1/R^2)
//   graph-torus(a, b, eps, k[, m]) ((a + eps cos(kv + mu)) e^{iu}, b e^{iv}) in R^4
//   graph-torus(eps, k)          R (cos al e^{iu}, sin al e^{iv}), al = pi/4 + eps cos kv, in S^3
//
// In codimension d >= 2 the axisym symmetry axis is rotated by `tilt` inside
// the plane of the first two axial coordinates.

#include "mcf/immersion.hpp"

#include <string>
#include <vector>

namespace mcf {

struct ShapeSpec {
  std::string kind;
  std::vector<double> params;
  int n = 2;
  int codim = 1;
};

DiscreteImmersion build_immersion(const ShapeSpec& shape, const AmbientModel& ambient,
                                  Topology topology, const std::vector<int>& sizes,
                                  DerivativeSource source);

/// Default grid topology for a shape.
Topology default_topology(const std::string& kind);

}  // namespace mcf
