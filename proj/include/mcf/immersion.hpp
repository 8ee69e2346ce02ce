#pragma once

// Sampled immersions F: M^n -> N^{n+d} on structured parameter grids.
//
// Grid topologies:
//   torus   : n periodic axes, u_a = i * 2pi / N_a
//   latlong : n = 2 sphere topology, axis 0 colatitude (cell centered on
//             (0, pi)), axis 1 longitude (periodic, even node count)
//   axisym  : one profile axis s_i = (i + 1/2) pi / N; the hypersurface is
//             (r(s) w(theta), z(s)) with w the unit sphere S^{n-1} in a gnomonic
//             chart around its first axis. Nodes sit at theta = 0; the n-1
//             angular directions are carried analytically.
//
// A Jet holds the embedding point and all partial derivatives up to order 3
// in the parameter coordinates. Jets come either from centered finite
// differences of the node positions or from closed-form shape derivatives.

#include "mcf/ambient.hpp"

#include <array>
#include <memory>
#include <string>
#include <vector>

namespace mcf {

enum class Topology { torus, latlong, axisym };
enum class DerivativeSource { finite_difference, analytic };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);
std::string to_string(DerivativeSource s);
DerivativeSource derivative_source_from_string(const std::string& s);

struct ParamGrid {
  int n = 2;
  Topology topology = Topology::torus;
  std::vector<int> sizes;        // one entry per grid axis
  std::vector<double> spacings;  // one entry per grid axis
  std::vector<double> origins;   // coordinate of index 0 per grid axis

  static ParamGrid make(Topology topology, int n, std::vector<int> sizes);

  int grid_axes() const { return static_cast<int>(sizes.size()); }
  long node_count() const;
  std::array<int, kMaxN> index(long node) const;
  long node(const std::array<int, kMaxN>& idx) const;
  double coord(int axis, int i) const { return origins[axis] + i * spacings[axis]; }
  /// Parameter coordinates of a node (angular axisym coordinates are 0).
  std::array<double, kMaxN> params(long node) const;
  /// Product of grid spacings (the quadrature cell size).
  double cell() const;
  void validate() const;
};

struct Jet {
  int n = 0;
  Vec x;
  std::array<Vec, kMaxN> d1;
  std::array<Vec, kMaxN * kMaxN> d2;
  std::array<Vec, kMaxN * kMaxN * kMaxN> d3;

  const Vec& F(int i) const { return d1[i]; }
  const Vec& F(int i, int j) const { return d2[i * kMaxN + j]; }
  const Vec& F(int i, int j, int k) const { return d3[(i * kMaxN + j) * kMaxN + k]; }
  Vec& F(int i) { return d1[i]; }
  Vec& F(int i, int j) { return d2[i * kMaxN + j]; }
  Vec& F(int i, int j, int k) { return d3[(i * kMaxN + j) * kMaxN + k]; }
};

/// Closed-form shape used by the analytic derivative source.
class AnalyticShape {
 public:
  virtual ~AnalyticShape() = default;
  /// Jet at parameter coordinates u (torus / latlong grids).
  virtual Jet jet(const std::array<double, kMaxN>& u) const = 0;
  /// Profile point and its first three s-derivatives (axisym grids).
  virtual std::array<Vec, 4> profile(double s) const = 0;
};

struct AdaptedFrame {
  std::vector<Vec> tangent;  // coordinate tangent vectors dF/dx^i
  std::vector<Vec> normal;   // orthonormal normal vectors e_alpha
};

struct InducedMetric {
  SmallMat g;
  SmallMat ginv;
  double sqrt_det = 0.0;
};

class DiscreteImmersion {
 public:
  DiscreteImmersion(AmbientModel ambient, ParamGrid grid, std::vector<Vec> positions,
                    DerivativeSource source, std::shared_ptr<const AnalyticShape> shape,
                    int codim);

  const AmbientModel& ambient() const { return ambient_; }
  const ParamGrid& grid() const { return grid_; }
  DerivativeSource source() const { return source_; }
  int n() const { return grid_.n; }
  int codim() const { return codim_; }
  long node_count() const { return grid_.node_count(); }
  const std::vector<Vec>& positions() const { return positions_; }
  const Vec& position(long node) const { return positions_[node]; }

  /// Same grid and ambient with new positions; the derivative source becomes
  /// finite differences.
  DiscreteImmersion with_positions(std::vector<Vec> positions) const;
  /// Same immersion with the other derivative source where available.
  DiscreteImmersion with_source(DerivativeSource source) const;

  Jet jet(long node) const;
  /// Jet with derivatives up to second order only.
  Jet jet2(long node) const;
  /// Jet at the node shifted by k steps of field_step(axis) along a parameter
  /// axis (angular axisym axes included).
  Jet shifted_jet(long node, int axis, int k) const;
  /// Parameter step used by shifted_jet.
  double field_step(int axis) const;
  /// True when shifted jets along the axis are neighbouring grid nodes (second
  /// order differences); otherwise the shift is a small parameter step and
  /// fourth order differences are used.
  bool field_on_grid(int axis) const;

  /// Node reached by k grid steps along a grid axis, following the periodic
  /// and pole identifications.
  long neighbor(long node, int axis, int k) const;
  /// Position at an arbitrary (possibly out of range) grid index.
  Vec position_at(std::array<int, kMaxN> idx) const;

  /// Physical grid spacing sqrt(g_aa) h_a minimized over nodes and grid axes.
  double min_spacing() const;
  /// Quadrature weight of a node excluding sqrt(det g).
  double weight() const;

  void check() const;

 private:
  Jet fd_jet(const std::array<int, kMaxN>& idx) const;
  Jet axisym_jet(const std::array<Vec, 4>& prof, const std::array<double, kMaxN>& theta) const;
  std::array<Vec, 4> fd_profile(int i) const;

  AmbientModel ambient_;
  ParamGrid grid_;
  std::vector<Vec> positions_;
  DerivativeSource source_;
  std::shared_ptr<const AnalyticShape> shape_;
  int codim_;
  double delta_ = 1e-3;
};

InducedMetric induced_metric(const DiscreteImmersion& imm, const Jet& jet);
InducedMetric induced_metric(const DiscreteImmersion& imm, long node);
AdaptedFrame adapted_frame(const DiscreteImmersion& imm, const Jet& jet);
AdaptedFrame adapted_frame(const DiscreteImmersion& imm, long node);
/// Orthonormal normal frame by Gram-Schmidt of the embedding basis against
/// the tangent vectors (and the ambient constraint normal).
std::vector<Vec> normal_frame(const AmbientModel& amb, const Vec& x,
                              const std::vector<Vec>& tangent);

double total_volume(const DiscreteImmersion& imm);

/// Intrinsic diameter estimate: axisym uses the meridian length and the widest
/// parallel, grids use graph distances with metric edge lengths.
double diameter_estimate(const DiscreteImmersion& imm);

/// CSV with parameter coordinates followed by ambient coordinates.
std::string immersion_csv(const DiscreteImmersion& imm);

}  // namespace mcf
