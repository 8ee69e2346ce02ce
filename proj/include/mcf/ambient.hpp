#pragma once

// Model ambient spaces N^{n+d}: Euclidean space, round spheres and hyperbolic
// spaces in global embedding charts, and a conformally perturbed Euclidean
// space that carries nonzero covariant derivative of curvature.
//
// Points and tangent vectors are stored in embedding coordinates:
//   euclidean, perturbed : R^m                (embed_dim == m)
//   sphere(c)            : {|x|^2 = 1/c} in R^{m+1}
//   hyperbolic(c)        : {<x,x>_L = -1/c, x_m > 0} in R^{m,1}, last slot timelike
//
// Curvature components follow the sign convention
//   R(U,V)W = -D_U D_V W + D_V D_U W + D_[U,V] W,  R_ABCD = <R(e_A,e_B)e_C, e_D>,
// so that R_1212 is the sectional curvature of span{e_1, e_2}.

#include "mcf/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mcf {

enum class AmbientKind { euclidean, sphere, hyperbolic, perturbed };

std::string to_string(AmbientKind k);
AmbientKind ambient_kind_from_string(const std::string& s);

struct CurvatureBounds {
  double K1 = 0.0;
  double K2 = 0.0;
  double L = 0.0;
  double i_N = 1.0;  // metadata only

  void validate() const;
};

class AmbientModel {
 public:
  static AmbientModel euclidean(int dim);
  static AmbientModel sphere(int dim, double c);
  static AmbientModel hyperbolic(int dim, double c);
  /// Conformal metric e^{2 phi} delta on R^dim, phi = amplitude * prod_i cos(k x_i).
  static AmbientModel perturbed(int dim, double amplitude, double wavenumber);

  AmbientKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int embed_dim() const { return has_constraint() ? dim_ + 1 : dim_; }
  double c() const { return c_; }
  double amplitude() const { return amplitude_; }
  double wavenumber() const { return wavenumber_; }

  bool is_space_form() const { return kind_ != AmbientKind::perturbed; }
  bool has_constraint() const {
    return kind_ == AmbientKind::sphere || kind_ == AmbientKind::hyperbolic;
  }
  /// Constant sectional curvature of a space form (0, c or -c).
  double space_form_curvature() const;

  /// Ambient metric <u,v> at x.
  double inner(const Vec& x, const Vec& u, const Vec& v) const;
  /// Christoffel correction G(u,v) so that D_u V = dV[u] + G(u,V) in embedding
  /// coordinates. Zero for the space forms (flat embedding connection).
  Vec christoffel(const Vec& x, const Vec& u, const Vec& v) const;
  /// Derivative of christoffel(x, u, v) along w with u, v held fixed.
  Vec christoffel_derivative(const Vec& x, const Vec& w, const Vec& u, const Vec& v) const;

  /// Projects an embedding vector onto T_x N.
  Vec to_tangent(const Vec& x, const Vec& v) const;
  /// Closest point of the constraint surface (identity without constraint).
  Vec project_to_chart(const Vec& x) const;
  /// Throws ChartError when x is off the model's chart.
  void check_point(const Vec& x, double tol = 1e-10) const;

  /// Orthonormal basis of T_x N by Gram-Schmidt over the embedding basis.
  std::vector<Vec> standard_frame(const Vec& x) const;

  /// R_ABCD in an orthonormal frame of T_x N (frame.size() == dim()).
  Tensor4 curvature_tensor(const Vec& x, const std::vector<Vec>& frame) const;
  /// (nabla_E R)_ABCD in an orthonormal frame.
  Tensor5 nabla_curvature(const Vec& x, const std::vector<Vec>& frame) const;

  /// Coordinate components of R (perturbed/euclidean charts only).
  Tensor4 coordinate_curvature(const Vec& x) const;
  /// Coordinate components of nabla R (perturbed/euclidean charts only).
  Tensor5 coordinate_nabla_curvature(const Vec& x) const;

  /// Conformal potential and its partial derivatives; counts[i] is the order
  /// of differentiation in x_i.
  double potential(const Vec& x) const;
  double potential_derivative(const Vec& x, const std::array<int, kMaxDim>& counts) const;
  Vec potential_gradient(const Vec& x) const;
  Mat potential_hessian(const Vec& x) const;

  /// Sectional curvature of span{u, v} at x.
  double sectional_curvature(const Vec& x, const Vec& u, const Vec& v) const;

 private:
  AmbientModel(AmbientKind kind, int dim, double c, double amplitude, double wavenumber);
  void check_frame(const Vec& x, const std::vector<Vec>& frame) const;
  static Tensor4 contract(const Tensor4& coord, const std::vector<Vec>& frame);
  static Tensor5 contract(const Tensor5& coord, const std::vector<Vec>& frame);

  AmbientKind kind_;
  int dim_;
  double c_;
  double amplitude_;
  double wavenumber_;
};

struct BoundReport {
  double sectional_low = 0.0;
  double sectional_high = 0.0;
  double nabla_max = 0.0;
  double berger_mixed = 0.0;
  double berger_mixed_bound = 0.0;
  double berger_distinct = 0.0;
  double berger_distinct_bound = 0.0;
  bool berger_ok = true;
  bool pass = true;
  long worst_sample = -1;
  std::string worst_quantity;
};

/// Checks -K1 <= K <= K2 and |nabla R| <= L over the samples (coordinate-pair
/// planes of the standard frame plus seeded random planes), and reports the
/// Berger component bounds.
BoundReport verify_geometry_bounds(const AmbientModel& model, const std::vector<Vec>& samples,
                                   const CurvatureBounds& bounds, std::uint64_t seed = 7);

}  // namespace mcf
