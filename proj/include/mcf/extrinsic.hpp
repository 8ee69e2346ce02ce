#pragma once

// Second fundamental form package at grid nodes.
//
// Tangent indices i, j, k refer to the orthonormal frame e_i = sum_a E(i,a) F_a
// obtained from the Cholesky factor of g; normal indices alpha refer to an
// orthonormal normal frame that is H-aligned (e_{n+1} = H/|H|) whenever |H|^2
// exceeds the guard. Ambient tensors in the adapted frame use the ordering
// [e_1..e_n, e_{n+1}..e_{n+d}].

#include "mcf/immersion.hpp"

#include <optional>
#include <vector>

namespace mcf {

struct ExtrinsicOptions {
  double hmin_sq_guard = 1e-12;
  /// Multiplies every ambient inner product (dilated ambient metric psi^2 h).
  double metric_scale = 1.0;
  /// Orthogonal d x d matrix mixing the normal frame before H-alignment.
  std::optional<Mat> normal_remix;
  bool h_aligned = true;
};

struct DecompH {
  bool valid = false;
  double A2_H = 0.0;
  double A2_I = 0.0;
  double A02_H = 0.0;
  double A02_I = 0.0;
};

struct ExtrinsicState {
  int n = 0;
  int d = 0;
  Vec x;
  InducedMetric metric;
  SmallMat E;                      // e_i = sum_a E(i,a) F_a
  std::vector<Vec> tangent;        // orthonormal tangent vectors
  std::vector<Vec> normal;         // orthonormal normal vectors
  std::vector<SmallMat> h;         // h[alpha](i,j)
  Vec H;                           // H^alpha
  Vec Hvec;                        // mean curvature vector, embedding components
  double H2 = 0.0;
  double A2 = 0.0;
  double A02 = 0.0;
  DecompH decomp;
  std::vector<Vec> A_coord;        // A(F_a, F_b) as embedding vectors, index a*n+b
  std::vector<double> gamma;       // intrinsic Christoffel Gamma^l_ab, index (l*n+a)*n+b

  SmallMat hring(int alpha) const;
  double Gamma(int l, int a, int b) const { return gamma[(l * n + a) * n + b]; }
};

struct GradientData {
  int n = 0;
  int d = 0;
  std::vector<double> gradA;  // nabla_k h^alpha_ij, index ((k*d+alpha)*n+i)*n+j
  std::vector<double> gradH;  // nabla_k H^alpha, index k*d+alpha
  std::vector<double> w;      // w_i^alpha = sum_j Rbar_{alpha j i j}, index i*d+alpha
  double normsq_gradA = 0.0;
  double normsq_gradH = 0.0;
  double normsq_gradA0 = 0.0;
  double normsq_w = 0.0;

  double dA(int k, int alpha, int i, int j) const { return gradA[((k * d + alpha) * n + i) * n + j]; }
  double dH(int k, int alpha) const { return gradH[k * d + alpha]; }
  double wv(int i, int alpha) const { return w[i * d + alpha]; }
};

/// Ambient curvature and its derivative in the adapted frame of a state.
struct FrameCurvature {
  Tensor4 R;
  Tensor5 DR;
};

struct StructureResiduals {
  double gauss = 0.0;
  double codazzi = 0.0;
  double ricci = 0.0;
};

ExtrinsicState extrinsic_state(const DiscreteImmersion& imm, const Jet& jet,
                               const ExtrinsicOptions& opt = {});
ExtrinsicState extrinsic_state(const DiscreteImmersion& imm, long node,
                               const ExtrinsicOptions& opt = {});

std::vector<Vec> adapted_ambient_frame(const ExtrinsicState& s);
FrameCurvature frame_curvature(const DiscreteImmersion& imm, const ExtrinsicState& s);

GradientData covariant_derivatives(const DiscreteImmersion& imm, const Jet& jet,
                                   const ExtrinsicState& s, const FrameCurvature& fc);
GradientData covariant_derivatives(const DiscreteImmersion& imm, long node,
                                   const ExtrinsicOptions& opt = {});

StructureResiduals structure_residuals(const DiscreteImmersion& imm, long node,
                                       const ExtrinsicOptions& opt = {});

/// Maximum of the per-node residuals. Nodes whose polar coordinate lies
/// within pole_margin of a pole (latlong and axisym grids) are skipped.
StructureResiduals structure_residuals_max(const DiscreteImmersion& imm, double pole_margin = 0.0,
                                           Exec exec = Exec::parallel,
                                           const ExtrinsicOptions& opt = {});

/// Intrinsic curvature R_ijkl (orthonormal frame) from second differences
/// of the induced metric.
Tensor4 intrinsic_curvature(const DiscreteImmersion& imm, long node, const ExtrinsicState& s);

/// Laplace-Beltrami of a node field with second-order grid stencils.
std::vector<double> laplacian_scalar(const DiscreteImmersion& imm, const std::vector<double>& field,
                                     Exec exec = Exec::parallel);
std::vector<double> laplacian_scalar(const DiscreteImmersion& imm, const std::vector<double>& field,
                                     const std::vector<ExtrinsicState>& states,
                                     Exec exec = Exec::parallel);

/// Grid gradient (coordinate components) of a node field.
std::array<double, kMaxN> field_gradient(const DiscreteImmersion& imm, const std::vector<double>& field,
                                         long node);

std::vector<ExtrinsicState> extrinsic_states(const DiscreteImmersion& imm,
                                             const ExtrinsicOptions& opt = {},
                                             Exec exec = Exec::parallel);

}  // namespace mcf
