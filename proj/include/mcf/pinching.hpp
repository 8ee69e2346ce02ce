#pragma once

// Pinching constants, reaction terms of the |A|^2 - a|H|^2 evolution, and
// pointwise inequality audits.
//
// Normal indices alpha run over 0..d-1 and address the ambient frame slot
// n + alpha. When the state is H-aligned, alpha = 0 is the H direction.

#include "mcf/ambient.hpp"
#include "mcf/extrinsic.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcf {

struct PinchingParams {
  double a = 2.0 / 3.0;
  double b = 0.0;
  double sigma = 0.5;
  int p = 2;
  /// eta of the gradient inequality; unset means half the admissible range,
  /// eta = (3/(n+2) - a) / 2.
  std::optional<double> eta;
  double mu = 1.0;
  double rho = 1.0;
  double varrho = 1.0;
  double theta = 1.0;
  double vartheta = 1.0;
  double N1 = 1.0;
  double N2 = 1.0;
  double eta5 = 1.0;
  double C0 = 1.0;
  double delta = 0.1;

  void validate() const;
};

struct PinchingConstants {
  int n = 0;
  int d = 0;
  double a = 0.0;
  double C1 = 0.0;
  double C2 = 0.0;
  double C3 = 0.0;
  double C4 = 0.0;
  double b1 = 0.0;
  double b0 = 0.0;
  double eta = 0.0;
  double eps_nabla = 0.0;
  double Cnd = 0.0;
  double C0 = 1.0;
  double delta = 0.1;
};

/// 4/(3n) for n = 2, 3 and 1/(n-1) for n >= 4.
double pinching_coefficient(int n);

/// n^4 d / (2 (n-1)(2n+1)).
double gradient_constant(int n, int d);

PinchingConstants pinching_constants(int n, int d, const CurvatureBounds& bounds, double a,
                                     const PinchingParams& params);

struct PinchingQuantities {
  double Q = 0.0;
  std::optional<double> f_sigma;
  std::optional<double> pinch_ratio;
};

PinchingQuantities pinching_quantities(const ExtrinsicState& s, const PinchingParams& params,
                                       double hmin_sq_guard = 1e-12);

/// Second fundamental form components in orthonormal frames together with
/// the ambient curvature in the adapted frame [e_1..e_n, e_{n+1}..e_{n+d}].
struct ReactionInput {
  int n = 0;
  int d = 0;
  std::vector<SmallMat> h;
  Tensor4 R;
  Tensor5 DR;
  bool h_aligned = false;  // e_{n+1} = H/|H|
};

ReactionInput reaction_input(const ExtrinsicState& s, const FrameCurvature& fc);

struct ReactionTerms {
  double R1 = 0.0;
  double R2 = 0.0;
  double Z = 0.0;
  double I = 0.0;
  bool split_valid = false;  // H-aligned parts II1..II3, III1, III2
  double II = 0.0, II1 = 0.0, II2 = 0.0, II3 = 0.0;
  double III = 0.0, III1 = 0.0, III2 = 0.0;
  double IV = 0.0;
  double P = 0.0;  // I + II + III + IV
};

ReactionTerms reaction_terms(const ReactionInput& in, double a, double hmin_sq_guard = 1e-12);

struct AuditEntry {
  std::string name;
  bool present = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs for "lhs <= rhs" entries, lhs - rhs otherwise
  bool pass = true;
};

struct AuditContext {
  CurvatureBounds bounds;
  PinchingConstants constants;
  PinchingParams params;
  double tol = 1e-8;
  /// Tolerance added per unit of max(1, |lhs|, |rhs|); h^2 for finite differences.
  double rel_tol = 0.0;
  double hmin_sq_guard = 1e-12;
  int random_planes = 100;
  unsigned seed = 11;
};

/// Entries: gradA_H, gradA0_w, gradA0_K, I, II, III, IV, IV_2n,
/// second_line, xu_gu and z_ratio (reported only, always passes).
std::vector<AuditEntry> inequality_audit(const ExtrinsicState& s, const GradientData& g,
                                         const FrameCurvature& fc, const AmbientModel& ambient,
                                         const AuditContext& ctx, long node = 0);

struct AuditSummary {
  std::vector<std::string> names;
  std::vector<long> audited;
  std::vector<long> passed;
  std::vector<double> worst_margin;
  double pass_rate(const std::string& name) const;
};

/// Runs the audit at every node; rows[k] holds the entries of node k.
std::vector<std::vector<AuditEntry>> audit_immersion(const DiscreteImmersion& imm, const AuditContext& ctx,
                                                     Exec exec = Exec::parallel);
AuditSummary summarize_audit(const std::vector<std::vector<AuditEntry>>& rows);

struct BlowupOde {
  bool blowup = false;
  double t0 = INFINITY;
  std::vector<double> t;
  std::vector<double> b;
};

/// b' = 2b^2/(n(a-1/n)) - C3 b - C4 integrated by RK4 in u = 1/b.
BlowupOde b_blowup_ode(double b_init, double C3, double C4, double a, int n, double dt_ode,
                       double cap = 1e12);

/// f = |grad H|^2 + (N1 + N2|A|^2)|A0|^2 - eta5 |H|^4.
double gradient_estimate_functional(const ExtrinsicState& s, const GradientData& g, const PinchingParams& p);

/// Smallest C0 with |A0|^2 <= C0 |H|^(2-delta) over the given samples.
double fit_C0(const std::vector<double>& A02, const std::vector<double>& H2, double delta);

}  // namespace mcf
