#pragma once

// Forward Euler mean curvature flow dF/dt = H with curvature-capped steps,
// blowup detection and discrete residuals of the evolution equations.

#include "mcf/extrinsic.hpp"
#include "mcf/pinching.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mcf {

struct FlowConfig {
  double cfl = 0.2;
  double t_max = 1.0;
  double blowup_threshold = 1e6;
  long max_steps = 10'000'000;
  long diag_stride = 10;
  double hmin_sq_guard = 1e-12;
  /// Evaluate evolution residuals at diagnostic samples (three-step window).
  bool evolution_residuals = false;
  /// Keep the immersion of every sample in the trace.
  bool keep_states = false;
  /// Fixed step instead of adaptive_dt (still clipped at t_max).
  std::optional<double> fixed_dt;
  PinchingParams pinching;
  Exec exec = Exec::parallel;

  void validate() const;
};

enum class FlowStatus { reached_t_max, blowup_detected, step_failure, max_steps_reached };
std::string to_string(FlowStatus s);

struct EvolutionResidual {
  double res_dmu = 0.0;
  double res_H2 = 0.0;
  double res_A2 = 0.0;
  long excluded = 0;
  /// Signed per-node lhs - rhs before normalization (NaN at excluded nodes).
  std::vector<double> raw_dmu, raw_H2, raw_A2;
};

struct EvolutionOptions {
  /// Drop 2 sum Rbar_{k alpha k beta} H^alpha H^beta from the |H|^2 equation.
  bool drop_ambient_H2 = false;
  /// Nodes within this polar distance of a pole are excluded.
  double pole_margin = 0.0;
  double hmin_sq_guard = 1e-12;
  Exec exec = Exec::parallel;
};

struct FlowSample {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  double volume = 0.0;
  double H2_max = 0.0;
  double H2_min = 0.0;
  double A2_max = 0.0;
  double A02_max = 0.0;
  double Q_max = 0.0;
  double f_sigma_max = 0.0;
  double f5_max = 0.0;
  double int_f_sigma_p = 0.0;
  double diameter = 0.0;
  double hbar = 0.0;
  double A02_over_H2_max = 0.0;
  std::optional<EvolutionResidual> residual;
};

/// Per-step record used by the rescaling integrator.
struct StepRecord {
  double t = 0.0;
  double hbar = 0.0;
};

struct FlowTrace {
  std::vector<FlowSample> samples;
  std::vector<StepRecord> steps;  // state before every step plus the final state
  std::vector<DiscreteImmersion> states;  // with keep_states, one per sample
  FlowStatus status = FlowStatus::reached_t_max;
  double t_final = 0.0;
  std::optional<double> blowup_time;
  long blowup_node = -1;
  long failed_node = -1;
  std::string message;
};

/// Per-node quantities needed by a time step.
struct FlowRhs {
  Vec Hvec;  // mean curvature vector, embedding components
  double H2 = 0.0;
  double A2 = 0.0;
  double sqrt_det = 0.0;
  double spacing = 0.0;  // smallest physical grid edge at the node
};

std::vector<FlowRhs> flow_rhs(const DiscreteImmersion& imm, Exec exec = Exec::parallel);

/// cfl * min(1/|A|^2_max, h_min^2/(2n)).
double adaptive_dt(double A2_max, double h_min, int n, double cfl);
double adaptive_dt(const DiscreteImmersion& imm, const std::vector<FlowRhs>& rhs, double cfl);

/// One forward Euler step; constrained charts are reprojected.
DiscreteImmersion mcf_step(const DiscreteImmersion& imm, const std::vector<FlowRhs>& rhs, double dt,
                           Exec exec = Exec::parallel);
DiscreteImmersion mcf_step(const DiscreteImmersion& imm, double dt, Exec exec = Exec::parallel);

/// Mean of |H|^2 over the volume, same quadrature as total_volume.
double hbar(const std::vector<FlowRhs>& rhs);
double hbar(const DiscreteImmersion& imm);

FlowSample flow_diagnostics(const DiscreteImmersion& imm, const std::vector<ExtrinsicState>& states,
                            const FlowConfig& cfg);

/// Runs from the initial positions with finite-difference derivatives.
FlowTrace run_flow(const DiscreteImmersion& initial, const FlowConfig& cfg);

struct UmbilicalOracle {
  std::vector<double> t;
  std::vector<double> r;  // Euclidean radius (c = 0) or geodesic radius (c > 0)
  double T = 0.0;
};

/// Round sphere under the flow: r = sqrt(r0^2 - 2nt) for c = 0, and
/// rho' = -n sqrt(c) cot(sqrt(c) rho) by RK4 for c > 0.
UmbilicalOracle umbilical_ode_oracle(int n, double c, double r0, double dt = 1e-5);

/// Residuals of the evolution equations for dmu, |H|^2 and |A|^2 at the
/// middle of three consecutive states.
EvolutionResidual evolution_residual(const DiscreteImmersion& s0, const DiscreteImmersion& s1,
                                     const DiscreteImmersion& s2, double t0, double t1, double t2,
                                     const EvolutionOptions& opt = {});

}  // namespace mcf
