#pragma once

// Volume-normalizing dilation psi(t) of a flow, rescaled time and dilated
// diagnostics.

#include "mcf/flow.hpp"

#include <vector>

namespace mcf {

struct RescaleState {
  double psi = 1.0;
  double t_tilde = 0.0;
  double hbar = 0.0;
};

/// psi' = psi exp(hbar_mid dt / n), t_tilde' = t_tilde + psi_mid^2 dt.
RescaleState advance_rescaling(const RescaleState& rs, double hbar_mid, double dt, int n);

/// Integrates psi and t_tilde along the step records of a flow; one state per record.
std::vector<RescaleState> integrate_rescaling(const std::vector<StepRecord>& steps, int n);

struct DilatedDiagnostics {
  double A2_max = 0.0;
  double H2_max = 0.0;
  double H2_min = 0.0;
  double A02_max = 0.0;
  double f_sigma_max = 0.0;
  double volume = 0.0;
  double H_ratio = 0.0;  // |H|_max / |H|_min
  double int_A2 = 0.0;       // integral of |A|^2 dmu
  double int_gradA2 = 0.0;   // integral of |grad A|^2 dmu
};

/// Raw diagnostics of a state (psi = 1), including the derivative integrals.
DilatedDiagnostics raw_diagnostics(const DiscreteImmersion& imm, const PinchingParams& params,
                                   double hmin_sq_guard = 1e-12, Exec exec = Exec::parallel);

/// Scaling identities applied to raw diagnostics.
DilatedDiagnostics dilated_view(const DilatedDiagnostics& raw, double psi, int n, double sigma);

/// Recomputation with every ambient inner product scaled by psi^2.
DilatedDiagnostics dilated_recompute(const DiscreteImmersion& imm, double psi, const PinchingParams& params,
                                     double hmin_sq_guard = 1e-12, Exec exec = Exec::parallel);

/// Largest relative difference over the fields of two diagnostics; values
/// below 1e-20 count as zero.
double closure_error(const DilatedDiagnostics& a, const DilatedDiagnostics& b);

struct RescaledSample {
  double t = 0.0;
  double t_tilde = 0.0;
  double psi = 1.0;
  double hbar_tilde = 0.0;
  double ambient_curvature = 0.0;  // psi^-2 K
  DilatedDiagnostics dilated;
  double closure = 0.0;
  /// Node-wise residual of d(dmu~)/dt~ = (hbar~ - |H~|^2) dmu~ against the next sample.
  double dmu_tilde_residual = 0.0;
};

struct RescaledTrace {
  FlowTrace flow;
  std::vector<RescaleState> steps;
  std::vector<RescaledSample> samples;
};

RescaledTrace run_rescaled_flow(const DiscreteImmersion& initial, const FlowConfig& cfg);

struct RoundnessReport {
  double initial_A02_max = 0.0;
  double final_A02_max = 0.0;
  double final_H_ratio = 0.0;
  double volume_drift = 0.0;  // sup |Vol~ - Vol~(0)| / Vol~(0)
  bool A02_nonincreasing_last_half = false;
  double H_min = 0.0;  // min over the run of |H~|_min
  double H_max = 0.0;  // max over the run of |H~|_max
  double dmu_tilde_max = 0.0;
  double closure_max = 0.0;
  double final_ambient_curvature = 0.0;
  long samples = 0;
};

RoundnessReport roundness_report(const RescaledTrace& tr);

}  // namespace mcf
