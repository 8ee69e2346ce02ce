#include "mcf/rescale.hpp"

#include <cmath>
#include <limits>

namespace mcf {

RescaleState advance_rescaling(const RescaleState& rs, double hbar_mid, double dt, int n) {
  RescaleState out;
  const double rate = hbar_mid / n;
  const double psi_mid = rs.psi * std::exp(0.5 * rate * dt);
  out.psi = rs.psi * std::exp(rate * dt);
  out.t_tilde = rs.t_tilde + psi_mid * psi_mid * dt;
  out.hbar = hbar_mid;
  return out;
}

std::vector<RescaleState> integrate_rescaling(const std::vector<StepRecord>& steps, int n) {
  std::vector<RescaleState> out;
  if (steps.empty()) return out;
  out.reserve(steps.size());
  RescaleState rs;
  rs.hbar = steps[0].hbar;
  out.push_back(rs);
  for (size_t k = 1; k < steps.size(); ++k) {
    rs = advance_rescaling(rs, 0.5 * (steps[k - 1].hbar + steps[k].hbar), steps[k].t - steps[k - 1].t, n);
    rs.hbar = steps[k].hbar;
    out.push_back(rs);
  }
  return out;
}

namespace {

struct NodeData {
  std::vector<double> sqrt_det;
  std::vector<double> H2;
};

DilatedDiagnostics summarize(const DiscreteImmersion& imm, const std::vector<ExtrinsicState>& st,
                             const PinchingParams& params, double guard) {
  DilatedDiagnostics d;
  d.H2_min = std::numeric_limits<double>::infinity();
  const double w = imm.weight();
  for (const auto& s : st) {
    const double dmu = s.metric.sqrt_det * w;
    d.volume += dmu;
    d.A2_max = std::max(d.A2_max, s.A2);
    d.H2_max = std::max(d.H2_max, s.H2);
    d.H2_min = std::min(d.H2_min, s.H2);
    d.A02_max = std::max(d.A02_max, s.A02);
    auto q = pinching_quantities(s, params, guard);
    if (q.f_sigma) d.f_sigma_max = std::max(d.f_sigma_max, *q.f_sigma);
    d.int_A2 += s.A2 * dmu;
  }
  d.H_ratio = d.H2_min > 0 ? std::sqrt(d.H2_max / d.H2_min) : std::numeric_limits<double>::infinity();
  return d;
}

}  // namespace

DilatedDiagnostics raw_diagnostics(const DiscreteImmersion& imm, const PinchingParams& params, double guard,
                                   Exec exec) {
  ExtrinsicOptions eo;
  eo.hmin_sq_guard = guard;
  auto st = extrinsic_states(imm, eo, exec);
  DilatedDiagnostics d = summarize(imm, st, params, guard);
  const long N = imm.node_count();
  std::vector<double> g2(N);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    FrameCurvature fc = frame_curvature(imm, st[k]);
    g2[k] = covariant_derivatives(imm, imm.jet(k), st[k], fc).normsq_gradA * st[k].metric.sqrt_det;
  }
  for (double v : g2) d.int_gradA2 += v * imm.weight();
  return d;
}

DilatedDiagnostics dilated_view(const DilatedDiagnostics& raw, double psi, int n, double sigma) {
  if (!(psi > 0)) throw InputError("psi must be positive");
  const double p2 = 1.0 / (psi * psi);
  DilatedDiagnostics d = raw;
  d.A2_max *= p2;
  d.H2_max *= p2;
  d.H2_min *= p2;
  d.A02_max *= p2;
  d.f_sigma_max *= std::pow(psi, -2 * sigma);
  d.volume *= std::pow(psi, n);
  d.int_A2 *= std::pow(psi, n - 2);
  d.int_gradA2 *= std::pow(psi, n - 4);
  return d;
}

DilatedDiagnostics dilated_recompute(const DiscreteImmersion& imm, double psi, const PinchingParams& params,
                                     double guard, Exec exec) {
  if (!(psi > 0)) throw InputError("psi must be positive");
  ExtrinsicOptions eo;
  eo.hmin_sq_guard = guard;
  eo.metric_scale = psi * psi;
  DilatedDiagnostics d = summarize(imm, extrinsic_states(imm, eo, exec), params, guard);
  d.int_gradA2 = std::numeric_limits<double>::quiet_NaN();
  return d;
}

double closure_error(const DilatedDiagnostics& a, const DilatedDiagnostics& b) {
  double e = 0;
  auto cmp = [&](double x, double y) {
    if (std::isnan(x) || std::isnan(y)) return;
    if (x == y) return;
    e = std::max(e, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-20}));
  };
  cmp(a.A2_max, b.A2_max);
  cmp(a.H2_max, b.H2_max);
  cmp(a.H2_min, b.H2_min);
  cmp(a.A02_max, b.A02_max);
  cmp(a.f_sigma_max, b.f_sigma_max);
  cmp(a.volume, b.volume);
  cmp(a.H_ratio, b.H_ratio);
  cmp(a.int_A2, b.int_A2);
  cmp(a.int_gradA2, b.int_gradA2);
  return e;
}

RescaledTrace run_rescaled_flow(const DiscreteImmersion& initial, const FlowConfig& cfg_in) {
  FlowConfig cfg = cfg_in;
  cfg.keep_states = true;
  RescaledTrace out;
  out.flow = run_flow(initial, cfg);
  const int n = initial.n();
  out.steps = integrate_rescaling(out.flow.steps, n);
  const double K = initial.ambient().is_space_form() ? initial.ambient().space_form_curvature() : 0.0;

  std::vector<NodeData> nodes;
  for (size_t i = 0; i < out.flow.samples.size(); ++i) {
    const FlowSample& fs = out.flow.samples[i];
    const DiscreteImmersion& imm = out.flow.states[i];
    const RescaleState& rs = out.steps.at(fs.step);
    RescaledSample r;
    r.t = fs.t;
    r.t_tilde = rs.t_tilde;
    r.psi = rs.psi;
    r.ambient_curvature = K / (rs.psi * rs.psi);
    DilatedDiagnostics raw = raw_diagnostics(imm, cfg.pinching, cfg.hmin_sq_guard, cfg.exec);
    r.dilated = dilated_view(raw, rs.psi, n, cfg.pinching.sigma);

    ExtrinsicOptions eo;
    eo.hmin_sq_guard = cfg.hmin_sq_guard;
    eo.metric_scale = rs.psi * rs.psi;
    auto st = extrinsic_states(imm, eo, cfg.exec);
    DilatedDiagnostics re = summarize(imm, st, cfg.pinching, cfg.hmin_sq_guard);
    re.int_gradA2 = std::numeric_limits<double>::quiet_NaN();
    r.closure = closure_error(r.dilated, re);

    NodeData nd;
    double num = 0, vol = 0;
    for (const auto& s : st) {
      nd.sqrt_det.push_back(s.metric.sqrt_det);
      nd.H2.push_back(s.H2);
      num += s.H2 * s.metric.sqrt_det;
      vol += s.metric.sqrt_det;
    }
    r.hbar_tilde = num / vol;
    nodes.push_back(std::move(nd));
    out.samples.push_back(r);
  }
  for (size_t i = 0; i + 1 < out.samples.size(); ++i) {
    RescaledSample& a = out.samples[i];
    const RescaledSample& b = out.samples[i + 1];
    const double dtt = b.t_tilde - a.t_tilde;
    if (!(dtt > 0)) continue;
    double worst = 0;
    for (size_t k = 0; k < nodes[i].H2.size(); ++k) {
      const double lhs = std::log(nodes[i + 1].sqrt_det[k] / nodes[i].sqrt_det[k]) / dtt;
      const double rhs = 0.5 * ((a.hbar_tilde - nodes[i].H2[k]) + (b.hbar_tilde - nodes[i + 1].H2[k]));
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    }
    a.dmu_tilde_residual = worst;
  }
  return out;
}

RoundnessReport roundness_report(const RescaledTrace& tr) {
  const auto& S = tr.samples;
  if (S.size() < 10) throw InputError("roundness report needs at least 10 samples");
  RoundnessReport r;
  r.samples = static_cast<long>(S.size());
  r.initial_A02_max = S.front().dilated.A02_max;
  r.final_A02_max = S.back().dilated.A02_max;
  r.final_H_ratio = S.back().dilated.H_ratio;
  r.final_ambient_curvature = S.back().ambient_curvature;
  const double v0 = S.front().dilated.volume;
  r.H_min = std::numeric_limits<double>::infinity();
  r.A02_nonincreasing_last_half = true;
  for (size_t i = 0; i < S.size(); ++i) {
    const auto& d = S[i].dilated;
    r.volume_drift = std::max(r.volume_drift, std::abs(d.volume - v0) / v0);
    r.H_min = std::min(r.H_min, std::sqrt(d.H2_min));
    r.H_max = std::max(r.H_max, std::sqrt(d.H2_max));
    r.dmu_tilde_max = std::max(r.dmu_tilde_max, S[i].dmu_tilde_residual);
    r.closure_max = std::max(r.closure_max, S[i].closure);
    if (i > S.size() / 2 && d.A02_max > S[i - 1].dilated.A02_max) r.A02_nonincreasing_last_half = false;
  }
  return r;
}

}  // namespace mcf
