#include "mcf/flow.hpp"

#include <cmath>
#include <limits>

namespace mcf {

void FlowConfig::validate() const {
  if (!(cfl > 0 && cfl < 1)) throw ConfigError("flow.cfl must lie in (0, 1)");
  if (!(t_max > 0)) throw ConfigError("flow.t_max must be positive");
  if (!(blowup_threshold > 0)) throw ConfigError("flow.blowup_threshold must be positive");
  if (max_steps < 1) throw ConfigError("flow.max_steps must be at least 1");
  if (diag_stride < 1) throw ConfigError("flow.diag_stride must be at least 1");
  if (!(hmin_sq_guard > 0)) throw ConfigError("flow.hmin_sq_guard must be positive");
  if (fixed_dt && !(*fixed_dt > 0)) throw ConfigError("flow.fixed_dt must be positive");
  pinching.validate();
}

std::string to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::reached_t_max: return "reached_t_max";
    case FlowStatus::blowup_detected: return "blowup_detected";
    case FlowStatus::step_failure: return "step_failure";
    case FlowStatus::max_steps_reached: return "max_steps_reached";
  }
  return "unknown";
}

double adaptive_dt(double A2_max, double h_min, int n, double cfl) {
  if (!std::isfinite(A2_max) || !std::isfinite(h_min) || h_min <= 0)
    throw DegeneracyError("nonfinite curvature or spacing");
  double lim = h_min * h_min / (2.0 * n);
  if (A2_max > 0) lim = std::min(lim, 1.0 / A2_max);
  return cfl * lim;
}

std::vector<FlowRhs> flow_rhs(const DiscreteImmersion& imm, Exec exec) {
  const long N = imm.node_count();
  const int n = imm.n();
  const ParamGrid& grid = imm.grid();
  const AmbientModel& amb = imm.ambient();
  std::vector<FlowRhs> out(N);
  std::vector<char> bad(N, 0);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    const Jet J = imm.jet2(k);
    SmallMat g(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) g(a, b) = g(b, a) = amb.inner(J.x, J.F(a), J.F(b));
    Eigen::LLT<SmallMat> llt(g);
    if (llt.info() != Eigen::Success) {
      bad[k] = 1;
      continue;
    }
    const SmallMat gi = llt.solve(SmallMat::Identity(n, n));
    std::array<Vec, kMaxN * kMaxN> A;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        Vec v = amb.to_tangent(J.x, J.F(a, b) + amb.christoffel(J.x, J.F(a), J.F(b)));
        double c[kMaxN];
        for (int e = 0; e < n; ++e) c[e] = amb.inner(J.x, J.F(e), v);
        for (int e = 0; e < n; ++e)
          for (int f = 0; f < n; ++f) v -= gi(e, f) * c[f] * J.F(e);
        A[a * n + b] = v;
        A[b * n + a] = v;
      }
    FlowRhs& r = out[k];
    r.Hvec = Vec::Zero(J.x.size());
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) r.Hvec += gi(a, b) * A[a * n + b];
    r.H2 = amb.inner(J.x, r.Hvec, r.Hvec);
    double A2 = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) A2 += gi(a, c) * gi(b, d) * amb.inner(J.x, A[a * n + b], A[c * n + d]);
    r.A2 = A2;
    r.sqrt_det = std::sqrt(g.determinant());
    r.spacing = std::numeric_limits<double>::infinity();
    for (int a = 0; a < grid.grid_axes(); ++a) r.spacing = std::min(r.spacing, std::sqrt(g(a, a)) * grid.spacings[a]);
  }
  for (long k = 0; k < N; ++k)
    if (bad[k]) throw DegeneracyError("immersion is degenerate", k);
  return out;
}

double adaptive_dt(const DiscreteImmersion& imm, const std::vector<FlowRhs>& rhs, double cfl) {
  double A2 = 0, h = std::numeric_limits<double>::infinity();
  for (const auto& r : rhs) {
    A2 = std::max(A2, r.A2);
    h = std::min(h, r.spacing);
  }
  return adaptive_dt(A2, h, imm.n(), cfl);
}

DiscreteImmersion mcf_step(const DiscreteImmersion& imm, const std::vector<FlowRhs>& rhs, double dt, Exec exec) {
  const long N = imm.node_count();
  const int n = imm.n();
  const bool axisym = imm.grid().topology == Topology::axisym;
  const AmbientModel& amb = imm.ambient();
  std::vector<Vec> next(N);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    Vec v = rhs[k].Hvec;
    if (axisym)
      for (int i = 1; i < n; ++i) v[i] = 0.0;
    next[k] = amb.project_to_chart(imm.position(k) + dt * v);
  }
  return imm.with_positions(std::move(next));
}

DiscreteImmersion mcf_step(const DiscreteImmersion& imm, double dt, Exec exec) {
  return mcf_step(imm, flow_rhs(imm, exec), dt, exec);
}

double hbar(const std::vector<FlowRhs>& rhs) {
  double num = 0, vol = 0;
  for (const auto& r : rhs) {
    num += r.H2 * r.sqrt_det;
    vol += r.sqrt_det;
  }
  if (!(vol > 0)) throw DegeneracyError("zero volume");
  return num / vol;
}

double hbar(const DiscreteImmersion& imm) { return hbar(flow_rhs(imm)); }

FlowSample flow_diagnostics(const DiscreteImmersion& imm, const std::vector<ExtrinsicState>& states,
                            const FlowConfig& cfg) {
  const long N = imm.node_count();
  FlowSample s;
  std::vector<double> f5(N);
#pragma omp parallel for schedule(static) if (cfg.exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    FrameCurvature fc = frame_curvature(imm, states[k]);
    GradientData g = covariant_derivatives(imm, imm.jet(k), states[k], fc);
    f5[k] = gradient_estimate_functional(states[k], g, cfg.pinching);
  }
  s.H2_min = std::numeric_limits<double>::infinity();
  s.Q_max = -std::numeric_limits<double>::infinity();
  s.f5_max = -std::numeric_limits<double>::infinity();
  double vol = 0, num = 0, intf = 0;
  const double w = imm.weight();
  for (long k = 0; k < N; ++k) {
    const ExtrinsicState& e = states[k];
    const double dmu = e.metric.sqrt_det * w;
    vol += dmu;
    num += e.H2 * dmu;
    s.H2_max = std::max(s.H2_max, e.H2);
    s.H2_min = std::min(s.H2_min, e.H2);
    s.A2_max = std::max(s.A2_max, e.A2);
    s.A02_max = std::max(s.A02_max, e.A02);
    PinchingQuantities q = pinching_quantities(e, cfg.pinching, cfg.hmin_sq_guard);
    s.Q_max = std::max(s.Q_max, q.Q);
    if (q.f_sigma) {
      s.f_sigma_max = std::max(s.f_sigma_max, *q.f_sigma);
      intf += std::pow(*q.f_sigma, cfg.pinching.p) * dmu;
    }
    if (e.H2 > cfg.hmin_sq_guard) s.A02_over_H2_max = std::max(s.A02_over_H2_max, e.A02 / e.H2);
    s.f5_max = std::max(s.f5_max, f5[k]);
  }
  s.volume = vol;
  s.hbar = num / vol;
  s.int_f_sigma_p = intf;
  s.diameter = diameter_estimate(imm);
  return s;
}

namespace {

struct Window {
  DiscreteImmersion prev;
  DiscreteImmersion cur;
  double t_prev, t_cur;
  size_t sample;
};

}  // namespace

FlowTrace run_flow(const DiscreteImmersion& initial, const FlowConfig& cfg) {
  cfg.validate();
  FlowTrace tr;
  DiscreteImmersion imm = initial.with_positions(initial.positions());
  std::optional<DiscreteImmersion> prev;
  std::optional<Window> pending;
  double t = 0, t_prev = 0, dt = 0;
  double hist_t[2] = {0, 0}, hist_y[2] = {0, 0};
  int hist_n = 0;
  ExtrinsicOptions eo;
  eo.hmin_sq_guard = cfg.hmin_sq_guard;
  EvolutionOptions evo;
  evo.hmin_sq_guard = cfg.hmin_sq_guard;
  evo.exec = cfg.exec;

  auto fail = [&](const std::string& msg, long node) {
    tr.status = FlowStatus::step_failure;
    tr.failed_node = node;
    tr.message = msg;
  };

  for (long step = 0;; ++step) {
    std::vector<FlowRhs> rhs;
    try {
      rhs = flow_rhs(imm, cfg.exec);
    } catch (const DegeneracyError& e) {
      fail(e.what(), e.node);
      break;
    } catch (const std::exception& e) {
      fail(e.what(), -1);
      break;
    }

    if (pending) {
      try {
        tr.samples[pending->sample].residual =
            evolution_residual(pending->prev, pending->cur, imm, pending->t_prev, pending->t_cur, t, evo);
      } catch (const std::exception&) {
      }
      pending.reset();
    }

    double A2max = 0;
    long arg = 0;
    bool finite = true;
    for (long k = 0; k < imm.node_count(); ++k) {
      if (!std::isfinite(rhs[k].A2) || !std::isfinite(rhs[k].H2)) finite = false;
      if (rhs[k].A2 > A2max) {
        A2max = rhs[k].A2;
        arg = k;
      }
    }
    if (!finite) {
      fail("nonfinite curvature", -1);
      break;
    }
    tr.steps.push_back({t, hbar(rhs)});

    auto take_sample = [&] {
      FlowSample s = flow_diagnostics(imm, extrinsic_states(imm, eo, cfg.exec), cfg);
      s.step = step;
      s.t = t;
      s.dt = dt;
      tr.samples.push_back(s);
      if (cfg.keep_states) tr.states.push_back(imm);
    };

    const double y = 1.0 / A2max;
    if (A2max > cfg.blowup_threshold) {
      tr.status = FlowStatus::blowup_detected;
      tr.blowup_node = arg;
      double T = t;
      if (hist_n >= 1 && hist_y[1] > y) T = t + y * (t - hist_t[1]) / (hist_y[1] - y);
      tr.blowup_time = T;
      take_sample();
      break;
    }
    if (t >= cfg.t_max * (1 - 1e-14)) {
      tr.status = FlowStatus::reached_t_max;
      take_sample();
      break;
    }
    if (step >= cfg.max_steps) {
      tr.status = FlowStatus::max_steps_reached;
      take_sample();
      break;
    }
    if (step % cfg.diag_stride == 0) {
      take_sample();
      if (cfg.evolution_residuals && prev)
        pending = Window{*prev, imm, t_prev, t, tr.samples.size() - 1};
    }
    hist_t[0] = hist_t[1];
    hist_y[0] = hist_y[1];
    hist_t[1] = t;
    hist_y[1] = y;
    ++hist_n;

    try {
      dt = cfg.fixed_dt ? *cfg.fixed_dt : adaptive_dt(imm, rhs, cfg.cfl);
      dt = std::min(dt, cfg.t_max - t);
      DiscreteImmersion next = mcf_step(imm, rhs, dt, cfg.exec);
      if (cfg.evolution_residuals) prev = imm;
      t_prev = t;
      imm = std::move(next);
      t += dt;
    } catch (const DegeneracyError& e) {
      fail(e.what(), e.node);
      break;
    } catch (const std::exception& e) {
      fail(e.what(), -1);
      break;
    }
  }
  tr.t_final = t;
  return tr;
}

UmbilicalOracle umbilical_ode_oracle(int n, double c, double r0, double dt) {
  if (n < 1) throw InputError("n must be positive");
  if (!(r0 > 0)) throw InputError("r0 must be positive");
  if (!(dt > 0)) throw InputError("dt must be positive");
  UmbilicalOracle o;
  if (c == 0) {
    o.T = r0 * r0 / (2.0 * n);
    for (double t = 0; t < o.T; t += dt) {
      o.t.push_back(t);
      o.r.push_back(std::sqrt(r0 * r0 - 2.0 * n * t));
    }
    o.t.push_back(o.T);
    o.r.push_back(0.0);
    return o;
  }
  const double k = std::sqrt(std::abs(c));
  double rhs_sign = c > 0 ? 1.0 : -1.0;
  if (c > 0 && !(k * r0 < M_PI / 2)) throw InputError("geodesic radius must lie in (0, pi/(2 sqrt c))");
  // cos(k rho) e^{-nct} (c > 0) and cosh(k rho) e^{n|c|t} (c < 0) are conserved
  o.T = c > 0 ? -std::log(std::cos(k * r0)) / (n * c) : std::log(std::cosh(k * r0)) / (n * -c);
  auto f = [&](double rho) {
    return rhs_sign > 0 ? -n * k / std::tan(k * rho) : -n * k / std::tanh(k * rho);
  };
  double rho = r0, t = 0;
  o.t.push_back(t);
  o.r.push_back(rho);
  while (t + dt < o.T) {
    const double k1 = f(rho), k2 = f(rho + 0.5 * dt * k1), k3 = f(rho + 0.5 * dt * k2), k4 = f(rho + dt * k3);
    const double next = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!(next > 0) || next > rho) break;
    rho = next;
    t += dt;
    o.t.push_back(t);
    o.r.push_back(rho);
  }
  return o;
}

EvolutionResidual evolution_residual(const DiscreteImmersion& s0, const DiscreteImmersion& s1,
                                     const DiscreteImmersion& s2, double t0, double t1, double t2,
                                     const EvolutionOptions& opt) {
  const long N = s1.node_count();
  if (s0.node_count() != N || s2.node_count() != N) throw InputError("residual window needs a common grid");
  if (!(t0 < t1 && t1 < t2)) throw InputError("residual window needs increasing times");
  ExtrinsicOptions eo;
  eo.hmin_sq_guard = opt.hmin_sq_guard;
  auto st0 = extrinsic_states(s0, eo, opt.exec);
  auto st1 = extrinsic_states(s1, eo, opt.exec);
  auto st2 = extrinsic_states(s2, eo, opt.exec);

  const double h1 = t1 - t0, h2 = t2 - t1;
  const double c0 = -h2 / (h1 * (h1 + h2)), c1 = (h2 - h1) / (h1 * h2), c2 = h1 / (h2 * (h1 + h2));
  auto ddt = [&](double f0, double f1, double f2) { return c0 * f0 + c1 * f1 + c2 * f2; };

  std::vector<double> H2(N), A2(N);
  for (long k = 0; k < N; ++k) {
    H2[k] = st1[k].H2;
    A2[k] = st1[k].A2;
  }
  auto lapH2 = laplacian_scalar(s1, H2, st1, opt.exec);
  auto lapA2 = laplacian_scalar(s1, A2, st1, opt.exec);

  const ParamGrid& grid = s1.grid();
  const bool polar = grid.topology != Topology::torus;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EvolutionResidual r;
  r.raw_dmu.assign(N, nan);
  r.raw_H2.assign(N, nan);
  r.raw_A2.assign(N, nan);
  std::vector<double> nd(N, 0), nh(N, 0), na(N, 0);
  std::vector<char> keep(N, 1);
#pragma omp parallel for schedule(dynamic, 8) if (opt.exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    if (polar) {
      const double s = grid.params(k)[0];
      if (s < opt.pole_margin || s > M_PI - opt.pole_margin) {
        keep[k] = 0;
        continue;
      }
    }
    const ExtrinsicState& e = st1[k];
    FrameCurvature fc = frame_curvature(s1, e);
    GradientData g = covariant_derivatives(s1, s1.jet(k), e, fc);
    ReactionTerms rt = reaction_terms(reaction_input(e, fc), 0.0, opt.hmin_sq_guard);
    const int n = e.n, d = e.d;

    const double mu = e.metric.sqrt_det;
    const double lhs_mu = ddt(st0[k].metric.sqrt_det, mu, st2[k].metric.sqrt_det) / mu;
    const double rhs_mu = -e.H2;
    r.raw_dmu[k] = lhs_mu - rhs_mu;
    nd[k] = std::abs(r.raw_dmu[k]) / std::max(1.0, std::abs(rhs_mu));

    double amb = 0;
    if (!opt.drop_ambient_H2)
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be)
          for (int i = 0; i < n; ++i) amb += 2 * fc.R(i, n + al, i, n + be) * e.H[al] * e.H[be];
    const double rhs_H = lapH2[k] - 2 * g.normsq_gradH + 2 * rt.R2 + amb;
    r.raw_H2[k] = ddt(st0[k].H2, e.H2, st2[k].H2) - rhs_H;
    nh[k] = std::abs(r.raw_H2[k]) / std::max(1.0, std::abs(rhs_H));

    const double rhs_A = lapA2[k] - 2 * g.normsq_gradA + 2 * rt.R1 + rt.P;
    r.raw_A2[k] = ddt(st0[k].A2, e.A2, st2[k].A2) - rhs_A;
    na[k] = std::abs(r.raw_A2[k]) / std::max(1.0, std::abs(rhs_A));
  }
  for (long k = 0; k < N; ++k) {
    if (!keep[k]) {
      ++r.excluded;
      continue;
    }
    r.res_dmu = std::max(r.res_dmu, nd[k]);
    r.res_H2 = std::max(r.res_H2, nh[k]);
    r.res_A2 = std::max(r.res_A2, na[k]);
  }
  return r;
}

}  // namespace mcf
