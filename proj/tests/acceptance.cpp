// Acceptance run: one PASS/FAIL line per criterion.

#include "mcf/flow.hpp"
#include "mcf/pinching.hpp"
#include "mcf/rescale.hpp"
#include "mcf/shapes.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace mcf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const auto an = DerivativeSource::analytic;
const auto fd = DerivativeSource::finite_difference;

DiscreteImmersion axisym_e3(const std::string& kind, std::vector<double> p, int N, DerivativeSource src = fd) {
  return build_immersion({kind, p, 2, 1}, AmbientModel::euclidean(3), Topology::axisym, {N}, src);
}

Outcome umbilical_identities() {
  const auto t0 = Clock::now();
  double e = 0;
  for (int n : {2, 3})
    for (double r : {0.5, 1.0, 1.7}) {
      auto imm = build_immersion({"round-sphere", {r}, n, 1}, AmbientModel::euclidean(n + 1), Topology::axisym, {32}, an);
      for (const auto& s : extrinsic_states(imm)) {
        e = std::max(e, std::abs(s.A2 - n / (r * r)));
        e = std::max(e, std::abs(s.H2 - n * n / (r * r)));
        e = std::max(e, std::abs(s.A02));
      }
    }
  const double dt = seconds_since(t0);
  return {e <= 1e-8 && dt < 1.0, fmt("max error %.2e (tol 1e-8), %.2f s (limit 1 s)", e, dt)};
}

Outcome shrink_to_point() {
  std::string detail;
  bool pass = true;
  for (int d : {1, 2}) {
    const auto t0 = Clock::now();
    FlowConfig cfg;
    cfg.diag_stride = 5000;
    auto tr = run_flow(build_immersion({"round-sphere", {1.0}, 2, d}, AmbientModel::euclidean(2 + d), Topology::axisym,
                                       {64}, fd),
                       cfg);
    const double dt = seconds_since(t0);
    const double T = tr.blowup_time ? *tr.blowup_time : NAN;
    const double rel = std::abs(T - 0.25) / 0.25;
    pass = pass && tr.status == FlowStatus::blowup_detected && rel <= 0.01 && dt < 60;
    detail += fmt("%sR^%d: T = %.5f (rel err %.1e, tol 1e-2), %.1f s", d == 1 ? "" : "; ", 2 + d, T, rel, dt);
  }
  return {pass, detail};
}

Outcome evolution_residuals() {
  std::vector<double> h, res[3];
  for (int N : {32, 64, 128}) {
    auto imm = axisym_e3("ellipsoid", {1.2, 1, 1}, N);
    const double T = 0.02;
    const int steps = static_cast<int>(std::lround(T / (0.05 * std::pow(M_PI / N, 2))));
    const double dt = T / steps;
    std::vector<DiscreteImmersion> w{imm};
    for (int k = 0; k <= steps; ++k) {
      w.push_back(mcf_step(w.back(), dt));
      if (w.size() > 3) w.erase(w.begin());
    }
    EvolutionOptions o;
    o.pole_margin = M_PI / 8;
    auto r = evolution_residual(w[0], w[1], w[2], T - dt, T, T + dt, o);
    h.push_back(M_PI / N);
    res[0].push_back(r.res_dmu);
    res[1].push_back(r.res_H2);
    res[2].push_back(r.res_A2);
  }
  double order[3];
  for (int q = 0; q < 3; ++q) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < h.size(); ++i) {
      const double x = std::log(h[i]), y = std::log(res[q][i]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double m = static_cast<double>(h.size());
    order[q] = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }

  // ablation of the ambient term in the 3-sphere, c = 1, n = 2
  const double dt = 1e-4, t1 = 0.05, rho0 = 1.0;
  auto amb = AmbientModel::sphere(3, 1.0);
  std::vector<DiscreteImmersion> w;
  for (double t : {t1 - dt, t1, t1 + dt}) {
    const double rho = std::acos(std::cos(rho0) * std::exp(2 * t));
    w.push_back(build_immersion({"round-sphere", {rho}, 2, 1}, amb, Topology::axisym, {32}, an));
  }
  EvolutionOptions on, off;
  off.drop_ambient_H2 = true;
  auto a = evolution_residual(w[0], w[1], w[2], t1 - dt, t1, t1 + dt, on);
  auto b = evolution_residual(w[0], w[1], w[2], t1 - dt, t1, t1 + dt, off);
  auto st = extrinsic_states(w[1]);
  double shift = 0;
  for (long k = 0; k < w[1].node_count(); ++k)
    shift = std::max(shift, std::abs(b.raw_H2[k] - a.raw_H2[k] - 2 * 2 * 1.0 * st[k].H2));

  const bool pass = order[0] >= 1.8 && order[1] >= 1.8 && order[2] >= 1.8 && shift <= 1e-8;
  return {pass, fmt("orders dmu %.2f, H2 %.2f, A2 %.2f (min 1.8); ablation shift error %.1e (tol 1e-8)", order[0],
                    order[1], order[2], shift)};
}

Outcome constants() {
  bool flat = true;
  for (int n : {2, 3, 4})
    for (int d : {1, 2, 3}) {
      auto c = pinching_constants(n, d, {0, 0, 0}, pinching_coefficient(n), {});
      flat = flat && c.b1 == 0.0 && c.C4 == 0.0;
    }
  const double vals[5] = {0.0, 0.25, 0.5, 1.0, 2.0};
  long checked = 0, violations = 0;
  for (int n : {2, 3})
    for (int d : {1, 2}) {
      const double a = pinching_coefficient(n);
      auto b1 = [&](int i, int j, int k) { return pinching_constants(n, d, {vals[i], vals[j], vals[k]}, a, {}).b1; };
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
          for (int k = 0; k < 5; ++k) {
            if (vals[i] + vals[j] == 0 && vals[k] > 0) continue;
            const double v = b1(i, j, k);
            auto test = [&](double w) {
              ++checked;
              if (w < v) ++violations;
            };
            if (i < 4) test(b1(i + 1, j, k));
            if (j < 4) test(b1(i, j + 1, k));
            if (k < 4 && vals[i] + vals[j] > 0) test(b1(i, j, k + 1));
          }
    }
  double spot = 0;
  for (auto [n, d] : {std::pair{2, 1}, {3, 2}, {4, 3}, {2, 2}}) {
    const double formula = std::pow(n, 4) * d / (2.0 * (n - 1) * (2 * n + 1));
    spot = std::max(spot, std::abs(gradient_constant(n, d) - formula));
  }
  const double c21 = gradient_constant(2, 1);
  const bool pass = flat && violations == 0 && std::abs(c21 - 1.6) <= 1e-14 && spot <= 1e-12;
  return {pass, fmt("flat b1 = C4 = 0: %s; b1 monotone %ld/%ld; C(2,1) = %.15g", flat ? "yes" : "no",
                    checked - violations, checked, c21)};
}

struct EllipsoidRun {
  RescaledTrace trace;
  double seconds = 0;
};

const EllipsoidRun& ellipsoid_run() {
  static EllipsoidRun run = [] {
    EllipsoidRun r;
    const auto t0 = Clock::now();
    FlowConfig cfg;
    cfg.blowup_threshold = 1e4;
    cfg.diag_stride = 4000;
    r.trace = run_rescaled_flow(axisym_e3("ellipsoid", {1.1, 1, 1}, 256), cfg);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome pinching_preservation() {
  const auto& r = ellipsoid_run();
  const auto& S = r.trace.flow.samples;
  double qmax = -INFINITY;
  for (const auto& s : S) qmax = std::max(qmax, s.Q_max);
  const bool reached = r.trace.flow.status == FlowStatus::blowup_detected;
  const bool pass = reached && !S.empty() && S.front().Q_max < 0 && qmax < 0 && r.seconds < 600;
  return {pass, fmt("initial max Q %.3f, max over %zu samples %.3f, status %s, %.0f s (limit 600 s)",
                    S.empty() ? NAN : S.front().Q_max, S.size(), qmax, to_string(r.trace.flow.status).c_str(),
                    r.seconds)};
}

Outcome roundness() {
  auto rep = roundness_report(ellipsoid_run().trace);
  const double ratio = rep.final_A02_max / rep.initial_A02_max;
  const bool pass = ratio < 0.1 && rep.volume_drift <= 0.005;
  return {pass, fmt("final/initial rescaled |A0|^2 %.2e (limit 0.1), volume drift %.2e (limit 5e-3)", ratio,
                    rep.volume_drift)};
}

Outcome inequality_audits() {
  struct Case {
    ShapeSpec shape;
    AmbientModel amb;
    CurvatureBounds b;
    Topology t;
    std::vector<int> sizes;
    DerivativeSource src;
  };
  auto E3 = AmbientModel::euclidean(3), E4 = AmbientModel::euclidean(4);
  auto S3 = AmbientModel::sphere(3, 1), S4 = AmbientModel::sphere(4, 1);
  auto H3 = AmbientModel::hyperbolic(3, 1), H4 = AmbientModel::hyperbolic(4, 1);
  const CurvatureBounds flat{0, 0, 0}, pos{0, 1, 0}, neg{1, 0, 0};
  const auto ax = Topology::axisym, tor = Topology::torus;
  std::vector<Case> zoo{
      {{"round-sphere", {1.0}}, E3, flat, ax, {32}, an},
      {{"ellipsoid", {1.3, 1, 0.9}}, E3, flat, Topology::latlong, {32, 64}, fd},
      {{"ellipsoid", {1.2, 1, 1}}, E3, flat, ax, {32}, an},
      {{"product-torus", {1, 0.5}, 2, 2}, E4, flat, tor, {16, 16}, an},
      {{"graph-torus", {1, 0.7, 0.2, 2, 1}, 2, 2}, E4, flat, tor, {16, 16}, an},
      {{"round-sphere", {1, 0.3}, 2, 2}, E4, flat, ax, {32}, an},
      {{"round-sphere", {1}, 3, 1}, E4, flat, ax, {32}, an},
      {{"round-sphere", {0.5}}, S3, pos, ax, {32}, an},
      {{"ellipsoid", {0.6, 0.4, 0.4}}, S3, pos, ax, {32}, an},
      {{"clifford-torus", {}}, S3, pos, tor, {16, 16}, an},
      {{"graph-torus", {0.1, 2}}, S3, pos, tor, {16, 16}, an},
      {{"round-sphere", {0.5, 0.3}, 2, 2}, S4, pos, ax, {32}, an},
      {{"ellipsoid", {0.6, 0.4, 0.4}, 2, 2}, S4, pos, ax, {32}, an},
      {{"round-sphere", {0.5}}, H3, neg, ax, {32}, an},
      {{"ellipsoid", {0.6, 0.4, 0.4}}, H3, neg, ax, {32}, an},
      {{"ellipsoid", {0.6, 0.4, 0.4}, 2, 2}, H4, neg, ax, {32}, an},
      {{"ellipsoid", {0.6, 0.4, 0.4}, 2, 2}, H4, neg, ax, {32}, fd},
  };
  long audited = 0, passed = 0;
  for (const auto& c : zoo) {
    auto imm = build_immersion(c.shape, c.amb, c.t, c.sizes, c.src);
    AuditContext ctx;
    ctx.bounds = c.b;
    ctx.constants = pinching_constants(c.shape.n, c.shape.codim, c.b, pinching_coefficient(c.shape.n), ctx.params);
    if (c.src == fd) ctx.rel_tol = std::pow(imm.min_spacing(), 2);
    auto sum = summarize_audit(audit_immersion(imm, ctx));
    for (size_t i = 0; i < sum.names.size(); ++i) {
      audited += sum.audited[i];
      passed += sum.passed[i];
    }
  }

  // estimate I on random tensors with sectional curvature >= -1
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dim(2, 4), codim(1, 3);
  std::normal_distribution<double> N01;
  int rand_pass = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = dim(rng), d = codim(rng), m = n + d;
    Eigen::MatrixXd G(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) G(i, j) = N01(rng);
    Eigen::MatrixXd B = 0.3 * G * G.transpose();
    ReactionInput in;
    in.n = n;
    in.d = d;
    in.R = Tensor4(m);
    in.DR = Tensor5(m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          for (int e = 0; e < m; ++e)
            in.R(a, b, c, e) = -((a == c) * (b == e) - (a == e) * (b == c)) + B(a, c) * B(b, e) - B(a, e) * B(b, c);
    in.h.assign(d, SmallMat::Zero(n, n));
    for (auto& h : in.h)
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) h(i, j) = h(j, i) = N01(rng);
    double A02 = 0;
    for (const auto& h : in.h) {
      const double tr = h.trace() / n;
      A02 += (h - tr * SmallMat::Identity(n, n)).squaredNorm();
    }
    const ReactionTerms t = reaction_terms(in, pinching_coefficient(n));
    if (t.I <= 4 * n * 1.0 * A02 + 1e-9) ++rand_pass;
  }
  const bool pass = audited > 0 && passed == audited && rand_pass == trials;
  return {pass, fmt("%ld/%ld node audits over %zu zoo cases; random estimate I %d/%d", passed, audited, zoo.size(),
                    rand_pass, trials)};
}

Outcome blowup_ode() {
  auto r = b_blowup_ode(1.0, 0, 0, 2.0 / 3.0, 2, 1e-4);
  const double e = std::abs(r.t0 - 1.0 / 6.0);
  return {r.blowup && e <= 1e-4, fmt("t0 = %.8f, error %.1e (tol 1e-4)", r.t0, e)};
}

Outcome scaling_closure() {
  double closure = 0;
  long samples = 0;
  auto absorb = [&](const RescaledTrace& tr) {
    for (const auto& s : tr.samples) {
      closure = std::max(closure, s.closure);
      ++samples;
    }
  };
  absorb(ellipsoid_run().trace);
  {
    FlowConfig cfg;
    cfg.blowup_threshold = 1e4;
    cfg.diag_stride = 400;
    absorb(run_rescaled_flow(axisym_e3("round-sphere", {1.0}, 64), cfg));
  }
  {
    FlowConfig cfg;
    cfg.t_max = 0.05;
    cfg.diag_stride = 5;
    absorb(run_rescaled_flow(build_immersion({"clifford-torus", {}, 2, 1}, AmbientModel::sphere(3, 1.0),
                                             Topology::torus, {16, 16}, an),
                             cfg));
  }
  double fsig = 0;
  std::vector<DiscreteImmersion> zoo{
      axisym_e3("ellipsoid", {1.2, 1, 1}, 32),
      build_immersion({"round-sphere", {0.7}, 2, 1}, AmbientModel::sphere(3, 1.0), Topology::axisym, {32}, an),
      build_immersion({"round-sphere", {0.7}, 3, 1}, AmbientModel::hyperbolic(4, 1.0), Topology::axisym, {24}, an),
      build_immersion({"product-torus", {1.0, 0.6}, 2, 2}, AmbientModel::perturbed(4, 0.05, 1.0), Topology::torus,
                      {16, 16}, fd),
  };
  for (const auto& imm : zoo)
    for (double sigma : {0.25, 0.5}) {
      PinchingParams p;
      p.sigma = sigma;
      auto raw = raw_diagnostics(imm, p);
      for (double psi : {0.5, 2.0, 7.3}) {
        auto r = dilated_recompute(imm, psi, p);
        fsig = std::max(fsig, std::abs(r.f_sigma_max - std::pow(psi, -2 * sigma) * raw.f_sigma_max) /
                                  std::max(1.0, raw.f_sigma_max));
      }
    }
  return {closure <= 1e-10 && fsig <= 1e-10,
          fmt("closure %.1e over %ld samples (tol 1e-10); f_sigma scaling error %.1e (tol 1e-10)", closure, samples,
              fsig)};
}

Outcome fixed_point() {
  auto imm = build_immersion({"clifford-torus", {}, 2, 1}, AmbientModel::sphere(3, 1.0), Topology::torus, {32, 32}, an);
  FlowConfig cfg;
  cfg.t_max = 0.1;
  cfg.diag_stride = 50;
  cfg.keep_states = true;
  auto tr = run_flow(imm, cfg);
  double drift = 0;
  for (const auto& st : tr.states)
    for (long k = 0; k < imm.node_count(); ++k) drift = std::max(drift, (st.position(k) - imm.position(k)).norm());
  const double rate = drift / tr.t_final;
  const bool pass = tr.status == FlowStatus::reached_t_max && rate <= 1e-10;
  return {pass, fmt("max displacement per unit time %.1e over [0, %.2f] (tol 1e-10)", rate, tr.t_final)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"umbilical identities", umbilical_identities},
      {"shrink-to-point timing", shrink_to_point},
      {"evolution-equation residuals", evolution_residuals},
      {"pinching constants", constants},
      {"pinching preservation", pinching_preservation},
      {"roundness", roundness},
      {"inequality audits", inequality_audits},
      {"b(t) blowup ODE", blowup_ode},
      {"scaling closure", scaling_closure},
      {"fixed point", fixed_point},
  };
  int failed = 0, i = 0;
  for (const auto& [name, fn] : criteria) {
    ++i;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", i, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria pass\n", i - failed, i);
  return failed == 0 ? 0 : 1;
}
