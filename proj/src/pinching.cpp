#include "mcf/pinching.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>

namespace mcf {

namespace {

double frob2(const SmallMat& m) { return m.squaredNorm(); }

struct Split {
  double H2 = 0.0;
  double A02_H = 0.0;
  double A02_I = 0.0;
};

Split split_of(const ReactionInput& in) {
  Split s;
  const int n = in.n;
  for (int al = 0; al < in.d; ++al) {
    const double tr = in.h[al].trace();
    s.H2 += tr * tr;
    SmallMat h0 = in.h[al] - (tr / n) * SmallMat::Identity(n, n);
    (al == 0 ? s.A02_H : s.A02_I) += frob2(h0);
  }
  return s;
}

bool passes(double margin, double lhs, double rhs, const AuditContext& ctx) {
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return margin >= -(ctx.tol + ctx.rel_tol * scale);
}

AuditEntry upper(const std::string& name, double lhs, double rhs, const AuditContext& ctx) {
  AuditEntry e{name, true, lhs, rhs, rhs - lhs, true};
  e.pass = passes(e.margin, lhs, rhs, ctx);
  return e;
}

AuditEntry lower(const std::string& name, double lhs, double rhs, const AuditContext& ctx) {
  AuditEntry e{name, true, lhs, rhs, lhs - rhs, true};
  e.pass = passes(e.margin, lhs, rhs, ctx);
  return e;
}

AuditEntry absent(const std::string& name) { return AuditEntry{name, false, 0, 0, 0, true}; }

// Worst plane of the Xu-Gu lower bound for the intrinsic sectional curvature
// obtained from the Gauss equation.
AuditEntry xu_gu(const ExtrinsicState& s, const FrameCurvature& fc, double Kmin, const AuditContext& ctx,
                 long node) {
  const int n = s.n, d = s.d;
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> planes;
  Eigen::MatrixXd Einv = Eigen::MatrixXd(s.E).inverse();
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) planes.emplace_back(Einv.row(a).transpose(), Einv.row(b).transpose());
  std::mt19937 rng(ctx.seed + static_cast<unsigned>(node));
  std::normal_distribution<double> N;
  if (n > 2)
    for (int k = 0; k < ctx.random_planes; ++k) {
      Eigen::VectorXd u(n), v(n);
      for (int i = 0; i < n; ++i) {
        u[i] = N(rng);
        v[i] = N(rng);
      }
      planes.emplace_back(u, v);
    }
  const double base = 0.5 * (2 * Kmin + s.H2 / (n - 1) - s.A2);
  AuditEntry worst = absent("xu_gu");
  for (auto& [u0, v0] : planes) {
    Eigen::MatrixXd M(n, n + 2);
    M.col(0) = u0;
    M.col(1) = v0;
    M.rightCols(n) = Eigen::MatrixXd::Identity(n, n);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    double K = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int e = 0; e < n; ++e) K += fc.R(a, b, c, e) * Q(a, 0) * Q(b, 1) * Q(c, 0) * Q(e, 1);
    double extra = 0;
    for (int al = 0; al < d; ++al) {
      Eigen::MatrixXd h = Q.transpose() * Eigen::MatrixXd(s.h[al]) * Q;
      K += h(0, 0) * h(1, 1) - h(0, 1) * h(0, 1);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (!(i == 0 && j == 1)) extra += h(i, j) * h(i, j);
    }
    AuditEntry e = lower("xu_gu", K, base + extra, ctx);
    if (!worst.present || e.margin < worst.margin) worst = e;
  }
  return worst;
}

}  // namespace

void PinchingParams::validate() const {
  if (!(sigma > 0 && sigma < 1)) throw ConfigError("sigma must lie in (0,1)");
  if (p < 2) throw ConfigError("p must be at least 2");
  for (double v : {mu, rho, varrho, theta, vartheta, N1, N2})
    if (!(v > 0)) throw ConfigError("free pinching constants must be positive");
  if (eta && !(*eta > 0)) throw ConfigError("eta must be positive");
  if (!(eta5 >= 0)) throw ConfigError("eta5 must be nonnegative");
  if (!(C0 > 0) || !(delta > 0)) throw ConfigError("C0 and delta must be positive");
  if (!(b >= 0)) throw ConfigError("b must be nonnegative");
}

double pinching_coefficient(int n) {
  if (n < 2) throw InputError("pinching coefficient needs n >= 2");
  return n <= 3 ? 4.0 / (3.0 * n) : 1.0 / (n - 1);
}

double gradient_constant(int n, int d) {
  if (n < 2 || d < 1) throw InputError("C(n,d) needs n >= 2 and d >= 1");
  return std::pow(n, 4) * d / (2.0 * (n - 1) * (2 * n + 1));
}

PinchingConstants pinching_constants(int n, int d, const CurvatureBounds& bounds, double a,
                                     const PinchingParams& params) {
  bounds.validate();
  params.validate();
  if (n < 2 || d < 1) throw InputError("pinching constants need n >= 2 and d >= 1");
  const double s = a - 1.0 / n;
  if (!(s > 0)) throw InputError("pinching coefficient a must exceed 1/n");
  PinchingConstants c;
  c.n = n;
  c.d = d;
  c.a = a;
  c.Cnd = gradient_constant(n, d);
  c.eta = params.eta ? *params.eta : 0.5 * (3.0 / (n + 2) - a);
  c.eps_nabla = 3.0 / (n + 2) - c.eta - a;
  if (!(c.eps_nabla > 0)) throw ConfigError("eps_nabla = 3/(n+2) - eta - a must be positive");
  c.C0 = params.C0;
  c.delta = params.delta;

  const double K1 = bounds.K1, K2 = bounds.K2, L = bounds.L, K = K1 + K2;
  const bool flat = K == 0.0;
  const double theta = flat ? 0.0 : params.theta;
  const double vtheta = flat ? 0.0 : params.vartheta;
  const double rho = params.rho, vrho = params.varrho;
  const double X = 2 * (n * a * K1 + K2) / s;
  c.C1 = 4 * n * K1 + 2 * n * K2 + X +
         (vrho * n * (d - 1) + n * (d - 2) + 16.0 / 3.0 * rho * (n - 1) * (d - 1)) * K + theta;
  c.C2 = 4 * n * K1 + 2 * n * K2 + X +
         (n / vrho + 16.0 / (3.0 * rho) * (n - 1) + 8.0 / 3.0 * std::sqrt(n - 1.0) * (d - 2)) * K + n * vtheta;
  c.C3 = X;
  c.C4 = flat ? 0.0 : L * L / theta + 4 * L * L / vtheta;
  if (flat) {
    c.b1 = 0.0;
  } else {
    c.b1 = std::max({c.C1 / (2 * a) * s, c.C2 / 4 * n * s,
                     0.25 * n * s * (c.C3 + std::sqrt(c.C3 * c.C3 + 8 * c.C4 / (n * s)))});
  }
  c.b0 = std::max(c.b1, 2 * K1);
  return c;
}

PinchingQuantities pinching_quantities(const ExtrinsicState& s, const PinchingParams& p, double guard) {
  PinchingQuantities q;
  q.Q = s.A2 - p.a * s.H2 + p.b;
  if (s.H2 > guard) {
    q.f_sigma = s.A02 / std::pow(s.H2, 1 - p.sigma);
    q.pinch_ratio = s.A02 / std::pow(s.H2, 1 - p.delta / 2);
  }
  return q;
}

ReactionInput reaction_input(const ExtrinsicState& s, const FrameCurvature& fc) {
  ReactionInput in;
  in.n = s.n;
  in.d = s.d;
  in.h = s.h;
  in.R = fc.R;
  in.DR = fc.DR;
  in.h_aligned = s.decomp.valid;
  return in;
}

ReactionTerms reaction_terms(const ReactionInput& in, double a, double guard) {
  const int n = in.n, d = in.d;
  const auto& h = in.h;
  const auto& R = in.R;
  std::vector<double> H(d);
  for (int al = 0; al < d; ++al) H[al] = h[al].trace();
  auto hh = [&](int al, int be) { return (h[al].array() * h[be].array()).sum(); };
  ReactionTerms t;

  double sq = 0, comm = 0, zc = 0;
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be) {
      sq += std::pow(hh(al, be), 2);
      SmallMat C = h[al] * h[be].transpose() - h[be] * h[al].transpose();
      comm += C.squaredNorm();
      zc += H[al] * (h[al] * h[be]).cwiseProduct(h[be]).sum();
    }
  t.R1 = sq + comm;
  SmallMat HA = SmallMat::Zero(n, n);
  for (int al = 0; al < d; ++al) HA += H[al] * h[al];
  t.R2 = HA.squaredNorm();
  t.Z = zc - sq - comm;

  for (int al = 0; al < d; ++al)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) t.I += 4 * R(i, p, j, q) * h[al](p, q) * h[al](i, j);
      }
  SmallMat S = SmallMat::Zero(n, n);
  for (int al = 0; al < d; ++al) S += h[al] * h[al];
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int p = 0; p < n; ++p) t.I -= 4 * R(k, j, k, p) * S(p, j);

  double H2 = 0;
  for (double v : H) H2 += v * v;
  t.split_valid = in.h_aligned && H2 > guard;

  auto IIpart = [&](int al, int be) {
    double v = 0;
    for (int k = 0; k < n; ++k) v += R(k, n + al, k, n + be) * (2 * hh(al, be) - 2 * a * H[al] * H[be]);
    return v;
  };
  auto IIIpart = [&](int al, int be) {
    double v = 0;
    SmallMat M = h[al].transpose() * h[be];  // M(p, j) = sum_i h^al_ip h^be_ij
    for (int j = 0; j < n; ++j)
      for (int p = 0; p < n; ++p) v += -8 * R(j, p, n + al, n + be) * M(p, j);
    return v;
  };
  for (int al = 0; al < d; ++al)
    for (int be = 0; be < d; ++be) {
      t.II += IIpart(al, be);
      t.III += IIIpart(al, be);
    }
  for (int be = 0; be < d; ++be)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          t.IV += 2 * (in.DR(k, k, i, j, n + be) - in.DR(i, j, k, k, n + be)) * h[be](i, j);

  if (t.split_valid) {
    t.II1 = IIpart(0, 0);
    for (int al = 1; al < d; ++al) {
      t.II2 += IIpart(al, 0) + IIpart(0, al);
      t.III1 += IIIpart(al, 0) + IIIpart(0, al);
      for (int be = 1; be < d; ++be) {
        t.II3 += IIpart(al, be);
        if (al != be) t.III2 += IIIpart(al, be);
      }
    }
  }
  t.P = t.I + t.II + t.III + t.IV;
  return t;
}

std::vector<AuditEntry> inequality_audit(const ExtrinsicState& s, const GradientData& g, const FrameCurvature& fc,
                                         const AmbientModel& ambient, const AuditContext& ctx, long node) {
  const int n = s.n, d = s.d;
  const PinchingConstants& c = ctx.constants;
  const CurvatureBounds& B = ctx.bounds;
  const double K = B.K1 + B.K2, L = B.L;
  const double a = c.a, sa = a - 1.0 / n;
  std::vector<AuditEntry> out;

  const double eta = c.eta;
  out.push_back(lower("gradA_H", g.normsq_gradA,
                      (3.0 / (n + 2) - eta) * g.normsq_gradH -
                          2.0 / (n + 2) * (2.0 / ((n + 2) * eta) - n / (n - 1.0)) * g.normsq_w,
                      ctx));
  const double lhs2 = g.normsq_gradA - g.normsq_gradH / n;
  const double k2 = (n - 1.0) / (2 * n + 1);
  out.push_back(lower("gradA0_w", lhs2, k2 * g.normsq_gradA - 2.0 * n / ((n - 1.0) * (2 * n + 1)) * g.normsq_w, ctx));
  out.push_back(lower("gradA0_K", lhs2, k2 * g.normsq_gradA - c.Cnd * K * K, ctx));

  ReactionInput in = reaction_input(s, fc);
  ReactionTerms t = reaction_terms(in, a, ctx.hmin_sq_guard);
  out.push_back(upper("I", t.I, 4 * n * B.K1 * s.A02, ctx));

  const bool flat = K == 0.0;
  const double theta = flat ? 0.0 : ctx.params.theta, vtheta = flat ? 0.0 : ctx.params.vartheta;
  const double rho = ctx.params.rho, vrho = ctx.params.varrho;
  if (t.split_valid) {
    Split sp = split_of(in);
    // the estimates hold where Q = 0, i.e. for b = (a - 1/n)|H|^2 - |A0|^2
    const double b_eff = sa * sp.H2 - (sp.A02_H + sp.A02_I);
    const double X = 2 * (n * a * B.K1 + B.K2) / sa;
    if (b_eff >= 0) {
      const double rhs = (2 * n * B.K2 + X + (vrho * n * (d - 1) + n * (d - 2)) * K) * sp.A02_H +
                         (X + n / vrho * K + 2 * n * B.K2) * sp.A02_I + X * b_eff;
      out.push_back(upper("II", t.II, rhs, ctx));
      const double q = 2.0 / (n * sa);
      const double rhs2 = (6 - q) * sp.A02_H * sp.A02_I + (3 - q) * sp.A02_I * sp.A02_I -
                          2 * n * a * b_eff / (n * sa) * sp.A02_H - 2 * q * b_eff * sp.A02_I - q * b_eff * b_eff;
      out.push_back(upper("second_line", 2 * t.R1 - 2 * a * t.R2, rhs2, ctx));
    } else {
      out.push_back(absent("II"));
      out.push_back(absent("second_line"));
    }
    out.push_back(upper("III", t.III,
                        16.0 / 3.0 * rho * (n - 1) * (d - 1) * K * sp.A02_H +
                            (16.0 / (3.0 * rho) * (n - 1) + 8.0 / 3.0 * std::sqrt(n - 1.0) * (d - 2)) * K * sp.A02_I,
                        ctx));
    double iv = 0, iv2 = 0;
    if (!flat) {
      iv = L * L / theta + theta * sp.A02_H + 4 * L * L / vtheta + n * vtheta * sp.A02_I;
      iv2 = iv + (2 * n - 1) * theta * sp.A02_H;
    }
    out.push_back(upper("IV", t.IV, iv, ctx));
    out.push_back(upper("IV_2n", t.IV, iv2, ctx));
  } else {
    for (const char* nm : {"II", "second_line", "III", "IV", "IV_2n"}) out.push_back(absent(nm));
  }

  const double Kmin = ambient.is_space_form() ? ambient.space_form_curvature() : -B.K1;
  out.push_back(xu_gu(s, fc, Kmin, ctx, node));

  const double den = s.A02 * s.H2;
  if (s.A02 > 1e-10 * std::max(1.0, s.A2) && s.H2 > ctx.hmin_sq_guard) {
    out.push_back(AuditEntry{"z_ratio", true, t.Z, den, t.Z / den, true});
  } else {
    out.push_back(absent("z_ratio"));
  }
  return out;
}

std::vector<std::vector<AuditEntry>> audit_immersion(const DiscreteImmersion& imm, const AuditContext& ctx,
                                                     Exec exec) {
  const long N = imm.node_count();
  std::vector<std::vector<AuditEntry>> rows(N);
  ExtrinsicOptions opt;
  opt.hmin_sq_guard = ctx.hmin_sq_guard;
#pragma omp parallel for schedule(dynamic, 8) if (exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    Jet J = imm.jet(k);
    ExtrinsicState s = extrinsic_state(imm, J, opt);
    FrameCurvature fc = frame_curvature(imm, s);
    GradientData g = covariant_derivatives(imm, J, s, fc);
    rows[k] = inequality_audit(s, g, fc, imm.ambient(), ctx, k);
  }
  return rows;
}

AuditSummary summarize_audit(const std::vector<std::vector<AuditEntry>>& rows) {
  AuditSummary sum;
  for (auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) {
      if (sum.names.size() <= i) {
        sum.names.push_back(row[i].name);
        sum.audited.push_back(0);
        sum.passed.push_back(0);
        sum.worst_margin.push_back(INFINITY);
      }
      if (!row[i].present) continue;
      ++sum.audited[i];
      if (row[i].pass) ++sum.passed[i];
      sum.worst_margin[i] = std::min(sum.worst_margin[i], row[i].margin);
    }
  return sum;
}

double AuditSummary::pass_rate(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return audited[i] ? double(passed[i]) / audited[i] : 1.0;
  throw InputError("no audit entry named " + name);
}

BlowupOde b_blowup_ode(double b_init, double C3, double C4, double a, int n, double dt, double cap) {
  const double s = a - 1.0 / n;
  if (!(s > 0)) throw InputError("pinching coefficient a must exceed 1/n");
  if (!(b_init > 0) || !(dt > 0)) throw InputError("b_init and dt_ode must be positive");
  BlowupOde r;
  r.t.push_back(0.0);
  r.b.push_back(b_init);
  const double slope = 2 * b_init * b_init / (n * s) - C3 * b_init - C4;
  if (slope <= 0) return r;
  auto f = [&](double u) { return -2.0 / (n * s) + C3 * u + C4 * u * u; };
  double u = 1.0 / b_init, t = 0.0;
  const long max_steps = 100000000;
  for (long k = 0; k < max_steps; ++k) {
    const double k1 = f(u), k2 = f(u + 0.5 * dt * k1), k3 = f(u + 0.5 * dt * k2), k4 = f(u + dt * k3);
    const double un = u + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (un <= 0) {
      r.blowup = true;
      r.t0 = t + dt * u / (u - un);
      return r;
    }
    u = un;
    t += dt;
    if (1.0 / u <= cap) {
      r.t.push_back(t);
      r.b.push_back(1.0 / u);
    }
  }
  return r;
}

double gradient_estimate_functional(const ExtrinsicState& s, const GradientData& g, const PinchingParams& p) {
  return g.normsq_gradH + (p.N1 + p.N2 * s.A2) * s.A02 - p.eta5 * s.H2 * s.H2;
}

double fit_C0(const std::vector<double>& A02, const std::vector<double>& H2, double delta) {
  if (A02.size() != H2.size()) throw InputError("fit_C0 needs matching samples");
  double c = 0;
  for (size_t i = 0; i < A02.size(); ++i)
    if (H2[i] > 0) c = std::max(c, A02[i] / std::pow(H2[i], 1 - delta / 2));
  return c;
}

}  // namespace mcf
