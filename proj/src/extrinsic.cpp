#include "mcf/extrinsic.hpp"

#include <cmath>

namespace mcf {

namespace {

struct Connection {
  SmallMat g;
  SmallMat ginv;
  std::vector<double> gamma;  // (l*n+a)*n+b
  std::vector<Vec> B;         // D_{F_a} F_b, index a*n+b
};

Connection connection_of(const AmbientModel& amb, const Jet& J, int n, double scale) {
  Connection c;
  c.g.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) c.g(a, b) = c.g(b, a) = scale * amb.inner(J.x, J.F(a), J.F(b));
  const double det = c.g.determinant();
  if (!(det > 0) || !std::isfinite(det)) throw DegeneracyError("induced metric is degenerate");
  c.ginv = c.g.inverse();
  c.B.resize(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) c.B[a * n + b] = J.F(a, b) + amb.christoffel(J.x, J.F(a), J.F(b));
  c.gamma.assign(n * n * n, 0.0);
  std::vector<double> BF(n * n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int m = 0; m < n; ++m) BF[(a * n + b) * n + m] = scale * amb.inner(J.x, c.B[a * n + b], J.F(m));
  for (int l = 0; l < n; ++l)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0;
        for (int m = 0; m < n; ++m) s += c.ginv(l, m) * BF[(a * n + b) * n + m];
        c.gamma[(l * n + a) * n + b] = s;
      }
  return c;
}

// Linear map v -> sum_alpha nu_alpha <nu_alpha, v> as a matrix.
Mat normal_projector(const AmbientModel& amb, const Vec& x, const std::vector<Vec>& normals) {
  const int D = amb.embed_dim();
  Mat G(D, D);
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) G(a, b) = amb.inner(x, Vec::Unit(D, a), Vec::Unit(D, b));
  Mat P = Mat::Zero(D, D);
  for (const Vec& nu : normals) P += nu * (G * nu).transpose();
  return P;
}

Mat projector_at(const AmbientModel& amb, const Jet& J, int n) {
  std::vector<Vec> t;
  for (int i = 0; i < n; ++i) t.push_back(J.F(i));
  return normal_projector(amb, J.x, normal_frame(amb, J.x, t));
}

// Derivative of a jet-derived field along a parameter axis.
template <class Fn>
Eigen::MatrixXd field_derivative(const DiscreteImmersion& imm, long node, int axis, Fn&& f) {
  const double h = imm.field_step(axis);
  auto at = [&](int k) -> Eigen::MatrixXd { return f(imm.shifted_jet(node, axis, k)); };
  if (imm.field_on_grid(axis)) return (at(1) - at(-1)) / (2 * h);
  return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
}

// First derivatives of the induced metric, dg(c, a*n+b) = d_c g_ab.
Eigen::MatrixXd metric_derivative(const AmbientModel& amb, const Jet& J, int n) {
  Eigen::MatrixXd dg(n, n * n);
  Vec grad = amb.potential_gradient(J.x);
  for (int c = 0; c < n; ++c) {
    const double conf = 2.0 * grad.dot(J.F(c));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        dg(c, a * n + b) = amb.inner(J.x, J.F(a, c), J.F(b)) + amb.inner(J.x, J.F(a), J.F(b, c)) +
                           conf * amb.inner(J.x, J.F(a), J.F(b));
  }
  return dg;
}

}  // namespace

SmallMat ExtrinsicState::hring(int alpha) const {
  SmallMat r = h[alpha];
  for (int i = 0; i < n; ++i) r(i, i) -= H[alpha] / n;
  return r;
}

ExtrinsicState extrinsic_state(const DiscreteImmersion& imm, const Jet& J, const ExtrinsicOptions& opt) {
  const AmbientModel& amb = imm.ambient();
  const int n = imm.n(), d = imm.codim();
  const double scale = opt.metric_scale;
  if (!(scale > 0)) throw InputError("metric scale must be positive");
  auto ip = [&](const Vec& u, const Vec& v) { return scale * amb.inner(J.x, u, v); };

  ExtrinsicState s;
  s.n = n;
  s.d = d;
  s.x = J.x;
  Connection c = connection_of(amb, J, n, scale);
  s.metric.g = c.g;
  s.metric.ginv = c.ginv;
  s.metric.sqrt_det = std::sqrt(c.g.determinant());
  s.gamma = c.gamma;

  Eigen::LLT<SmallMat> llt(c.g);
  if (llt.info() != Eigen::Success) throw DegeneracyError("induced metric is not positive definite");
  SmallMat L = llt.matrixL();
  s.E = L.inverse();
  s.tangent.resize(n);
  for (int i = 0; i < n; ++i) {
    s.tangent[i] = Vec::Zero(J.x.size());
    for (int a = 0; a < n; ++a) s.tangent[i] += s.E(i, a) * J.F(a);
  }

  s.A_coord.resize(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Vec A = c.B[a * n + b];
      for (int l = 0; l < n; ++l) A -= s.gamma[(l * n + a) * n + b] * J.F(l);
      if (amb.has_constraint()) A -= amb.inner(J.x, A, J.x) / amb.inner(J.x, J.x, J.x) * J.x;
      s.A_coord[a * n + b] = A;
    }

  std::vector<Vec> coord_t;
  for (int a = 0; a < n; ++a) coord_t.push_back(J.F(a));
  std::vector<Vec> nu = normal_frame(amb, J.x, coord_t);
  for (Vec& v : nu) v /= std::sqrt(scale);
  if (opt.normal_remix) {
    const Mat& M = *opt.normal_remix;
    std::vector<Vec> mixed(d, Vec::Zero(J.x.size()));
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) mixed[b] += M(a, b) * nu[a];
    nu = mixed;
  }

  Vec Hvec = Vec::Zero(J.x.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) Hvec += c.ginv(a, b) * s.A_coord[a * n + b];
  s.Hvec = Hvec;
  const double H2vec = ip(Hvec, Hvec);
  const bool aligned = opt.h_aligned && H2vec > opt.hmin_sq_guard;
  if (aligned) {
    std::vector<Vec> frame{Hvec / std::sqrt(H2vec)};
    for (const Vec& v0 : nu) {
      if (static_cast<int>(frame.size()) == d) break;
      Vec v = v0;
      for (int pass = 0; pass < 2; ++pass)
        for (const Vec& f : frame) v -= ip(v, f) * f;
      double nn = ip(v, v);
      if (nn < 1e-6) continue;
      frame.push_back(v / std::sqrt(nn));
    }
    if (static_cast<int>(frame.size()) != d) throw DegeneracyError("H-aligned frame is incomplete");
    nu = frame;
  }
  s.normal = nu;

  s.h.assign(d, SmallMat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Vec Aij = Vec::Zero(J.x.size());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) Aij += s.E(i, a) * s.E(j, b) * s.A_coord[a * n + b];
      for (int al = 0; al < d; ++al) s.h[al](i, j) = s.h[al](j, i) = ip(Aij, nu[al]);
    }
  s.H = Vec::Zero(d);
  s.A2 = 0.0;
  s.A02 = 0.0;
  for (int al = 0; al < d; ++al) {
    s.H[al] = s.h[al].trace();
    s.A2 += s.h[al].squaredNorm();
    s.A02 += s.hring(al).squaredNorm();
  }
  s.H2 = s.H.squaredNorm();
  if (aligned) {
    s.decomp.valid = true;
    s.decomp.A2_H = s.h[0].squaredNorm();
    s.decomp.A02_H = s.hring(0).squaredNorm();
    for (int al = 1; al < d; ++al) {
      s.decomp.A2_I += s.h[al].squaredNorm();
      s.decomp.A02_I += s.hring(al).squaredNorm();
    }
  }
  return s;
}

ExtrinsicState extrinsic_state(const DiscreteImmersion& imm, long node, const ExtrinsicOptions& opt) {
  try {
    return extrinsic_state(imm, imm.jet(node), opt);
  } catch (const DegeneracyError& e) {
    throw DegeneracyError(e.what(), node);
  }
}

std::vector<ExtrinsicState> extrinsic_states(const DiscreteImmersion& imm, const ExtrinsicOptions& opt,
                                             Exec exec) {
  const long N = imm.node_count();
  std::vector<ExtrinsicState> out(N);
  std::vector<long> bad(N, -1);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    try {
      out[k] = extrinsic_state(imm, k, opt);
    } catch (const std::exception&) {
      bad[k] = k;
    }
  }
  for (long k = 0; k < N; ++k)
    if (bad[k] >= 0) throw DegeneracyError("immersion is degenerate", k);
  return out;
}

std::vector<Vec> adapted_ambient_frame(const ExtrinsicState& s) {
  std::vector<Vec> f = s.tangent;
  f.insert(f.end(), s.normal.begin(), s.normal.end());
  return f;
}

FrameCurvature frame_curvature(const DiscreteImmersion& imm, const ExtrinsicState& s) {
  const auto frame = adapted_ambient_frame(s);
  return {imm.ambient().curvature_tensor(s.x, frame), imm.ambient().nabla_curvature(s.x, frame)};
}

GradientData covariant_derivatives(const DiscreteImmersion& imm, const Jet& J, const ExtrinsicState& s,
                                   const FrameCurvature& fc) {
  const AmbientModel& amb = imm.ambient();
  const int n = s.n, d = s.d;
  const Vec& x = J.x;
  auto ip = [&](const Vec& u, const Vec& v) { return amb.inner(x, u, v); };
  auto perp = [&](const Vec& v) {
    Vec r = Vec::Zero(v.size());
    for (const Vec& nu : s.normal) r += ip(v, nu) * nu;
    return r;
  };

  // nabla~_c A_ab in coordinates
  std::vector<Vec> DA(n * n * n);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Vec Bab = J.F(a, b) + amb.christoffel(x, J.F(a), J.F(b));
        Vec DB = J.F(a, b, c) + amb.christoffel_derivative(x, J.F(c), J.F(a), J.F(b)) +
                 amb.christoffel(x, J.F(a, c), J.F(b)) + amb.christoffel(x, J.F(a), J.F(b, c)) +
                 amb.christoffel(x, J.F(c), Bab);
        Vec v = perp(DB);
        for (int l = 0; l < n; ++l) {
          v -= s.Gamma(l, a, b) * s.A_coord[c * n + l];
          v -= s.Gamma(l, c, a) * s.A_coord[l * n + b];
          v -= s.Gamma(l, c, b) * s.A_coord[a * n + l];
        }
        DA[(c * n + a) * n + b] = v;
      }

  GradientData G;
  G.n = n;
  G.d = d;
  G.gradA.assign(n * d * n * n, 0.0);
  // contract one index at a time: T1(c, a, i), T2(c, i, j), T3(k, i, j)
  std::vector<Vec> T1(n * n * n, Vec::Zero(x.size())), T2(n * n * n, Vec::Zero(x.size()));
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j)
        for (int b = 0; b < n; ++b) T1[(c * n + a) * n + j] += s.E(j, b) * DA[(c * n + a) * n + b];
  for (int c = 0; c < n; ++c)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a) T2[(c * n + i) * n + j] += s.E(i, a) * T1[(c * n + a) * n + j];
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec v = Vec::Zero(x.size());
        for (int c = 0; c < n; ++c) v += s.E(k, c) * T2[(c * n + i) * n + j];
        for (int al = 0; al < d; ++al) G.gradA[((k * d + al) * n + i) * n + j] = ip(v, s.normal[al]);
      }

  G.gradH.assign(n * d, 0.0);
  for (int k = 0; k < n; ++k)
    for (int al = 0; al < d; ++al) {
      double t = 0;
      for (int i = 0; i < n; ++i) t += G.dA(k, al, i, i);
      G.gradH[k * d + al] = t;
    }
  G.w.assign(n * d, 0.0);
  for (int i = 0; i < n; ++i)
    for (int al = 0; al < d; ++al) {
      double t = 0;
      for (int j = 0; j < n; ++j) t += fc.R(n + al, j, i, j);
      G.w[i * d + al] = t;
    }
  for (double v : G.gradA) G.normsq_gradA += v * v;
  for (double v : G.gradH) G.normsq_gradH += v * v;
  for (double v : G.w) G.normsq_w += v * v;
  G.normsq_gradA0 = G.normsq_gradA - G.normsq_gradH / n;
  return G;
}

GradientData covariant_derivatives(const DiscreteImmersion& imm, long node, const ExtrinsicOptions& opt) {
  Jet J = imm.jet(node);
  ExtrinsicState s = extrinsic_state(imm, J, opt);
  return covariant_derivatives(imm, J, s, frame_curvature(imm, s));
}

Tensor4 intrinsic_curvature(const DiscreteImmersion& imm, long node, const ExtrinsicState& s) {
  const int n = s.n;
  const AmbientModel& amb = imm.ambient();
  auto dgf = [&](const Jet& J) { return metric_derivative(amb, J, n); };
  Eigen::MatrixXd dg = dgf(imm.jet(node));
  // ddg[e](c, a*n+b) = d_e d_c g_ab
  std::vector<Eigen::MatrixXd> ddg(n);
  for (int e = 0; e < n; ++e) ddg[e] = field_derivative(imm, node, e, dgf);
  auto g2 = [&](int a, int b, int c, int e) {
    return 0.5 * (ddg[e](c, a * n + b) + ddg[c](e, a * n + b));
  };
  const SmallMat& g = s.metric.g;
  Tensor4 Rc(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          // <R(d_a, d_b) d_c, d_d> with R(X,Y) = D_X D_Y - D_Y D_X
          double v = 0.5 * (g2(b, d, a, c) + g2(a, c, b, d) - g2(b, c, a, d) - g2(a, d, b, c));
          for (int p = 0; p < n; ++p) {
            v -= dg(a, d * n + p) * s.Gamma(p, b, c);
            v += dg(b, d * n + p) * s.Gamma(p, a, c);
            for (int q = 0; q < n; ++q)
              v += g(d, p) * (s.Gamma(q, b, c) * s.Gamma(p, a, q) - s.Gamma(q, a, c) * s.Gamma(p, b, q));
          }
          Rc(a, b, c, d) = -v;
        }
  Tensor4 R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = 0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int c = 0; c < n; ++c)
                for (int e = 0; e < n; ++e)
                  v += s.E(i, a) * s.E(j, b) * s.E(k, c) * s.E(l, e) * Rc(a, b, c, e);
          R(i, j, k, l) = v;
        }
  return R;
}

StructureResiduals structure_residuals(const DiscreteImmersion& imm, long node, const ExtrinsicOptions& opt) {
  const AmbientModel& amb = imm.ambient();
  Jet J = imm.jet(node);
  ExtrinsicState s = extrinsic_state(imm, J, opt);
  FrameCurvature fc = frame_curvature(imm, s);
  GradientData G = covariant_derivatives(imm, J, s, fc);
  const int n = s.n, d = s.d;
  StructureResiduals r;

  Tensor4 Rint = intrinsic_curvature(imm, node, s);
  double gs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double rhs = fc.R(i, j, k, l);
          for (int al = 0; al < d; ++al)
            rhs += s.h[al](i, k) * s.h[al](j, l) - s.h[al](i, l) * s.h[al](j, k);
          gs += std::pow(Rint(i, j, k, l) - rhs, 2);
        }
  r.gauss = std::sqrt(gs);

  double cs = 0;
  for (int al = 0; al < d; ++al)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          cs += std::pow(G.dA(k, al, i, j) - G.dA(j, al, i, k) + fc.R(n + al, i, j, k), 2);
  r.codazzi = std::sqrt(cs);

  // normal curvature from derivatives of the normal projector
  const int D = amb.embed_dim();
  Mat P = normal_projector(amb, s.x, s.normal);
  std::vector<Mat> dP(n);
  for (int a = 0; a < n; ++a) {
    Mat v = field_derivative(imm, node, a, [&](const Jet& Js) -> Eigen::MatrixXd { return projector_at(amb, Js, n); });
    if (!amb.is_space_form()) {
      Mat Gam(D, D);
      for (int b = 0; b < D; ++b) Gam.col(b) = amb.christoffel(s.x, J.F(a), Vec::Unit(D, b));
      v += Gam * P - P * Gam;
    }
    dP[a] = v;
  }
  std::vector<Mat> dPe(n, Mat::Zero(D, D));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) dPe[i] += s.E(i, a) * dP[a];
  double rs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Mat F = P * (dPe[i] * dPe[j] - dPe[j] * dPe[i]) * P;
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) {
          double lhs = fc.R(i, j, n + al, n + be) - amb.inner(s.x, F * s.normal[al], s.normal[be]);
          double rhs = fc.R(i, j, n + al, n + be);
          for (int k = 0; k < n; ++k) rhs += s.h[al](i, k) * s.h[be](j, k) - s.h[al](j, k) * s.h[be](i, k);
          rs += std::pow(lhs - rhs, 2);
        }
    }
  r.ricci = std::sqrt(rs);
  return r;
}

StructureResiduals structure_residuals_max(const DiscreteImmersion& imm, double pole_margin, Exec exec,
                                           const ExtrinsicOptions& opt) {
  const ParamGrid& grid = imm.grid();
  const long N = grid.node_count();
  const bool polar = grid.topology != Topology::torus;
  std::vector<StructureResiduals> per(N);
  std::vector<char> keep(N, 1);
#pragma omp parallel for schedule(dynamic, 8) if (exec == Exec::parallel)
  for (long i = 0; i < N; ++i) {
    if (polar) {
      const double s = grid.params(i)[0];
      if (s < pole_margin || s > M_PI - pole_margin) {
        keep[i] = 0;
        continue;
      }
    }
    per[i] = structure_residuals(imm, i, opt);
  }
  StructureResiduals r;
  for (long i = 0; i < N; ++i) {
    if (!keep[i]) continue;
    r.gauss = std::max(r.gauss, per[i].gauss);
    r.codazzi = std::max(r.codazzi, per[i].codazzi);
    r.ricci = std::max(r.ricci, per[i].ricci);
  }
  return r;
}

std::array<double, kMaxN> field_gradient(const DiscreteImmersion& imm, const std::vector<double>& f, long node) {
  std::array<double, kMaxN> g{};
  const auto& grid = imm.grid();
  for (int a = 0; a < grid.grid_axes(); ++a)
    g[a] = (f[imm.neighbor(node, a, 1)] - f[imm.neighbor(node, a, -1)]) / (2 * grid.spacings[a]);
  return g;
}

std::vector<double> laplacian_scalar(const DiscreteImmersion& imm, const std::vector<double>& f,
                                     const std::vector<ExtrinsicState>& states, Exec exec) {
  const long N = imm.node_count();
  if (static_cast<long>(f.size()) != N) throw InputError("field size does not match the grid");
  const auto& grid = imm.grid();
  const int axes = grid.grid_axes();
  const int n = imm.n();
  std::vector<double> out(N);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (long k = 0; k < N; ++k) {
    const ExtrinsicState& s = states[k];
    double f1[kMaxN] = {0};
    double f2[kMaxN][kMaxN] = {{0}};
    for (int a = 0; a < axes; ++a) {
      const double h = grid.spacings[a];
      const double fp = f[imm.neighbor(k, a, 1)], fm = f[imm.neighbor(k, a, -1)];
      f1[a] = (fp - fm) / (2 * h);
      f2[a][a] = (fp - 2 * f[k] + fm) / (h * h);
      for (int b = a + 1; b < axes; ++b) {
        auto corner = [&](int sa, int sb) { return f[imm.neighbor(imm.neighbor(k, a, sa), b, sb)]; };
        f2[a][b] = f2[b][a] =
            (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4 * h * grid.spacings[b]);
      }
    }
    double lap = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double t = f2[a][b];
        for (int c = 0; c < axes; ++c) t -= s.Gamma(c, a, b) * f1[c];
        lap += s.metric.ginv(a, b) * t;
      }
    out[k] = lap;
  }
  return out;
}

std::vector<double> laplacian_scalar(const DiscreteImmersion& imm, const std::vector<double>& f, Exec exec) {
  return laplacian_scalar(imm, f, extrinsic_states(imm, {}, exec), exec);
}

}  // namespace mcf
