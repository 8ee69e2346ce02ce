#include "mcf/ambient.hpp"

#include <cmath>
#include <random>

namespace mcf {

std::string to_string(AmbientKind k) {
  switch (k) {
    case AmbientKind::euclidean: return "euclidean";
    case AmbientKind::sphere: return "sphere";
    case AmbientKind::hyperbolic: return "hyperbolic";
    case AmbientKind::perturbed: return "perturbed";
  }
  return "?";
}

AmbientKind ambient_kind_from_string(const std::string& s) {
  if (s == "euclidean") return AmbientKind::euclidean;
  if (s == "sphere") return AmbientKind::sphere;
  if (s == "hyperbolic") return AmbientKind::hyperbolic;
  if (s == "perturbed") return AmbientKind::perturbed;
  throw ConfigError("unknown ambient kind '" + s + "'");
}

void CurvatureBounds::validate() const {
  if (!(K1 >= 0 && K2 >= 0 && L >= 0)) throw InputError("K1, K2, L must be nonnegative");
  if (!(i_N > 0)) throw InputError("injectivity radius must be positive");
}

AmbientModel::AmbientModel(AmbientKind kind, int dim, double c, double amplitude,
                           double wavenumber)
    : kind_(kind), dim_(dim), c_(c), amplitude_(amplitude), wavenumber_(wavenumber) {
  if (dim < 2) throw InputError("ambient dimension must be at least 2");
  if (embed_dim() > kMaxDim) throw InputError("ambient dimension too large");
}

AmbientModel AmbientModel::euclidean(int dim) {
  return AmbientModel(AmbientKind::euclidean, dim, 0.0, 0.0, 0.0);
}
AmbientModel AmbientModel::sphere(int dim, double c) {
  if (!(c > 0)) throw InputError("sphere curvature must be positive");
  return AmbientModel(AmbientKind::sphere, dim, c, 0.0, 0.0);
}
AmbientModel AmbientModel::hyperbolic(int dim, double c) {
  if (!(c > 0)) throw InputError("hyperbolic curvature magnitude must be positive");
  return AmbientModel(AmbientKind::hyperbolic, dim, c, 0.0, 0.0);
}
AmbientModel AmbientModel::perturbed(int dim, double amplitude, double wavenumber) {
  if (!(std::abs(amplitude) < 0.5)) throw InputError("perturbation amplitude must be below 0.5");
  return AmbientModel(AmbientKind::perturbed, dim, 0.0, amplitude, wavenumber);
}

double AmbientModel::space_form_curvature() const {
  switch (kind_) {
    case AmbientKind::euclidean: return 0.0;
    case AmbientKind::sphere: return c_;
    case AmbientKind::hyperbolic: return -c_;
    case AmbientKind::perturbed: break;
  }
  throw SpecError("perturbed ambient is not a space form");
}

double AmbientModel::inner(const Vec& x, const Vec& u, const Vec& v) const {
  switch (kind_) {
    case AmbientKind::euclidean:
    case AmbientKind::sphere: return u.dot(v);
    case AmbientKind::hyperbolic: {
      int last = embed_dim() - 1;
      return u.head(last).dot(v.head(last)) - u[last] * v[last];
    }
    case AmbientKind::perturbed: return std::exp(2.0 * potential(x)) * u.dot(v);
  }
  return 0.0;
}

Vec AmbientModel::christoffel(const Vec& x, const Vec& u, const Vec& v) const {
  if (kind_ != AmbientKind::perturbed) return Vec::Zero(u.size());
  Vec g = potential_gradient(x);
  return u * g.dot(v) + v * g.dot(u) - g * u.dot(v);
}

Vec AmbientModel::christoffel_derivative(const Vec& x, const Vec& w, const Vec& u,
                                         const Vec& v) const {
  if (kind_ != AmbientKind::perturbed) return Vec::Zero(u.size());
  Mat h = potential_hessian(x);
  Vec hw = h * w;
  return u * v.dot(hw) + v * u.dot(hw) - hw * u.dot(v);
}

Vec AmbientModel::to_tangent(const Vec& x, const Vec& v) const {
  if (!has_constraint()) return v;
  return v - (inner(x, v, x) / inner(x, x, x)) * x;
}

Vec AmbientModel::project_to_chart(const Vec& x) const {
  if (kind_ == AmbientKind::sphere) return x / (std::sqrt(c_) * x.norm());
  if (kind_ == AmbientKind::hyperbolic) {
    int last = embed_dim() - 1;
    Vec y = x;
    y[last] = std::sqrt(1.0 / c_ + x.head(last).squaredNorm());
    return y;
  }
  return x;
}

void AmbientModel::check_point(const Vec& x, double tol) const {
  if (x.size() != embed_dim()) throw ChartError("point has wrong embedding dimension");
  if (!x.allFinite()) throw ChartError("point is not finite");
  if (kind_ == AmbientKind::sphere) {
    if (std::abs(x.squaredNorm() * c_ - 1.0) > tol)
      throw ChartError("point is off the sphere chart");
  } else if (kind_ == AmbientKind::hyperbolic) {
    if (std::abs(inner(x, x, x) * c_ + 1.0) > tol || x[embed_dim() - 1] <= 0)
      throw ChartError("point is off the hyperboloid chart");
  }
}

std::vector<Vec> AmbientModel::standard_frame(const Vec& x) const {
  const int D = embed_dim();
  std::vector<Vec> frame;
  for (int a = 0; a < D && static_cast<int>(frame.size()) < dim_; ++a) {
    Vec v = to_tangent(x, Vec::Unit(D, a));
    for (const Vec& f : frame) v -= inner(x, v, f) * f;
    double nn = inner(x, v, v);
    if (nn < 1e-12) continue;
    frame.push_back(v / std::sqrt(nn));
  }
  return frame;
}

void AmbientModel::check_frame(const Vec& x, const std::vector<Vec>& frame) const {
  check_point(x, 1e-8);
  if (static_cast<int>(frame.size()) != dim_) throw FrameError("frame must have dim() vectors");
  for (size_t a = 0; a < frame.size(); ++a) {
    if (frame[a].size() != embed_dim()) throw FrameError("frame vector has wrong size");
    if (has_constraint() && std::abs(inner(x, frame[a], x)) > 1e-10)
      throw FrameError("frame vector not tangent to the ambient");
    for (size_t b = 0; b < frame.size(); ++b) {
      double want = a == b ? 1.0 : 0.0;
      if (std::abs(inner(x, frame[a], frame[b]) - want) > 1e-10)
        throw FrameError("frame is not orthonormal");
    }
  }
}

double AmbientModel::potential(const Vec& x) const {
  if (kind_ != AmbientKind::perturbed) return 0.0;
  double p = amplitude_;
  for (int i = 0; i < dim_; ++i) p *= std::cos(wavenumber_ * x[i]);
  return p;
}

double AmbientModel::potential_derivative(const Vec& x,
                                          const std::array<int, kMaxDim>& counts) const {
  if (kind_ != AmbientKind::perturbed) return 0.0;
  double p = amplitude_;
  for (int i = 0; i < dim_; ++i) {
    int q = counts[i];
    // d^q/dx^q cos(k x) = k^q cos(k x + q pi/2)
    p *= std::pow(wavenumber_, q) * std::cos(wavenumber_ * x[i] + q * M_PI / 2.0);
  }
  return p;
}

Vec AmbientModel::potential_gradient(const Vec& x) const {
  Vec g = Vec::Zero(x.size());
  if (kind_ != AmbientKind::perturbed) return g;
  for (int i = 0; i < dim_; ++i) {
    std::array<int, kMaxDim> e{};
    e[i] = 1;
    g[i] = potential_derivative(x, e);
  }
  return g;
}

Mat AmbientModel::potential_hessian(const Vec& x) const {
  Mat h = Mat::Zero(x.size(), x.size());
  if (kind_ != AmbientKind::perturbed) return h;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) {
      std::array<int, kMaxDim> e{};
      e[i] += 1;
      e[j] += 1;
      h(i, j) = h(j, i) = potential_derivative(x, e);
    }
  return h;
}

namespace {

// Coordinate Christoffel symbols of e^{2 phi} delta and their first and second
// derivatives, indexed gamma[k][i][j] = Gamma^k_ij.
struct ConformalConnection {
  int m;
  std::vector<double> d1;   // phi_i
  std::vector<double> d2;   // phi_ij
  std::vector<double> d3;   // phi_ijk
  double phi;

  double p1(int i) const { return d1[i]; }
  double p2(int i, int j) const { return d2[i * m + j]; }
  double p3(int i, int j, int k) const { return d3[(i * m + j) * m + k]; }
  static double delta(int a, int b) { return a == b ? 1.0 : 0.0; }

  double gamma(int k, int i, int j) const {
    return delta(i, k) * p1(j) + delta(j, k) * p1(i) - delta(i, j) * p1(k);
  }
  // d_l Gamma^k_ij
  double dgamma(int l, int k, int i, int j) const {
    return delta(i, k) * p2(j, l) + delta(j, k) * p2(i, l) - delta(i, j) * p2(k, l);
  }
  // d_e d_l Gamma^k_ij
  double ddgamma(int e, int l, int k, int i, int j) const {
    return delta(i, k) * p3(j, l, e) + delta(j, k) * p3(i, l, e) - delta(i, j) * p3(k, l, e);
  }
};

ConformalConnection conformal_connection(const AmbientModel& amb, const Vec& x) {
  ConformalConnection cc;
  const int m = amb.dim();
  cc.m = m;
  cc.phi = amb.potential(x);
  cc.d1.assign(m, 0.0);
  cc.d2.assign(m * m, 0.0);
  cc.d3.assign(m * m * m, 0.0);
  for (int i = 0; i < m; ++i) {
    std::array<int, kMaxDim> e{};
    e[i] = 1;
    cc.d1[i] = amb.potential_derivative(x, e);
    for (int j = 0; j < m; ++j) {
      std::array<int, kMaxDim> f = e;
      f[j] += 1;
      cc.d2[i * m + j] = amb.potential_derivative(x, f);
      for (int k = 0; k < m; ++k) {
        std::array<int, kMaxDim> g = f;
        g[k] += 1;
        cc.d3[(i * m + j) * m + k] = amb.potential_derivative(x, g);
      }
    }
  }
  return cc;
}

// Standard-convention R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^p_jk G^l_ip - G^p_ik G^l_jp.
double riemann_up(const ConformalConnection& cc, int i, int j, int k, int l) {
  double r = cc.dgamma(i, l, j, k) - cc.dgamma(j, l, i, k);
  for (int p = 0; p < cc.m; ++p)
    r += cc.gamma(p, j, k) * cc.gamma(l, i, p) - cc.gamma(p, i, k) * cc.gamma(l, j, p);
  return r;
}

double d_riemann_up(const ConformalConnection& cc, int e, int i, int j, int k, int l) {
  double r = cc.ddgamma(e, i, l, j, k) - cc.ddgamma(e, j, l, i, k);
  for (int p = 0; p < cc.m; ++p) {
    r += cc.dgamma(e, p, j, k) * cc.gamma(l, i, p) + cc.gamma(p, j, k) * cc.dgamma(e, l, i, p);
    r -= cc.dgamma(e, p, i, k) * cc.gamma(l, j, p) + cc.gamma(p, i, k) * cc.dgamma(e, l, j, p);
  }
  return r;
}

}  // namespace

Tensor4 AmbientModel::coordinate_curvature(const Vec& x) const {
  if (has_constraint()) throw SpecError("coordinate curvature needs a flat chart");
  const int m = dim_;
  Tensor4 R(m);
  if (kind_ == AmbientKind::euclidean) return R;
  ConformalConnection cc = conformal_connection(*this, x);
  const double scale = std::exp(2.0 * cc.phi);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) R(a, b, c, d) = -scale * riemann_up(cc, a, b, c, d);
  return R;
}

Tensor5 AmbientModel::coordinate_nabla_curvature(const Vec& x) const {
  if (has_constraint()) throw SpecError("coordinate curvature needs a flat chart");
  const int m = dim_;
  Tensor5 N(m);
  if (kind_ == AmbientKind::euclidean) return N;
  ConformalConnection cc = conformal_connection(*this, x);
  const double scale = std::exp(2.0 * cc.phi);
  Tensor4 R = coordinate_curvature(x);
  for (int e = 0; e < m; ++e)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          for (int d = 0; d < m; ++d) {
            double v = -scale * (2.0 * cc.p1(e) * riemann_up(cc, a, b, c, d) +
                                 d_riemann_up(cc, e, a, b, c, d));
            for (int f = 0; f < m; ++f) {
              v -= cc.gamma(f, e, a) * R(f, b, c, d) + cc.gamma(f, e, b) * R(a, f, c, d) +
                   cc.gamma(f, e, c) * R(a, b, f, d) + cc.gamma(f, e, d) * R(a, b, c, f);
            }
            N(e, a, b, c, d) = v;
          }
  return N;
}

Tensor4 AmbientModel::contract(const Tensor4& coord, const std::vector<Vec>& frame) {
  const int m = coord.extent();
  // Successive single-index contractions keep the cost at O(m^5).
  Tensor4 t1(m), t2(m), t3(m), t4(m);
  for (int A = 0; A < m; ++A)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          double s = 0;
          for (int a = 0; a < m; ++a) s += frame[A][a] * coord(a, b, c, d);
          t1(A, b, c, d) = s;
        }
  for (int A = 0; A < m; ++A)
    for (int B = 0; B < m; ++B)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) {
          double s = 0;
          for (int b = 0; b < m; ++b) s += frame[B][b] * t1(A, b, c, d);
          t2(A, B, c, d) = s;
        }
  for (int A = 0; A < m; ++A)
    for (int B = 0; B < m; ++B)
      for (int C = 0; C < m; ++C)
        for (int d = 0; d < m; ++d) {
          double s = 0;
          for (int c = 0; c < m; ++c) s += frame[C][c] * t2(A, B, c, d);
          t3(A, B, C, d) = s;
        }
  for (int A = 0; A < m; ++A)
    for (int B = 0; B < m; ++B)
      for (int C = 0; C < m; ++C)
        for (int D = 0; D < m; ++D) {
          double s = 0;
          for (int d = 0; d < m; ++d) s += frame[D][d] * t3(A, B, C, d);
          t4(A, B, C, D) = s;
        }
  return t4;
}

Tensor5 AmbientModel::contract(const Tensor5& coord, const std::vector<Vec>& frame) {
  const int m = coord.extent();
  Tensor5 out(m);
  std::vector<Tensor4> slices;
  slices.reserve(m);
  for (int e = 0; e < m; ++e) {
    Tensor4 s(m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c)
          for (int d = 0; d < m; ++d) s(a, b, c, d) = coord(e, a, b, c, d);
    slices.push_back(contract(s, frame));
  }
  for (int E = 0; E < m; ++E)
    for (int A = 0; A < m; ++A)
      for (int B = 0; B < m; ++B)
        for (int C = 0; C < m; ++C)
          for (int D = 0; D < m; ++D) {
            double s = 0;
            for (int e = 0; e < m; ++e) s += frame[E][e] * slices[e](A, B, C, D);
            out(E, A, B, C, D) = s;
          }
  return out;
}

Tensor4 AmbientModel::curvature_tensor(const Vec& x, const std::vector<Vec>& frame) const {
  check_frame(x, frame);
  const int m = dim_;
  if (is_space_form()) {
    const double K = space_form_curvature();
    Tensor4 R(m);
    if (K == 0.0) return R;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        if (a == b) continue;
        R(a, b, a, b) = K;
        R(a, b, b, a) = -K;
      }
    return R;
  }
  return contract(coordinate_curvature(x), frame);
}

Tensor5 AmbientModel::nabla_curvature(const Vec& x, const std::vector<Vec>& frame) const {
  check_frame(x, frame);
  if (is_space_form()) return Tensor5(dim_);
  return contract(coordinate_nabla_curvature(x), frame);
}

double AmbientModel::sectional_curvature(const Vec& x, const Vec& u, const Vec& v) const {
  if (is_space_form()) return space_form_curvature();
  Tensor4 R = coordinate_curvature(x);
  const int m = dim_;
  double num = 0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d) num += R(a, b, c, d) * u[a] * v[b] * u[c] * v[d];
  double den = inner(x, u, u) * inner(x, v, v) - std::pow(inner(x, u, v), 2);
  return num / den;
}

BoundReport verify_geometry_bounds(const AmbientModel& model, const std::vector<Vec>& samples,
                                   const CurvatureBounds& bounds, std::uint64_t seed) {
  if (samples.empty()) throw InputError("verify_geometry_bounds needs at least one sample");
  bounds.validate();
  BoundReport rep;
  rep.sectional_low = INFINITY;
  rep.sectional_high = -INFINITY;
  rep.berger_mixed_bound = 0.5 * (bounds.K1 + bounds.K2);
  rep.berger_distinct_bound = 2.0 / 3.0 * (bounds.K1 + bounds.K2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int m = model.dim();
  const double tol = 1e-10;
  double worst_violation = 0.0;

  auto offend = [&](double violation, long s, const char* what) {
    if (violation > worst_violation) {
      worst_violation = violation;
      rep.worst_sample = s;
      rep.worst_quantity = what;
    }
  };

  for (size_t s = 0; s < samples.size(); ++s) {
    const Vec& x = samples[s];
    std::vector<Vec> frame = model.standard_frame(x);
    Tensor4 R = model.curvature_tensor(x, frame);
    Tensor5 N = model.nabla_curvature(x, frame);
    auto plane_curv = [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      double num = 0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          for (int c = 0; c < m; ++c)
            for (int d = 0; d < m; ++d) num += R(a, b, c, d) * u[a] * v[b] * u[c] * v[d];
      return num / (u.squaredNorm() * v.squaredNorm() - std::pow(u.dot(v), 2));
    };
    auto record = [&](double K) {
      rep.sectional_low = std::min(rep.sectional_low, K);
      rep.sectional_high = std::max(rep.sectional_high, K);
      offend(-bounds.K1 - K, static_cast<long>(s), "sectional_low");
      offend(K - bounds.K2, static_cast<long>(s), "sectional_high");
    };
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) record(R(a, b, a, b));
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd u(m), v(m);
      for (int i = 0; i < m; ++i) {
        u[i] = normal(rng);
        v[i] = normal(rng);
      }
      record(plane_curv(u, v));
    }
    double nn = N.norm();
    rep.nabla_max = std::max(rep.nabla_max, nn);
    offend(nn - bounds.L, static_cast<long>(s), "nabla_curvature");
    for (int A = 0; A < m; ++A)
      for (int B = 0; B < m; ++B) {
        if (A == B) continue;
        for (int C = 0; C < m; ++C) rep.berger_mixed = std::max(rep.berger_mixed, std::abs(R(A, C, B, C)));
        for (int C = 0; C < m; ++C)
          for (int D = 0; D < m; ++D) {
            if (C == A || C == B || D == A || D == B || C == D) continue;
            rep.berger_distinct = std::max(rep.berger_distinct, std::abs(R(A, B, C, D)));
          }
      }
  }
  rep.pass = worst_violation <= tol;
  rep.berger_ok = rep.berger_mixed <= rep.berger_mixed_bound + tol &&
                  rep.berger_distinct <= rep.berger_distinct_bound + tol;
  if (rep.pass) {
    rep.worst_sample = -1;
    rep.worst_quantity.clear();
  }
  return rep;
}

}  // namespace mcf
