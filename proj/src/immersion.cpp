#include "mcf/immersion.hpp"
#include "mcf/jet_taylor.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <queue>
#include <sstream>

namespace mcf {

std::string to_string(Topology t) {
  switch (t) {
    case Topology::torus: return "torus";
    case Topology::latlong: return "latlong";
    case Topology::axisym: return "axisym-profile";
  }
  return "?";
}

Topology topology_from_string(const std::string& s) {
  if (s == "torus") return Topology::torus;
  if (s == "latlong") return Topology::latlong;
  if (s == "axisym-profile" || s == "axisym") return Topology::axisym;
  throw ConfigError("unknown grid topology '" + s + "'");
}

std::string to_string(DerivativeSource s) {
  return s == DerivativeSource::analytic ? "analytic" : "finite-difference";
}

DerivativeSource derivative_source_from_string(const std::string& s) {
  if (s == "analytic") return DerivativeSource::analytic;
  if (s == "finite-difference" || s == "fd") return DerivativeSource::finite_difference;
  throw ConfigError("unknown derivative source '" + s + "'");
}

ParamGrid ParamGrid::make(Topology topology, int n, std::vector<int> sizes) {
  ParamGrid g;
  g.n = n;
  g.topology = topology;
  g.sizes = std::move(sizes);
  const int axes = topology == Topology::axisym ? 1 : n;
  if (static_cast<int>(g.sizes.size()) == 1 && axes > 1) g.sizes.assign(axes, g.sizes[0]);
  if (static_cast<int>(g.sizes.size()) != axes)
    throw InputError("grid needs " + std::to_string(axes) + " sizes");
  for (int a = 0; a < axes; ++a) {
    if (g.sizes[a] < 8) throw InputError("every grid axis needs at least 8 nodes");
    double h = 0.0, o = 0.0;
    switch (topology) {
      case Topology::torus: h = 2 * M_PI / g.sizes[a]; break;
      case Topology::axisym:
        h = M_PI / g.sizes[a];
        o = 0.5 * h;
        break;
      case Topology::latlong:
        if (a == 0) {
          h = M_PI / g.sizes[a];
          o = 0.5 * h;
        } else {
          h = 2 * M_PI / g.sizes[a];
        }
        break;
    }
    g.spacings.push_back(h);
    g.origins.push_back(o);
  }
  g.validate();
  return g;
}

void ParamGrid::validate() const {
  if (n < 2 || n > kMaxN) throw InputError("intrinsic dimension must be in [2, 4]");
  if (topology == Topology::latlong) {
    if (n != 2) throw SpecError("latlong grids are two dimensional");
    if (sizes.size() != 2 || sizes[1] % 2 != 0) throw InputError("latlong longitude count must be even");
  }
  for (size_t a = 0; a < sizes.size(); ++a) {
    if (sizes[a] < 8) throw InputError("every grid axis needs at least 8 nodes");
    if (!(spacings[a] > 0)) throw InputError("grid spacings must be positive");
  }
}

long ParamGrid::node_count() const {
  long c = 1;
  for (int s : sizes) c *= s;
  return c;
}

std::array<int, kMaxN> ParamGrid::index(long node) const {
  std::array<int, kMaxN> idx{};
  for (int a = grid_axes() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(node % sizes[a]);
    node /= sizes[a];
  }
  return idx;
}

long ParamGrid::node(const std::array<int, kMaxN>& idx) const {
  long k = 0;
  for (int a = 0; a < grid_axes(); ++a) k = k * sizes[a] + idx[a];
  return k;
}

std::array<double, kMaxN> ParamGrid::params(long nd) const {
  std::array<double, kMaxN> u{};
  auto idx = index(nd);
  for (int a = 0; a < grid_axes(); ++a) u[a] = coord(a, idx[a]);
  return u;
}

double ParamGrid::cell() const {
  double c = 1.0;
  for (double h : spacings) c *= h;
  return c;
}

namespace {

template <int NV>
Jet axisym_jet_impl(const std::array<Vec, 4>& prof, const std::array<double, kMaxN>& theta, int n) {
  using T = Taylor<NV>;
  T ds = T::variable(0, 0.0);
  T ds2 = ds * ds;
  T ds3 = ds2 * ds;
  const int q = static_cast<int>(prof[0].size()) - 1;
  auto series = [&](int c) {
    return prof[0][c] + prof[1][c] * ds + (0.5 * prof[2][c]) * ds2 + (prof[3][c] / 6.0) * ds3;
  };
  T norm2(1.0);
  std::array<T, kMaxN> th;
  for (int i = 1; i < n; ++i) {
    th[i] = T::variable(i, theta[i]);
    norm2 += th[i] * th[i];
  }
  T inv = reciprocal(sqrt(norm2));
  T R = series(0);
  std::vector<T> X;
  X.reserve(n + q);
  X.push_back(R * inv);
  for (int i = 1; i < n; ++i) X.push_back(R * th[i] * inv);
  for (int j = 0; j < q; ++j) X.push_back(series(1 + j));
  return jet_from_taylor<NV>(X, n);
}

}  // namespace

DiscreteImmersion::DiscreteImmersion(AmbientModel ambient, ParamGrid grid, std::vector<Vec> positions,
                                     DerivativeSource source,
                                     std::shared_ptr<const AnalyticShape> shape, int codim)
    : ambient_(std::move(ambient)),
      grid_(std::move(grid)),
      positions_(std::move(positions)),
      source_(source),
      shape_(std::move(shape)),
      codim_(codim) {
  grid_.validate();
  if (static_cast<long>(positions_.size()) != grid_.node_count())
    throw InputError("position count does not match the grid");
  if (codim_ < 1 || grid_.n + codim_ != ambient_.dim())
    throw SpecError("intrinsic dimension plus codimension must equal the ambient dimension");
  if (source_ == DerivativeSource::analytic && !shape_)
    throw SpecError("analytic derivatives need a closed-form shape");
  if (grid_.topology == Topology::axisym && ambient_.kind() == AmbientKind::perturbed)
    throw SpecError("axisymmetric grids need a rotationally symmetric ambient");
  if (grid_.topology == Topology::latlong && ambient_.has_constraint())
    throw SpecError("latlong grids are supported in flat charts only");
  for (const Vec& p : positions_) ambient_.check_point(p, 1e-10);
}

DiscreteImmersion DiscreteImmersion::with_positions(std::vector<Vec> positions) const {
  return DiscreteImmersion(ambient_, grid_, std::move(positions), DerivativeSource::finite_difference,
                           shape_, codim_);
}

DiscreteImmersion DiscreteImmersion::with_source(DerivativeSource source) const {
  return DiscreteImmersion(ambient_, grid_, positions_, source, shape_, codim_);
}

void DiscreteImmersion::check() const {
  for (long k = 0; k < node_count(); ++k) induced_metric(*this, k);
}

Vec DiscreteImmersion::position_at(std::array<int, kMaxN> idx) const {
  bool flip = false;
  switch (grid_.topology) {
    case Topology::torus:
      for (int a = 0; a < grid_.grid_axes(); ++a) {
        const int N = grid_.sizes[a];
        idx[a] = ((idx[a] % N) + N) % N;
      }
      break;
    case Topology::latlong: {
      const int N = grid_.sizes[0], M = grid_.sizes[1];
      if (idx[0] < 0) {
        idx[0] = -1 - idx[0];
        idx[1] += M / 2;
      } else if (idx[0] >= N) {
        idx[0] = 2 * N - 1 - idx[0];
        idx[1] += M / 2;
      }
      if (idx[0] < 0 || idx[0] >= N) throw InputError("stencil reaches across both poles");
      idx[1] = ((idx[1] % M) + M) % M;
      break;
    }
    case Topology::axisym: {
      const int N = grid_.sizes[0];
      if (idx[0] < 0) {
        idx[0] = -1 - idx[0];
        flip = true;
      } else if (idx[0] >= N) {
        idx[0] = 2 * N - 1 - idx[0];
        flip = true;
      }
      if (idx[0] < 0 || idx[0] >= N) throw InputError("stencil reaches across both poles");
      break;
    }
  }
  Vec p = positions_[grid_.node(idx)];
  if (flip) p[0] = -p[0];
  return p;
}

long DiscreteImmersion::neighbor(long node, int axis, int k) const {
  auto idx = grid_.index(node);
  idx[axis] += k;
  switch (grid_.topology) {
    case Topology::torus: {
      const int N = grid_.sizes[axis];
      idx[axis] = ((idx[axis] % N) + N) % N;
      break;
    }
    case Topology::latlong: {
      const int N = grid_.sizes[0], M = grid_.sizes[1];
      if (idx[0] < 0) {
        idx[0] = -1 - idx[0];
        idx[1] += M / 2;
      } else if (idx[0] >= N) {
        idx[0] = 2 * N - 1 - idx[0];
        idx[1] += M / 2;
      }
      idx[1] = ((idx[1] % M) + M) % M;
      break;
    }
    case Topology::axisym: {
      const int N = grid_.sizes[0];
      if (idx[0] < 0) idx[0] = -1 - idx[0];
      else if (idx[0] >= N) idx[0] = 2 * N - 1 - idx[0];
      break;
    }
  }
  return grid_.node(idx);
}

double DiscreteImmersion::field_step(int axis) const {
  if (grid_.topology == Topology::axisym && axis > 0) return delta_;
  if (source_ == DerivativeSource::analytic) return delta_;
  return grid_.spacings[axis];
}

bool DiscreteImmersion::field_on_grid(int axis) const {
  if (grid_.topology == Topology::axisym && axis > 0) return false;
  return source_ == DerivativeSource::finite_difference;
}

double DiscreteImmersion::weight() const {
  double w = grid_.cell();
  if (grid_.topology == Topology::axisym) {
    const double n = grid_.n;
    w *= 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);
  }
  return w;
}

Jet DiscreteImmersion::fd_jet(const std::array<int, kMaxN>& idx) const {
  const int n = grid_.n;
  const int D = ambient_.embed_dim();
  const auto& h = grid_.spacings;
  auto P = [&](std::initializer_list<std::pair<int, int>> steps) {
    auto j = idx;
    for (auto [a, k] : steps) j[a] += k;
    return position_at(j);
  };
  Jet J;
  J.n = n;
  J.x = position_at(idx);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) J.F(i, j, k) = Vec::Zero(D);
  for (int a = 0; a < n; ++a) {
    Vec pp = P({{a, 1}}), pm = P({{a, -1}});
    Vec pp2 = P({{a, 2}}), pm2 = P({{a, -2}});
    J.F(a) = (pp - pm) / (2 * h[a]);
    J.F(a, a) = (pp - 2 * J.x + pm) / (h[a] * h[a]);
    J.F(a, a, a) = (pp2 - 2 * pp + 2 * pm - pm2) / (2 * h[a] * h[a] * h[a]);
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      if (a < b) {
        Vec v = (P({{a, 1}, {b, 1}}) - P({{a, 1}, {b, -1}}) - P({{a, -1}, {b, 1}}) + P({{a, -1}, {b, -1}})) /
                (4 * h[a] * h[b]);
        J.F(a, b) = v;
        J.F(b, a) = v;
      }
      // F_aab: difference of the a-second difference along b
      auto Daa = [&](int kb) -> Vec {
        return (P({{a, 1}, {b, kb}}) - 2 * P({{b, kb}}) + P({{a, -1}, {b, kb}})) / (h[a] * h[a]);
      };
      Vec v = (Daa(1) - Daa(-1)) / (2 * h[b]);
      J.F(a, a, b) = v;
      J.F(a, b, a) = v;
      J.F(b, a, a) = v;
    }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        Vec v = Vec::Zero(D);
        for (int sa : {1, -1})
          for (int sb : {1, -1})
            for (int sc : {1, -1}) v += double(sa * sb * sc) * P({{a, sa}, {b, sb}, {c, sc}});
        v /= 8 * h[a] * h[b] * h[c];
        for (auto [i, j, k] : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                               std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}})
          J.F(i, j, k) = v;
      }
  return J;
}

std::array<Vec, 4> DiscreteImmersion::fd_profile(int i) const {
  const int n = grid_.n;
  const int D = ambient_.embed_dim();
  const int q = D - n;
  const double h = grid_.spacings[0];
  auto prof = [&](int k) {
    std::array<int, kMaxN> idx{};
    idx[0] = i + k;
    Vec X = position_at(idx);
    Vec p(1 + q);
    p[0] = X[0];
    p.tail(q) = X.tail(q);
    return p;
  };
  Vec p0 = prof(0), pp = prof(1), pm = prof(-1), pp2 = prof(2), pm2 = prof(-2);
  return {p0, (pp - pm) / (2 * h), (pp - 2 * p0 + pm) / (h * h),
          (pp2 - 2 * pp + 2 * pm - pm2) / (2 * h * h * h)};
}

Jet DiscreteImmersion::axisym_jet(const std::array<Vec, 4>& prof,
                                  const std::array<double, kMaxN>& theta) const {
  switch (grid_.n) {
    case 2: return axisym_jet_impl<2>(prof, theta, 2);
    case 3: return axisym_jet_impl<3>(prof, theta, 3);
    case 4: return axisym_jet_impl<4>(prof, theta, 4);
  }
  throw InputError("unsupported intrinsic dimension");
}

namespace {

// Difference quotients leave the constraint surface at second order; first
// derivatives are projected back onto T_x N.
Jet tangential(const AmbientModel& amb, Jet J) {
  if (!amb.has_constraint()) return J;
  for (int a = 0; a < J.n; ++a) J.F(a) = amb.to_tangent(J.x, J.F(a));
  return J;
}

}  // namespace

Jet DiscreteImmersion::shifted_jet(long node, int axis, int k) const {
  auto idx = grid_.index(node);
  if (grid_.topology == Topology::axisym) {
    std::array<double, kMaxN> theta{};
    if (axis > 0) theta[axis] = k * delta_;
    if (source_ == DerivativeSource::analytic) {
      double s = grid_.coord(0, idx[0]) + (axis == 0 ? k * delta_ : 0.0);
      return axisym_jet(shape_->profile(s), theta);
    }
    return tangential(ambient_, axisym_jet(fd_profile(idx[0] + (axis == 0 ? k : 0)), theta));
  }
  if (source_ == DerivativeSource::analytic) {
    auto u = grid_.params(node);
    u[axis] += k * delta_;
    return shape_->jet(u);
  }
  idx[axis] += k;
  return tangential(ambient_, fd_jet(idx));
}

Jet DiscreteImmersion::jet(long node) const {
  if (grid_.topology == Topology::axisym) {
    auto idx = grid_.index(node);
    std::array<double, kMaxN> theta{};
    if (source_ == DerivativeSource::analytic)
      return axisym_jet(shape_->profile(grid_.coord(0, idx[0])), theta);
    return tangential(ambient_, axisym_jet(fd_profile(idx[0]), theta));
  }
  if (source_ == DerivativeSource::analytic) return shape_->jet(grid_.params(node));
  return tangential(ambient_, fd_jet(grid_.index(node)));
}

Jet DiscreteImmersion::jet2(long node) const {
  if (grid_.topology != Topology::axisym) return jet(node);
  const int n = grid_.n;
  const int i0 = grid_.index(node)[0];
  const auto prof = source_ == DerivativeSource::analytic ? shape_->profile(grid_.coord(0, i0)) : fd_profile(i0);
  const int q = static_cast<int>(prof[0].size()) - 1;
  const int D = n + q;
  auto lift = [&](const Vec& p) -> Vec {
    Vec v = Vec::Zero(D);
    v[0] = p[0];
    v.tail(q) = p.tail(q);
    return v;
  };
  Jet J;
  J.n = n;
  J.x = lift(prof[0]);
  J.F(0) = lift(prof[1]);
  J.F(0, 0) = lift(prof[2]);
  for (int i = 1; i < n; ++i) {
    J.F(i) = Vec::Zero(D);
    J.F(i)[i] = prof[0][0];
    J.F(0, i) = Vec::Zero(D);
    J.F(0, i)[i] = prof[1][0];
    J.F(i, 0) = J.F(0, i);
    for (int j = 1; j < n; ++j) {
      J.F(i, j) = Vec::Zero(D);
      if (i == j) J.F(i, j)[0] = -prof[0][0];
    }
  }
  return source_ == DerivativeSource::analytic ? J : tangential(ambient_, J);
}

double DiscreteImmersion::min_spacing() const {
  double hmin = std::numeric_limits<double>::infinity();
  for (long k = 0; k < node_count(); ++k) {
    Jet J = jet(k);
    for (int a = 0; a < grid_.grid_axes(); ++a) {
      double len = std::sqrt(ambient_.inner(J.x, J.F(a), J.F(a))) * grid_.spacings[a];
      hmin = std::min(hmin, len);
    }
  }
  return hmin;
}

InducedMetric induced_metric(const DiscreteImmersion& imm, const Jet& J) {
  const int n = imm.n();
  InducedMetric m;
  m.g.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.g(i, j) = m.g(j, i) = imm.ambient().inner(J.x, J.F(i), J.F(j));
  double det = m.g.determinant();
  if (!(det > 0) || !std::isfinite(det)) throw DegeneracyError("induced metric is degenerate", -1);
  m.ginv = m.g.inverse();
  m.sqrt_det = std::sqrt(det);
  return m;
}

InducedMetric induced_metric(const DiscreteImmersion& imm, long node) {
  try {
    return induced_metric(imm, imm.jet(node));
  } catch (const DegeneracyError&) {
    throw DegeneracyError("induced metric is degenerate", node);
  }
}

std::vector<Vec> normal_frame(const AmbientModel& amb, const Vec& x, const std::vector<Vec>& tangent) {
  const int D = amb.embed_dim();
  const int want = amb.dim() - static_cast<int>(tangent.size());
  std::vector<Vec> basis;
  if (amb.has_constraint()) {
    Vec nx = x / std::sqrt(std::abs(amb.inner(x, x, x)));
    basis.push_back(nx);
  }
  for (const Vec& t : tangent) {
    Vec v = t;
    for (const Vec& b : basis) v -= amb.inner(x, v, b) / amb.inner(x, b, b) * b;
    double nn = amb.inner(x, v, v);
    if (!(nn > 0)) throw DegeneracyError("tangent vectors are dependent", -1);
    basis.push_back(v / std::sqrt(nn));
  }
  std::vector<Vec> normals;
  // candidates with a residual below this fraction are skipped
  constexpr double kSkip = 1e-6;
  for (int a = 0; a < D && static_cast<int>(normals.size()) < want; ++a) {
    Vec v = Vec::Unit(D, a);
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& b : basis) v -= amb.inner(x, v, b) / amb.inner(x, b, b) * b;
    }
    double nn = amb.inner(x, v, v);
    if (!(nn > kSkip)) continue;
    v /= std::sqrt(nn);
    basis.push_back(v);
    normals.push_back(v);
  }
  if (static_cast<int>(normals.size()) != want) throw DegeneracyError("normal frame is incomplete", -1);
  return normals;
}

AdaptedFrame adapted_frame(const DiscreteImmersion& imm, const Jet& J) {
  induced_metric(imm, J);
  AdaptedFrame f;
  for (int i = 0; i < imm.n(); ++i) f.tangent.push_back(J.F(i));
  f.normal = normal_frame(imm.ambient(), J.x, f.tangent);
  return f;
}

AdaptedFrame adapted_frame(const DiscreteImmersion& imm, long node) {
  try {
    return adapted_frame(imm, imm.jet(node));
  } catch (const DegeneracyError&) {
    throw DegeneracyError("immersion is degenerate", node);
  }
}

double total_volume(const DiscreteImmersion& imm) {
  double v = 0.0;
  for (long k = 0; k < imm.node_count(); ++k) v += induced_metric(imm, k).sqrt_det;
  return v * imm.weight();
}

double diameter_estimate(const DiscreteImmersion& imm) {
  const auto& amb = imm.ambient();
  const long N = imm.node_count();
  if (imm.grid().topology == Topology::axisym) {
    double meridian = 0.0, rmax = 0.0;
    for (long k = 0; k < N; ++k) {
      Jet J = imm.jet(k);
      meridian += std::sqrt(amb.inner(J.x, J.F(0), J.F(0))) * imm.grid().spacings[0];
      rmax = std::max(rmax, std::sqrt(amb.inner(J.x, J.F(1), J.F(1))));
    }
    return std::max(meridian, M_PI * rmax);
  }
  auto edge = [&](long a, long b) {
    Vec mid = 0.5 * (imm.position(a) + imm.position(b));
    Vec d = imm.position(b) - imm.position(a);
    return std::sqrt(amb.inner(mid, d, d));
  };
  auto sweep = [&](long src, long* far) {
    std::vector<double> dist(N, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, long>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    dist[src] = 0;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (int a = 0; a < imm.grid().grid_axes(); ++a)
        for (int s : {-1, 1}) {
          long v = imm.neighbor(u, a, s);
          double nd = d + edge(u, v);
          if (nd < dist[v]) {
            dist[v] = nd;
            pq.push({nd, v});
          }
        }
    }
    long arg = 0;
    for (long k = 0; k < N; ++k)
      if (dist[k] > dist[arg]) arg = k;
    *far = arg;
    return dist[arg];
  };
  long far = 0, far2 = 0;
  sweep(0, &far);
  return sweep(far, &far2);
}

std::string immersion_csv(const DiscreteImmersion& imm) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto& g = imm.grid();
  for (int a = 0; a < g.grid_axes(); ++a) os << "u" << a << ",";
  for (int c = 0; c < imm.ambient().embed_dim(); ++c) os << "x" << c << (c + 1 < imm.ambient().embed_dim() ? "," : "\n");
  for (long k = 0; k < imm.node_count(); ++k) {
    auto u = g.params(k);
    for (int a = 0; a < g.grid_axes(); ++a) os << u[a] << ",";
    const Vec& x = imm.position(k);
    for (int c = 0; c < x.size(); ++c) os << x[c] << (c + 1 < x.size() ? "," : "\n");
  }
  return os.str();
}

}  // namespace mcf
