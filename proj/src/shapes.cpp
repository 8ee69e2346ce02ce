#include "mcf/shapes.hpp"
#include "mcf/jet_taylor.hpp"

#include <cmath>
#include <functional>

namespace mcf {

namespace {

using std::cos;
using std::cosh;
using std::sin;
using std::sinh;
using std::sqrt;

// Geodesic polar profile of a rotationally symmetric hypersurface in a space
// form of curvature K around the pole p = last embedding axis.
struct PolarProfile final : AnalyticShape {
  std::function<Taylor<1>(const Taylor<1>&)> radius;  // rho(s)
  double K = 0.0;
  int d = 1;
  double tilt = 0.0;

  Jet jet(const std::array<double, kMaxN>&) const override {
    throw SpecError("axisymmetric shapes are evaluated through their profile");
  }

  std::array<Vec, 4> profile(double s0) const override {
    using T = Taylor<1>;
    T s = T::variable(0, s0);
    T rho = radius(s);
    T S, C;
    if (K > 0) {
      const double k = std::sqrt(K);
      S = sin(k * rho) / k;
      C = cos(k * rho) / k;
    } else if (K < 0) {
      const double k = std::sqrt(-K);
      S = sinh(k * rho) / k;
      C = cosh(k * rho) / k;
    } else {
      S = rho;
    }
    const int q = K == 0.0 ? d : d + 1;
    std::vector<T> P(1 + q, T(0.0));
    P[0] = S * sin(s);
    T w = S * cos(s);
    if (d == 1) {
      P[1] = w;
    } else {
      P[1] = w * std::cos(tilt);
      P[2] = w * std::sin(tilt);
    }
    if (K != 0.0) P[q] = C;
    std::array<Vec, 4> out;
    for (int p = 0; p < 4; ++p) {
      out[p].resize(1 + q);
      for (int c = 0; c <= q; ++c) out[p][c] = P[c].derivative({p});
    }
    return out;
  }
};

// Shape given by a map from n parameters to embedding coordinates.
template <int NV>
struct ParamShape final : AnalyticShape {
  std::function<std::vector<Taylor<NV>>(const std::array<Taylor<NV>, NV>&)> map;

  Jet jet(const std::array<double, kMaxN>& u) const override {
    std::array<Taylor<NV>, NV> v;
    for (int i = 0; i < NV; ++i) v[i] = Taylor<NV>::variable(i, u[i]);
    return jet_from_taylor<NV>(map(v), NV);
  }
  std::array<Vec, 4> profile(double) const override {
    throw SpecError("shape has no axisymmetric profile");
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw SpecError(what);
}

double param(const ShapeSpec& s, size_t i, double fallback) {
  return i < s.params.size() ? s.params[i] : fallback;
}

std::shared_ptr<const AnalyticShape> make_axisym(const ShapeSpec& spec, const AmbientModel& amb) {
  auto shape = std::make_shared<PolarProfile>();
  shape->K = amb.space_form_curvature();
  shape->d = spec.codim;
  if (spec.kind == "round-sphere") {
    const double r = param(spec, 0, 1.0);
    if (!(r > 0)) throw InputError("sphere radius must be positive");
    if (shape->K > 0 && !(std::sqrt(shape->K) * r < M_PI))
      throw InputError("geodesic radius must stay below the antipodal distance");
    shape->tilt = param(spec, 1, 0.0);
    shape->radius = [r](const Taylor<1>&) { return Taylor<1>(r); };
  } else {
    require(static_cast<int>(spec.params.size()) == spec.n + 1,
            "ellipsoid needs n + 1 semi-axes");
    const double a = spec.params[0], b = spec.params[1];
    for (double p : spec.params)
      if (!(p > 0)) throw InputError("ellipsoid semi-axes must be positive");
    for (size_t i = 2; i < spec.params.size(); ++i)
      require(spec.params[i] == b, "axisymmetric ellipsoids need equal equatorial semi-axes");
    if (shape->K > 0 && !(std::sqrt(shape->K) * std::max(a, b) < M_PI))
      throw InputError("ellipsoid does not fit in the sphere chart");
    shape->radius = [a, b](const Taylor<1>& s) {
      Taylor<1> sb = sin(s) / b, ca = cos(s) / a;
      return reciprocal(sqrt(sb * sb + ca * ca));
    };
  }
  return shape;
}

std::shared_ptr<const AnalyticShape> make_latlong(const ShapeSpec& spec, int D) {
  double p0, p1, p2;
  if (spec.kind == "round-sphere") {
    p0 = p1 = p2 = param(spec, 0, 1.0);
  } else {
    require(spec.params.size() == 3, "latlong ellipsoid needs three semi-axes");
    p0 = spec.params[0];
    p1 = spec.params[1];
    p2 = spec.params[2];
  }
  if (!(p0 > 0 && p1 > 0 && p2 > 0)) throw InputError("semi-axes must be positive");
  auto shape = std::make_shared<ParamShape<2>>();
  shape->map = [=](const std::array<Taylor<2>, 2>& u) {
    std::vector<Taylor<2>> X(D, Taylor<2>(0.0));
    Taylor<2> st = sin(u[0]);
    X[0] = p1 * st * cos(u[1]);
    X[1] = p2 * st * sin(u[1]);
    X[2] = p0 * cos(u[0]);
    return X;
  };
  return shape;
}

template <int NV>
std::shared_ptr<const AnalyticShape> make_product_torus(const std::vector<double>& radii) {
  auto shape = std::make_shared<ParamShape<NV>>();
  shape->map = [radii](const std::array<Taylor<NV>, NV>& u) {
    std::vector<Taylor<NV>> X;
    for (int i = 0; i < NV; ++i) {
      X.push_back(radii[i] * cos(u[i]));
      X.push_back(radii[i] * sin(u[i]));
    }
    return X;
  };
  return shape;
}

}  // namespace

Topology default_topology(const std::string& kind) {
  if (kind == "round-sphere" || kind == "ellipsoid") return Topology::axisym;
  return Topology::torus;
}

DiscreteImmersion build_immersion(const ShapeSpec& spec, const AmbientModel& amb, Topology topology,
                                  const std::vector<int>& sizes, DerivativeSource source) {
  const int n = spec.n, d = spec.codim;
  require(n >= 2 && n <= kMaxN, "intrinsic dimension must be in [2, 4]");
  require(d >= 1, "codimension must be positive");
  require(n + d == amb.dim(), "shape dimensions do not match the ambient");
  ParamGrid grid = ParamGrid::make(topology, n, sizes);
  const int D = amb.embed_dim();
  std::shared_ptr<const AnalyticShape> shape;
  const std::string& k = spec.kind;

  if (k == "round-sphere" || k == "ellipsoid") {
    if (topology == Topology::axisym) {
      require(amb.is_space_form(), "axisymmetric shapes need a space-form ambient");
      require(d == 1 || d >= 2, "codimension must be positive");
      shape = make_axisym(spec, amb);
    } else if (topology == Topology::latlong) {
      require(!amb.has_constraint(), "latlong shapes live in flat charts");
      require(n == 2, "latlong shapes are surfaces");
      shape = make_latlong(spec, D);
    } else {
      throw SpecError(k + " needs an axisym-profile or latlong grid");
    }
  } else if (k == "product-torus") {
    require(topology == Topology::torus, "tori need a torus grid");
    require(!amb.has_constraint(), "product-torus lives in a flat chart");
    require(d == n, "product-torus has codimension n");
    std::vector<double> radii = spec.params;
    if (radii.empty()) radii.assign(n, 1.0);
    require(static_cast<int>(radii.size()) == n, "product-torus needs n radii");
    for (double r : radii)
      if (!(r > 0)) throw InputError("torus radii must be positive");
    switch (n) {
      case 2: shape = make_product_torus<2>(radii); break;
      case 3: shape = make_product_torus<3>(radii); break;
      case 4: shape = make_product_torus<4>(radii); break;
    }
  } else if (k == "clifford-torus") {
    require(topology == Topology::torus, "tori need a torus grid");
    require(amb.kind() == AmbientKind::sphere, "clifford-torus requires a sphere ambient");
    require(n == 2 && d == 1, "clifford-torus is a surface in S^3");
    const double R = 1.0 / std::sqrt(amb.c());
    auto s = std::make_shared<ParamShape<2>>();
    s->map = [R](const std::array<Taylor<2>, 2>& u) {
      const double f = R / std::sqrt(2.0);
      return std::vector<Taylor<2>>{f * cos(u[0]), f * sin(u[0]), f * cos(u[1]), f * sin(u[1])};
    };
    shape = s;
  } else if (k == "graph-torus") {
    require(topology == Topology::torus, "tori need a torus grid");
    require(n == 2, "graph-torus is a surface");
    auto s = std::make_shared<ParamShape<2>>();
    if (amb.kind() == AmbientKind::sphere) {
      require(d == 1, "graph-torus in S^3 has codimension 1");
      const double R = 1.0 / std::sqrt(amb.c());
      const double eps = param(spec, 0, 0.1), kw = param(spec, 1, 1.0);
      if (!(std::abs(eps) < M_PI / 4)) throw InputError("graph-torus amplitude too large");
      s->map = [=](const std::array<Taylor<2>, 2>& u) {
        Taylor<2> al = M_PI / 4 + eps * cos(kw * u[1]);
        Taylor<2> ca = cos(al), sa = sin(al);
        return std::vector<Taylor<2>>{R * ca * cos(u[0]), R * ca * sin(u[0]), R * sa * cos(u[1]),
                                      R * sa * sin(u[1])};
      };
    } else {
      require(!amb.has_constraint(), "graph-torus needs a flat chart or S^3");
      require(d == 2, "graph-torus in R^4 has codimension 2");
      const double a = param(spec, 0, 1.0), b = param(spec, 1, 1.0);
      const double eps = param(spec, 2, 0.2), kw = param(spec, 3, 1.0), mu = param(spec, 4, 0.0);
      if (!(a > std::abs(eps) && b > 0)) throw InputError("graph-torus radii must be positive");
      s->map = [=](const std::array<Taylor<2>, 2>& u) {
        Taylor<2> ra = a + eps * cos(kw * u[1] + mu * u[0]);
        return std::vector<Taylor<2>>{ra * cos(u[0]), ra * sin(u[0]), b * cos(u[1]), b * sin(u[1])};
      };
    }
    shape = s;
  } else {
    throw SpecError("unknown shape '" + k + "'");
  }

  std::vector<Vec> pos(grid.node_count());
  for (long node = 0; node < grid.node_count(); ++node) {
    if (topology == Topology::axisym) {
      auto prof = shape->profile(grid.params(node)[0]);
      const int q = static_cast<int>(prof[0].size()) - 1;
      Vec X = Vec::Zero(n + q);
      X[0] = prof[0][0];
      X.tail(q) = prof[0].tail(q);
      pos[node] = X;
    } else {
      pos[node] = shape->jet(grid.params(node)).x;
    }
    if (pos[node].size() != D) throw SpecError("shape does not match the ambient embedding");
  }
  return DiscreteImmersion(amb, std::move(grid), std::move(pos), source, shape, d);
}

}  // namespace mcf
