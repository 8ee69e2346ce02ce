#include "doctest.h"
#include "mcf/pinching.hpp"
#include "mcf/shapes.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

using namespace mcf;

namespace {

std::vector<SmallMat> random_h(int n, int d, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  std::vector<SmallMat> h(d, SmallMat::Zero(n, n));
  for (auto& m : h)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) m(i, j) = m(j, i) = N(rng);
  return h;
}

// Space form curvature K plus the Gauss tensor of a positive semidefinite form,
// so every sectional curvature is at least K.
Tensor4 curvature_at_least(int m, double K, std::mt19937& rng) {
  std::normal_distribution<double> N;
  Eigen::MatrixXd G(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = N(rng);
  Eigen::MatrixXd B = 0.3 * G * G.transpose();
  Tensor4 R(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        for (int d = 0; d < m; ++d)
          R(a, b, c, d) = K * ((a == c) * (b == d) - (a == d) * (b == c)) + B(a, c) * B(b, d) - B(a, d) * B(b, c);
  return R;
}

ReactionInput synthetic(int n, int d, std::mt19937& rng, const Tensor4& R) {
  ReactionInput in;
  in.n = n;
  in.d = d;
  in.h = random_h(n, d, rng);
  in.R = R;
  in.DR = Tensor5(n + d);
  return in;
}

ExtrinsicState scalar_state(double A2, double H2, double A02) {
  ExtrinsicState s;
  s.n = 2;
  s.A2 = A2;
  s.H2 = H2;
  s.A02 = A02;
  return s;
}

}  // namespace

TEST_CASE("pinching coefficient") {
  CHECK(pinching_coefficient(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(pinching_coefficient(3) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(pinching_coefficient(4) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(pinching_coefficient(7) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK_THROWS_AS(pinching_coefficient(1), InputError);
  CHECK(gradient_constant(2, 1) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(gradient_constant(3, 2) == doctest::Approx(81.0 * 2 / (2 * 2 * 7)).epsilon(1e-15));
}

TEST_CASE("constants in flat ambients vanish") {
  for (int n : {2, 3, 5})
    for (int d : {1, 2, 3}) {
      double a = pinching_coefficient(n);
      auto c = pinching_constants(n, d, {0, 0, 0}, a, {});
      CHECK(c.b1 == 0.0);
      CHECK(c.b0 == 0.0);
      CHECK(c.C4 == 0.0);
      CHECK(c.C1 == 0.0);
      CHECK(c.C2 == 0.0);
      CHECK(c.eps_nabla > 0);
    }
}

TEST_CASE("constants hand evaluation") {
  // n = 2, d = 2, K1 = 0, K2 = 1, L = 0, a = 2/3, free constants 1:
  // a - 1/n = 1/6, 2(naK1 + K2)/(a - 1/n) = 12
  // C1 = 4 + 12 + (2 + 0 + 16/3) + 1, C2 = 4 + 12 + (2 + 16/3 + 0) + 2, C3 = 12, C4 = 0
  // b1 = max(C1 * 3/4 / 6, C2 / 12, (12 + 12) / 12) = 73/24
  auto c = pinching_constants(2, 2, {0, 1, 0}, 2.0 / 3.0, {});
  CHECK(c.C1 == doctest::Approx(73.0 / 3.0).epsilon(1e-14));
  CHECK(c.C2 == doctest::Approx(76.0 / 3.0).epsilon(1e-14));
  CHECK(c.C3 == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(c.C4 == 0.0);
  CHECK(c.b1 == doctest::Approx(73.0 / 24.0).epsilon(1e-14));
  CHECK(c.b0 == doctest::Approx(73.0 / 24.0).epsilon(1e-14));

  // with L = 3, C4 = L^2 + 4L^2 = 45 and the third entry becomes the largest
  auto c2 = pinching_constants(2, 2, {0, 1, 3}, 2.0 / 3.0, {});
  CHECK(c2.C4 == doctest::Approx(45.0));
  CHECK(c2.b1 == doctest::Approx((12 + std::sqrt(144 + 8 * 45 * 3.0)) / 12).epsilon(1e-14));

  CHECK_THROWS_AS(pinching_constants(2, 1, {0, 1, 0}, 0.5, {}), InputError);
  PinchingParams p;
  p.eta = 1.0;
  CHECK_THROWS_AS(pinching_constants(2, 1, {0, 1, 0}, 2.0 / 3.0, p), ConfigError);
}

TEST_CASE("b1 is monotone in the curvature bounds") {
  const double vals[5] = {0.0, 0.25, 0.5, 1.0, 2.0};
  for (int n : {2, 3})
    for (int d : {1, 2, 3}) {
      const double a = pinching_coefficient(n);
      auto b1 = [&](int i, int j, int k) {
        return pinching_constants(n, d, {vals[i], vals[j], vals[k]}, a, {}).b1;
      };
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
          for (int k = 0; k < 5; ++k) {
            if (vals[i] + vals[j] == 0 && vals[k] > 0) continue;
            const double v = b1(i, j, k);
            if (i < 4) CHECK(b1(i + 1, j, k) >= v);
            if (j < 4) CHECK(b1(i, j + 1, k) >= v);
            if (k < 4 && vals[i] + vals[j] > 0) CHECK(b1(i, j, k + 1) >= v);
          }
    }
}

TEST_CASE("reaction terms against naive loops") {
  std::mt19937 rng(3);
  const int n = 2, d = 2;
  for (int trial = 0; trial < 20; ++trial) {
    ReactionInput in = synthetic(n, d, rng, Tensor4(n + d));
    ReactionTerms t = reaction_terms(in, 2.0 / 3.0);
    auto h = [&](int al, int i, int j) { return in.h[al](i, j); };
    double H[d] = {in.h[0].trace(), in.h[1].trace()};
    double R1 = 0, R2 = 0, Z = 0, sq = 0, comm = 0;
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be) {
        double s = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) s += h(al, i, j) * h(be, i, j);
        sq += s * s;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double c = 0;
            for (int p = 0; p < n; ++p) c += h(al, i, p) * h(be, j, p) - h(al, j, p) * h(be, i, p);
            comm += c * c;
          }
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int p = 0; p < n; ++p) Z += H[al] * h(al, i, p) * h(be, p, j) * h(be, i, j);
      }
    R1 = sq + comm;
    Z -= sq + comm;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int al = 0; al < d; ++al) s += H[al] * h(al, i, j);
        R2 += s * s;
      }
    CHECK(std::abs(t.R1 - R1) < 1e-12);
    CHECK(std::abs(t.R2 - R2) < 1e-12);
    CHECK(std::abs(t.Z - Z) < 1e-12);
    CHECK(t.R1 >= 0);
    CHECK(t.R2 >= 0);
    CHECK(t.P == 0.0);
  }
}

TEST_CASE("split of II and III") {
  std::mt19937 rng(5);
  auto P = AmbientModel::perturbed(5, 0.3, 1.3);
  Vec x(5);
  x << 0.3, -0.2, 0.7, 0.1, 0.4;
  for (int trial = 0; trial < 10; ++trial) {
    ReactionInput in;
    in.n = 2;
    in.d = 3;
    in.h = random_h(2, 3, rng);
    for (int al = 1; al < 3; ++al) in.h[al] -= 0.5 * in.h[al].trace() * SmallMat::Identity(2, 2);
    in.h[0] += 2.0 * SmallMat::Identity(2, 2);
    in.h_aligned = true;
    auto frame = P.standard_frame(x);
    in.R = P.curvature_tensor(x, frame);
    in.DR = P.nabla_curvature(x, frame);
    ReactionTerms t = reaction_terms(in, 2.0 / 3.0);
    REQUIRE(t.split_valid);
    CHECK(std::abs(t.II - (t.II1 + t.II2 + t.II3)) < 1e-12);
    CHECK(std::abs(t.III - (t.III1 + t.III2)) < 1e-12);
    CHECK(std::abs(t.P - (t.I + t.II + t.III + t.IV)) < 1e-12);
    CHECK(t.IV != 0.0);
  }
}

TEST_CASE("estimate I on random tensors") {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dim(2, 4), codim(1, 3);
  int passed = 0;
  const int trials = 1000;
  for (int trial = 0; trial < trials; ++trial) {
    const int n = dim(rng), d = codim(rng);
    ReactionInput in = synthetic(n, d, rng, curvature_at_least(n + d, -1.0, rng));
    ReactionTerms t = reaction_terms(in, pinching_coefficient(n));
    // eigenframe oracle: I = sum_alpha -2 sum_{i,p} Rbar_ipip (l_i - l_p)^2
    double I = 0, A02 = 0;
    for (int al = 0; al < d; ++al) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(in.h[al]));
      const auto& V = es.eigenvectors();
      const auto& l = es.eigenvalues();
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < n; ++p) {
          double Ripip = 0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int c = 0; c < n; ++c)
                for (int e = 0; e < n; ++e) Ripip += in.R(a, b, c, e) * V(a, i) * V(b, p) * V(c, i) * V(e, p);
          I -= 2 * Ripip * std::pow(l[i] - l[p], 2);
        }
      A02 += (l.array() - l.mean()).square().sum();
    }
    CHECK(std::abs(I - t.I) < 1e-9 * (1 + std::abs(I)));
    if (t.I <= 4 * n * 1.0 * A02 + 1e-9) ++passed;
  }
  CHECK(passed == trials);
}

TEST_CASE("pinching quantities") {
  auto E3 = AmbientModel::euclidean(3);
  auto sph = build_immersion({"round-sphere", {1.0}}, E3, Topology::axisym, {32}, DerivativeSource::analytic);
  PinchingParams p;
  for (auto& s : extrinsic_states(sph)) {
    auto q = pinching_quantities(s, p);
    CHECK(q.Q == doctest::Approx(-2.0 / 3.0).epsilon(1e-10));
    for (double sig : {0.1, 0.5, 0.9}) {
      p.sigma = sig;
      CHECK(std::abs(*pinching_quantities(s, p).f_sigma) < 1e-12);
    }
  }
  CHECK_FALSE(pinching_quantities(scalar_state(1, 0, 1), p).f_sigma.has_value());

  // spheroid with polar semi-axis 1.1: closed-form principal curvatures
  const double A = 1.1, B = 1.0;
  double brute = -INFINITY;
  for (int i = 0; i < 256; ++i) {
    const double th = M_PI * (i + 0.5) / 256;
    const double w = std::sqrt(A * A * std::sin(th) * std::sin(th) + B * B * std::cos(th) * std::cos(th));
    const double k1 = A * B / (w * w * w), k2 = A / (B * w);
    brute = std::max(brute, k1 * k1 + k2 * k2 - 2.0 / 3.0 * std::pow(k1 + k2, 2));
  }
  auto ell = build_immersion({"ellipsoid", {A, B, B}}, E3, Topology::axisym, {256}, DerivativeSource::analytic);
  double qmax = -INFINITY;
  p = PinchingParams{};
  for (auto& s : extrinsic_states(ell)) qmax = std::max(qmax, pinching_quantities(s, p).Q);
  CHECK(brute < 0);
  CHECK(qmax < 0);
  CHECK(std::abs(qmax - brute) < 1e-5);
}

TEST_CASE("Q scaling and f_sigma homogeneity") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  PinchingParams p;
  p.b = 0;
  for (int k = 0; k < 100; ++k) {
    auto h = random_h(2, 2, rng);
    auto state_of = [&](double lam) {
      double A2 = 0, H2 = 0, A02 = 0;
      for (auto& m : h) {
        SmallMat s = lam * m;
        A2 += s.squaredNorm();
        H2 += s.trace() * s.trace();
        A02 += (s - 0.5 * s.trace() * SmallMat::Identity(2, 2)).squaredNorm();
      }
      return scalar_state(A2, H2, A02);
    };
    const double lam = U(rng);
    const double q1 = pinching_quantities(state_of(1.0), p).Q, ql = pinching_quantities(state_of(lam), p).Q;
    CHECK(std::abs(ql - lam * lam * q1) < 1e-12 * std::max(1.0, std::abs(ql)));

    const double psi = U(rng);
    ExtrinsicState s = state_of(1.0), sd = s;
    sd.A02 /= psi * psi;
    sd.H2 /= psi * psi;
    const double f = *pinching_quantities(s, p).f_sigma, fd = *pinching_quantities(sd, p).f_sigma;
    CHECK(std::abs(fd - std::pow(psi, -2 * p.sigma) * f) < 1e-10 * std::max(1.0, f));
  }
}

TEST_CASE("b blowup ode") {
  auto r = b_blowup_ode(1.0, 0, 0, 2.0 / 3.0, 2, 1e-4);
  REQUIRE(r.blowup);
  CHECK(std::abs(r.t0 - 1.0 / 6.0) < 1e-4);
  for (size_t k = 1; k < r.b.size(); ++k) {
    CHECK(r.b[k] > r.b[k - 1]);
    CHECK(std::abs(r.b[k] - 1 / (1 - 6 * r.t[k])) < 1e-6 * r.b[k]);
  }
  auto r2 = b_blowup_ode(2.0, 0, 0, 2.0 / 3.0, 2, 1e-4);
  CHECK(std::abs(r2.t0 - 1.0 / 12.0) < 1e-4);
  // b'(1) = 6 - C3 < 0
  auto r3 = b_blowup_ode(1.0, 13.0, 0, 2.0 / 3.0, 2, 1e-4);
  CHECK_FALSE(r3.blowup);
  CHECK(std::isinf(r3.t0));
  // with C3, C4 > 0 the solution still blows up, later than the Riccati case
  auto r4 = b_blowup_ode(1.0, 1.0, 0.5, 2.0 / 3.0, 2, 1e-4);
  CHECK(r4.blowup);
  CHECK(r4.t0 > 1.0 / 6.0);
}

TEST_CASE("gradient estimate functional") {
  auto E3 = AmbientModel::euclidean(3);
  PinchingParams p;
  p.eta5 = 0.1;
  const double r = 0.8;
  auto sph = build_immersion({"round-sphere", {r}}, E3, Topology::axisym, {24}, DerivativeSource::analytic);
  for (long k = 0; k < sph.node_count(); ++k) {
    auto s = extrinsic_state(sph, k);
    auto g = covariant_derivatives(sph, k);
    CHECK(gradient_estimate_functional(s, g, p) == doctest::Approx(-0.1 * 16 / std::pow(r, 4)).epsilon(1e-8));
  }
  auto ell = build_immersion({"ellipsoid", {1.2, 1.0, 1.0}}, E3, Topology::axisym, {32},
                             DerivativeSource::finite_difference);
  for (long k = 0; k < ell.node_count(); ++k) {
    auto s = extrinsic_state(ell, k);
    auto g = covariant_derivatives(ell, k);
    double gh = 0;
    for (double v : g.gradH) gh += v * v;
    const double f = gradient_estimate_functional(s, g, p);
    CHECK(std::isfinite(f));
    CHECK(std::abs(f - (gh + (1 + s.A2) * s.A02 - 0.1 * s.H2 * s.H2)) < 1e-12 * std::max(1.0, std::abs(f)));
    p.eta5 = 0;
    CHECK(gradient_estimate_functional(s, g, p) >= 0);
    p.eta5 = 0.1;
  }
}

TEST_CASE("fit C0") {
  CHECK(fit_C0({0.5, 1.0, 0.0}, {4.0, 1.0, 0.0}, 0.0) == doctest::Approx(1.0));
  CHECK(fit_C0({0.5}, {4.0}, 1.0) == doctest::Approx(0.25));
}

TEST_CASE("audits on the round sphere") {
  auto E3 = AmbientModel::euclidean(3);
  auto sph = build_immersion({"round-sphere", {1.0}}, E3, Topology::axisym, {32}, DerivativeSource::analytic);
  AuditContext ctx;
  ctx.constants = pinching_constants(2, 1, ctx.bounds, 2.0 / 3.0, ctx.params);
  for (auto& row : audit_immersion(sph, ctx)) {
    for (auto& e : row) {
      CHECK_MESSAGE(e.pass, e.name);
      if (e.name == "gradA_H") {
        CHECK(std::abs(e.lhs) < 1e-10);
        CHECK(std::abs(e.rhs) < 1e-10);
      }
      if (e.name == "xu_gu") {
        // K = 1, bound 1/2 (0 + 4 - 2) = 1
        CHECK(e.lhs == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(e.rhs == doctest::Approx(1.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("second line estimate on states with Q = 0") {
  std::mt19937 rng(17);
  for (int n : {2, 3})
    for (int d : {1, 2, 3}) {
      const double a = pinching_coefficient(n), s = a - 1.0 / n;
      std::uniform_real_distribution<double> U(0.0, 2.0);
      for (int k = 0; k < 50; ++k) {
        auto h = random_h(n, d, rng, 0.3);
        for (auto& m : h) m -= m.trace() / n * SmallMat::Identity(n, n);
        double A02 = 0;
        for (auto& m : h) A02 += m.squaredNorm();
        const double b = U(rng);
        const double Hn = std::sqrt((A02 + b) / s);
        h[0] += Hn / n * SmallMat::Identity(n, n);
        ReactionInput in;
        in.n = n;
        in.d = d;
        in.h = h;
        in.R = Tensor4(n + d);
        in.DR = Tensor5(n + d);
        in.h_aligned = true;
        ReactionTerms t = reaction_terms(in, a);
        double AH = h[0].squaredNorm() - Hn * Hn / n, AI = A02 - AH;
        const double q = 2.0 / (n * s);
        const double rhs = (6 - q) * AH * AI + (3 - q) * AI * AI - 2 * n * a * b / (n * s) * AH - 2 * q * b * AI -
                           q * b * b;
        CHECK(2 * t.R1 - 2 * a * t.R2 <= rhs + 1e-9);
      }
    }
}

TEST_CASE("audits in curved space forms") {
  struct Case {
    ShapeSpec spec;
    AmbientModel amb;
    CurvatureBounds B;
    Topology topo;
    std::vector<int> sizes;
    DerivativeSource src;
  };
  auto an = DerivativeSource::analytic, fd = DerivativeSource::finite_difference;
  std::vector<Case> cases = {
      {{"ellipsoid", {0.6, 0.4, 0.4}, 2, 2}, AmbientModel::sphere(4, 1.0), {0, 1, 0}, Topology::axisym, {32}, an},
      {{"graph-torus", {0.1, 2}}, AmbientModel::sphere(3, 1.0), {0, 1, 0}, Topology::torus, {16, 16}, an},
      {{"ellipsoid", {0.6, 0.4, 0.4}, 2, 2}, AmbientModel::hyperbolic(4, 1.0), {1, 0, 0}, Topology::axisym, {32}, fd},
  };
  for (auto& c : cases) {
    auto imm = build_immersion(c.spec, c.amb, c.topo, c.sizes, c.src);
    AuditContext ctx;
    ctx.bounds = c.B;
    ctx.constants = pinching_constants(c.spec.n, c.spec.codim, c.B, pinching_coefficient(c.spec.n), ctx.params);
    if (c.src == fd) ctx.rel_tol = std::pow(imm.min_spacing(), 2);
    auto sum = summarize_audit(audit_immersion(imm, ctx));
    for (auto nm : {"gradA_H", "gradA0_w", "gradA0_K", "I", "II", "III", "IV", "xu_gu"})
      CHECK_MESSAGE(sum.pass_rate(nm) == 1.0, nm);
  }
}
