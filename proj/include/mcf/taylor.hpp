#pragma once

// Truncated multivariate Taylor polynomials of total degree <= 3.
//
// Evaluating a smooth map on Taylor<NV> arguments seeded with
// Taylor<NV>::variable(i, x_i) yields every partial derivative of order <= 3
// at x exactly (up to rounding). Used for the analytic derivative source.

#include <array>
#include <cmath>

namespace mcf {

namespace taylor_detail {

constexpr int binom(int n, int k) {
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <int NV>
struct Layout {
  static constexpr int kTerms = binom(NV + 3, 3);
  // exponents[t][v]: exponent of variable v in monomial t, graded order.
  std::array<std::array<int, NV>, kTerms> exponents{};
  std::array<int, kTerms> degree{};
  // product[t1][t2]: index of monomial t1*t2, or -1 when degree > 3.
  std::array<std::array<int, kTerms>, kTerms> product{};

  constexpr Layout() {
    int t = 0;
    for (int deg = 0; deg <= 3; ++deg) {
      std::array<int, NV> e{};
      enumerate(deg, 0, e, t);
    }
    for (int a = 0; a < kTerms; ++a)
      for (int b = 0; b < kTerms; ++b) {
        product[a][b] = -1;
        if (degree[a] + degree[b] > 3) continue;
        std::array<int, NV> e{};
        for (int v = 0; v < NV; ++v) e[v] = exponents[a][v] + exponents[b][v];
        product[a][b] = find(e);
      }
  }

  constexpr void enumerate(int remaining, int var, std::array<int, NV>& e, int& t) {
    if (var == NV - 1) {
      e[var] = remaining;
      exponents[t] = e;
      int d = 0;
      for (int v = 0; v < NV; ++v) d += e[v];
      degree[t] = d;
      ++t;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      enumerate(remaining - k, var + 1, e, t);
    }
  }

  constexpr int find(const std::array<int, NV>& e) const {
    for (int t = 0; t < kTerms; ++t) {
      bool same = true;
      for (int v = 0; v < NV; ++v) same = same && exponents[t][v] == e[v];
      if (same) return t;
    }
    return -1;
  }
};

template <int NV>
inline constexpr Layout<NV> kLayout{};

}  // namespace taylor_detail

template <int NV>
class Taylor {
 public:
  static constexpr int kTerms = taylor_detail::Layout<NV>::kTerms;

  Taylor() { c_.fill(0.0); }
  Taylor(double v) {  // NOLINT: implicit constants are intended
    c_.fill(0.0);
    c_[0] = v;
  }

  static Taylor variable(int v, double at) {
    Taylor t(at);
    std::array<int, NV> e{};
    e[v] = 1;
    t.c_[taylor_detail::kLayout<NV>.find(e)] = 1.0;
    return t;
  }

  double value() const { return c_[0]; }

  /// Partial derivative with the given multi-index (total order <= 3).
  double derivative(const std::array<int, NV>& e) const {
    int t = taylor_detail::kLayout<NV>.find(e);
    if (t < 0) return 0.0;
    double f = 1.0;
    for (int v = 0; v < NV; ++v)
      for (int k = 2; k <= e[v]; ++k) f *= k;
    return c_[t] * f;
  }

  Taylor& operator+=(const Taylor& o) {
    for (int t = 0; t < kTerms; ++t) c_[t] += o.c_[t];
    return *this;
  }
  Taylor& operator-=(const Taylor& o) {
    for (int t = 0; t < kTerms; ++t) c_[t] -= o.c_[t];
    return *this;
  }
  Taylor& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend Taylor operator+(Taylor a, const Taylor& b) { return a += b; }
  friend Taylor operator-(Taylor a, const Taylor& b) { return a -= b; }
  friend Taylor operator-(Taylor a) { return a *= -1.0; }
  friend Taylor operator*(Taylor a, double s) { return a *= s; }
  friend Taylor operator*(double s, Taylor a) { return a *= s; }
  friend Taylor operator*(const Taylor& a, const Taylor& b) {
    const auto& L = taylor_detail::kLayout<NV>;
    Taylor r;
    for (int i = 0; i < kTerms; ++i) {
      if (a.c_[i] == 0.0) continue;
      for (int j = 0; j < kTerms; ++j) {
        int k = L.product[i][j];
        if (k >= 0) r.c_[k] += a.c_[i] * b.c_[j];
      }
    }
    return r;
  }
  friend Taylor operator/(const Taylor& a, const Taylor& b) { return a * reciprocal(b); }
  friend Taylor operator/(const Taylor& a, double s) { return a * (1.0 / s); }
  friend Taylor operator/(double s, const Taylor& b) { return reciprocal(b) * s; }

  /// f(x0 + d) = f0 + f1 d + f2 d^2/2 + f3 d^3/6 with d the nonconstant part.
  static Taylor compose(const Taylor& x, double f0, double f1, double f2, double f3) {
    Taylor d = x;
    d.c_[0] = 0.0;
    Taylor d2 = d * d;
    Taylor d3 = d2 * d;
    Taylor r(f0);
    r += d * f1;
    r += d2 * (f2 / 2.0);
    r += d3 * (f3 / 6.0);
    return r;
  }

  friend Taylor reciprocal(const Taylor& x) {
    double a = x.c_[0];
    return compose(x, 1 / a, -1 / (a * a), 2 / (a * a * a), -6 / (a * a * a * a));
  }
  friend Taylor sin(const Taylor& x) {
    double s = std::sin(x.c_[0]), c = std::cos(x.c_[0]);
    return compose(x, s, c, -s, -c);
  }
  friend Taylor cos(const Taylor& x) {
    double s = std::sin(x.c_[0]), c = std::cos(x.c_[0]);
    return compose(x, c, -s, -c, s);
  }
  friend Taylor sinh(const Taylor& x) {
    double s = std::sinh(x.c_[0]), c = std::cosh(x.c_[0]);
    return compose(x, s, c, s, c);
  }
  friend Taylor cosh(const Taylor& x) {
    double s = std::sinh(x.c_[0]), c = std::cosh(x.c_[0]);
    return compose(x, c, s, c, s);
  }
  friend Taylor exp(const Taylor& x) {
    double e = std::exp(x.c_[0]);
    return compose(x, e, e, e, e);
  }
  friend Taylor sqrt(const Taylor& x) {
    double s = std::sqrt(x.c_[0]);
    return compose(x, s, 0.5 / s, -0.25 / (s * s * s), 0.375 / (s * s * s * s * s));
  }

 private:
  std::array<double, kTerms> c_;
};

}  // namespace mcf
