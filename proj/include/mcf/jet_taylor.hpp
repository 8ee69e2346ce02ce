#pragma once

// Extraction of a Jet from Taylor-expanded embedding coordinates.

#include "mcf/immersion.hpp"
#include "mcf/taylor.hpp"

#include <vector>

namespace mcf {

template <int NV>
inline Jet jet_from_taylor(const std::vector<Taylor<NV>>& X, int n) {
  const int D = static_cast<int>(X.size());
  Jet J;
  J.n = n;
  J.x.resize(D);
  for (int c = 0; c < D; ++c) J.x[c] = X[c].value();
  for (int i = 0; i < n; ++i) {
    J.F(i).resize(D);
    for (int j = 0; j < n; ++j) {
      J.F(i, j).resize(D);
      for (int k = 0; k < n; ++k) J.F(i, j, k).resize(D);
    }
  }
  for (int c = 0; c < D; ++c)
    for (int i = 0; i < n; ++i) {
      std::array<int, NV> e{};
      e[i] = 1;
      J.F(i)[c] = X[c].derivative(e);
      for (int j = 0; j < n; ++j) {
        std::array<int, NV> f = e;
        f[j] += 1;
        J.F(i, j)[c] = X[c].derivative(f);
        for (int k = 0; k < n; ++k) {
          std::array<int, NV> g = f;
          g[k] += 1;
          J.F(i, j, k)[c] = X[c].derivative(g);
        }
      }
    }
  return J;
}

}  // namespace mcf
