// Copyright 2026 The crnn-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "crnn/scalar.hpp"

namespace crnn::lattice {

using IntVec = std::vector<BigInt>;
using IntMat = std::vector<IntVec>;

inline BigInt gcd(BigInt a, BigInt b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    BigInt t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline BigInt lcm(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  return (a / gcd(a, b)) * b;
}

inline IntMat identity(std::size_t k) {
  IntMat t(k, IntVec(k, 0));
  for (std::size_t i = 0; i < k; ++i) t[i][i] = 1;
  return t;
}

inline void axpy(IntVec& y, const BigInt& q, const IntVec& x) {
  for (std::size_t c = 0; c < y.size(); ++c) y[c] -= q * x[c];
}

/// Row Hermite normal form: H = T * G with T unimodular. Rows of H past
/// `rank` are zero and the matching rows of T are integer relations.
struct Hermite {
  IntMat H, T;
  std::vector<std::size_t> pivots;
  std::size_t rank = 0;
};

inline Hermite hermite_rows(IntMat G) {
  Hermite h;
  std::size_t rows = G.size();
  std::size_t cols = rows ? G[0].size() : 0;
  h.T = identity(rows);
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    while (true) {
      std::size_t best = rows;
      for (std::size_t i = r; i < rows; ++i)
        if (G[i][c] != 0 && (best == rows || abs(G[i][c]) < abs(G[best][c]))) best = i;
      if (best == rows) break;
      std::swap(G[r], G[best]);
      std::swap(h.T[r], h.T[best]);
      bool done = true;
      for (std::size_t i = r + 1; i < rows; ++i) {
        if (G[i][c] == 0) continue;
        BigInt q = floor_div(G[i][c], G[r][c]);
        axpy(G[i], q, G[r]);
        axpy(h.T[i], q, h.T[r]);
        if (G[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (G[r][c] == 0) continue;
    if (G[r][c] < 0) {
      for (auto& x : G[r]) x = -x;
      for (auto& x : h.T[r]) x = -x;
    }
    for (std::size_t i = 0; i < r; ++i) {
      BigInt q = floor_div(G[i][c], G[r][c]);
      if (q != 0) {
        axpy(G[i], q, G[r]);
        axpy(h.T[i], q, h.T[r]);
      }
    }
    h.pivots.push_back(c);
    ++r;
  }
  h.rank = r;
  h.H = std::move(G);
  return h;
}

/// Integer coefficients m with v = sum_j m_j G_j, if any.
inline std::optional<IntVec> solve_in_lattice(const Hermite& h, IntVec v) {
  std::size_t rows = h.T.size();
  IntVec coef(rows, 0);
  for (std::size_t i = 0; i < h.rank; ++i) {
    std::size_t c = h.pivots[i];
    if (v[c] % h.H[i][c] != 0) return std::nullopt;
    BigInt q = v[c] / h.H[i][c];
    axpy(v, q, h.H[i]);
    for (std::size_t j = 0; j < rows; ++j) coef[j] += q * h.T[i][j];
  }
  for (const auto& x : v)
    if (x != 0) return std::nullopt;
  return coef;
}

/// Basis (as integer combination vectors) of {m : sum_j m_j r_j in Z} when
/// `modular`, else of {m : sum_j m_j r_j = 0}. Reduction is Euclid-like on the
/// values, pivoting on the smallest magnitude and, on ties, list order.
inline IntMat centralizer_basis(const std::vector<Rational>& r, bool modular) {
  std::size_t g = r.size();
  IntMat basis = identity(g);
  BigInt D = 1;
  for (const auto& x : r) D = lcm(D, denominator(x));
  IntVec val(g);
  for (std::size_t j = 0; j < g; ++j) val[j] = numerator(r[j]) * (D / denominator(r[j]));
  auto norm = [&](BigInt x) {
    if (!modular) return x;
    x = x % D;
    if (x < 0) x += D;
    if (2 * x > D) x -= D;
    return x;
  };
  for (auto& x : val) x = norm(x);
  while (true) {
    std::size_t k = g;
    for (std::size_t j = 0; j < g; ++j)
      if (val[j] != 0 && (k == g || abs(val[j]) < abs(val[k]))) k = j;
    if (k == g) return basis;
    bool others = false;
    for (std::size_t j = 0; j < g; ++j) {
      if (j == k || val[j] == 0) continue;
      BigInt q = rround(frac(val[j], val[k]));
      axpy(basis[j], q, basis[k]);
      val[j] = norm(val[j] - q * val[k]);
      if (val[j] != 0) others = true;
    }
    if (others) continue;
    if (modular) {
      BigInt d = D / gcd(val[k], D);
      for (auto& x : basis[k]) x *= d;
    } else {
      basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return basis;
  }
}

}  // namespace crnn::lattice
