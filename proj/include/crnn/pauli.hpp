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

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "crnn/scalar.hpp"

namespace crnn {

/// e^{i pi theta} exp(i (a.q + b.p)) on n modes, with [q_j, p_k] = i/2 delta_jk.
///
/// Exact words carry a in units of g_q, b in units of g_p and theta in units of
/// pi. Float words carry a and b as plain reals and theta in units of pi.
template <class B>
struct PauliWord {
  using T = typename B::value_type;

  int n = 0;
  std::vector<T> a, b;
  T theta = B::zero();
  UnitSystem units{};

  static PauliWord identity(int n, UnitSystem us = {}) {
    PauliWord p;
    p.n = n;
    p.a.assign(n, B::zero());
    p.b.assign(n, B::zero());
    p.units = us;
    return p;
  }

  static PauliWord from_vector(const std::vector<T>& v, T theta = B::zero(), UnitSystem us = {}) {
    if (v.size() % 2 != 0) throw std::invalid_argument("vector length must be even");
    int n = static_cast<int>(v.size() / 2);
    PauliWord p = identity(n, us);
    for (int j = 0; j < n; ++j) {
      p.a[j] = v[j];
      p.b[j] = v[n + j];
    }
    p.theta = B::mod(theta, 2);
    return p;
  }

  std::vector<T> vec() const {
    std::vector<T> v(a);
    v.insert(v.end(), b.begin(), b.end());
    return v;
  }

  bool is_identity_vector() const {
    for (int j = 0; j < n; ++j)
      if (!B::is_zero(a[j]) || !B::is_zero(b[j])) return false;
    return true;
  }

  bool is_identity() const { return is_identity_vector() && B::is_zero(B::mod(theta, 2)); }

  bool operator==(const PauliWord& o) const {
    if (n != o.n) return false;
    for (int j = 0; j < n; ++j)
      if (!B::equal(a[j], o.a[j]) || !B::equal(b[j], o.b[j])) return false;
    return B::is_zero(B::mod(theta - o.theta, 2));
  }
};

using ExactWord = PauliWord<Exact>;
using FloatWord = PauliWord<Float>;

/// X_j(t) = exp(-2 i t p_j). Exact t is a multiple of g_p.
template <class B>
PauliWord<B> X(int n, int j, typename B::value_type t, UnitSystem us = {}) {
  auto p = PauliWord<B>::identity(n, us);
  p.b.at(j) = -2 * t;
  return p;
}

/// Z_j(t) = exp(2 i t q_j). Exact t is a multiple of g_q.
template <class B>
PauliWord<B> Z(int n, int j, typename B::value_type t, UnitSystem us = {}) {
  auto p = PauliWord<B>::identity(n, us);
  p.a.at(j) = 2 * t;
  return p;
}

/// Symplectic form of two coefficient vectors (q-part then p-part), in half-turns.
template <class B>
typename B::value_type omega_vec(const std::vector<typename B::value_type>& v1,
                                 const std::vector<typename B::value_type>& v2,
                                 const UnitSystem& us = {}) {
  if (v1.size() != v2.size()) throw std::invalid_argument("mode-count mismatch");
  std::size_t n = v1.size() / 2;
  typename B::value_type s = B::zero();
  for (std::size_t j = 0; j < n; ++j) s += v1[j] * v2[n + j] - v1[n + j] * v2[j];
  if constexpr (std::is_same_v<B, Exact>) {
    return s * us.kappa;
  } else {
    (void)us;
    return s / kPi;
  }
}

template <class B>
void check_compatible(const PauliWord<B>& p1, const PauliWord<B>& p2) {
  if (p1.n != p2.n) throw std::invalid_argument("mode-count mismatch");
  if constexpr (std::is_same_v<B, Exact>) {
    if (!(p1.units == p2.units)) throw UnitError("words declare different unit systems");
  }
}

/// omega in half-turns: a1.b2 - b1.a2 (scaled by kappa in exact mode).
template <class B>
typename B::value_type omega(const PauliWord<B>& p1, const PauliWord<B>& p2) {
  check_compatible(p1, p2);
  typename B::value_type s = B::zero();
  for (int j = 0; j < p1.n; ++j) s += p1.a[j] * p2.b[j] - p1.b[j] * p2.a[j];
  if constexpr (std::is_same_v<B, Exact>) {
    return s * p1.units.kappa;
  } else {
    return s / kPi;
  }
}

/// symplectic_form as a tagged scalar (exact: multiple of pi; float: radians).
template <class B>
Scalar symplectic_form(const PauliWord<B>& p1, const PauliWord<B>& p2) {
  auto w = omega(p1, p2);
  if constexpr (std::is_same_v<B, Exact>) {
    return Scalar::exact(w, Unit::Pi);
  } else {
    return Scalar::real(w * kPi);
  }
}

template <class B>
bool commute(const PauliWord<B>& p1, const PauliWord<B>& p2) {
  return B::is_int(omega(p1, p2) / 4);
}

template <class B>
bool anticommute(const PauliWord<B>& p1, const PauliWord<B>& p2) {
  return B::is_int((omega(p1, p2) - 2) / 4);
}

template <class B>
PauliWord<B> pauli_mul(const PauliWord<B>& p1, const PauliWord<B>& p2) {
  auto w = omega(p1, p2);
  PauliWord<B> r = p1;
  for (int j = 0; j < p1.n; ++j) {
    r.a[j] += p2.a[j];
    r.b[j] += p2.b[j];
  }
  r.theta = B::mod(p1.theta + p2.theta - w / 4, 2);
  return r;
}

template <class B>
PauliWord<B> pauli_adjoint(const PauliWord<B>& p) {
  PauliWord<B> r = p;
  for (int j = 0; j < p.n; ++j) {
    r.a[j] = -r.a[j];
    r.b[j] = -r.b[j];
  }
  r.theta = B::mod(-p.theta, 2);
  return r;
}

template <class B>
PauliWord<B> pauli_power(const PauliWord<B>& p, const typename B::value_type& t) {
  PauliWord<B> r = p;
  for (int j = 0; j < p.n; ++j) {
    r.a[j] *= t;
    r.b[j] *= t;
  }
  r.theta = B::mod(p.theta * t, 2);
  return r;
}

/// Power by a tagged scalar; exact mode needs a pure rational exponent.
inline ExactWord pauli_power(const ExactWord& p, const Scalar& t) {
  if (!t.is_exact()) throw UnitError("float exponent on an exact word");
  if (t.unit() != Unit::One) throw UnitError("exponent not expressible in the unit system");
  return pauli_power(p, t.coeff());
}

template <class B>
PauliWord<B> mul_all(std::initializer_list<PauliWord<B>> ws) {
  auto it = ws.begin();
  PauliWord<B> r = *it;
  for (++it; it != ws.end(); ++it) r = pauli_mul(r, *it);
  return r;
}

// ---------------------------------------------------------------- magic square

template <class B>
struct MagicSquare {
  std::array<std::array<PauliWord<B>, 3>, 3> grid;
};

/// Grid for X(alpha) with b-coefficient xb = -2 alpha and Z(pi/(2 alpha)) with
/// a-coefficient za = pi/alpha.
template <class B>
MagicSquare<B> magic_square_from_coeffs(typename B::value_type xb, typename B::value_type za,
                                        UnitSystem us = {}) {
  auto X1 = PauliWord<B>::identity(2, us), X2 = X1, Z1 = X1, Z2 = X1;
  X1.b[0] = xb;
  X2.b[1] = xb;
  Z1.a[0] = za;
  Z2.a[1] = za;
  auto dag = [](const PauliWord<B>& p) { return pauli_adjoint(p); };
  MagicSquare<B> m;
  m.grid[0] = {X1, X2, pauli_mul(dag(X1), dag(X2))};
  auto minus = mul_all<B>({X1, Z1, X2, Z2});
  minus.theta = B::mod(minus.theta + 1, 2);
  m.grid[1] = {pauli_mul(dag(X1), dag(Z2)), pauli_mul(dag(Z1), dag(X2)), minus};
  m.grid[2] = {Z2, Z1, pauli_mul(dag(Z1), dag(Z2))};
  return m;
}

/// Exact grid with alpha = r * g_p (a plain rational alpha declares g_p = 1).
inline MagicSquare<Exact> build_magic_square_exact(const Rational& r, UnitSystem us = {}) {
  if (r == 0) throw std::invalid_argument("alpha must be nonzero");
  // pi / alpha = g_q / (kappa r).
  return magic_square_from_coeffs<Exact>(-2 * r, 1 / (r * us.kappa), us);
}

inline MagicSquare<Float> build_magic_square_float(double alpha) {
  if (alpha == 0.0) throw std::invalid_argument("alpha must be nonzero");
  return magic_square_from_coeffs<Float>(-2 * alpha, kPi / alpha);
}

/// Dispatch on the scalar tag. Exact alpha must be a rational or a g_p multiple.
inline MagicSquare<Exact> build_magic_square(const Scalar& alpha, UnitSystem us = {}) {
  if (!alpha.is_exact()) throw UnitError("use build_magic_square_float for float alpha");
  if (alpha.unit() != Unit::One && alpha.unit() != Unit::Gp)
    throw UnitError("exact alpha must be a rational multiple of g_p");
  if (alpha.unit() == Unit::One) us.g_q_value = to_double(us.kappa) * kPi;
  return build_magic_square_exact(alpha.coeff(), us);
}

template <class B>
struct LineReport {
  std::string name;
  std::array<bool, 3> commutes{};
  PauliWord<B> product;
  bool identity_vector = false;
  typename B::value_type phase{};  // half-turns
  bool ok = false;
};

template <class B>
struct VerificationReport {
  std::array<LineReport<B>, 6> lines;
  int satisfying_assignments = 0;
  bool pass = false;
};

template <class B>
VerificationReport<B> verify_magic_square(const MagicSquare<B>& m) {
  VerificationReport<B> rep;
  std::array<std::array<std::pair<int, int>, 3>, 6> cells;
  const char* names[6] = {"row1", "row2", "row3", "col1", "col2", "col3"};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      cells[r][c] = {r, c};
      cells[3 + c][r] = {r, c};
    }
  bool all_ok = true;
  std::array<int, 6> target{};  // +1, -1, or 0 when the product is not +-I
  for (int l = 0; l < 6; ++l) {
    auto& lr = rep.lines[l];
    lr.name = names[l];
    auto w = [&](int k) -> const PauliWord<B>& {
      return m.grid[cells[l][k].first][cells[l][k].second];
    };
    lr.commutes = {commute(w(0), w(1)), commute(w(0), w(2)), commute(w(1), w(2))};
    lr.product = pauli_mul(pauli_mul(w(0), w(1)), w(2));
    lr.identity_vector = lr.product.is_identity_vector();
    lr.phase = B::mod(lr.product.theta, 2);
    auto expected = B::from_int(l == 5 ? 1 : 0);
    bool phase_ok = B::is_zero(B::mod(lr.phase - expected + B::from_int(1), 2) - B::from_int(1));
    lr.ok = lr.commutes[0] && lr.commutes[1] && lr.commutes[2] && lr.identity_vector && phase_ok;
    all_ok = all_ok && lr.ok;
    if (lr.identity_vector && B::is_zero(B::mod(lr.phase + B::from_int(1), 2) - B::from_int(1)))
      target[l] = 1;
    else if (lr.identity_vector && B::is_zero(B::mod(lr.phase, 2) - B::from_int(1)))
      target[l] = -1;
  }
  // Exhaustive search over +-1 value assignments to the nine cells.
  int count = 0;
  for (int mask = 0; mask < 512; ++mask) {
    bool sat = true;
    for (int l = 0; l < 6 && sat; ++l) {
      if (target[l] == 0) continue;
      int prod = 1;
      for (int k = 0; k < 3; ++k) {
        auto [r, c] = cells[l][k];
        if (mask & (1 << (3 * r + c))) prod = -prod;
      }
      sat = prod == target[l];
    }
    if (sat) ++count;
  }
  rep.satisfying_assignments = count;
  rep.pass = all_ok && count == 0;
  return rep;
}

// ------------------------------------------------------------------ json

inline nlohmann::json to_json(const ExactWord& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["backend"] = "exact";
  j["kappa"] = rational_json(p.units.kappa, Unit::One);
  j["a"] = nlohmann::json::array();
  j["b"] = nlohmann::json::array();
  for (int k = 0; k < p.n; ++k) {
    j["a"].push_back(rational_json(p.a[k], Unit::Gq));
    j["b"].push_back(rational_json(p.b[k], Unit::Gp));
  }
  j["theta"] = rational_json(p.theta, Unit::Pi);
  return j;
}

inline nlohmann::json to_json(const FloatWord& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["backend"] = "float";
  j["a"] = p.a;
  j["b"] = p.b;
  j["theta"] = p.theta * kPi;
  return j;
}

template <class B>
PauliWord<B> word_from_json(const nlohmann::json& j) {
  PauliWord<B> p = PauliWord<B>::identity(j.at("n").get<int>());
  if (j.at("backend").get<std::string>() != B::name) throw UnitError("backend mismatch in word json");
  if constexpr (std::is_same_v<B, Exact>) {
    if (j.contains("kappa")) p.units.kappa = rational_from_json(j["kappa"]);
    for (int k = 0; k < p.n; ++k) {
      p.a[k] = rational_from_json(j.at("a").at(k));
      p.b[k] = rational_from_json(j.at("b").at(k));
    }
    p.theta = rational_from_json(j.at("theta"));
  } else {
    p.a = j.at("a").get<std::vector<double>>();
    p.b = j.at("b").get<std::vector<double>>();
    p.theta = Float::mod(j.at("theta").get<double>() / kPi, 2);
  }
  return p;
}

}  // namespace crnn
