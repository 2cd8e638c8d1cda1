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
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crnn/intlattice.hpp"
#include "crnn/pauli.hpp"

namespace crnn {

/// Tableau phases are inconsistent; only reachable through a bug or a
/// hand-built tableau.
class InconsistentTableau : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class MeasurementKind { NULLIFIER, PAULI };

template <class B>
struct MeasurementOutcome {
  MeasurementKind kind = MeasurementKind::PAULI;
  typename B::value_type value{};  ///< half-turns (eigenvalue / pi for nullifiers)
  bool deterministic = false;
  bool consistent = true;          ///< false when a forced value was not allowed
};

/// Where a random outcome comes from: an rng, or a value to condition on.
template <class B>
struct Draw {
  std::mt19937_64* rng = nullptr;
  std::optional<typename B::value_type> forced;

  static Draw from(std::mt19937_64& r) { return Draw{&r, std::nullopt}; }
  static Draw force(typename B::value_type v) { return Draw{nullptr, std::move(v)}; }
};

struct Deterministic {
  Rational phase_exact{0};
  double phase{0};  ///< half-turns
};
struct Free {};
struct Clash {};
using Membership = std::variant<Deterministic, Free, Clash>;

/// Loopless weighted graph with per-vertex stabilizer centers (half-turns).
template <class B>
struct GraphSpec {
  using T = typename B::value_type;
  std::vector<std::vector<T>> adjacency;
  std::vector<T> centers;

  int n() const { return static_cast<int>(adjacency.size()); }
  static GraphSpec zero_centers(std::vector<std::vector<T>> adj) {
    GraphSpec g;
    g.centers.assign(adj.size(), B::zero());
    g.adjacency = std::move(adj);
    return g;
  }
};

/// Stabilizer state on n modes: continuous directions (u, c) where u.x has
/// eigenvalue pi*c, plus discrete stabilizer words S with S|psi> = |psi>.
/// Vectors are in the word frame (q-part in g_q, p-part in g_p for exact).
template <class B>
class StabilizerTableau {
 public:
  using T = typename B::value_type;
  using Vec = std::vector<T>;
  using Word = PauliWord<B>;

  struct Continuous {
    Vec u;
    T center;
  };

  int n = 0;
  UnitSystem units{};
  std::vector<Continuous> continuous;
  std::vector<Word> discrete;

  int phase_precision = 12;     ///< bits of the fallback phase grid
  double nullifier_sigma = 1.0; ///< std dev of unconstrained nullifier draws

  static StabilizerTableau init_squeezed(int n, UnitSystem us = {}) {
    if (n < 1) throw std::invalid_argument("mode count must be positive");
    StabilizerTableau t;
    t.n = n;
    t.units = us;
    for (int j = 0; j < n; ++j) {
      Vec u(2 * n, B::zero());
      u[j] = B::from_int(1);
      t.continuous.push_back({u, B::zero()});
    }
    return t;
  }

  /// GKP grid state with support q = 0 mod 2pi: stabilizers e^{i q_j} and
  /// e^{-4 pi i p_j}. Exact units: g_q = 1, g_p = pi.
  static StabilizerTableau init_gkp(int n) {
    if (n < 1) throw std::invalid_argument("mode count must be positive");
    StabilizerTableau t;
    t.n = n;
    t.units = UnitSystem{Rational(1), 1.0};
    for (int j = 0; j < n; ++j) {
      auto z = Word::identity(n, t.units);
      z.a[j] = B::from_int(1);
      auto x = Word::identity(n, t.units);
      if constexpr (std::is_same_v<B, Exact>) {
        x.b[j] = Rational(-4);
      } else {
        x.b[j] = -4 * kPi;
      }
      t.discrete.push_back(z);
      t.discrete.push_back(x);
    }
    t.assert_invariants();
    return t;
  }

  /// Graph state: direction (E_k | -e_k) with center c_k for each vertex k.
  static StabilizerTableau from_graph(const GraphSpec<B>& g, UnitSystem us = {}) {
    int n = g.n();
    if (n < 1) throw std::invalid_argument("empty graph");
    StabilizerTableau t;
    t.n = n;
    t.units = us;
    for (int k = 0; k < n; ++k) {
      if (!B::is_zero(g.adjacency[k][k])) throw std::invalid_argument("graph has a loop");
      Vec u(2 * n, B::zero());
      for (int l = 0; l < n; ++l) {
        if (!B::equal(g.adjacency[k][l], g.adjacency[l][k]))
          throw std::invalid_argument("adjacency not symmetric");
        u[l] = g.adjacency[k][l];
      }
      u[n + k] = B::from_int(-1);
      t.continuous.push_back({u, g.centers.empty() ? B::zero() : g.centers[k]});
    }
    return t;
  }

  // ------------------------------------------------------------ queries

  T omega_vecs(const Vec& x, const Vec& y) const { return omega_vec<B>(x, y, units); }

  /// Forced eigenphase (half-turns) of exp(i v.x) when v lies in the
  /// stabilizer group, else nullopt.
  std::optional<T> eigenphase(const Vec& v) const {
    const Cache& c = cache();
    auto [res, mu] = c.span.reduce(v);
    std::optional<lattice::IntVec> m;
    if (is_zero_vec(res)) {
      m = lattice::IntVec(discrete.size(), 0);
    } else {
      auto iv = c.lat.to_int(res);
      if (!iv) return std::nullopt;
      m = lattice::solve_in_lattice(c.lat.h, *iv);
      if (!m) return std::nullopt;
    }
    Word S = Word::identity(n, units);
    for (std::size_t j = 0; j < discrete.size(); ++j)
      if ((*m)[j] != 0) S = pauli_mul(S, word_power(discrete[j], (*m)[j]));
    Vec w = v;
    auto sv = S.vec();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= sv[k];
    auto [res2, mu2] = c.span.reduce(w);
    if (!is_zero_vec(res2)) throw InconsistentTableau("lattice solve left a residual");
    return B::mod(continuous_phase(mu2) - S.theta, 2);
  }

  /// Phase outcome forced for word p, if any.
  std::optional<T> forced_phase(const Word& p) const {
    auto lam = eigenphase(p.vec());
    if (!lam) return std::nullopt;
    return B::mod(p.theta + *lam, 2);
  }

  Membership contains(const Word& p) const {
    if (auto ph = forced_phase(p)) {
      Deterministic d;
      if constexpr (std::is_same_v<B, Exact>) {
        d.phase_exact = *ph;
        d.phase = to_double(*ph);
      } else {
        d.phase = *ph;
      }
      return d;
    }
    return clashes(p.vec()) ? Membership{Clash{}} : Membership{Free{}};
  }

  bool clashes(const Vec& v) const {
    for (const auto& c : continuous)
      if (!B::is_zero(omega_vecs(c.u, v))) return true;
    for (const auto& g : discrete)
      if (!B::is_int(omega_vecs(g.vec(), v) / 4)) return true;
    return false;
  }

  bool invariants_hold() const {
    for (std::size_t i = 0; i < continuous.size(); ++i)
      for (std::size_t j = i + 1; j < continuous.size(); ++j)
        if (!B::is_zero(omega_vecs(continuous[i].u, continuous[j].u))) return false;
    for (const auto& g : discrete) {
      for (const auto& c : continuous)
        if (!B::is_zero(omega_vecs(c.u, g.vec()))) return false;
      for (const auto& h : discrete)
        if (!commute(g, h)) return false;
    }
    return true;
  }

  void assert_invariants() const {
#ifndef NDEBUG
    if (!invariants_hold()) throw InconsistentTableau("tableau invariants violated");
#endif
  }

  // ------------------------------------------------------------ measurement

  MeasurementOutcome<B> measure_pauli(const Word& p, Draw<B> draw) {
    if (p.n != n) throw std::invalid_argument("mode-count mismatch");
    if constexpr (std::is_same_v<B, Exact>) {
      if (!(p.units == units)) throw UnitError("word and tableau declare different units");
    }
    if (p.is_identity_vector()) throw std::invalid_argument("cannot measure the identity word");
    MeasurementOutcome<B> out;
    out.kind = MeasurementKind::PAULI;
    if (auto ph = forced_phase(p)) {
      out.deterministic = true;
      out.value = *ph;
      if (draw.forced) {
        out.consistent = B::is_zero(B::mod(*draw.forced - *ph + 1, 2) - 1);
        out.value = *draw.forced;
      }
      return out;
    }
    // Coset rule: if p^k is forced to psi, outcomes are (psi + 2m)/k.
    std::optional<std::pair<long long, T>> root;
    {
      auto [res, mu] = cache().span.reduce(p.vec());
      if (auto lc = lattice_constraint(res, p.vec())) {
        Rational k;
        B::to_rational(lc->first, k);
        if (!is_integer(k) || numerator(k) > BigInt(1) << 62) throw UnitError("coset order out of range");
        long long kk = numerator(k).convert_to<long long>();
        root = {kk, B::mod(p.theta * lc->first + lc->second, 2)};
      }
    }
    T phi;
    if (draw.forced) {
      phi = B::mod(*draw.forced, 2);
      if (root) {
        T diff = B::mod(phi * B::from_int(root->first) - root->second + 1, 2) - 1;
        if (!B::is_zero(diff)) {
          out.value = phi;
          out.consistent = false;
          return out;
        }
      }
    } else {
      if (!draw.rng) throw std::invalid_argument("random outcome needs an rng");
      if (root) {
        std::uniform_int_distribution<long long> d(0, root->first - 1);
        long long m = d(*draw.rng);
        phi = B::mod((root->second + B::from_int(2 * m)) / B::from_int(root->first), 2);
      } else {
        long long steps = 1LL << phase_precision;
        std::uniform_int_distribution<long long> d(0, steps - 1);
        long long m = d(*draw.rng);
        phi = grid_value(2 * m, steps);
      }
    }
    out.value = phi;
    Vec v = p.vec();
    // Continuous directions: keep the part commuting with p, lattice-ize the pivot.
    std::optional<Word> pivot_word;
    if (auto piv = gram_schmidt(v)) {
      auto c = continuous[*piv];
      T w = omega_vecs(c.u, v);
      T t = B::from_int(4) / w;
      Vec tu = c.u;
      for (auto& x : tu) x *= t;
      pivot_word = Word::from_vector(tu, B::mod(-(t * c.center), 2), units);
      continuous.erase(continuous.begin() + static_cast<std::ptrdiff_t>(*piv));
    }
    restrict_discrete(v, true);
    if (pivot_word) discrete.push_back(*pivot_word);
    Word s = p;
    s.theta = B::mod(p.theta - phi, 2);
    discrete.push_back(s);
    normalize();
    return out;
  }

  MeasurementOutcome<B> measure_nullifier(const Vec& s, Draw<B> draw) {
    if (static_cast<int>(s.size()) != 2 * n) throw std::invalid_argument("mode-count mismatch");
    if (is_zero_vec(s)) throw std::invalid_argument("zero nullifier");
    MeasurementOutcome<B> out;
    out.kind = MeasurementKind::NULLIFIER;
    const Cache& cc = cache();
    auto [res, mu] = cc.span.reduce(s);
    if (is_zero_vec(res)) {
      out.deterministic = true;
      out.value = continuous_phase(mu);
      if (draw.forced) {
        out.consistent = B::equal(*draw.forced, out.value);
        out.value = *draw.forced;
      }
      return out;
    }
    // Lattice constraint: tau*s in the group forces tau*c = psi mod 2.
    std::optional<std::pair<T, T>> constraint = lattice_constraint(res, s);
    T c;
    if (draw.forced) {
      c = *draw.forced;
      if (constraint) {
        auto [tau, psi] = *constraint;
        if (!B::is_zero(B::mod(tau * c - psi + 1, 2) - 1)) {
          out.value = c;
          out.consistent = false;
          return out;
        }
      }
    } else {
      if (!draw.rng) throw std::invalid_argument("random outcome needs an rng");
      std::normal_distribution<double> nd(0.0, nullifier_sigma);
      double c0 = nd(*draw.rng) / kPi;
      if (constraint) {
        auto [tau, psi] = *constraint;
        double m = std::round((B::to_double(tau) * c0 - B::to_double(psi)) / 2.0);
        c = (psi + B::from_int(2 * static_cast<long long>(m))) / tau;
      } else {
        long long steps = 1LL << phase_precision;
        c = grid_value(static_cast<long long>(std::llround(c0 * steps)), steps);
      }
    }
    out.value = c;
    if (auto piv = gram_schmidt(s)) continuous.erase(continuous.begin() + static_cast<std::ptrdiff_t>(*piv));
    restrict_discrete(s, false);
    continuous.push_back({s, c});
    normalize();
    return out;
  }

  // ------------------------------------------------------------ json

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["n"] = n;
    j["backend"] = B::name;
    j["continuous"] = nlohmann::json::array();
    for (const auto& c : continuous) {
      nlohmann::json e;
      e["u"] = vec_json(c.u);
      e["center"] = phase_json(c.center);
      j["continuous"].push_back(e);
    }
    j["discrete"] = nlohmann::json::array();
    for (const auto& w : discrete) j["discrete"].push_back(crnn::to_json(w));
    if constexpr (std::is_same_v<B, Exact>) j["kappa"] = rational_json(units.kappa, Unit::One);
    return j;
  }

  static nlohmann::json vec_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : v) {
      if constexpr (std::is_same_v<B, Exact>) {
        a.push_back(to_string(x));
      } else {
        a.push_back(x);
      }
    }
    return a;
  }

  static nlohmann::json phase_json(const T& x) {
    if constexpr (std::is_same_v<B, Exact>) {
      return rational_json(x, Unit::Pi);
    } else {
      return x * kPi;
    }
  }

  Word word_power(const Word& w, const BigInt& k) const {
    if constexpr (std::is_same_v<B, Exact>) {
      return pauli_power(w, Rational(k));
    } else {
      return pauli_power(w, k.template convert_to<double>());
    }
  }

 private:
  struct SpanBasis {
    std::vector<Vec> E, M;
    std::vector<std::size_t> piv;
    std::size_t dim = 0, count = 0;

    void build(const std::vector<Continuous>& cs, std::size_t d) {
      dim = d;
      count = cs.size();
      for (std::size_t k = 0; k < cs.size(); ++k) {
        Vec r = cs[k].u;
        Vec comb(count, B::zero());
        comb[k] = B::from_int(1);
        for (std::size_t i = 0; i < E.size(); ++i) {
          T f = r[piv[i]];
          if (B::is_zero(f)) continue;
          for (std::size_t c = 0; c < dim; ++c) r[c] -= f * E[i][c];
          for (std::size_t c = 0; c < count; ++c) comb[c] -= f * M[i][c];
          r[piv[i]] = B::zero();
        }
        std::size_t p = dim;
        for (std::size_t c = 0; c < dim; ++c) {
          if (B::is_zero(r[c])) continue;
          if constexpr (std::is_same_v<B, Exact>) {
            p = c;
            break;
          } else {
            if (p == dim || std::fabs(r[c]) > std::fabs(r[p])) p = c;
          }
        }
        if (p == dim) throw InconsistentTableau("continuous directions are dependent");
        T f = r[p];
        for (auto& x : r) x /= f;
        for (auto& x : comb) x /= f;
        r[p] = B::from_int(1);
        for (std::size_t i = 0; i < E.size(); ++i) {
          T g = E[i][p];
          if (B::is_zero(g)) continue;
          for (std::size_t c = 0; c < dim; ++c) E[i][c] -= g * r[c];
          for (std::size_t c = 0; c < count; ++c) M[i][c] -= g * comb[c];
          E[i][p] = B::zero();
        }
        E.push_back(r);
        M.push_back(comb);
        piv.push_back(p);
      }
    }

    /// (residual zero at pivot columns, coefficients over the directions)
    std::pair<Vec, Vec> reduce(const Vec& v) const {
      Vec r = v;
      Vec mu(count, B::zero());
      for (std::size_t i = 0; i < E.size(); ++i) {
        T f = r[piv[i]];
        if (B::is_zero(f)) {
          r[piv[i]] = B::zero();
          continue;
        }
        for (std::size_t c = 0; c < dim; ++c) r[c] -= f * E[i][c];
        for (std::size_t c = 0; c < count; ++c) mu[c] += f * M[i][c];
        r[piv[i]] = B::zero();
      }
      return {r, mu};
    }
  };

  /// Integer view of the discrete generators modulo the continuous span.
  struct LatticeView {
    std::vector<std::size_t> cols;
    std::vector<T> refs;
    std::vector<BigInt> scale;
    lattice::Hermite h;
    std::size_t dim = 0;

    void build(const std::vector<Vec>& res, std::size_t d) {
      dim = d;
      std::vector<std::vector<Rational>> q(res.size());
      for (std::size_t c = 0; c < d; ++c) {
        std::size_t ref = res.size();
        for (std::size_t j = 0; j < res.size(); ++j)
          if (!B::is_zero(res[j][c])) {
            ref = j;
            break;
          }
        if (ref == res.size()) continue;
        T rv = res[ref][c];
        if constexpr (std::is_same_v<B, Float>) rv = std::fabs(rv);
        BigInt den = 1;
        std::vector<Rational> colv(res.size());
        for (std::size_t j = 0; j < res.size(); ++j) {
          Rational x;
          if (!B::to_rational(res[j][c] / rv, x)) throw UnitError("incommensurate lattice coordinates");
          colv[j] = x;
          den = lattice::lcm(den, denominator(x));
        }
        cols.push_back(c);
        refs.push_back(rv);
        scale.push_back(den);
        for (std::size_t j = 0; j < res.size(); ++j) q[j].push_back(colv[j]);
      }
      lattice::IntMat G(res.size(), lattice::IntVec(cols.size()));
      for (std::size_t j = 0; j < res.size(); ++j)
        for (std::size_t k = 0; k < cols.size(); ++k)
          G[j][k] = numerator(q[j][k] * Rational(scale[k]));
      h = lattice::hermite_rows(G);
    }

    std::optional<lattice::IntVec> to_int(const Vec& v) const {
      std::vector<bool> used(dim, false);
      lattice::IntVec out(cols.size());
      for (std::size_t k = 0; k < cols.size(); ++k) {
        used[cols[k]] = true;
        Rational x;
        if (!B::to_rational(v[cols[k]] / refs[k], x)) return std::nullopt;
        Rational y = x * Rational(scale[k]);
        if (!is_integer(y)) return std::nullopt;
        out[k] = numerator(y);
      }
      for (std::size_t c = 0; c < dim; ++c)
        if (!used[c] && !B::is_zero(v[c])) return std::nullopt;
      return out;
    }
  };

  struct Cache {
    SpanBasis span;
    std::vector<Vec> residuals;
    LatticeView lat;
  };

  mutable std::optional<Cache> cache_;

  const Cache& cache() const {
    // Every mutation goes through normalize(), which resets the cache.
    if (!cache_) {
      Cache c;
      c.span.build(continuous, static_cast<std::size_t>(2 * n));
      for (const auto& g : discrete) c.residuals.push_back(c.span.reduce(g.vec()).first);
      c.lat.build(c.residuals, static_cast<std::size_t>(2 * n));
      cache_ = std::move(c);
    }
    return *cache_;
  }

  static bool is_zero_vec(const Vec& v) {
    for (const auto& x : v)
      if (!B::is_zero(x)) return false;
    return true;
  }

  T continuous_phase(const Vec& mu) const {
    T s = B::zero();
    for (std::size_t k = 0; k < mu.size(); ++k) s += mu[k] * continuous[k].center;
    return s;
  }

  static T grid_value(long long num, long long steps) {
    if constexpr (std::is_same_v<B, Exact>) {
      return B::mod(Rational(num, steps), 2);
    } else {
      return B::mod(static_cast<double>(num) / static_cast<double>(steps), 2);
    }
  }

  /// Pivot on the first direction not commuting with v; make the others
  /// commute with v. Returns the pivot index.
  std::optional<std::size_t> gram_schmidt(const Vec& v) {
    cache_.reset();
    std::optional<std::size_t> piv;
    std::vector<T> w(continuous.size());
    for (std::size_t k = 0; k < continuous.size(); ++k) {
      w[k] = omega_vecs(continuous[k].u, v);
      if (!piv && !B::is_zero(w[k])) piv = k;
    }
    if (!piv) return std::nullopt;
    const auto P = continuous[*piv];
    for (std::size_t k = 0; k < continuous.size(); ++k) {
      if (k == *piv || B::is_zero(w[k])) continue;
      T f = w[k] / w[*piv];
      for (std::size_t c = 0; c < P.u.size(); ++c) continuous[k].u[c] -= f * P.u[c];
      continuous[k].center -= f * P.center;
    }
    return piv;
  }

  /// Replace the discrete generators by generators of their centralizer of
  /// exp(i v.x): omega in 4Z when `modular`, omega = 0 otherwise.
  void restrict_discrete(const Vec& v, bool modular) {
    cache_.reset();
    if (discrete.empty()) return;
    std::vector<Rational> r(discrete.size());
    bool all_commute = true;
    for (std::size_t j = 0; j < discrete.size(); ++j) {
      T w = omega_vecs(discrete[j].vec(), v);
      T val = modular ? w / 4 : w;
      if (modular ? !B::is_int(val) : !B::is_zero(val)) all_commute = false;
      if (modular) {
        if (B::is_int(val)) {
          r[j] = 0;
        } else if (!B::to_rational(val, r[j])) {
          throw UnitError("incommensurate commutation phase");
        }
      } else {
        if (B::is_zero(val)) {
          r[j] = 0;
        } else if (!B::to_rational(val, r[j])) {
          throw UnitError("incommensurate commutation phase");
        }
      }
    }
    if (all_commute) return;
    auto basis = lattice::centralizer_basis(r, modular);
    std::vector<Word> next;
    for (const auto& row : basis) next.push_back(combine(row));
    discrete = std::move(next);
  }

  Word combine(const lattice::IntVec& coef) const {
    Word S = Word::identity(n, units);
    for (std::size_t j = 0; j < coef.size(); ++j)
      if (coef[j] != 0) S = pauli_mul(S, word_power(discrete[j], coef[j]));
    return S;
  }

  /// Minimal tau with tau*s in the group, and the forced eigenphase there.
  std::optional<std::pair<T, T>> lattice_constraint(const Vec& res, const Vec& s) const {
    const Cache& c = cache();
    if (discrete.empty()) return std::nullopt;
    const auto& lat = c.lat;
    std::vector<bool> used(res.size(), false);
    std::vector<Rational> x(lat.cols.size());
    for (std::size_t k = 0; k < lat.cols.size(); ++k) {
      used[lat.cols[k]] = true;
      Rational y;
      if (!B::to_rational(res[lat.cols[k]] / lat.refs[k], y)) return std::nullopt;
      x[k] = y * Rational(lat.scale[k]);
    }
    for (std::size_t d = 0; d < res.size(); ++d)
      if (!used[d] && !B::is_zero(res[d])) return std::nullopt;
    // Rational coordinates over the echelon rows.
    BigInt den = 1;
    for (std::size_t i = 0; i < lat.h.rank; ++i) {
      std::size_t p = lat.h.pivots[i];
      Rational q = x[p] / Rational(lat.h.H[i][p]);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] -= q * Rational(lat.h.H[i][k]);
      den = lattice::lcm(den, denominator(q));
    }
    for (const auto& y : x)
      if (y != 0) return std::nullopt;
    T tau = B::from_rational(Rational(den));
    Vec ts = s;
    for (auto& v : ts) v *= tau;
    auto psi = eigenphase(ts);
    if (!psi) return std::nullopt;
    return std::make_pair(tau, *psi);
  }

  /// Hermite-reduce the discrete generators modulo the continuous span and
  /// check that every relation carries a consistent phase.
  void normalize() {
    cache_.reset();
    SpanBasis span;
    span.build(continuous, static_cast<std::size_t>(2 * n));
    if (!discrete.empty()) {
      std::vector<Vec> res;
      for (const auto& g : discrete) res.push_back(span.reduce(g.vec()).first);
      LatticeView lat;
      lat.build(res, static_cast<std::size_t>(2 * n));
      std::vector<Word> next;
      for (std::size_t i = 0; i < lat.h.T.size(); ++i) {
        Word S = combine(lat.h.T[i]);
        auto [r, mu] = span.reduce(S.vec());
        // Strip the continuous part: S * exp(-i w.x) with its forced phase.
        Vec w = S.vec();
        for (std::size_t k = 0; k < w.size(); ++k) w[k] -= r[k];
        Word C = Word::from_vector(w, B::zero(), units);
        for (auto& x : C.a) x = -x;
        for (auto& x : C.b) x = -x;
        C.theta = B::mod(continuous_phase(mu), 2);
        Word Sr = pauli_mul(S, C);
        if (i < lat.h.rank) {
          next.push_back(Sr);
        } else if (!B::is_zero(B::mod(Sr.theta + 1, 2) - 1)) {
          throw InconsistentTableau("stabilizer relation with a nontrivial phase");
        }
      }
      discrete = std::move(next);
    }
    cache_.reset();
    assert_invariants();
  }
};

using ExactTableau = StabilizerTableau<Exact>;
using FloatTableau = StabilizerTableau<Float>;

// ------------------------------------------------------------ witnesses

/// A word forced to phi by t1 and to phi + pi by t2, if one is found among
/// generators, their small multiples and pairwise products.
template <class B>
std::optional<PauliWord<B>> orthogonal_witness(const StabilizerTableau<B>& t1,
                                               const StabilizerTableau<B>& t2) {
  using Word = PauliWord<B>;
  if (t1.n != t2.n) throw std::invalid_argument("mode-count mismatch");
  std::vector<Word> base;
  for (const auto* t : {&t1, &t2}) {
    for (const auto& c : t->continuous) base.push_back(Word::from_vector(c.u, B::zero(), t1.units));
    for (const auto& g : t->discrete) {
      auto w = g;
      w.theta = B::zero();
      w.units = t1.units;
      base.push_back(w);
    }
  }
  std::vector<Word> cands = base;
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      auto w = pauli_mul(base[i], base[j]);
      w.theta = B::zero();
      if (!w.is_identity_vector()) cands.push_back(w);
    }
  auto half = B::from_int(1);
  for (const auto& w : cands) {
    for (long long k = 1; k <= 16; ++k) {
      auto wk = pauli_power(w, B::from_int(k));
      auto p1 = t1.forced_phase(wk);
      if (!p1) continue;
      auto p2 = t2.forced_phase(wk);
      if (!p2) continue;
      if (B::is_zero(B::mod(*p2 - *p1 - half + 1, 2) - 1)) {
        wk.theta = B::mod(-*p1, 2);
        return wk;
      }
    }
    // Directions continuous in both admit any real multiple.
    auto p1 = t1.forced_phase(w);
    auto p2 = t2.forced_phase(w);
    if (p1 && p2) {
      auto d = B::mod(*p2 - *p1, 2);
      if (!B::is_zero(d) && !B::is_zero(d - 2)) {
        auto t = half / d;
        auto wt = pauli_power(w, t);
        auto q1 = t1.forced_phase(wt), q2 = t2.forced_phase(wt);
        if (q1 && q2 && B::is_zero(B::mod(*q2 - *q1 - half + 1, 2) - 1)) {
          wt.theta = B::mod(-*q1, 2);
          return wt;
        }
      }
    }
  }
  return std::nullopt;
}

template <class B>
struct DistinguishingSequence {
  PauliWord<B> m1, m2;
  std::string branch;  ///< "pair", "single_j" or "single_i"
  int i = 0, j = 0;
  typename B::value_type zeta{};
  UnitSystem units{};
};

/// First (i, j), i < j, where the adjacency matrices differ.
template <class B>
std::optional<std::pair<int, int>> find_differing_edge(const std::vector<std::vector<typename B::value_type>>& e1,
                                                       const std::vector<std::vector<typename B::value_type>>& e2) {
  int n = static_cast<int>(e1.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!B::equal(e1[i][j], e2[i][j])) return std::make_pair(i, j);
  return std::nullopt;
}

/// Units in which the alpha-scaled graph stabilizers have rational vectors:
/// g_q = g_p = alpha with alpha^2 = pi / (2|zeta|).
inline UnitSystem lemma_units(const Rational& zeta) {
  UnitSystem us;
  us.kappa = 1 / (2 * abs(zeta));
  us.g_q_value = std::sqrt(kPi * to_double(us.kappa));
  return us;
}

/// Length-two distinguishing sequence for the states of tableaux t1, t2
/// (graph states with adjacency e1, e2) against the base state t0.
template <class B>
DistinguishingSequence<B> distinguishing_sequence(const StabilizerTableau<B>& t0,
                                                  const StabilizerTableau<B>& t1,
                                                  const StabilizerTableau<B>& t2,
                                                  const std::vector<std::vector<typename B::value_type>>& e1,
                                                  const std::vector<std::vector<typename B::value_type>>& e2) {
  using T = typename B::value_type;
  using Word = PauliWord<B>;
  int n = t1.n;
  auto edge = find_differing_edge<B>(e1, e2);
  if (!edge) throw std::invalid_argument("graphs are equal modulo pi");
  auto [i, j] = *edge;
  DistinguishingSequence<B> ds;
  ds.i = i;
  ds.j = j;
  ds.zeta = e1[i][j] - e2[i][j];
  ds.units = t1.units;
  T scale;
  if constexpr (std::is_same_v<B, Exact>) {
    scale = Rational(1);
  } else {
    scale = std::sqrt(kPi / (2 * std::fabs(ds.zeta)));
  }
  auto stab = [&](const StabilizerTableau<B>& t, const std::vector<std::vector<T>>& e, int k) {
    std::vector<T> v(2 * n, B::zero());
    for (int l = 0; l < n; ++l) v[l] = 2 * scale * e[k][l];
    v[n + k] = -2 * scale;
    auto lam = t.eigenphase(v);
    if (!lam) throw std::invalid_argument("graph stabilizer not in the tableau");
    return Word::from_vector(v, B::mod(-*lam, 2), t.units);
  };
  Word si1 = stab(t1, e1, i), sj1 = stab(t1, e1, j);
  Word si2 = stab(t2, e2, i), sj2 = stab(t2, e2, j);
  auto diffvec = [&](const Word& x, const Word& y) {
    auto v = x.vec();
    auto w = y.vec();
    for (std::size_t k = 0; k < v.size(); ++k) v[k] -= w[k];
    return v;
  };
  auto vi = diffvec(si1, si2), vj = diffvec(sj1, sj2);
  struct Cand {
    std::string name;
    std::vector<T> m1;
    Word m2;
  };
  std::vector<T> vij = vi;
  for (std::size_t k = 0; k < vij.size(); ++k) vij[k] += vj[k];
  std::vector<Cand> cands = {{"pair", vij, pauli_mul(si1, sj1)},
                             {"single_j", vj, sj1},
                             {"single_i", vi, si1}};
  for (auto& c : cands) {
    auto phi0 = t0.eigenphase(c.m1);
    if (!phi0) continue;
    Word m1 = Word::from_vector(c.m1, B::mod(-*phi0, 2), t1.units);
    auto a = t1, b = t2;
    auto oa = a.measure_pauli(m1, Draw<B>::force(B::zero()));
    auto ob = b.measure_pauli(m1, Draw<B>::force(B::zero()));
    if (!oa.consistent || !ob.consistent) continue;
    auto pa = a.forced_phase(c.m2), pb = b.forced_phase(c.m2);
    if (!pa || !pb) continue;
    auto d = B::mod(*pb - *pa + 1, 2) - 1;
    if (B::is_zero(d)) continue;
    ds.m1 = m1;
    ds.m2 = c.m2;
    ds.branch = c.name;
    return ds;
  }
  throw std::logic_error("no distinguishing branch found");
}

/// Graph-spec form: the base state is the zero-center position eigenstate.
template <class B>
DistinguishingSequence<B> distinguishing_sequence(const GraphSpec<B>& g1, const GraphSpec<B>& g2) {
  auto edge = find_differing_edge<B>(g1.adjacency, g2.adjacency);
  if (!edge) throw std::invalid_argument("graphs are equal modulo pi");
  UnitSystem us;
  if constexpr (std::is_same_v<B, Exact>) {
    us = lemma_units(g1.adjacency[edge->first][edge->second] - g2.adjacency[edge->first][edge->second]);
  }
  auto t0 = StabilizerTableau<B>::init_squeezed(g1.n(), us);
  auto t1 = StabilizerTableau<B>::from_graph(g1, us);
  auto t2 = StabilizerTableau<B>::from_graph(g2, us);
  return distinguishing_sequence(t0, t1, t2, g1.adjacency, g2.adjacency);
}

// ------------------------------------------------------------ transcripts

template <class B>
nlohmann::json transcript_record(int step, MeasurementKind kind,
                                 const std::vector<typename B::value_type>& vec,
                                 const MeasurementOutcome<B>& out) {
  nlohmann::json j;
  j["step"] = step;
  j["kind"] = kind == MeasurementKind::NULLIFIER ? "nullifier" : "pauli";
  j["vector"] = StabilizerTableau<B>::vec_json(vec);
  j["outcome"] = StabilizerTableau<B>::phase_json(out.value);
  j["deterministic"] = out.deterministic;
  return j;
}

}  // namespace crnn
