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

#include <catch_amalgamated.hpp>

#include <random>

#include "crnn/tableau.hpp"

using namespace crnn;

namespace {

std::vector<Rational> rv(std::initializer_list<long long> xs) {
  std::vector<Rational> v;
  for (auto x : xs) v.emplace_back(x);
  return v;
}

bool is_det(const Membership& m, double phase) {
  auto* d = std::get_if<Deterministic>(&m);
  return d && std::fabs(d->phase - phase) < 1e-12;
}

}  // namespace

TEST_CASE("squeezed state basics", "[tableau]") {
  auto t = ExactTableau::init_squeezed(2);
  CHECK(t.continuous.size() == 2);
  CHECK(t.invariants_hold());
  CHECK(is_det(t.contains(Z<Exact>(2, 0, Rational(3, 7))), 0.0));
  CHECK(std::holds_alternative<Clash>(t.contains(X<Exact>(2, 0, Rational(1)))));
  CHECK_THROWS(ExactTableau::init_squeezed(0));

  std::mt19937_64 rng(1);
  auto o = t.measure_nullifier(rv({1, 0, 0, 0}), Draw<Exact>::from(rng));
  CHECK(o.deterministic);
  CHECK(o.value == 0);
  CHECK(t.continuous.size() == 2);
}

TEST_CASE("conjugate nullifier replaces q1", "[tableau]") {
  auto t = ExactTableau::init_squeezed(2);
  std::mt19937_64 rng(7);
  auto o = t.measure_nullifier(rv({0, 0, 1, 0}), Draw<Exact>::from(rng));
  CHECK_FALSE(o.deterministic);
  REQUIRE(t.continuous.size() == 2);
  // q2 survives, p1 is added with its outcome as center.
  CHECK(t.continuous[0].u == rv({0, 1, 0, 0}));
  CHECK(t.continuous[1].u == rv({0, 0, 1, 0}));
  CHECK(t.continuous[1].center == o.value);
  auto again = t.measure_nullifier(rv({0, 0, 2, 0}), Draw<Exact>::from(rng));
  CHECK(again.deterministic);
  CHECK(again.value == 2 * o.value);
  CHECK(t.invariants_hold());
}

TEST_CASE("gkp state", "[tableau]") {
  auto t = ExactTableau::init_gkp(1);
  REQUIRE(t.discrete.size() == 2);
  CHECK(omega(t.discrete[0], t.discrete[1]) == -4);
  CHECK(t.invariants_hold());

  auto eq = ExactWord::identity(1, t.units);
  eq.a[0] = 1;
  CHECK(is_det(t.contains(eq), 0.0));
  auto half = eq;
  half.a[0] = Rational(1, 2);
  // e^{iq/2} anticommutes with the p-shift generator.
  CHECK(std::holds_alternative<Clash>(t.contains(half)));
  for (int seed = 0; seed < 20; ++seed) {
    auto s = t;
    std::mt19937_64 rng(seed);
    auto o = s.measure_pauli(half, Draw<Exact>::from(rng));
    CHECK_FALSE(o.deterministic);
    CHECK((o.value == 0 || o.value == 1));
    CHECK(s.invariants_hold());
    auto r = s.measure_pauli(half, Draw<Exact>::from(rng));
    CHECK(r.deterministic);
    CHECK(r.value == o.value);
  }
}

TEST_CASE("measuring a displacement on a squeezed state", "[tableau]") {
  auto t = ExactTableau::init_squeezed(1);
  std::mt19937_64 rng(3);
  auto x1 = X<Exact>(1, 0, Rational(1), t.units);
  auto o = t.measure_pauli(x1, Draw<Exact>::from(rng));
  CHECK_FALSE(o.deterministic);
  CHECK(t.continuous.empty());
  REQUIRE(t.discrete.size() == 2);
  CHECK(t.invariants_hold());
  // The q direction becomes a lattice with spacing 4/omega.
  auto w = omega_vec<Exact>(rv({1, 0}), x1.vec(), t.units);
  auto lat = ExactWord::from_vector({Rational(4) / w, Rational(0)}, 0, t.units);
  CHECK(is_det(t.contains(lat), 0.0));
  auto r = t.measure_pauli(x1, Draw<Exact>::from(rng));
  CHECK(r.deterministic);
  CHECK(r.value == o.value);
}

TEST_CASE("forced outcomes condition the state", "[tableau]") {
  auto t = ExactTableau::init_gkp(1);
  auto half = ExactWord::identity(1, t.units);
  half.a[0] = Rational(1, 2);
  auto bad = t;
  CHECK_FALSE(bad.measure_pauli(half, Draw<Exact>::force(Rational(1, 2))).consistent);
  auto good = t;
  CHECK(good.measure_pauli(half, Draw<Exact>::force(Rational(1))).consistent);
  CHECK(is_det(good.contains(half), 1.0));
}

TEST_CASE("identity word is rejected", "[tableau]") {
  auto t = ExactTableau::init_squeezed(1);
  std::mt19937_64 rng(0);
  CHECK_THROWS_AS(t.measure_pauli(ExactWord::identity(1, t.units), Draw<Exact>::from(rng)),
                  std::invalid_argument);
  CHECK_THROWS_AS(t.measure_nullifier(rv({0, 0}), Draw<Exact>::from(rng)), std::invalid_argument);
}

TEST_CASE("replay determinism and idempotence", "[tableau][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    auto t = (trial % 2) ? ExactTableau::init_squeezed(2) : ExactTableau::init_gkp(2);
    for (int step = 0; step < 4; ++step) {
      std::vector<Rational> v(4);
      bool nz = false;
      for (auto& x : v) {
        x = Rational(d(rng), 2);
        nz = nz || x != 0;
      }
      if (!nz) continue;
      auto p = ExactWord::from_vector(v, Rational(d(rng), 4), t.units);
      auto o = t.measure_pauli(p, Draw<Exact>::from(rng));
      REQUIRE(t.invariants_hold());
      auto again = t.measure_pauli(p, Draw<Exact>::from(rng));
      CHECK(again.deterministic);
      CHECK(again.value == o.value);
      for (const auto& g : t.discrete) CHECK(is_det(t.contains(g), 0.0));
      for (const auto& c : t.continuous) {
        auto r = t.eigenphase(c.u);
        REQUIRE(r);
        CHECK(*r == rmod(c.center, 2));
      }
    }
  }
}

TEST_CASE("context independence for commuting words", "[tableau][property]") {
  auto t = ExactTableau::init_squeezed(2);
  std::mt19937_64 rng(5);
  t.measure_pauli(X<Exact>(2, 0, Rational(1), t.units), Draw<Exact>::from(rng));
  auto p1 = Z<Exact>(2, 1, Rational(1, 3), t.units);
  auto p2 = pauli_power(t.discrete[0], Rational(2));
  REQUIRE(commute(p1, p2));
  auto a = t.contains(p2);
  REQUIRE(std::holds_alternative<Deterministic>(a));
  auto s = t;
  s.measure_pauli(p1, Draw<Exact>::from(rng));
  auto b = s.contains(p2);
  REQUIRE(std::holds_alternative<Deterministic>(b));
  CHECK(std::get<Deterministic>(a).phase_exact == std::get<Deterministic>(b).phase_exact);
}

TEST_CASE("graph state stabilizers", "[tableau]") {
  GraphSpec<Exact> g = GraphSpec<Exact>::zero_centers({{0, 1}, {1, 0}});
  auto t = ExactTableau::from_graph(g);
  CHECK(t.invariants_hold());
  CHECK(t.eigenphase(rv({0, 1, -1, 0})));
  CHECK_FALSE(t.eigenphase(rv({1, 0, 0, 0})));
}

TEST_CASE("orthogonal witness", "[tableau]") {
  auto t = ExactTableau::init_squeezed(1);
  CHECK_FALSE(orthogonal_witness(t, t));
  std::mt19937_64 rng(2);
  auto x1 = X<Exact>(1, 0, Rational(1), t.units);
  auto a = t, b = t;
  a.measure_pauli(x1, Draw<Exact>::force(Rational(0)));
  b.measure_pauli(x1, Draw<Exact>::force(Rational(1)));
  auto w = orthogonal_witness(a, b);
  REQUIRE(w);
  auto pa = a.forced_phase(*w), pb = b.forced_phase(*w);
  REQUIRE(pa);
  REQUIRE(pb);
  CHECK(rmod(*pb - *pa, 2) == 1);
}

TEST_CASE("distinguishing sequence on two vertices", "[tableau]") {
  auto g1 = GraphSpec<Exact>::zero_centers({{0, 1}, {1, 0}});
  auto g2 = GraphSpec<Exact>::zero_centers({{0, 2}, {2, 0}});
  auto ds = distinguishing_sequence(g1, g2);
  auto t0 = ExactTableau::init_squeezed(2, ds.units);
  auto t1 = ExactTableau::from_graph(g1, ds.units);
  auto t2 = ExactTableau::from_graph(g2, ds.units);
  auto base = t0.forced_phase(ds.m1);
  REQUIRE(base);
  CHECK(*base == 0);
  t1.measure_pauli(ds.m1, Draw<Exact>::force(Rational(0)));
  t2.measure_pauli(ds.m1, Draw<Exact>::force(Rational(0)));
  auto p1 = t1.forced_phase(ds.m2), p2 = t2.forced_phase(ds.m2);
  REQUIRE(p1);
  REQUIRE(p2);
  CHECK(rmod(*p2 - *p1, 2) == 1);
  CHECK_THROWS(distinguishing_sequence(g1, g1));
}

TEST_CASE("float backend agrees on squeezed displacement", "[tableau]") {
  auto t = FloatTableau::init_squeezed(1);
  auto x1 = X<Float>(1, 0, 1.0);
  auto o = t.measure_pauli(x1, Draw<Float>::force(0.25));
  CHECK(o.consistent);
  auto r = t.forced_phase(x1);
  REQUIRE(r);
  CHECK(std::fabs(*r - 0.25) < 1e-9);
  CHECK(t.invariants_hold());
}
