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

#include <filesystem>
#include <set>

#include "crnn/taskgen.hpp"

using namespace crnn;

namespace {

using EM = RealMatrix<Exact>;

EM pair_matrix(int n, int i, int j, Rational w) {
  EM m(n, std::vector<Rational>(n, Rational(0)));
  m[i][j] = m[j][i] = w;
  return m;
}

template <class B>
void check_rows_commute(const RealMatrix<B>& q) {
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) CHECK(B::is_zero(omega_vec<B>(q[i], q[j], UnitSystem{})));
}

// Rank of a rational matrix by plain elimination.
int rank_of(EM m) {
  int r = 0;
  std::size_t cols = m.empty() ? 0 : m[0].size();
  for (std::size_t c = 0; c < cols && r < static_cast<int>(m.size()); ++c) {
    std::size_t p = static_cast<std::size_t>(r);
    while (p < m.size() && m[p][c] == 0) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[static_cast<std::size_t>(r)]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i == static_cast<std::size_t>(r) || m[i][c] == 0) continue;
      Rational f = m[i][c] / m[static_cast<std::size_t>(r)][c];
      for (std::size_t k = 0; k < cols; ++k) m[i][k] -= f * m[static_cast<std::size_t>(r)][k];
    }
    ++r;
  }
  return r;
}

}  // namespace

TEST_CASE("build_Q examples", "[taskgen]") {
  auto q0 = build_Q<Exact>(EM(2, std::vector<Rational>(2, Rational(0))));
  EM want = {{0, Rational(1, 2), 0, 0}, {Rational(1, 2), 0, 0, 0}};
  CHECK(q0 == want);

  auto qf = build_Q<Float>({{0.0, 0.25}, {0.25, 0.0}});
  CHECK(qf[0][2] == Catch::Approx(0.25 * std::sqrt(2.0)));
  CHECK(qf[1][3] == Catch::Approx(0.25 * std::sqrt(2.0)));
  CHECK(qf[0][3] == 0.0);
  // Irrational norm has no exact form.
  CHECK_THROWS_AS(build_Q<Exact>(pair_matrix(2, 0, 1, Rational(1, 4))), UnitError);

  CHECK_THROWS(build_Q<Exact>(pair_matrix(3, 0, 1, Rational(1, 2))));
  EM loop(2, std::vector<Rational>(2, Rational(0)));
  loop[0][0] = Rational(1, 8);
  CHECK_THROWS(build_Q<Exact>(loop));
  EM asym(2, std::vector<Rational>(2, Rational(0)));
  asym[0][1] = Rational(1, 8);
  CHECK_THROWS(build_Q<Exact>(asym));
}

TEST_CASE("build_Q rows commute and have full rank", "[taskgen][property]") {
  std::mt19937_64 rng(11);
  int exact_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + trial % 5;
    auto bf = random_hollow<Float>(n, rng, 2, 8);
    auto qf = build_Q<Float>(bf);
    check_rows_commute<Float>(qf);
    auto be = random_hollow<Exact>(n, rng, 2, 8);
    EM qe;
    try {
      qe = build_Q<Exact>(be);
    } catch (const UnitError&) {
      continue;
    }
    ++exact_seen;
    check_rows_commute<Exact>(qe);
    CHECK(rank_of(qe) == n);
  }
  CHECK(exact_seen > 10);
}

TEST_CASE("modified transform", "[taskgen]") {
  std::vector<Rational> x = {1, 2, 0, Rational(-1, 2)};
  std::vector<Rational> want = {1, Rational(1, 2), 0, -2};
  CHECK(modified_transform(x) == want);
  std::vector<double> z(6, 0.0);
  CHECK(modified_transform(z) == z);
  std::vector<Rational> pm = {1, -1, 0, 1};
  CHECK(modified_transform(pm) == pm);
}

TEST_CASE("squeezed instance with B = 0", "[taskgen]") {
  std::mt19937_64 rng(3);
  EM zero(2, std::vector<Rational>(2, Rational(0)));
  auto inst = gen_instance<Exact>(2, 0, EdgeSource<Exact>{zero}, rng);
  REQUIRE(inst.outputs.size() == 2);
  for (const auto& o : inst.outputs) {
    CHECK(o.deterministic);
    CHECK(o.value == 0);
  }
}

TEST_CASE("position stabilizer suffix is deterministic", "[taskgen]") {
  std::mt19937_64 rng(4);
  EM zero(2, std::vector<Rational>(2, Rational(0)));
  auto inst = gen_instance<Exact>(2, 0, EdgeSource<Exact>{zero}, rng);
  // Z(1) on each mode and their product.
  inst.inputs.push_back({1, 0, 0, 0});
  inst.inputs.push_back({0, 1, 0, 0});
  inst.inputs.push_back({1, 1, 0, 0});
  inst.k = 3;
  auto t = inst.initial_tableau();
  for (std::size_t r = 0; r < 2; ++r) inst.apply(t, r, Draw<Exact>::force(Rational(0)));
  for (std::size_t r = 2; r < 5; ++r) {
    auto o = inst.apply(t, r, Draw<Exact>::from(rng));
    CHECK(o.deterministic);
    CHECK(o.value == 0);
  }
}

TEST_CASE("generated instances replay consistently", "[taskgen][property]") {
  for (int init = 0; init < 2; ++init) {
    for (int modified = 0; modified < 2; ++modified) {
      InstanceOptions opt;
      opt.init = init ? InitialState::GKP : InitialState::SQUEEZED;
      opt.modified = modified;
      for (std::uint64_t s = 0; s < 10; ++s) {
        auto rng = instance_rng(77, s);
        auto inst = gen_instance<Exact>(2 + static_cast<int>(s % 3), 4, RandomSource{}, rng, opt);
        auto rep = consistency_check(inst, transcript_values(inst));
        CHECK(rep.consistent);
        if (modified) continue;
        // Float is for short ad-hoc runs only.
        auto fr = instance_rng(78, s);
        auto fi = gen_instance<Float>(3, 1, RandomSource{}, fr, opt);
        CHECK(consistency_check(fi, transcript_values(fi)).consistent);
      }
    }
  }
}

TEST_CASE("flipping a forced outcome is caught at that step", "[taskgen]") {
  std::mt19937_64 rng(5);
  EM zero(2, std::vector<Rational>(2, Rational(0)));
  auto inst = gen_instance<Exact>(2, 0, EdgeSource<Exact>{zero}, rng);
  inst.inputs.push_back({1, 1, 0, 0});
  inst.k = 1;
  std::vector<Rational> cand = {0, 0, 0};
  CHECK(consistency_check(inst, cand).consistent);
  cand[2] = 1;
  auto rep = consistency_check(inst, cand);
  CHECK_FALSE(rep.consistent);
  CHECK(rep.first_failure == 2);
  CHECK(rep.steps[2] == StepVerdict::MISMATCH);
  CHECK_THROWS(consistency_check(inst, std::vector<Rational>{0}));

  // Float: 1e-7 off passes, 1e-5 off fails.
  std::mt19937_64 r2(5);
  auto fi = gen_instance<Float>(2, 0, EdgeSource<Float>{{{0.0, 0.0}, {0.0, 0.0}}}, r2);
  fi.inputs.push_back({1.0, 1.0, 0.0, 0.0});
  fi.k = 1;
  CHECK(consistency_check(fi, std::vector<double>{0, 0, 1e-7}).consistent);
  CHECK_FALSE(consistency_check(fi, std::vector<double>{0, 0, 1e-5}).consistent);
}

namespace {

// Any single answer pair shared by all three members fails on one of them.
template <class B>
void check_no_shared_answer(const AdversarialTriple<B>& tr) {
  auto so = suffix_outcomes(tr);
  std::vector<typename B::value_type> answers;
  for (const auto& p : so) answers.push_back(p.second);
  answers.push_back(B::zero());
  answers.push_back(B::from_rational(Rational(1, 2)));
  for (const auto& a2 : answers) {
    int failures = 0;
    for (int i = 0; i < 3; ++i) {
      auto cand = transcript_values(tr.instances[i]);
      cand.back() = a2;
      if (!consistency_check(tr.instances[i], cand).consistent) ++failures;
    }
    CHECK(failures >= 1);
  }
}

}  // namespace

TEST_CASE("two-vertex triple with weights 0, 1, 2", "[taskgen]") {
  std::mt19937_64 rng(6);
  auto g1 = GraphSpec<Exact>::zero_centers({{0, 1}, {1, 0}});
  auto g2 = GraphSpec<Exact>::zero_centers({{0, 2}, {2, 0}});
  auto tr = triple_from_graphs(g1, g2, rng);
  for (const auto& inst : tr.instances) {
    CHECK(inst.inputs.size() == 4);
    CHECK(consistency_check(inst, transcript_values(inst)).consistent);
  }
  auto so = suffix_outcomes(tr);
  CHECK_FALSE(phases_equal<Exact>(so[1].second, so[2].second));
  check_no_shared_answer(tr);
  CHECK_THROWS(triple_from_graphs(g1, g1, rng));
}

TEST_CASE("adversarial triples", "[taskgen][property]") {
  for (int n = 3; n <= 5; ++n) {
    for (std::uint64_t s = 0; s < 4; ++s) {
      auto rng = instance_rng(100 + static_cast<std::uint64_t>(n), s);
      TripleStats st;
      auto tr = gen_adversarial_triple<Exact>(n, rng, 10000, &st);
      CHECK(st.draws >= 1);
      for (const auto& inst : tr.instances) CHECK(consistency_check(inst, transcript_values(inst)).consistent);
      // B = 0 keeps the position-squeezed state: all prefix outcomes forced.
      for (int r = 0; r < n; ++r) CHECK(tr.instances[0].outputs[static_cast<std::size_t>(r)].deterministic);
      CHECK(tr.edges[1] != tr.edges[2]);
      auto so = suffix_outcomes(tr);
      CHECK_FALSE((phases_equal<Exact>(so[0].second, so[1].second) &&
                   phases_equal<Exact>(so[1].second, so[2].second)));
      check_no_shared_answer(tr);
    }
  }
  // Rejection path: n = 2 with exact norms never succeeds.
  std::mt19937_64 rng(1);
  TripleStats st;
  CHECK_THROWS(gen_adversarial_triple<Exact>(2, rng, 200, &st));
  CHECK(st.rejected_zero + st.rejected_norm > 0);
  // The float backend handles n = 2.
  auto fr = gen_adversarial_triple<Float>(2, rng);
  for (const auto& inst : fr.instances) CHECK(consistency_check(inst, transcript_values(inst)).consistent);
}

TEST_CASE("dataset determinism and jsonl round trip", "[taskgen]") {
  InstanceOptions opt;
  opt.modified = true;
  auto a = gen_dataset<Exact>(6, 3, 3, 9, opt);
  auto b = gen_dataset<Exact>(6, 3, 3, 9, opt);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(to_json(a[i]) == to_json(b[i]));
  auto path = std::filesystem::temp_directory_path() / "crnn_taskgen_rt.jsonl";
  write_jsonl(path.string(), a);
  auto back = read_jsonl<Exact>(path.string());
  REQUIRE(back.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(to_json(back[i]) == to_json(a[i]));
    CHECK(back[i].inputs == a[i].inputs);
    CHECK(consistency_check(back[i], transcript_values(back[i])).consistent);
  }
  auto f = gen_dataset<Float>(3, 2, 2, 9);
  auto fp = std::filesystem::temp_directory_path() / "crnn_taskgen_rtf.jsonl";
  write_jsonl(fp.string(), f);
  auto fb = read_jsonl<Float>(fp.string());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(fb[i].inputs == f[i].inputs);
  CHECK_THROWS(read_jsonl<Exact>(fp.string()));
  std::filesystem::remove(path);
  std::filesystem::remove(fp);
}
