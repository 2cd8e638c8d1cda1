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

#include <cmath>

#include "crnn/gkp.hpp"

using namespace crnn;

namespace {

const double kTwoPi = 2 * std::acos(-1.0);

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Mat random_int_matrix(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(-1, 2);
  while (true) {
    Mat w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) w(i, j) = d(rng);
    if (std::fabs(w.determinant()) > 0.5) return w;
  }
}

}  // namespace

TEST_CASE("lattice symplectic update", "[gkp]") {
  auto s = GKPLatticeState::make(Mat::Identity(2, 2), kTwoPi * Mat::Identity(2, 2), VecX::Zero(2));
  auto same = apply_symplectic(s, {Mat::Identity(2, 2)});
  CHECK(max_abs(same.J - s.J) == 0);
  auto t = apply_symplectic(s, {2 * Mat::Identity(2, 2)});
  CHECK(max_abs(t.J - 0.5 * kTwoPi * Mat::Identity(2, 2)) < 1e-12);
  CHECK(max_abs(t.A - 4 * s.A) < 1e-12);
  CHECK_THROWS_AS(apply_symplectic(s, {Mat::Zero(2, 2)}), NumericalError);
}

TEST_CASE("branches follow the gaussian update", "[gkp]") {
  std::mt19937_64 rng(3);
  Mat W = random_int_matrix(3, rng) + 0.3 * Mat::Identity(3, 3);
  Mat A = Mat::Identity(3, 3);
  A(0, 1) = A(1, 0) = 0.2;
  VecX alpha = VecX::Random(3);
  Mat J = kTwoPi * Mat::Identity(3, 3);
  auto s = GKPLatticeState::make(A, J, alpha);
  auto t = apply_symplectic(s, {W});
  for (int l0 = -2; l0 <= 2; ++l0) {
    VecX l(3);
    l << l0, 1, -l0;
    auto branch = GraphGaussianState::make(A, alpha + J * l);
    auto moved = apply_symplectic(branch, {W});
    CHECK((moved.c_q - (t.alpha + t.J * l)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(max_abs(moved.U - t.A) < 1e-9);
  }
}

TEST_CASE("identity-frame lattice readout", "[gkp]") {
  auto s = GKPLatticeState::make(Mat::Identity(2, 2), kTwoPi * Mat::Identity(2, 2), VecX::Zero(2));
  auto r = measure_lattice(s, {1});
  REQUIRE(r.post.n == 1);
  CHECK(std::fabs(r.post.J(0, 0) - kTwoPi) < 1e-12);
  CHECK(std::fabs(r.readout.L_out(0, 0) - kTwoPi) < 1e-12);
  auto all = measure_lattice(s, {0, 1});
  CHECK(all.post.n == 0);
}

TEST_CASE("fiber enumeration", "[gkp]") {
  LatticeFrame f{Mat::Identity(2, 2), kTwoPi * Mat::Identity(2, 2), VecX::Zero(2)};
  VecX y(1);
  y << kTwoPi;
  auto fib = enumerate_fiber(f, {1}, y, 3);
  CHECK(fib.size() == 7);
  for (const auto& l : fib) CHECK(l[1] == 1);
  y << 1.0;
  CHECK(enumerate_fiber(f, {1}, y, 3).empty());
  CHECK_THROWS(enumerate_fiber(f, {1}, y, 0));
}

TEST_CASE("closed-form post lattice matches enumeration", "[gkp][property]") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> dim(2, 4), scale(1, 2), ld(-2, 2);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    int N = dim(rng);
    std::uniform_int_distribution<int> md(1, N - 1);
    int m = md(rng);
    std::vector<int> modes, hidden;
    for (int i = 0; i < N; ++i) (i >= N - m ? modes : hidden).push_back(i);
    Mat W;
    Mat winvT;
    while (true) {
      W = random_int_matrix(N, rng);
      winvT = W.inverse().transpose();
      Mat PH = selector(N, hidden), PY = selector(N, modes);
      Mat wt = W.transpose();
      if (std::fabs((PH * wt * PH.transpose()).determinant()) > 0.5 &&
          std::fabs((PY * winvT * PY.transpose()).determinant()) > 1e-6)
        break;
    }
    Mat L = Mat::Zero(N, N);
    for (int i = 0; i < N; ++i) L(i, i) = kTwoPi * scale(rng);
    VecX c = VecX::Random(N);
    IntPoint star(N);
    VecX lv(N);
    for (int i = 0; i < N; ++i) {
      star[i] = ld(rng);
      lv(i) = static_cast<double>(star[i]);
    }
    Mat PY = selector(N, modes), PH = selector(N, hidden);
    VecX y = PY * winvT * (c + L * lv);
    auto fib = enumerate_fiber({W, L, c}, modes, y, 5);
    REQUIRE_FALSE(fib.empty());
    CHECK(fiber_injective(fib, hidden));

    auto st = GKPLatticeState::make(Mat::Identity(N, N), L, c);
    auto meas = measure_lattice(st, {W}, modes);
    Mat tYY = PY * winvT * PY.transpose();
    Mat tHY = PH * winvT * PY.transpose();
    VecX shift = tHY * tYY.inverse() * (y - PY * winvT * c);
    Mat LHH = PH * L * PH.transpose();
    // Schur complement equals the inverse transposed hidden block times L_HH.
    Mat expectJ = (PH * W * PH.transpose()).transpose().inverse() * LHH;
    CHECK(max_abs(meas.post.J - expectJ) < 1e-9);
    for (const auto& l : fib) {
      VecX full(N), lh(static_cast<Eigen::Index>(hidden.size()));
      for (int i = 0; i < N; ++i) full(i) = static_cast<double>(l[i]);
      for (std::size_t k = 0; k < hidden.size(); ++k) lh(static_cast<Eigen::Index>(k)) = full(hidden[k]);
      VecX direct = PH * winvT * (c + L * full);
      VecX closed = meas.post.alpha + meas.post.J * lh + shift;
      CHECK((direct - closed).cwiseAbs().maxCoeff() < 1e-9);
      ++checked;
    }
    CHECK(std::fabs(meas.post.J.determinant()) > 1e-8);
  }
  CHECK(checked >= 50);
}
