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

#include "crnn/cells.hpp"

using namespace crnn;

namespace {

struct StepOut {
  Mat y, A, J, alpha;
};

StepOut run_step(const Cell& c, const ParamSet& ps, const Mat& A, const Mat& J, const Mat& alpha,
                 const Mat& x) {
  ad::Tape t;
  auto f = c.begin(t, ps);
  CellState s;
  s.A = t.constant(A);
  if (c.kind == CellKind::CRNN) s.J = t.constant(J);
  s.alpha = t.constant(alpha);
  auto y = c.step(t, f, s, t.constant(x));
  StepOut o{y.v(), s.A.v(), Mat(), s.alpha.v()};
  if (c.kind == CellKind::CRNN) o.J = s.J.v();
  return o;
}

Mat spd(int n, std::mt19937_64& rng) {
  Mat a = normal_matrix(n, n, 1.0, rng);
  return a * a.transpose() + Mat::Identity(n, n);
}

/// Loss over a short sequence with fixed random output weights.
double seq_loss(const Cell& c, const ParamSet& ps, const std::vector<Mat>& xs, const Mat& wout,
                std::vector<Mat>* grads) {
  ad::Tape t;
  auto f = c.begin(t, ps);
  auto s = c.initial(t, ps);
  ad::Var total = t.constant(Mat::Zero(1, 1));
  for (const auto& x : xs) {
    auto y = c.step(t, f, s, t.constant(x));
    total = ad::add(total, ad::sum(ad::hadamard(ad::tanh(y), t.constant(wout))));
  }
  if (grads) {
    t.backward(total);
    t.collect(*grads);
  }
  return total.scalar();
}

}  // namespace

TEST_CASE("crnn identity propagation", "[cells]") {
  std::mt19937_64 rng(1);
  ParamSet ps;
  auto c = Cell::create(CellKind::CRNN, 3, 2, ps, rng);
  c.delta = 0;
  ps.values[c.W].setIdentity();
  ps.values[c.F].setZero();
  ps.values[c.G].setZero();
  ps.values[c.Hc].setZero();
  Mat A = spd(3, rng);
  Mat x = normal_matrix(2, 1, 1.0, rng);
  auto o = run_step(c, ps, A, Mat::Identity(3, 3), Mat::Zero(3, 1), x);
  Mat expect(6, 1);
  expect << 1, 0, 0, 1, 0, 0;
  CHECK((o.y - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((o.A - A).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((o.J - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0);
  CHECK(o.alpha.cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("crnn step equals lattice update composition", "[cells]") {
  double worst = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    ParamSet ps;
    int n = 2 + seed % 3, m = 1 + seed % 2;
    auto c = Cell::create(CellKind::CRNN, n, m, ps, rng);
    c.delta = 0;
    ps.values[c.W] += normal_matrix(n + m, n + m, 0.3, rng);
    Mat A = spd(n, rng), J = Mat::Identity(n, n) + normal_matrix(n, n, 0.3, rng);
    Mat alpha = normal_matrix(n, 1, 1.0, rng), x = normal_matrix(m, 1, 1.0, rng);
    auto o = run_step(c, ps, A, J, alpha, x);

    auto st = crnn_direct_sum(c, ps, A, J, alpha, x);
    std::vector<int> ymodes;
    for (int i = n; i < n + m; ++i) ymodes.push_back(i);
    auto meas = measure_lattice(apply_symplectic(st, {ps.values[c.W]}), ymodes);
    Mat y(m * m + m, 1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) y(i * m + j, 0) = meas.readout.L_out(i, j);
    y.bottomRows(m) = meas.readout.c_out;
    worst = std::max({worst, (o.y - y).cwiseAbs().maxCoeff(), (o.A - meas.post.A).cwiseAbs().maxCoeff(),
                      (o.J - meas.post.J).cwiseAbs().maxCoeff(),
                      (o.alpha - meas.post.alpha).cwiseAbs().maxCoeff()});
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("gaussian cell is the lattice-free limit", "[cells]") {
  std::mt19937_64 rng(5);
  ParamSet ps;
  auto c = Cell::create(CellKind::CRNN, 3, 2, ps, rng);
  auto g = c;
  g.kind = CellKind::GAUSSIAN;
  ps.values[c.W] += normal_matrix(5, 5, 0.2, rng);
  Mat A = spd(3, rng), alpha = normal_matrix(3, 1, 1.0, rng), x = normal_matrix(2, 1, 1.0, rng);
  auto oc = run_step(c, ps, A, Mat::Identity(3, 3), alpha, x);
  auto og = run_step(g, ps, A, Mat(), alpha, x);
  CHECK(og.y.topRows(4).cwiseAbs().maxCoeff() == 0);
  CHECK((og.y.bottomRows(2) - oc.y.bottomRows(2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((og.A - oc.A).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(og.y.size() == oc.y.size());

  // centers agree with the homodyne mean of the transformed Gaussian state
  c.delta = 0;
  g.delta = 0;
  auto og0 = run_step(g, ps, A, Mat(), alpha, x);
  auto st = crnn_direct_sum(c, ps, A, Mat::Identity(3, 3), alpha, x);
  auto gs = apply_symplectic(GraphGaussianState::make(st.A, st.alpha), {ps.values[c.W]});
  VecX mean = selector(5, {3, 4}) * gs.c_q;
  CHECK((og0.y.bottomRows(2) - mean).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gru and ornn basics", "[cells]") {
  std::mt19937_64 rng(2);
  ParamSet ps;
  auto c = Cell::create(CellKind::GRU, 4, 3, ps, rng);
  for (int i : {c.Wz, c.bz, c.Wr, c.br, c.Wh, c.bh}) ps.values[i].setZero();
  ad::Tape t;
  auto f = c.begin(t, ps);
  auto s = c.initial(t, ps);
  Mat h0 = s.h.v();
  auto y = c.step(t, f, s, t.constant(normal_matrix(3, 1, 1.0, rng)));
  CHECK((y.v() - 0.5 * h0).cwiseAbs().maxCoeff() < 1e-15);

  ParamSet po;
  auto o = Cell::create(CellKind::ORNN, 5, 2, po, rng);
  CHECK(o.pairs.size() == 10);
  auto apply_q = [&](const Mat& h) {
    ad::Tape tt;
    return ad::givens_apply(tt.constant(h), tt.constant(po.values[o.theta]), o.pairs).v();
  };
  Mat Q(5, 5);
  for (int j = 0; j < 5; ++j) Q.col(j) = apply_q(Mat::Identity(5, 5).col(j));
  CHECK((Q.transpose() * Q - Mat::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-12);
  for (int k = 0; k < 10; ++k) {
    Mat h = normal_matrix(5, 1, 1.0, rng);
    CHECK(std::fabs(apply_q(h).norm() - h.norm()) < 1e-12);
  }
  po.values[o.theta].setZero();
  Mat h = normal_matrix(5, 1, 1.0, rng);
  CHECK((apply_q(h) - h).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("parameter counts", "[cells]") {
  CHECK(param_count(CellKind::CRNN, 4, 3) == 49 + 12 + 9);
  CHECK(param_count(CellKind::GAUSSIAN, 4, 3) == param_count(CellKind::CRNN, 4, 3));
  CHECK(param_count(CellKind::GRU, 4, 3) == 3 * 8 * 4);
  int h = gru_width_for(26, 26);
  double a = static_cast<double>(param_count(CellKind::GRU, h, 26));
  double b = static_cast<double>(param_count(CellKind::CRNN, 26, 26));
  CHECK(std::fabs(a - b) / b <= 0.025);
  for (auto k : {CellKind::CRNN, CellKind::GAUSSIAN, CellKind::GRU, CellKind::ORNN}) {
    std::mt19937_64 rng(0);
    ParamSet ps;
    auto c = Cell::create(k, 4, 3, ps, rng);
    CHECK(ps.trainable_count() == c.count());
  }
}

TEST_CASE("cell gradients match finite differences", "[cells][gradient]") {
  for (auto k : {CellKind::CRNN, CellKind::GAUSSIAN, CellKind::GRU, CellKind::ORNN}) {
    std::mt19937_64 rng(9);
    ParamSet ps;
    auto c = Cell::create(k, 3, 2, ps, rng);
    std::vector<Mat> xs;
    for (int i = 0; i < 3; ++i) xs.push_back(normal_matrix(2, 1, 1.0, rng));
    Mat wout = normal_matrix(c.out_dim(), 1, 1.0, rng);
    auto grads = ps.zeros();
    seq_loss(c, ps, xs, wout, &grads);
    const double h = 1e-5;
    for (std::size_t p = 0; p < ps.values.size(); ++p) {
      if (!ps.trainable[p]) continue;
      Mat fd(ps.values[p].rows(), ps.values[p].cols());
      for (Eigen::Index i = 0; i < fd.size(); ++i) {
        double keep = ps.values[p](i);
        ps.values[p](i) = keep + h;
        double up = seq_loss(c, ps, xs, wout, nullptr);
        ps.values[p](i) = keep - h;
        double dn = seq_loss(c, ps, xs, wout, nullptr);
        ps.values[p](i) = keep;
        fd(i) = (up - dn) / (2 * h);
      }
      double rel = (fd - grads[p]).norm() / std::max({fd.norm(), grads[p].norm(), 1e-12});
      INFO(cell_name(k) << " " << ps.names[p]);
      CHECK(rel <= 1e-4);
    }
  }
}
