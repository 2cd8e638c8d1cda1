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


// One CRNN step by hand against the cell, on a 2+2 mode register.

#include <cstdio>
#include <random>

#include "crnn/cells.hpp"

int main() {
  using namespace crnn;
  std::mt19937_64 rng(4);
  ParamSet ps;
  auto cell = Cell::create(CellKind::CRNN, 2, 2, ps, rng);
  cell.delta = 0;
  ad::Tape t;
  auto f = cell.begin(t, ps);
  auto s = cell.initial(t, ps);
  Mat x(2, 1);
  x << 0.3, -0.7;
  auto y = cell.step(t, f, s, t.constant(x));
  std::printf("output (%lld values):", static_cast<long long>(y.v().size()));
  for (Eigen::Index i = 0; i < y.v().size(); ++i) std::printf(" %.5f", y.v()(i, 0));
  std::printf("\n");

  auto st = crnn_direct_sum(cell, ps, Mat::Identity(2, 2), Mat::Identity(2, 2), VecX(ps.values[cell.alpha0]), VecX(x));
  auto meas = measure_lattice(apply_symplectic(st, {ps.values[cell.W]}), {2, 3});
  std::printf("readout L_out:\n");
  for (Eigen::Index r = 0; r < meas.readout.L_out.rows(); ++r)
    std::printf("  %.5f %.5f\n", meas.readout.L_out(r, 0), meas.readout.L_out(r, 1));
  std::printf("params: %lld\n", cell.count());
  return 0;
}
