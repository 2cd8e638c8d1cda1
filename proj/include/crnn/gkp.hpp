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

#include <iostream>
#include <vector>

#include "crnn/gaussian.hpp"

namespace crnn {

/// Uniform superposition over Gaussian branches centered at alpha + J*l.
struct GKPLatticeState {
  int n = 0;
  Mat A;       ///< branch adjacency (positive definite)
  Mat J;       ///< lattice, columns are lattice vectors
  VecX alpha;  ///< center offsets

  static GKPLatticeState make(Mat A, Mat J, VecX alpha) {
    GKPLatticeState s;
    s.n = static_cast<int>(A.rows());
    s.A = std::move(A);
    s.J = std::move(J);
    s.alpha = std::move(alpha);
    s.check();
    return s;
  }

  void check() const {
    if (A.rows() != n || A.cols() != n || J.rows() != n || J.cols() != n || alpha.size() != n)
      throw std::invalid_argument("lattice state shape mismatch");
    if (n == 0) return;
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, A.cwiseAbs().maxCoeff()))
      throw NumericalError("A is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    if (es.eigenvalues().minCoeff() <= 0) throw NumericalError("A is not positive definite");
    if (std::fabs(J.determinant()) <= 1e-8) throw NumericalError("lattice J is singular");
  }

  nlohmann::json to_json() const {
    auto mat = [](const Mat& m) {
      nlohmann::json a = nlohmann::json::array();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json r = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        a.push_back(r);
      }
      return a;
    };
    return {{"A", mat(A)}, {"J", mat(J)}, {"alpha", std::vector<double>(alpha.data(), alpha.data() + n)}};
  }
};

inline GKPLatticeState apply_symplectic(const GKPLatticeState& s, const RestrictedSymplectic& w) {
  if (w.W.rows() != s.n || w.W.cols() != s.n) throw std::invalid_argument("symplectic shape mismatch");
  if (std::fabs(w.W.determinant()) <= w.det_floor) throw NumericalError("near-singular W");
  Mat winvT = guarded_inverse(w.W).transpose();
  GKPLatticeState out;
  out.n = s.n;
  out.A = w.W * s.A * w.W.transpose();
  out.alpha = winvT * s.alpha;
  out.J = winvT * s.J;
  return out;
}

struct LatticeReadout {
  Mat L_out;   ///< m x m measured block of the lattice
  VecX c_out;  ///< measured centers
};

struct LatticeMeasurement {
  LatticeReadout readout;
  GKPLatticeState post;  ///< n = 0 when every mode was measured
};

/// Position readout of `modes`. The surviving lattice is the Schur
/// complement J_HH - J_HY J_YY^{-1} J_YH of the current lattice.
inline LatticeMeasurement measure_lattice(const GKPLatticeState& s, const std::vector<int>& modes,
                                          double max_cond = 1e12) {
  if (modes.empty()) throw std::invalid_argument("no modes to measure");
  auto rest = complement(s.n, modes);
  Mat PY = selector(s.n, modes);
  LatticeMeasurement r;
  Mat JYY = PY * s.J * PY.transpose();
  r.readout.L_out = JYY;
  r.readout.c_out = PY * s.alpha;
  if (!rest.empty()) {
    Mat PH = selector(s.n, rest);
    Mat JHY = PH * s.J * PY.transpose();
    Mat JYH = PY * s.J * PH.transpose();
    Mat JHH = PH * s.J * PH.transpose();
    Mat schur = JHH - JHY * guarded_inverse(JYY, max_cond) * JYH;
    r.post.n = static_cast<int>(rest.size());
    r.post.A = PH * s.A * PH.transpose();
    r.post.alpha = PH * s.alpha;
    r.post.J = schur;
  }
  return r;
}

/// Same readout with a restricted map applied first.
inline LatticeMeasurement measure_lattice(const GKPLatticeState& s, const RestrictedSymplectic& w,
                                          const std::vector<int>& modes) {
  return measure_lattice(apply_symplectic(s, w), modes);
}

/// Frame for brute-force fiber enumeration: branch centers W^{-T}(c_q + L l).
struct LatticeFrame {
  Mat W, L;
  VecX c_q;
};

using IntPoint = std::vector<long long>;

/// Every l in [-box, box]^N whose measured centers equal y to 1e-9.
inline std::vector<IntPoint> enumerate_fiber(const LatticeFrame& f, const std::vector<int>& modes,
                                             const VecX& y, int box, double tol = 1e-9) {
  if (box < 1) throw std::invalid_argument("box must be at least 1");
  const int N = static_cast<int>(f.W.rows());
  if (N > 6) throw std::invalid_argument("fiber enumeration limited to 6 modes");
  double count = std::pow(2.0 * box + 1.0, N);
  if (count > 1e7) throw std::invalid_argument("enumeration box too large");
  Mat winvT = guarded_inverse(f.W).transpose();
  Mat PY = selector(N, modes);
  Mat M = PY * winvT * f.L;
  VecX base = PY * winvT * f.c_q - y;
  std::vector<IntPoint> out;
  IntPoint l(N, -box);
  VecX lv(N);
  while (true) {
    for (int i = 0; i < N; ++i) lv(i) = static_cast<double>(l[i]);
    if ((base + M * lv).cwiseAbs().maxCoeff() <= tol) out.push_back(l);
    int k = 0;
    while (k < N && l[k] == box) l[k++] = -box;
    if (k == N) break;
    ++l[k];
  }
  return out;
}

/// Whether distinct consistent l have distinct hidden parts; warns otherwise.
inline bool fiber_injective(const std::vector<IntPoint>& fiber, const std::vector<int>& hidden) {
  std::vector<IntPoint> keys;
  for (const auto& l : fiber) {
    IntPoint k;
    for (int h : hidden) k.push_back(l[h]);
    keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  bool ok = std::adjacent_find(keys.begin(), keys.end()) == keys.end();
  if (!ok) std::clog << "warning: hidden lattice labels do not identify the measured branch\n";
  return ok;
}

}  // namespace crnn
