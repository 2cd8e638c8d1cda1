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

#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace crnn {

using Mat = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  double lo = s(s.size() - 1);
  return lo > 0 ? s(0) / lo : std::numeric_limits<double>::infinity();
}

/// Inverse through pivoted LU, refusing badly conditioned input.
inline Mat guarded_inverse(const Mat& m, double max_cond = 1e12) {
  if (condition_number(m) > max_cond) throw NumericalError("matrix condition number above limit");
  return m.fullPivLu().inverse();
}

/// Rows of the identity picked by `idx`.
inline Mat selector(int n, const std::vector<int>& idx) {
  Mat p = Mat::Zero(static_cast<Eigen::Index>(idx.size()), n);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n) throw std::out_of_range("mode index out of range");
    p(static_cast<Eigen::Index>(r), idx[r]) = 1.0;
  }
  return p;
}

inline std::vector<int> complement(int n, const std::vector<int>& idx) {
  std::vector<bool> in(n, false);
  for (int i : idx) {
    if (i < 0 || i >= n) throw std::out_of_range("mode index out of range");
    if (in[i]) throw std::invalid_argument("duplicate mode index");
    in[i] = true;
  }
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (!in[i]) out.push_back(i);
  return out;
}

/// W acting on quadratures as diag(W^T, W^{-1}).
struct RestrictedSymplectic {
  Mat W;
  double det_floor = 1e-8;
};

/// Pure Gaussian state with complex adjacency Z = V + iU and centers.
struct GraphGaussianState {
  int n = 0;
  Mat U, V;
  VecX c_q, c_p;
  double tol = 1e-9;

  static GraphGaussianState make(Mat U, VecX c_q, Mat V = Mat(), VecX c_p = VecX()) {
    GraphGaussianState s;
    s.n = static_cast<int>(U.rows());
    s.U = std::move(U);
    s.V = V.size() ? std::move(V) : Mat::Zero(s.n, s.n);
    s.c_q = std::move(c_q);
    s.c_p = c_p.size() ? std::move(c_p) : VecX::Zero(s.n);
    s.check();
    return s;
  }

  static GraphGaussianState vacuum(int n) { return make(Mat::Identity(n, n), VecX::Zero(n)); }

  bool empty() const { return n == 0; }

  void check() const {
    if (U.rows() != n || U.cols() != n || V.rows() != n || V.cols() != n || c_q.size() != n ||
        c_p.size() != n)
      throw std::invalid_argument("state shape mismatch");
    if (n == 0) return;
    double scale = std::max(1.0, U.cwiseAbs().maxCoeff());
    if ((U - U.transpose()).cwiseAbs().maxCoeff() > tol * scale)
      throw NumericalError("U is not symmetric");
    if ((V - V.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, V.cwiseAbs().maxCoeff()))
      throw NumericalError("V is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(U);
    if (es.eigenvalues().minCoeff() <= tol) throw NumericalError("U is not positive definite");
  }

  std::complex<double> amplitude(const VecX& q) const {
    const double pi = std::acos(-1.0);
    VecX d = q - c_q;
    double re = -0.5 * d.dot(U * d);
    double im = 0.5 * d.dot(V * d) + c_p.dot(q);
    double norm = std::pow(pi, -0.25 * n) * std::pow(U.determinant(), 0.25);
    return norm * std::exp(std::complex<double>(re, im));
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
    auto vec = [](const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    return {{"n", n}, {"U", mat(U)}, {"V", mat(V)}, {"c_q", vec(c_q)}, {"c_p", vec(c_p)}};
  }
};

inline GraphGaussianState apply_symplectic(const GraphGaussianState& s, const RestrictedSymplectic& w) {
  if (w.W.rows() != s.n || w.W.cols() != s.n) throw std::invalid_argument("symplectic shape mismatch");
  if (!s.V.isZero(s.tol)) throw std::invalid_argument("restricted evolution needs V = 0");
  if (std::fabs(w.W.determinant()) <= w.det_floor) throw NumericalError("near-singular W");
  Mat winvT = guarded_inverse(w.W).transpose();
  GraphGaussianState out = s;
  out.U = w.W * s.U * w.W.transpose();
  out.c_q = winvT * s.c_q;
  out.check();
  return out;
}

struct HomodyneResult {
  VecX outcomes;
  GraphGaussianState post;  ///< empty (n = 0) when every mode was measured
};

/// q-homodyne on `modes`. `scale` multiplies the quoted covariance and
/// `squeeze_scale` multiplies U before sampling.
inline HomodyneResult homodyne_sample(const GraphGaussianState& s, const std::vector<int>& modes,
                                      std::mt19937_64& rng, double scale = 1.0,
                                      double squeeze_scale = 1.0) {
  if (modes.empty()) throw std::invalid_argument("no modes to measure");
  if (!s.V.isZero(s.tol)) throw std::invalid_argument("homodyne sampling needs V = 0");
  auto rest = complement(s.n, modes);
  Mat PY = selector(s.n, modes);
  Mat Uinv = guarded_inverse(squeeze_scale * s.U);
  Mat cov = scale * PY * Uinv * PY.transpose();
  VecX mean = PY * s.c_q;
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance not positive definite");
  std::normal_distribution<double> nd(0.0, 1.0);
  VecX z(static_cast<Eigen::Index>(modes.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
  HomodyneResult r;
  r.outcomes = mean + Mat(llt.matrixL()) * z;
  if (!rest.empty()) {
    Mat PH = selector(s.n, rest);
    r.post = GraphGaussianState::make(PH * s.U * PH.transpose(), PH * s.c_q);
  }
  return r;
}

/// Position-space amplitudes at the given points.
inline std::vector<std::complex<double>> wavefunction(const GraphGaussianState& s,
                                                      const std::vector<VecX>& q_points) {
  std::vector<std::complex<double>> out;
  out.reserve(q_points.size());
  for (const auto& q : q_points) {
    if (q.size() != s.n) throw std::invalid_argument("point dimension mismatch");
    out.push_back(s.amplitude(q));
  }
  return out;
}

}  // namespace crnn
