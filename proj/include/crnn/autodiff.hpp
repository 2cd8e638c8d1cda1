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

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace crnn::ad {

using Mat = Eigen::MatrixXd;

class Tape;

/// Handle to a tape node.
struct Var {
  Tape* t = nullptr;
  int id = -1;
  const Mat& v() const;
  Eigen::Index rows() const { return v().rows(); }
  Eigen::Index cols() const { return v().cols(); }
  double scalar() const { return v()(0, 0); }
};

/// Linear tape; nodes are appended in evaluation order and replayed
/// backwards. Leaves may point at a parameter (whole, or one row of it).
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat&)>;

  struct Node {
    Mat val;
    Mat grad;
    Backward back;
    bool needs = false;
    int param = -1;
    int row = -1;
  };

  std::vector<Node> nodes;

  Var push(Mat val, bool needs, Backward back = nullptr) {
    Node n;
    n.val = std::move(val);
    n.needs = needs;
    n.back = std::move(back);
    nodes.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes.size()) - 1};
  }

  Var constant(Mat val) { return push(std::move(val), false); }

  Var param(int index, const Mat& val) {
    Var v = push(val, true);
    nodes[v.id].param = index;
    return v;
  }

  /// Row `r` of a parameter table, as a column vector.
  Var param_row(int index, const Mat& table, int r) {
    Var v = push(table.row(r).transpose(), true);
    nodes[v.id].param = index;
    nodes[v.id].row = r;
    return v;
  }

  bool needs(Var a) const { return nodes[a.id].needs; }

  void acc(Var a, const Mat& g) {
    auto& n = nodes[a.id];
    if (!n.needs) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  void backward(Var root, double seed = 1.0) {
    acc(root, Mat::Constant(root.rows(), root.cols(), seed));
    for (int i = root.id; i >= 0; --i) {
      auto& n = nodes[i];
      if (!n.needs || n.grad.size() == 0 || !n.back) continue;
      Mat g = n.grad;
      n.back(*this, g);
    }
  }

  /// Add leaf gradients into per-parameter buffers.
  void collect(std::vector<Mat>& grads) const {
    for (const auto& n : nodes) {
      if (n.param < 0 || n.grad.size() == 0) continue;
      if (n.row >= 0) {
        grads[n.param].row(n.row) += n.grad.transpose();
      } else {
        grads[n.param] += n.grad;
      }
    }
  }
};

inline const Mat& Var::v() const { return t->nodes[id].val; }

inline bool any_needs(std::initializer_list<Var> vs) {
  for (const auto& v : vs)
    if (v.t->needs(v)) return true;
  return false;
}

inline Var matmul(Var a, Var b) {
  Tape& t = *a.t;
  return t.push(a.v() * b.v(), any_needs({a, b}), [a, b](Tape& t, const Mat& g) {
    if (t.needs(a)) t.acc(a, g * b.v().transpose());
    if (t.needs(b)) t.acc(b, a.v().transpose() * g);
  });
}

inline Var add(Var a, Var b) {
  Tape& t = *a.t;
  return t.push(a.v() + b.v(), any_needs({a, b}), [a, b](Tape& t, const Mat& g) {
    t.acc(a, g);
    t.acc(b, g);
  });
}

inline Var sub(Var a, Var b) {
  Tape& t = *a.t;
  return t.push(a.v() - b.v(), any_needs({a, b}), [a, b](Tape& t, const Mat& g) {
    t.acc(a, g);
    t.acc(b, -g);
  });
}

inline Var scale(Var a, double s) {
  Tape& t = *a.t;
  return t.push(s * a.v(), t.needs(a), [a, s](Tape& t, const Mat& g) { t.acc(a, s * g); });
}

/// a + c for a constant matrix c.
inline Var add_const(Var a, const Mat& c) {
  Tape& t = *a.t;
  return t.push(a.v() + c, t.needs(a), [a](Tape& t, const Mat& g) { t.acc(a, g); });
}

inline Var transpose(Var a) {
  Tape& t = *a.t;
  return t.push(a.v().transpose(), t.needs(a),
                [a](Tape& t, const Mat& g) { t.acc(a, g.transpose()); });
}

inline Var inverse(Var a) {
  Tape& t = *a.t;
  Mat x = a.v().fullPivLu().inverse();
  return t.push(x, t.needs(a), [a, x](Tape& t, const Mat& g) {
    t.acc(a, -x.transpose() * g * x.transpose());
  });
}

/// a^{-1} b through an LU factorization.
inline Var solve(Var a, Var b) {
  Tape& t = *a.t;
  Eigen::PartialPivLU<Mat> lu(a.v());
  Mat x = lu.solve(b.v());
  return t.push(x, any_needs({a, b}), [a, b, x](Tape& t, const Mat& g) {
    Mat gb = a.v().transpose().partialPivLu().solve(g);
    t.acc(b, gb);
    if (t.needs(a)) t.acc(a, -gb * x.transpose());
  });
}

inline Var block(Var a, Eigen::Index r, Eigen::Index c, Eigen::Index h, Eigen::Index w) {
  Tape& t = *a.t;
  Eigen::Index R = a.rows(), C = a.cols();
  return t.push(a.v().block(r, c, h, w), t.needs(a), [a, r, c, h, w, R, C](Tape& t, const Mat& g) {
    Mat full = Mat::Zero(R, C);
    full.block(r, c, h, w) = g;
    t.acc(a, full);
  });
}

inline Var direct_sum(Var a, Var b) {
  Tape& t = *a.t;
  Eigen::Index ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
  Mat v = Mat::Zero(ar + br, ac + bc);
  v.topLeftCorner(ar, ac) = a.v();
  v.bottomRightCorner(br, bc) = b.v();
  return t.push(v, any_needs({a, b}), [a, b, ar, ac, br, bc](Tape& t, const Mat& g) {
    t.acc(a, g.topLeftCorner(ar, ac));
    t.acc(b, g.bottomRightCorner(br, bc));
  });
}

/// Stack rows: [a; b].
inline Var vcat(Var a, Var b) {
  Tape& t = *a.t;
  Eigen::Index ar = a.rows(), br = b.rows();
  Mat v(ar + br, a.cols());
  v << a.v(), b.v();
  return t.push(v, any_needs({a, b}), [a, b, ar, br](Tape& t, const Mat& g) {
    t.acc(a, g.topRows(ar));
    t.acc(b, g.bottomRows(br));
  });
}

inline Var hadamard(Var a, Var b) {
  Tape& t = *a.t;
  return t.push(a.v().cwiseProduct(b.v()), any_needs({a, b}), [a, b](Tape& t, const Mat& g) {
    if (t.needs(a)) t.acc(a, g.cwiseProduct(b.v()));
    if (t.needs(b)) t.acc(b, g.cwiseProduct(a.v()));
  });
}

inline Var sigmoid(Var a) {
  Tape& t = *a.t;
  Mat y = a.v().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return t.push(y, t.needs(a), [a, y](Tape& t, const Mat& g) {
    t.acc(a, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

inline Var tanh(Var a) {
  Tape& t = *a.t;
  Mat y = a.v().array().tanh().matrix();
  return t.push(y, t.needs(a), [a, y](Tape& t, const Mat& g) {
    t.acc(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

/// 1 - a, elementwise.
inline Var one_minus(Var a) {
  Tape& t = *a.t;
  return t.push((1.0 - a.v().array()).matrix(), t.needs(a),
                [a](Tape& t, const Mat& g) { t.acc(a, -g); });
}

/// Row-major flattening into a column vector.
inline Var flatten(Var a) {
  Tape& t = *a.t;
  Eigen::Index R = a.rows(), C = a.cols();
  Mat v(R * C, 1);
  for (Eigen::Index i = 0; i < R; ++i)
    for (Eigen::Index j = 0; j < C; ++j) v(i * C + j, 0) = a.v()(i, j);
  return t.push(v, t.needs(a), [a, R, C](Tape& t, const Mat& g) {
    Mat ga(R, C);
    for (Eigen::Index i = 0; i < R; ++i)
      for (Eigen::Index j = 0; j < C; ++j) ga(i, j) = g(i * C + j, 0);
    t.acc(a, ga);
  });
}

/// Column vector to an R x C matrix, row-major.
inline Var reshape(Var a, Eigen::Index R, Eigen::Index C) {
  Tape& t = *a.t;
  Mat v(R, C);
  for (Eigen::Index i = 0; i < R; ++i)
    for (Eigen::Index j = 0; j < C; ++j) v(i, j) = a.v()(i * C + j, 0);
  return t.push(v, t.needs(a), [a, R, C](Tape& t, const Mat& g) {
    Mat ga(R * C, 1);
    for (Eigen::Index i = 0; i < R; ++i)
      for (Eigen::Index j = 0; j < C; ++j) ga(i * C + j, 0) = g(i, j);
    t.acc(a, ga);
  });
}

/// -log softmax(logits)[target] for a column of logits; 1x1 result.
inline Var softmax_ce(Var logits, int target) {
  Tape& t = *logits.t;
  const Mat& z = logits.v();
  double mx = z.maxCoeff();
  Mat e = (z.array() - mx).exp().matrix();
  double s = e.sum();
  Mat p = e / s;
  Mat out(1, 1);
  out(0, 0) = std::log(s) + mx - z(target, 0);
  return t.push(out, t.needs(logits), [logits, p, target](Tape& t, const Mat& g) {
    Mat d = p;
    d(target, 0) -= 1.0;
    t.acc(logits, g(0, 0) * d);
  });
}

/// Sum of all entries, 1x1.
inline Var sum(Var a) {
  Tape& t = *a.t;
  Mat out(1, 1);
  out(0, 0) = a.v().sum();
  Eigen::Index R = a.rows(), C = a.cols();
  return t.push(out, t.needs(a),
                [a, R, C](Tape& t, const Mat& g) { t.acc(a, Mat::Constant(R, C, g(0, 0))); });
}

/// Product of Givens rotations applied to column h; rotation k acts on
/// coordinates pairs[k] with angle theta(k).
inline Var givens_apply(Var h, Var theta, const std::vector<std::pair<int, int>>& pairs) {
  Tape& t = *h.t;
  const std::size_t K = pairs.size();
  std::vector<Mat> states;
  states.reserve(K + 1);
  Mat cur = h.v();
  states.push_back(cur);
  for (std::size_t k = 0; k < K; ++k) {
    auto [i, j] = pairs[k];
    double c = std::cos(theta.v()(static_cast<Eigen::Index>(k), 0));
    double s = std::sin(theta.v()(static_cast<Eigen::Index>(k), 0));
    double xi = cur(i, 0), xj = cur(j, 0);
    cur(i, 0) = c * xi - s * xj;
    cur(j, 0) = s * xi + c * xj;
    states.push_back(cur);
  }
  return t.push(cur, any_needs({h, theta}), [h, theta, pairs, states](Tape& t, const Mat& g) {
    Mat gh = g;
    Mat gt = Mat::Zero(static_cast<Eigen::Index>(pairs.size()), 1);
    for (std::size_t k = pairs.size(); k-- > 0;) {
      auto [i, j] = pairs[k];
      double th = theta.v()(static_cast<Eigen::Index>(k), 0);
      double c = std::cos(th), s = std::sin(th);
      double xi = states[k](i, 0), xj = states[k](j, 0);
      double gi = gh(i, 0), gj = gh(j, 0);
      gt(static_cast<Eigen::Index>(k), 0) = gi * (-s * xi - c * xj) + gj * (c * xi - s * xj);
      gh(i, 0) = c * gi + s * gj;
      gh(j, 0) = -s * gi + c * gj;
    }
    t.acc(h, gh);
    t.acc(theta, gt);
  });
}

}  // namespace crnn::ad
