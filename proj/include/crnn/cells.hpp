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
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crnn/autodiff.hpp"
#include "crnn/gkp.hpp"
#include "crnn/scalar.hpp"

namespace crnn {

enum class CellKind { CRNN, GAUSSIAN, GRU, ORNN };

inline const char* cell_name(CellKind k) {
  switch (k) {
    case CellKind::CRNN: return "crnn";
    case CellKind::GAUSSIAN: return "gaussian";
    case CellKind::GRU: return "gru";
    case CellKind::ORNN: return "ornn";
  }
  return "?";
}

inline CellKind cell_from_name(const std::string& s) {
  if (s == "crnn") return CellKind::CRNN;
  if (s == "gaussian") return CellKind::GAUSSIAN;
  if (s == "gru") return CellKind::GRU;
  if (s == "ornn") return CellKind::ORNN;
  throw std::invalid_argument("unknown cell kind '" + s + "'");
}

/// Named parameter matrices; frozen entries receive no updates.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Mat> values;
  std::vector<bool> trainable;

  int add(std::string name, Mat v, bool train = true) {
    names.push_back(std::move(name));
    values.push_back(std::move(v));
    trainable.push_back(train);
    return static_cast<int>(values.size()) - 1;
  }

  std::vector<Mat> zeros() const {
    std::vector<Mat> g;
    for (const auto& v : values) g.push_back(Mat::Zero(v.rows(), v.cols()));
    return g;
  }

  long long trainable_count() const {
    long long c = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (trainable[i]) c += values[i].size();
    return c;
  }
};

inline Mat glorot_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> u(-lim, lim);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

inline Mat normal_matrix(Eigen::Index rows, Eigen::Index cols, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, sd);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

/// Trainable-scalar count of one cell.
inline long long param_count(CellKind k, int n, int m) {
  long long N = n, M = m;
  switch (k) {
    case CellKind::CRNN:
    case CellKind::GAUSSIAN: return (N + M) * (N + M) + N * M + M * M;
    case CellKind::GRU: return 3 * (N + M + 1) * N;
    case CellKind::ORNN: return N * (N - 1) / 2 + N * M;
  }
  return 0;
}

/// Smallest GRU width within 2.5% of the CRNN count, else the closest one.
inline int gru_width_for(int n, int m) {
  double target = static_cast<double>(param_count(CellKind::CRNN, n, m));
  int best = 1;
  double best_gap = 1e300;
  for (int h = 1; h <= 4 * (n + m); ++h) {
    double gap = std::fabs(static_cast<double>(param_count(CellKind::GRU, h, m)) - target) / target;
    if (gap <= 0.025) return h;
    if (gap < best_gap) {
      best_gap = gap;
      best = h;
    }
  }
  return best;
}

/// Recurrent state on a tape.
struct CellState {
  ad::Var A, J, alpha;  // lattice cells
  ad::Var h;            // classical cells
};

/// One recurrent cell; parameters live in a shared ParamSet.
class Cell {
 public:
  CellKind kind = CellKind::CRNN;
  int n = 0;  ///< latent size
  int m = 0;  ///< input size
  double delta = 1e-6;  ///< ridge added to A and W_HH before inversion

  // parameter indices
  int W = -1, F = -1, G = -1, Hc = -1, Rc = -1, alpha0 = -1;
  int Wz = -1, bz = -1, Wr = -1, br = -1, Wh = -1, bh = -1, h0 = -1;
  int theta = -1, Ux = -1;
  std::vector<std::pair<int, int>> pairs;

  static Cell create(CellKind kind, int n, int m, ParamSet& ps, std::mt19937_64& rng) {
    if (n < 1 || m < 1) throw std::invalid_argument("cell sizes must be positive");
    Cell c;
    c.kind = kind;
    c.n = n;
    c.m = m;
    int N = n + m;
    switch (kind) {
      case CellKind::CRNN:
      case CellKind::GAUSSIAN: {
        c.W = ps.add("W", Mat::Identity(N, N) + normal_matrix(N, N, 0.1 / std::sqrt(N), rng));
        c.F = ps.add("f", glorot_uniform(n, m, rng));
        c.G = ps.add("g", glorot_uniform(m, m, rng));
        // h and r: frozen dense maps biased so their output has mean identity
        c.Hc = ps.add("h", glorot_uniform(m * m, m, rng), false);
        c.Rc = ps.add("r", glorot_uniform(m * m, m, rng), false);
        c.alpha0 = ps.add("alpha0", normal_matrix(n, 1, 1.0, rng), false);
        break;
      }
      case CellKind::GRU: {
        c.Wz = ps.add("Wz", glorot_uniform(n, m + n, rng));
        c.bz = ps.add("bz", Mat::Zero(n, 1));
        c.Wr = ps.add("Wr", glorot_uniform(n, m + n, rng));
        c.br = ps.add("br", Mat::Zero(n, 1));
        c.Wh = ps.add("Wh", glorot_uniform(n, m + n, rng));
        c.bh = ps.add("bh", Mat::Zero(n, 1));
        c.h0 = ps.add("h0", normal_matrix(n, 1, 1.0, rng), false);
        break;
      }
      case CellKind::ORNN: {
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) c.pairs.emplace_back(i, j);
        std::uniform_real_distribution<double> u(-kPi, kPi);
        Mat th(static_cast<Eigen::Index>(c.pairs.size()), 1);
        for (Eigen::Index k = 0; k < th.rows(); ++k) th(k, 0) = u(rng);
        c.theta = ps.add("theta", th);
        c.Ux = ps.add("U", glorot_uniform(n, m, rng));
        c.h0 = ps.add("h0", normal_matrix(n, 1, 1.0, rng), false);
        break;
      }
    }
    return c;
  }

  bool lattice() const { return kind == CellKind::CRNN || kind == CellKind::GAUSSIAN; }

  int out_dim() const { return lattice() ? m * m + m : n; }

  long long count() const { return param_count(kind, n, m); }

  /// Per-tape leaves and derived matrices shared by every step on the tape.
  struct Frame {
    ad::Var W, WinvT, WHHinvT, F, G, H, R;
    ad::Var Wz, bz, Wr, br, Wh, bh, theta, U;
    Mat vecI;
  };

  Frame begin(ad::Tape& t, const ParamSet& ps) const {
    Frame f;
    if (lattice()) {
      f.W = t.param(W, ps.values[W]);
      f.WinvT = ad::transpose(ad::inverse(f.W));
      if (kind == CellKind::CRNN) {
        auto whh = ad::add_const(ad::block(f.W, 0, 0, n, n), delta * Mat::Identity(n, n));
        f.WHHinvT = ad::transpose(ad::inverse(whh));
      }
      f.F = t.param(F, ps.values[F]);
      f.G = t.param(G, ps.values[G]);
      f.H = t.constant(ps.values[Hc]);
      f.R = t.constant(ps.values[Rc]);
      f.vecI = Mat::Zero(m * m, 1);
      for (int i = 0; i < m; ++i) f.vecI(i * m + i, 0) = 1.0;
    } else if (kind == CellKind::GRU) {
      f.Wz = t.param(Wz, ps.values[Wz]);
      f.bz = t.param(bz, ps.values[bz]);
      f.Wr = t.param(Wr, ps.values[Wr]);
      f.br = t.param(br, ps.values[br]);
      f.Wh = t.param(Wh, ps.values[Wh]);
      f.bh = t.param(bh, ps.values[bh]);
    } else {
      f.theta = t.param(theta, ps.values[theta]);
      f.U = t.param(Ux, ps.values[Ux]);
    }
    return f;
  }

  CellState initial(ad::Tape& t, const ParamSet& ps) const {
    CellState s;
    if (lattice()) {
      s.A = t.constant(Mat::Identity(n, n));
      if (kind == CellKind::CRNN) s.J = t.constant(Mat::Identity(n, n));
      s.alpha = t.constant(ps.values[alpha0]);
    } else {
      s.h = t.constant(ps.values[h0]);
    }
    return s;
  }

  /// One step; updates `s` and returns the output column.
  ad::Var step(ad::Tape& t, const Frame& f, CellState& s, ad::Var x) const {
    using namespace ad;
    switch (kind) {
      case CellKind::CRNN:
      case CellKind::GAUSSIAN: {
        // perform mode shifts
        Var Areg = add_const(s.A, delta * Mat::Identity(n, n));
        Var alpha = add(s.alpha, solve(Areg, matmul(f.F, x)));
        // input register
        Var beta = matmul(f.G, x);
        Var S = reshape(add_const(matmul(f.R, x), f.vecI), m, m);
        Var B = matmul(S, transpose(S));
        // Gaussian operation; only the latent block of W U W^T survives
        Var WHH = block(f.W, 0, 0, n, n);
        Var WHY = block(f.W, 0, n, n, m);
        Var Anew = add(matmul(matmul(WHH, s.A), transpose(WHH)), matmul(matmul(WHY, B), transpose(WHY)));
        Var gamma = matmul(f.WinvT, vcat(alpha, beta));
        Var centers = block(gamma, n, 0, m, 1);
        Var lat;
        if (kind == CellKind::CRNN) {
          Var K = reshape(add_const(matmul(f.H, x), f.vecI), m, m);
          lat = matmul(block(f.WinvT, n, n, m, m), K);
          s.J = matmul(f.WHHinvT, s.J);
        } else {
          lat = t.constant(Mat::Zero(m, m));
        }
        s.A = Anew;
        s.alpha = block(gamma, 0, 0, n, 1);
        return vcat(flatten(lat), centers);
      }
      case CellKind::GRU: {
        Var xh = vcat(x, s.h);
        Var z = sigmoid(add(matmul(f.Wz, xh), f.bz));
        Var r = sigmoid(add(matmul(f.Wr, xh), f.br));
        Var cand = ad::tanh(add(matmul(f.Wh, vcat(x, hadamard(r, s.h))), f.bh));
        s.h = add(hadamard(one_minus(z), s.h), hadamard(z, cand));
        return s.h;
      }
      case CellKind::ORNN: {
        s.h = add(givens_apply(s.h, f.theta, pairs), matmul(f.U, x));
        return s.h;
      }
    }
    throw std::logic_error("unreachable");
  }
};

/// Direct-sum lattice state fed to the W-transform in a CRNN step; used by
/// the decomposition check against gkp_lattice.
inline GKPLatticeState crnn_direct_sum(const Cell& c, const ParamSet& ps, const Mat& A, const Mat& J,
                                       const VecX& alpha, const VecX& x) {
  int n = c.n, m = c.m;
  Mat Areg = A + c.delta * Mat::Identity(n, n);
  VecX a = alpha + Areg.partialPivLu().solve(ps.values[c.F] * x);
  VecX beta = ps.values[c.G] * x;
  VecX kx = ps.values[c.Hc] * x, rx = ps.values[c.Rc] * x;
  Mat K(m, m), S(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      K(i, j) = kx(i * m + j) + (i == j ? 1.0 : 0.0);
      S(i, j) = rx(i * m + j) + (i == j ? 1.0 : 0.0);
    }
  GKPLatticeState s;
  s.n = n + m;
  s.A = Mat::Zero(n + m, n + m);
  s.A.topLeftCorner(n, n) = A;
  s.A.bottomRightCorner(m, m) = S * S.transpose();
  s.J = Mat::Zero(n + m, n + m);
  s.J.topLeftCorner(n, n) = J;
  s.J.bottomRightCorner(m, m) = K;
  s.alpha = VecX(n + m);
  s.alpha << a, beta;
  return s;
}

// ------------------------------------------------------------ checkpoints

/// Writes `<stem>.bin` (raw little-endian doubles, parameter order) and
/// `<stem>.json` (manifest).
inline void save_checkpoint(const std::string& stem, const ParamSet& ps, nlohmann::json manifest) {
  std::ofstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + stem + ".bin");
  nlohmann::json shapes = nlohmann::json::array();
  for (std::size_t i = 0; i < ps.values.size(); ++i) {
    const Mat& v = ps.values[i];
    shapes.push_back({{"name", ps.names[i]}, {"rows", v.rows()}, {"cols", v.cols()},
                      {"trainable", static_cast<bool>(ps.trainable[i])}});
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  }
  manifest["shapes"] = shapes;
  std::ofstream js(stem + ".json");
  js << manifest.dump(2) << "\n";
}

inline nlohmann::json load_checkpoint(const std::string& stem, ParamSet& ps) {
  std::ifstream js(stem + ".json");
  if (!js) throw std::runtime_error("cannot read " + stem + ".json");
  nlohmann::json manifest = nlohmann::json::parse(js);
  const auto& shapes = manifest.at("shapes");
  if (shapes.size() != ps.values.size()) throw std::runtime_error("checkpoint layout mismatch");
  std::ifstream bin(stem + ".bin", std::ios::binary);
  for (std::size_t i = 0; i < ps.values.size(); ++i) {
    Mat& v = ps.values[i];
    if (shapes[i].at("rows").get<Eigen::Index>() != v.rows() || shapes[i].at("cols").get<Eigen::Index>() != v.cols())
      throw std::runtime_error("checkpoint shape mismatch for " + ps.names[i]);
    bin.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  }
  if (!bin) throw std::runtime_error("truncated checkpoint blob");
  return manifest;
}

}  // namespace crnn
