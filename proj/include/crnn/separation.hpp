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
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "crnn/cells.hpp"
#include "crnn/seq2seq.hpp"
#include "crnn/taskgen.hpp"

namespace crnn {

/// Outcome classes: k/8 half-turns, k = 0..15.
inline constexpr int kPhaseClasses = 16;

inline int phase_class(const Rational& v) {
  Rational x = rmod(v, Rational(2)) * 8;
  BigInt k = rround(x);
  return static_cast<int>(k.convert_to<long long>() % kPhaseClasses);
}

inline Rational class_phase(int k) { return Rational(k, 8); }

/// One measurement sequence seen by an online classifier.
struct PhaseSequence {
  std::vector<Mat> inputs;  ///< per-step features
  std::vector<int> targets;
};

/// Row features: the unit-normalized row and log(1 + norm).
inline Mat row_features(const std::vector<Rational>& row, bool nullifier) {
  Mat x(static_cast<Eigen::Index>(row.size()) + 2, 1);
  double nrm = 0;
  for (const auto& r : row) nrm += to_double(r) * to_double(r);
  nrm = std::sqrt(nrm);
  for (std::size_t i = 0; i < row.size(); ++i)
    x(static_cast<Eigen::Index>(i), 0) = nrm > 0 ? to_double(row[i]) / nrm : 0.0;
  x(static_cast<Eigen::Index>(row.size()), 0) = std::log1p(nrm);
  x(static_cast<Eigen::Index>(row.size()) + 1, 0) = nullifier ? 1.0 : 0.0;
  return x;
}

inline PhaseSequence to_sequence(const TaskInstance<Exact>& inst) {
  PhaseSequence s;
  for (std::size_t r = 0; r < inst.inputs.size(); ++r) {
    s.inputs.push_back(row_features(inst.inputs[r], static_cast<int>(r) < inst.n));
    s.targets.push_back(phase_class(inst.outputs[r].value));
  }
  return s;
}

/// Online classifier: a recurrent cell reads one row per step and emits a
/// phase class for that row.
struct PhaseModel {
  ParamSet ps;
  Cell cell;
  int Wo = -1, bo = -1;

  static PhaseModel create(CellKind kind, int latent, int input_dim, std::uint64_t seed) {
    PhaseModel m;
    std::mt19937_64 rng(seed);
    m.cell = Cell::create(kind, latent, input_dim, m.ps, rng);
    m.Wo = m.ps.add("head_W", glorot_uniform(kPhaseClasses, m.cell.out_dim(), rng));
    m.bo = m.ps.add("head_b", Mat::Zero(kPhaseClasses, 1));
    return m;
  }

  double loss(const PhaseSequence& s, std::vector<Mat>* grads) const {
    ad::Tape t;
    auto f = cell.begin(t, ps);
    auto st = cell.initial(t, ps);
    auto W = t.param(Wo, ps.values[Wo]);
    auto b = t.param(bo, ps.values[bo]);
    ad::Var total = t.constant(Mat::Zero(1, 1));
    for (std::size_t i = 0; i < s.inputs.size(); ++i) {
      auto y = cell.step(t, f, st, t.constant(s.inputs[i]));
      total = ad::add(total, ad::softmax_ce(ad::add(ad::matmul(W, y), b), s.targets[i]));
    }
    if (grads) {
      t.backward(total);
      t.collect(*grads);
    }
    return total.scalar();
  }

  std::vector<int> predict(const PhaseSequence& s) const {
    ad::Tape t;
    auto f = cell.begin(t, ps);
    auto st = cell.initial(t, ps);
    std::vector<int> out;
    for (const auto& x : s.inputs) {
      auto y = cell.step(t, f, st, t.constant(x));
      Mat logits = ps.values[Wo] * y.v() + ps.values[bo];
      Eigen::Index arg;
      logits.col(0).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
    return out;
  }

  /// Mean per-step loss; fixed chunks keep the sum order worker-independent.
  double batch_loss(const std::vector<const PhaseSequence*>& batch, std::vector<Mat>* grads, int workers) const {
    const std::size_t chunk = 8;
    std::size_t nchunks = (batch.size() + chunk - 1) / chunk;
    std::vector<double> losses(nchunks, 0.0);
    std::vector<std::vector<Mat>> cg(grads ? nchunks : 0);
    auto run = [&](std::size_t c) {
      if (grads) cg[c] = ps.zeros();
      for (std::size_t i = c * chunk; i < std::min(batch.size(), (c + 1) * chunk); ++i)
        losses[c] += loss(*batch[i], grads ? &cg[c] : nullptr);
    };
    if (workers <= 1 || nchunks <= 1) {
      for (std::size_t c = 0; c < nchunks; ++c) run(c);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
          for (std::size_t c = static_cast<std::size_t>(w); c < nchunks; c += static_cast<std::size_t>(workers)) run(c);
        });
      for (auto& th : pool) th.join();
    }
    double steps = 0;
    for (const auto* s : batch) steps += static_cast<double>(s->inputs.size());
    double total = 0;
    for (double l : losses) total += l;
    if (grads) {
      for (std::size_t c = 0; c < nchunks; ++c)
        for (std::size_t p = 0; p < grads->size(); ++p) (*grads)[p] += cg[c][p];
      for (auto& g : *grads) g /= steps;
    }
    return total / steps;
  }
};

struct SeparationConfig {
  int n = 6;
  int train_triples = 400;
  int test_triples = 200;
  std::vector<int> latent_dims = {4, 8, 16, 40};
  int epochs = 30;
  int batch_size = 32;
  double lr = 3e-3;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct SeparationRow {
  int latent_dim;
  std::string cell_kind;
  double inconsistency_rate;
};

inline const char* kSeparationHeader = "latent_dim,cell_kind,inconsistency_rate";

/// Zero-draw triples: every random step takes outcome 0, so all oracle
/// outcomes lie on the class grid.
inline std::vector<AdversarialTriple<Exact>> triple_set(int count, int n, std::uint64_t seed) {
  std::vector<AdversarialTriple<Exact>> out;
  for (int i = 0; i < count; ++i) {
    auto rng = instance_rng(seed, static_cast<std::uint64_t>(i));
    out.push_back(gen_adversarial_triple<Exact>(n, rng, 100000, nullptr, true));
  }
  return out;
}

/// Fraction of triples where some member gets an inconsistent response.
template <class Respond>
double inconsistency_rate(const std::vector<AdversarialTriple<Exact>>& triples, Respond respond) {
  if (triples.empty()) return 0.0;
  int bad = 0;
  for (const auto& tr : triples) {
    bool any = false;
    for (const auto& inst : tr.instances)
      if (!consistency_check(inst, respond(inst)).consistent) any = true;
    if (any) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(triples.size());
}

inline PhaseModel train_phase_model(CellKind kind, int latent, const std::vector<PhaseSequence>& data,
                                    const SeparationConfig& cfg) {
  int dim = static_cast<int>(data.at(0).inputs.at(0).rows());
  auto model = PhaseModel::create(kind, latent, dim, cfg.seed * 7919ULL + static_cast<std::uint64_t>(latent));
  Adam opt{cfg.lr};
  int workers = worker_count(cfg.threads);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const PhaseSequence*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i)
        batch.push_back(&data[order[i]]);
      auto grads = model.ps.zeros();
      double l = model.batch_loss(batch, &grads, workers);
      if (!std::isfinite(l)) throw TrainingDiverged("non-finite loss in separation training");
      opt.step(model.ps, grads);
    }
  }
  return model;
}

/// Oracle row first (latent_dim = n), then one row per trained latent width.
inline std::vector<SeparationRow> run_separation(const SeparationConfig& cfg, CellKind kind = CellKind::GRU) {
  auto train = triple_set(cfg.train_triples, cfg.n, cfg.seed * 2 + 1);
  auto test = triple_set(cfg.test_triples, cfg.n, cfg.seed * 2 + 2);
  std::vector<PhaseSequence> data;
  for (const auto& tr : train)
    for (const auto& inst : tr.instances) data.push_back(to_sequence(inst));
  std::vector<SeparationRow> rows;
  rows.push_back({cfg.n, "crnn_oracle",
                  inconsistency_rate(test, [](const TaskInstance<Exact>& i) { return transcript_values(i); })});
  for (int d : cfg.latent_dims) {
    auto model = train_phase_model(kind, d, data, cfg);
    double rate = inconsistency_rate(test, [&](const TaskInstance<Exact>& inst) {
      std::vector<Rational> out;
      for (int k : model.predict(to_sequence(inst))) out.push_back(class_phase(k));
      return out;
    });
    rows.push_back({d, cell_name(kind), rate});
  }
  return rows;
}

inline std::string separation_csv(const std::vector<SeparationRow>& rows) {
  std::string s = std::string(kSeparationHeader) + "\n";
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", r.inconsistency_rate);
    s += std::to_string(r.latent_dim) + "," + r.cell_kind + "," + buf + "\n";
  }
  return s;
}

}  // namespace crnn
