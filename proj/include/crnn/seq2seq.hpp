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

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "crnn/cells.hpp"

namespace crnn {

// ------------------------------------------------------------ vocabulary

inline std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Vocabulary {
  static constexpr int kPad = 0, kBegin = 1, kEnd = 2, kUnk = 3;
  std::vector<std::string> words{"[Pad]", "[Begin]", "[End]", "[Unk]"};
  std::unordered_map<std::string, int> ids{{"[Pad]", 0}, {"[Begin]", 1}, {"[End]", 2}, {"[Unk]", 3}};

  int size() const { return static_cast<int>(words.size()); }

  int id(const std::string& w) const {
    auto it = ids.find(w);
    return it == ids.end() ? kUnk : it->second;
  }

  /// [Begin] tokens [End]
  std::vector<int> encode(const std::string& sentence) const {
    std::vector<int> out{kBegin};
    for (const auto& w : tokenize(sentence)) out.push_back(id(w));
    out.push_back(kEnd);
    return out;
  }

  std::string decode(const std::vector<int>& seq) const {
    std::string out;
    for (int t : seq) {
      if (t == kBegin || t == kPad) continue;
      if (t == kEnd) break;
      if (!out.empty()) out += ' ';
      out += words.at(static_cast<std::size_t>(t));
    }
    return out;
  }
};

/// Frequency-ranked vocabulary; ties keep first-occurrence order.
inline Vocabulary build_vocab(const std::vector<std::string>& corpus, int max_size = 5000) {
  if (corpus.empty()) throw std::invalid_argument("empty corpus");
  std::unordered_map<std::string, std::pair<long long, long long>> stats;  // count, first
  long long pos = 0;
  for (const auto& s : corpus)
    for (const auto& w : tokenize(s)) {
      auto it = stats.find(w);
      if (it == stats.end()) {
        stats.emplace(w, std::make_pair(1LL, pos));
      } else {
        ++it->second.first;
      }
      ++pos;
    }
  std::vector<std::pair<std::string, std::pair<long long, long long>>> ranked(stats.begin(), stats.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  Vocabulary v;
  for (const auto& [w, st] : ranked) {
    if (static_cast<int>(v.words.size()) - 4 >= max_size) break;
    if (v.ids.count(w)) continue;
    v.ids[w] = v.size();
    v.words.push_back(w);
  }
  return v;
}

// ------------------------------------------------------------ corpus

struct SentencePair {
  std::string target, source;
};

/// Tab-separated "target<TAB>source" lines; extra columns are ignored.
inline std::vector<SentencePair> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  std::vector<SentencePair> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("corpus line without a tab: " + line);
    auto tab2 = line.find('\t', tab + 1);
    out.push_back({line.substr(0, tab), line.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1)});
  }
  return out;
}

inline void write_tsv(const std::string& path, const std::vector<SentencePair>& pairs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& p : pairs) out << p.target << '\t' << p.source << '\n';
}

/// Synthetic Spanish-to-English pairs. Several source nouns translate
/// differently depending on a place phrase that follows them.
inline std::vector<SentencePair> toy_corpus(std::uint64_t seed = 2024, int count = 2000) {
  struct W {
    const char* es;
    const char* en;
  };
  const std::vector<W> subj = {{"el hombre", "the man"}, {"la mujer", "the woman"}, {"el niño", "the boy"},
                               {"la niña", "the girl"},  {"el perro", "the dog"},   {"el gato", "the cat"},
                               {"mi padre", "my father"}, {"tu madre", "your mother"}};
  const std::vector<W> verb = {{"ve", "sees"}, {"busca", "looks for"}, {"pinta", "paints"},
                               {"quiere", "wants"}, {"limpia", "cleans"}, {"encuentra", "finds"}};
  const std::vector<W> adj = {{"viejo", "old"}, {"nuevo", "new"}, {"grande", "big"},
                              {"pequeño", "small"}, {"rojo", "red"}, {"blanco", "white"}};
  // homonym, place, translation in that place
  struct H {
    const char* es;
    const char* place_es;
    const char* place_en;
    const char* en;
  };
  const std::vector<H> hom = {
      {"banco", "en el parque", "in the park", "bench"},   {"banco", "en la ciudad", "in the city", "bank"},
      {"gato", "en el taller", "in the garage", "jack"},    {"gato", "en la casa", "in the house", "cat"},
      {"vela", "en el barco", "on the boat", "sail"},       {"vela", "en la mesa", "on the table", "candle"},
      {"carta", "en el restaurante", "at the restaurant", "menu"},
      {"carta", "en el buzón", "in the mailbox", "letter"},
      {"planta", "en la fábrica", "in the factory", "plant floor"},
      {"planta", "en el jardín", "in the garden", "plant"}};
  const std::vector<W> plain = {{"coche", "car"}, {"libro", "book"}, {"barco", "boat"}, {"sombrero", "hat"}};
  const std::vector<W> place = {{"en el parque", "in the park"}, {"en la ciudad", "in the city"},
                                {"en la casa", "in the house"}, {"en el barco", "on the boat"}};
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t k) { return std::uniform_int_distribution<std::size_t>(0, k - 1)(rng); };
  std::vector<SentencePair> out;
  for (int i = 0; i < count; ++i) {
    const auto& s = subj[pick(subj.size())];
    const auto& v = verb[pick(verb.size())];
    bool with_adj = pick(2) == 0;
    const auto& a = adj[pick(adj.size())];
    std::string es = std::string(s.es) + " " + v.es + " el ";
    std::string en = std::string(s.en) + " " + v.en + " the ";
    if (pick(3) != 0) {
      const auto& h = hom[pick(hom.size())];
      es += std::string(h.es) + (with_adj ? std::string(" ") + a.es : "") + " " + h.place_es;
      en += (with_adj ? std::string(a.en) + " " : "") + h.en + " " + h.place_en;
    } else {
      const auto& p = plain[pick(plain.size())];
      const auto& pl = place[pick(place.size())];
      es += std::string(p.es) + (with_adj ? std::string(" ") + a.es : "") + " " + pl.es;
      en += (with_adj ? std::string(a.en) + " " : "") + p.en + " " + pl.en;
    }
    out.push_back({en, es});
  }
  return out;
}

// ------------------------------------------------------------ model

struct TrainConfig {
  int n = 10;
  int epochs = 80;
  int batch_size = 64;
  double train_fraction = 0.8;
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  std::uint64_t seed = 0;
  int threads = 0;  ///< 0: CRNN_SIM_THREADS or 1

  void validate() const {
    if (n < 1 || epochs < 1 || batch_size < 1) throw std::invalid_argument("sizes must be positive");
    if (!(train_fraction > 0 && train_fraction < 1)) throw std::invalid_argument("train_fraction must be in (0, 1)");
    if (!(lr > 0) || !(eps > 0) || !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
      throw std::invalid_argument("invalid optimizer settings");
  }
};

inline int worker_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* e = std::getenv("CRNN_SIM_THREADS")) {
    int v = std::atoi(e);
    if (v > 0) return v;
  }
  return 1;
}

struct Example {
  std::vector<int> src, tgt;
};

/// Embeddings, shared encoder/decoder cell and a dense softmax head.
struct Seq2Seq {
  ParamSet ps;
  Cell cell;
  int emb_src = -1, emb_tgt = -1, Wo = -1, bo = -1;
  int n = 0;
  int vsrc = 0, vtgt = 0;
  std::uint64_t seed = 0;

  static Seq2Seq create(CellKind kind, int n, int vsrc, int vtgt, std::uint64_t seed) {
    Seq2Seq m;
    m.n = n;
    m.vsrc = vsrc;
    m.vtgt = vtgt;
    m.seed = seed;
    std::mt19937_64 rng(seed);
    double sd = 1.0 / std::sqrt(static_cast<double>(n));
    m.emb_src = m.ps.add("embed_src", normal_matrix(vsrc, n, sd, rng));
    m.emb_tgt = m.ps.add("embed_tgt", normal_matrix(vtgt, n, sd, rng));
    int latent = kind == CellKind::GRU ? gru_width_for(n, n) : n;
    m.cell = Cell::create(kind, latent, n, m.ps, rng);
    m.Wo = m.ps.add("head_W", glorot_uniform(vtgt, m.cell.out_dim(), rng));
    m.bo = m.ps.add("head_b", Mat::Zero(vtgt, 1));
    return m;
  }

  long long cell_param_count() const { return cell.count(); }

  /// Summed cross entropy of one example (teacher forcing); records
  /// gradients into `grads` when given.
  double example_loss(const Example& ex, std::vector<Mat>* grads) const {
    if (ex.src.empty() || ex.tgt.size() < 2) throw std::invalid_argument("malformed example");
    ad::Tape t;
    auto f = cell.begin(t, ps);
    auto s = cell.initial(t, ps);
    for (int tok : ex.src) cell.step(t, f, s, t.param_row(emb_src, ps.values[emb_src], tok));
    auto W = t.param(Wo, ps.values[Wo]);
    auto b = t.param(bo, ps.values[bo]);
    ad::Var total = t.constant(Mat::Zero(1, 1));
    for (std::size_t i = 0; i + 1 < ex.tgt.size(); ++i) {
      auto y = cell.step(t, f, s, t.param_row(emb_tgt, ps.values[emb_tgt], ex.tgt[i]));
      auto logits = ad::add(ad::matmul(W, y), b);
      total = ad::add(total, ad::softmax_ce(logits, ex.tgt[i + 1]));
    }
    if (grads) {
      t.backward(total);
      t.collect(*grads);
    }
    return total.scalar();
  }

  /// Mean per-token loss and gradient over a batch; chunked so the
  /// reduction order does not depend on the worker count.
  double batch_loss(const std::vector<const Example*>& batch, std::vector<Mat>* grads, int workers = 1) const {
    const std::size_t chunk = 8;
    std::size_t nchunks = (batch.size() + chunk - 1) / chunk;
    std::vector<double> losses(nchunks, 0.0);
    std::vector<std::vector<Mat>> cg(grads ? nchunks : 0);
    auto run = [&](std::size_t c) {
      if (grads) cg[c] = ps.zeros();
      for (std::size_t i = c * chunk; i < std::min(batch.size(), (c + 1) * chunk); ++i)
        losses[c] += example_loss(*batch[i], grads ? &cg[c] : nullptr);
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
    double tokens = 0;
    for (const auto* e : batch) tokens += static_cast<double>(e->tgt.size() - 1);
    double loss = 0;
    for (double l : losses) loss += l;
    if (grads) {
      for (std::size_t c = 0; c < nchunks; ++c)
        for (std::size_t p = 0; p < grads->size(); ++p) (*grads)[p] += cg[c][p];
      for (auto& g : *grads) g /= tokens;
    }
    return loss / tokens;
  }

  /// Argmax decoding fed back through the target embedding.
  std::vector<int> greedy_decode(const std::vector<int>& src, int cap = 20) const {
    ad::Tape t;
    auto f = cell.begin(t, ps);
    auto s = cell.initial(t, ps);
    for (int tok : src) cell.step(t, f, s, t.constant(ps.values[emb_src].row(tok).transpose()));
    std::vector<int> out;
    int prev = Vocabulary::kBegin;
    for (int i = 0; i < cap; ++i) {
      auto y = cell.step(t, f, s, t.constant(ps.values[emb_tgt].row(prev).transpose()));
      Mat logits = ps.values[Wo] * y.v() + ps.values[bo];
      Eigen::Index arg;
      logits.col(0).maxCoeff(&arg);
      prev = static_cast<int>(arg);
      out.push_back(prev);
      if (prev == Vocabulary::kEnd) break;
    }
    return out;
  }

  nlohmann::json manifest() const {
    return {{"cell_kind", cell_name(cell.kind)}, {"n", n}, {"m", cell.m}, {"latent", cell.n},
            {"vocab_src", vsrc}, {"vocab_tgt", vtgt}, {"seed", seed}};
  }
};

inline Mat softmax(const Mat& logits) {
  Mat e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

// ------------------------------------------------------------ optimizer

struct Adam {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  long long t = 0;
  std::vector<Mat> m, v;

  void step(ParamSet& ps, const std::vector<Mat>& grads) {
    if (m.empty()) {
      m = ps.zeros();
      v = ps.zeros();
    }
    ++t;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t p = 0; p < ps.values.size(); ++p) {
      if (!ps.trainable[p]) continue;
      m[p] = beta1 * m[p] + (1 - beta1) * grads[p];
      v[p] = beta2 * v[p] + (1 - beta2) * grads[p].cwiseProduct(grads[p]);
      ps.values[p].array() -= lr * (m[p].array() / c1) / ((v[p].array() / c2).sqrt() + eps);
    }
  }
};

// ------------------------------------------------------------ training

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MetricRow {
  int epoch;
  std::string split;
  std::string cell_kind;
  int n;
  long long param_count;
  double cross_entropy;
  std::uint64_t seed;
};

inline const char* kMetricsHeader = "epoch,split,cell_kind,n,param_count,cross_entropy,seed";

inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << kMetricsHeader << "\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.epoch << "," << r.split << "," << r.cell_kind << "," << r.n << "," << r.param_count << ","
       << r.cross_entropy << "," << r.seed << "\n";
  return os.str();
}

struct Dataset {
  Vocabulary src_vocab, tgt_vocab;
  std::vector<Example> train, test;
};

/// Tokenize, build vocabularies on the training split and frame examples.
inline Dataset prepare_dataset(const std::vector<SentencePair>& pairs, double train_fraction, std::uint64_t seed) {
  if (pairs.size() < 2) throw std::invalid_argument("corpus needs at least two pairs");
  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::size_t ntrain = std::max<std::size_t>(1, static_cast<std::size_t>(train_fraction * static_cast<double>(pairs.size())));
  ntrain = std::min(ntrain, pairs.size() - 1);
  std::vector<std::string> src, tgt;
  for (std::size_t i = 0; i < ntrain; ++i) {
    src.push_back(pairs[idx[i]].source);
    tgt.push_back(pairs[idx[i]].target);
  }
  Dataset d;
  d.src_vocab = build_vocab(src);
  d.tgt_vocab = build_vocab(tgt);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[idx[i]];
    Example e{d.src_vocab.encode(p.source), d.tgt_vocab.encode(p.target)};
    (i < ntrain ? d.train : d.test).push_back(std::move(e));
  }
  return d;
}

inline double evaluate(const Seq2Seq& model, const std::vector<Example>& data, int workers = 1) {
  std::vector<const Example*> all;
  for (const auto& e : data) all.push_back(&e);
  return model.batch_loss(all, nullptr, workers);
}

/// Mini-batch Adam on forward cross entropy. Logs the running train loss
/// and the test loss after every epoch.
inline std::vector<MetricRow> train(Seq2Seq& model, const Dataset& data, const TrainConfig& cfg,
                                    Adam* opt_state = nullptr, int first_epoch = 1) {
  cfg.validate();
  Adam local{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  Adam& opt = opt_state ? *opt_state : local;
  int workers = worker_count(cfg.threads);
  std::vector<MetricRow> rows;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
    std::mt19937_64 rng(cfg.seed * 1000003ULL + static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0, tok_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const Example*> batch;
      double tok = 0;
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size)); ++i) {
        batch.push_back(&data.train[order[i]]);
        tok += static_cast<double>(data.train[order[i]].tgt.size() - 1);
      }
      auto grads = model.ps.zeros();
      double loss = model.batch_loss(batch, &grads, workers);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged(std::string("non-finite loss in epoch ") + std::to_string(epoch) + " for cell " +
                               cell_name(model.cell.kind));
      }
      opt.step(model.ps, grads);
      loss_sum += loss * tok;
      tok_sum += tok;
    }
    double test = evaluate(model, data.test, workers);
    if (!std::isfinite(test)) throw TrainingDiverged("non-finite test loss in epoch " + std::to_string(epoch));
    const char* kind = cell_name(model.cell.kind);
    rows.push_back({epoch, "train", kind, model.n, model.cell_param_count(), loss_sum / tok_sum, cfg.seed});
    rows.push_back({epoch, "test", kind, model.n, model.cell_param_count(), test, cfg.seed});
  }
  return rows;
}

/// Adam moments next to a checkpoint, as `<stem>.adam.{bin,json}`.
inline void save_optimizer(const std::string& stem, const ParamSet& ps, const Adam& opt) {
  ParamSet mom;
  auto m = opt.m.empty() ? ps.zeros() : opt.m;
  auto v = opt.v.empty() ? ps.zeros() : opt.v;
  for (std::size_t p = 0; p < ps.values.size(); ++p) {
    mom.add("m:" + ps.names[p], m[p]);
    mom.add("v:" + ps.names[p], v[p]);
  }
  save_checkpoint(stem + ".adam", mom, {{"t", opt.t}});
}

inline void load_optimizer(const std::string& stem, const ParamSet& ps, Adam& opt) {
  ParamSet mom;
  for (std::size_t p = 0; p < ps.values.size(); ++p) {
    mom.add("m:" + ps.names[p], Mat::Zero(ps.values[p].rows(), ps.values[p].cols()));
    mom.add("v:" + ps.names[p], Mat::Zero(ps.values[p].rows(), ps.values[p].cols()));
  }
  auto man = load_checkpoint(stem + ".adam", mom);
  opt.t = man.at("t").get<long long>();
  opt.m.clear();
  opt.v.clear();
  for (std::size_t p = 0; p < ps.values.size(); ++p) {
    opt.m.push_back(mom.values[2 * p]);
    opt.v.push_back(mom.values[2 * p + 1]);
  }
}

}  // namespace crnn
