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

#include "crnn/seq2seq.hpp"

using namespace crnn;

namespace {

const CellKind kAll[] = {CellKind::CRNN, CellKind::GAUSSIAN, CellKind::GRU, CellKind::ORNN};

}  // namespace

TEST_CASE("vocabulary", "[seq2seq]") {
  std::vector<std::string> corpus = {"a b c", "b c", "c d"};
  auto v1 = build_vocab(corpus), v2 = build_vocab(corpus);
  CHECK(v1.words == v2.words);
  CHECK(v1.id("c") == 4);
  CHECK(v1.id("b") == 5);
  CHECK(v1.id("a") == 6);
  auto small = build_vocab(corpus, 2);
  CHECK(small.id("a") == Vocabulary::kUnk);
  CHECK(v1.decode(v1.encode("c a d b")) == "c a d b");
  CHECK_THROWS(build_vocab({}));
}

TEST_CASE("cross entropy extremes", "[seq2seq]") {
  ad::Tape t;
  auto z = t.constant(Mat::Zero(7, 1));
  CHECK(ad::softmax_ce(z, 3).scalar() == Catch::Approx(std::log(7.0)).epsilon(1e-12));
  Mat big = Mat::Zero(7, 1);
  big(2, 0) = 60;
  CHECK(ad::softmax_ce(t.constant(big), 2).scalar() < 1e-20);
  Mat r = normal_matrix(9, 1, 3.0, *std::make_unique<std::mt19937_64>(1));
  CHECK(std::fabs(softmax(r).sum() - 1) < 1e-9);
}

TEST_CASE("adam updates", "[seq2seq]") {
  ParamSet ps;
  ps.add("x", Mat::Constant(1, 1, 0.5));
  Adam a;
  a.step(ps, {Mat::Constant(1, 1, 1.0)});
  CHECK(ps.values[0](0, 0) == Catch::Approx(0.5 - 1e-3).epsilon(1e-9));
  double before = ps.values[0](0, 0);
  Adam z;
  z.step(ps, {Mat::Zero(1, 1)});
  CHECK(ps.values[0](0, 0) == before);

  ParamSet bowl;
  bowl.add("x", (Mat(3, 1) << 1.0, -0.8, 0.5).finished());
  Adam opt;
  for (int i = 0; i < 5000; ++i) opt.step(bowl, {2.0 * bowl.values[0]});
  CHECK(bowl.values[0].norm() <= 1e-3);
}

TEST_CASE("toy training lowers the loss", "[seq2seq][train]") {
  auto pairs = toy_corpus(3, 10);
  auto data = prepare_dataset(pairs, 0.8, 0);
  data.train.insert(data.train.end(), data.test.begin(), data.test.end());
  for (auto k : kAll) {
    auto model = Seq2Seq::create(k, 4, data.src_vocab.size(), data.tgt_vocab.size(), 1);
    std::vector<const Example*> all;
    for (const auto& e : data.train) all.push_back(&e);
    double first = model.batch_loss(all, nullptr);
    Adam opt{1e-2};
    for (int i = 0; i < 50; ++i) {
      auto g = model.ps.zeros();
      model.batch_loss(all, &g);
      opt.step(model.ps, g);
    }
    double last = model.batch_loss(all, nullptr);
    INFO(cell_name(k));
    CHECK(last < first);
  }
}

TEST_CASE("full model gradient", "[seq2seq][gradient]") {
  auto pairs = toy_corpus(5, 2);
  auto data = prepare_dataset(pairs, 0.5, 0);
  std::vector<const Example*> all{&data.train[0], &data.test[0]};
  for (auto k : kAll) {
    auto model = Seq2Seq::create(k, 3, data.src_vocab.size(), data.tgt_vocab.size(), 2);
    auto g = model.ps.zeros();
    model.batch_loss(all, &g);
    double num = 0, den = 0;
    const double h = 1e-5;
    for (std::size_t p = 0; p < model.ps.values.size(); ++p) {
      if (!model.ps.trainable[p]) continue;
      for (Eigen::Index i = 0; i < model.ps.values[p].size(); ++i) {
        double keep = model.ps.values[p](i);
        model.ps.values[p](i) = keep + h;
        double up = model.batch_loss(all, nullptr);
        model.ps.values[p](i) = keep - h;
        double dn = model.batch_loss(all, nullptr);
        model.ps.values[p](i) = keep;
        double fd = (up - dn) / (2 * h);
        num += (fd - g[p](i)) * (fd - g[p](i));
        den += fd * fd;
      }
    }
    INFO(cell_name(k));
    CHECK(std::sqrt(num / den) <= 1e-4);
  }
}

TEST_CASE("training is deterministic and resumable", "[seq2seq][train]") {
  auto data = prepare_dataset(toy_corpus(1, 40), 0.8, 4);
  TrainConfig cfg;
  cfg.n = 4;
  cfg.epochs = 2;
  cfg.batch_size = 8;
  cfg.seed = 4;
  auto run = [&](int threads) {
    auto m = Seq2Seq::create(CellKind::CRNN, cfg.n, data.src_vocab.size(), data.tgt_vocab.size(), cfg.seed);
    auto c = cfg;
    c.threads = threads;
    return metrics_csv(train(m, data, c));
  };
  auto a = run(1);
  CHECK(a == run(1));
  CHECK(a == run(3));
  CHECK(a.rfind(kMetricsHeader, 0) == 0);

  auto dir = std::filesystem::temp_directory_path() / "crnn_ckpt_test";
  std::filesystem::create_directories(dir);
  auto stem = (dir / "m").string();
  auto m = Seq2Seq::create(CellKind::GRU, cfg.n, data.src_vocab.size(), data.tgt_vocab.size(), cfg.seed);
  auto c1 = cfg;
  c1.epochs = 1;
  Adam opt{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  train(m, data, c1, &opt, 1);
  save_checkpoint(stem, m.ps, m.manifest());
  auto next = train(m, data, c1, &opt, 2);
  auto r = Seq2Seq::create(CellKind::GRU, cfg.n, data.src_vocab.size(), data.tgt_vocab.size(), 99);
  load_checkpoint(stem, r.ps);
  // optimizer moments are not checkpointed, so compare the loss before any step
  CHECK(evaluate(r, data.test) == evaluate([&] {
          auto q = Seq2Seq::create(CellKind::GRU, cfg.n, data.src_vocab.size(), data.tgt_vocab.size(), cfg.seed);
          load_checkpoint(stem, q.ps);
          return q;
        }(), data.test));
  CHECK(next.size() == 2);
}

TEST_CASE("overfit one pair then decode it", "[seq2seq][train]") {
  std::vector<SentencePair> one = {{"the man sees the bench", "el hombre ve el banco"},
                                   {"the man sees the bench", "el hombre ve el banco"}};
  auto data = prepare_dataset(one, 0.5, 0);
  auto model = Seq2Seq::create(CellKind::GRU, 8, data.src_vocab.size(), data.tgt_vocab.size(), 3);
  std::vector<const Example*> b{&data.train[0]};
  Adam opt{2e-2};
  for (int i = 0; i < 200; ++i) {
    auto g = model.ps.zeros();
    model.batch_loss(b, &g);
    opt.step(model.ps, g);
  }
  auto out = model.greedy_decode(data.train[0].src);
  CHECK(data.tgt_vocab.decode(out) == "the man sees the bench");
  CHECK(out == model.greedy_decode(data.train[0].src));
  CHECK(model.greedy_decode({}).size() <= 20);
}

TEST_CASE("tsv ingestion", "[seq2seq]") {
  auto path = (std::filesystem::temp_directory_path() / "crnn_corpus.tsv").string();
  write_tsv(path, toy_corpus(0, 5));
  auto back = read_tsv(path);
  REQUIRE(back.size() == 5);
  CHECK(back[0].target == toy_corpus(0, 5)[0].target);
}
