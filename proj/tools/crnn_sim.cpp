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


// crnn_sim: verification suites, task datasets, training, separation runs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "crnn/config.hpp"
#include "crnn/pauli.hpp"
#include "crnn/separation.hpp"
#include "crnn/seq2seq.hpp"
#include "crnn/taskgen.hpp"

namespace fs = std::filesystem;
using namespace crnn;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string backend = "exact";
  bool human = false;
  nlohmann::json cfg = nlohmann::json::object();

  std::uint64_t seed_or(const char* sec, std::uint64_t def) const {
    return seed ? *seed : cfg_get<std::uint64_t>(cfg, sec, "seed", def);
  }
  fs::path out_dir() const {
    fs::path p = cfg_get<std::string>(cfg, "io", "out", out);
    if (out != "out") p = out;  // flag beats config
    fs::create_directories(p);
    return p;
  }
};

std::string fmt(double x, const char* f = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << s;
}

// ------------------------------------------------------------ verify-contextuality

struct VerifyOpts {
  std::vector<std::string> alphas;
  int random = -1;
  bool fault = false;
};

template <class B>
nlohmann::json verify_case(MagicSquare<B> m, const std::string& alpha, bool fault) {
  if (fault) m.grid[1][2].theta = B::mod(m.grid[1][2].theta + B::from_int(1), 2);
  auto rep = verify_magic_square(m);
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : rep.lines) lines.push_back({{"line", l.name}, {"ok", l.ok}});
  return {{"alpha", alpha}, {"backend", B::name}, {"pass", rep.pass},
          {"satisfying_assignments", rep.satisfying_assignments}, {"lines", lines}};
}

int cmd_verify(const Globals& g, const VerifyOpts& o) {
  auto alphas = o.alphas.empty() ? cfg_string_list(g.cfg, "verify", "alphas", {"1", "2", "1/3"}) : o.alphas;
  int nrand = o.random >= 0 ? o.random : cfg_get<int>(g.cfg, "verify", "random", 100);
  if (nrand < 0) throw UsageError("verify.random must be non-negative");
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& a : alphas) {
    Rational r;
    try {
      r = parse_rational(a);
    } catch (const std::exception&) {
      throw UsageError("alpha '" + a + "' is not a rational");
    }
    if (r == 0) throw UsageError("alpha must be nonzero");
    cases.push_back(verify_case(build_magic_square_exact(r), a, o.fault));
    cases.push_back(verify_case(build_magic_square_float(to_double(r)), a, o.fault));
  }
  std::mt19937_64 rng(g.seed_or("verify", 0));
  std::uniform_real_distribution<double> ud(0.0, 10.0);
  for (int i = 0; i < nrand; ++i) {
    double a = 10.0 - ud(rng);  // (0, 10]
    cases.push_back(verify_case(build_magic_square_float(a), fmt(a, "%.17g"), o.fault));
  }
  bool pass = true;
  for (const auto& c : cases) pass = pass && c["pass"].get<bool>();
  if (g.human) {
    std::printf("%-24s %-6s %-5s %s\n", "alpha", "mode", "pass", "assignments");
    for (const auto& c : cases)
      std::printf("%-24s %-6s %-5s %d\n", c["alpha"].get<std::string>().c_str(),
                  c["backend"].get<std::string>().c_str(), c["pass"].get<bool>() ? "yes" : "NO",
                  c["satisfying_assignments"].get<int>());
    std::printf("overall: %s\n", pass ? "PASS" : "FAIL");
  } else {
    std::cout << nlohmann::json{{"command", "verify-contextuality"}, {"pass", pass}, {"cases", cases}}.dump()
              << "\n";
  }
  return pass ? 0 : kExitFail;
}

// ------------------------------------------------------------ gen-task

struct GenOpts {
  int n = -1, k = -1, count = -1, triples = -1;
};

template <class B>
int gen_task_impl(const Globals& g, const GenOpts& o) {
  int n = o.n >= 0 ? o.n : cfg_get<int>(g.cfg, "task", "n", 4);
  int k = o.k >= 0 ? o.k : cfg_get<int>(g.cfg, "task", "k", 2);
  int count = o.count >= 0 ? o.count : cfg_get<int>(g.cfg, "task", "count", 100);
  int triples = o.triples >= 0 ? o.triples : cfg_get<int>(g.cfg, "task", "adversarial_triples", 0);
  std::uint64_t seed = g.seed_or("task", 0);
  InstanceOptions opt;
  try {
    opt.init = initial_state_from_name(cfg_get<std::string>(g.cfg, "task", "init_state", "squeezed"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  opt.modified = cfg_get<bool>(g.cfg, "task", "modified", false);
  if (n < 2 || k < 0 || count < 0 || triples < 0) throw UsageError("need n >= 2 and non-negative k, count, triples");
  std::vector<TaskInstance<B>> xs;
  if (triples > 0) {
    for (int i = 0; i < triples; ++i) {
      auto rng = instance_rng(seed, static_cast<std::uint64_t>(i));
      auto tr = gen_adversarial_triple<B>(n, rng);
      for (auto& inst : tr.instances) {
        inst.metadata["triple_id"] = i;
        xs.push_back(inst);
      }
    }
  } else {
    xs = gen_dataset<B>(count, n, k, seed, opt);
  }
  auto path = g.out_dir() / "tasks.jsonl";
  write_jsonl(path.string(), xs);
  int det = 0, steps = 0;
  for (const auto& x : xs)
    for (const auto& s : x.outputs) {
      ++steps;
      if (s.deterministic) ++det;
    }
  if (g.human) {
    std::printf("wrote %zu instances (%d triples) to %s\n", xs.size(), triples, path.string().c_str());
    std::printf("steps: %d, deterministic: %d\n", steps, det);
  } else {
    std::cout << nlohmann::json{{"command", "gen-task"}, {"path", path.string()}, {"instances", xs.size()},
                                {"triples", triples}, {"steps", steps}, {"deterministic_steps", det}}
                     .dump()
              << "\n";
  }
  return 0;
}

// ------------------------------------------------------------ train / eval

std::vector<SentencePair> load_corpus(const std::string& spec) {
  if (spec == "toy") return toy_corpus();
  return read_tsv(spec);
}

TrainConfig train_config(const Globals& g) {
  TrainConfig c;
  c.epochs = cfg_get<int>(g.cfg, "train", "epochs", 10);
  c.batch_size = cfg_get<int>(g.cfg, "train", "batch_size", c.batch_size);
  c.train_fraction = cfg_get<double>(g.cfg, "train", "train_fraction", c.train_fraction);
  c.lr = cfg_get<double>(g.cfg, "train", "lr", c.lr);
  c.beta1 = cfg_get<double>(g.cfg, "train", "beta1", c.beta1);
  c.beta2 = cfg_get<double>(g.cfg, "train", "beta2", c.beta2);
  c.eps = cfg_get<double>(g.cfg, "train", "eps", c.eps);
  c.threads = cfg_get<int>(g.cfg, "train", "threads", 0);
  c.seed = g.seed_or("train", 0);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

std::vector<CellKind> cell_kinds(const nlohmann::json& cfg, const std::vector<std::string>& flag) {
  auto names = flag.empty() ? cfg_string_list(cfg, "model", "cell_kind", {"crnn"}) : flag;
  std::vector<CellKind> out;
  for (const auto& s : names) {
    if (s == "all") {
      out = {CellKind::CRNN, CellKind::GAUSSIAN, CellKind::GRU, CellKind::ORNN};
      continue;
    }
    try {
      out.push_back(cell_from_name(s));
    } catch (const std::exception&) {
      throw UsageError("unknown cell kind '" + s + "'");
    }
  }
  return out;
}

struct TrainOpts {
  std::vector<std::string> cells;
  int epochs = -1;
  bool resume = false;
};

int cmd_train(const Globals& g, const TrainOpts& o) {
  auto cfg = train_config(g);
  if (o.epochs > 0) cfg.epochs = o.epochs;
  auto ns = cfg_int_list(g.cfg, "model", "n", {10});
  int m = cfg_get<int>(g.cfg, "model", "m", -1);
  for (int n : ns) {
    if (n < 1) throw UsageError("model.n must be positive");
    if (m >= 0 && m != n) throw UsageError("model.m must equal model.n");
  }
  bool resume = o.resume || cfg_get<bool>(g.cfg, "io", "resume", false);
  std::string corpus = cfg_get<std::string>(g.cfg, "io", "corpus", "toy");
  auto pairs = load_corpus(corpus);
  auto data = prepare_dataset(pairs, cfg.train_fraction, cfg.seed);
  auto out = g.out_dir();
  auto metrics_path = out / "metrics.csv";
  std::vector<MetricRow> all;
  nlohmann::json summary = nlohmann::json::array();
  for (CellKind kind : cell_kinds(g.cfg, o.cells)) {
    for (int n : ns) {
      auto model = Seq2Seq::create(kind, n, data.src_vocab.size(), data.tgt_vocab.size(), cfg.seed);
      std::string stem = (out / (std::string(cell_name(kind)) + "_n" + std::to_string(n) + "_s" +
                                 std::to_string(cfg.seed)))
                             .string();
      Adam opt{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
      int done = 0;
      if (resume && fs::exists(stem + ".json")) {
        auto man = load_checkpoint(stem, model.ps);
        load_optimizer(stem, model.ps, opt);
        done = man.at("epoch").get<int>();
      }
      TrainConfig run = cfg;
      run.epochs = cfg.epochs - done;
      std::vector<MetricRow> rows;
      if (run.epochs > 0) rows = train(model, data, run, &opt, done + 1);
      double test = rows.empty() ? evaluate(model, data.test, worker_count(cfg.threads)) : rows.back().cross_entropy;
      auto man = model.manifest();
      man["epoch"] = std::max(done, cfg.epochs);
      man["corpus"] = corpus;
      man["train_fraction"] = cfg.train_fraction;
      man["data_seed"] = cfg.seed;
      man["test_cross_entropy"] = test;
      man["param_count"] = model.cell_param_count();
      save_checkpoint(stem, model.ps, man);
      save_optimizer(stem, model.ps, opt);
      all.insert(all.end(), rows.begin(), rows.end());
      summary.push_back({{"cell_kind", cell_name(kind)}, {"n", n}, {"param_count", model.cell_param_count()},
                         {"test_cross_entropy", test}, {"checkpoint", stem}});
    }
  }
  std::string csv = metrics_csv(all);
  if (resume && fs::exists(metrics_path)) {
    std::ofstream f(metrics_path, std::ios::app | std::ios::binary);
    f << csv.substr(csv.find('\n') + 1);
  } else {
    write_file(metrics_path, csv);
  }
  if (g.human) {
    std::printf("%-9s %4s %8s %10s\n", "cell", "n", "params", "test CE");
    for (const auto& s : summary)
      std::printf("%-9s %4d %8lld %10.4f\n", s["cell_kind"].get<std::string>().c_str(), s["n"].get<int>(),
                  s["param_count"].get<long long>(), s["test_cross_entropy"].get<double>());
  } else {
    std::cout << nlohmann::json{{"command", "train"}, {"metrics", metrics_path.string()}, {"runs", summary}}.dump()
              << "\n";
  }
  return 0;
}

struct EvalOpts {
  std::string checkpoint, dataset;
};

int cmd_eval(const Globals& g, const EvalOpts& o) {
  std::string ckpt = o.checkpoint.empty() ? cfg_get<std::string>(g.cfg, "io", "checkpoint", "") : o.checkpoint;
  std::string dset = o.dataset.empty() ? cfg_get<std::string>(g.cfg, "io", "dataset", "") : o.dataset;
  if (ckpt.empty() && dset.empty()) throw UsageError("eval needs --checkpoint and/or --dataset");
  nlohmann::json rep{{"command", "eval"}};
  if (!dset.empty()) {
    int total = 0, ok = 0;
    auto score = [&](const auto& xs) {
      for (const auto& x : xs) {
        ++total;
        if (consistency_check(x, transcript_values(x)).consistent) ++ok;
      }
    };
    if (g.backend == "float") {
      score(read_jsonl<Float>(dset));
    } else {
      score(read_jsonl<Exact>(dset));
    }
    rep["dataset"] = {{"path", dset}, {"instances", total}, {"consistent", ok},
                      {"consistent_fraction", total ? static_cast<double>(ok) / total : 1.0}};
  }
  if (!ckpt.empty()) {
    std::ifstream js(ckpt + ".json");
    if (!js) throw UsageError("cannot read " + ckpt + ".json");
    auto man = nlohmann::json::parse(js);
    auto pairs = load_corpus(man.at("corpus").get<std::string>());
    auto data = prepare_dataset(pairs, man.at("train_fraction").get<double>(), man.at("data_seed").get<std::uint64_t>());
    auto model = Seq2Seq::create(cell_from_name(man.at("cell_kind").get<std::string>()), man.at("n").get<int>(),
                                 data.src_vocab.size(), data.tgt_vocab.size(), man.at("seed").get<std::uint64_t>());
    load_checkpoint(ckpt, model.ps);
    double ce = evaluate(model, data.test, worker_count());
    rep["checkpoint"] = {{"path", ckpt}, {"test_cross_entropy", ce},
                         {"recorded_test_cross_entropy", man.at("test_cross_entropy").get<double>()}};
  }
  if (g.human) {
    if (rep.contains("dataset"))
      std::printf("dataset %s: %d/%d consistent\n", dset.c_str(), rep["dataset"]["consistent"].get<int>(),
                  rep["dataset"]["instances"].get<int>());
    if (rep.contains("checkpoint"))
      std::printf("checkpoint %s: test CE %.6f (recorded %.6f)\n", ckpt.c_str(),
                  rep["checkpoint"]["test_cross_entropy"].get<double>(),
                  rep["checkpoint"]["recorded_test_cross_entropy"].get<double>());
  } else {
    std::cout << rep.dump() << "\n";
  }
  return 0;
}

// ------------------------------------------------------------ separation

int cmd_separation(const Globals& g, const std::vector<int>& dims_flag) {
  SeparationConfig c;
  c.n = cfg_get<int>(g.cfg, "separation", "n", c.n);
  c.train_triples = cfg_get<int>(g.cfg, "separation", "train_triples", c.train_triples);
  c.test_triples = cfg_get<int>(g.cfg, "separation", "test_triples", c.test_triples);
  c.latent_dims = dims_flag.empty() ? cfg_int_list(g.cfg, "separation", "latent_dims", c.latent_dims) : dims_flag;
  c.epochs = cfg_get<int>(g.cfg, "separation", "epochs", c.epochs);
  c.batch_size = cfg_get<int>(g.cfg, "separation", "batch_size", c.batch_size);
  c.lr = cfg_get<double>(g.cfg, "separation", "lr", c.lr);
  c.seed = g.seed_or("separation", 0);
  c.threads = cfg_get<int>(g.cfg, "train", "threads", 0);
  CellKind kind = CellKind::GRU;
  try {
    kind = cell_from_name(cfg_get<std::string>(g.cfg, "separation", "cell_kind", "gru"));
  } catch (const std::exception&) {
    throw UsageError("unknown separation.cell_kind");
  }
  if (kind == CellKind::CRNN || kind == CellKind::GAUSSIAN) throw UsageError("separation trains classical cells only");
  if (c.n < 3) throw UsageError("separation.n must be at least 3");
  if (c.train_triples < 1 || c.test_triples < 1 || c.epochs < 1 || c.batch_size < 1)
    throw UsageError("separation sizes must be positive");
  for (int d : c.latent_dims)
    if (d < 1) throw UsageError("latent dims must be positive");
  auto rows = run_separation(c, kind);
  auto csv = separation_csv(rows);
  auto path = g.out_dir() / "separation.csv";
  write_file(path, csv);
  if (g.human) {
    std::printf("%-10s %-12s %s\n", "latent", "cell", "inconsistency");
    for (const auto& r : rows) std::printf("%-10d %-12s %.4f\n", r.latent_dim, r.cell_kind.c_str(), r.inconsistency_rate);
  } else {
    std::cout << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crnn_sim: CV stabilizer tasks, recurrent cells and translation runs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for every random choice");
  app.add_option("--config", g.config_path, "JSON run config");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--backend", g.backend, "Scalar backend")->check(CLI::IsMember({"exact", "float"}));
  app.add_flag("--human", g.human, "Print tables instead of machine-readable output");

  VerifyOpts vo;
  auto* verify = app.add_subcommand("verify-contextuality", "Check the magic square for several alphas");
  verify->add_option("--alpha", vo.alphas, "Rational alphas, e.g. 1 2 1/3");
  verify->add_option("--random", vo.random, "Number of random float alphas in (0, 10]");
  verify->add_flag("--self-test-fault", vo.fault, "Corrupt one cell; the check must then fail");

  GenOpts go;
  auto* gen = app.add_subcommand("gen-task", "Generate a JSONL task dataset");
  gen->add_option("--n", go.n, "Modes");
  gen->add_option("--k", go.k, "Pauli measurements after the prefix");
  gen->add_option("--count", go.count, "Instances");
  gen->add_option("--adversarial-triples", go.triples, "Generate this many adversarial triples instead");

  TrainOpts to;
  auto* tr = app.add_subcommand("train", "Train seq2seq models on a corpus");
  tr->add_option("--cell", to.cells, "crnn, gaussian, gru, ornn or all");
  tr->add_option("--epochs", to.epochs, "Total epochs");
  tr->add_flag("--resume", to.resume, "Continue from existing checkpoints");

  std::vector<int> dims;
  auto* sep = app.add_subcommand("separation", "Classical cells on adversarial triples");
  sep->add_option("--latent-dims", dims, "Latent widths to sweep");

  EvalOpts eo;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint or a task dataset");
  ev->add_option("--checkpoint", eo.checkpoint, "Checkpoint stem");
  ev->add_option("--dataset", eo.dataset, "Task JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    if (*seed_opt) g.seed = seed_value;
    if (!g.config_path.empty()) g.cfg = load_config(g.config_path);
    if (*verify) return cmd_verify(g, vo);
    if (*gen) return g.backend == "float" ? gen_task_impl<Float>(g, go) : gen_task_impl<Exact>(g, go);
    if (*tr) return cmd_train(g, to);
    if (*sep) return cmd_separation(g, dims);
    if (*ev) return cmd_eval(g, eo);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
