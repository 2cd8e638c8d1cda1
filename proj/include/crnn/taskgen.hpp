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

#include <array>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "crnn/pauli.hpp"
#include "crnn/scalar.hpp"
#include "crnn/tableau.hpp"

namespace crnn {

inline constexpr int kTaskSchemaVersion = 1;

enum class InitialState { SQUEEZED, GKP };

inline const char* initial_state_name(InitialState s) { return s == InitialState::GKP ? "gkp" : "squeezed"; }

inline InitialState initial_state_from_name(const std::string& s) {
  if (s == "gkp") return InitialState::GKP;
  if (s == "squeezed") return InitialState::SQUEEZED;
  throw std::invalid_argument("unknown initial state '" + s + "'");
}

template <class B>
using RealMatrix = std::vector<std::vector<typename B::value_type>>;

/// Exact square root of a rational, if it has one.
inline std::optional<Rational> rational_sqrt(const Rational& x) {
  if (x < 0) return std::nullopt;
  BigInt n = numerator(x), d = denominator(x);
  BigInt rn = boost::multiprecision::sqrt(n), rd = boost::multiprecision::sqrt(d);
  if (rn * rn != n || rd * rd != d) return std::nullopt;
  return Rational(rn, rd);
}

inline Rational parse_rational(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rational(BigInt(s));
  return frac(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
}

template <class B>
nlohmann::json value_json(const typename B::value_type& x) {
  if constexpr (std::is_same_v<B, Exact>) {
    return to_string(x);
  } else {
    return x;
  }
}

template <class B>
typename B::value_type value_from_json(const nlohmann::json& j) {
  if constexpr (std::is_same_v<B, Exact>) {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    return parse_rational(j.get<std::string>());
  } else {
    return j.get<double>();
  }
}

template <class B>
typename B::value_type frobenius_norm(const RealMatrix<B>& m) {
  using T = typename B::value_type;
  T s = B::zero();
  for (const auto& row : m)
    for (const auto& x : row) s += x * x;
  if constexpr (std::is_same_v<B, Exact>) {
    auto r = rational_sqrt(s);
    if (!r) throw UnitError("Frobenius norm is irrational: " + to_string(s));
    return *r;
  } else {
    return std::sqrt(s);
  }
}

template <class B>
void check_edge_matrix(const RealMatrix<B>& m) {
  using T = typename B::value_type;
  std::size_t n = m.size();
  T quarter = B::from_rational(Rational(1, 4));
  for (std::size_t i = 0; i < n; ++i) {
    if (m[i].size() != n) throw std::invalid_argument("edge matrix not square");
    if (m[i][i] != B::zero()) throw std::invalid_argument("edge matrix not hollow");
    for (std::size_t j = 0; j < n; ++j) {
      if (m[i][j] != m[j][i]) throw std::invalid_argument("edge matrix not symmetric");
      if (m[i][j] > quarter || m[i][j] < -quarter)
        throw std::invalid_argument("edge weight outside [-1/4, 1/4]");
    }
  }
}

/// Q = (B + H/2 | ||B||_F I) where H is the hollow all-ones matrix.
template <class B>
RealMatrix<B> build_Q(const RealMatrix<B>& bm) {
  check_edge_matrix<B>(bm);
  std::size_t n = bm.size();
  auto norm = frobenius_norm<B>(bm);
  auto half = B::from_rational(Rational(1, 2));
  RealMatrix<B> q(n, std::vector<typename B::value_type>(2 * n, B::zero()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) q[i][j] = bm[i][j] + (i == j ? B::zero() : half);
    q[i][n + i] = norm;
  }
  return q;
}

/// Adjacency of the graph state whose nullifiers span the rows of Q:
/// each row rescaled so its p-part is -e_k.
template <class B>
RealMatrix<B> graph_of_Q(const RealMatrix<B>& q) {
  std::size_t n = q.size();
  RealMatrix<B> e(n, std::vector<typename B::value_type>(n, B::zero()));
  for (std::size_t i = 0; i < n; ++i) {
    auto s = q[i][n + i];
    if (B::is_zero(s)) throw std::invalid_argument("Q row has no p-part; not a graph form");
    for (std::size_t j = 0; j < n; ++j) e[i][j] = -q[i][j] / s;
  }
  return e;
}

/// Graph nullifier rows (E_k | -e_k).
template <class B>
RealMatrix<B> graph_rows(const RealMatrix<B>& e) {
  std::size_t n = e.size();
  RealMatrix<B> r(n, std::vector<typename B::value_type>(2 * n, B::zero()));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) r[k][l] = e[k][l];
    r[k][n + k] = B::from_int(-1);
  }
  return r;
}

/// Elementwise reciprocal with 0 -> 0.
template <class T>
std::vector<T> modified_transform(const std::vector<T>& row) {
  std::vector<T> out(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) out[i] = row[i] == T(0) ? T(0) : T(1) / row[i];
  return out;
}

// ------------------------------------------------------------ instances

/// Rows are stored in word units (q-part in g_q, p-part in g_p).
inline std::vector<double> word_to_physical(std::vector<double> v, const UnitSystem& us) {
  std::size_t n = v.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] *= us.g_q_value;
    v[n + i] *= us.g_p_value();
  }
  return v;
}

inline std::vector<double> physical_to_word(std::vector<double> v, const UnitSystem& us) {
  std::size_t n = v.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] /= us.g_q_value;
    v[n + i] /= us.g_p_value();
  }
  return v;
}

/// Float frame with g_q = g_p, so word rows are physical rows up to scale.
inline UnitSystem balanced_units() { return UnitSystem{Rational(1), std::sqrt(kPi)}; }

template <class B>
struct TaskInstance {
  using T = typename B::value_type;
  int n = 0, k = 0;
  RealMatrix<B> inputs;  ///< rows 0..n-1 nullifiers, then k Pauli exponent vectors
  std::vector<MeasurementOutcome<B>> outputs;
  InitialState init = InitialState::SQUEEZED;
  bool modified = false;
  UnitSystem units{};
  nlohmann::json metadata = nlohmann::json::object();

  StabilizerTableau<B> initial_tableau() const {
    if (init == InitialState::GKP) return StabilizerTableau<B>::init_gkp(n);
    return StabilizerTableau<B>::init_squeezed(n, units);
  }

  /// Row as measured: transformed if `modified`, then (float backend) moved
  /// from word units to physical values.
  std::vector<T> effective_row(std::size_t r) const {
    auto row = modified ? modified_transform(inputs[r]) : inputs[r];
    if constexpr (std::is_same_v<B, Float>) row = word_to_physical(row, units);
    return row;
  }

  MeasurementOutcome<B> apply(StabilizerTableau<B>& t, std::size_t r, Draw<B> d) const {
    auto row = effective_row(r);
    if (static_cast<int>(r) < n) return t.measure_nullifier(row, d);
    return t.measure_pauli(PauliWord<B>::from_vector(row, B::zero(), t.units), d);
  }
};

/// Random loopless graph with weights on the j/8 grid, |j| <= 8.
struct RandomSource {};

/// Edge matrix B fed through build_Q.
template <class B>
struct EdgeSource {
  RealMatrix<B> edges;
};

template <class B>
using InstanceSource = std::variant<RandomSource, EdgeSource<B>, GraphSpec<B>>;

struct InstanceOptions {
  InitialState init = InitialState::SQUEEZED;
  bool modified = false;
  int max_coefficient = 2;  ///< suffix Pauli entries are integers in [-c, c]
};

template <class B>
typename B::value_type grid_entry(std::mt19937_64& rng, int bound, int den) {
  std::uniform_int_distribution<int> d(-bound, bound);
  return B::from_rational(Rational(d(rng), den));
}

template <class B>
RealMatrix<B> random_hollow(int n, std::mt19937_64& rng, int bound, int den) {
  RealMatrix<B> m(n, std::vector<typename B::value_type>(n, B::zero()));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m[i][j] = m[j][i] = grid_entry<B>(rng, bound, den);
  return m;
}

/// Replays rows [from, to) with random draws, appending outcomes. With
/// `zero_draws` a random step takes the outcome 0 whenever 0 is admissible.
template <class B>
void run_rows(TaskInstance<B>& inst, StabilizerTableau<B>& t, std::size_t from, std::size_t to,
              std::mt19937_64& rng, bool zero_draws = false) {
  for (std::size_t r = from; r < to; ++r) {
    if (zero_draws) {
      auto trial = t;
      auto o = inst.apply(trial, r, Draw<B>::force(B::zero()));
      if (o.consistent) {
        t = std::move(trial);
        inst.outputs.push_back(o);
        continue;
      }
    }
    inst.outputs.push_back(inst.apply(t, r, Draw<B>::from(rng)));
  }
}

template <class B>
TaskInstance<B> gen_instance(int n, int k, const InstanceSource<B>& source, std::mt19937_64& rng,
                             const InstanceOptions& opt = {}, UnitSystem us = {}) {
  using T = typename B::value_type;
  if (n < 2) throw std::invalid_argument("gen_instance needs n >= 2");
  if (k < 0) throw std::invalid_argument("gen_instance needs k >= 0");
  TaskInstance<B> inst;
  inst.n = n;
  inst.k = k;
  inst.init = opt.init;
  inst.modified = opt.modified;
  inst.units = us;
  if (const auto* es = std::get_if<EdgeSource<B>>(&source)) {
    if (static_cast<int>(es->edges.size()) != n) throw std::invalid_argument("edge matrix size mismatch");
    inst.inputs = build_Q<B>(es->edges);
    nlohmann::json e;
    for (const auto& row : es->edges) e.push_back(StabilizerTableau<B>::vec_json(row));
    inst.metadata["edges"] = e;
    inst.metadata["source"] = "edges";
  } else {
    RealMatrix<B> adj;
    if (const auto* g = std::get_if<GraphSpec<B>>(&source)) {
      if (g->n() != n) throw std::invalid_argument("graph size mismatch");
      for (int i = 0; i < n; ++i) {
        if (static_cast<int>(g->adjacency[i].size()) != n) throw std::invalid_argument("graph not square");
        if (!B::is_zero(g->adjacency[i][i])) throw std::invalid_argument("graph has a loop");
        for (int j = 0; j < n; ++j)
          if (!B::equal(g->adjacency[i][j], g->adjacency[j][i]))
            throw std::invalid_argument("adjacency not symmetric");
      }
      adj = g->adjacency;
      inst.metadata["source"] = "graph";
    } else {
      adj = random_hollow<B>(n, rng, 8, 8);
      inst.metadata["source"] = "random";
    }
    inst.inputs = graph_rows<B>(adj);
    nlohmann::json e;
    for (const auto& row : adj) e.push_back(StabilizerTableau<B>::vec_json(row));
    inst.metadata["graph"] = e;
  }
  std::uniform_int_distribution<int> coef(-opt.max_coefficient, opt.max_coefficient);
  for (int r = 0; r < k; ++r) {
    std::vector<T> v(2 * n, B::zero());
    bool zero = true;
    while (zero) {
      for (auto& x : v) {
        x = B::from_int(coef(rng));
        if (!B::is_zero(x)) zero = false;
      }
    }
    inst.inputs.push_back(v);
  }
  auto t = inst.initial_tableau();
  inst.units = t.units;
  run_rows(inst, t, 0, inst.inputs.size(), rng);
  return inst;
}

// ------------------------------------------------------------ consistency

enum class StepVerdict { MATCH, CONDITIONED, MISMATCH, SKIPPED };

inline const char* verdict_name(StepVerdict v) {
  switch (v) {
    case StepVerdict::MATCH: return "match";
    case StepVerdict::CONDITIONED: return "conditioned";
    case StepVerdict::MISMATCH: return "mismatch";
    case StepVerdict::SKIPPED: return "skipped";
  }
  return "?";
}

struct ConsistencyReport {
  std::vector<StepVerdict> steps;
  bool consistent = true;
  int first_failure = -1;
};

/// Float comparisons in the replay use this tolerance (half-turn units).
inline constexpr double kReplayTolerance = 1e-6;

template <class B>
ConsistencyReport consistency_check(const TaskInstance<B>& inst,
                                    const std::vector<typename B::value_type>& candidate) {
  if (candidate.size() != inst.inputs.size())
    throw std::invalid_argument("candidate arity " + std::to_string(candidate.size()) + " != " +
                                std::to_string(inst.inputs.size()));
  struct TolGuard {
    double saved = Float::tol;
    TolGuard() { Float::tol = kReplayTolerance; }
    ~TolGuard() { Float::tol = saved; }
  } guard;
  ConsistencyReport rep;
  auto t = inst.initial_tableau();
  for (std::size_t r = 0; r < candidate.size(); ++r) {
    if (!rep.consistent) {
      rep.steps.push_back(StepVerdict::SKIPPED);
      continue;
    }
    MeasurementOutcome<B> o;
    try {
      o = inst.apply(t, r, Draw<B>::force(candidate[r]));
    } catch (const InconsistentTableau&) {
      o.consistent = false;
    }
    if (!o.consistent) {
      rep.steps.push_back(StepVerdict::MISMATCH);
      rep.consistent = false;
      rep.first_failure = static_cast<int>(r);
    } else {
      rep.steps.push_back(o.deterministic ? StepVerdict::MATCH : StepVerdict::CONDITIONED);
    }
  }
  return rep;
}

template <class B>
std::vector<typename B::value_type> transcript_values(const TaskInstance<B>& inst) {
  std::vector<typename B::value_type> v;
  for (const auto& o : inst.outputs) v.push_back(o.value);
  return v;
}

// ------------------------------------------------------------ adversarial triples

template <class B>
struct AdversarialTriple {
  std::array<TaskInstance<B>, 3> instances;
  std::array<RealMatrix<B>, 3> edges;  ///< B, B', B'' (empty when built from graphs)
  DistinguishingSequence<B> suffix;
};

/// Outcome pairs of the two suffix steps, one per instance.
template <class B>
std::array<std::pair<typename B::value_type, typename B::value_type>, 3> suffix_outcomes(
    const AdversarialTriple<B>& tr) {
  std::array<std::pair<typename B::value_type, typename B::value_type>, 3> out;
  for (int i = 0; i < 3; ++i) {
    const auto& o = tr.instances[i].outputs;
    out[i] = {o[o.size() - 2].value, o.back().value};
  }
  return out;
}

template <class B>
bool phases_equal(const typename B::value_type& x, const typename B::value_type& y) {
  return B::is_zero(B::mod(x - y + 1, 2) - 1);
}

/// Three prefixes (base state, graph e1, graph e2) followed by the
/// distinguishing pair. The first suffix outcome is fixed to its value on
/// the base state for all three; the second is then forced and differs
/// between the two graph states.
template <class B>
AdversarialTriple<B> assemble_triple(const std::array<RealMatrix<B>, 3>& prefixes, const RealMatrix<B>& e1,
                                     const RealMatrix<B>& e2, std::mt19937_64& rng, bool zero_draws = false) {
  int n = static_cast<int>(e1.size());
  auto edge = find_differing_edge<B>(e1, e2);
  if (!edge) throw std::invalid_argument("graphs are equal");
  UnitSystem us = balanced_units();
  if constexpr (std::is_same_v<B, Exact>) us = lemma_units(e1[edge->first][edge->second] - e2[edge->first][edge->second]);
  AdversarialTriple<B> tr;
  std::array<StabilizerTableau<B>, 3> ts;
  for (int i = 0; i < 3; ++i) {
    auto& inst = tr.instances[i];
    inst.n = n;
    inst.k = 2;
    inst.units = us;
    inst.inputs = prefixes[i];
    ts[i] = inst.initial_tableau();
    run_rows(inst, ts[i], 0, n, rng, zero_draws);
  }
  tr.suffix = distinguishing_sequence(ts[0], ts[1], ts[2], e1, e2);
  auto m1 = tr.suffix.m1.vec(), m2 = tr.suffix.m2.vec();
  auto base = ts[0].forced_phase(PauliWord<B>::from_vector(m1, B::zero(), us));
  if constexpr (std::is_same_v<B, Float>) {
    m1 = physical_to_word(m1, us);
    m2 = physical_to_word(m2, us);
  }
  if (!base) throw std::logic_error("first suffix step is not a stabilizer of the base state");
  for (int i = 0; i < 3; ++i) {
    auto& inst = tr.instances[i];
    inst.inputs.push_back(m1);
    inst.inputs.push_back(m2);
    auto o = inst.apply(ts[i], n, Draw<B>::force(*base));
    if (!o.consistent) throw std::logic_error("base outcome not admissible on a graph state");
    inst.outputs.push_back(o);
    run_rows(inst, ts[i], n + 1, n + 2, rng, zero_draws);
    inst.metadata["triple_member"] = i;
    inst.metadata["branch"] = tr.suffix.branch;
    inst.metadata["edge"] = {edge->first, edge->second};
  }
  auto so = suffix_outcomes(tr);
  const auto& o1 = tr.instances[1].outputs.back();
  const auto& o2 = tr.instances[2].outputs.back();
  if (!o1.deterministic || !o2.deterministic || phases_equal<B>(so[1].second, so[2].second))
    throw std::logic_error("distinguishing suffix failed to separate the graph states");
  return tr;
}

/// Triple from two explicit graphs; the base member is the B = 0 prefix.
template <class B>
AdversarialTriple<B> triple_from_graphs(const GraphSpec<B>& g1, const GraphSpec<B>& g2, std::mt19937_64& rng) {
  int n = g1.n();
  if (n < 2 || g2.n() != n) throw std::invalid_argument("triple needs two graphs on n >= 2 modes");
  RealMatrix<B> zero(n, std::vector<typename B::value_type>(n, B::zero()));
  auto tr = assemble_triple<B>({build_Q<B>(zero), graph_rows<B>(g1.adjacency), graph_rows<B>(g2.adjacency)},
                               g1.adjacency, g2.adjacency, rng);
  tr.edges[0] = zero;
  return tr;
}

struct TripleStats {
  int draws = 0;
  int rejected_zero = 0, rejected_norm = 0, rejected_rescaling = 0;
};

/// B = 0 plus two edge matrices from the j/8 grid (|j| <= 2). Draws whose Q
/// rows would be rescalings of each other (equal graphs) are rejected, as are
/// irrational norms in the exact backend.
template <class B>
AdversarialTriple<B> gen_adversarial_triple(int n, std::mt19937_64& rng, int max_tries = 10000,
                                            TripleStats* stats = nullptr, bool zero_draws = false) {
  if (n < 2) throw std::invalid_argument("adversarial triple needs n >= 2");
  TripleStats local;
  TripleStats& st = stats ? *stats : local;
  auto draw = [&]() -> std::optional<RealMatrix<B>> {
    auto m = random_hollow<B>(n, rng, 2, 8);
    bool nonzero = false;
    for (const auto& row : m)
      for (const auto& x : row)
        if (!B::is_zero(x)) nonzero = true;
    if (!nonzero) {
      ++st.rejected_zero;
      return std::nullopt;
    }
    try {
      frobenius_norm<B>(m);
    } catch (const UnitError&) {
      ++st.rejected_norm;
      return std::nullopt;
    }
    return m;
  };
  for (int tries = 0; tries < max_tries; ++tries) {
    ++st.draws;
    auto b1 = draw();
    if (!b1) continue;
    auto b2 = draw();
    if (!b2) continue;
    auto q1 = build_Q<B>(*b1), q2 = build_Q<B>(*b2);
    auto e1 = graph_of_Q<B>(q1), e2 = graph_of_Q<B>(q2);
    if (!find_differing_edge<B>(e1, e2)) {
      ++st.rejected_rescaling;
      continue;
    }
    RealMatrix<B> zero(n, std::vector<typename B::value_type>(n, B::zero()));
    auto tr = assemble_triple<B>({build_Q<B>(zero), q1, q2}, e1, e2, rng, zero_draws);
    tr.edges = {zero, *b1, *b2};
    for (int i = 0; i < 3; ++i) {
      nlohmann::json e;
      for (const auto& row : tr.edges[i]) e.push_back(StabilizerTableau<B>::vec_json(row));
      tr.instances[i].metadata["edges"] = e;
    }
    return tr;
  }
  throw std::runtime_error("adversarial triple sampling failed after " + std::to_string(max_tries) + " draws");
}

// ------------------------------------------------------------ jsonl

template <class B>
nlohmann::json to_json(const TaskInstance<B>& inst) {
  nlohmann::json j;
  j["schema_version"] = kTaskSchemaVersion;
  j["backend"] = B::name;
  j["n"] = inst.n;
  j["k"] = inst.k;
  j["init"] = initial_state_name(inst.init);
  j["modified"] = inst.modified;
  j["units"] = {{"kappa", to_string(inst.units.kappa)}, {"g_q", inst.units.g_q_value}};
  nlohmann::json flat = nlohmann::json::array();
  for (const auto& row : inst.inputs)
    for (const auto& x : row) flat.push_back(value_json<B>(x));
  j["inputs"] = flat;
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& o : inst.outputs)
    tr.push_back({{"kind", o.kind == MeasurementKind::NULLIFIER ? "nullifier" : "pauli"},
                  {"value", value_json<B>(o.value)},
                  {"deterministic", o.deterministic}});
  j["transcript"] = tr;
  j["metadata"] = inst.metadata;
  return j;
}

template <class B>
TaskInstance<B> instance_from_json(const nlohmann::json& j) {
  int ver = j.at("schema_version").get<int>();
  if (ver != kTaskSchemaVersion) throw std::runtime_error("unsupported schema_version " + std::to_string(ver));
  if (j.at("backend").get<std::string>() != B::name) throw std::runtime_error("backend mismatch in task json");
  TaskInstance<B> inst;
  inst.n = j.at("n").get<int>();
  inst.k = j.at("k").get<int>();
  inst.init = initial_state_from_name(j.at("init").get<std::string>());
  inst.modified = j.at("modified").get<bool>();
  inst.units.kappa = parse_rational(j.at("units").at("kappa").get<std::string>());
  inst.units.g_q_value = j.at("units").at("g_q").get<double>();
  const auto& flat = j.at("inputs");
  std::size_t rows = static_cast<std::size_t>(inst.n + inst.k), cols = static_cast<std::size_t>(2 * inst.n);
  if (flat.size() != rows * cols) throw std::runtime_error("inputs have the wrong length");
  inst.inputs.assign(rows, std::vector<typename B::value_type>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) inst.inputs[r][c] = value_from_json<B>(flat[r * cols + c]);
  for (const auto& o : j.at("transcript")) {
    MeasurementOutcome<B> m;
    m.kind = o.at("kind").get<std::string>() == "nullifier" ? MeasurementKind::NULLIFIER : MeasurementKind::PAULI;
    m.value = value_from_json<B>(o.at("value"));
    m.deterministic = o.at("deterministic").get<bool>();
    inst.outputs.push_back(m);
  }
  inst.metadata = j.value("metadata", nlohmann::json::object());
  return inst;
}

template <class B>
void write_jsonl(const std::string& path, const std::vector<TaskInstance<B>>& xs) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& x : xs) f << to_json(x).dump() << '\n';
}

template <class B>
std::vector<TaskInstance<B>> read_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::vector<TaskInstance<B>> xs;
  std::string line;
  int no = 0;
  while (std::getline(f, line)) {
    ++no;
    if (line.empty()) continue;
    try {
      xs.push_back(instance_from_json<B>(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return xs;
}

/// Instance i uses its own rng seeded from (seed, i).
inline std::mt19937_64 instance_rng(std::uint64_t seed, std::uint64_t i) {
  std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                  static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
  return std::mt19937_64(s);
}

template <class B>
std::vector<TaskInstance<B>> gen_dataset(int count, int n, int k, std::uint64_t seed,
                                         const InstanceOptions& opt = {}) {
  std::vector<TaskInstance<B>> xs;
  for (int i = 0; i < count; ++i) {
    auto rng = instance_rng(seed, static_cast<std::uint64_t>(i));
    xs.push_back(gen_instance<B>(n, k, RandomSource{}, rng, opt));
  }
  return xs;
}

}  // namespace crnn
