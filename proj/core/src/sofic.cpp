#include "bitshift/sofic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "bitshift/channel.hpp"
#include "bitshift/error.hpp"

namespace bitshift {
namespace {

using Adjacency = std::vector<std::vector<std::size_t>>;

// Vertices lying on some bi-infinite path: repeatedly strip vertices without
// an in-edge or without an out-edge.
std::vector<bool> essential_vertices(const Adjacency& succ) {
  const std::size_t n = succ.size();
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> in_degree(n, 0), out_degree(n, 0);
  Adjacency pred(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v : succ[u]) {
      pred[v].push_back(u);
      ++in_degree[v];
      ++out_degree[u];
    }
  }
  std::vector<std::size_t> dead;
  for (std::size_t u = 0; u < n; ++u) {
    if (in_degree[u] == 0 || out_degree[u] == 0) {
      alive[u] = false;
      dead.push_back(u);
    }
  }
  while (!dead.empty()) {
    const std::size_t u = dead.back();
    dead.pop_back();
    for (std::size_t v : succ[u]) {
      if (alive[v] && --in_degree[v] == 0) {
        alive[v] = false;
        dead.push_back(v);
      }
    }
    for (std::size_t v : pred[u]) {
      if (alive[v] && --out_degree[v] == 0) {
        alive[v] = false;
        dead.push_back(v);
      }
    }
  }
  return alive;
}

// Strongly connected components of the subgraph induced by `keep`.
std::vector<std::vector<std::size_t>> components(const Adjacency& succ,
                                                 const std::vector<bool>& keep) {
  const std::size_t n = succ.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t s = 0; s < n; ++s) {
    if (!keep[s]) continue;
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : succ[u]) {
        if (keep[v] && !reach[s][v]) {
          reach[s][v] = true;
          stack.push_back(v);
        }
      }
    }
  }
  std::vector<bool> assigned(n, false);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (!keep[s] || assigned[s]) continue;
    std::vector<std::size_t> comp;
    for (std::size_t t = s; t < n; ++t) {
      if (keep[t] && reach[s][t] && reach[t][s]) {
        comp.push_back(t);
        assigned[t] = true;
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

// Perron root of an irreducible nonnegative matrix. Iterates on A + I, which
// is primitive, and stops once the Collatz-Wielandt bracket is tight.
double perron_root(const Matrix& a, const TopologicalEntropyOptions& options) {
  const std::size_t n = a.rows();
  std::vector<double> x(n, 1.0), y(n);
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = x[i];
      for (std::size_t j = 0; j < n; ++j) acc += a(i, j) * x[j];
      y[i] = acc;
      const double ratio = acc / x[i];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      norm += acc;
    }
    if (hi - lo <= options.relative_tolerance * hi) return 0.5 * (lo + hi) - 1.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
  }
  std::ostringstream msg;
  msg << "power iteration did not converge; last bracket [" << lo - 1.0 << ", "
      << hi - 1.0 << "]";
  throw Error(ErrorCode::kConvergenceFailure, msg.str());
}

}  // namespace

std::size_t LabeledPresentation::edge_count() const {
  std::size_t total = 0;
  for (const auto& edges : out) total += edges.size();
  return total;
}

std::vector<Letter> LabeledPresentation::alphabet() const {
  std::vector<Letter> letters;
  for (const auto& edges : out) {
    for (const Edge& e : edges) letters.push_back(e.label);
  }
  std::sort(letters.begin(), letters.end());
  letters.erase(std::unique(letters.begin(), letters.end()), letters.end());
  return letters;
}

LabeledPresentation presentation(int d, int k) {
  validate_run_lengths(d, k);
  std::vector<HiddenState> states;
  for (int x = d; x <= k; ++x) {
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) states.push_back({x, a, b});
    }
  }
  LabeledPresentation g;
  g.out.resize(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    g.vertices.push_back(encode_state(d, states[i]));
    for (std::size_t j = 0; j < states.size(); ++j) {
      if (states[j].a == states[i].b) g.out[i].push_back({j, states[j].output()});
    }
  }
  return g;
}

LabeledPresentation presentation_from_chain(const MarkovChainModel& chain) {
  LabeledPresentation g;
  g.vertices.assign(chain.states().begin(), chain.states().end());
  g.out.resize(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (std::size_t j = 0; j < chain.size(); ++j) {
      if (chain.transition(i, j) > 0.0) g.out[i].push_back({j, chain.output(j)});
    }
  }
  return g;
}

DeterministicPresentation::DeterministicPresentation(
    std::vector<Letter> alphabet, std::vector<std::int32_t> transitions,
    std::vector<std::vector<std::size_t>> subsets)
    : alphabet_(std::move(alphabet)),
      transitions_(std::move(transitions)),
      subsets_(std::move(subsets)) {
  if (alphabet_.empty() || transitions_.empty() ||
      transitions_.size() % alphabet_.size() != 0 ||
      !std::is_sorted(alphabet_.begin(), alphabet_.end())) {
    throw Error(ErrorCode::kBadParams, "malformed deterministic presentation");
  }
  const auto states = static_cast<std::int32_t>(size());
  for (std::int32_t t : transitions_) {
    if (t != kNoEdge && (t < 0 || t >= states)) {
      throw Error(ErrorCode::kBadParams, "transition target out of range");
    }
  }
}

Matrix DeterministicPresentation::adjacency() const {
  Matrix a(size(), size());
  for (std::size_t s = 0; s < size(); ++s) {
    for (std::size_t l = 0; l < alphabet_.size(); ++l) {
      const std::int32_t t = next(s, l);
      if (t != kNoEdge) a(s, static_cast<std::size_t>(t)) += 1.0;
    }
  }
  return a;
}

std::int32_t DeterministicPresentation::run(std::span<const Letter> word) const {
  std::int32_t state = 0;
  for (Letter y : word) {
    if (y < alphabet_.front() || y > alphabet_.back()) {
      std::ostringstream msg;
      msg << "letter " << y << " outside [" << alphabet_.front() << ", "
          << alphabet_.back() << "]";
      throw Error(ErrorCode::kLetterOutOfRange, msg.str());
    }
    if (state == kNoEdge) continue;
    const auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), y);
    state = *it == y ? next(static_cast<std::size_t>(state),
                            static_cast<std::size_t>(it - alphabet_.begin()))
                     : kNoEdge;
  }
  return state;
}

DeterministicPresentation determinize(const LabeledPresentation& graph) {
  const std::size_t n = graph.out.size();
  if (n == 0) throw Error(ErrorCode::kBadParams, "empty presentation");
  Adjacency succ(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& e : graph.out[u]) succ[u].push_back(e.to);
  }
  const auto alive = essential_vertices(succ);

  std::vector<Letter> alphabet;
  for (std::size_t u = 0; u < n; ++u) {
    if (!alive[u]) continue;
    for (const auto& e : graph.out[u]) {
      if (alive[e.to]) alphabet.push_back(e.label);
    }
  }
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  if (alphabet.empty()) {
    throw Error(ErrorCode::kBadParams, "presentation has no bi-infinite path");
  }
  const std::size_t m = alphabet.size();

  std::vector<std::size_t> initial;
  for (std::size_t u = 0; u < n; ++u) {
    if (alive[u]) initial.push_back(u);
  }
  std::map<std::vector<std::size_t>, std::int32_t> index;
  std::vector<std::vector<std::size_t>> subsets{initial};
  index.emplace(initial, 0);
  std::vector<std::int32_t> transitions;

  std::vector<std::vector<std::size_t>> targets(m);
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (auto& t : targets) t.clear();
    for (std::size_t u : subsets[s]) {
      for (const auto& e : graph.out[u]) {
        if (!alive[e.to]) continue;
        const auto l = static_cast<std::size_t>(
            std::lower_bound(alphabet.begin(), alphabet.end(), e.label) -
            alphabet.begin());
        targets[l].push_back(e.to);
      }
    }
    for (std::size_t l = 0; l < m; ++l) {
      auto& t = targets[l];
      if (t.empty()) {
        transitions.push_back(DeterministicPresentation::kNoEdge);
        continue;
      }
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
      const auto [it, inserted] =
          index.emplace(t, static_cast<std::int32_t>(subsets.size()));
      if (inserted) subsets.push_back(t);
      transitions.push_back(it->second);
    }
  }
  return DeterministicPresentation(std::move(alphabet), std::move(transitions),
                                   std::move(subsets));
}

bool word_admissible(const DeterministicPresentation& dfa, std::span<const Letter> word) {
  return dfa.run(word) != DeterministicPresentation::kNoEdge;
}

std::vector<SymbolWord> minimal_forbidden_words(const DeterministicPresentation& dfa,
                                                std::size_t max_len) {
  if (max_len < 2) throw Error(ErrorCode::kBadParams, "max_len must be >= 2");
  const auto alphabet = dfa.alphabet();
  const std::size_t m = alphabet.size();

  // Depth-first walk over admissible words u with 1 <= |u| < max_len. A word
  // u.b is minimal forbidden iff it dies while both u and its suffix
  // u[1:].b survive; every other proper subword sits inside one of the two.
  std::vector<SymbolWord> found;
  SymbolWord word;
  struct Frame {
    std::int32_t state;
    std::size_t next_letter;
  };
  std::vector<Frame> stack{{0, 0}};
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_letter == m) {
      stack.pop_back();
      if (!word.empty()) word.pop_back();
      continue;
    }
    const std::size_t l = top.next_letter++;
    const std::int32_t succ = dfa.next(static_cast<std::size_t>(top.state), l);
    if (succ == DeterministicPresentation::kNoEdge) {
      if (word.empty()) continue;
      word.push_back(alphabet[l]);
      if (word_admissible(dfa, std::span<const Letter>(word).subspan(1))) {
        found.push_back(word);
      }
      word.pop_back();
      continue;
    }
    if (word.size() + 1 < max_len) {
      word.push_back(alphabet[l]);
      stack.push_back({succ, 0});
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

double count_admissible_words(const DeterministicPresentation& dfa, std::size_t n) {
  std::vector<double> paths(dfa.size(), 0.0), next(dfa.size());
  paths[0] = 1.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < dfa.size(); ++s) {
      if (paths[s] == 0.0) continue;
      for (std::size_t l = 0; l < dfa.alphabet().size(); ++l) {
        const std::int32_t t = dfa.next(s, l);
        if (t != DeterministicPresentation::kNoEdge) {
          next[static_cast<std::size_t>(t)] += paths[s];
        }
      }
    }
    paths.swap(next);
  }
  double total = 0.0;
  for (double p : paths) total += p;
  return total;
}

double topological_entropy(const DeterministicPresentation& dfa,
                           const TopologicalEntropyOptions& options) {
  const Matrix a = dfa.adjacency();
  const std::size_t n = a.rows();
  Adjacency succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) > 0.0) succ[i].push_back(j);
    }
  }
  const auto alive = essential_vertices(succ);

  // The spectral radius of a block-triangular matrix is the largest one among
  // its irreducible diagonal blocks.
  double rho = 0.0;
  bool any = false;
  for (const auto& comp : components(succ, alive)) {
    Matrix block(comp.size(), comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i) {
      for (std::size_t j = 0; j < comp.size(); ++j) block(i, j) = a(comp[i], comp[j]);
    }
    rho = std::max(rho, perron_root(block, options));
    any = true;
  }
  if (!any || rho <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log2(rho);
}

}  // namespace bitshift
