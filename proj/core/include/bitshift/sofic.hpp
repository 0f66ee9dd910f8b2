#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bitshift/markov_chain.hpp"

namespace bitshift {

using SymbolWord = std::vector<Letter>;

// Labeled graph presenting a sofic shift. Vertices are opaque ids; each edge
// carries the letter emitted on arrival.
struct LabeledPresentation {
  struct Edge {
    std::size_t to;
    Letter label;
  };

  std::vector<StateId> vertices;
  std::vector<std::vector<Edge>> out;

  std::size_t edge_count() const;
  // Sorted distinct edge labels.
  std::vector<Letter> alphabet() const;
};

// Label graph of the bit-shift output shift: vertices (x,a,b), edge
// (x,a,b) -> (x',a',b') iff a' == b, labeled x' + a' - b'.
LabeledPresentation presentation(int d, int k);

// Edges wherever the chain has positive transition probability.
LabeledPresentation presentation_from_chain(const MarkovChainModel& chain);

// Label-deterministic automaton; state 0 is the initial state.
class DeterministicPresentation {
 public:
  static constexpr std::int32_t kNoEdge = -1;

  // transitions[state * alphabet.size() + letter_index] is the successor or kNoEdge.
  DeterministicPresentation(std::vector<Letter> alphabet,
                            std::vector<std::int32_t> transitions,
                            std::vector<std::vector<std::size_t>> subsets = {});

  std::size_t size() const { return transitions_.size() / alphabet_.size(); }
  std::span<const Letter> alphabet() const { return alphabet_; }

  std::int32_t next(std::size_t state, std::size_t letter_index) const {
    return transitions_[state * alphabet_.size() + letter_index];
  }

  // Presentation vertices making up each state; empty for hand-built machines.
  const std::vector<std::vector<std::size_t>>& subsets() const { return subsets_; }

  // A(i, j) = number of letters leading from i to j.
  Matrix adjacency() const;

  // Walks the word from the initial state; returns the reached state or
  // kNoEdge when the word dies. Error{kLetterOutOfRange} for letters outside
  // [min alphabet, max alphabet].
  std::int32_t run(std::span<const Letter> word) const;

 private:
  std::vector<Letter> alphabet_;
  std::vector<std::int32_t> transitions_;
  std::vector<std::vector<std::size_t>> subsets_;
};

// Subset construction started from the set of all vertices.
DeterministicPresentation determinize(const LabeledPresentation& graph);

bool word_admissible(const DeterministicPresentation& dfa, std::span<const Letter> word);

// Forbidden words of length <= max_len whose proper subwords are all
// admissible, sorted lexicographically. Error{kBadParams} if max_len < 2.
std::vector<SymbolWord> minimal_forbidden_words(const DeterministicPresentation& dfa,
                                                std::size_t max_len);

// Number of admissible words of length n (paths of length n from the initial state).
double count_admissible_words(const DeterministicPresentation& dfa, std::size_t n);

struct TopologicalEntropyOptions {
  double relative_tolerance = 1e-12;
  std::size_t max_iterations = 1'000'000;
};

// log2 of the Perron root of the adjacency matrix on the essential
// (bi-extendable) part. Error{kConvergenceFailure} if the iteration stalls.
double topological_entropy(const DeterministicPresentation& dfa,
                           const TopologicalEntropyOptions& options = {});

}  // namespace bitshift
