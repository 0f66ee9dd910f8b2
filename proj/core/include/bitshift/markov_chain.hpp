#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bitshift/numeric.hpp"

namespace bitshift {

using StateId = std::uint32_t;
using Letter = int;

// Finite stationary ergodic Markov chain with a letter attached to each state.
// Immutable once built; states with zero stationary mass are never present.
class MarkovChainModel {
 public:
  std::size_t size() const { return ids_.size(); }

  std::span<const StateId> states() const { return ids_; }
  StateId id(std::size_t i) const { return ids_[i]; }

  const Matrix& transition() const { return transition_; }
  double transition(std::size_t from, std::size_t to) const {
    return transition_(from, to);
  }

  std::span<const double> stationary() const { return stationary_; }

  Letter output(std::size_t i) const { return output_[i]; }
  std::span<const Letter> outputs() const { return output_; }

  // Distinct output letters in increasing order.
  std::span<const Letter> alphabet() const { return alphabet_; }
  // Position of output(i) inside alphabet().
  std::size_t letter_index(std::size_t i) const { return letter_index_[i]; }

  // Index of the state with the given id, or size() when absent.
  std::size_t find(StateId id) const;

 private:
  friend MarkovChainModel build_chain(std::span<const StateId>, const Matrix&,
                                      std::span<const Letter>);

  std::vector<StateId> ids_;
  Matrix transition_;
  std::vector<double> stationary_;
  std::vector<Letter> output_;
  std::vector<Letter> alphabet_;
  std::vector<std::size_t> letter_index_;
};

// Validates the transition matrix, drops states outside the unique recurrent
// class and solves for the stationary law.
// Throws Error{kNonStochastic} on a bad row, Error{kReducible} when more than
// one recurrent class exists, Error{kBadParams} on shape mismatches.
MarkovChainModel build_chain(std::span<const StateId> states,
                             const Matrix& transition,
                             std::span<const Letter> output_map);

// Entropy rate of the hidden chain itself in bits per step.
double entropy_rate_markov(const MarkovChainModel& chain);

// Output letters along a path of length n whose first state is drawn from the
// stationary law. Deterministic in (chain, n, seed) on every platform.
std::vector<Letter> sample_path(const MarkovChainModel& chain, std::size_t n,
                                std::uint64_t seed);

}  // namespace bitshift
