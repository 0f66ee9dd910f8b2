#pragma once

#include <cstddef>
#include <vector>

#include "bitshift/channel.hpp"
#include "bitshift/sofic.hpp"

namespace bitshift {

// Renewal-based cross-check at the letter d - 2. The letter pins the hidden
// state to (d, -1, +1), so the output splits into independent return words
// [d-2, y_1..y_r, d-2] with every y_j != d-2.

struct ReturnWord {
  SymbolWord word;  // including both renewal letters
  double probability = 0.0;
};

struct ReturnWordTable {
  std::vector<ReturnWord> entries;
  double base_probability = 0.0;  // Q([d-2])
  double coverage = 0.0;          // sum of entry probabilities / Q([d-2])
  std::size_t r_max = 0;
};

struct ReturnWordOptions {
  std::size_t max_words = 2'000'000;  // retained open prefixes per level
  double probability_floor = 0.0;     // open prefixes below this are dropped
};

// Stationary mass of the letter d - 2, i.e. p_d eps^2.
// Error{kDegenerateRenewal} when the letter cannot occur (eps == 0 or p_d == 0).
double renewal_base_probability(const JointChain& joint);

// Every positive-probability return word with at most r_max interior letters
// (plus the forbidden [d-2, d-2] at r = 0). Error{kResourceLimit} past max_words.
ReturnWordTable return_word_probabilities(const JointChain& joint, std::size_t r_max,
                                          const ReturnWordOptions& options = {});

struct RenewalEstimateOptions {
  // 0 tracks every open prefix separately. A positive value merges open
  // prefixes whose normalized predictive law agrees on a grid of this spacing;
  // probabilities and coverage stay exact, only -Q log Q terms of merged
  // prefixes are approximated.
  double merge_resolution = 0.0;
  // Stop before r_max once this much return mass has been closed.
  double target_coverage = 1.0;
  std::size_t max_buckets = 2'000'000;
  double probability_floor = 0.0;
};

struct RenewalEstimate {
  double estimate_bits = 0.0;  // truncated Abramov series, bits per symbol
  double coverage = 0.0;
  double base_probability = 0.0;
  std::size_t r_reached = 0;
  std::size_t peak_buckets = 0;
};

// -sum Q(w) log Q(w) over return words with r <= r_max, plus Q log Q of the
// renewal cylinder. A diagnostic, not a bound: the unexplored tail is not
// extrapolated and the partial sum approaches the entropy rate from below.
RenewalEstimate renewal_entropy_estimate(const JointChain& joint, std::size_t r_max,
                                         const RenewalEstimateOptions& options = {});

}  // namespace bitshift
