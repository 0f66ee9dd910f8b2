#pragma once

#include <variant>
#include <vector>

#include "bitshift/markov_chain.hpp"

namespace bitshift {

// iid run-length law on {d, ..., k}; p[i] is the probability of length d + i.
struct SourceDist {
  int d = 2;
  int k = 3;
  std::vector<double> p;

  double prob(int length) const {
    return length < d || length > k ? 0.0 : p[static_cast<std::size_t>(length - d)];
  }
  std::size_t alphabet_size() const { return static_cast<std::size_t>(k - d + 1); }
};

struct ExplicitProbabilities {
  std::vector<double> p;
};

// p_l proportional to gamma^(l - d); gamma == 1 is the uniform law.
struct TruncatedGeometric {
  double gamma = 0.658;
};

struct Uniform {};

using SourceSpec = std::variant<ExplicitProbabilities, TruncatedGeometric, Uniform>;

// Throws Error{kBadParams} unless 2 <= d < k, Error{kBadProbabilities} on
// negative, non-finite or zero-mass weights.
SourceDist make_source(int d, int k, const SourceSpec& spec);

// Shannon entropy of the source letter in bits.
double source_entropy(const SourceDist& source);

struct JitterParams {
  double eps = 0.0;
};

// Probability of a single transition shift in {-1, 0, 1}.
double shift_probability(const JitterParams& jitter, int shift);

// -2 eps log2 eps - (1 - 2 eps) log2 (1 - 2 eps); Error{kDomainError} outside [0, 1/2].
double jitter_entropy(double eps);

// Hidden state of the joint chain: run length plus its left and right shifts.
struct HiddenState {
  int x = 0;
  int a = 0;
  int b = 0;

  Letter output() const { return x + a - b; }
  friend bool operator==(const HiddenState&, const HiddenState&) = default;
};

StateId encode_state(int d, const HiddenState& s);
HiddenState decode_state(int d, StateId id);

// Joint (run length, shift pair) chain together with the parameters that
// produced it.
struct JointChain {
  SourceDist source;
  JitterParams jitter;
  MarkovChainModel chain;

  HiddenState hidden(std::size_t i) const { return decode_state(source.d, chain.id(i)); }
  Letter low_renewal_letter() const { return source.d - 2; }
  Letter high_renewal_letter() const { return source.k + 2; }
};

// Transition (x,a,b) -> (x',a',b') has probability [a' == b] p_{x'} j(b').
JointChain build_joint_chain(const SourceDist& source, const JitterParams& jitter);

// {d - 2, ..., k + 2}; Error{kBadParams} unless 2 <= d < k.
std::vector<Letter> output_alphabet(int d, int k);

void validate_run_lengths(int d, int k);

}  // namespace bitshift
