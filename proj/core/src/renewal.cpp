#include "bitshift/renewal.hpp"

#include <cmath>
#include <unordered_map>
#include <sstream>

#include "bitshift/entropy_engine.hpp"
#include "bitshift/error.hpp"
#include "bitshift/numeric.hpp"

namespace bitshift {
namespace {

struct RenewalSetup {
  TransferOperators ops;
  std::size_t renewal_letter;
  std::size_t start_class;
  double base;
};

RenewalSetup setup(const JointChain& joint) {
  const MarkovChainModel& chain = joint.chain;
  const std::size_t pinned =
      chain.find(encode_state(joint.source.d, HiddenState{joint.source.d, -1, 1}));
  if (joint.jitter.eps <= 0.0 || pinned == chain.size()) {
    throw Error(ErrorCode::kDegenerateRenewal,
                "letter d-2 never occurs (needs eps > 0 and p_d > 0)");
  }
  TransferOperators ops(chain);
  const auto letter = ops.index_of(joint.low_renewal_letter());
  const std::size_t start = ops.future_class(pinned);
  double base = 0.0;
  for (std::size_t s = 0; s < chain.size(); ++s) {
    if (chain.output(s) == joint.low_renewal_letter()) base += chain.stationary()[s];
  }
  return {std::move(ops), *letter, start, base};
}

struct GridKeyHash {
  std::size_t operator()(const std::vector<long long>& key) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (long long v : key) {
      h ^= std::hash<long long>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

std::vector<double> step_vector(const std::vector<double>& v, const Matrix& step) {
  std::vector<double> out(step.cols(), 0.0);
  for (std::size_t c = 0; c < v.size(); ++c) {
    if (v[c] == 0.0) continue;
    const auto row = step.row(c);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += v[c] * row[n];
  }
  return out;
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

double renewal_base_probability(const JointChain& joint) { return setup(joint).base; }

ReturnWordTable return_word_probabilities(const JointChain& joint, std::size_t r_max,
                                          const ReturnWordOptions& options) {
  const RenewalSetup s = setup(joint);
  const Letter renewal = joint.low_renewal_letter();
  const std::size_t letters = s.ops.letters();

  struct Open {
    SymbolWord interior;
    std::vector<double> forward;
  };
  std::vector<double> start(s.ops.classes(), 0.0);
  start[s.start_class] = s.base;
  std::vector<Open> level{{{}, std::move(start)}};

  ReturnWordTable table;
  table.base_probability = s.base;
  table.r_max = r_max;
  CompensatedSum closed;
  for (std::size_t r = 0; r <= r_max && !level.empty(); ++r) {
    std::vector<Open> next;
    for (const Open& open : level) {
      const double q = total(step_vector(open.forward, s.ops.step(s.renewal_letter)));
      if (r == 0 || q > 0.0) {
        SymbolWord word{renewal};
        word.insert(word.end(), open.interior.begin(), open.interior.end());
        word.push_back(renewal);
        table.entries.push_back({std::move(word), q});
        closed.add(q);
      }
      if (r == r_max) continue;
      for (std::size_t b = 0; b < letters; ++b) {
        if (b == s.renewal_letter) continue;
        auto forward = step_vector(open.forward, s.ops.step(b));
        const double mass = total(forward);
        if (!(mass > 0.0) || mass < options.probability_floor) continue;
        SymbolWord interior = open.interior;
        interior.push_back(s.ops.alphabet()[b]);
        next.push_back({std::move(interior), std::move(forward)});
        if (next.size() > options.max_words) {
          std::ostringstream msg;
          msg << "more than " << options.max_words << " open return prefixes at r="
              << r + 1;
          throw Error(ErrorCode::kResourceLimit, msg.str());
        }
      }
    }
    level.swap(next);
  }
  table.coverage = closed.value() / s.base;
  return table;
}

RenewalEstimate renewal_entropy_estimate(const JointChain& joint, std::size_t r_max,
                                         const RenewalEstimateOptions& options) {
  const RenewalSetup s = setup(joint);
  const std::size_t letters = s.ops.letters();
  const std::size_t classes = s.ops.classes();

  // An open bucket carries the summed forward vectors of its prefixes and the
  // summed -q ln q of their cylinder probabilities.
  struct Bucket {
    std::vector<double> forward;
    double mass = 0.0;
    double neg_q_log_q = 0.0;
  };
  std::vector<double> start(classes, 0.0);
  start[s.start_class] = s.base;
  std::vector<Bucket> level{{std::move(start), s.base, neg_x_log_x(s.base)}};

  RenewalEstimate out;
  out.base_probability = s.base;
  CompensatedSum closed_entropy, closed_mass;
  std::size_t r = 0;
  for (; r <= r_max && !level.empty(); ++r) {
    std::vector<Bucket> next;
    std::unordered_map<std::vector<long long>, std::size_t, GridKeyHash> index;
    for (const Bucket& bucket : level) {
      for (std::size_t b = 0; b < letters; ++b) {
        if (r == r_max && b != s.renewal_letter) continue;
        auto forward = step_vector(bucket.forward, s.ops.step(b));
        const double mass = total(forward);
        if (!(mass > 0.0)) continue;
        // Each prefix q extends to q * ratio; -sum (q ratio) ln(q ratio).
        const double ratio = mass / bucket.mass;
        const double entropy = ratio * bucket.neg_q_log_q - mass * std::log(ratio);
        if (b == s.renewal_letter) {
          closed_entropy.add(entropy);
          closed_mass.add(mass);
          continue;
        }
        if (mass < options.probability_floor) continue;
        if (options.merge_resolution > 0.0) {
          std::vector<long long> key(classes);
          for (std::size_t c = 0; c < classes; ++c) {
            key[c] = std::llround(forward[c] / mass / options.merge_resolution);
          }
          const auto [it, inserted] = index.emplace(std::move(key), next.size());
          if (!inserted) {
            Bucket& target = next[it->second];
            for (std::size_t c = 0; c < classes; ++c) target.forward[c] += forward[c];
            target.mass += mass;
            target.neg_q_log_q += entropy;
            continue;
          }
        }
        next.push_back({std::move(forward), mass, entropy});
        if (next.size() > options.max_buckets) {
          std::ostringstream msg;
          msg << "more than " << options.max_buckets << " open return prefixes at r="
              << r + 1;
          throw Error(ErrorCode::kResourceLimit, msg.str());
        }
      }
    }
    out.peak_buckets = std::max(out.peak_buckets, next.size());
    level.swap(next);
    if (closed_mass.value() / s.base >= options.target_coverage) {
      ++r;
      break;
    }
  }
  out.r_reached = r == 0 ? 0 : r - 1;
  out.coverage = closed_mass.value() / s.base;
  out.estimate_bits = (closed_entropy.value() - neg_x_log_x(s.base)) / kLn2;
  return out;
}

}  // namespace bitshift
