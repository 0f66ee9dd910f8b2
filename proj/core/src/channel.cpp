#include "bitshift/channel.hpp"

#include <cmath>
#include <sstream>

#include "bitshift/error.hpp"
#include "bitshift/numeric.hpp"

namespace bitshift {

void validate_run_lengths(int d, int k) {
  if (d < 2 || k <= d) {
    std::ostringstream msg;
    msg << "run lengths require 2 <= d < k, got d=" << d << " k=" << k;
    throw Error(ErrorCode::kBadParams, msg.str());
  }
}

SourceDist make_source(int d, int k, const SourceSpec& spec) {
  validate_run_lengths(d, k);
  SourceDist out{d, k, {}};
  const std::size_t n = out.alphabet_size();

  if (const auto* ex = std::get_if<ExplicitProbabilities>(&spec)) {
    if (ex->p.size() != n) {
      std::ostringstream msg;
      msg << "expected " << n << " probabilities, got " << ex->p.size();
      throw Error(ErrorCode::kBadProbabilities, msg.str());
    }
    out.p = ex->p;
  } else if (const auto* geo = std::get_if<TruncatedGeometric>(&spec)) {
    if (!(geo->gamma > 0.0) || !std::isfinite(geo->gamma)) {
      throw Error(ErrorCode::kBadProbabilities, "geometric ratio must be > 0");
    }
    out.p.resize(n);
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i, w *= geo->gamma) out.p[i] = w;
  } else {
    out.p.assign(n, 1.0);
  }

  double total = 0.0;
  for (double v : out.p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kBadProbabilities, "probabilities must be finite and >= 0");
    }
    total += v;
  }
  if (!(total > 0.0)) {
    throw Error(ErrorCode::kBadProbabilities, "probabilities sum to zero");
  }
  for (double& v : out.p) v /= total;
  return out;
}

double source_entropy(const SourceDist& source) {
  return entropy_bits(source.p);
}

double shift_probability(const JitterParams& jitter, int shift) {
  return shift == 0 ? 1.0 - 2.0 * jitter.eps : jitter.eps;
}

double jitter_entropy(double eps) {
  if (!(eps >= 0.0 && eps <= 0.5)) {
    std::ostringstream msg;
    msg << "jitter probability must lie in [0, 1/2], got " << eps;
    throw Error(ErrorCode::kDomainError, msg.str());
  }
  return (2.0 * neg_x_log_x(eps) + neg_x_log_x(1.0 - 2.0 * eps)) / kLn2;
}

StateId encode_state(int d, const HiddenState& s) {
  return static_cast<StateId>(((s.x - d) * 3 + (s.a + 1)) * 3 + (s.b + 1));
}

HiddenState decode_state(int d, StateId id) {
  const int v = static_cast<int>(id);
  return HiddenState{d + v / 9, (v / 3) % 3 - 1, v % 3 - 1};
}

JointChain build_joint_chain(const SourceDist& source, const JitterParams& jitter) {
  validate_run_lengths(source.d, source.k);
  jitter_entropy(jitter.eps);  // domain check

  std::vector<HiddenState> states;
  for (int x = source.d; x <= source.k; ++x) {
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) states.push_back({x, a, b});
    }
  }
  const std::size_t n = states.size();
  Matrix p(n, n);
  std::vector<StateId> ids(n);
  std::vector<Letter> outputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    ids[i] = encode_state(source.d, states[i]);
    outputs[i] = states[i].output();
    for (std::size_t j = 0; j < n; ++j) {
      const HiddenState& next = states[j];
      if (next.a != states[i].b) continue;
      p(i, j) = source.prob(next.x) * shift_probability(jitter, next.b);
    }
  }
  return JointChain{source, jitter, build_chain(ids, p, outputs)};
}

std::vector<Letter> output_alphabet(int d, int k) {
  validate_run_lengths(d, k);
  std::vector<Letter> out;
  for (Letter y = d - 2; y <= k + 2; ++y) out.push_back(y);
  return out;
}

}  // namespace bitshift
