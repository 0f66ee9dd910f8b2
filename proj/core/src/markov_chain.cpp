#include "bitshift/markov_chain.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "bitshift/error.hpp"

namespace bitshift {
namespace {

constexpr double kRowSumTolerance = 1e-9;

std::vector<std::vector<bool>> reachability(const Matrix& p) {
  const std::size_t n = p.rows();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < n; ++s) {
    auto& seen = reach[s];
    seen[s] = true;
    stack.assign(1, s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (p(u, v) > 0.0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
  }
  return reach;
}

// States of the unique closed communicating class, in original order.
std::vector<std::size_t> recurrent_class(const Matrix& p) {
  const std::size_t n = p.rows();
  const auto reach = reachability(p);
  std::vector<bool> recurrent(n, false);
  for (std::size_t s = 0; s < n; ++s) {
    bool closed = true;
    for (std::size_t t = 0; t < n && closed; ++t) {
      if (reach[s][t] && !reach[t][s]) closed = false;
    }
    recurrent[s] = closed;
  }
  std::vector<std::size_t> members;
  std::size_t representative = n;
  for (std::size_t s = 0; s < n; ++s) {
    if (!recurrent[s]) continue;
    if (representative == n) representative = s;
    if (!reach[representative][s]) {
      throw Error(ErrorCode::kReducible,
                  "chain has more than one recurrent class");
    }
    members.push_back(s);
  }
  return members;
}

std::vector<double> solve_stationary(const Matrix& p) {
  const auto n = static_cast<Eigen::Index>(p.rows());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      a(i, j) = p(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) -
                (i == j ? 1.0 : 0.0);
    }
  }
  // Replace one balance equation by the normalization constraint.
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::VectorXd mu = a.fullPivLu().solve(rhs);

  std::vector<double> out(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = std::max(mu(i), 0.0);
    total += out[static_cast<std::size_t>(i)];
  }
  for (double& m : out) m /= total;
  return out;
}

}  // namespace

std::size_t MarkovChainModel::find(StateId id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  return static_cast<std::size_t>(it - ids_.begin());
}

MarkovChainModel build_chain(std::span<const StateId> states,
                             const Matrix& transition,
                             std::span<const Letter> output_map) {
  const std::size_t n = states.size();
  if (n == 0 || transition.rows() != n || transition.cols() != n ||
      output_map.size() != n) {
    throw Error(ErrorCode::kBadParams,
                "transition must be square and match states/output_map");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (double v : transition.row(i)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "row " << i << " has a negative or non-finite entry";
        throw Error(ErrorCode::kNonStochastic, msg.str());
      }
      total += v;
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg << "row " << i << " sums to " << total;
      throw Error(ErrorCode::kNonStochastic, msg.str());
    }
  }

  const auto keep = recurrent_class(transition);
  const std::size_t m = keep.size();

  MarkovChainModel model;
  model.ids_.reserve(m);
  model.output_.reserve(m);
  model.transition_ = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    model.ids_.push_back(states[keep[i]]);
    model.output_.push_back(output_map[keep[i]]);
    for (std::size_t j = 0; j < m; ++j) {
      model.transition_(i, j) = transition(keep[i], keep[j]);
    }
  }
  model.stationary_ = solve_stationary(model.transition_);

  model.alphabet_ = model.output_;
  std::sort(model.alphabet_.begin(), model.alphabet_.end());
  model.alphabet_.erase(std::unique(model.alphabet_.begin(), model.alphabet_.end()),
                        model.alphabet_.end());
  model.letter_index_.reserve(m);
  for (Letter y : model.output_) {
    model.letter_index_.push_back(static_cast<std::size_t>(
        std::lower_bound(model.alphabet_.begin(), model.alphabet_.end(), y) -
        model.alphabet_.begin()));
  }
  return model;
}

double entropy_rate_markov(const MarkovChainModel& chain) {
  CompensatedSum h;
  for (std::size_t s = 0; s < chain.size(); ++s) {
    double row = 0.0;
    for (double p : chain.transition().row(s)) row += neg_x_log_x(p);
    h.add(chain.stationary()[s] * row);
  }
  return h.value() / kLn2;
}

std::vector<Letter> sample_path(const MarkovChainModel& chain, std::size_t n,
                                std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::kBadParams, "sample length must be >= 1");
  const std::size_t m = chain.size();

  std::vector<double> initial(m);
  std::partial_sum(chain.stationary().begin(), chain.stationary().end(),
                   initial.begin());
  Matrix cumulative(m, m);
  for (std::size_t s = 0; s < m; ++s) {
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      acc += chain.transition(s, t);
      cumulative(s, t) = acc;
    }
  }

  // std::uniform_real_distribution is implementation-defined; draw 53-bit
  // mantissas directly so paths agree across standard libraries.
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };
  auto pick = [](std::span<const double> cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
  };

  std::vector<Letter> out;
  out.reserve(n);
  std::size_t state = pick(initial, uniform());
  out.push_back(chain.output(state));
  for (std::size_t i = 1; i < n; ++i) {
    state = pick(cumulative.row(state), uniform());
    out.push_back(chain.output(state));
  }
  return out;
}

}  // namespace bitshift
