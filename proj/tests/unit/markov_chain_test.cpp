#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "bitshift/markov_chain.hpp"
#include "expect_error.hpp"
#include "generators.hpp"

namespace bitshift {
namespace {

MarkovChainModel two_state(double a, double b) {
  Matrix p(2, 2);
  p(0, 0) = 1 - a;
  p(0, 1) = a;
  p(1, 0) = b;
  p(1, 1) = 1 - b;
  const std::vector<StateId> ids{0, 1};
  const std::vector<Letter> out{0, 1};
  return build_chain(ids, p, out);
}

TEST(BuildChain, TwoStateStationaryLaw) {
  const auto chain = two_state(0.3, 0.1);
  EXPECT_NEAR(chain.stationary()[0], 0.1 / 0.4, 1e-14);
  EXPECT_NEAR(chain.stationary()[1], 0.3 / 0.4, 1e-14);
}

TEST(BuildChain, RejectsRowsNotSummingToOne) {
  Matrix p(2, 2, 0.45);
  const std::vector<StateId> ids{0, 1};
  const std::vector<Letter> out{0, 0};
  EXPECT_ERROR_CODE(build_chain(ids, p, out), ErrorCode::kNonStochastic);
}

TEST(BuildChain, RejectsNegativeEntries) {
  Matrix p(2, 2);
  p(0, 0) = 1.5;
  p(0, 1) = -0.5;
  p(1, 0) = 0.5;
  p(1, 1) = 0.5;
  const std::vector<StateId> ids{0, 1};
  const std::vector<Letter> out{0, 0};
  EXPECT_ERROR_CODE(build_chain(ids, p, out), ErrorCode::kNonStochastic);
}

TEST(BuildChain, RejectsShapeMismatch) {
  Matrix p(2, 2, 0.5);
  const std::vector<StateId> ids{0, 1, 2};
  const std::vector<Letter> out{0, 0};
  EXPECT_ERROR_CODE(build_chain(ids, p, out), ErrorCode::kBadParams);
}

TEST(BuildChain, RejectsTwoClosedClasses) {
  Matrix p(2, 2);
  p(0, 0) = 1.0;
  p(1, 1) = 1.0;
  const std::vector<StateId> ids{0, 1};
  const std::vector<Letter> out{0, 1};
  EXPECT_ERROR_CODE(build_chain(ids, p, out), ErrorCode::kReducible);
}

TEST(BuildChain, DropsTransientStates) {
  // State 7 leaks into the closed pair {3, 5} and never returns.
  Matrix p(3, 3);
  p(0, 1) = 1.0;
  p(1, 0) = 1.0;
  p(2, 0) = 0.5;
  p(2, 2) = 0.5;
  const std::vector<StateId> ids{3, 5, 7};
  const std::vector<Letter> out{1, 2, 9};
  const auto chain = build_chain(ids, p, out);
  ASSERT_EQ(chain.size(), 2u);
  EXPECT_EQ(chain.find(7), chain.size());
  EXPECT_EQ(chain.output(chain.find(5)), 2);
  EXPECT_EQ(std::vector<Letter>(chain.alphabet().begin(), chain.alphabet().end()),
            (std::vector<Letter>{1, 2}));
}

TEST(EntropyRate, IidChainEqualsRowEntropy) {
  Matrix p(3, 3);
  const double row[] = {0.5, 0.25, 0.25};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) p(i, j) = row[j];
  }
  const std::vector<StateId> ids{0, 1, 2};
  const std::vector<Letter> out{0, 1, 2};
  EXPECT_NEAR(entropy_rate_markov(build_chain(ids, p, out)), 1.5, 1e-14);
}

TEST(EntropyRate, InvariantUnderStateRelabeling) {
  testing::Gen gen(11);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + gen.index(7);
    const Matrix p = gen.stochastic(n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen.engine());
    Matrix q(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) q(perm[i], perm[j]) = p(i, j);
    }
    std::vector<StateId> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    std::vector<Letter> out(n, 0);
    const auto a = build_chain(ids, p, out);
    const auto b = build_chain(ids, q, out);
    EXPECT_NEAR(entropy_rate_markov(a), entropy_rate_markov(b), 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(a.stationary()[i], b.stationary()[perm[i]], 1e-12);
    }
  }
}

TEST(Stationary, SatisfiesBalanceForRandomChains) {
  testing::Gen gen(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + gen.index(12);
    const Matrix p = gen.stochastic(n);
    std::vector<StateId> ids(n);
    std::iota(ids.begin(), ids.end(), 0u);
    std::vector<Letter> out(n, 0);
    const auto chain = build_chain(ids, p, out);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double inflow = 0.0;
      for (std::size_t i = 0; i < n; ++i) inflow += chain.stationary()[i] * p(i, j);
      EXPECT_NEAR(inflow, chain.stationary()[j], 1e-13);
      total += chain.stationary()[j];
    }
    EXPECT_NEAR(total, 1.0, 1e-13);
  }
}

TEST(SamplePath, DeterministicPerSeed) {
  const auto chain = two_state(0.3, 0.2);
  EXPECT_EQ(sample_path(chain, 500, 42), sample_path(chain, 500, 42));
  EXPECT_NE(sample_path(chain, 500, 42), sample_path(chain, 500, 43));
}

TEST(SamplePath, ZeroLengthRejected) {
  EXPECT_ERROR_CODE(sample_path(two_state(0.3, 0.2), 0, 1), ErrorCode::kBadParams);
}

TEST(SamplePath, EmpiricalFrequenciesApproachStationaryLaw) {
  const auto chain = two_state(0.3, 0.1);
  const auto path = sample_path(chain, 200000, 7);
  const double ones = static_cast<double>(std::count(path.begin(), path.end(), 1));
  EXPECT_NEAR(ones / static_cast<double>(path.size()), 0.75, 0.01);
}

}  // namespace
}  // namespace bitshift
