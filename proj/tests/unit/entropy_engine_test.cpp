#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "bitshift/channel.hpp"
#include "bitshift/entropy_engine.hpp"
#include "expect_error.hpp"
#include "generators.hpp"
#include "path_oracle.hpp"

namespace bitshift {
namespace {

JointChain joint(int d, int k, double eps, SourceSpec spec = Uniform{}) {
  return build_joint_chain(make_source(d, k, spec), {eps});
}

bool is_prefix(const Word& a, const Word& b) {
  if (a.size() > b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

TEST(Word, LexicographicOrder) {
  const Word a = Word().extended(1).extended(2);
  const Word b = Word().extended(1).extended(3);
  const Word c = Word().extended(1);
  EXPECT_LT(a, b);
  EXPECT_LT(c, a);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(a[1], 2u);
}

TEST(Strategy, ParseRoundTrip) {
  EXPECT_EQ(parse_strategy("greedy"), Strategy::kGreedy);
  EXPECT_EQ(parse_strategy(to_string(Strategy::kUniform)), Strategy::kUniform);
  EXPECT_ERROR_CODE(parse_strategy("random"), ErrorCode::kBadParams);
}

TEST(TransferOperators, BitShiftChainLumpsToThreeClasses) {
  const auto jc = joint(2, 10, 0.05, TruncatedGeometric{});
  const TransferOperators ops(jc.chain);
  EXPECT_EQ(ops.letters(), 13u);
  EXPECT_EQ(ops.classes(), 3u);
  EXPECT_EQ(ops.arrival_classes(), 3u);
  const std::vector<Letter> bad{0, 99};
  EXPECT_ERROR_CODE(ops.to_word(bad), ErrorCode::kLetterOutOfRange);
  const std::vector<Letter> good{0, 5, 12};
  EXPECT_EQ(ops.to_letters(ops.to_word(good)), good);
}

TEST(RootPartition, NoiselessChannelHasZeroGap) {
  const auto src = make_source(2, 10, TruncatedGeometric{0.658});
  const auto jc = build_joint_chain(src, {0.0});
  PartitionState part = root_partition(jc.chain);
  const auto iv = part.interval(Strategy::kGreedy);
  EXPECT_NEAR(iv.upper - iv.lower, 0.0, 1e-12);
  EXPECT_NEAR(iv.upper, source_entropy(src), 1e-12);
  EXPECT_EQ(iv.cells, 9u);
}

TEST(RunBounds, GreedyStopsWhenNoLeafHasAGap) {
  const auto jc = joint(2, 4, 0.0);
  const auto r = run_bounds(jc.chain, Strategy::kGreedy, {std::nullopt, 2000});
  EXPECT_FALSE(r.budget_exhausted);
  EXPECT_EQ(r.refinements, 0u);
  EXPECT_EQ(r.interval.gap(), 0.0);
  EXPECT_NEAR(r.interval.upper, std::log2(3.0), 1e-12);
}

TEST(PartitionState, RefiningANonLeafFails) {
  const auto jc = joint(2, 3, 0.1);
  PartitionState part = root_partition(jc.chain);
  const Word w = part.select_next(Strategy::kGreedy);
  part.refine(w);
  EXPECT_ERROR_CODE(part.refine(w), ErrorCode::kNotALeaf);
  EXPECT_ERROR_CODE(part.refine(Word()), ErrorCode::kNotALeaf);
}

TEST(PartitionState, RandomRefinementKeepsPartitionAndMonotonicity) {
  testing::Gen gen(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = gen.integer(2, 3);
    const int k = d + gen.integer(1, 3);
    const double eps = gen.uniform(0.0, 0.5);
    const auto jc = joint(d, k, eps, ExplicitProbabilities{gen.simplex(k - d + 1, 0.05)});
    PartitionState part = root_partition(jc.chain);
    double prev_h = part.sum_h();
    double prev_h1 = part.sum_h1();
    for (int step = 0; step < 60; ++step) {
      const auto leaves = part.leaves();
      part.refine(leaves[gen.index(leaves.size())].word);
      EXPECT_LE(part.sum_h(), prev_h + 1e-12);
      EXPECT_GE(part.sum_h1(), prev_h1 - 1e-12);
      EXPECT_LE(part.sum_h1(), part.sum_h() + 1e-12);
      prev_h = part.sum_h();
      prev_h1 = part.sum_h1();
    }
    const auto leaves = part.leaves();
    double mass = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      mass += leaves[i].weight;
      EXPECT_GT(leaves[i].weight, 0.0);
      if (i + 1 < leaves.size()) {
        EXPECT_LT(leaves[i].word, leaves[i + 1].word);
        EXPECT_FALSE(is_prefix(leaves[i].word, leaves[i + 1].word));
      }
    }
    EXPECT_NEAR(mass, 1.0, 1e-12);
    EXPECT_EQ(leaves.size(), part.cells());
  }
}

TEST(PartitionState, LeafWeightsAreCylinderProbabilities) {
  const std::vector<double> p{0.4, 0.6};
  const double eps = 0.1;
  const auto jc = build_joint_chain(make_source(2, 3, ExplicitProbabilities{p}), {eps});
  const testing::PathOracle oracle(2, 3, p, eps);
  PartitionState part = root_partition(jc.chain);
  while (part.select_next(Strategy::kUniform).size() < 3) {
    part.refine(part.select_next(Strategy::kUniform));
  }
  const auto cyl = oracle.cylinders(3);
  std::size_t positive = 0;
  for (const auto& [w, pr] : cyl) positive += pr > 0.0 ? 1 : 0;
  EXPECT_EQ(part.cells(), positive);
  for (const auto& leaf : part.leaves()) {
    const auto letters = part.operators().to_letters(leaf.word);
    EXPECT_NEAR(leaf.weight, oracle.cylinder_probability(letters), 1e-14);
  }
}

TEST(PartitionState, GreedySelectsLargestGap) {
  const auto jc = joint(2, 4, 0.2);
  PartitionState part = root_partition(jc.chain);
  for (int i = 0; i < 30; ++i) part.refine(part.select_next(Strategy::kGreedy));
  const Word pick = part.select_next(Strategy::kGreedy);
  double best = -1.0;
  double picked = -1.0;
  for (const auto& leaf : part.leaves()) {
    best = std::max(best, leaf.gap());
    if (leaf.word == pick) picked = leaf.gap();
  }
  EXPECT_EQ(picked, best);
}

TEST(PartitionState, UniformAtDepthMatchesBirch) {
  for (double eps : {0.05, 0.2, 0.4}) {
    const auto jc = joint(2, 4, eps, TruncatedGeometric{0.7});
    PartitionState part = root_partition(jc.chain);
    for (std::size_t n = 1; n <= 4; ++n) {
      while (part.select_next(Strategy::kUniform).size() < n) {
        part.refine(part.select_next(Strategy::kUniform));
      }
      const auto iv = part.interval(Strategy::kUniform);
      const auto bb = birch_bounds(jc.chain, n);
      EXPECT_NEAR(iv.lower, bb.lower, 1e-12);
      EXPECT_NEAR(iv.upper, bb.upper, 1e-12);
      EXPECT_EQ(iv.cells, bb.cylinders);
    }
  }
}

TEST(PartitionState, RenewalCylindersHaveNoGap) {
  const auto jc = joint(2, 10, 0.05, TruncatedGeometric{0.658});
  PartitionState part = root_partition(jc.chain);
  for (int i = 0; i < 2000; ++i) part.refine(part.select_next(Strategy::kGreedy));
  const auto& ops = part.operators();
  const std::size_t lo = *ops.index_of(jc.low_renewal_letter());
  const std::size_t hi = *ops.index_of(jc.high_renewal_letter());
  std::size_t seen = 0;
  for (const auto& leaf : part.leaves()) {
    bool renewal = false;
    for (std::size_t i = 0; i < leaf.word.size(); ++i) {
      renewal = renewal || leaf.word[i] == lo || leaf.word[i] == hi;
    }
    if (!renewal) continue;
    ++seen;
    EXPECT_LE(leaf.gap(), 1e-12);
  }
  EXPECT_GT(seen, 0u);
}

TEST(RunBounds, StopsOnTolerance) {
  const auto jc = joint(2, 10, 0.05, TruncatedGeometric{0.658});
  const auto r = run_bounds(jc.chain, Strategy::kGreedy, {1e-6, std::nullopt});
  EXPECT_FALSE(r.budget_exhausted);
  EXPECT_LE(r.interval.gap(), 1e-6);
  EXPECT_LE(r.interval.lower, r.interval.upper);
}

TEST(RunBounds, StopsOnCellBudget) {
  const auto jc = joint(2, 3, 0.25);
  const auto r = run_bounds(jc.chain, Strategy::kUniform, {1e-12, 500});
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_GE(r.interval.cells, 500u);
}

TEST(RunBounds, NeedsAUsableStopRule) {
  const auto jc = joint(2, 3, 0.25);
  EXPECT_ERROR_CODE(run_bounds(jc.chain, Strategy::kGreedy, {}), ErrorCode::kBadParams);
  EXPECT_ERROR_CODE(run_bounds(jc.chain, Strategy::kGreedy, {0.0, 3}), ErrorCode::kBadParams);
}

TEST(RunBounds, TraceIsMonotoneAndDeterministic) {
  const auto jc = joint(2, 5, 0.15, TruncatedGeometric{0.6});
  std::vector<TraceStep> a, b;
  const auto ra = run_bounds(jc.chain, Strategy::kGreedy, {std::nullopt, 3000},
                             [&](const TraceStep& s) { a.push_back(s); });
  const auto rb = run_bounds(jc.chain, Strategy::kGreedy, {std::nullopt, 3000},
                             [&](const TraceStep& s) { b.push_back(s); });
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].lower, b[i].lower);
    EXPECT_EQ(a[i].upper, b[i].upper);
    if (i > 0) {
      EXPECT_LE(a[i].upper, a[i - 1].upper + 1e-12);
      EXPECT_GE(a[i].lower, a[i - 1].lower - 1e-12);
    }
  }
  EXPECT_EQ(ra.interval.lower, rb.interval.lower);
  EXPECT_EQ(ra.interval.upper, rb.interval.upper);
}

TEST(RunBounds, GreedyBeatsUniformAtEqualBudget) {
  const auto jc = joint(2, 10, 0.05, TruncatedGeometric{0.658});
  const auto g = run_bounds(jc.chain, Strategy::kGreedy, {std::nullopt, 5000});
  const auto u = run_bounds(jc.chain, Strategy::kUniform, {std::nullopt, 5000});
  EXPECT_LT(g.interval.gap(), u.interval.gap());
}

TEST(Birch, MatchesOracleOnSmallInstance) {
  const std::vector<double> p{0.3, 0.7};
  const auto jc = build_joint_chain(make_source(2, 3, ExplicitProbabilities{p}), {0.2});
  const testing::PathOracle oracle(2, 3, p, 0.2);
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto bb = birch_bounds(jc.chain, n);
    const auto ob = oracle.birch(n);
    EXPECT_NEAR(bb.lower, ob.lower, 1e-10);
    EXPECT_NEAR(bb.upper, ob.upper, 1e-10);
  }
}

TEST(Birch, BoundsNestAndErrors) {
  const auto jc = joint(2, 3, 0.1);
  double prev_lo = 0.0;
  double prev_hi = 1e9;
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto bb = birch_bounds(jc.chain, n);
    EXPECT_GE(bb.lower, prev_lo - 1e-12);
    EXPECT_LE(bb.upper, prev_hi + 1e-12);
    EXPECT_LE(bb.lower, bb.upper);
    prev_lo = bb.lower;
    prev_hi = bb.upper;
  }
  EXPECT_ERROR_CODE(birch_bounds(jc.chain, 0), ErrorCode::kBadParams);
  EXPECT_ERROR_CODE(birch_bounds(jc.chain, 5, {100}), ErrorCode::kResourceLimit);
}

TEST(EntropyRate, MarkovChainWithIdentityOutputCollapses) {
  // An injective output map makes the process the chain itself.
  testing::Gen gen(23);
  const Matrix p = gen.stochastic(4);
  const std::vector<StateId> ids{0, 1, 2, 3};
  const std::vector<Letter> out{0, 1, 2, 3};
  const auto chain = build_chain(ids, p, out);
  const auto r = run_bounds(chain, Strategy::kGreedy, {1e-12, 1000});
  EXPECT_NEAR(r.interval.lower, entropy_rate_markov(chain), 1e-12);
  EXPECT_NEAR(r.interval.upper, entropy_rate_markov(chain), 1e-12);
}

}  // namespace
}  // namespace bitshift
