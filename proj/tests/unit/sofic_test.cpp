#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "bitshift/sofic.hpp"
#include "expect_error.hpp"
#include "path_oracle.hpp"

namespace bitshift {
namespace {

// All words of length n over letters lo..hi.
std::vector<SymbolWord> all_words(int lo, int hi, std::size_t n) {
  std::vector<SymbolWord> out{{}};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<SymbolWord> next;
    for (const auto& w : out) {
      for (int l = lo; l <= hi; ++l) {
        auto v = w;
        v.push_back(l);
        next.push_back(std::move(v));
      }
    }
    out.swap(next);
  }
  return out;
}

DeterministicPresentation full_shift(std::size_t m) {
  std::vector<Letter> alphabet(m);
  for (std::size_t i = 0; i < m; ++i) alphabet[i] = static_cast<Letter>(i);
  return DeterministicPresentation(alphabet, std::vector<std::int32_t>(m, 0));
}

TEST(Presentation, VertexAndEdgeCounts) {
  const auto g = presentation(2, 3);
  EXPECT_EQ(g.vertices.size(), 18u);
  // From (x, a, b): any x', a' = b, any b'.
  EXPECT_EQ(g.edge_count(), 18u * 2 * 3);
  EXPECT_EQ(g.alphabet(), (std::vector<Letter>{0, 1, 2, 3, 4, 5}));
}

TEST(Determinize, KnownSizes) {
  EXPECT_EQ(determinize(presentation(2, 4)).size(), 24u);
  EXPECT_EQ(determinize(presentation(2, 10)).size(), 54u);
}

TEST(Determinize, IsDeterministicAndAgreesWithPathOracle) {
  const auto dfa = determinize(presentation(2, 3));
  const testing::PathOracle oracle(2, 3, {0.5, 0.5}, 0.1);
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const auto& w : all_words(0, 5, n)) {
      EXPECT_EQ(word_admissible(dfa, w), oracle.path_exists(w));
    }
  }
}

TEST(Language, SubwordClosed) {
  const auto dfa = determinize(presentation(2, 4));
  for (const auto& w : all_words(0, 6, 4)) {
    if (!word_admissible(dfa, w)) continue;
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = i + 1; j <= w.size(); ++j) {
        const SymbolWord sub(w.begin() + static_cast<std::ptrdiff_t>(i),
                             w.begin() + static_cast<std::ptrdiff_t>(j));
        EXPECT_TRUE(word_admissible(dfa, sub));
      }
    }
  }
}

TEST(Run, LetterOutsideAlphabetRejected) {
  const auto dfa = determinize(presentation(2, 10));
  const SymbolWord bad{13};
  EXPECT_ERROR_CODE(dfa.run(bad), ErrorCode::kLetterOutOfRange);
  const SymbolWord neg{-1, 2};
  EXPECT_ERROR_CODE(dfa.run(neg), ErrorCode::kLetterOutOfRange);
}

TEST(ForbiddenWords, KnownFamiliesForTwoTen) {
  const auto dfa = determinize(presentation(2, 10));
  const auto words = minimal_forbidden_words(dfa, 6);
  const std::set<SymbolWord> set(words.begin(), words.end());
  for (const SymbolWord& w : std::vector<SymbolWord>{
           {0, 0}, {0, 1}, {0, 2, 0}, {0, 2, 1}, {0, 2, 2, 0}, {0, 2, 2, 1}, {1, 0}}) {
    EXPECT_TRUE(set.count(w)) << "missing word of length " << w.size();
  }
  EXPECT_TRUE(std::is_sorted(words.begin(), words.end()));
  EXPECT_ERROR_CODE(minimal_forbidden_words(dfa, 1), ErrorCode::kBadParams);
}

TEST(ForbiddenWords, ExactlyTheMinimalForbiddenWords) {
  const auto dfa = determinize(presentation(2, 3));
  const testing::PathOracle oracle(2, 3, {0.5, 0.5}, 0.1);
  const auto listed = minimal_forbidden_words(dfa, 4);
  const std::set<SymbolWord> set(listed.begin(), listed.end());
  std::size_t expected = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& w : all_words(0, 5, n)) {
      if (oracle.path_exists(w)) continue;
      bool minimal = true;
      for (std::size_t i = 0; i < w.size() && minimal; ++i) {
        for (std::size_t j = i + 1; j <= w.size() && minimal; ++j) {
          if (j - i == w.size()) continue;
          const SymbolWord sub(w.begin() + static_cast<std::ptrdiff_t>(i),
                               w.begin() + static_cast<std::ptrdiff_t>(j));
          minimal = oracle.path_exists(sub);
        }
      }
      if (!minimal) continue;
      ++expected;
      EXPECT_TRUE(set.count(w));
    }
  }
  EXPECT_EQ(listed.size(), expected);
}

TEST(CountWords, MatchesBruteForce) {
  const auto dfa = determinize(presentation(2, 3));
  const testing::PathOracle oracle(2, 3, {0.5, 0.5}, 0.1);
  for (std::size_t n = 1; n <= 4; ++n) {
    double brute = 0.0;
    for (const auto& w : all_words(0, 5, n)) brute += oracle.path_exists(w) ? 1.0 : 0.0;
    EXPECT_EQ(count_admissible_words(dfa, n), brute);
  }
}

TEST(TopologicalEntropy, FullShifts) {
  for (std::size_t m : {1u, 2u, 3u, 7u, 13u}) {
    EXPECT_NEAR(topological_entropy(full_shift(m)), std::log2(static_cast<double>(m)), 1e-10);
  }
}

TEST(TopologicalEntropy, GoldenMeanShift) {
  // 0 may follow anything, 1 only follows 0.
  const DeterministicPresentation dfa({0, 1}, {0, 1, 0, DeterministicPresentation::kNoEdge});
  EXPECT_NEAR(topological_entropy(dfa), std::log2(std::numbers::phi), 1e-10);
}

TEST(TopologicalEntropy, PeriodicGraphConverges) {
  // Period-2 cycle: power iteration on A alone would oscillate.
  const DeterministicPresentation dfa({0, 1}, {DeterministicPresentation::kNoEdge, 1, 0,
                                               DeterministicPresentation::kNoEdge});
  EXPECT_NEAR(topological_entropy(dfa), 0.0, 1e-10);
}

TEST(TopologicalEntropy, MatchesWordGrowth) {
  const auto dfa = determinize(presentation(2, 4));
  const double h = topological_entropy(dfa);
  EXPECT_LT(h, std::log2(7.0));
  const double g20 = std::log2(count_admissible_words(dfa, 20)) / 20.0;
  const double g40 = std::log2(count_admissible_words(dfa, 40)) / 40.0;
  EXPECT_LT(std::abs(g40 - h), std::abs(g20 - h));
  EXPECT_LE(std::abs(g20 - h), 0.05);
}

}  // namespace
}  // namespace bitshift
