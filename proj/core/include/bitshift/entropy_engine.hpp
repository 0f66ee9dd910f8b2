#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bitshift/markov_chain.hpp"
#include "bitshift/numeric.hpp"

namespace bitshift {

enum class Strategy { kGreedy, kUniform };

std::string_view to_string(Strategy strategy);
// Error{kBadParams} for anything but "greedy" / "uniform".
Strategy parse_strategy(std::string_view name);

// Finite word over a chain's output alphabet, stored as alphabet indices so
// that the natural ordering is lexicographic in the letters.
class Word {
 public:
  Word() = default;

  std::size_t size() const { return symbols_.size(); }
  bool empty() const { return symbols_.empty(); }
  std::size_t operator[](std::size_t i) const {
    return static_cast<unsigned char>(symbols_[i]);
  }

  Word extended(std::size_t letter_index) const {
    Word w = *this;
    w.symbols_.push_back(static_cast<char>(letter_index));
    return w;
  }

  friend bool operator==(const Word&, const Word&) = default;
  friend std::strong_ordering operator<=>(const Word& lhs, const Word& rhs) {
    const int c = lhs.symbols_.compare(rhs.symbols_);
    return c < 0 ? std::strong_ordering::less
                 : c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

 private:
  std::string symbols_;
};

// Chain lumped for the cylinder recursions. States with identical outgoing
// rows share a future class; the table of a cylinder only needs the class of
// the last hidden state. States whose incoming columns are proportional share
// an arrival class, which is all the lower bound needs to condition on.
class TransferOperators {
 public:
  explicit TransferOperators(const MarkovChainModel& chain);

  std::span<const Letter> alphabet() const { return alphabet_; }
  std::size_t letters() const { return alphabet_.size(); }
  std::size_t classes() const { return class_count_; }
  std::size_t arrival_classes() const { return arrival_.cols(); }
  std::size_t future_class(std::size_t state) const { return future_class_[state]; }

  // step(b)(c, c') = P(next letter b, next class c' | class c).
  const Matrix& step(std::size_t letter_index) const { return steps_[letter_index]; }
  // arrival()(c, k) = P(next state in arrival class k | class c).
  const Matrix& arrival() const { return arrival_; }
  // initial()(b, c) = stationary P(Y_0 = b, class(S_0) = c).
  const Matrix& initial() const { return initial_; }

  std::optional<std::size_t> index_of(Letter letter) const;
  Word to_word(std::span<const Letter> letters) const;
  std::vector<Letter> to_letters(const Word& word) const;

 private:
  std::vector<Letter> alphabet_;
  std::size_t class_count_ = 0;
  std::vector<std::size_t> future_class_;
  std::vector<Matrix> steps_;
  Matrix arrival_;
  Matrix initial_;
};

// Per-cylinder statistics. table(b, c) = P(Y_0 = b, class(S_n) = c | word),
// normalized, rows indexed by letter and columns by future class. h and h1
// are weighted contributions in bits.
struct CylinderStat {
  Word word;
  double weight = 0.0;
  std::vector<double> table;
  double h = 0.0;
  double h1 = 0.0;

  double gap() const { return h - h1; }
};

struct EntropyInterval {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t cells = 0;
  Strategy strategy = Strategy::kGreedy;

  double gap() const { return upper - lower; }
};

struct TraceStep {
  std::size_t step = 0;
  std::size_t cells = 0;
  double lower = 0.0;
  double upper = 0.0;
};

// Partition of the sequence space into cylinders, with running totals of the
// upper (h) and lower (h1) contributions. Leaves are immutable; refinement
// replaces one leaf by its positive-probability one-letter extensions.
class PartitionState {
 public:
  explicit PartitionState(std::shared_ptr<const TransferOperators> ops);

  const TransferOperators& operators() const { return *ops_; }

  std::size_t cells() const { return live_; }
  double sum_h() const { return sum_h_.value(); }
  double sum_h1() const { return sum_h1_.value(); }
  std::size_t dropped_children() const { return dropped_; }
  std::size_t refinements() const { return refinements_; }

  bool contains(const Word& word) const;

  // Error{kNotALeaf} when word is not a current leaf.
  void refine(const Word& word);

  // Greedy: leaf of maximal gap; uniform: shortest leaf. Ties go to the
  // lexicographically smallest word. Error{kEmptyPartition} when empty.
  Word select_next(Strategy strategy);

  // Largest leaf gap, i.e. the gap of select_next(kGreedy).
  double max_gap();

  // Totals recomputed over the leaves in lexicographic order.
  EntropyInterval interval(Strategy strategy) const;

  // Copies of the current leaves in lexicographic order. Tables are
  // recomputed for leaves whose table was released.
  std::vector<CylinderStat> leaves() const;

  // Statistics of the child word.b of a cylinder, or nullopt when it has
  // probability zero. Exposed for the exhaustive Birch sums.
  std::optional<CylinderStat> child(const CylinderStat& parent,
                                    std::size_t letter_index) const;
  CylinderStat empty_cylinder() const;

 private:
  struct Leaf {
    Word word;
    double weight = 0.0;
    double h = 0.0;
    double h1 = 0.0;
    std::vector<double> table;
    bool alive = false;

    double gap() const { return h - h1; }
  };
  struct Entry {
    double key;
    std::uint32_t slot;
  };

  void insert(CylinderStat stat);
  void rebuild_heap(Strategy strategy);
  bool entry_less(const Entry& lhs, const Entry& rhs) const;
  std::vector<double> table_for(const Leaf& leaf) const;
  std::vector<std::uint32_t> sorted_live_slots() const;

  std::shared_ptr<const TransferOperators> ops_;
  std::vector<Leaf> slots_;
  std::vector<Entry> heap_;
  std::optional<Strategy> heap_strategy_;
  std::size_t live_ = 0;
  std::size_t dropped_ = 0;
  std::size_t refinements_ = 0;
  CompensatedSum sum_h_;
  CompensatedSum sum_h1_;
};

// Partition into the positive-probability length-1 cylinders.
PartitionState root_partition(const MarkovChainModel& chain);

void refine_leaf(PartitionState& partition, const Word& word);
Word select_next(PartitionState& partition, Strategy strategy);

struct StopRule {
  std::optional<double> tol_bits;
  std::optional<std::size_t> max_cells;
};

struct BoundsResult {
  EntropyInterval interval;
  bool budget_exhausted = false;  // stopped on cells before reaching tol_bits
  std::size_t refinements = 0;
  std::size_t dropped_children = 0;
};

using TraceFn = std::function<void(const TraceStep&)>;

// Refine until upper - lower <= tol_bits or cells >= max_cells. Greedy also
// stops once no leaf has a positive gap, since the interval is then exact.
// Error{kBadParams} when neither rule is usable.
BoundsResult run_bounds(const MarkovChainModel& chain, Strategy strategy,
                        const StopRule& stop, const TraceFn& trace = {});

// Same loop on an existing partition.
BoundsResult run_bounds(PartitionState& partition, Strategy strategy,
                        const StopRule& stop, const TraceFn& trace = {});

struct BirchBounds {
  double lower = 0.0;  // H(Y_0 | Y_1..Y_n, S_{n+1})
  double upper = 0.0;  // H(Y_0 | Y_1..Y_n)
  std::size_t cylinders = 0;
};

struct BirchOptions {
  std::size_t max_cylinders = 50'000'000;
};

// Exact conditional entropies summed over all length-n cylinders.
// Error{kBadParams} for n == 0, Error{kResourceLimit} past max_cylinders.
BirchBounds birch_bounds(const MarkovChainModel& chain, std::size_t n,
                         const BirchOptions& options = {});

}  // namespace bitshift
