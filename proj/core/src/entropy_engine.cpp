#include "bitshift/entropy_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bitshift/error.hpp"

namespace bitshift {
namespace {

constexpr double kArrivalColumnTolerance = 1e-14;
// Conditional mutual information (bits) under which a leaf's table is dropped
// and recomputed from its word on demand.
constexpr double kReleaseTableBelow = 1e-13;

// Weighted entropy contributions of a cylinder table; returns {h, gap} in bits.
std::pair<double, double> cylinder_contributions(std::span<const double> table,
                                                 double weight,
                                                 const TransferOperators& ops) {
  const std::size_t letters = ops.letters();
  const std::size_t classes = ops.classes();
  const std::size_t arrivals = ops.arrival_classes();
  const Matrix& arrival = ops.arrival();

  std::vector<double> marginal(letters, 0.0);
  std::vector<double> joint(letters * arrivals, 0.0);
  std::vector<double> arrival_marginal(arrivals, 0.0);
  for (std::size_t b = 0; b < letters; ++b) {
    const auto row = table.subspan(b * classes, classes);
    for (std::size_t c = 0; c < classes; ++c) {
      const double g = row[c];
      if (g == 0.0) continue;
      marginal[b] += g;
      for (std::size_t k = 0; k < arrivals; ++k) {
        joint[b * arrivals + k] += g * arrival(c, k);
      }
    }
  }
  for (std::size_t b = 0; b < letters; ++b) {
    for (std::size_t k = 0; k < arrivals; ++k) arrival_marginal[k] += joint[b * arrivals + k];
  }

  double h = 0.0;
  for (double g : marginal) h += neg_x_log_x(g);

  // I(Y_0; arrival class | word) as a KL sum; termwise it vanishes exactly when
  // the joint law factorizes.
  double info = 0.0;
  for (std::size_t b = 0; b < letters; ++b) {
    if (marginal[b] == 0.0) continue;
    for (std::size_t k = 0; k < arrivals; ++k) {
      const double j = joint[b * arrivals + k];
      if (j > 0.0) info += j * std::log(j / (marginal[b] * arrival_marginal[k]));
    }
  }
  return {weight * h / kLn2, weight * std::max(info, 0.0) / kLn2};
}

// table . step(letter), unnormalized.
double advance(std::span<const double> table, const Matrix& step, std::size_t letters,
               std::vector<double>& out) {
  const std::size_t classes = step.rows();
  out.assign(letters * classes, 0.0);
  double mass = 0.0;
  for (std::size_t b = 0; b < letters; ++b) {
    for (std::size_t c = 0; c < classes; ++c) {
      const double g = table[b * classes + c];
      if (g == 0.0) continue;
      const auto row = step.row(c);
      for (std::size_t n = 0; n < classes; ++n) out[b * classes + n] += g * row[n];
    }
  }
  for (double v : out) mass += v;
  return mass;
}

}  // namespace

std::string_view to_string(Strategy strategy) {
  return strategy == Strategy::kGreedy ? "greedy" : "uniform";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "greedy") return Strategy::kGreedy;
  if (name == "uniform") return Strategy::kUniform;
  throw Error(ErrorCode::kBadParams, "unknown strategy '" + std::string(name) + "'");
}

TransferOperators::TransferOperators(const MarkovChainModel& chain)
    : alphabet_(chain.alphabet().begin(), chain.alphabet().end()) {
  const std::size_t n = chain.size();
  if (alphabet_.size() > 256) {
    throw Error(ErrorCode::kBadParams, "output alphabet larger than 256 letters");
  }
  const Matrix& p = chain.transition();

  std::vector<std::size_t> representative;
  future_class_.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t c = 0;
    for (; c < representative.size(); ++c) {
      const auto lhs = p.row(s);
      const auto rhs = p.row(representative[c]);
      if (std::equal(lhs.begin(), lhs.end(), rhs.begin())) break;
    }
    if (c == representative.size()) representative.push_back(s);
    future_class_[s] = c;
  }
  class_count_ = representative.size();
  const std::size_t classes = class_count_;

  steps_.assign(alphabet_.size(), Matrix(classes, classes));
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t t = 0; t < n; ++t) {
      const double prob = p(representative[c], t);
      if (prob > 0.0) steps_[chain.letter_index(t)](c, future_class_[t]) += prob;
    }
  }

  // Group target states whose normalized incoming column agrees.
  std::vector<std::vector<double>> profiles;
  std::vector<std::size_t> arrival_of(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> column(classes);
    double total = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      column[c] = p(representative[c], t);
      total += column[c];
    }
    if (total > 0.0) {
      for (double& v : column) v /= total;
    }
    std::size_t k = 0;
    for (; k < profiles.size(); ++k) {
      bool same = true;
      for (std::size_t c = 0; c < classes && same; ++c) {
        same = std::abs(profiles[k][c] - column[c]) <= kArrivalColumnTolerance;
      }
      if (same) break;
    }
    if (k == profiles.size()) profiles.push_back(std::move(column));
    arrival_of[t] = k;
  }
  arrival_ = Matrix(classes, profiles.size());
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t t = 0; t < n; ++t) arrival_(c, arrival_of[t]) += p(representative[c], t);
  }

  initial_ = Matrix(alphabet_.size(), classes);
  for (std::size_t s = 0; s < n; ++s) {
    initial_(chain.letter_index(s), future_class_[s]) += chain.stationary()[s];
  }
}

std::optional<std::size_t> TransferOperators::index_of(Letter letter) const {
  const auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), letter);
  if (it == alphabet_.end() || *it != letter) return std::nullopt;
  return static_cast<std::size_t>(it - alphabet_.begin());
}

Word TransferOperators::to_word(std::span<const Letter> letters) const {
  Word w;
  for (Letter y : letters) {
    const auto idx = index_of(y);
    if (!idx) {
      std::ostringstream msg;
      msg << "letter " << y << " is not emitted by this chain";
      throw Error(ErrorCode::kLetterOutOfRange, msg.str());
    }
    w = w.extended(*idx);
  }
  return w;
}

std::vector<Letter> TransferOperators::to_letters(const Word& word) const {
  std::vector<Letter> out;
  out.reserve(word.size());
  for (std::size_t i = 0; i < word.size(); ++i) out.push_back(alphabet_[word[i]]);
  return out;
}

PartitionState::PartitionState(std::shared_ptr<const TransferOperators> ops)
    : ops_(std::move(ops)) {
  const CylinderStat root = empty_cylinder();
  for (std::size_t b = 0; b < ops_->letters(); ++b) {
    if (auto c = child(root, b)) {
      insert(std::move(*c));
    } else {
      ++dropped_;
    }
  }
}

CylinderStat PartitionState::empty_cylinder() const {
  CylinderStat stat;
  stat.weight = 1.0;
  const auto data = ops_->initial().data();
  stat.table.assign(data.begin(), data.end());
  double total = 0.0;
  for (double v : stat.table) total += v;
  for (double& v : stat.table) v /= total;
  const auto [h, gap] = cylinder_contributions(stat.table, stat.weight, *ops_);
  stat.h = h;
  stat.h1 = h - gap;
  return stat;
}

std::optional<CylinderStat> PartitionState::child(const CylinderStat& parent,
                                                  std::size_t letter_index) const {
  CylinderStat out;
  const double mass =
      advance(parent.table, ops_->step(letter_index), ops_->letters(), out.table);
  out.weight = parent.weight * mass;
  if (!(mass > 0.0) || !(out.weight > 0.0)) return std::nullopt;
  for (double& v : out.table) v /= mass;
  out.word = parent.word.extended(letter_index);
  const auto [h, gap] = cylinder_contributions(out.table, out.weight, *ops_);
  out.h = h;
  out.h1 = h - gap;
  return out;
}

void PartitionState::insert(CylinderStat stat) {
  Leaf leaf;
  leaf.word = std::move(stat.word);
  leaf.weight = stat.weight;
  leaf.h = stat.h;
  leaf.h1 = stat.h1;
  if (leaf.gap() > kReleaseTableBelow * leaf.weight) leaf.table = std::move(stat.table);
  leaf.alive = true;
  sum_h_.add(stat.h);
  sum_h1_.add(stat.h1);
  ++live_;

  const auto slot = static_cast<std::uint32_t>(slots_.size());
  slots_.push_back(std::move(leaf));
  if (heap_strategy_) {
    const Leaf& l = slots_.back();
    const double key = *heap_strategy_ == Strategy::kGreedy
                           ? l.gap()
                           : static_cast<double>(l.word.size());
    heap_.push_back({key, slot});
    std::push_heap(heap_.begin(), heap_.end(),
                   [this](const Entry& a, const Entry& b) { return entry_less(a, b); });
  }
}

bool PartitionState::entry_less(const Entry& lhs, const Entry& rhs) const {
  if (lhs.key != rhs.key) {
    return *heap_strategy_ == Strategy::kGreedy ? lhs.key < rhs.key : lhs.key > rhs.key;
  }
  return slots_[lhs.slot].word > slots_[rhs.slot].word;
}

void PartitionState::rebuild_heap(Strategy strategy) {
  heap_strategy_ = strategy;
  heap_.clear();
  for (std::uint32_t s = 0; s < slots_.size(); ++s) {
    const Leaf& l = slots_[s];
    if (!l.alive) continue;
    heap_.push_back({strategy == Strategy::kGreedy ? l.gap()
                                                   : static_cast<double>(l.word.size()),
                     s});
  }
  std::make_heap(heap_.begin(), heap_.end(),
                 [this](const Entry& a, const Entry& b) { return entry_less(a, b); });
}

Word PartitionState::select_next(Strategy strategy) {
  if (live_ == 0) throw Error(ErrorCode::kEmptyPartition, "partition has no leaves");
  if (heap_strategy_ != strategy) rebuild_heap(strategy);
  const auto less = [this](const Entry& a, const Entry& b) { return entry_less(a, b); };
  while (!slots_[heap_.front().slot].alive) {
    std::pop_heap(heap_.begin(), heap_.end(), less);
    heap_.pop_back();
  }
  return slots_[heap_.front().slot].word;
}

double PartitionState::max_gap() {
  select_next(Strategy::kGreedy);
  return slots_[heap_.front().slot].gap();
}

bool PartitionState::contains(const Word& word) const {
  return std::any_of(slots_.begin(), slots_.end(),
                     [&](const Leaf& l) { return l.alive && l.word == word; });
}

std::vector<double> PartitionState::table_for(const Leaf& leaf) const {
  if (!leaf.table.empty()) return leaf.table;
  std::vector<double> table = empty_cylinder().table;
  std::vector<double> next;
  for (std::size_t i = 0; i < leaf.word.size(); ++i) {
    const double mass = advance(table, ops_->step(leaf.word[i]), ops_->letters(), next);
    for (double& v : next) v /= mass;
    table.swap(next);
  }
  return table;
}

void PartitionState::refine(const Word& word) {
  std::uint32_t slot = static_cast<std::uint32_t>(slots_.size());
  if (heap_strategy_ && !heap_.empty() && slots_[heap_.front().slot].alive &&
      slots_[heap_.front().slot].word == word) {
    slot = heap_.front().slot;
  } else {
    for (std::uint32_t s = 0; s < slots_.size(); ++s) {
      if (slots_[s].alive && slots_[s].word == word) {
        slot = s;
        break;
      }
    }
  }
  if (slot == slots_.size()) {
    throw Error(ErrorCode::kNotALeaf, "word is not a leaf of the partition");
  }

  CylinderStat parent;
  {
    Leaf& leaf = slots_[slot];
    parent.word = leaf.word;
    parent.weight = leaf.weight;
    parent.table = table_for(leaf);
    parent.h = leaf.h;
    parent.h1 = leaf.h1;
    leaf.alive = false;
    std::vector<double>().swap(leaf.table);
  }
  --live_;
  sum_h_.add(-parent.h);
  sum_h1_.add(-parent.h1);
  ++refinements_;

  for (std::size_t b = 0; b < ops_->letters(); ++b) {
    if (auto c = child(parent, b)) {
      insert(std::move(*c));
    } else {
      ++dropped_;
    }
  }
}

std::vector<std::uint32_t> PartitionState::sorted_live_slots() const {
  std::vector<std::uint32_t> order;
  order.reserve(live_);
  for (std::uint32_t s = 0; s < slots_.size(); ++s) {
    if (slots_[s].alive) order.push_back(s);
  }
  std::sort(order.begin(), order.end(), [this](std::uint32_t a, std::uint32_t b) {
    return slots_[a].word < slots_[b].word;
  });
  return order;
}

EntropyInterval PartitionState::interval(Strategy strategy) const {
  CompensatedSum lower, upper;
  for (std::uint32_t s : sorted_live_slots()) {
    upper.add(slots_[s].h);
    lower.add(slots_[s].h1);
  }
  return {lower.value(), upper.value(), live_, strategy};
}

std::vector<CylinderStat> PartitionState::leaves() const {
  std::vector<CylinderStat> out;
  for (std::uint32_t s : sorted_live_slots()) {
    const Leaf& l = slots_[s];
    out.push_back({l.word, l.weight, table_for(l), l.h, l.h1});
  }
  return out;
}

PartitionState root_partition(const MarkovChainModel& chain) {
  return PartitionState(std::make_shared<const TransferOperators>(chain));
}

void refine_leaf(PartitionState& partition, const Word& word) { partition.refine(word); }

Word select_next(PartitionState& partition, Strategy strategy) {
  return partition.select_next(strategy);
}

BoundsResult run_bounds(PartitionState& partition, Strategy strategy,
                        const StopRule& stop, const TraceFn& trace) {
  const bool has_tol = stop.tol_bits && *stop.tol_bits > 0.0;
  const bool has_cells =
      stop.max_cells && *stop.max_cells >= partition.operators().letters();
  if (!has_tol && !has_cells) {
    throw Error(ErrorCode::kBadParams,
                "stop rule needs tol_bits > 0 or max_cells >= alphabet size");
  }

  BoundsResult result;
  std::size_t step = 0;
  while (true) {
    const double gap = partition.sum_h() - partition.sum_h1();
    if (has_tol && gap <= *stop.tol_bits) break;
    if (has_cells && partition.cells() >= *stop.max_cells) {
      result.budget_exhausted = true;
      break;
    }
    // A zero-gap leaf splits into zero-gap children with the same totals,
    // so once the largest gap is zero the interval is final.
    if (strategy == Strategy::kGreedy && partition.max_gap() <= 0.0) break;
    partition.refine(partition.select_next(strategy));
    ++step;
    if (trace) {
      trace({step, partition.cells(), partition.sum_h1(), partition.sum_h()});
    }
  }
  result.interval = partition.interval(strategy);
  result.refinements = partition.refinements();
  result.dropped_children = partition.dropped_children();
  return result;
}

BoundsResult run_bounds(const MarkovChainModel& chain, Strategy strategy,
                        const StopRule& stop, const TraceFn& trace) {
  PartitionState partition = root_partition(chain);
  return run_bounds(partition, strategy, stop, trace);
}

BirchBounds birch_bounds(const MarkovChainModel& chain, std::size_t n,
                         const BirchOptions& options) {
  if (n == 0) throw Error(ErrorCode::kBadParams, "Birch depth must be >= 1");
  // The partition is only used for its cylinder recursion; the exhaustive
  // walk never materializes the level-n leaves.
  const PartitionState engine = root_partition(chain);
  const std::size_t letters = engine.operators().letters();

  struct Frame {
    CylinderStat stat;
    std::size_t next_letter = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({engine.empty_cylinder(), 0});
  CompensatedSum lower, upper;
  BirchBounds out;
  while (!stack.empty()) {
    Frame& top = stack.back();
    if (top.next_letter == letters) {
      stack.pop_back();
      continue;
    }
    const std::size_t b = top.next_letter++;
    auto c = engine.child(top.stat, b);
    if (!c) continue;
    if (c->word.size() == n) {
      if (++out.cylinders > options.max_cylinders) {
        std::ostringstream msg;
        msg << "more than " << options.max_cylinders << " cylinders at depth " << n;
        throw Error(ErrorCode::kResourceLimit, msg.str());
      }
      upper.add(c->h);
      lower.add(c->h1);
    } else {
      stack.push_back({std::move(*c), 0});
    }
  }
  out.lower = lower.value();
  out.upper = upper.value();
  return out;
}

}  // namespace bitshift
