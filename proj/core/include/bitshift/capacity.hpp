#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bitshift/channel.hpp"
#include "bitshift/entropy_engine.hpp"

namespace bitshift {

// I(Y; X) = h(Y) - h(J_eps), in bits per run.
struct MiResult {
  double eps = 0.0;
  double mi_lower = 0.0;
  double mi_upper = 0.0;
  EntropyInterval h_out;
  double h_jitter = 0.0;
  bool budget_exhausted = false;
};

MiResult mutual_information(const SourceDist& source, double eps, const StopRule& stop,
                            Strategy strategy = Strategy::kGreedy);

struct MiSweepRow {
  double eps = 0.0;
  std::optional<MiResult> result;
  std::string error;  // set when result is empty

  bool ok() const { return result.has_value(); }
};

// One row per grid point, in grid order. A failing point is reported in its
// row and does not stop the sweep. threads == 0 picks BITSHIFT_THREADS or 1.
std::vector<MiSweepRow> mi_sweep(const SourceDist& source, std::span<const double> grid,
                                 const StopRule& stop,
                                 Strategy strategy = Strategy::kGreedy,
                                 unsigned threads = 0);

// start, start + step, ... up to stop inclusive (with a 1e-9 step slack).
// Error{kBadParams} unless step > 0 and start <= stop.
std::vector<double> arithmetic_grid(double start, double stop, double step);

// Thread count from the BITSHIFT_THREADS environment variable (default 1).
unsigned default_thread_count();

struct CapacitySearchConfig {
  // Start points; empty means {uniform, truncated geometric 0.658}.
  std::vector<SourceDist> initial_points;
  std::size_t max_evaluations = 200;
  StopRule per_evaluation{std::nullopt, 2000};
  Strategy strategy = Strategy::kGreedy;
  std::uint64_t seed = 1;
  double initial_step = 0.5;  // simplex edge in logit space
};

struct CapacityTracePoint {
  std::vector<double> p;
  double mi_lower = 0.0;
  double incumbent = 0.0;  // best mi_lower so far
};

struct CapacitySearchResult {
  SourceDist best_source;
  MiResult best;
  std::size_t evaluations = 0;
  std::vector<CapacityTracePoint> trace;
};

// Nelder-Mead over iid run-length laws (softmax logits) maximizing the
// certified mi_lower, so best.mi_lower is a capacity lower bound.
CapacitySearchResult capacity_lower_bound(int d, int k, double eps,
                                          const CapacitySearchConfig& config = {});

}  // namespace bitshift
