#include "bitshift/capacity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "bitshift/error.hpp"

namespace bitshift {

MiResult mutual_information(const SourceDist& source, double eps, const StopRule& stop,
                            Strategy strategy) {
  const JointChain joint = build_joint_chain(source, JitterParams{eps});
  const BoundsResult bounds = run_bounds(joint.chain, strategy, stop);
  MiResult out;
  out.eps = eps;
  out.h_out = bounds.interval;
  out.h_jitter = jitter_entropy(eps);
  out.mi_lower = out.h_out.lower - out.h_jitter;
  out.mi_upper = out.h_out.upper - out.h_jitter;
  out.budget_exhausted = bounds.budget_exhausted;
  return out;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("BITSHIFT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return 1;
}

std::vector<MiSweepRow> mi_sweep(const SourceDist& source, std::span<const double> grid,
                                 const StopRule& stop, Strategy strategy,
                                 unsigned threads) {
  std::vector<MiSweepRow> rows(grid.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor++; i < grid.size(); i = cursor++) {
      rows[i].eps = grid[i];
      try {
        rows[i].result = mutual_information(source, grid[i], stop, strategy);
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.size())));
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  return rows;
}

std::vector<double> arithmetic_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(start <= stop) || !std::isfinite(start) || !std::isfinite(stop)) {
    throw Error(ErrorCode::kBadParams, "grid needs step > 0 and start <= stop");
  }
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i) {
    out.push_back(std::min(start + static_cast<double>(i) * step, stop));
  }
  return out;
}

namespace {

std::vector<double> softmax(std::span<const double> logits) {
  // logits omit the first coordinate, which is pinned to 0.
  std::vector<double> p(logits.size() + 1);
  double top = 0.0;
  for (double v : logits) top = std::max(top, v);
  p[0] = std::exp(-top);
  for (std::size_t i = 0; i < logits.size(); ++i) p[i + 1] = std::exp(logits[i] - top);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> to_logits(const SourceDist& source) {
  constexpr double kFloor = 1e-12;
  const double base = std::log(std::max(source.p[0], kFloor));
  std::vector<double> out;
  for (std::size_t i = 1; i < source.p.size(); ++i) {
    out.push_back(std::log(std::max(source.p[i], kFloor)) - base);
  }
  return out;
}

}  // namespace

CapacitySearchResult capacity_lower_bound(int d, int k, double eps,
                                          const CapacitySearchConfig& config) {
  validate_run_lengths(d, k);
  jitter_entropy(eps);
  std::vector<SourceDist> starts = config.initial_points;
  if (starts.empty()) {
    starts.push_back(make_source(d, k, Uniform{}));
    starts.push_back(make_source(d, k, TruncatedGeometric{0.658}));
  }
  for (const SourceDist& s : starts) {
    if (s.d != d || s.k != k) {
      throw Error(ErrorCode::kBadParams, "initial point has different (d, k)");
    }
  }
  if (config.max_evaluations < starts.size()) {
    throw Error(ErrorCode::kBadParams, "evaluation budget smaller than start set");
  }

  CapacitySearchResult result;
  double incumbent = -std::numeric_limits<double>::infinity();
  auto evaluate = [&](const SourceDist& source) {
    const MiResult mi =
        mutual_information(source, eps, config.per_evaluation, config.strategy);
    ++result.evaluations;
    if (mi.mi_lower > incumbent) {
      incumbent = mi.mi_lower;
      result.best_source = source;
      result.best = mi;
    }
    result.trace.push_back({source.p, mi.mi_lower, incumbent});
    return mi.mi_lower;
  };
  auto evaluate_logits = [&](std::span<const double> logits) {
    return evaluate(make_source(d, k, ExplicitProbabilities{softmax(logits)}));
  };

  for (const SourceDist& s : starts) evaluate(s);

  const std::size_t dim = static_cast<std::size_t>(k - d);
  std::mt19937_64 rng(config.seed);
  struct Vertex {
    std::vector<double> x;
    double value;  // mi_lower, maximized
  };
  std::vector<Vertex> simplex;
  simplex.push_back({to_logits(result.best_source), incumbent});
  for (std::size_t i = 0; i < dim && result.evaluations < config.max_evaluations; ++i) {
    Vertex v = simplex.front();
    const double sign = (rng() & 1u) ? 1.0 : -1.0;
    v.x[i] += sign * config.initial_step;
    v.value = evaluate_logits(v.x);
    simplex.push_back(std::move(v));
  }
  if (simplex.size() < dim + 1) return result;

  auto by_value = [](const Vertex& a, const Vertex& b) { return a.value > b.value; };
  auto affine = [](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
  };

  while (result.evaluations < config.max_evaluations) {
    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    Vertex& worst = simplex.back();
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i].x[j] / dim;
    }

    auto reflected = affine(centroid, worst.x, -1.0);
    const double fr = evaluate_logits(reflected);
    if (fr > simplex.front().value) {
      if (result.evaluations >= config.max_evaluations) {
        worst = {std::move(reflected), fr};
        break;
      }
      auto expanded = affine(centroid, worst.x, -2.0);
      const double fe = evaluate_logits(expanded);
      worst = fe > fr ? Vertex{std::move(expanded), fe} : Vertex{std::move(reflected), fr};
      continue;
    }
    if (fr > simplex[dim - 1].value) {
      worst = {std::move(reflected), fr};
      continue;
    }
    if (result.evaluations >= config.max_evaluations) break;
    const bool outside = fr > worst.value;
    auto contracted = outside ? affine(centroid, reflected, 0.5)
                              : affine(centroid, worst.x, 0.5);
    const double fc = evaluate_logits(contracted);
    if (outside ? fc >= fr : fc > worst.value) {
      worst = {std::move(contracted), fc};
      continue;
    }
    for (std::size_t i = 1; i <= dim && result.evaluations < config.max_evaluations; ++i) {
      simplex[i].x = affine(simplex.front().x, simplex[i].x, 0.5);
      simplex[i].value = evaluate_logits(simplex[i].x);
    }
  }
  return result;
}

}  // namespace bitshift
