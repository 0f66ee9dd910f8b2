#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "bitshift/capacity.hpp"
#include "bitshift/error.hpp"
#include "bitshift/markov_chain.hpp"
#include "bitshift/renewal.hpp"
#include "bitshift/sofic.hpp"

#ifndef BITSHIFT_VERSION
#define BITSHIFT_VERSION "0.0.0"
#endif

namespace bitshift::cli {
namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kSchemaVersion = "1";

// ---------------------------------------------------------------------------
// formatting

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string join(std::span<const Letter> word, char sep) {
  std::string s;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(word[i]);
  }
  return s;
}

std::string join(std::span<const double> values, char sep) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += sep;
    s += num(values[i]);
  }
  return s;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string q = "\"";
  for (char c : field) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// parsing helpers

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--eps-grid: expected start:stop:step, got '" + text + "'");
    }
  }
  if (parts.size() != 3) {
    throw UsageError("--eps-grid: expected start:stop:step, got '" + text + "'");
  }
  std::vector<double> grid;
  try {
    grid = arithmetic_grid(parts[0], parts[1], parts[2]);
  } catch (const Error& e) {
    throw UsageError(std::string("--eps-grid: ") + e.what());
  }
  for (double e : grid) {
    if (e < 0.0 || e > 0.5) throw UsageError("--eps-grid: values must lie in [0, 0.5]");
  }
  return grid;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

const std::vector<std::string_view> kSwitches = {"no-timestamp", "trace", "list-words",
                                                 "uniform"};

// Replaces --config FILE by the file's key=value lines as flags, placed right
// after the subcommand so that later command-line flags take precedence.
std::vector<std::string> expand_config(std::span<const std::string> args) {
  std::vector<std::string> rest;
  std::vector<std::string> injected;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config: missing file name");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw UsageError("--config: cannot read '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line.substr(0, line.find('#')));
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw UsageError("--config: line " + std::to_string(lineno) + " is not key=value");
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (std::find(kSwitches.begin(), kSwitches.end(), key) != kSwitches.end()) {
        if (value == "true" || value == "1") injected.push_back("--" + key);
      } else {
        injected.push_back("--" + key);
        injected.push_back(value);
      }
    }
  }
  const std::size_t at = !rest.empty() && rest[0].rfind('-', 0) != 0 ? 1 : 0;
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
  return rest;
}

struct Binding {
  std::vector<double> probs;
  bool uniform = false;
  std::string strategy = "greedy";
  std::string format = "json";
  std::optional<double> tol;
  std::optional<std::size_t> max_cells;
  std::optional<std::size_t> n;
  std::optional<double> eps;
  double geometric = 0.658;
};

void add_model_options(CLI::App* sub, RunConfig& cfg, Binding& b, bool with_eps) {
  sub->add_option("--d", cfg.d, "minimum run length (>= 2)")->capture_default_str();
  sub->add_option("--k", cfg.k, "maximum run length (> d)")->capture_default_str();
  auto* geo = sub->add_option("--geometric", b.geometric,
                              "truncated geometric source, p_l proportional to gamma^l");
  auto* probs = sub->add_option("--probs", b.probs,
                                "explicit run-length probabilities for d..k (normalized)")
                    ->delimiter(',');
  auto* uni = sub->add_flag("--uniform", b.uniform, "uniform source (default)");
  geo->excludes(probs)->excludes(uni);
  probs->excludes(uni);
  if (with_eps) {
    sub->add_option("--eps", b.eps, "jitter probability in [0, 0.5] (default 0)");
  }
}

void add_stop_options(CLI::App* sub, Binding& b) {
  sub->add_option("--strategy", b.strategy, "refinement strategy: greedy | uniform")
      ->check(CLI::IsMember({"greedy", "uniform"}))
      ->capture_default_str();
  sub->add_option("--tol", b.tol, "stop once upper - lower <= tol bits");
  sub->add_option("--max-cells", b.max_cells, "stop once the partition has this many cells");
}

void add_output_options(CLI::App* sub, RunConfig& cfg, Binding& b) {
  sub->add_option("--format", b.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  sub->add_option("--output,-o", cfg.output, "output file (default stdout)");
  sub->add_flag_function("--no-timestamp", [&cfg](std::int64_t) { cfg.timestamp = false; },
                         "omit timestamp and wall time for byte-comparable output");
  sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
  sub->add_option("--config")->description("flat key=value file mirroring the flags");
}

StopRule default_stop(Command c) {
  switch (c) {
    case Command::kCapacityLb:
      return {std::nullopt, 2000};
    case Command::kCompareStrategies:
      return {std::nullopt, 100000};
    default:
      return {1e-9, 200000};
  }
}

}  // namespace

std::string_view command_name(Command command) {
  switch (command) {
    case Command::kEntropy: return "entropy";
    case Command::kMiSweep: return "mi-sweep";
    case Command::kCapacityLb: return "capacity-lb";
    case Command::kForbidden: return "forbidden";
    case Command::kHtop: return "htop";
    case Command::kRenewal: return "renewal";
    case Command::kSample: return "sample";
    case Command::kCompareStrategies: return "compare-strategies";
  }
  return "?";
}

RunConfig parse_args(std::span<const std::string> raw) {
  const std::vector<std::string> args = expand_config(raw);

  RunConfig cfg;
  Binding b;
  CLI::App app{"Entropy bounds, mutual information and sofic analysis for the bit-shift channel",
               "bitshift"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", BITSHIFT_VERSION);

  struct Sub {
    Command command;
    CLI::App* app;
  };
  std::vector<Sub> subs;

  auto* entropy = app.add_subcommand("entropy", "certified bounds on the output entropy rate");
  add_model_options(entropy, cfg, b, true);
  add_stop_options(entropy, b);
  entropy->add_flag("--trace", cfg.trace, "emit one row per refinement step");
  entropy->add_option("--trace-stride", cfg.trace_stride, "keep every n-th trace step")
      ->check(CLI::PositiveNumber);
  add_output_options(entropy, cfg, b);
  entropy->footer(
      "CSV columns: d,k,eps,strategy,lower,upper,gap,cells,budget_exhausted,mi_lower,mi_upper\n"
      "CSV columns with --trace: step,cells,lower,upper,gap\n"
      "Entropies in bits per symbol. Default stop: --tol 1e-9 --max-cells 200000.");
  subs.push_back({Command::kEntropy, entropy});

  auto* sweep = app.add_subcommand("mi-sweep", "mutual information over a grid of eps");
  add_model_options(sweep, cfg, b, false);
  sweep->add_option("--eps-grid", cfg.eps_grid_text, "start:stop:step (inclusive)")
      ->default_str("0:0.5:0.025");
  add_stop_options(sweep, b);
  sweep->add_option("--threads", cfg.threads,
                    "worker threads (default: BITSHIFT_THREADS or 1)");
  add_output_options(sweep, cfg, b);
  sweep->footer(
      "CSV columns: eps,mi_lower,mi_upper,h_lower,h_upper,h_jitter,cells,strategy,status\n"
      "status is ok, budget_exhausted or error:<message>; rows follow grid order.");
  subs.push_back({Command::kMiSweep, sweep});

  auto* cap = app.add_subcommand("capacity-lb", "capacity lower bound over iid run-length laws");
  add_model_options(cap, cfg, b, true);
  add_stop_options(cap, b);
  cap->add_option("--max-evaluations", cfg.max_evaluations, "objective evaluation budget")
      ->capture_default_str();
  cap->add_flag("--trace", cfg.trace, "emit one row per evaluation");
  add_output_options(cap, cfg, b);
  cap->footer(
      "CSV columns: d,k,eps,mi_lower,mi_upper,evaluations,p\n"
      "CSV columns with --trace: evaluation,mi_lower,incumbent,p\n"
      "p is space separated over d..k. Default stop per evaluation: --max-cells 2000.");
  subs.push_back({Command::kCapacityLb, cap});

  auto* forb = app.add_subcommand("forbidden", "minimal forbidden words of the output shift");
  add_model_options(forb, cfg, b, false);
  forb->add_option("--max-len", cfg.max_len, "longest word to enumerate (>= 2)")
      ->capture_default_str();
  add_output_options(forb, cfg, b);
  forb->footer("CSV columns: length,word (word is a quoted comma separated letter list)");
  subs.push_back({Command::kForbidden, forb});

  auto* htop = app.add_subcommand("htop", "topological entropy of the output shift");
  add_model_options(htop, cfg, b, false);
  htop->add_option("--n", b.n, "also count admissible words of this length");
  add_output_options(htop, cfg, b);
  htop->footer("CSV columns: d,k,dfa_states,h_top,n,count,growth\n"
               "growth = log2(count) / n; n, count and growth are empty without --n.");
  subs.push_back({Command::kHtop, htop});

  auto* ren = app.add_subcommand("renewal", "entropy estimate from renewal return words");
  add_model_options(ren, cfg, b, true);
  ren->add_option("--r-max", cfg.r_max, "longest return gap")->capture_default_str();
  ren->add_option("--merge-resolution", cfg.merge_resolution,
                  "merge open prefixes with equal predictive law on this grid (0 = exact)")
      ->capture_default_str();
  ren->add_option("--target-coverage", cfg.target_coverage,
                  "stop once this share of return mass is closed")
      ->capture_default_str();
  ren->add_flag("--list-words", cfg.list_words, "list return words up to --r-max instead");
  add_output_options(ren, cfg, b);
  ren->footer("CSV columns: d,k,eps,estimate_bits,coverage,base_probability,r_reached\n"
              "CSV columns with --list-words: r,word,probability");
  subs.push_back({Command::kRenewal, ren});

  auto* sample = app.add_subcommand("sample", "sample an output sequence");
  add_model_options(sample, cfg, b, true);
  sample->add_option("--n", b.n, "number of symbols (default 1000)");
  add_output_options(sample, cfg, b);
  sample->footer("CSV columns: t,letter");
  subs.push_back({Command::kSample, sample});

  auto* cmp = app.add_subcommand("compare-strategies",
                                 "greedy and uniform refinement traces on identical inputs");
  add_model_options(cmp, cfg, b, true);
  cmp->add_option("--tol", b.tol, "stop once upper - lower <= tol bits");
  cmp->add_option("--max-cells", b.max_cells, "cell budget shared by both strategies");
  cmp->add_option("--trace-stride", cfg.trace_stride, "keep every n-th trace step")
      ->check(CLI::PositiveNumber);
  add_output_options(cmp, cfg, b);
  cmp->footer("CSV columns: strategy,step,cells,lower,upper,gap\n"
              "Default stop: --max-cells 100000.");
  subs.push_back({Command::kCompareStrategies, cmp});

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    for (const Sub& s : subs) {
      if (s.app->parsed()) throw HelpRequested(s.app->help());
    }
    throw HelpRequested(app.help());
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested(std::string(BITSHIFT_VERSION) + "\n");
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    if (msg.empty()) msg = e.get_name();
    throw UsageError(msg);
  }

  for (const Sub& s : subs) {
    if (s.app->parsed()) cfg.command = s.command;
  }

  try {
    validate_run_lengths(cfg.d, cfg.k);
  } catch (const Error&) {
    if (cfg.d < 2) throw UsageError("--d: must be at least 2, got " + std::to_string(cfg.d));
    throw UsageError("--k: must exceed --d, got d=" + std::to_string(cfg.d) +
                     " k=" + std::to_string(cfg.k));
  }
  if (cfg.k - cfg.d > 200) throw UsageError("--k: k - d must not exceed 200");

  if (!b.probs.empty()) {
    cfg.source = ExplicitProbabilities{b.probs};
    try {
      make_source(cfg.d, cfg.k, cfg.source);
    } catch (const Error& e) {
      throw UsageError(std::string("--probs: ") + e.what());
    }
  }
  for (const Sub& s : subs) {
    if (s.app->parsed() && s.app->count("--geometric") > 0) {
      if (!(b.geometric > 0.0) || !std::isfinite(b.geometric)) {
        throw UsageError("--geometric: gamma must be positive and finite");
      }
      cfg.source = TruncatedGeometric{b.geometric};
    }
  }

  if (b.eps) {
    if (!(*b.eps >= 0.0 && *b.eps <= 0.5)) {
      throw UsageError("--eps: must lie in [0, 0.5], got " + num(*b.eps));
    }
    cfg.eps = *b.eps;
  }
  if (cfg.command == Command::kMiSweep) {
    if (cfg.eps_grid_text.empty()) cfg.eps_grid_text = "0:0.5:0.025";
    cfg.eps_grid = parse_grid(cfg.eps_grid_text);
  }

  cfg.strategy = parse_strategy(b.strategy);
  cfg.format = b.format == "csv" ? Format::kCsv : Format::kJson;

  if (b.tol && !(*b.tol > 0.0)) throw UsageError("--tol: must be positive");
  if (b.tol || b.max_cells) {
    cfg.stop = {b.tol, b.max_cells};
  } else {
    cfg.stop = default_stop(cfg.command);
  }
  if (cfg.stop.max_cells) {
    const std::size_t letters = static_cast<std::size_t>(cfg.k - cfg.d + 5);
    if (*cfg.stop.max_cells < letters) {
      throw UsageError("--max-cells: must be at least the output alphabet size " +
                       std::to_string(letters));
    }
  }

  if (cfg.command == Command::kForbidden && cfg.max_len < 2) {
    throw UsageError("--max-len: must be at least 2");
  }
  if (cfg.command == Command::kSample) {
    cfg.n = b.n.value_or(1000);
    if (cfg.n == 0) throw UsageError("--n: must be positive");
  } else {
    cfg.n = b.n.value_or(0);
  }
  if (cfg.command == Command::kRenewal) {
    if (!(cfg.merge_resolution >= 0.0)) throw UsageError("--merge-resolution: must be >= 0");
    if (!(cfg.target_coverage > 0.0 && cfg.target_coverage <= 1.0)) {
      throw UsageError("--target-coverage: must lie in (0, 1]");
    }
  }
  if (cfg.command == Command::kCapacityLb && cfg.max_evaluations == 0) {
    throw UsageError("--max-evaluations: must be positive");
  }
  return cfg;
}

namespace {

Json source_json(const RunConfig& cfg, const SourceDist& source) {
  Json j;
  if (std::holds_alternative<TruncatedGeometric>(cfg.source)) {
    j["kind"] = "geometric";
    j["gamma"] = std::get<TruncatedGeometric>(cfg.source).gamma;
  } else if (std::holds_alternative<ExplicitProbabilities>(cfg.source)) {
    j["kind"] = "explicit";
  } else {
    j["kind"] = "uniform";
  }
  j["p"] = source.p;
  return j;
}

Json stop_json(const StopRule& stop) {
  Json j;
  j["tol_bits"] = stop.tol_bits ? Json(*stop.tol_bits) : Json(nullptr);
  j["max_cells"] = stop.max_cells ? Json(*stop.max_cells) : Json(nullptr);
  return j;
}

Json envelope(const RunConfig& cfg, Json inputs) {
  Json doc;
  doc["schema"] = std::string("bitshift.") + std::string(command_name(cfg.command)) + "/" +
                  kSchemaVersion;
  doc["version"] = BITSHIFT_VERSION;
  doc["command"] = command_name(cfg.command);
  doc["inputs"] = std::move(inputs);
  return doc;
}

Json base_inputs(const RunConfig& cfg, const SourceDist& source) {
  Json in;
  in["d"] = cfg.d;
  in["k"] = cfg.k;
  in["source"] = source_json(cfg, source);
  return in;
}

class Emitter {
 public:
  Emitter(const RunConfig& cfg, std::ostream& out)
      : cfg_(cfg), out_(out), start_(std::chrono::steady_clock::now()) {}

  void json(Json doc) {
    if (cfg_.timestamp) {
      const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
      doc["wall_time_s"] = wall.count();
      doc["timestamp"] = utc_timestamp();
    }
    out_ << doc.dump(2) << '\n';
  }

  std::ostream& csv() { return out_; }

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
};

Json interval_json(const EntropyInterval& iv) {
  Json j;
  j["lower"] = iv.lower;
  j["upper"] = iv.upper;
  j["gap"] = iv.gap();
  j["cells"] = iv.cells;
  return j;
}

void run_entropy(const RunConfig& cfg, Emitter& em) {
  const SourceDist source = make_source(cfg.d, cfg.k, cfg.source);
  const JointChain joint = build_joint_chain(source, {cfg.eps});
  std::vector<TraceStep> steps;
  TraceFn tracer;
  if (cfg.trace) {
    tracer = [&](const TraceStep& s) {
      if (s.step % cfg.trace_stride == 0) steps.push_back(s);
    };
  }
  const BoundsResult r = run_bounds(joint.chain, cfg.strategy, cfg.stop, tracer);
  const double hj = jitter_entropy(cfg.eps);

  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    if (cfg.trace) {
      o << "step,cells,lower,upper,gap\n";
      for (const auto& s : steps) {
        o << s.step << ',' << s.cells << ',' << num(s.lower) << ',' << num(s.upper) << ','
          << num(s.upper - s.lower) << '\n';
      }
      return;
    }
    o << "d,k,eps,strategy,lower,upper,gap,cells,budget_exhausted,mi_lower,mi_upper\n";
    o << cfg.d << ',' << cfg.k << ',' << num(cfg.eps) << ',' << to_string(cfg.strategy) << ','
      << num(r.interval.lower) << ',' << num(r.interval.upper) << ','
      << num(r.interval.gap()) << ',' << r.interval.cells << ','
      << (r.budget_exhausted ? "true" : "false") << ',' << num(r.interval.lower - hj) << ','
      << num(r.interval.upper - hj) << '\n';
    return;
  }

  Json in = base_inputs(cfg, source);
  in["eps"] = cfg.eps;
  in["strategy"] = to_string(cfg.strategy);
  in["stop"] = stop_json(cfg.stop);
  Json doc = envelope(cfg, std::move(in));
  doc["result"] = interval_json(r.interval);
  doc["result"]["refinements"] = r.refinements;
  doc["result"]["dropped_children"] = r.dropped_children;
  doc["result"]["budget_exhausted"] = r.budget_exhausted;
  doc["result"]["source_entropy"] = source_entropy(source);
  doc["result"]["h_jitter"] = hj;
  doc["result"]["mi_lower"] = r.interval.lower - hj;
  doc["result"]["mi_upper"] = r.interval.upper - hj;
  if (cfg.trace) {
    Json t = Json::array();
    for (const auto& s : steps) t.push_back({s.step, s.cells, s.lower, s.upper});
    doc["trace_columns"] = {"step", "cells", "lower", "upper"};
    doc["trace"] = std::move(t);
  }
  em.json(std::move(doc));
}

void run_sweep(const RunConfig& cfg, Emitter& em) {
  const SourceDist source = make_source(cfg.d, cfg.k, cfg.source);
  const auto rows = mi_sweep(source, cfg.eps_grid, cfg.stop, cfg.strategy, cfg.threads);
  auto status = [](const MiSweepRow& row) -> std::string {
    if (!row.ok()) return "error:" + row.error;
    return row.result->budget_exhausted ? "budget_exhausted" : "ok";
  };

  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    o << "eps,mi_lower,mi_upper,h_lower,h_upper,h_jitter,cells,strategy,status\n";
    for (const auto& row : rows) {
      o << num(row.eps) << ',';
      if (row.ok()) {
        const MiResult& m = *row.result;
        o << num(m.mi_lower) << ',' << num(m.mi_upper) << ',' << num(m.h_out.lower) << ','
          << num(m.h_out.upper) << ',' << num(m.h_jitter) << ',' << m.h_out.cells << ',';
      } else {
        o << ",,,,,,";
      }
      o << to_string(cfg.strategy) << ',' << csv_quote(status(row)) << '\n';
    }
    return;
  }

  Json in = base_inputs(cfg, source);
  in["eps_grid"] = cfg.eps_grid_text;
  in["strategy"] = to_string(cfg.strategy);
  in["stop"] = stop_json(cfg.stop);
  Json doc = envelope(cfg, std::move(in));
  Json out = Json::array();
  for (const auto& row : rows) {
    Json r;
    r["eps"] = row.eps;
    if (row.ok()) {
      const MiResult& m = *row.result;
      r["mi_lower"] = m.mi_lower;
      r["mi_upper"] = m.mi_upper;
      r["h_lower"] = m.h_out.lower;
      r["h_upper"] = m.h_out.upper;
      r["h_jitter"] = m.h_jitter;
      r["cells"] = m.h_out.cells;
    }
    r["status"] = status(row);
    out.push_back(std::move(r));
  }
  doc["rows"] = std::move(out);
  em.json(std::move(doc));
}

void run_capacity(const RunConfig& cfg, Emitter& em) {
  CapacitySearchConfig search;
  search.max_evaluations = cfg.max_evaluations;
  search.per_evaluation = cfg.stop;
  search.strategy = cfg.strategy;
  search.seed = cfg.seed;
  const CapacitySearchResult r = capacity_lower_bound(cfg.d, cfg.k, cfg.eps, search);

  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    if (cfg.trace) {
      o << "evaluation,mi_lower,incumbent,p\n";
      for (std::size_t i = 0; i < r.trace.size(); ++i) {
        const auto& t = r.trace[i];
        o << i + 1 << ',' << num(t.mi_lower) << ',' << num(t.incumbent) << ','
          << join(std::span<const double>(t.p), ' ') << '\n';
      }
      return;
    }
    o << "d,k,eps,mi_lower,mi_upper,evaluations,p\n";
    o << cfg.d << ',' << cfg.k << ',' << num(cfg.eps) << ',' << num(r.best.mi_lower) << ','
      << num(r.best.mi_upper) << ',' << r.evaluations << ','
      << join(std::span<const double>(r.best_source.p), ' ') << '\n';
    return;
  }

  Json in;
  in["d"] = cfg.d;
  in["k"] = cfg.k;
  in["eps"] = cfg.eps;
  in["strategy"] = to_string(cfg.strategy);
  in["stop"] = stop_json(cfg.stop);
  in["max_evaluations"] = cfg.max_evaluations;
  in["seed"] = cfg.seed;
  Json doc = envelope(cfg, std::move(in));
  doc["result"]["mi_lower"] = r.best.mi_lower;
  doc["result"]["mi_upper"] = r.best.mi_upper;
  doc["result"]["h_output"] = interval_json(r.best.h_out);
  doc["result"]["h_jitter"] = r.best.h_jitter;
  doc["result"]["p"] = r.best_source.p;
  doc["result"]["evaluations"] = r.evaluations;
  if (cfg.trace) {
    Json t = Json::array();
    for (const auto& pt : r.trace) {
      t.push_back({{"mi_lower", pt.mi_lower}, {"incumbent", pt.incumbent}, {"p", pt.p}});
    }
    doc["trace"] = std::move(t);
  }
  em.json(std::move(doc));
}

void run_forbidden(const RunConfig& cfg, Emitter& em) {
  const DeterministicPresentation dfa = determinize(presentation(cfg.d, cfg.k));
  const auto words = minimal_forbidden_words(dfa, cfg.max_len);
  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    o << "length,word\n";
    for (const auto& w : words) o << w.size() << ',' << csv_quote(join(w, ',')) << '\n';
    return;
  }
  Json in;
  in["d"] = cfg.d;
  in["k"] = cfg.k;
  in["max_len"] = cfg.max_len;
  Json doc = envelope(cfg, std::move(in));
  doc["count"] = words.size();
  doc["words"] = words;
  em.json(std::move(doc));
}

void run_htop(const RunConfig& cfg, Emitter& em) {
  const DeterministicPresentation dfa = determinize(presentation(cfg.d, cfg.k));
  const double h = topological_entropy(dfa);
  std::optional<double> count;
  if (cfg.n > 0) count = count_admissible_words(dfa, cfg.n);
  const double n = static_cast<double>(cfg.n);

  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    o << "d,k,dfa_states,h_top,n,count,growth\n";
    o << cfg.d << ',' << cfg.k << ',' << dfa.size() << ',' << num(h) << ',';
    if (count) {
      o << cfg.n << ',' << num(*count) << ',' << num(std::log2(*count) / n) << '\n';
    } else {
      o << ",,\n";
    }
    return;
  }
  Json in;
  in["d"] = cfg.d;
  in["k"] = cfg.k;
  if (count) in["n"] = cfg.n;
  Json doc = envelope(cfg, std::move(in));
  doc["dfa_states"] = dfa.size();
  doc["h_top"] = h;
  if (count) {
    doc["count"] = *count;
    doc["growth"] = std::log2(*count) / n;
  }
  em.json(std::move(doc));
}

void run_renewal(const RunConfig& cfg, Emitter& em) {
  const SourceDist source = make_source(cfg.d, cfg.k, cfg.source);
  const JointChain joint = build_joint_chain(source, {cfg.eps});

  if (cfg.list_words) {
    const ReturnWordTable table = return_word_probabilities(joint, cfg.r_max);
    if (cfg.format == Format::kCsv) {
      auto& o = em.csv();
      o << "r,word,probability\n";
      for (const auto& e : table.entries) {
        o << e.word.size() - 2 << ',' << csv_quote(join(e.word, ',')) << ','
          << num(e.probability) << '\n';
      }
      return;
    }
    Json in = base_inputs(cfg, source);
    in["eps"] = cfg.eps;
    in["r_max"] = cfg.r_max;
    Json doc = envelope(cfg, std::move(in));
    doc["base_probability"] = table.base_probability;
    doc["coverage"] = table.coverage;
    Json entries = Json::array();
    for (const auto& e : table.entries) {
      entries.push_back({{"word", e.word}, {"probability", e.probability}});
    }
    doc["words"] = std::move(entries);
    em.json(std::move(doc));
    return;
  }

  RenewalEstimateOptions opts;
  opts.merge_resolution = cfg.merge_resolution;
  opts.target_coverage = cfg.target_coverage;
  const RenewalEstimate r = renewal_entropy_estimate(joint, cfg.r_max, opts);
  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    o << "d,k,eps,estimate_bits,coverage,base_probability,r_reached\n";
    o << cfg.d << ',' << cfg.k << ',' << num(cfg.eps) << ',' << num(r.estimate_bits) << ','
      << num(r.coverage) << ',' << num(r.base_probability) << ',' << r.r_reached << '\n';
    return;
  }
  Json in = base_inputs(cfg, source);
  in["eps"] = cfg.eps;
  in["r_max"] = cfg.r_max;
  in["merge_resolution"] = cfg.merge_resolution;
  in["target_coverage"] = cfg.target_coverage;
  Json doc = envelope(cfg, std::move(in));
  doc["result"]["estimate_bits"] = r.estimate_bits;
  doc["result"]["coverage"] = r.coverage;
  doc["result"]["base_probability"] = r.base_probability;
  doc["result"]["r_reached"] = r.r_reached;
  doc["result"]["peak_buckets"] = r.peak_buckets;
  em.json(std::move(doc));
}

void run_sample(const RunConfig& cfg, Emitter& em) {
  const SourceDist source = make_source(cfg.d, cfg.k, cfg.source);
  const JointChain joint = build_joint_chain(source, {cfg.eps});
  const std::vector<Letter> path = sample_path(joint.chain, cfg.n, cfg.seed);
  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    o << "t,letter\n";
    for (std::size_t t = 0; t < path.size(); ++t) o << t << ',' << path[t] << '\n';
    return;
  }
  Json in = base_inputs(cfg, source);
  in["eps"] = cfg.eps;
  in["n"] = cfg.n;
  in["seed"] = cfg.seed;
  Json doc = envelope(cfg, std::move(in));
  doc["letters"] = path;
  em.json(std::move(doc));
}

void run_compare(const RunConfig& cfg, Emitter& em) {
  const SourceDist source = make_source(cfg.d, cfg.k, cfg.source);
  const JointChain joint = build_joint_chain(source, {cfg.eps});

  struct Run {
    Strategy strategy;
    std::vector<TraceStep> steps;
    BoundsResult result;
  };
  std::vector<Run> runs{{Strategy::kGreedy, {}, {}}, {Strategy::kUniform, {}, {}}};
  for (Run& run : runs) {
    PartitionState partition = root_partition(joint.chain);
    run.steps.push_back({0, partition.cells(), partition.sum_h1(), partition.sum_h()});
    run.result = run_bounds(partition, run.strategy, cfg.stop, [&](const TraceStep& s) {
      if (s.step % cfg.trace_stride == 0) run.steps.push_back(s);
    });
    if (run.steps.back().step != run.result.refinements) {
      run.steps.push_back({run.result.refinements, partition.cells(), partition.sum_h1(),
                           partition.sum_h()});
    }
  }
  const std::size_t shared = std::min(runs[0].steps.back().cells, runs[1].steps.back().cells);
  auto gap_at = [shared](const Run& run) {
    double g = run.steps.front().upper - run.steps.front().lower;
    for (const auto& s : run.steps) {
      if (s.cells > shared) break;
      g = s.upper - s.lower;
    }
    return g;
  };

  if (cfg.format == Format::kCsv) {
    auto& o = em.csv();
    o << "strategy,step,cells,lower,upper,gap\n";
    for (const Run& run : runs) {
      for (const auto& s : run.steps) {
        o << to_string(run.strategy) << ',' << s.step << ',' << s.cells << ',' << num(s.lower)
          << ',' << num(s.upper) << ',' << num(s.upper - s.lower) << '\n';
      }
    }
    return;
  }
  Json in = base_inputs(cfg, source);
  in["eps"] = cfg.eps;
  in["stop"] = stop_json(cfg.stop);
  in["trace_stride"] = cfg.trace_stride;
  Json doc = envelope(cfg, std::move(in));
  doc["shared_cells"] = shared;
  for (const Run& run : runs) {
    Json r;
    r["final"] = interval_json(run.result.interval);
    r["gap_at_shared_cells"] = gap_at(run);
    r["trace_columns"] = {"cells", "gap"};
    Json t = Json::array();
    for (const auto& s : run.steps) t.push_back({s.cells, s.upper - s.lower});
    r["trace"] = std::move(t);
    doc[std::string(to_string(run.strategy))] = std::move(r);
  }
  em.json(std::move(doc));
}

}  // namespace

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostringstream buffer;
  try {
    Emitter em(config, buffer);
    switch (config.command) {
      case Command::kEntropy: run_entropy(config, em); break;
      case Command::kMiSweep: run_sweep(config, em); break;
      case Command::kCapacityLb: run_capacity(config, em); break;
      case Command::kForbidden: run_forbidden(config, em); break;
      case Command::kHtop: run_htop(config, em); break;
      case Command::kRenewal: run_renewal(config, em); break;
      case Command::kSample: run_sample(config, em); break;
      case Command::kCompareStrategies: run_compare(config, em); break;
    }
  } catch (const Error& e) {
    err << "bitshift " << command_name(config.command) << ": " << e.what() << '\n';
    return kExitCompute;
  } catch (const std::exception& e) {
    err << "bitshift " << command_name(config.command) << ": " << e.what() << '\n';
    return kExitCompute;
  }

  if (config.output.empty()) {
    out << buffer.str();
    out.flush();
    return kExitOk;
  }
  file.open(config.output, std::ios::binary);
  file << buffer.str();
  if (!file) {
    err << "bitshift: cannot write '" << config.output << "'\n";
    return kExitCompute;
  }
  return kExitOk;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "bitshift: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }
  return run(cfg, out, err);
}

}  // namespace bitshift::cli
