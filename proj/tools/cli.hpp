#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bitshift/channel.hpp"
#include "bitshift/entropy_engine.hpp"

namespace bitshift::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCompute = 3;

enum class Command {
  kEntropy,
  kMiSweep,
  kCapacityLb,
  kForbidden,
  kHtop,
  kRenewal,
  kSample,
  kCompareStrategies,
};

enum class Format { kCsv, kJson };

struct RunConfig {
  Command command = Command::kEntropy;
  int d = 2;
  int k = 10;
  SourceSpec source = Uniform{};
  double eps = 0.0;
  std::vector<double> eps_grid;
  std::string eps_grid_text;
  Strategy strategy = Strategy::kGreedy;
  StopRule stop;
  std::uint64_t seed = 1;
  Format format = Format::kJson;
  std::string output;  // empty: stdout
  bool timestamp = true;
  bool trace = false;
  std::size_t trace_stride = 1;
  std::size_t max_len = 6;
  std::size_t n = 0;
  std::size_t r_max = 256;
  double merge_resolution = 1e-3;
  double target_coverage = 0.9995;
  bool list_words = false;
  std::size_t max_evaluations = 200;
  unsigned threads = 0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by parse_args for --help; what() is the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view command_name(Command command);

// args excludes the program name. Throws UsageError or HelpRequested.
RunConfig parse_args(std::span<const std::string> args);

// Emits the artifact to config.output (or out) and returns the exit code.
// Module errors are reported on err with exit code 3.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace bitshift::cli
