#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fliprand/float_model.hpp"

namespace fliprand::cli {

/// Runs the command line `args` (program name excluded). Data goes to `out`,
/// diagnostics to `err`; `in` backs `--input -`. Returns the exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::istream& in);

struct BenchRow {
  std::string kernel;
  double ns_per_variate;
};

struct BenchResult {
  std::string cpu;
  std::uint64_t iterations;
  std::vector<BenchRow> rows;

  double ns(const std::string& kernel) const;
};

/// Times draw_canonical, draw_uneven_half, the robust exponential and the
/// -log(1 - u) baseline, each after a warm-up pass of iterations / 10.
BenchResult bench(const FloatSpec& spec, int bits, std::uint64_t iterations,
                  const std::string& seed);

/// CPU model string from /proc/cpuinfo, or "unknown".
std::string cpu_model();

}  // namespace fliprand::cli
