#include <chrono>
#include <fstream>
#include <stdexcept>

#include "cli.hpp"
#include "fliprand/arith.hpp"
#include "fliprand/bitstream.hpp"
#include "fliprand/distributions.hpp"
#include "fliprand/uniform.hpp"

namespace fliprand::cli {

namespace {

// Keeps the optimizer from discarding the timed loops.
volatile double g_sink;

template <class Kernel>
double time_kernel(std::uint64_t iterations, Kernel&& kernel) {
  double acc = 0.0;
  for (std::uint64_t i = 0; i < iterations / 10; ++i) acc += kernel();
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t i = 0; i < iterations; ++i) acc += kernel();
  const auto t1 = std::chrono::steady_clock::now();
  g_sink = acc;
  return std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(iterations);
}

}  // namespace

double BenchResult::ns(const std::string& kernel) const {
  for (const BenchRow& r : rows) {
    if (r.kernel == kernel) return r.ns_per_variate;
  }
  throw std::out_of_range("no bench row '" + kernel + "'");
}

std::string cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) != 0) continue;
    const std::size_t colon = line.find(':');
    if (colon == std::string::npos) break;
    const std::size_t start = line.find_first_not_of(' ', colon + 1);
    return start == std::string::npos ? "unknown" : line.substr(start);
  }
  return "unknown";
}

BenchResult bench(const FloatSpec& spec, int bits, std::uint64_t iterations,
                  const std::string& seed) {
  if (iterations == 0) throw std::invalid_argument("bench: iterations must be positive");
  if (bits < spec.precision() || bits > 64) {
    throw std::invalid_argument("bench: B must lie in [P, 64]");
  }
  BenchResult result{cpu_model(), iterations, {}};
  const auto exp1 = DistributionSpec::exponential(1.0);
  with_arith(spec, [&](const auto& a) {
    const auto widen = [&](auto v) { return static_cast<double>(a.to_double(v)); };
    BitSource src = BitSource::from_seed(seed);
    result.rows.push_back(
        {"draw_canonical", time_kernel(iterations, [&] { return widen(draw_canonical(src, a, bits)); })});
    result.rows.push_back(
        {"draw_uneven_half", time_kernel(iterations, [&] { return widen(draw_uneven_half(src, a)); })});
    result.rows.push_back({"robust_exponential", time_kernel(iterations, [&] {
                             return widen(sample_flip_flop(exp1, src, a));
                           })});
    result.rows.push_back({"baseline_exponential", time_kernel(iterations, [&] {
                             return widen(baseline_exponential(src, a, 1.0, bits, false));
                           })});
  });
  return result;
}

}  // namespace fliprand::cli
