#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "fliprand/analysis.hpp"
#include "fliprand/audit.hpp"
#include "fliprand/bitstream.hpp"
#include "fliprand/distributions.hpp"
#include "fliprand/uniform.hpp"

namespace fliprand::cli {

namespace {

/// Bad flags or parameters; reported as a usage error (exit status 2).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

constexpr std::uint64_t kMinBenchIterations = 10'000'000;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Named parameter flags and the slot each fills, per distribution.
const std::map<std::string, std::map<std::string, int>>& parameter_slots() {
  static const std::map<std::string, std::map<std::string, int>> slots{
      {"exp", {{"lambda", 0}}},
      {"weibull", {{"shape", 0}, {"scale", 1}}},
      {"logistic", {{"loc", 0}, {"scale", 1}}},
      {"uniform", {{"low", 0}, {"high", 1}}},
      {"normal", {{"mu", 0}, {"sigma", 1}}},
      {"lognormal", {{"mu", 0}, {"sigma", 1}}},
      {"gamma", {{"shape", 0}, {"scale", 1}}},
  };
  return slots;
}

const std::map<std::string, std::array<double, 2>>& parameter_defaults() {
  static const std::map<std::string, std::array<double, 2>> defaults{
      {"exp", {1.0, 0.0}},    {"weibull", {1.0, 1.0}}, {"logistic", {0.0, 1.0}},
      {"uniform", {0.0, 1.0}}, {"normal", {0.0, 1.0}},  {"lognormal", {0.0, 1.0}},
      {"gamma", {1.0, 1.0}},
  };
  return defaults;
}

struct DistOptions {
  std::string dist = "exp";
  std::map<std::string, double> params;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--dist", dist,
                   "exp, weibull, logistic, uniform, normal, lognormal, gamma; or a full "
                   "label such as weibull:0.7:2")
        ->capture_default_str();
    for (const char* name : {"lambda", "shape", "scale", "loc", "low", "high", "mu", "sigma"}) {
      cmd.add_option_function<double>(
          std::string("--") + name, [this, name](double v) { params[name] = v; },
          std::string("distribution parameter ") + name);
    }
  }

  DistributionSpec resolve() const {
    if (dist.find(':') != std::string::npos) {
      if (!params.empty()) throw UsageError("give parameters either in --dist or as flags, not both");
      return DistributionSpec::parse(dist);
    }
    const std::string id = dist == "exponential" ? "exp" : dist;
    const auto slots = parameter_slots().find(id);
    if (slots == parameter_slots().end()) throw UsageError("unknown distribution '" + dist + "'");
    std::array<double, 2> p = parameter_defaults().at(id);
    for (const auto& [name, value] : params) {
      const auto slot = slots->second.find(name);
      if (slot == slots->second.end()) {
        throw UsageError("--" + name + " does not apply to " + id);
      }
      p[slot->second] = value;
    }
    std::string label = id + ":" + format_double(p[0]);
    if (slots->second.size() == 2) label += ":" + format_double(p[1]);
    return DistributionSpec::parse(label);
  }
};

std::pair<int, int> parse_octaves(const std::string& text) {
  const std::size_t sep = text.find_first_of(":-");
  const auto number = [&](std::string_view s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw UsageError("malformed octave range '" + text + "' (expected K or K1:K2)");
    }
    return v;
  };
  const std::string_view all(text);
  const int lo = number(all.substr(0, sep));
  const int hi = sep == std::string::npos ? lo : number(all.substr(sep + 1));
  if (lo < 1 || hi < lo) throw UsageError("octave range '" + text + "' must satisfy 1 <= K1 <= K2");
  return {lo, hi};
}

std::vector<Side> parse_sides(const std::string& text) {
  if (text == "both") return {Side::small, Side::large};
  if (text == "small") return {Side::small};
  if (text == "large") return {Side::large};
  throw UsageError("--side must be small, large or both");
}

// --seed, then FLIPRAND_SEED, then fresh entropy.
std::string effective_seed(const std::optional<std::string>& flag, std::ostream& err) {
  if (flag) return *flag;
  if (const char* env = std::getenv("FLIPRAND_SEED"); env != nullptr && *env != '\0') return env;
  const std::string seed = BitSource::from_entropy().seed();
  err << "seed: " << seed << '\n';
  return seed;
}

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& out,
                          bool binary = false) {
  if (path.empty() || path == "-") return out;
  file.open(path, binary ? std::ios::binary : std::ios::out);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  return file;
}

// --- sample -----------------------------------------------------------------

struct SampleOptions {
  DistOptions dist;
  std::string precision = "binary64";
  std::string sampler = "robust";
  std::uint64_t n = 1;
  std::optional<std::string> seed;
  bool binary = false;
  std::string output;
};

int cmd_sample(const SampleOptions& o, std::ostream& out, std::ostream& err) {
  const DistributionSpec dist = o.dist.resolve();
  const FloatSpec spec = FloatSpec::parse(o.precision);
  const auto parsed = parse_sampler(o.sampler, spec.precision() <= 32 ? 32 : 64);
  const SamplerKind kind = parsed.first;
  const int bits = parsed.second;
  if (kind != SamplerKind::robust && dist.kind() != DistKind::exponential) {
    throw UsageError("baseline samplers are exponential only");
  }
  if (kind != SamplerKind::robust && bits < spec.precision()) {
    throw UsageError("baseline B must be at least P = " + std::to_string(spec.precision()));
  }
  const std::string seed = effective_seed(o.seed, err);
  BitSource src = BitSource::from_seed(seed);

  std::ofstream file;
  std::ostream& sink = open_output(o.output, file, out, o.binary);
  std::ostringstream header;
  header << "# fliprand-sample v1 seed=" << seed << " sampler=" << sampler_id(kind, bits)
         << " dist=" << dist.label() << " precision=" << spec.name() << " n=" << o.n;
  if (o.binary) {
    err << header.str() << '\n';
  } else {
    sink << header.str() << '\n';
  }

  with_arith(spec, [&](const auto& a) {
    const double lambda = dist.params()[0];
    for (std::uint64_t i = 0; i < o.n; ++i) {
      const double x =
          kind == SamplerKind::robust
              ? a.to_double(sample(dist, src, a))
              : a.to_double(baseline_exponential(src, a, lambda, bits,
                                                 kind == SamplerKind::baseline_log1p));
      if (o.binary) {
        sink.write(reinterpret_cast<const char*>(&x), sizeof x);
      } else {
        sink << format_double(x) << '\n';
      }
    }
  });
  sink.flush();
  if (!sink) throw std::runtime_error("write failed");
  return 0;
}

// --- audit ------------------------------------------------------------------

struct AuditOptions {
  DistOptions dist;
  std::string precision = "binary32";
  std::string sampler = "robust";
  std::string octaves = "1:16";
  std::string side = "both";
  std::uint64_t n = 1'000'000;
  std::optional<std::string> seed;
  std::string format = "csv";
  std::string output;
  std::string input;
  CLI::App* cmd = nullptr;
};

// Key/value pairs from a "# fliprand-sample v1 ..." header line.
std::map<std::string, std::string> parse_sample_header(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream words(line);
  std::string w;
  while (words >> w) {
    const std::size_t eq = w.find('=');
    if (eq != std::string::npos) kv[w.substr(0, eq)] = w.substr(eq + 1);
  }
  return kv;
}

int cmd_audit(AuditOptions o, std::ostream& out, std::istream& in, std::ostream& err) {
  const auto [k_min, k_max] = parse_octaves(o.octaves);
  if (o.format != "csv" && o.format != "json") throw UsageError("--format must be csv or json");
  const auto given = [&](const char* flag) { return o.cmd->count(flag) > 0; };

  AuditReport report;
  if (!o.input.empty()) {
    std::ifstream file;
    if (o.input != "-") {
      file.open(o.input);
      if (!file) throw std::runtime_error("cannot read '" + o.input + "'");
    }
    std::istream& src = o.input == "-" ? in : file;
    std::vector<double> values;
    std::map<std::string, std::string> header;
    std::string line;
    while (std::getline(src, line)) {
      if (line.rfind("# fliprand-sample", 0) == 0) header = parse_sample_header(line);
      if (line.empty() || line[0] == '#') continue;
      double v = 0.0;
      const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
      if (res.ec != std::errc{} || res.ptr != line.data() + line.size()) {
        throw UsageError("malformed value '" + line + "' in input");
      }
      values.push_back(v);
    }
    // A sample header fills in whatever the flags leave unspecified.
    if (!given("--dist") && o.dist.params.empty() && header.count("dist")) o.dist.dist = header["dist"];
    if (!given("--precision") && header.count("precision")) o.precision = header["precision"];
    if (!given("--sampler") && header.count("sampler")) o.sampler = header["sampler"];
    if (!o.seed && header.count("seed")) o.seed = header["seed"];
    err << "auditing " << values.size() << " values\n";
    report = audit_values(values, o.dist.resolve(), FloatSpec::parse(o.precision), k_min, k_max,
                          o.sampler, o.seed.value_or("unknown"));
  } else {
    AuditConfig c;
    const FloatSpec spec = FloatSpec::parse(o.precision);
    std::tie(c.sampler, c.bits) = parse_sampler(o.sampler, 32);
    c.dist = o.dist.resolve();
    c.spec = spec;
    c.k_min = k_min;
    c.k_max = k_max;
    c.sides = parse_sides(o.side);
    c.n = o.n;
    c.seed = effective_seed(o.seed, err);
    validate(c);
    report.sampler = sampler_id(c.sampler, c.bits);
    report.dist = c.dist.label();
    report.precision = spec.name();
    report.seed = c.seed;
    for (int k = k_min; k <= k_max; ++k) {
      c.k_min = c.k_max = k;
      const AuditReport one = run_audit(c);
      for (const OctaveRecord& r : one.records) {
        err << "k=" << r.k << " " << to_string(r.side) << " dkl=" << format_double(r.dkl_bits)
            << " predicted=" << format_double(r.predicted_bits) << '\n';
      }
      report.records.insert(report.records.end(), one.records.begin(), one.records.end());
    }
  }

  std::ofstream file;
  std::ostream& sink = open_output(o.output, file, out);
  if (o.format == "json") {
    write_json(sink, report);
  } else {
    write_csv(sink, report);
  }
  sink.flush();
  if (!sink) throw std::runtime_error("write failed");
  return 0;
}

// --- entropy ----------------------------------------------------------------

struct EntropyOptions {
  DistOptions dist;
  std::string precision = "binary32";
  std::optional<std::string> octaves;
  std::string output;
};

int cmd_entropy(const EntropyOptions& o, std::ostream& out) {
  const FloatSpec spec = FloatSpec::parse(o.precision);
  const DistributionSpec dist = o.dist.resolve();
  const int p = spec.precision();
  const int big_k = spec.min_exponent_magnitude();
  const auto [k_min, k_max] = parse_octaves(o.octaves.value_or("1:" + std::to_string(std::min(16, p - 1))));
  if (k_max >= p) throw UsageError("octaves must stay below P = " + std::to_string(p));
  // Exact enumeration is offered where the float space is small enough.
  const bool exhaustive = p <= 12;

  std::ofstream file;
  std::ostream& sink = open_output(o.output, file, out);
  sink << "# fliprand-entropy v1 precision=" << spec.name() << " dist=" << dist.label() << '\n';
  sink << "mode,P,k,entropy_bits,predicted_loss_bits\n";
  const auto row = [&](const char* mode, int k, double h, double loss) {
    sink << mode << ',' << p << ',' << k << ',' << format_double(h) << ',' << format_double(loss)
         << '\n';
  };
  const auto loss = [&](int k, int bits) {
    return predicted_loss(k, bits, p, dist, Side::small).loss_bits;
  };

  row("even", 0, entropy_even(p), 0.0);
  row("uneven", 0, entropy_uneven(p, big_k), 0.0);
  for (int k = k_min; k <= k_max; ++k) {
    row("even", k, entropy_even_tail(p, k), loss(k, p));
    // Below 2^-k the uneven law is a scaled copy of itself over K - k binades.
    row("uneven", k, entropy_uneven(p, big_k - k), loss(k, kUnevenBits));
  }
  if (exhaustive) {
    row("even-exhaustive", 0, entropy_of_space(spec, UniformMode::even, p), 0.0);
    row("uneven-exhaustive", 0, entropy_of_space(spec, UniformMode::uneven_unit, 0), 0.0);
    for (int k = k_min; k <= k_max; ++k) {
      row("even-exhaustive", k, entropy_of_space(spec, UniformMode::even, p, k), loss(k, p));
      row("uneven-exhaustive", k, entropy_of_space(spec, UniformMode::uneven_unit, 0, k),
          loss(k, kUnevenBits));
    }
  }
  sink.flush();
  if (!sink) throw std::runtime_error("write failed");
  return 0;
}

// --- bench ------------------------------------------------------------------

struct BenchOptions {
  std::string precision = "binary64";
  std::optional<int> bits;
  std::uint64_t n = kMinBenchIterations;
  std::optional<std::string> seed;
};

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  const FloatSpec spec = FloatSpec::parse(o.precision);
  if (o.n < kMinBenchIterations) throw UsageError("bench needs at least 10^7 iterations");
  const int bits = o.bits.value_or(spec.precision() <= 32 ? 32 : spec.precision());
  const std::string seed = effective_seed(o.seed, err);
  const BenchResult r = bench(spec, bits, o.n, seed);
  out << "# fliprand-bench v1\n"
      << "# cpu: " << r.cpu << '\n'
      << "# iterations: " << r.iterations << '\n'
      << "# precision: " << spec.name() << " B=" << bits << '\n'
      << "kernel,ns_per_variate\n";
  for (const BenchRow& row : r.rows) {
    out << row.kernel << ',' << std::fixed << std::setprecision(3) << row.ns_per_variate << '\n';
  }
  out << "# robust/baseline throughput: " << std::setprecision(3)
      << r.ns("baseline_exponential") / r.ns("robust_exponential") << '\n'
      << "# uneven/canonical cost: " << r.ns("draw_uneven_half") / r.ns("draw_canonical") << '\n';
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::istream& in) {
  CLI::App app{"Floating-point random variates with full precision in both tails", "fliprand"};
  app.require_subcommand(1);

  SampleOptions sample_o;
  auto* sample = app.add_subcommand("sample", "emit variates, one per line");
  sample_o.dist.add_to(*sample);
  sample->add_option("--precision", sample_o.precision, "binary32, binary64 or emulated:P")
      ->capture_default_str();
  sample->add_option("--sampler", sample_o.sampler, "robust, baseline[:B] or baseline-log1p[:B]")
      ->capture_default_str();
  sample->add_option("-n,--n", sample_o.n, "number of variates")->capture_default_str();
  sample->add_option("--seed", sample_o.seed, "seed string (default: $FLIPRAND_SEED, else entropy)");
  sample->add_flag("--binary", sample_o.binary, "write raw native doubles; header goes to stderr");
  sample->add_option("-o,--output", sample_o.output, "output file (default stdout)");

  AuditOptions audit_o;
  auto* audit = app.add_subcommand("audit", "per-octave KL divergence against the ideal density");
  audit_o.cmd = audit;
  audit_o.dist.add_to(*audit);
  audit->add_option("--precision", audit_o.precision, "binary32 or emulated:P")->capture_default_str();
  audit->add_option("--sampler", audit_o.sampler, "robust, baseline[:B] or baseline-log1p[:B]")
      ->capture_default_str();
  audit->add_option("--octaves", audit_o.octaves, "octave range K1:K2")->capture_default_str();
  audit->add_option("--side", audit_o.side, "small, large or both")->capture_default_str();
  audit->add_option("-n,--n", audit_o.n, "draws per octave and side")->capture_default_str();
  audit->add_option("--seed", audit_o.seed, "seed string (default: $FLIPRAND_SEED, else entropy)");
  audit->add_option("--format", audit_o.format, "csv or json")->capture_default_str();
  audit->add_option("-o,--output", audit_o.output, "output file (default stdout)");
  audit->add_option("-i,--input", audit_o.input,
                    "audit values from a file ('-' for stdin) instead of sampling");

  EntropyOptions entropy_o;
  auto* entropy = app.add_subcommand("entropy", "entropy and predicted-loss table");
  entropy_o.dist.add_to(*entropy);
  entropy->add_option("--precision", entropy_o.precision, "binary32, binary64 or emulated:P")
      ->capture_default_str();
  entropy->add_option("--octaves", entropy_o.octaves, "octave range K1:K2 (default 1:min(16, P-1))");
  entropy->add_option("-o,--output", entropy_o.output, "output file (default stdout)");

  BenchOptions bench_o;
  auto* bench_cmd = app.add_subcommand("bench", "ns per variate for the core kernels");
  bench_cmd->add_option("--precision", bench_o.precision, "binary32, binary64 or emulated:P")
      ->capture_default_str();
  bench_cmd->add_option("--bits", bench_o.bits, "canonical draw width B");
  bench_cmd->add_option("-n,--n", bench_o.n, "timed iterations per kernel (at least 10^7)")
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench_o.seed, "seed string");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sample) return cmd_sample(sample_o, out, err);
    if (*audit) return cmd_audit(audit_o, out, in, err);
    if (*entropy) return cmd_entropy(entropy_o, out);
    if (*bench_cmd) return cmd_bench(bench_o, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::length_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "fliprand: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fliprand::cli
