#include "fliprand/audit.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fliprand/arith.hpp"
#include "fliprand/uniform.hpp"

namespace fliprand {

namespace {

constexpr std::uint64_t kNoKey = ~std::uint64_t{0};

// Increments scattered over a multi-megabyte count array miss cache on
// nearly every draw. Staging keys and distributing them by their high bits
// first keeps each burst of increments inside one cache-sized slice.
class StagedCounter {
 public:
  explicit StagedCounter(OctaveHistogram& hist) : hist_(hist) {
    const std::uint64_t size = hist.counts.size();
    shift_ = 0;
    while ((size >> shift_) > kBuckets) ++shift_;
    stage_.reserve(kStage);
    sorted_.resize(kStage);
  }
  ~StagedCounter() { flush(); }

  void add(std::uint64_t key) {
    const std::uint64_t offset = key - hist_.key_lo;  // wraps for keys below the range
    if (offset >= hist_.counts.size()) {
      ++hist_.dropped;
      return;
    }
    ++hist_.n;
    stage_.push_back(static_cast<std::uint32_t>(offset));
    if (stage_.size() == kStage) flush();
  }

  void flush() {
    std::array<std::uint32_t, kBuckets + 1> start{};
    for (const std::uint32_t off : stage_) ++start[(off >> shift_) + 1];
    for (std::size_t b = 1; b <= kBuckets; ++b) start[b] += start[b - 1];
    for (const std::uint32_t off : stage_) sorted_[start[off >> shift_]++] = off;
    std::uint32_t* counts = hist_.counts.data();
    for (std::size_t i = 0; i < stage_.size(); ++i) ++counts[sorted_[i]];
    stage_.clear();
  }

 private:
  static constexpr std::size_t kBuckets = 256;
  static constexpr std::size_t kStage = std::size_t{1} << 20;

  OctaveHistogram& hist_;
  int shift_;
  std::vector<std::uint32_t> stage_;
  std::vector<std::uint32_t> sorted_;
};

template <class A>
std::uint64_t key_of(const A& a, const FloatSpec& spec, typename A::value_type x) {
  using T = typename A::value_type;
  if (!(x >= T(0)) || !std::isfinite(x)) return kNoKey;
  if constexpr (std::is_same_v<A, NativeArith<float>>) {
    return std::bit_cast<std::uint32_t>(x + 0.0f);  // + 0 folds -0 into +0
  } else if constexpr (std::is_same_v<A, NativeArith<double>>) {
    return std::bit_cast<std::uint64_t>(x + 0.0);
  } else {
    return spec.key(spec.round(a.to_double(x)));
  }
}

PFloat float_at_or_below(const FloatSpec& spec, long double v) {
  PFloat x = spec.round(static_cast<double>(v));
  while (!x.is_zero() && x.to_dyadic().value() > v) x = spec.predecessor(x);
  return x;
}

std::string side_seed(const std::string& seed, int k, Side side) {
  return seed + "/k=" + std::to_string(k) + "/" + to_string(side);
}

Side parse_side(const std::string& s) {
  if (s == "small") return Side::small;
  if (s == "large") return Side::large;
  throw std::invalid_argument("unknown side '" + s + "'");
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(const std::string& text, const char* what) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument(std::string("malformed ") + what + " '" + text + "'");
  }
  return v;
}

bool audit_supports(const DistributionSpec& dist) {
  switch (dist.kind()) {
    case DistKind::exponential:
    case DistKind::weibull:
      return true;
    case DistKind::uniform:
      return dist.params()[0] >= 0.0;
    default:
      return false;
  }
}

long double overlap_mass(const DistributionSpec& dist, const RoundingInterval& iv, long double lo,
                         long double hi) {
  const long double a = std::max(iv.lower.value(), lo);
  const long double b = std::min(iv.upper.value(), hi);
  return b > a ? dist.interval_mass_fast(a, b) : 0.0L;
}

}  // namespace

std::string sampler_id(SamplerKind kind, int bits) {
  switch (kind) {
    case SamplerKind::robust:
      return "robust";
    case SamplerKind::baseline:
      return "baseline:" + std::to_string(bits);
    case SamplerKind::baseline_log1p:
      return "baseline-log1p:" + std::to_string(bits);
  }
  return "unknown";
}

std::pair<SamplerKind, int> parse_sampler(const std::string& id, int default_bits) {
  const std::size_t colon = id.find(':');
  const std::string name = id.substr(0, colon);
  int bits = default_bits;
  if (colon != std::string::npos) bits = parse_number<int>(id.substr(colon + 1), "sampler bits");
  if (name == "robust" && colon == std::string::npos) return {SamplerKind::robust, bits};
  if (name == "baseline") return {SamplerKind::baseline, bits};
  if (name == "baseline-log1p") return {SamplerKind::baseline_log1p, bits};
  throw std::invalid_argument("unknown sampler '" + id +
                              "' (expected robust, baseline[:B] or baseline-log1p[:B])");
}

int effective_bits(SamplerKind kind, Side side, int bits, int precision) {
  switch (kind) {
    case SamplerKind::robust:
      return kUnevenBits;
    case SamplerKind::baseline:
      return precision;
    case SamplerKind::baseline_log1p:
      return side == Side::small ? bits : precision;
  }
  return precision;
}

OctaveHistogram OctaveHistogram::covering(const FloatSpec& spec, int k, Side side,
                                          long double image_lo, long double image_hi) {
  if (!(image_lo >= 0.0L) || !(image_hi >= image_lo)) {
    throw std::domain_error("OctaveHistogram: image must be a non-negative interval");
  }
  // One float of slack on each side keeps edge draws visible to
  // drop_outside_image instead of silently out of range.
  PFloat first = float_at_or_below(spec, image_lo);
  if (!first.is_zero()) first = spec.predecessor(first);
  PFloat last = float_at_or_below(spec, image_hi);
  last = spec.successor(spec.successor(last));
  const std::uint64_t key_lo = spec.key(first);
  const std::uint64_t size = spec.key(last) - key_lo + 1;
  if (size > kMaxHistogramEntries) {
    throw std::length_error("octave " + std::to_string(k) + " spans " + std::to_string(size) +
                            " floats at " + spec.name() +
                            "; the audit is infeasible at this precision");
  }
  OctaveHistogram h;
  h.k = k;
  h.side = side;
  h.image_lo = image_lo;
  h.image_hi = image_hi;
  h.key_lo = key_lo;
  h.counts.assign(size, 0);
  return h;
}

void OctaveHistogram::add_key(std::uint64_t key) {
  const std::uint64_t offset = key - key_lo;
  if (offset >= counts.size()) {
    ++dropped;
    return;
  }
  ++counts[offset];
  ++n;
}

std::pair<long double, long double> octave_image(const DistributionSpec& dist, int k, Side side) {
  if (k < 1) throw std::domain_error("octave_image: k must be at least 1");
  const long double lo = std::ldexp(1.0L, -(k + 1));
  const long double hi = std::ldexp(1.0L, -k);
  if (side == Side::small) return {dist.quantile(Branch::q1, lo), dist.quantile(Branch::q1, hi)};
  return {dist.quantile(Branch::q2, hi), dist.quantile(Branch::q2, lo)};
}

long double ideal_density(const PFloat& x, const DistributionSpec& dist, const FloatSpec& spec) {
  const RoundingInterval iv = spec.rounding_interval(x);
  return dist.interval_mass(iv.lower.value(), iv.upper.value());
}

void drop_outside_image(OctaveHistogram& hist, const DistributionSpec& dist, const FloatSpec& spec) {
  const auto [support_lo, support_hi] = dist.support();
  const long double lo = std::max<long double>(hist.image_lo, support_lo);
  const long double hi = std::min<long double>(hist.image_hi, support_hi);
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    if (hist.counts[i] == 0) continue;
    const PFloat x = spec.from_key(hist.key_lo + i);
    const long double v = x.to_dyadic().value();
    // A float inside a non-degenerate image always overlaps it.
    if (v >= lo && v <= hi && hi > lo) continue;
    const RoundingInterval iv = spec.rounding_interval(x);
    if (std::min(iv.upper.value(), hi) > std::max(iv.lower.value(), lo)) continue;
    hist.dropped += hist.counts[i];
    hist.n -= hist.counts[i];
    hist.counts[i] = 0;
  }
}

double kl_divergence(const OctaveHistogram& hist, const DistributionSpec& dist,
                     const FloatSpec& spec) {
  if (hist.n == 0) throw std::domain_error("kl_divergence: empty histogram");
  const long double image_mass = dist.interval_mass(hist.image_lo, hist.image_hi);
  if (!(image_mass > 0.0L)) throw std::domain_error("kl_divergence: image has no mass");
  const long double n = static_cast<long double>(hist.n);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    if (hist.counts[i] == 0) continue;
    const PFloat x = spec.from_key(hist.key_lo + i);
    const long double mass =
        overlap_mass(dist, spec.rounding_interval(x), hist.image_lo, hist.image_hi);
    if (!(mass > 0.0L)) {
      throw std::domain_error("kl_divergence: observed float " + std::to_string(x.to_double()) +
                              " has zero ideal probability");
    }
    const long double p = hist.counts[i] / n;
    sum += p * std::log2(static_cast<double>(p * image_mass / mass));
  }
  return std::max(0.0, static_cast<double>(sum));
}

void validate(const AuditConfig& c) {
  if (c.k_min < 1 || c.k_max < c.k_min) {
    throw std::invalid_argument("audit: octave range must satisfy 1 <= k_min <= k_max");
  }
  if (c.n < 10'000) throw std::invalid_argument("audit: need at least 10^4 draws per octave");
  if (c.seed.empty()) throw std::invalid_argument("audit: seed must be non-empty");
  if (c.sides.empty()) throw std::invalid_argument("audit: no sides selected");
  if (!audit_supports(c.dist)) {
    throw std::invalid_argument("audit: " + c.dist.name() +
                                " is not auditable (needs a quantile pair on a non-negative support)");
  }
  const int p = c.spec.precision();
  if (c.k_max > c.spec.min_exponent_magnitude() - p) {
    throw std::invalid_argument("audit: octave " + std::to_string(c.k_max) +
                                " reaches the subnormal range of " + c.spec.name());
  }
  if (c.sampler != SamplerKind::robust) {
    if (c.dist.kind() != DistKind::exponential) {
      throw std::invalid_argument("audit: baseline samplers are exponential only");
    }
    if (c.bits < p || c.bits > 64) {
      throw std::invalid_argument("audit: baseline B must lie in [P, 64]");
    }
    if (c.k_max >= c.bits) {
      throw std::invalid_argument("audit: octave " + std::to_string(c.k_max) +
                                  " is deeper than the B-bit grid of the baseline");
    }
  }
}

OctaveHistogram sample_octave(const AuditConfig& c, int k, Side side) {
  validate(c);
  const auto [lo, hi] = octave_image(c.dist, k, side);
  OctaveHistogram hist = OctaveHistogram::covering(c.spec, k, side, lo, hi);
  BitSource src = BitSource::from_seed(side_seed(c.seed, k, side));
  const Branch branch = side == Side::small ? Branch::q1 : Branch::q2;
  {
    StagedCounter counter(hist);
    with_arith(c.spec, [&](const auto& a) {
      using T = typename std::decay_t<decltype(a)>::value_type;
      if (c.sampler == SamplerKind::robust) {
        for (std::uint64_t i = 0; i < c.n; ++i) {
          const T u = draw_uneven_octave(src, a, k);
          counter.add(key_of(a, c.spec, c.dist.quantile(a, branch, u)));
        }
      } else {
        const bool use_log1p = c.sampler == SamplerKind::baseline_log1p;
        const T one = a.round(1.0);
        const T scale = a.round(1.0 / c.dist.params()[0]);
        for (std::uint64_t i = 0; i < c.n; ++i) {
          const T u = draw_canonical_octave(src, a, c.bits, k, side);
          const T l = use_log1p ? a.log1p(-u) : a.log(a.sub(one, u));
          counter.add(key_of(a, c.spec, a.mul(a.sub(T(0), l), scale)));
        }
      }
    });
  }
  drop_outside_image(hist, c.dist, c.spec);
  return hist;
}

AuditReport run_audit(const AuditConfig& c) {
  validate(c);
  AuditReport report;
  report.sampler = sampler_id(c.sampler, c.bits);
  report.dist = c.dist.label();
  report.precision = c.spec.name();
  report.seed = c.seed;
  for (int k = c.k_min; k <= c.k_max; ++k) {
    for (const Side side : c.sides) {
      const OctaveHistogram hist = sample_octave(c, k, side);
      OctaveRecord r;
      r.k = k;
      r.side = side;
      r.n = hist.n;
      r.dkl_bits = kl_divergence(hist, c.dist, c.spec);
      r.predicted_bits =
          predicted_loss(k, effective_bits(c.sampler, side, c.bits, c.spec.precision()),
                         c.spec.precision(), c.dist, side)
              .loss_bits;
      report.records.push_back(r);
    }
  }
  return report;
}

AuditReport audit_values(std::span<const double> values, const DistributionSpec& dist,
                         const FloatSpec& spec, int k_min, int k_max, const std::string& sampler,
                         const std::string& seed) {
  if (!audit_supports(dist)) {
    throw std::invalid_argument("audit: " + dist.name() + " is not auditable");
  }
  if (k_min < 1 || k_max < k_min) {
    throw std::invalid_argument("audit: octave range must satisfy 1 <= k_min <= k_max");
  }
  const auto [kind, bits] = parse_sampler(sampler);
  std::vector<std::uint64_t> keys;
  keys.reserve(values.size());
  for (const double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("audit: value " + format_double(v) + " outside the support");
    }
    if (!spec.representable(v)) {
      throw std::invalid_argument("audit: value " + format_double(v) + " is not a " +
                                  spec.name() + " float");
    }
    keys.push_back(spec.key(spec.round(v)));
  }

  AuditReport report;
  report.sampler = sampler;
  report.dist = dist.label();
  report.precision = spec.name();
  report.seed = seed;
  const long double median = dist.median();
  for (int k = k_min; k <= k_max; ++k) {
    const long double lo = std::ldexp(1.0L, -(k + 1));
    const long double hi = std::ldexp(1.0L, -k);
    for (const Side side : {Side::small, Side::large}) {
      // Floats whose F (or 1 - F) value falls in [2^-(k+1), 2^-k) form a
      // contiguous run; their rounding intervals tile the bin's image.
      const auto in_bin = [&](const PFloat& x) {
        const long double v = x.to_dyadic().value();
        const long double t = side == Side::small ? (v <= median ? dist.cdf(v) : 1.0L)
                                                  : (v >= median ? dist.ccdf(v) : 1.0L);
        return t >= lo && t < hi;
      };
      const auto [img_lo, img_hi] = octave_image(dist, k, side);
      PFloat first = float_at_or_below(spec, img_lo);
      while (!in_bin(first)) first = spec.successor(first);
      while (!first.is_zero() && in_bin(spec.predecessor(first))) first = spec.predecessor(first);
      PFloat last = first;
      while (in_bin(spec.successor(last))) last = spec.successor(last);
      const auto first_iv = spec.rounding_interval(first);
      const auto last_iv = spec.rounding_interval(last);
      OctaveHistogram hist = OctaveHistogram::covering(
          spec, k, side, std::max(0.0L, first_iv.lower.value()), last_iv.upper.value());
      const std::uint64_t key_first = spec.key(first);
      const std::uint64_t key_last = spec.key(last);
      for (const std::uint64_t key : keys) {
        if (key >= key_first && key <= key_last) hist.add_key(key);
      }
      hist.dropped = 0;
      OctaveRecord r;
      r.k = k;
      r.side = side;
      r.n = hist.n;
      r.dkl_bits = hist.n == 0 ? 0.0 : kl_divergence(hist, dist, spec);
      r.predicted_bits = predicted_loss(k, effective_bits(kind, side, bits, spec.precision()),
                                        spec.precision(), dist, side)
                             .loss_bits;
      report.records.push_back(r);
    }
  }
  return report;
}

// --- Serialization ----------------------------------------------------------

namespace {

constexpr std::string_view kCsvTag = "# fliprand-audit-csv v1";
constexpr std::string_view kCsvHeader = "sampler,dist,precision,k,side,N,dkl_bits,predicted_bits,seed";
constexpr std::string_view kJsonSchema = "fliprand-audit";
constexpr int kJsonVersion = 1;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw std::invalid_argument("audit CSV: unterminated quote");
  return fields;
}

}  // namespace

void write_csv(std::ostream& out, const AuditReport& report) {
  out << kCsvTag << '\n' << kCsvHeader << '\n';
  for (const OctaveRecord& r : report.records) {
    out << csv_field(report.sampler) << ',' << csv_field(report.dist) << ','
        << csv_field(report.precision) << ',' << r.k << ',' << to_string(r.side) << ',' << r.n
        << ',' << format_double(r.dkl_bits) << ',' << format_double(r.predicted_bits) << ','
        << csv_field(report.seed) << '\n';
  }
}

AuditReport read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvTag) {
    throw std::invalid_argument("audit CSV: missing version line");
  }
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("audit CSV: unexpected header");
  }
  AuditReport report;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::invalid_argument("audit CSV: expected 9 fields");
    if (first) {
      report.sampler = f[0];
      report.dist = f[1];
      report.precision = f[2];
      report.seed = f[8];
      first = false;
    } else if (f[0] != report.sampler || f[1] != report.dist || f[2] != report.precision ||
               f[8] != report.seed) {
      throw std::invalid_argument("audit CSV: rows from different runs");
    }
    OctaveRecord r;
    r.k = parse_number<int>(f[3], "k");
    r.side = parse_side(f[4]);
    r.n = parse_number<std::uint64_t>(f[5], "N");
    r.dkl_bits = parse_number<double>(f[6], "dkl_bits");
    r.predicted_bits = parse_number<double>(f[7], "predicted_bits");
    report.records.push_back(r);
  }
  return report;
}

void write_json(std::ostream& out, const AuditReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = kJsonSchema;
  j["version"] = kJsonVersion;
  j["sampler"] = report.sampler;
  j["dist"] = report.dist;
  j["precision"] = report.precision;
  j["seed"] = report.seed;
  j["records"] = nlohmann::ordered_json::array();
  for (const OctaveRecord& r : report.records) {
    j["records"].push_back({{"k", r.k},
                            {"side", to_string(r.side)},
                            {"N", r.n},
                            {"dkl_bits", r.dkl_bits},
                            {"predicted_bits", r.predicted_bits}});
  }
  out << j.dump(2) << '\n';
}

AuditReport read_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("schema") != kJsonSchema || j.at("version") != kJsonVersion) {
      throw std::invalid_argument("audit JSON: unsupported schema");
    }
    AuditReport report;
    report.sampler = j.at("sampler").get<std::string>();
    report.dist = j.at("dist").get<std::string>();
    report.precision = j.at("precision").get<std::string>();
    report.seed = j.at("seed").get<std::string>();
    for (const auto& e : j.at("records")) {
      OctaveRecord r;
      r.k = e.at("k").get<int>();
      r.side = parse_side(e.at("side").get<std::string>());
      r.n = e.at("N").get<std::uint64_t>();
      r.dkl_bits = e.at("dkl_bits").get<double>();
      r.predicted_bits = e.at("predicted_bits").get<double>();
      report.records.push_back(r);
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("audit JSON: ") + e.what());
  }
}

}  // namespace fliprand
