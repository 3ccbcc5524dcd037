#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fliprand/analysis.hpp"
#include "fliprand/distributions.hpp"
#include "fliprand/float_model.hpp"

namespace fliprand {

enum class SamplerKind { robust, baseline, baseline_log1p };

/// Sampler identifier as used in reports: "robust", "baseline:B" or
/// "baseline-log1p:B".
std::string sampler_id(SamplerKind kind, int bits);
/// Inverse of sampler_id; a bare "baseline" takes `default_bits`.
std::pair<SamplerKind, int> parse_sampler(const std::string& id, int default_bits = 32);

/// Width of the entropy stream that survives on one side of the median:
/// uneven for the robust sampler, B below the median for the log1p baseline,
/// and P wherever 1 - u has collapsed the variates onto the even grid.
int effective_bits(SamplerKind kind, Side side, int bits, int precision);

/// Largest dense histogram the audit will allocate (entries).
inline constexpr std::uint64_t kMaxHistogramEntries = std::uint64_t{1} << 26;

/// Counts of each float of the audited format within one octave's image.
///
/// The image is the real interval [lo, hi] that the octave maps onto; floats
/// are keyed by their (monotone) key so counts live in a dense array
/// starting at key_lo.
struct OctaveHistogram {
  int k = 0;
  Side side = Side::small;
  long double image_lo = 0.0L;
  long double image_hi = 0.0L;
  std::uint64_t key_lo = 0;
  std::vector<std::uint32_t> counts;
  std::uint64_t n = 0;
  std::uint64_t dropped = 0;  // draws whose float cannot occur in the image

  /// Empty histogram covering every float whose rounding interval meets the
  /// image. Throws if that range exceeds kMaxHistogramEntries.
  static OctaveHistogram covering(const FloatSpec& spec, int k, Side side, long double image_lo,
                                  long double image_hi);
  /// Counts one draw given its key; keys outside the range are dropped.
  void add_key(std::uint64_t key);
};

/// [Q(2^-(k+1)), Q(2^-k)] for Q1, or the mirrored interval for Q2.
std::pair<long double, long double> octave_image(const DistributionSpec& dist, int k, Side side);

/// F-mass of x's rounding interval, F(x_R) - F(x_L).
long double ideal_density(const PFloat& x, const DistributionSpec& dist, const FloatSpec& spec);

/// Zeroes counts of floats whose rounding interval misses the image (an
/// ulp of libm error at the octave edge) and moves them to `dropped`.
void drop_outside_image(OctaveHistogram& hist, const DistributionSpec& dist, const FloatSpec& spec);

/// Plug-in KL divergence in bits of the histogram from the ideal density
/// renormalized over the image. Throws std::domain_error if a counted float
/// has zero ideal mass or the histogram is empty.
double kl_divergence(const OctaveHistogram& hist, const DistributionSpec& dist,
                     const FloatSpec& spec);

struct AuditConfig {
  SamplerKind sampler = SamplerKind::robust;
  DistributionSpec dist = DistributionSpec::exponential(1.0);
  FloatSpec spec = FloatSpec::binary32();
  int bits = 32;  // B of the baseline samplers
  int k_min = 1;
  int k_max = 16;
  std::vector<Side> sides = {Side::small, Side::large};
  std::uint64_t n = 1'000'000;  // draws per octave and side
  std::string seed;
};

struct OctaveRecord {
  int k = 0;
  Side side = Side::small;
  std::uint64_t n = 0;
  double dkl_bits = 0.0;
  double predicted_bits = 0.0;

  friend bool operator==(const OctaveRecord&, const OctaveRecord&) = default;
};

struct AuditReport {
  std::string sampler;
  std::string dist;
  std::string precision;
  std::string seed;
  std::vector<OctaveRecord> records;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

/// Validates the configuration (octave range, distribution, feasibility).
void validate(const AuditConfig& config);

/// Draws `n` octave-conditioned variates for one octave and side.
OctaveHistogram sample_octave(const AuditConfig& config, int k, Side side);

/// Per-octave KL audit. Each (k, side) uses its own BitSource seeded from
/// the config seed, so runs are deterministic and octaves independent.
AuditReport run_audit(const AuditConfig& config);

/// Audit of unconditioned variates (for example a sample read from a file):
/// each value is binned into the octave of F(x) (below the median) or
/// 1 - F(x) (above it), and compared with the ideal density of the floats in
/// that bin.
AuditReport audit_values(std::span<const double> values, const DistributionSpec& dist,
                         const FloatSpec& spec, int k_min, int k_max, const std::string& sampler,
                         const std::string& seed);

void write_csv(std::ostream& out, const AuditReport& report);
AuditReport read_csv(std::istream& in);
void write_json(std::ostream& out, const AuditReport& report);
AuditReport read_json(std::istream& in);

}  // namespace fliprand
