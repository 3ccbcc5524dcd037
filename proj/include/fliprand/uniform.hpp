#pragma once

#include <bit>
#include <concepts>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fliprand/arith.hpp"
#include "fliprand/bitstream.hpp"
#include "fliprand/float_model.hpp"

namespace fliprand {

enum class UniformMode {
  even,         // canonical draw with B = P
  partial,      // canonical draw with B > P
  uneven_half,  // uneven variates on (0, 1/2]
  uneven_unit,  // uneven variates on (0, 1)
};

/// Anything that serves raw words and k-bit draws like BitSource.
template <class S>
concept BitSupplier = requires(S& s, int k) {
  { s.next_word() } -> std::convertible_to<std::uint64_t>;
  { s.next_bits(k) } -> std::convertible_to<std::uint64_t>;
};

/// Integer state of an uneven draw before rounding: u = j / 2^n.
struct UnevenDraw {
  std::uint64_t j = 0;
  int n = 0;
  bool topped_up = false;  // took the rare entropy top-up branch
};

/// The integer part of the uneven generator: scan words for the first set
/// bit, guarantee at least precision + 2 significant bits (topping up the
/// vacated low bits with fresh entropy), then force j odd so that rounding
/// never meets an exact tie. `n0` = 1 yields (0, 1/2], `n0` = 0 yields (0, 1).
template <BitSupplier Source>
UnevenDraw uneven_integer(Source& src, int precision, int n0 = 1,
                                 int word_bits = BitSource::kWordBits) {
  UnevenDraw d;
  d.n = n0;
  do {
    d.j = word_bits == BitSource::kWordBits ? std::uint64_t{src.next_word()}
                                            : std::uint64_t{src.next_bits(word_bits)};
    d.n += word_bits;
  } while (d.j == 0);

  const int significant = std::bit_width(d.j);
  if (significant < precision + 2) {
    const int hole = precision + 2 - significant;
    d.j = (d.j << hole) | src.next_bits(hole);
    d.n += hole;
    d.topped_up = true;
  }
  d.j |= 1;
  return d;
}

/// Uneven uniform variate on (0, 1/2]. Pr(u) is proportional to the part of
/// u's rounding interval inside (0, 1/2], so u = 1/2 is half as likely as its
/// lower neighbour.
template <BitSupplier Source, Arithmetic A>
typename A::value_type draw_uneven_half(Source& src, const A& arith) {
  const UnevenDraw d = uneven_integer(src, arith.spec().precision(), 1);
  return arith.from_ratio(d.j, d.n);
}

/// Uneven uniform variate on (0, 1); draws that round to 1 are redrawn.
template <BitSupplier Source, Arithmetic A>
typename A::value_type draw_uneven_unit(Source& src, const A& arith) {
  const int precision = arith.spec().precision();
  for (;;) {
    const UnevenDraw d = uneven_integer(src, precision, 0);
    const auto u = arith.from_ratio(d.j, d.n);
    if (u < 1) return u;
  }
}

/// Canonical draw: j uniform on [0, 2^B), rounded to the format, rejected
/// when it rounds up to 2^B, then scaled into [0, 1).
template <BitSupplier Source, Arithmetic A>
typename A::value_type draw_canonical(Source& src, const A& arith, int bits) {
  if (bits < 1 || bits > BitSource::kWordBits) {
    throw std::invalid_argument("draw_canonical: B must lie in [1, 64]");
  }
  for (;;) {
    const std::uint64_t j = bits == BitSource::kWordBits ? src.next_word() : src.next_bits(bits);
    const auto a = arith.from_ratio(j, bits);
    if (a < 1) return a;
  }
}

PFloat draw_uneven_half(BitSource& src, const FloatSpec& spec);
PFloat draw_uneven_unit(BitSource& src, const FloatSpec& spec);
PFloat draw_canonical(BitSource& src, const FloatSpec& spec, int bits);

// --- Octave-conditioned draws -------------------------------------------
//
// Octave k >= 1 is the folded uniform v in [2^-(k+1), 2^-k). These draw a
// variate already conditioned on its octave instead of rejecting, so deep
// octaves cost the same as shallow ones.

/// Uneven draw with the first set bit of the stream pinned at position k.
/// Result (after rounding) lies in [2^-(k+1), 2^-k].
template <BitSupplier Source, Arithmetic A>
typename A::value_type draw_uneven_octave(Source& src, const A& arith, int k) {
  const int precision = arith.spec().precision();
  const std::uint64_t lead = std::uint64_t{1} << (precision + 1);
  const std::uint64_t j = (lead | src.next_bits(precision + 1)) | 1;
  return arith.from_ratio(j, k + precision + 2);
}

enum class Side { small, large };

/// Canonical draw conditioned on u in [2^-(k+1), 2^-k) (small side) or on
/// 1 - u in (2^-(k+1), 2^-k] (large side). Requires k < B.
template <BitSupplier Source, Arithmetic A>
typename A::value_type draw_canonical_octave(Source& src, const A& arith, int bits, int k,
                                             Side side) {
  if (bits < 1 || bits > BitSource::kWordBits) {
    throw std::invalid_argument("draw_canonical_octave: B must lie in [1, 64]");
  }
  if (k < 1 || k >= bits) {
    throw std::invalid_argument("draw_canonical_octave: octave deeper than the B-bit grid");
  }
  const int free_bits = bits - k - 1;
  const std::uint64_t base = side == Side::small
                                 ? std::uint64_t{1} << free_bits
                                 // 2^B - 2^(B-k), wrapping correctly at B = 64
                                 : (~std::uint64_t{0} << (bits - k)) &
                                       (bits == 64 ? ~std::uint64_t{0}
                                                   : (std::uint64_t{1} << bits) - 1);
  for (;;) {
    const std::uint64_t j = base + (free_bits == 0 ? 0 : src.next_bits(free_bits));
    const auto a = arith.from_ratio(j, bits);
    if (a < 1) return a;
  }
}

// --- Exact output distributions ------------------------------------------

struct FloatProbability {
  PFloat value;
  long double probability;
};

/// Exact output distribution of a generator at small precision. Canonical
/// modes enumerate every B-bit integer (B <= 24); uneven modes assign each
/// float the exact rounding-interval mass it receives. `below_octave`
/// restricts to u < 2^-k and renormalizes.
std::vector<FloatProbability> output_distribution(const FloatSpec& spec, UniformMode mode,
                                                  int bits,
                                                  std::optional<int> below_octave = std::nullopt);

/// Shannon entropy (bits) of the generator's attainable output space.
/// Requires P <= 12.
double entropy_of_space(const FloatSpec& spec, UniformMode mode, int bits,
                        std::optional<int> below_octave = std::nullopt);

}  // namespace fliprand
