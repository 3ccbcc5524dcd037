#include "fliprand/uniform.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fliprand {

namespace {

bool is_one(const PFloat& x) { return x.to_dyadic() == Dyadic{1, 0}; }

// Length of the rounding interval clipped to (0, limit].
long double overlap(const RoundingInterval& iv, const Dyadic& limit) {
  const Dyadic zero{0, 0};
  const Dyadic lo = std::max(iv.lower, zero);
  const Dyadic hi = std::min(iv.upper, limit);
  if (hi <= lo) return 0.0L;
  return hi.value() - lo.value();
}

std::vector<FloatProbability> normalized(std::vector<FloatProbability> out,
                                         std::optional<int> below_octave) {
  if (below_octave) {
    if (*below_octave < 0) throw std::invalid_argument("output_distribution: negative octave");
    const Dyadic limit{1, -*below_octave};
    std::erase_if(out, [&](const FloatProbability& p) { return !(p.value.to_dyadic() < limit); });
  }
  long double total = 0.0L;
  for (const auto& p : out) total += p.probability;
  if (total <= 0.0L) throw std::domain_error("output_distribution: empty restriction");
  for (auto& p : out) p.probability /= total;
  std::erase_if(out, [](const FloatProbability& p) { return p.probability == 0.0L; });
  return out;
}

}  // namespace

PFloat draw_uneven_half(BitSource& src, const FloatSpec& spec) {
  const UnevenDraw d = uneven_integer(src, spec.precision(), 1);
  return spec.round_ratio(d.j, d.n);
}

PFloat draw_uneven_unit(BitSource& src, const FloatSpec& spec) {
  for (;;) {
    const UnevenDraw d = uneven_integer(src, spec.precision(), 0);
    const PFloat u = spec.round_ratio(d.j, d.n);
    if (!is_one(u)) return u;
  }
}

PFloat draw_canonical(BitSource& src, const FloatSpec& spec, int bits) {
  if (bits < 1 || bits > BitSource::kWordBits) {
    throw std::invalid_argument("draw_canonical: B must lie in [1, 64]");
  }
  for (;;) {
    const std::uint64_t j = bits == BitSource::kWordBits ? src.next_word() : src.next_bits(bits);
    const PFloat u = spec.round_ratio(j, bits);
    if (!is_one(u)) return u;
  }
}

std::vector<FloatProbability> output_distribution(const FloatSpec& spec, UniformMode mode,
                                                  int bits, std::optional<int> below_octave) {
  if (spec.precision() > 12) {
    throw std::invalid_argument("output_distribution: enumeration needs P <= 12");
  }
  std::vector<FloatProbability> out;

  if (mode == UniformMode::even || mode == UniformMode::partial) {
    if (mode == UniformMode::even) bits = spec.precision();
    if (bits < 1 || bits > 24) {
      throw std::invalid_argument("output_distribution: enumeration needs 1 <= B <= 24");
    }
    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::uint64_t j = 0; j < (std::uint64_t{1} << bits); ++j) {
      const PFloat u = spec.round_ratio(j, bits);
      if (!is_one(u)) ++counts[spec.key(u)];
    }
    for (const auto& [key, c] : counts) {
      out.push_back({spec.from_key(key), static_cast<long double>(c)});
    }
    return normalized(std::move(out), below_octave);
  }

  // Uneven modes: each float receives the uniform mass of its rounding
  // interval clipped to the generator's range; a float rounding to 1 is
  // rejected by the unit generator and simply drops out.
  const Dyadic limit = mode == UniformMode::uneven_half ? Dyadic{1, -1} : Dyadic{1, 0};
  for (PFloat x{0, spec.min_exp2()}; x.to_dyadic() <= limit; x = spec.successor(x)) {
    if (mode == UniformMode::uneven_unit && is_one(x)) break;
    const long double mass = overlap(spec.rounding_interval(x), limit);
    if (mass > 0.0L) out.push_back({x, mass});
  }
  return normalized(std::move(out), below_octave);
}

double entropy_of_space(const FloatSpec& spec, UniformMode mode, int bits,
                        std::optional<int> below_octave) {
  long double h = 0.0L;
  for (const auto& p : output_distribution(spec, mode, bits, below_octave)) {
    h -= p.probability * std::log2(p.probability);
  }
  return static_cast<double>(h);
}

}  // namespace fliprand
