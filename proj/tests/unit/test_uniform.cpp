#include <doctest.h>

#include <bit>
#include <cmath>
#include <map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "fliprand/uniform.hpp"
#include "support/exact.hpp"
#include "support/testing.hpp"

using boost::multiprecision::cpp_rational;
using fliprand::BitSource;
using fliprand::Dyadic;
using fliprand::EmulatedArith;
using fliprand::FloatSpec;
using fliprand::NativeArith;
using fliprand::PFloat;
using fliprand::UniformMode;
using fliprand::testing::clipped_width;
using fliprand::testing::Enumeration;
using fliprand::testing::enumerate_uneven;
using fliprand::testing::exact;
using fliprand::testing::pow2;
using fliprand::testing::ScriptedBits;

namespace {

std::vector<bool> bits_of(const std::string& text) {
  std::vector<bool> out;
  for (const char c : text) out.push_back(c == '1');
  return out;
}

// The uneven draw written with literal loops: one-bit shifts, single fill draw.
template <class Source>
fliprand::UnevenDraw literal_uneven(Source& src, int p, int n0, int word_bits) {
  fliprand::UnevenDraw d;
  d.n = n0;
  do {
    d.j = word_bits == 64 ? src.next_word() : src.next_bits(word_bits);
    d.n += word_bits;
  } while (d.j == 0);
  if (d.j < (std::uint64_t{1} << (p + 1))) {
    int k = 0;
    do {
      d.j = 2 * d.j;
      ++k;
    } while (d.j < (std::uint64_t{1} << (p + 1)));
    d.j = d.j + src.next_bits(k);
    d.n += k;
    d.topped_up = true;
  }
  if (d.j % 2 == 0) d.j = d.j + 1;
  return d;
}

}  // namespace

TEST_CASE("uneven draw hand trace, B = 8, P = 4") {
  // First word 00000001, then the five fill bits 10110.
  const auto stream = bits_of("00000001" "10110");
  ScriptedBits src(stream, 8);
  const auto d = fliprand::uneven_integer(src, 4, 1, 8);
  CHECK(d.topped_up);
  CHECK(d.n == 14);
  CHECK(d.j == (32 + 22 + 1));  // 32 + r, forced odd
  CHECK(src.consumed() == 13);
  const double u = FloatSpec::emulated(4).round_ratio(d.j, d.n).to_double();
  CHECK(u >= std::ldexp(1.0, -9));
  CHECK(u <= std::ldexp(1.0, -8));
}

TEST_CASE("count-leading-zeros form equals the literal loops") {
  for (const int word_bits : {4, 8, 13, 64}) {
    for (const int p : {4, 10, 24, 53}) {
      BitSource a = BitSource::from_seed("literal");
      BitSource b = BitSource::from_seed("literal");
      for (int i = 0; i < 20000; ++i) {
        const auto fast = fliprand::uneven_integer(a, p, i % 2, word_bits);
        const auto slow = literal_uneven(b, p, i % 2, word_bits);
        REQUIRE(fast.j == slow.j);
        REQUIRE(fast.n == slow.n);
        REQUIRE(fast.topped_up == slow.topped_up);
        REQUIRE(a == b);
      }
    }
  }
}

TEST_CASE("uneven draw exhaustive enumeration at P = 4") {
  const FloatSpec p4 = FloatSpec::emulated(4);
  const cpp_rational half(1, 2);
  for (const int word_bits : {4, 5, 10, 20}) {
    CAPTURE(word_bits);
    const Enumeration e = enumerate_uneven(p4, word_bits, 1, 20 + word_bits + 6);
    CHECK(e.truncated <= pow2(-20));

    cpp_rational total = e.truncated;
    for (const auto& [key, pr] : e.prob) total += pr;
    CHECK(total == 1);

    // Every float in (2^-20, 1/2] is attained with mass 2 * |interval ∩ (0, 1/2]|.
    for (PFloat x = p4.successor(p4.round_ratio(1, 20)); x.to_double() <= 0.5; x = p4.successor(x)) {
      const auto it = e.prob.find(p4.key(x));
      REQUIRE(it != e.prob.end());
      const cpp_rational ideal = 2 * clipped_width(p4, x, 0, half);
      REQUIRE(it->second <= ideal);
      REQUIRE(ideal - it->second <= e.truncated);
    }
    for (const auto& [key, pr] : e.prob) REQUIRE(p4.from_key(key).to_double() <= 0.5);

    const cpp_rational p_half = e.prob.at(p4.key(p4.round_ratio(1, 1)));
    const cpp_rational p_15_32 = e.prob.at(p4.key(p4.round_ratio(15, 5)));
    CHECK(p_half * 2 == p_15_32);
  }
}

TEST_CASE("unit-interval variant: one pass has the fractal density on (0, 1]") {
  const FloatSpec p4 = FloatSpec::emulated(4);
  const Enumeration e = enumerate_uneven(p4, 4, 0, 30);
  CHECK(e.truncated <= pow2(-20));
  for (PFloat x = p4.successor(p4.round_ratio(1, 20)); x.to_double() <= 1.0; x = p4.successor(x)) {
    const cpp_rational ideal = clipped_width(p4, x, 0, 1);
    const cpp_rational got = e.prob.count(p4.key(x)) ? e.prob.at(p4.key(x)) : cpp_rational(0);
    REQUIRE(got <= ideal);
    REQUIRE(ideal - got <= e.truncated);
  }
  // The value 1 absorbs the half-ulp below it; the generator rejects it and
  // the rest is renormalized.
  CHECK(e.prob.at(p4.key(p4.round_ratio(1, 0))) == pow2(-5));

  BitSource src = BitSource::from_seed("unit");
  const EmulatedArith arith(p4);
  for (int i = 0; i < 100000; ++i) {
    const double u = fliprand::draw_uneven_unit(src, arith);
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("unit-interval variant: range and mean at binary32") {
  BitSource src = BitSource::from_seed("unit32");
  const NativeArith<float> arith;
  double sum = 0.0;
  std::size_t bad = 0;
  constexpr int kDraws = 10'000'000;
  for (int i = 0; i < kDraws; ++i) {
    const float u = fliprand::draw_uneven_unit(src, arith);
    bad += (u <= 0.0f || u >= 1.0f);
    sum += u;
  }
  CHECK(bad == 0);
  CHECK(std::fabs(sum / kDraws - 0.5) < 0.001);
}

TEST_CASE("canonical draws") {
  const FloatSpec p4 = FloatSpec::emulated(4);
  const EmulatedArith arith(p4);

  SUBCASE("exact dyadic output") {
    const auto stream = bits_of("0101");
    ScriptedBits src(stream, 4);
    CHECK(fliprand::draw_canonical(src, arith, 4) == 0.3125);
  }

  SUBCASE("a value rounding to 2^B is rejected") {
    const auto stream = bits_of("111111" "000001");
    ScriptedBits src(stream, 6);
    CHECK(fliprand::draw_canonical(src, arith, 6) == 1.0 / 64);
    CHECK(src.consumed() == 12);
  }

  SUBCASE("B = P gives the even grid") {
    const auto dist = fliprand::output_distribution(p4, UniformMode::even, 4);
    REQUIRE(dist.size() == 16);
    for (std::size_t i = 0; i < dist.size(); ++i) {
      CHECK(dist[i].value.to_double() == i / 16.0);
      CHECK(dist[i].probability == doctest::Approx(1.0 / 16).epsilon(1e-15));
    }
  }

  SUBCASE("B <= P never rounds") {
    BitSource src = BitSource::from_seed("no-rounding");
    const NativeArith<float> f32;
    for (const int bits : {1, 8, 23, 24}) {
      for (int i = 0; i < 100000; ++i) {
        const double scaled = std::ldexp(static_cast<double>(fliprand::draw_canonical(src, f32, bits)), bits);
        REQUIRE(scaled == std::floor(scaled));
        REQUIRE(scaled < std::ldexp(1.0, bits));
      }
    }
  }

  BitSource src = BitSource::from_seed("x");
  CHECK_THROWS_AS(fliprand::draw_canonical(src, arith, 0), std::invalid_argument);
}

TEST_CASE("1 - u collapses uneven variates onto the even grid") {
  BitSource src = BitSource::from_seed("cancellation");
  const NativeArith<float> arith;
  std::size_t violations = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const float u = fliprand::draw_uneven_half(src, arith);
    const float c = 1.0f - u;
    const double scaled = std::ldexp(static_cast<double>(c), 24);
    violations += scaled != std::floor(scaled);
  }
  CHECK(violations == 0);
}

TEST_CASE("fractal sub-spaces reproduce the whole") {
  const NativeArith<float> arith;
  for (const int k : {2, 6, 10}) {
    CAPTURE(k);
    BitSource src = BitSource::from_seed("fractal/" + std::to_string(k));
    const float limit = std::ldexp(1.0f, -k);
    std::vector<double> xs;
    xs.reserve(1'000'000);
    while (xs.size() < 1'000'000) {
      const float u = fliprand::draw_uneven_half(src, arith);
      if (u < limit) xs.push_back(std::ldexp(static_cast<double>(u), k - 1));
    }
    // 2^(k-1) u is uniform on (0, 1/2) after conditioning; compare on (0, 1).
    for (double& x : xs) x *= 2.0;
    CHECK(fliprand::testing::ks_p(xs, [](double x) { return x; }) > 0.001);
  }
}

TEST_CASE("uneven draw never returns zero") {
  BitSource src = BitSource::from_seed("nonzero");
  const NativeArith<float> arith;
  std::size_t zeros = 0;
  for (int i = 0; i < 10'000'000; ++i) zeros += fliprand::draw_uneven_half(src, arith) == 0.0f;
  CHECK(zeros == 0);
}

TEST_CASE("top-up branch frequency at B = 64, P = 53") {
  BitSource src = BitSource::from_seed("top-up");
  constexpr int kDraws = 2'000'000;
  int topped = 0;
  for (int i = 0; i < kDraws; ++i) topped += fliprand::uneven_integer(src, 53, 1).topped_up;
  // Pr = Pr(first word < 2^54 | word > 0) = 2^-10.
  CHECK(std::fabs(topped / double(kDraws) - std::ldexp(1.0, -10)) < 0.0002);
}

TEST_CASE("octave-conditioned uneven draws equal the conditioned ideal") {
  const FloatSpec p4 = FloatSpec::emulated(4);
  const EmulatedArith arith(p4);
  for (int k = 1; k <= 8; ++k) {
    CAPTURE(k);
    // Exact: all 2^(P+1) fill patterns are equally likely.
    std::map<std::uint64_t, cpp_rational> got;
    for (std::uint64_t r = 0; r < 32; ++r) {
      std::vector<bool> stream;
      for (int b = 4; b >= 0; --b) stream.push_back(((r >> b) & 1) != 0);
      ScriptedBits src(stream, 64);
      got[p4.key(p4.round(fliprand::draw_uneven_octave(src, arith, k)))] += cpp_rational(1, 32);
    }
    const cpp_rational lo = pow2(-k - 1);
    const cpp_rational hi = pow2(-k);
    std::map<std::uint64_t, cpp_rational> want;
    for (PFloat x = p4.predecessor(p4.round_ratio(1, k + 1)); x.to_double() <= std::ldexp(1.0, -k);
         x = p4.successor(x)) {
      const cpp_rational w = clipped_width(p4, x, lo, hi);
      if (w > 0) want[p4.key(x)] = w / (hi - lo);
    }
    CHECK(got == want);
  }
}

TEST_CASE("octave-conditioned uneven draws match rejection sampling") {
  const FloatSpec p4 = FloatSpec::emulated(4);
  const EmulatedArith arith(p4);
  for (int k = 1; k <= 3; ++k) {
    CAPTURE(k);
    BitSource rej = BitSource::from_seed("rejection/" + std::to_string(k));
    BitSource oct = BitSource::from_seed("octave/" + std::to_string(k));
    std::map<double, double> a;
    std::map<double, double> b;
    constexpr int kSamples = 200000;
    for (int accepted = 0; accepted < kSamples;) {
      const auto d = fliprand::uneven_integer(rej, 4, 1);
      // The real variate lies in [2^-(k+1), 2^-k) iff its leading bit sits there.
      if (static_cast<int>(std::bit_width(d.j)) - 1 - d.n == -(k + 1)) {
        a[p4.round_ratio(d.j, d.n).to_double()] += 1;
        ++accepted;
      }
    }
    for (int i = 0; i < kSamples; ++i) b[fliprand::draw_uneven_octave(oct, arith, k)] += 1;
    REQUIRE(a.size() == b.size());
    std::vector<double> obs;
    std::vector<double> exp;
    for (const auto& [x, c] : a) {
      obs.push_back(b[x]);
      exp.push_back(c);
    }
    // Two-sample comparison with equal sizes: statistic uses the pooled variance.
    double stat = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / (obs[i] + exp[i]);
    }
    const boost::math::chi_squared chi(static_cast<double>(obs.size() - 1));
    CHECK(boost::math::cdf(boost::math::complement(chi, stat)) > 0.001);
  }
}

TEST_CASE("octave-conditioned canonical draws match rejection") {
  const FloatSpec p4 = FloatSpec::emulated(4);
  const EmulatedArith arith(p4);
  constexpr int kBits = 8;
  for (const auto side : {fliprand::Side::small, fliprand::Side::large}) {
    for (int k = 1; k <= 4; ++k) {
      CAPTURE(k);
      // Exact rejection distribution: every j in the octave whose float is not 1.
      std::map<double, double> weight;
      double total = 0.0;
      for (std::uint64_t j = 0; j < (1u << kBits); ++j) {
        const double u = p4.round_ratio(j, kBits).to_double();
        const double v = side == fliprand::Side::small ? std::ldexp(double(j), -kBits)
                                                       : 1.0 - std::ldexp(double(j), -kBits);
        const bool inside = side == fliprand::Side::small
                                ? (v >= std::ldexp(1.0, -k - 1) && v < std::ldexp(1.0, -k))
                                : (v > std::ldexp(1.0, -k - 1) && v <= std::ldexp(1.0, -k));
        if (inside && u < 1.0) {
          weight[u] += 1;
          total += 1;
        }
      }
      BitSource src = BitSource::from_seed("canonical-octave");
      std::map<double, double> counts;
      constexpr int kSamples = 100000;
      for (int i = 0; i < kSamples; ++i) {
        counts[fliprand::draw_canonical_octave(src, arith, kBits, k, side)] += 1;
      }
      std::vector<double> obs;
      std::vector<double> exp;
      for (const auto& [u, w] : weight) {
        obs.push_back(counts[u]);
        exp.push_back(kSamples * w / total);
      }
      REQUIRE(counts.size() == weight.size());
      if (obs.size() > 1) CHECK(fliprand::testing::chi_square_p(obs, exp) > 0.001);
    }
  }
  BitSource src = BitSource::from_seed("x");
  CHECK_THROWS_AS(fliprand::draw_canonical_octave(src, arith, 8, 8, fliprand::Side::small),
                  std::invalid_argument);
}

TEST_CASE("entropy of sample spaces") {
  const FloatSpec p10 = FloatSpec::emulated(10);
  CHECK(fliprand::entropy_of_space(p10, UniformMode::even, 10) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(std::fabs(fliprand::entropy_of_space(p10, UniformMode::uneven_half, 0) - 11.0) < 0.1);
  for (int k = 1; k < 10; ++k) {
    CHECK(fliprand::entropy_of_space(p10, UniformMode::even, 10, k) ==
          doctest::Approx(10.0 - k).epsilon(1e-12));
  }
  // Partial variates sit between the two.
  const double partial = fliprand::entropy_of_space(p10, UniformMode::partial, 14);
  CHECK(partial > 10.0);
  CHECK(partial < 11.0);
  CHECK_THROWS_AS(fliprand::entropy_of_space(FloatSpec::emulated(13), UniformMode::even, 13),
                  std::invalid_argument);
  CHECK_THROWS_AS(fliprand::entropy_of_space(p10, UniformMode::partial, 25), std::invalid_argument);
}
