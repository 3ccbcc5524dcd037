#include "fliprand/float_model.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fliprand {

long double Dyadic::value() const { return std::ldexp(static_cast<long double>(num), exp2); }

std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b) {
  const long double x = a.value();
  const long double y = b.value();
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

double PFloat::to_double() const { return std::ldexp(static_cast<double>(mantissa), exp2); }

Dyadic RoundingInterval::width() const {
  // Endpoints share at most a factor-of-two difference in exponent.
  const int e = std::min(lower.exp2, upper.exp2);
  return {(upper.num << (upper.exp2 - e)) - (lower.num << (lower.exp2 - e)), e};
}

FloatSpec FloatSpec::emulated(int precision, int min_exponent_magnitude) {
  if (precision < 2 || precision > 53) {
    throw std::invalid_argument("FloatSpec: precision must lie in [2, 53]");
  }
  if (min_exponent_magnitude < 1 || min_exponent_magnitude > 1022) {
    throw std::invalid_argument("FloatSpec: K must lie in [1, 1022]");
  }
  return FloatSpec(precision, min_exponent_magnitude, FloatMode::emulated);
}

FloatSpec FloatSpec::parse(const std::string& text) {
  if (text == "binary32" || text == "float") return binary32();
  if (text == "binary64" || text == "double") return binary64();
  const std::string prefix = "emulated:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string rest = text.substr(prefix.size());
    std::size_t used = 0;
    try {
      const int p = std::stoi(rest, &used);
      if (used == rest.size()) return emulated(p);
      if (rest[used] == ':') {
        const std::string ktext = rest.substr(used + 1);
        std::size_t kused = 0;
        const int k = std::stoi(ktext, &kused);
        if (kused == ktext.size()) return emulated(p, k);
      }
    } catch (const std::logic_error&) {
    }
  }
  throw std::invalid_argument("unrecognized precision '" + text +
                              "' (expected binary32, binary64 or emulated:P)");
}

double FloatSpec::epsilon() const { return std::ldexp(1.0, -precision_); }

std::string FloatSpec::name() const {
  switch (mode_) {
    case FloatMode::native32:
      return "binary32";
    case FloatMode::native64:
      return "binary64";
    case FloatMode::emulated:
      return k_ == 126 ? "emulated:" + std::to_string(precision_)
                       : "emulated:" + std::to_string(precision_) + ":" + std::to_string(k_);
  }
  return "unknown";
}

PFloat FloatSpec::max_finite() const {
  return {(std::uint64_t{1} << precision_) - 1, max_exponent() - precision_ + 1};
}

PFloat FloatSpec::round_scaled(std::uint64_t j, int exp2) const {
  if (j == 0) return {0, min_exp2()};
  const int len = std::bit_width(j);
  const int lead = len - 1 + exp2;
  const int lsb = std::max(lead - (precision_ - 1), min_exp2());
  const int shift = lsb - exp2;  // bits of j below the kept mantissa

  std::uint64_t m;
  int out_lsb = lsb;
  if (shift <= 0) {
    m = j << -shift;
  } else if (shift > 64) {
    m = 0;
  } else {
    const std::uint64_t kept = shift == 64 ? 0 : j >> shift;
    const std::uint64_t rest = shift == 64 ? j : j & ((std::uint64_t{1} << shift) - 1);
    const std::uint64_t half = std::uint64_t{1} << (shift - 1);
    m = kept;
    if (rest > half || (rest == half && (kept & 1) != 0)) ++m;
    if (m == (std::uint64_t{1} << precision_)) {
      m >>= 1;
      ++out_lsb;
    }
  }
  if (m == 0) return {0, min_exp2()};
  if (static_cast<int>(std::bit_width(m)) - 1 + out_lsb > max_exponent()) {
    throw std::overflow_error("FloatSpec::round_scaled: exponent overflow");
  }
  return {m, out_lsb};
}

PFloat FloatSpec::round(double x) const {
  if (!std::isfinite(x)) throw std::domain_error("FloatSpec::round: non-finite input");
  x = std::fabs(x);
  if (x == 0.0) return {0, min_exp2()};
  int e = 0;
  const double frac = std::frexp(x, &e);  // x = frac * 2^e, frac in [0.5, 1)
  const auto m = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  return round_scaled(m, e - 53);
}

double FloatSpec::round_to_double(double x) const {
  const double r = round(x).to_double();
  return std::signbit(x) ? -r : r;
}

PFloat FloatSpec::from_double(double x) const {
  if (!std::isfinite(x) || x < 0.0) {
    throw std::domain_error("FloatSpec::from_double: value outside the model");
  }
  const PFloat r = round(x);
  if (r.to_double() != x) throw std::domain_error("FloatSpec::from_double: not representable");
  return r;
}

bool FloatSpec::representable(double x) const {
  if (!std::isfinite(x) || x < 0.0) return false;
  try {
    return round(x).to_double() == x;
  } catch (const std::overflow_error&) {
    return false;
  }
}

RoundingInterval FloatSpec::rounding_interval(const PFloat& x) const {
  const std::int64_t m = static_cast<std::int64_t>(x.mantissa);
  const bool even = (x.mantissa & 1) == 0;
  if (x.is_zero()) {
    return {{0, 0}, {1, min_exp2() - 1}, true, true};
  }
  const bool binade_bottom =
      x.mantissa == (std::uint64_t{1} << (precision_ - 1)) && x.exp2 > min_exp2();
  const Dyadic upper{2 * m + 1, x.exp2 - 1};
  const Dyadic lower = binade_bottom ? Dyadic{4 * m - 1, x.exp2 - 2} : Dyadic{2 * m - 1, x.exp2 - 1};
  return {lower, upper, even, even};
}

PFloat FloatSpec::successor(const PFloat& x) const {
  if (x.is_zero()) return {1, min_exp2()};
  PFloat next{x.mantissa + 1, x.exp2};
  if (next.mantissa == (std::uint64_t{1} << precision_)) {
    next = {std::uint64_t{1} << (precision_ - 1), x.exp2 + 1};
  }
  if (static_cast<int>(std::bit_width(next.mantissa)) - 1 + next.exp2 > max_exponent()) {
    throw std::overflow_error("FloatSpec::successor: no finite successor");
  }
  return next;
}

PFloat FloatSpec::predecessor(const PFloat& x) const {
  if (x.is_zero()) throw std::domain_error("FloatSpec::predecessor: zero has no predecessor");
  if (x.mantissa == (std::uint64_t{1} << (precision_ - 1)) && x.exp2 > min_exp2()) {
    return {(std::uint64_t{1} << precision_) - 1, x.exp2 - 1};
  }
  return {x.mantissa - 1, x.exp2};
}

std::uint64_t FloatSpec::key(const PFloat& x) const {
  const std::uint64_t hidden = std::uint64_t{1} << (precision_ - 1);
  const std::uint64_t biased =
      x.mantissa >= hidden ? static_cast<std::uint64_t>(x.exp2 - min_exp2() + 1) : 0;
  return (biased << (precision_ - 1)) | (x.mantissa & (hidden - 1));
}

PFloat FloatSpec::from_key(std::uint64_t key) const {
  const std::uint64_t hidden = std::uint64_t{1} << (precision_ - 1);
  const std::uint64_t biased = key >> (precision_ - 1);
  const std::uint64_t frac = key & (hidden - 1);
  if (biased == 0) return {frac, min_exp2()};
  return {frac | hidden, static_cast<int>(biased) - 1 + min_exp2()};
}

}  // namespace fliprand
