#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>

namespace fliprand {

enum class FloatMode { native32, native64, emulated };

/// Exact dyadic rational num * 2^exp2.
struct Dyadic {
  std::int64_t num = 0;
  int exp2 = 0;

  /// Exact for |num| < 2^64 (x86 long double carries a 64-bit significand).
  long double value() const;
  friend std::strong_ordering operator<=>(const Dyadic& a, const Dyadic& b);
  friend bool operator==(const Dyadic& a, const Dyadic& b) { return (a <=> b) == 0; }
};

/// A non-negative binary float of the model: mantissa * 2^exp2.
///
/// Canonical form: normals have mantissa in [2^(P-1), 2^P); subnormals and
/// zero sit at the minimum exp2 with a smaller mantissa.
struct PFloat {
  std::uint64_t mantissa = 0;
  int exp2 = 0;

  bool is_zero() const { return mantissa == 0; }
  /// Exact for every value of a model with P <= 53 and K <= 1022.
  double to_double() const;
  Dyadic to_dyadic() const { return {static_cast<std::int64_t>(mantissa), exp2}; }

  friend std::strong_ordering operator<=>(const PFloat& a, const PFloat& b) {
    return a.to_dyadic() <=> b.to_dyadic();
  }
  friend bool operator==(const PFloat& a, const PFloat& b) {
    return a.mantissa == b.mantissa && (a.mantissa == 0 || a.exp2 == b.exp2);
  }
};

/// Real interval of values that round to a float under R2N-T2E.
/// An endpoint belongs to the interval iff the float's mantissa is even.
struct RoundingInterval {
  Dyadic lower;
  Dyadic upper;
  bool lower_closed = false;
  bool upper_closed = false;

  Dyadic width() const;
};

/// Precision-P binary float format with minimum normal exponent -K.
///
/// Native modes mirror IEEE binary32/binary64. Emulated formats accept
/// 2 <= P <= 53 and 1 <= K <= 1022, so every emulated value is exactly
/// representable as a double. The largest exponent is K + 1 (IEEE-style).
class FloatSpec {
 public:
  static FloatSpec binary32() { return FloatSpec(24, 126, FloatMode::native32); }
  static FloatSpec binary64() { return FloatSpec(53, 1022, FloatMode::native64); }
  static FloatSpec emulated(int precision, int min_exponent_magnitude = 126);
  /// "binary32", "binary64" or "emulated:P" (optionally "emulated:P:K").
  static FloatSpec parse(const std::string& text);

  int precision() const { return precision_; }
  int min_exponent_magnitude() const { return k_; }
  int max_exponent() const { return k_ + 1; }
  FloatMode mode() const { return mode_; }
  double epsilon() const;
  std::string name() const;

  /// Nearest float to j / 2^n, ties to even mantissa.
  PFloat round_ratio(std::uint64_t j, int n) const { return round_scaled(j, -n); }
  /// Nearest float to j * 2^exp2, ties to even mantissa.
  PFloat round_scaled(std::uint64_t j, int exp2) const;
  /// Nearest float to |x| for finite x.
  PFloat round(double x) const;
  /// Signed rounding to the model, returned as a double.
  double round_to_double(double x) const;

  /// Exact decomposition; throws if x is not a non-negative model value.
  PFloat from_double(double x) const;
  bool representable(double x) const;

  RoundingInterval rounding_interval(const PFloat& x) const;
  PFloat successor(const PFloat& x) const;
  PFloat predecessor(const PFloat& x) const;

  /// Monotone integer key; coincides with the IEEE bit pattern for the
  /// native formats.
  std::uint64_t key(const PFloat& x) const;
  PFloat from_key(std::uint64_t key) const;

  PFloat min_normal() const { return {std::uint64_t{1} << (precision_ - 1), min_exp2()}; }
  PFloat max_finite() const;
  /// exp2 of the least significant mantissa bit of subnormals.
  int min_exp2() const { return -k_ - precision_ + 1; }

  friend bool operator==(const FloatSpec&, const FloatSpec&) = default;

 private:
  FloatSpec(int precision, int k, FloatMode mode) : precision_(precision), k_(k), mode_(mode) {}

  int precision_;
  int k_;
  FloatMode mode_;
};

}  // namespace fliprand
