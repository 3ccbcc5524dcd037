#pragma once

#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>

#include "fliprand/float_model.hpp"

namespace fliprand {

/// Arithmetic carried out in a hardware float type. Every operation is a
/// single correctly rounded IEEE operation or a libm call.
template <std::floating_point T>
  requires(std::numeric_limits<T>::is_iec559 && sizeof(T) <= 8)
struct NativeArith {
  using value_type = T;
  static constexpr int kPrecision = std::numeric_limits<T>::digits;

  FloatSpec spec() const {
    if constexpr (sizeof(T) == 4) {
      return FloatSpec::binary32();
    } else {
      return FloatSpec::binary64();
    }
  }

  /// Hardware conversion of j (R2N-T2E) followed by an exact power-of-two
  /// scale. Scaled results in the subnormal range round a second time.
  T from_ratio(std::uint64_t j, int n) const {
    const T a = static_cast<T>(j);
    if (n >= 0 && n <= std::numeric_limits<T>::max_exponent - 2) return a * pow2_neg(n);
    return std::ldexp(a, -n);
  }

  T round(double x) const { return static_cast<T>(x); }
  double to_double(T x) const { return x; }

  T add(T a, T b) const { return a + b; }
  T sub(T a, T b) const { return a - b; }
  T mul(T a, T b) const { return a * b; }
  T div(T a, T b) const { return a / b; }
  T log(T x) const { return std::log(x); }
  T log1p(T x) const { return std::log1p(x); }
  T exp(T x) const { return std::exp(x); }
  T expm1(T x) const { return std::expm1(x); }
  T sqrt(T x) const { return std::sqrt(x); }
  T pow(T x, T y) const { return std::pow(x, y); }
  /// x^(1/g) with the reciprocal kept in extended precision; rounding 1/g
  /// to T would cost |ln x| ulps.
  T root(T x, double g) const {
    return static_cast<T>(std::pow(static_cast<long double>(x), 1.0L / g));
  }

 private:
  static T pow2_neg(int n) {
    if constexpr (sizeof(T) == 4) {
      return std::bit_cast<float>(static_cast<std::uint32_t>(127 - n) << 23);
    } else {
      return std::bit_cast<double>(static_cast<std::uint64_t>(1023 - n) << 52);
    }
  }
};

/// Software model of a precision-P format. Values travel as doubles that are
/// exactly representable in the model; each operation is evaluated in
/// binary64 and rounded once to the model, which mimics a correctly rounded
/// P-bit libm.
class EmulatedArith {
 public:
  using value_type = double;

  explicit EmulatedArith(FloatSpec spec) : spec_(spec) {}

  const FloatSpec& spec() const { return spec_; }

  double from_ratio(std::uint64_t j, int n) const { return spec_.round_ratio(j, n).to_double(); }
  double round(double x) const { return spec_.round_to_double(x); }
  double to_double(double x) const { return x; }

  double add(double a, double b) const { return round(a + b); }
  double sub(double a, double b) const { return round(a - b); }
  double mul(double a, double b) const { return round(a * b); }
  double div(double a, double b) const { return round(a / b); }
  double log(double x) const { return round(std::log(x)); }
  double log1p(double x) const { return round(std::log1p(x)); }
  double exp(double x) const { return round(std::exp(x)); }
  double expm1(double x) const { return round(std::expm1(x)); }
  double sqrt(double x) const { return round(std::sqrt(x)); }
  double pow(double x, double y) const { return round(std::pow(x, y)); }
  double root(double x, double g) const {
    return round(static_cast<double>(std::pow(static_cast<long double>(x), 1.0L / g)));
  }

 private:
  FloatSpec spec_;
};

template <class A>
concept Arithmetic = requires(const A& a, typename A::value_type x, std::uint64_t j, int n) {
  { a.from_ratio(j, n) } -> std::same_as<typename A::value_type>;
  { a.round(0.5) } -> std::same_as<typename A::value_type>;
  { a.log1p(x) } -> std::same_as<typename A::value_type>;
  { a.spec() };
};

/// Calls `fn` with the arithmetic matching `spec`.
template <class Fn>
decltype(auto) with_arith(const FloatSpec& spec, Fn&& fn) {
  switch (spec.mode()) {
    case FloatMode::native32:
      return fn(NativeArith<float>{});
    case FloatMode::native64:
      return fn(NativeArith<double>{});
    case FloatMode::emulated:
      break;
  }
  return fn(EmulatedArith{spec});
}

}  // namespace fliprand
