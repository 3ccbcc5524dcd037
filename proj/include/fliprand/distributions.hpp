#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "fliprand/arith.hpp"
#include "fliprand/bitstream.hpp"
#include "fliprand/uniform.hpp"

namespace fliprand {

/// Exponential quantile branches and CDF. Q1 is the small-value branch
/// -log1p(-u)/lambda, Q2 the large-value branch -log(u)/lambda.
double exp_q1(double u, double lambda);
double exp_q2(double u, double lambda);
/// 1 - e^(-lambda x), evaluated as -expm1(-lambda x) in extended precision.
double exp_cdf(double x, double lambda);

enum class Branch { q1, q2 };

enum class DistKind { exponential, weibull, logistic, uniform, normal, lognormal, gamma };

/// A distribution with its analytic machinery.
///
/// Distributions with a quantile pair (exponential, Weibull, logistic,
/// uniform) are sampled by the quantile flip-flop: Q1 maps (0, 1/2] onto the
/// half of the support below the median, Q2 the half above it. Scale
/// parameters are applied as a final multiplication so samples are exactly
/// equivariant under rescaling.
class DistributionSpec {
 public:
  static DistributionSpec exponential(double lambda);
  static DistributionSpec weibull(double shape, double scale);
  static DistributionSpec logistic(double mu, double s);
  static DistributionSpec uniform(double a, double b);
  static DistributionSpec normal(double mu, double sigma);
  static DistributionSpec lognormal(double mu, double sigma);
  /// Shape alpha, scale beta.
  static DistributionSpec gamma(double alpha, double beta);

  /// Parses a label such as "exp:2", "weibull:2:1.5" or "normal:0:1".
  static DistributionSpec parse(const std::string& label);

  DistKind kind() const { return kind_; }
  /// Round-trippable label: id followed by the parameters, ':'-separated.
  std::string label() const;
  std::string name() const;
  /// Short identifier used on the command line and in reports ("exp", ...).
  std::string id() const;
  const std::array<double, 2>& params() const { return params_; }
  bool has_quantiles() const;

  /// Analytic branch values in long double; u in (0, 1/2].
  long double quantile(Branch branch, long double u) const;
  double q1(double u) const { return static_cast<double>(quantile(Branch::q1, u)); }
  double q2(double u) const { return static_cast<double>(quantile(Branch::q2, u)); }
  /// dQ/du of the branch.
  long double derivative(Branch branch, long double u) const;
  /// |u Q'(u) / Q(u)|, with the analytic limit at removable singularities.
  double condition_number(Branch branch, double u) const;

  long double cdf(long double x) const;
  /// 1 - F(x) without cancellation.
  long double ccdf(long double x) const;
  /// F(hi) - F(lo), accurate for intervals deep in either tail.
  long double interval_mass(long double lo, long double hi) const;
  /// interval_mass with the transcendental steps in double; relative error
  /// near 1e-15 and roughly ten times faster. Meant for bulk audits.
  double interval_mass_fast(long double lo, long double hi) const;
  double median() const;
  std::pair<double, double> support() const;

  /// The branch in working arithmetic `a`, including the final rescale.
  template <Arithmetic A>
  typename A::value_type quantile(const A& a, Branch branch, typename A::value_type u) const;

 private:
  DistributionSpec(DistKind kind, double p0, double p1) : kind_(kind), params_{p0, p1} {}
  void require_quantiles() const;

  DistKind kind_;
  std::array<double, 2> params_;
};

// --- Samplers ---------------------------------------------------------------
//
// Every sampler draws its entropy from the caller's BitSource and evaluates
// in the arithmetic `a`. The FloatSpec overloads dispatch to the matching
// arithmetic and return the variate widened to double.

/// One fair bit picks Q1 or Q2, which is then fed an uneven u in (0, 1/2].
template <BitSupplier Source, Arithmetic A>
typename A::value_type sample_flip_flop(const DistributionSpec& dist, Source& src, const A& a) {
  const bool small = src.next_bits(1) != 0;
  const auto u = draw_uneven_half(src, a);
  return dist.quantile(a, small ? Branch::q1 : Branch::q2, u);
}

/// Antithetic pair (Q1(u), Q2(u)) from a single uneven u.
template <BitSupplier Source, Arithmetic A>
std::pair<typename A::value_type, typename A::value_type> sample_antithetic(
    const DistributionSpec& dist, Source& src, const A& a) {
  const auto u = draw_uneven_half(src, a);
  return {dist.quantile(a, Branch::q1, u), dist.quantile(a, Branch::q2, u)};
}

/// The method common libraries use: a B-bit canonical u, then -log(1 - u)
/// (cancellation intact) or -log1p(-u).
template <BitSupplier Source, Arithmetic A>
typename A::value_type baseline_exponential(Source& src, const A& a, double lambda, int bits,
                                            bool use_log1p) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("baseline_exponential: lambda must be positive and finite");
  }
  if (bits < a.spec().precision()) {
    throw std::invalid_argument("baseline_exponential: B must be at least the precision P");
  }
  using T = typename A::value_type;
  const T u = draw_canonical(src, a, bits);
  const T one = a.round(1.0);
  const T l = use_log1p ? a.log1p(-u) : a.log(a.sub(one, u));
  return a.mul(a.sub(T(0), l), a.round(1.0 / lambda));
}

/// Robust unit exponential: the flip-flop with both branches.
template <BitSupplier Source, Arithmetic A>
typename A::value_type robust_unit_exponential(Source& src, const A& a) {
  const bool small = src.next_bits(1) != 0;
  const auto u = draw_uneven_half(src, a);
  using T = typename A::value_type;
  return small ? a.sub(T(0), a.log1p(-u)) : a.sub(T(0), a.log(u));
}

/// Standard normal by rejection: a half-normal from an Exp(1) proposal x is
/// accepted when 2y >= (x - 1)^2 for a second robust Exp(1) variate y (that
/// is, u <= exp(-(x-1)^2/2) for the uneven u = e^-y). A fresh bit sets the
/// sign.
template <BitSupplier Source, Arithmetic A>
typename A::value_type standard_normal(Source& src, const A& a) {
  using T = typename A::value_type;
  const T one = a.round(1.0);
  for (;;) {
    const T x = robust_unit_exponential(src, a);
    const T y = robust_unit_exponential(src, a);
    const T d = a.sub(x, one);
    if (a.add(y, y) >= a.mul(d, d)) return src.next_bits(1) != 0 ? x : T(0) - x;
  }
}

template <BitSupplier Source, Arithmetic A>
typename A::value_type sample_normal(Source& src, const A& a, double mu, double sigma) {
  if (!std::isfinite(mu) || !(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("sample_normal: need finite mu and sigma > 0");
  }
  return a.add(a.round(mu), a.mul(a.round(sigma), standard_normal(src, a)));
}

template <BitSupplier Source, Arithmetic A>
typename A::value_type sample_lognormal(Source& src, const A& a, double mu, double sigma) {
  return a.exp(sample_normal(src, a, mu, sigma));
}

/// Marsaglia-Tsang squeeze for shape alpha >= 1 driven by the robust normal
/// and uneven uniforms; alpha < 1 boosts Gamma(alpha + 1) by u^(1/alpha).
/// beta is a scale.
template <BitSupplier Source, Arithmetic A>
typename A::value_type sample_gamma(Source& src, const A& a, double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha) || !(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("sample_gamma: need alpha > 0 and beta > 0");
  }
  using T = typename A::value_type;
  const double shape = alpha < 1.0 ? alpha + 1.0 : alpha;
  const T d = a.round(shape - 1.0 / 3.0);
  const T c = a.round(1.0 / std::sqrt(9.0 * (shape - 1.0 / 3.0)));
  const T one = a.round(1.0);
  const T half = a.round(0.5);
  const T squeeze = a.round(0.0331);

  T g;
  for (;;) {
    const T x = standard_normal(src, a);
    const T t = a.add(one, a.mul(c, x));
    if (t <= T(0)) continue;
    const T v = a.mul(a.mul(t, t), t);
    const T u = draw_uneven_unit(src, a);
    const T x2 = a.mul(x, x);
    if (u < a.sub(one, a.mul(squeeze, a.mul(x2, x2)))) {
      g = a.mul(d, v);
      break;
    }
    const T rhs = a.add(a.mul(half, x2), a.mul(d, a.add(a.sub(one, v), a.log(v))));
    if (a.log(u) < rhs) {
      g = a.mul(d, v);
      break;
    }
  }
  if (alpha < 1.0) {
    const T u = draw_uneven_unit(src, a);
    g = a.mul(g, a.root(u, alpha));
  }
  return a.mul(g, a.round(beta));
}

/// Uniform on (a, b) as an affine map of an uneven unit variate.
template <BitSupplier Source, Arithmetic A>
typename A::value_type sample_uniform(Source& src, const A& a, double lo, double hi) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("sample_uniform: need finite a < b");
  }
  return a.add(a.round(lo), a.mul(a.round(hi - lo), draw_uneven_unit(src, a)));
}

/// Draws one variate of any supported distribution with its robust sampler.
template <BitSupplier Source, Arithmetic A>
typename A::value_type sample(const DistributionSpec& dist, Source& src, const A& a) {
  const auto& p = dist.params();
  switch (dist.kind()) {
    case DistKind::uniform:
      return sample_uniform(src, a, p[0], p[1]);
    case DistKind::normal:
      return sample_normal(src, a, p[0], p[1]);
    case DistKind::lognormal:
      return sample_lognormal(src, a, p[0], p[1]);
    case DistKind::gamma:
      return sample_gamma(src, a, p[0], p[1]);
    default:
      return sample_flip_flop(dist, src, a);
  }
}

double sample(const DistributionSpec& dist, BitSource& src, const FloatSpec& spec);
double sample_flip_flop(const DistributionSpec& dist, BitSource& src, const FloatSpec& spec);
std::pair<double, double> sample_antithetic(const DistributionSpec& dist, BitSource& src,
                                            const FloatSpec& spec);
double baseline_exponential(BitSource& src, const FloatSpec& spec, double lambda, int bits,
                            bool use_log1p);

// --- Branch evaluation in working arithmetic --------------------------------

template <Arithmetic A>
typename A::value_type DistributionSpec::quantile(const A& a, Branch branch,
                                                  typename A::value_type u) const {
  using T = typename A::value_type;
  const bool small = branch == Branch::q1;
  switch (kind_) {
    case DistKind::exponential: {
      const T l = small ? a.log1p(-u) : a.log(u);
      return a.mul(a.sub(T(0), l), a.round(1.0 / params_[0]));
    }
    case DistKind::weibull: {
      const T l = a.sub(T(0), small ? a.log1p(-u) : a.log(u));
      return a.mul(a.root(l, params_[0]), a.round(params_[1]));
    }
    case DistKind::logistic: {
      const T z = a.log(a.div(u, a.sub(a.round(1.0), u)));
      const T sz = a.mul(a.round(params_[1]), z);
      return small ? a.add(a.round(params_[0]), sz) : a.sub(a.round(params_[0]), sz);
    }
    case DistKind::uniform: {
      const T w = a.mul(a.round(params_[1] - params_[0]), u);
      return small ? a.add(a.round(params_[0]), w) : a.sub(a.round(params_[1]), w);
    }
    default:
      require_quantiles();
  }
  return T(0);
}

}  // namespace fliprand
