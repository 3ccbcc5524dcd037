#include "fliprand/distributions.hpp"

#include <charconv>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace fliprand {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
  }
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_half_unit(long double u) {
  if (!(u > 0.0L) || u > 0.5L) throw std::domain_error("quantile branch needs u in (0, 1/2]");
}

// -log of the branch argument: -log1p(-u) for Q1, -log(u) for Q2.
long double neg_log(Branch branch, long double u) {
  return branch == Branch::q1 ? -std::log1p(-u) : -std::log(u);
}

}  // namespace

double exp_q1(double u, double lambda) {
  require_positive(lambda, "lambda");
  if (!(u > 0.0) || !(u < 1.0)) throw std::domain_error("exp_q1: u must lie in (0, 1)");
  return -std::log1p(-u) / lambda;
}

double exp_q2(double u, double lambda) {
  require_positive(lambda, "lambda");
  if (!(u > 0.0) || !(u <= 1.0)) throw std::domain_error("exp_q2: u must lie in (0, 1]");
  return -std::log(u) / lambda;
}

double exp_cdf(double x, double lambda) {
  require_positive(lambda, "lambda");
  if (!(x >= 0.0)) throw std::domain_error("exp_cdf: x must be non-negative");
  return static_cast<double>(-std::expm1(-static_cast<long double>(lambda) * x));
}

DistributionSpec DistributionSpec::exponential(double lambda) {
  require_positive(lambda, "exponential rate lambda");
  return {DistKind::exponential, lambda, 0.0};
}

DistributionSpec DistributionSpec::weibull(double shape, double scale) {
  require_positive(shape, "Weibull shape");
  require_positive(scale, "Weibull scale");
  return {DistKind::weibull, shape, scale};
}

DistributionSpec DistributionSpec::logistic(double mu, double s) {
  require_finite(mu, "logistic location");
  require_positive(s, "logistic scale");
  return {DistKind::logistic, mu, s};
}

DistributionSpec DistributionSpec::uniform(double a, double b) {
  require_finite(a, "uniform lower bound");
  require_finite(b, "uniform upper bound");
  if (!(a < b)) throw std::invalid_argument("uniform bounds need a < b");
  return {DistKind::uniform, a, b};
}

DistributionSpec DistributionSpec::normal(double mu, double sigma) {
  require_finite(mu, "normal mean");
  require_positive(sigma, "normal sigma");
  return {DistKind::normal, mu, sigma};
}

DistributionSpec DistributionSpec::lognormal(double mu, double sigma) {
  require_finite(mu, "log-normal mu");
  require_positive(sigma, "log-normal sigma");
  return {DistKind::lognormal, mu, sigma};
}

DistributionSpec DistributionSpec::gamma(double alpha, double beta) {
  require_positive(alpha, "gamma shape alpha");
  require_positive(beta, "gamma scale beta");
  return {DistKind::gamma, alpha, beta};
}

std::string DistributionSpec::name() const {
  switch (kind_) {
    case DistKind::exponential:
      return "exponential";
    case DistKind::weibull:
      return "weibull";
    case DistKind::logistic:
      return "logistic";
    case DistKind::uniform:
      return "uniform";
    case DistKind::normal:
      return "normal";
    case DistKind::lognormal:
      return "lognormal";
    case DistKind::gamma:
      return "gamma";
  }
  return "unknown";
}

DistributionSpec DistributionSpec::parse(const std::string& label) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = label.find(':', start);
    parts.push_back(label.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  std::vector<double> p;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(parts[i], &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != parts[i].size()) {
      throw std::invalid_argument("bad parameter '" + parts[i] + "' in distribution '" + label + "'");
    }
    p.push_back(v);
  }
  const std::string& id = parts[0];
  const auto need = [&](std::size_t n) {
    if (p.size() != n) {
      throw std::invalid_argument("distribution '" + id + "' takes " + std::to_string(n) +
                                  " parameter(s)");
    }
  };
  if (id == "exp" || id == "exponential") {
    if (p.empty()) p.push_back(1.0);
    need(1);
    return exponential(p[0]);
  }
  if (id == "weibull") return need(2), weibull(p[0], p[1]);
  if (id == "logistic") return need(2), logistic(p[0], p[1]);
  if (id == "uniform") return need(2), uniform(p[0], p[1]);
  if (id == "normal") return need(2), normal(p[0], p[1]);
  if (id == "lognormal") return need(2), lognormal(p[0], p[1]);
  if (id == "gamma") return need(2), gamma(p[0], p[1]);
  throw std::invalid_argument("unknown distribution '" + id + "'");
}

std::string DistributionSpec::label() const {
  const auto fmt = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
    return std::string(buf, res.ptr);
  };
  std::string out = id() + ":" + fmt(params_[0]);
  if (kind_ != DistKind::exponential) out += ":" + fmt(params_[1]);
  return out;
}

std::string DistributionSpec::id() const { return kind_ == DistKind::exponential ? "exp" : name(); }

bool DistributionSpec::has_quantiles() const {
  return kind_ == DistKind::exponential || kind_ == DistKind::weibull ||
         kind_ == DistKind::logistic || kind_ == DistKind::uniform;
}

void DistributionSpec::require_quantiles() const {
  if (!has_quantiles()) {
    throw std::logic_error(name() + " has no quantile pair; it is sampled by rejection");
  }
}

long double DistributionSpec::quantile(Branch branch, long double u) const {
  require_quantiles();
  require_half_unit(u);
  const long double p0 = params_[0];
  const long double p1 = params_[1];
  switch (kind_) {
    case DistKind::exponential:
      return neg_log(branch, u) / p0;
    case DistKind::weibull:
      return p1 * std::pow(neg_log(branch, u), 1.0L / p0);
    case DistKind::logistic: {
      const long double z = std::log(u) - std::log1p(-u);
      return branch == Branch::q1 ? p0 + p1 * z : p0 - p1 * z;
    }
    default:
      return branch == Branch::q1 ? p0 + (p1 - p0) * u : p1 - (p1 - p0) * u;
  }
}

long double DistributionSpec::derivative(Branch branch, long double u) const {
  require_quantiles();
  require_half_unit(u);
  const long double p0 = params_[0];
  const long double p1 = params_[1];
  // d/du of -log1p(-u) is 1/(1-u); of -log(u) is -1/u.
  const long double dl = branch == Branch::q1 ? 1.0L / (1.0L - u) : -1.0L / u;
  switch (kind_) {
    case DistKind::exponential:
      return dl / p0;
    case DistKind::weibull:
      return p1 / p0 * std::pow(neg_log(branch, u), 1.0L / p0 - 1.0L) * dl;
    case DistKind::logistic: {
      const long double dz = 1.0L / (u * (1.0L - u));
      return branch == Branch::q1 ? p1 * dz : -p1 * dz;
    }
    default:
      return branch == Branch::q1 ? p1 - p0 : p0 - p1;
  }
}

double DistributionSpec::condition_number(Branch branch, double u) const {
  require_quantiles();
  if (u == 0.0) {
    // Removable singularities of the small-value branch at the origin.
    if (branch == Branch::q1 && (kind_ == DistKind::exponential || kind_ == DistKind::weibull)) {
      return kind_ == DistKind::exponential ? 1.0 : 1.0 / params_[0];
    }
    if (branch == Branch::q1 && kind_ == DistKind::uniform && params_[0] == 0.0) return 1.0;
    if (branch == Branch::q2 && (kind_ == DistKind::exponential || kind_ == DistKind::weibull)) {
      return 0.0;
    }
    throw std::domain_error("condition_number: u = 0 outside the branch domain");
  }
  if (kind_ == DistKind::exponential || kind_ == DistKind::weibull) {
    // Closed forms avoid the 0/0 of u Q'/Q near the origin; Weibull adds 1/shape.
    const long double lu = u;
    const long double c = branch == Branch::q1 ? -lu / ((1.0L - lu) * std::log1p(-lu))
                                               : -1.0L / std::log(lu);
    return static_cast<double>(kind_ == DistKind::weibull ? c / params_[0] : c);
  }
  const long double q = quantile(branch, u);
  return static_cast<double>(std::fabs(u * derivative(branch, u) / q));
}

long double DistributionSpec::cdf(long double x) const {
  const long double p0 = params_[0];
  const long double p1 = params_[1];
  switch (kind_) {
    case DistKind::exponential:
      return x <= 0.0L ? 0.0L : -std::expm1(-p0 * x);
    case DistKind::weibull:
      return x <= 0.0L ? 0.0L : -std::expm1(-std::pow(x / p1, p0));
    case DistKind::logistic:
      return 1.0L / (1.0L + std::exp(-(x - p0) / p1));
    case DistKind::uniform:
      return x <= p0 ? 0.0L : x >= p1 ? 1.0L : (x - p0) / (p1 - p0);
    case DistKind::normal:
      return 0.5L * std::erfc(-(x - p0) / (p1 * std::numbers::sqrt2_v<long double>));
    case DistKind::lognormal:
      return x <= 0.0L ? 0.0L
                       : 0.5L * std::erfc(-(std::log(x) - p0) / (p1 * std::numbers::sqrt2_v<long double>));
    case DistKind::gamma:
      return x <= 0.0L ? 0.0L : boost::math::gamma_p(p0, x / p1);
  }
  return 0.0L;
}

long double DistributionSpec::ccdf(long double x) const {
  const long double p0 = params_[0];
  const long double p1 = params_[1];
  switch (kind_) {
    case DistKind::exponential:
      return x <= 0.0L ? 1.0L : std::exp(-p0 * x);
    case DistKind::weibull:
      return x <= 0.0L ? 1.0L : std::exp(-std::pow(x / p1, p0));
    case DistKind::logistic:
      return 1.0L / (1.0L + std::exp((x - p0) / p1));
    case DistKind::uniform:
      return x <= p0 ? 1.0L : x >= p1 ? 0.0L : (p1 - x) / (p1 - p0);
    case DistKind::normal:
      return 0.5L * std::erfc((x - p0) / (p1 * std::numbers::sqrt2_v<long double>));
    case DistKind::lognormal:
      return x <= 0.0L ? 1.0L
                       : 0.5L * std::erfc((std::log(x) - p0) / (p1 * std::numbers::sqrt2_v<long double>));
    case DistKind::gamma:
      return x <= 0.0L ? 1.0L : boost::math::gamma_q(p0, x / p1);
  }
  return 1.0L;
}

long double DistributionSpec::interval_mass(long double lo, long double hi) const {
  if (!(hi > lo)) return 0.0L;
  if (kind_ == DistKind::exponential || kind_ == DistKind::weibull) {
    // e^-A - e^-B = e^-A (1 - e^-(B-A)) with A, B the cumulative hazards.
    const auto hazard = [&](long double x) -> long double {
      if (x <= 0.0L) return 0.0L;
      return kind_ == DistKind::exponential ? params_[0] * x : std::pow(x / params_[1], params_[0]);
    };
    const long double a = hazard(lo);
    const long double b = hazard(hi);
    return std::exp(-a) * -std::expm1(-(b - a));
  }
  const long double m = median();
  if (hi <= m) return cdf(hi) - cdf(lo);
  if (lo >= m) return ccdf(lo) - ccdf(hi);
  return (cdf(m) - cdf(lo)) + (ccdf(m) - ccdf(hi));
}

double DistributionSpec::interval_mass_fast(long double lo, long double hi) const {
  if (kind_ != DistKind::exponential && kind_ != DistKind::weibull) {
    return static_cast<double>(interval_mass(lo, hi));
  }
  if (!(hi > lo)) return 0.0;
  // Ratios are formed in long double so x / sigma keeps full precision
  // before the double pow.
  const auto hazard = [&](long double x) -> long double {
    if (x <= 0.0L) return 0.0L;
    if (kind_ == DistKind::exponential) return params_[0] * x;
    return std::pow(static_cast<double>(x / params_[1]), params_[0]);
  };
  const long double a = hazard(lo);
  const long double b = hazard(hi);
  if (kind_ == DistKind::weibull && b - a < 1e-6L * a) {
    // The hazard difference cancels; use H(hi) - H(lo) = H(lo) ((hi/lo)^g - 1).
    const double ratio = std::expm1(params_[0] * std::log1p(static_cast<double>((hi - lo) / lo)));
    return std::exp(-static_cast<double>(a)) * -std::expm1(-static_cast<double>(a) * ratio);
  }
  return std::exp(-static_cast<double>(a)) * -std::expm1(-static_cast<double>(b - a));
}

double DistributionSpec::median() const {
  const double p0 = params_[0];
  const double p1 = params_[1];
  switch (kind_) {
    case DistKind::exponential:
      return std::numbers::ln2 / p0;
    case DistKind::weibull:
      return p1 * std::pow(std::numbers::ln2, 1.0 / p0);
    case DistKind::logistic:
    case DistKind::normal:
      return p0;
    case DistKind::uniform:
      return 0.5 * (p0 + p1);
    case DistKind::lognormal:
      return std::exp(p0);
    case DistKind::gamma:
      return boost::math::gamma_p_inv(p0, 0.5) * p1;
  }
  return 0.0;
}

std::pair<double, double> DistributionSpec::support() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (kind_) {
    case DistKind::logistic:
    case DistKind::normal:
      return {-inf, inf};
    case DistKind::uniform:
      return {params_[0], params_[1]};
    default:
      return {0.0, inf};
  }
}

double sample(const DistributionSpec& dist, BitSource& src, const FloatSpec& spec) {
  return with_arith(spec, [&](const auto& a) { return a.to_double(sample(dist, src, a)); });
}

double sample_flip_flop(const DistributionSpec& dist, BitSource& src, const FloatSpec& spec) {
  return with_arith(spec, [&](const auto& a) { return a.to_double(sample_flip_flop(dist, src, a)); });
}

std::pair<double, double> sample_antithetic(const DistributionSpec& dist, BitSource& src,
                                            const FloatSpec& spec) {
  return with_arith(spec, [&](const auto& a) {
    const auto [x, y] = sample_antithetic(dist, src, a);
    return std::pair<double, double>{a.to_double(x), a.to_double(y)};
  });
}

double baseline_exponential(BitSource& src, const FloatSpec& spec, double lambda, int bits,
                            bool use_log1p) {
  return with_arith(spec, [&](const auto& a) {
    return a.to_double(baseline_exponential(src, a, lambda, bits, use_log1p));
  });
}

}  // namespace fliprand
