#include "fliprand/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fliprand {

double effective_precision(const DistributionSpec& dist, Branch branch, double u, double du) {
  if (!(u > 0.0) || u > 0.5) throw std::domain_error("effective_precision: u must lie in (0, 1/2]");
  if (!(du > 0.0)) throw std::domain_error("effective_precision: du must be positive");
  const long double q = dist.quantile(branch, u);
  return static_cast<double>(du * std::fabs(dist.derivative(branch, u) / q));
}

double entropy_even(int precision) {
  if (precision < 2) throw std::invalid_argument("entropy_even: P must be at least 2");
  return precision;
}

double entropy_uneven(int precision, int min_exponent_magnitude) {
  if (precision < 2) throw std::invalid_argument("entropy_uneven: P must be at least 2");
  if (min_exponent_magnitude < 1) throw std::invalid_argument("entropy_uneven: K must be positive");
  // Summed from the smallest term up to keep the tail's contribution.
  double h = 0.0;
  for (int k = min_exponent_magnitude; k >= 1; --k) h += std::ldexp(precision - 1.0 + k, -k);
  return h;
}

double entropy_even_tail(int precision, int k) {
  if (precision < 2) throw std::invalid_argument("entropy_even_tail: P must be at least 2");
  if (k < 0 || k >= precision) throw std::domain_error("entropy_even_tail: need 0 <= k < P");
  return precision - k;
}

double entropy_deficit(int k, int bits, int precision) {
  if (bits == kUnevenBits) return 0.0;
  return std::max(0, k - (bits - precision));
}

double octave_representative(int k) { return std::exp2(-(k + 0.5)); }

LossPrediction predicted_loss(int k, int bits, int precision, const DistributionSpec& dist,
                              Side side) {
  if (k < 1) throw std::domain_error("predicted_loss: octave k must be at least 1");
  if (bits < precision) throw std::invalid_argument("predicted_loss: B must be at least P");
  LossPrediction p;
  p.k = k;
  p.side = side;
  p.assumption = bits == kUnevenBits  ? VariateAssumption::uneven
                 : bits == precision ? VariateAssumption::even
                                     : VariateAssumption::partial;
  const Branch branch = side == Side::small ? Branch::q1 : Branch::q2;
  const double c = dist.condition_number(branch, octave_representative(k));
  p.loss_bits = std::max(0.0, entropy_deficit(k, bits, precision) + std::log2(c));
  return p;
}

std::string to_string(Side side) { return side == Side::small ? "small" : "large"; }

std::string to_string(VariateAssumption assumption) {
  switch (assumption) {
    case VariateAssumption::even:
      return "even";
    case VariateAssumption::partial:
      return "partial";
    case VariateAssumption::uneven:
      return "uneven";
  }
  return "unknown";
}

}  // namespace fliprand
