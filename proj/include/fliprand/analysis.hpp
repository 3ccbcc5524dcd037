#pragma once

#include <limits>
#include <string>

#include "fliprand/distributions.hpp"
#include "fliprand/uniform.hpp"

namespace fliprand {

/// Stand-in for B when the variate stream is uneven (B -> infinity).
inline constexpr int kUnevenBits = std::numeric_limits<int>::max();

enum class VariateAssumption { even, partial, uneven };

struct LossPrediction {
  int k = 0;
  double loss_bits = 0.0;
  Side side = Side::small;
  VariateAssumption assumption = VariateAssumption::even;
};

/// Relative output change du * |Q'(u) / Q(u)| for an absolute input spacing
/// du. With du = epsilon this is the effective precision of a branch fed
/// even variates; with du = epsilon * u it reduces to epsilon * C(Q).
double effective_precision(const DistributionSpec& dist, Branch branch, double u, double du);

/// Entropy in bits of even variates: P.
double entropy_even(int precision);
/// Entropy of uneven variates, sum over k = 1..K of 2^-k (P - 1 + k).
double entropy_uneven(int precision, int min_exponent_magnitude);
/// Entropy of even variates restricted to u < 2^-k: P - k, for 0 <= k < P.
double entropy_even_tail(int precision, int k);

/// Bits of entropy the variate stream has lost by octave k when it carries
/// B bits of which P survive rounding: max(0, k - (B - P)).
double entropy_deficit(int k, int bits, int precision);

/// Representative u of folded octave k >= 1, the geometric midpoint of
/// [2^-(k+1), 2^-k).
double octave_representative(int k);

/// Predicted precision loss in octave k on one side of the median: the
/// entropy deficit plus log2 of the branch's condition number at the
/// octave's representative u, clamped at zero. Pass kUnevenBits as B for
/// uneven variates.
LossPrediction predicted_loss(int k, int bits, int precision, const DistributionSpec& dist,
                              Side side);

std::string to_string(Side side);
std::string to_string(VariateAssumption assumption);

}  // namespace fliprand
