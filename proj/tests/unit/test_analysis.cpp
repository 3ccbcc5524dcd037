#include <doctest.h>

#include <cmath>

#include "fliprand/analysis.hpp"

using fliprand::Branch;
using fliprand::DistributionSpec;
using fliprand::Side;

TEST_CASE("effective precision") {
  const auto e = DistributionSpec::exponential(1.0);
  const double eps = std::ldexp(1.0, -24);

  for (const double u : {1e-9, 0.01, 0.2, 0.5}) {
    for (const Branch b : {Branch::q1, Branch::q2}) {
      CHECK(fliprand::effective_precision(e, b, u, eps * u) ==
            doctest::Approx(eps * e.condition_number(b, u)).epsilon(1e-12));
    }
  }

  // |Q2'/Q2| = 1 / (u |log u|) = e at u = 1/e.
  CHECK(fliprand::effective_precision(e, Branch::q2, std::exp(-1.0), eps) ==
        doctest::Approx(eps * std::exp(1.0)).epsilon(1e-12));

  // Even variates: P* grows without bound toward the origin, while the
  // uneven form eps * C(Q1) tends to eps.
  const double deep = fliprand::effective_precision(e, Branch::q1, std::ldexp(1.0, -20), eps);
  const double shallow = fliprand::effective_precision(e, Branch::q1, std::ldexp(1.0, -10), eps);
  CHECK(deep > shallow);
  CHECK(deep / shallow == doctest::Approx(1024.0).epsilon(1e-3));
  CHECK(eps * e.condition_number(Branch::q1, std::ldexp(1.0, -20)) ==
        doctest::Approx(eps).epsilon(1e-5));

  // Bits of effective precision, -log2 P*, rise strictly with u on (0, 1/2].
  double last_bits = -INFINITY;
  for (double lu = -40.0; lu <= -1.0; lu += 0.125) {
    const double bits = -std::log2(fliprand::effective_precision(e, Branch::q1, std::exp2(lu), eps));
    REQUIRE(bits > last_bits);
    last_bits = bits;
  }

  CHECK_THROWS_AS(fliprand::effective_precision(e, Branch::q1, 0.0, eps), std::domain_error);
  CHECK_THROWS_AS(fliprand::effective_precision(e, Branch::q1, 0.25, 0.0), std::domain_error);
}

TEST_CASE("closed-form entropies") {
  CHECK(fliprand::entropy_even(24) == 24.0);
  CHECK(std::fabs(fliprand::entropy_uneven(24, 126) - 25.0) < 1e-6);
  CHECK(fliprand::entropy_even_tail(24, 8) == 16.0);
  CHECK_THROWS_AS(fliprand::entropy_even_tail(24, 24), std::domain_error);
  CHECK_THROWS_AS(fliprand::entropy_even_tail(24, -1), std::domain_error);

  // Closed form of the finite sum: P + 1 - (P + 1 + K) 2^-K.
  for (const int p : {4, 10, 24, 53}) {
    double last = 0.0;
    for (int k = 1; k <= 60; ++k) {
      const double h = fliprand::entropy_uneven(p, k);
      CHECK(h == doctest::Approx(p + 1 - (p + 1 + k) * std::ldexp(1.0, -k)).epsilon(1e-14));
      // Increments fall below double resolution once 2^-K (P + K) < ulp(P + 1).
      CHECK((k <= 40 ? h > last : h >= last));
      CHECK(h <= p + 1);
      last = h;
    }
  }
}

TEST_CASE("closed forms agree with exhaustive enumeration at P = 10") {
  const auto p10 = fliprand::FloatSpec::emulated(10);
  CHECK(std::fabs(fliprand::entropy_of_space(p10, fliprand::UniformMode::even, 10) -
                  fliprand::entropy_even(10)) < 0.1);
  CHECK(std::fabs(fliprand::entropy_of_space(p10, fliprand::UniformMode::uneven_half, 0) -
                  fliprand::entropy_uneven(10, 126)) < 0.1);
  for (int k = 0; k < 10; ++k) {
    CHECK(std::fabs(fliprand::entropy_of_space(p10, fliprand::UniformMode::even, 10, k) -
                    fliprand::entropy_even_tail(10, k)) < 1e-9);
  }
}

TEST_CASE("predicted loss") {
  const auto e = DistributionSpec::exponential(1.0);

  SUBCASE("even variates lose about a bit per octave") {
    for (const Side side : {Side::small, Side::large}) {
      double last = 0.0;
      for (int k = 1; k <= 40; ++k) {
        const auto p = fliprand::predicted_loss(k, 24, 24, e, side);
        CHECK(p.loss_bits >= 0.0);
        CHECK(p.loss_bits >= last);
        CHECK(p.assumption == fliprand::VariateAssumption::even);
        last = p.loss_bits;
      }
    }
    for (int k = 10; k <= 30; ++k) {
      const double step = fliprand::predicted_loss(k + 1, 24, 24, e, Side::small).loss_bits -
                          fliprand::predicted_loss(k, 24, 24, e, Side::small).loss_bits;
      CHECK(step == doctest::Approx(1.0).epsilon(0.01));
    }
    // The large side's modulation 1/|log u| slowly flattens toward unit slope.
    const double step = fliprand::predicted_loss(41, 24, 24, e, Side::large).loss_bits -
                        fliprand::predicted_loss(40, 24, 24, e, Side::large).loss_bits;
    CHECK(std::fabs(step - 1.0) < 0.05);
  }

  SUBCASE("an 8-bit entropy buffer protects the first octaves") {
    for (int k = 1; k <= 8; ++k) {
      const auto p = fliprand::predicted_loss(k, 32, 24, e, Side::small);
      CHECK(p.assumption == fliprand::VariateAssumption::partial);
      CHECK(p.loss_bits < 0.5);
    }
    CHECK(fliprand::predicted_loss(12, 32, 24, e, Side::small).loss_bits ==
          doctest::Approx(4.0).epsilon(0.01));
  }

  SUBCASE("uneven variates lose nothing once well conditioned") {
    for (int k = 1; k <= 60; ++k) {
      const auto big = fliprand::predicted_loss(k, fliprand::kUnevenBits, 24, e, Side::large);
      CHECK(big.loss_bits == 0.0);
      CHECK(big.assumption == fliprand::VariateAssumption::uneven);
      CHECK(fliprand::predicted_loss(k, fliprand::kUnevenBits, 24, e, Side::small).loss_bits < 0.35);
    }
  }

  CHECK_THROWS_AS(fliprand::predicted_loss(0, 24, 24, e, Side::small), std::domain_error);
  CHECK_THROWS_AS(fliprand::predicted_loss(1, 20, 24, e, Side::small), std::invalid_argument);
}
