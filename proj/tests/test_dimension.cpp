#include <cmath>

#include <doctest.h>

#include "fractal/dimension.hpp"
#include "fractal/errors.hpp"
#include "fractal/prescribe.hpp"
#include "fractal/string_expr.hpp"

using namespace fractal;

namespace {
// log_2 of the golden ratio: the Moran root of 2^{-s} + 4^{-s} = 1, since
// x + x^2 = 1 at x = 2/(1+sqrt 5).
const double kLog2Phi = std::log2((1.0 + std::sqrt(5.0)) / 2.0);
}  // namespace

TEST_CASE("exact abscissa rules") {
  CHECK(exact_abscissa(make_explicit({0.5, 0.25})).value == 0.0);
  CHECK(exact_abscissa(make_gen_cantor(2, 1.0 / 3.0)).value ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-13));
  CHECK(exact_abscissa(make_gen_cantor(3, 0.2)).value ==
        doctest::Approx(std::log(3.0) / std::log(5.0)).epsilon(1e-13));

  // Golden-ratio oracle for the Moran equation.
  DimensionEstimate moran = exact_abscissa(make_self_similar({0.5, 0.25}));
  CHECK(moran.value == doctest::Approx(kLog2Phi).epsilon(1e-11));
  CHECK(moran.value == doctest::Approx(0.69424191363061729).epsilon(1e-10));
  CHECK(moran.method == DimensionEstimate::Method::ExactSymbolic);
  CHECK(moran.confidenceWidth == 0.0);

  // Scale and power leave the abscissa unchanged.
  CHECK(exact_abscissa(scale(0.1, make_gen_cantor(2, 1.0 / 3.0))).value ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-13));
  CHECK(exact_abscissa(make_power(make_gen_cantor(2, 1.0 / 3.0), 3)).value ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-13));
  CHECK(exact_abscissa(make_cantor_string()).value ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-13));

  // Infinite order keeps the base dimension.
  CHECK(exact_abscissa(make_infinite_order(2, 1.0 / 3.0)).value ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-13));

  // Unions take the supremum.
  CHECK(exact_abscissa(make_union({make_gen_cantor(2, 1.0 / 3.0),
                                   make_gen_cantor(3, 0.2)})).value ==
        doctest::Approx(std::log(3.0) / std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("entire lifts keep the inner abscissa; radius-one lifts may not") {
  CHECK(exact_abscissa(lift(CoefficientFamily::exp(),
                            make_gen_cantor(2, 1.0 / 3.0))).value ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-12));
  // Geometric lift of {1/2, 1/4}: the lifted zeta diverges once
  // zeta_inner(sigma) reaches 1, i.e. at 2^{-s} + 4^{-s} = 1 — the golden
  // abscissa again, strictly above the inner value 0.
  DimensionEstimate g = exact_abscissa(
      lift(CoefficientFamily::geometric(), make_explicit({0.5, 0.25})));
  CHECK(g.value == doctest::Approx(kLog2Phi).epsilon(1e-10));
  CHECK_FALSE(g.derivation.empty());
}

TEST_CASE("scheduled unions certify the supremum d1") {
  PrescribedString p = construct(0.2, 0.5, 0.5);
  CHECK(exact_abscissa(p.core).value == doctest::Approx(0.5).epsilon(1e-12));
  PrescribedString q = construct(0.1, 0.3, 0.7);
  CHECK(exact_abscissa(q.expr).value == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("prefix regression recovers geometric dimensions") {
  for (auto [e, exact] : {std::pair{make_gen_cantor(2, 1.0 / 3.0),
                                    std::log(2.0) / std::log(3.0)},
                          std::pair{make_gen_cantor(3, 0.2),
                                    std::log(3.0) / std::log(5.0)},
                          std::pair{make_cantor_string(),
                                    std::log(2.0) / std::log(3.0)}}) {
    DimensionEstimate est = estimate_abscissa(e, 10000);
    CHECK(est.method == DimensionEstimate::Method::PrefixRegression);
    CHECK(est.termsUsed > 0);
    CHECK(std::abs(est.value - exact) <= 0.03);
  }
}

TEST_CASE("prefix regression preserves the abscissa under tensor powers") {
  const double log32 = std::log(2.0) / std::log(3.0);
  for (int n : {2, 3}) {
    DimensionEstimate est =
        estimate_abscissa(make_power(make_gen_cantor(2, 1.0 / 3.0), n), 10000);
    CHECK(std::abs(est.value - log32) <= 0.03);
    CHECK(std::abs(est.value - log32) <= est.confidenceWidth);
  }
}

TEST_CASE("prefix regression brackets the infinite-order atoms") {
  // The stretched counting growth of these strings converges to the
  // asymptote only as 1/sqrt(log 1/lambda); 10^4 terms leave a residual
  // error of a few hundredths, which the reported width must cover.
  for (auto [e, exact] : {std::pair{make_infinite_order(2, 1.0 / 3.0),
                                    std::log(2.0) / std::log(3.0)},
                          std::pair{make_infinite_order(3, 0.2),
                                    std::log(3.0) / std::log(5.0)}}) {
    DimensionEstimate est = estimate_abscissa(e, 10000);
    CHECK(std::abs(est.value - exact) <= 0.08);
    CHECK(std::abs(est.value - exact) <= est.confidenceWidth);
    CHECK(est.confidenceWidth <= 0.25);
  }
}

TEST_CASE("prefix regression on a constructed string") {
  PrescribedString p = construct(0.2, 0.5, 0.5);
  DimensionEstimate est = estimate_abscissa(p.expr, 10000);
  CHECK(std::abs(est.value - 0.5) <= 0.03);
  CHECK(std::abs(est.value - 0.5) <= est.confidenceWidth);
}

TEST_CASE("finite strings regress to zero") {
  DimensionEstimate est = estimate_abscissa(make_explicit({0.5, 0.25, 0.125}), 10000);
  CHECK(est.value == 0.0);
  CHECK(est.confidenceWidth == 0.0);
}

TEST_CASE("estimator validates nTerms") {
  CHECK_THROWS_AS(estimate_abscissa(make_cantor_string(), 50), ValidationError);
}

TEST_CASE("derivations are reported") {
  CHECK_FALSE(exact_abscissa(make_gen_cantor(2, 1.0 / 3.0)).derivation.empty());
  CHECK_FALSE(estimate_abscissa(make_cantor_string(), 1000).derivation.empty());
}
