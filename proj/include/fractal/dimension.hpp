#pragma once

#include <cstdint>
#include <string>

#include "fractal/string_expr.hpp"

namespace fractal {

// Abscissa of convergence of Σ ℓ_j^s (the Minkowski dimension of the realized
// set for infinite strings).
struct DimensionEstimate {
  enum class Method { ExactSymbolic, PrefixRegression };

  double value = 0.0;
  Method method = Method::ExactSymbolic;
  double confidenceWidth = 0.0;  // 0 for exact-symbolic
  std::int64_t termsUsed = 0;    // regression only
  std::string derivation;        // rule or estimator description
};

// Structural computation: finite strings give 0; geometric atoms give
// log_{1/a} m; self-similar strings solve the Moran equation Σ r_j^σ = 1 by
// bisection (to 1e−12); unions take the supremum of the parts (scheduled
// tails certify theirs); Scale leaves the value unchanged; Power(e, n) keeps
// the base abscissa (derived rule: at real σ the n-th power of the series
// converges iff the series does); series lifts keep the inner abscissa for
// entire families, and for radius-1 families (geometric/log) take
// max(inner abscissa, the root of ζ_inner(σ) = 1).
DimensionEstimate exact_abscissa(const StringExpr& e);

// Regression estimate from an enumerated prefix: sample the counting
// staircase N(λ) = #{j : ℓ_j ≥ λ} on a geometric λ grid spanning the
// enumerated range and regress ln N on ln(1/λ); confidenceWidth is twice the
// OLS standard error of the slope.  Finite strings exhausted before nTerms
// return 0 with width 0.
DimensionEstimate estimate_abscissa(const StringExpr& e, std::int64_t nTerms);

}  // namespace fractal
