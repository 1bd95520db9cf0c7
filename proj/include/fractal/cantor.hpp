#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fractal/errors.hpp"

namespace fractal {

// Parameters of a generalized Cantor string: m ≥ 2 equal ratios a with
// m·a < 1.  Dimension D = log_{1/a} m, oscillatory period p = 2π/ln(1/a).
struct CantorParams {
  std::int64_t m = 2;
  double a = 1.0 / 3.0;

  // Throws ValidationError unless m ≥ 2, 0 < a, m·a < 1.
  void validate() const;

  double dimension() const;     // ln m / ln(1/a)
  double period() const;        // 2π / ln(1/a)
  double total_length() const;  // 1/(1−m·a), the empty word included
};

// Vertical lattice of singular points {realPart + i·period·Z} with a kind tag.
struct SingularityLattice {
  enum class Kind { Pole, Essential };

  double realPart = 0.0;
  double period = 0.0;
  Kind kind = Kind::Pole;
  std::int64_t poleOrder = 1;  // meaningful for Kind::Pole
  std::string label;           // human-readable origin, e.g. "gencantor(2,1/3)"

  // Lattice point nearest to s.
  std::complex<double> nearest(std::complex<double> s) const;
  // All lattice points inside [reMin,reMax]×[imMin,imMax].
  std::vector<std::complex<double>> points_in(double reMin, double reMax,
                                              double imMin, double imMax) const;
};

// (1 − m·a^s)^{−n}.  Throws SingularityError when |1 − m·a^s| < guard
// (default 1e−12), reporting the nearest lattice point.
std::complex<double> closed_form_zeta(const CantorParams& p, std::int64_t n,
                                      std::complex<double> s,
                                      double guard = 1e-12);

// The middle-third Cantor string: 1/(3^s − 2) = 3^{−s}·closed_form_zeta((2,1/3),1,s).
std::complex<double> cantor_string_zeta(std::complex<double> s,
                                        double guard = 1e-12);

// 1/(1 − Σ r_j^s) for a self-similar string with ratios Σ r_j < 1.
std::complex<double> self_similar_zeta(const std::vector<double>& ratios,
                                       std::complex<double> s,
                                       double guard = 1e-12);

// Lattice through (log_{1/a} m, 2π/ln(1/a)): Pole(order) for finite order,
// Essential when order is absent (infinite-order string).
SingularityLattice singularity_lattice(const CantorParams& p,
                                       std::optional<std::int64_t> order);

// |L^(m,a)_inf|_1 = exp(1/(1−m·a)) − 1; always > e − 1.
double infinite_order_length(const CantorParams& p);

// Principal Laurent coefficient of (1 − m·a^s)^{−n} at the lattice point
// s_j = D + i·j·p: the coefficient of (s − s_j)^{−n} equals (1/ln(1/a))^n,
// independent of j.  (The denominator's derivative is m·a^s·ln(1/a), which is
// ln(1/a) on the lattice where m·a^{s_j} = 1.)  The value is real; the complex
// return type matches the numeric-limit machinery it is checked against.
std::complex<double> laurent_principal(const CantorParams& p, std::int64_t n,
                                       std::int64_t j = 0);

// Numerically recovers the principal coefficient as the limit
// lim_{h→0} ((h·dir)/(1 − m·a^{s_j + h·dir}))^n by Richardson extrapolation
// with step-halving (ratio 1/2), `levels` tableau levels and initial step h0.
// `direction` is a unit complex number; the limit is direction-independent,
// which tests exercise with ±1 and ±i.
std::complex<double> laurent_principal_richardson(
    const CantorParams& p, std::int64_t n, std::int64_t j,
    std::complex<double> direction, double h0 = 1e-2, int levels = 6);

}  // namespace fractal
