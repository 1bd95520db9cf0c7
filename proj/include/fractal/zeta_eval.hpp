#pragma once

#include <complex>
#include <cstdint>
#include <string>

#include "fractal/cantor.hpp"
#include "fractal/prescribe.hpp"
#include "fractal/string_expr.hpp"

namespace fractal {

// Result of a truncated zeta evaluation.  `errorBound` is a certified
// absolute bound on the truncation error (closed-form paths contribute a
// small floating-point allowance so the bound stays sound under re-evaluation
// at tighter tolerances); `certified` is false on the few paths where only a
// heuristic is available.
struct EvalResult {
  std::complex<double> value{0.0, 0.0};
  double errorBound = 0.0;
  std::int64_t termsUsed = 0;
  bool certified = true;
};

// Evaluates ζ_L(s) for an expression tree.  Preconditions: Re s > 0; for
// scheduled weighted unions additionally Re s > dInfinity.  Evaluations
// within `guard` (s-plane distance, default 1e−6) of a known singularity
// lattice point throw SingularityError; near-zero closed-form denominators
// (< 1e−12) do the same.
EvalResult eval_zeta(const StringExpr& e, std::complex<double> s,
                     double tol = 1e-10, double guard = 1e-6);

// Σ_{n≥1} (1 − m·a^s)^{−n} / (n!)^s with compensated summation, stopping when
// the certified remainder bound |q|^{N}/ (N!)^σ (valid once |q|/(N+1)^σ ≤ ½)
// falls below tol.  Requires Re s > 0.
EvalResult eval_infinite_order(const CantorParams& p, std::complex<double> s,
                               double tol = 1e-10, double guard = 1e-6);

// Evaluates the prescribed string's zeta for Re s > dInfinity: the extra atom
// closed form (if present) plus Σ_k w_k^s ζ_k(s), the part sum truncated with
// a certified geometric/factorial tail bound.
EvalResult eval_constructed(const PrescribedString& p, std::complex<double> s,
                            double tol = 1e-10, double guard = 1e-6);

// Closed disk in the s-plane.
struct Disk {
  std::complex<double> center{0.0, 0.0};
  double radius = 0.0;
};

// Certified lower bound ε > 0 on |1 − m_k·a_k^s| valid for every part index
// k ≥ 1 and every s in the disk.
struct EpsilonCertificate {
  Disk disk;
  double epsilon = 0.0;
  std::string caseTag;         // "a1", "a2", "b", or "c"
  std::string coveredIndices;  // always "all k >= 1"
};

// Computes the uniform denominator bound for the prescribed core on a closed
// disk.  The disk must lie in {Re s > dInfinity}, keep every core lattice
// point strictly outside, and meet at most one of the vertical lines
// Re s = D_k; otherwise ValidationError.  When the disk straddles exactly one
// line, that row's bound is a grid minimum (64×64 plus local refinement,
// scaled by a 0.9 safety factor); all other rows are covered by monotone
// closed-form bounds.
EpsilonCertificate epsilon_bound(const PrescribedString& p, const Disk& disk);

}  // namespace fractal
