#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fractal/prescribe.hpp"
#include "fractal/string_expr.hpp"

namespace fractal {

class GeometricSet;

// Canonical realization A_L = {a_k = Σ_{j≥k} ℓ_j} ∪ {0} ⊂ [0, |L|₁].
struct RealizationSet {
  StringExpr of;
};

// The set C^(m,a) ⊂ [0,1]: m sub-intervals of ratio a per level, separated by
// m−1 equal gaps.
struct GenCantorSet {
  std::int64_t m = 2;
  double a = 1.0 / 3.0;
};

// base × [0,1]^extraDims; base must be one-dimensional.
struct GrillSet {
  std::shared_ptr<const GeometricSet> base;
  int extraDims = 1;
};

// base × {0}^zeroDims (ambient embedding; distance adds the flat coordinates
// in quadrature).
struct EmbeddedFlatSet {
  std::shared_ptr<const GeometricSet> base;
  int zeroDims = 1;
};

// Union of parts sharing one ambient dimension.
struct UnionSetParts {
  std::vector<GeometricSet> parts;
};

class GeometricSet {
 public:
  using Node = std::variant<RealizationSet, GenCantorSet, GrillSet,
                            EmbeddedFlatSet, UnionSetParts>;

  explicit GeometricSet(Node node) : node_(std::make_shared<Node>(std::move(node))) {}

  const Node& node() const { return *node_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(node_.get());
  }

 private:
  std::shared_ptr<const Node> node_;
};

GeometricSet make_realization(StringExpr e);
GeometricSet make_gen_cantor_set(std::int64_t m, double a);
GeometricSet make_grill(GeometricSet base, int extraDims);
GeometricSet make_embedded_flat(GeometricSet base, int zeroDims);
GeometricSet make_union_set(std::vector<GeometricSet> parts);

int ambient_dimension(const GeometricSet& set);

// Axis-aligned box.
struct Box {
  std::vector<double> lo, hi;
  double volume() const;
};

// Exact-distance oracle for a geometric set, with realization prefixes
// materialized once at build time.  Realization depth: points are
// materialized until the remaining tail interval [0, a_K] is shorter than
// delta·1e−6 or a cap of 4·10⁶ points is reached; queries below a_K use the
// conservative surrogate min(x, a_K − x, ℓ_K/2) (an upper bound on the true
// distance — tail points are spaced at most ℓ_K apart and 0, a_K are both in
// the closure).
class DistanceField {
 public:
  static DistanceField build(const GeometricSet& set, double delta,
                             std::int64_t maxPoints = 4000000);

  double distance(const double* x, int n) const;
  const Box& hull() const { return hull_; }  // bounding box of the set itself
  int ambient() const { return ambient_; }

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
  Box hull_;
  int ambient_ = 1;
};

// Exact one-dimensional distance zeta of a realization for Re s > D(e):
// ζ(s) = (2^{1−s}/s)·ζ_L(s) + 2δ^s/s.  Requires delta > ℓ₁/2 (so each gap
// contributes its full two half-gap integrals) and s ≠ 0.
std::complex<double> dzeta_line(const StringExpr& e, std::complex<double> s,
                                double delta, double tol = 1e-12);

struct MonteCarloResult {
  std::complex<double> value{0.0, 0.0};
  double standardError = 0.0;
  std::int64_t nSamples = 0;
  std::uint64_t seed = 0;
  std::string warning;  // nonempty when the integrability heuristic trips
};

// ∫_{A_δ} d(x,A)^{s−N} dx by stratified uniform sampling over the bounding
// box of A_δ (64 strata along the first coordinate, per-stratum derived
// seeds; the budget is rounded up to a multiple of the stratum count).
// Samples are tallied into geometric distance bands d ∈ (δρ^{j+1}, δρ^j]
// with ρ matched to the set's self-similar scale; the empirical sum is
// truncated at the deepest well-populated band and the remaining tail is
// completed by geometric extrapolation of the measured band masses, which
// keeps the estimator's variance finite even when Re s − N is inside the
// critical strip (−codim, 0) where the raw integrand has no second moment.
// standardError combines the CLT error of the truncated sum with a
// residual-based error for the extrapolated tail.  Deterministic for a fixed
// seed regardless of execution order.
MonteCarloResult dzeta_monte_carlo(const GeometricSet& set,
                                   std::complex<double> s, double delta,
                                   std::int64_t nSamples, std::uint64_t seed);

struct GrillZetaResult {
  std::complex<double> value{0.0, 0.0};
  double standardError = 0.0;             // from the Monte Carlo companion term
  std::complex<double> exactPart{0.0, 0.0};  // shift + boundary + edge terms
  MonteCarloResult flatPart;              // the ζ_{A×{0}^{N−1}} estimate
};

// Distance zeta of the grill A_L × [0,1]^{N−1} ⊂ ℝ^N via the shift identity:
//   ζ_grill(s) = ζ_flat(s) + (2^{N−s}/(s−N+1))·ζ_L(s−N+1)
//                + 2·δ^{s−N+1}/(s−N+1) + Σ_{j=1}^{N−2} j·C(N−1,j)·ω_j·I_j(s),
// where ζ_flat is the distance zeta of A_L × {0}^{N−1} (estimated by Monte
// Carlo), ω_j is the volume of the unit j-ball and I_j collects the edge
// contributions of the tube (one-dimensional integrals over the gap
// structure, evaluated by Gauss quadrature; the sum is empty for N = 2).
// Requires Re s > D(base) + N − 1, delta > ℓ₁/2, s ≠ N−1.
GrillZetaResult dzeta_grill(const StringExpr& base, int ambientN,
                            std::complex<double> s, double delta,
                            std::int64_t mcBudget,
                            std::uint64_t seed = 0x9e3779b9u);

struct SetConstructOptions {
  double theta = 0.5;
  std::int64_t mStart = 2;
  // Integer D₁ or D targets are rejected unless epsilonOffset > 0, in which
  // case the fractional target is nudged inward by that amount.
  double epsilonOffset = 0.0;
};

// A set in ℝ^N whose distance zeta has prescribed abscissae.
struct PrescribedSet {
  double dInfinity = 0.0, d1 = 0.0, d = 0.0;
  int ambientN = 1;
  GeometricSet set;
  std::string construction;  // which case applied, with component summary
};

// Builds a bounded set A ⊂ ℝ^N with D_par(ζ_A) = dInfinity,
// D_mer(ζ_A) = d1, D(ζ_A) = d.  Requires 0 ≤ dInfinity < d1 ≤ d < N.
// Case (i) N=1: realization of the prescribed string.  Case (ii) (all three
// targets in [N−1, N)): grill of the shifted-target string.  Case (iii):
// union of a flat-embedded grill (barrier part), an infinite-order grill
// (d1 part) and a Cantor-set grill (d part).
PrescribedSet construct_set(double dInfinity, double d1, double d, int ambientN,
                            const SetConstructOptions& options = {});

// Structural singularity lattices of a string's zeta: the atom lattices, the
// scheduled-part lattices of a construction core (first parts, down to the
// barrier), the principal pole of a self-similar string.  Best-effort: entire
// strings yield an empty list.
std::vector<SingularityLattice> expression_lattices(const StringExpr& e);

// Singularity bookkeeping for grills: the base lattice translated by
// extraDims, plus the isolated point {extraDims} exactly when 0 is a base
// singularity.
struct ShiftedSingularities {
  std::vector<SingularityLattice> lattices;  // realParts already shifted
  std::vector<double> isolatedPoints;
};

ShiftedSingularities set_singularities(const GeometricSet& set);

}  // namespace fractal
