#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "fractal/cantor.hpp"
#include "fractal/string_expr.hpp"

namespace fractal {

// Options for construct(); defaults follow the canonical schedule.
struct ConstructOptions {
  double theta = 0.5;        // geometric approach rate of D_k → dInfinity
  std::int64_t mStart = 2;   // m_k = mStart + (k−1)
  // When the target D is an integer boundary case the construction is
  // rejected; epsilonOffset > 0 instead nudges targets inward by that amount.
  double epsilonOffset = 0.0;
};

// A bounded fractal string with prescribed dimension data:
//  - essential singularities exactly on ∪_k (D_k + i·(2π/ln(1/a_k))·Z),
//    accumulating on the vertical line Re s = dInfinity (a natural barrier);
//  - abscissa of convergence D (via the extra atom when d1 < D);
//  - core total length exactly 1.
struct PrescribedString {
  double dInfinity = 0.0;
  double d1 = 0.0;
  double d = 0.0;
  ConstructOptions options;

  // ⊔_k (2^{−k}/L_k)·(infinite-order part k); carries the schedule.
  StringExpr core;
  // Present when d1 < d: a generalized Cantor string with simple poles on
  // the lattice through Re s = d.
  std::optional<CantorParams> extraAtom;
  // The full string: core alone, or core ⊔ extra atom.
  StringExpr expr;

  const InfinitePartSchedule& schedule() const;
};

// Builds the string for targets 0 ≤ dInfinity < d1 ≤ d < 1.
// Throws ValidationError when the inequalities fail or d = 1 (the
// construction degenerates at the endpoint; use epsilonOffset to nudge).
PrescribedString construct(double dInfinity, double d1, double d,
                           const ConstructOptions& options = {});

// A singular point of the prescribed string's zeta function.
struct SingularPoint {
  std::complex<double> s;
  SingularityLattice::Kind kind = SingularityLattice::Kind::Essential;
  std::int64_t latticeIndex = 0;  // k for core lattices, 0 for the extra atom
};

// All singular points inside the closed window, sorted by (Re, Im).
// The window must satisfy reMin > dInfinity (left of that the lattice
// accumulates and the list would be infinite).
std::vector<SingularPoint> singularities_in_window(const PrescribedString& p,
                                                   double reMin, double reMax,
                                                   double imMin, double imMax);

// The prescribed abscissae, exact by the construction.
struct AbscissaReport {
  enum class Exactness { ExactByConstruction, NumericEstimate };

  double dPar = 0.0;     // abscissa of partial (factor-wise) continuation = dInfinity
  double dMer = 0.0;     // abscissa of meromorphic continuation = d1
  double dAbs = 0.0;     // abscissa of absolute convergence = d
  double barrier = 0.0;  // the vertical accumulation line Re s = dInfinity
  Exactness parExactness = Exactness::ExactByConstruction;
  Exactness merExactness = Exactness::ExactByConstruction;
  Exactness absExactness = Exactness::ExactByConstruction;
};

AbscissaReport report(const PrescribedString& p);

// Human-readable construction report (parameters of the first parts,
// lattice data, totals); also serialized by the JSON layer.
struct ConstructionReport {
  struct PartInfo {
    std::int64_t k = 0;
    std::int64_t m = 0;
    double dim = 0.0;
    double a = 0.0;         // 0 when underflowed
    double partLength = 0.0;
    double weight = 0.0;
    double period = 0.0;
  };
  double dInfinity = 0.0, d1 = 0.0, d = 0.0;
  double coreTotalLength = 1.0;  // exact by the weight normalization
  std::vector<PartInfo> parts;   // first few parts
  std::optional<CantorParams> extraAtom;
  double extraAtomDimension = 0.0;
};

ConstructionReport construction_report(const PrescribedString& p,
                                       std::int64_t parts = 8);

}  // namespace fractal
