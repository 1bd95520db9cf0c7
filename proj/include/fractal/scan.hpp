#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fractal/prescribe.hpp"
#include "fractal/string_expr.hpp"

namespace fractal {

struct Window {
  double reMin = 0.0, reMax = 1.0, imMin = 0.0, imMax = 1.0;
};

enum class CellMarker { Regular, SingularityProximal, OutsideHalfplane };

struct ScanCell {
  double re = 0.0, im = 0.0;
  double zetaRe = 0.0, zetaIm = 0.0;  // NaN for non-regular cells
  double absZeta = 0.0, logAbsZeta = 0.0;
  CellMarker marker = CellMarker::Regular;
};

struct ScanGrid {
  Window window;
  std::int64_t nRe = 2, nIm = 2;
  double barrier = 0.0;   // cells with re ≤ barrier are outside-halfplane
  bool clipped = false;   // true when the window crossed the barrier
  std::vector<ScanCell> cells;  // row-major: im outer, re inner
  // Lattice points inside the window: (re, im, kind-label).
  struct LatticePoint {
    double re = 0.0, im = 0.0;
    std::string kind;
  };
  std::vector<LatticePoint> singularities;
};

// Evaluates the zeta on the grid (rows in parallel, output order fixed).
// Cell markers: outside-halfplane when re ≤ barrier; singularity-proximal
// when a lattice point lies within half a cell spacing (per axis) of the
// sample point; regular otherwise.  Non-regular cells carry NaN values.
ScanGrid scan_construction(const PrescribedString& p, const Window& w,
                           std::int64_t nRe, std::int64_t nIm,
                           double tol = 1e-10);
ScanGrid scan_expression(const StringExpr& e, const Window& w,
                         std::int64_t nRe, std::int64_t nIm,
                         double tol = 1e-10);

// CSV: header `re,im,zeta_re,zeta_im,abs,log_abs,marker`, one row per cell,
// then a `singularities` block (`re,im,kind` rows).  Floats use 17
// significant digits.
void write_scan_csv(std::ostream& os, const ScanGrid& g);
void write_scan_json(std::ostream& os, const ScanGrid& g);

}  // namespace fractal
