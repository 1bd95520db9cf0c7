#include "fractal/scan.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>
#include <vector>

#include "fractal/distance_zeta.hpp"
#include "fractal/errors.hpp"
#include "fractal/zeta_eval.hpp"

namespace fractal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate_grid(const Window& w, std::int64_t nRe, std::int64_t nIm) {
  if (!(std::isfinite(w.reMin) && std::isfinite(w.reMax) &&
        std::isfinite(w.imMin) && std::isfinite(w.imMax)))
    throw ValidationError("scan: window bounds must be finite");
  if (!(w.reMin < w.reMax) || !(w.imMin < w.imMax))
    throw ValidationError("scan: window must have positive extent");
  if (nRe < 2 || nIm < 2)
    throw ValidationError("scan: resolution must be at least 2x2");
  if (nRe * nIm > 4000000)
    throw ValidationError("scan: resolution exceeds 4e6 cells");
}

// Evaluation callback: value of the zeta at s, or a thrown DomainError.
using EvalFn = std::function<std::complex<double>(std::complex<double>)>;

ScanGrid run_scan(const Window& w, std::int64_t nRe, std::int64_t nIm,
                  double barrier,
                  std::vector<ScanGrid::LatticePoint> singularities,
                  const EvalFn& eval) {
  ScanGrid g;
  g.window = w;
  g.nRe = nRe;
  g.nIm = nIm;
  g.barrier = barrier;
  g.clipped = w.reMin <= barrier;
  g.singularities = std::move(singularities);
  g.cells.resize(static_cast<std::size_t>(nRe * nIm));

  const double dRe = (w.reMax - w.reMin) / static_cast<double>(nRe - 1);
  const double dIm = (w.imMax - w.imMin) / static_cast<double>(nIm - 1);

  for (std::int64_t j = 0; j < nIm; ++j)
    for (std::int64_t i = 0; i < nRe; ++i) {
      ScanCell& c = g.cells[static_cast<std::size_t>(j * nRe + i)];
      c.re = w.reMin + static_cast<double>(i) * dRe;
      c.im = w.imMin + static_cast<double>(j) * dIm;
      if (c.re <= barrier) c.marker = CellMarker::OutsideHalfplane;
    }

  // A cell is singularity-proximal when a lattice point lies within half a
  // cell spacing of it on both axes (at most two candidate indices per axis).
  const double halfRe = 0.5 * dRe + 1e-15;
  const double halfIm = 0.5 * dIm + 1e-15;
  for (const ScanGrid::LatticePoint& pt : g.singularities) {
    const auto i0 = std::llround((pt.re - w.reMin) / dRe);
    const auto j0 = std::llround((pt.im - w.imMin) / dIm);
    for (std::int64_t dj = -1; dj <= 1; ++dj)
      for (std::int64_t di = -1; di <= 1; ++di) {
        const std::int64_t i = i0 + di, j = j0 + dj;
        if (i < 0 || i >= nRe || j < 0 || j >= nIm) continue;
        ScanCell& c = g.cells[static_cast<std::size_t>(j * nRe + i)];
        if (c.marker == CellMarker::OutsideHalfplane) continue;
        if (std::abs(c.re - pt.re) <= halfRe && std::abs(c.im - pt.im) <= halfIm)
          c.marker = CellMarker::SingularityProximal;
      }
  }

  // Evaluate regular cells, rows handed out atomically; failures downgrade
  // the cell to singularity-proximal.
  std::atomic<std::int64_t> nextRow{0};
  std::vector<std::exception_ptr> errors(
      std::max<std::size_t>(1, std::thread::hardware_concurrency()));
  auto worker = [&](std::size_t slot) {
    try {
      for (;;) {
        const std::int64_t j = nextRow.fetch_add(1);
        if (j >= nIm) return;
        for (std::int64_t i = 0; i < nRe; ++i) {
          ScanCell& c = g.cells[static_cast<std::size_t>(j * nRe + i)];
          if (c.marker != CellMarker::Regular) {
            c.zetaRe = c.zetaIm = c.absZeta = c.logAbsZeta = kNaN;
            continue;
          }
          try {
            const std::complex<double> z = eval({c.re, c.im});
            c.zetaRe = z.real();
            c.zetaIm = z.imag();
            c.absZeta = std::abs(z);
            c.logAbsZeta = std::log(c.absZeta);
          } catch (const DomainError&) {
            c.marker = CellMarker::SingularityProximal;
            c.zetaRe = c.zetaIm = c.absZeta = c.logAbsZeta = kNaN;
          }
        }
      }
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };

  const std::size_t nThreads = std::min<std::size_t>(
      errors.size(), static_cast<std::size_t>(nIm));
  std::vector<std::thread> pool;
  pool.reserve(nThreads);
  for (std::size_t t = 0; t < nThreads; ++t) pool.emplace_back(worker, t);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return g;
}

std::string part_kind(SingularityLattice::Kind kind, std::int64_t index) {
  std::string s =
      kind == SingularityLattice::Kind::Pole ? "pole" : "essential";
  if (index > 0) s += "-part-" + std::to_string(index);
  return s;
}

void write_double(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

const char* marker_name(CellMarker m) {
  switch (m) {
    case CellMarker::Regular: return "regular";
    case CellMarker::SingularityProximal: return "singularity-proximal";
    case CellMarker::OutsideHalfplane: return "outside-halfplane";
  }
  return "regular";
}

// JSON number with NaN/inf mapped to null (JSON has no non-finite literals).
void write_json_number(std::ostream& os, double v) {
  if (!std::isfinite(v)) {
    os << "null";
    return;
  }
  write_double(os, v);
}

}  // namespace

ScanGrid scan_construction(const PrescribedString& p, const Window& w,
                           std::int64_t nRe, std::int64_t nIm, double tol) {
  validate_grid(w, nRe, nIm);
  const double barrier = p.dInfinity;

  // The lattice family accumulates on the barrier, so clip the enumeration
  // just right of it and back off when the window would hold too many points.
  std::vector<ScanGrid::LatticePoint> points;
  double margin = 1e-9 * (1.0 + std::abs(barrier));
  for (;;) {
    const double lo = std::max(w.reMin, barrier + margin);
    if (lo > w.reMax) break;
    try {
      for (const SingularPoint& pt :
           singularities_in_window(p, lo, w.reMax, w.imMin, w.imMax))
        points.push_back({pt.s.real(), pt.s.imag(),
                          part_kind(pt.kind, pt.latticeIndex)});
      break;
    } catch (const ValidationError&) {
      margin *= 10.0;
    }
  }

  return run_scan(w, nRe, nIm, barrier, std::move(points),
                  [&](std::complex<double> s) {
                    return eval_constructed(p, s, tol).value;
                  });
}

ScanGrid scan_expression(const StringExpr& e, const Window& w,
                         std::int64_t nRe, std::int64_t nIm, double tol) {
  validate_grid(w, nRe, nIm);
  const double barrier = 0.0;  // plain strings evaluate for Re s > 0

  std::vector<ScanGrid::LatticePoint> points;
  for (const SingularityLattice& lat : expression_lattices(e)) {
    const std::string kind =
        lat.kind == SingularityLattice::Kind::Pole ? "pole" : "essential";
    if (!(lat.period > 0.0)) {
      // A single real singular point (self-similar principal pole).
      if (lat.realPart >= w.reMin && lat.realPart <= w.reMax &&
          w.imMin <= 0.0 && w.imMax >= 0.0)
        points.push_back({lat.realPart, 0.0, kind});
      continue;
    }
    try {
      for (const std::complex<double>& s :
           lat.points_in(w.reMin, w.reMax, w.imMin, w.imMax))
        points.push_back({s.real(), s.imag(), kind});
    } catch (const ValidationError&) {
      // Too dense to enumerate at this resolution; markers stay best-effort.
    }
  }

  return run_scan(w, nRe, nIm, barrier, std::move(points),
                  [&](std::complex<double> s) {
                    return eval_zeta(e, s, tol).value;
                  });
}

void write_scan_csv(std::ostream& os, const ScanGrid& g) {
  os << "re,im,zeta_re,zeta_im,abs,log_abs,marker\n";
  for (const ScanCell& c : g.cells) {
    write_double(os, c.re);
    os << ',';
    write_double(os, c.im);
    os << ',';
    write_double(os, c.zetaRe);
    os << ',';
    write_double(os, c.zetaIm);
    os << ',';
    write_double(os, c.absZeta);
    os << ',';
    write_double(os, c.logAbsZeta);
    os << ',' << marker_name(c.marker) << '\n';
  }
  os << "singularities\nre,im,kind\n";
  for (const ScanGrid::LatticePoint& pt : g.singularities) {
    write_double(os, pt.re);
    os << ',';
    write_double(os, pt.im);
    os << ',' << pt.kind << '\n';
  }
}

void write_scan_json(std::ostream& os, const ScanGrid& g) {
  os << "{\n  \"window\": {\"reMin\": ";
  write_double(os, g.window.reMin);
  os << ", \"reMax\": ";
  write_double(os, g.window.reMax);
  os << ", \"imMin\": ";
  write_double(os, g.window.imMin);
  os << ", \"imMax\": ";
  write_double(os, g.window.imMax);
  os << "},\n  \"nRe\": " << g.nRe << ",\n  \"nIm\": " << g.nIm
     << ",\n  \"barrier\": ";
  write_double(os, g.barrier);
  os << ",\n  \"clipped\": " << (g.clipped ? "true" : "false")
     << ",\n  \"cells\": [\n";
  for (std::size_t k = 0; k < g.cells.size(); ++k) {
    const ScanCell& c = g.cells[k];
    os << "    {\"re\": ";
    write_json_number(os, c.re);
    os << ", \"im\": ";
    write_json_number(os, c.im);
    os << ", \"zeta_re\": ";
    write_json_number(os, c.zetaRe);
    os << ", \"zeta_im\": ";
    write_json_number(os, c.zetaIm);
    os << ", \"abs\": ";
    write_json_number(os, c.absZeta);
    os << ", \"log_abs\": ";
    write_json_number(os, c.logAbsZeta);
    os << ", \"marker\": \"" << marker_name(c.marker) << "\"}";
    os << (k + 1 < g.cells.size() ? ",\n" : "\n");
  }
  os << "  ],\n  \"singularities\": [\n";
  for (std::size_t k = 0; k < g.singularities.size(); ++k) {
    const ScanGrid::LatticePoint& pt = g.singularities[k];
    os << "    {\"re\": ";
    write_json_number(os, pt.re);
    os << ", \"im\": ";
    write_json_number(os, pt.im);
    os << ", \"kind\": \"" << pt.kind << "\"}";
    os << (k + 1 < g.singularities.size() ? ",\n" : "\n");
  }
  os << "  ]\n}\n";
}

}  // namespace fractal
