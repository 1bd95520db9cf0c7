#include "fractal/prescribe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fractal/errors.hpp"

namespace fractal {
namespace {

void check_finite(double x, const char* name) {
  if (!std::isfinite(x))
    throw ValidationError(std::string("construct: ") + name + " must be finite");
}

SingularityLattice part_lattice(const InfinitePartSchedule& sched,
                                std::int64_t k) {
  // Built from log-space data so deep parts (a_k below double range) still
  // have a usable lattice description.
  SingularityLattice lat;
  lat.realPart = sched.dim(k);
  lat.period = -2.0 * std::numbers::pi / sched.log_a(k);
  lat.kind = SingularityLattice::Kind::Essential;
  lat.label = "part " + std::to_string(k);
  return lat;
}

}  // namespace

const InfinitePartSchedule& PrescribedString::schedule() const {
  const auto* u = core.get_if<WeightedUnionString>();
  if (!u || !u->schedule)
    throw DomainError("PrescribedString: core does not carry a schedule");
  return *u->schedule;
}

PrescribedString construct(double dInfinity, double d1, double d,
                           const ConstructOptions& options) {
  check_finite(dInfinity, "dInfinity");
  check_finite(d1, "d1");
  check_finite(d, "d");
  if (!(options.theta > 0.0 && options.theta < 1.0))
    throw ValidationError("construct: options.theta must lie in (0,1)");
  if (options.mStart < 2)
    throw ValidationError("construct: options.mStart must be >= 2");
  if (d >= 1.0) {
    if (options.epsilonOffset > 0.0 && d == 1.0) {
      d = 1.0 - options.epsilonOffset;
      d1 = std::min(d1, d);
    } else {
      throw ValidationError(
          "construct: need d < 1 — dimension exactly 1 is not realizable by "
          "generalized-Cantor atoms (m*a < 1 keeps every atom dimension below "
          "1); set options.epsilonOffset > 0 to nudge the target inward");
    }
  }
  if (dInfinity < 0.0) throw ValidationError("construct: need dInfinity >= 0");
  if (!(dInfinity < d1)) throw ValidationError("construct: need dInfinity < d1");
  if (!(d1 <= d)) throw ValidationError("construct: need d1 <= d");

  const InfinitePartSchedule sched{dInfinity, d1, options.theta, options.mStart};
  StringExpr core = make_weighted_union({}, {}, sched);
  std::optional<CantorParams> extraAtom;
  StringExpr expr = core;
  if (d1 < d) {
    CantorParams atom;
    atom.m = 2;
    atom.a = std::exp2(-1.0 / d);  // log_{1/a} 2 = d, and 2a = 2^{1-1/d} < 1
    atom.validate();
    extraAtom = atom;
    expr = make_union({core, make_gen_cantor(atom.m, atom.a)});
  }
  return PrescribedString{dInfinity, d1,   d,        options,
                          std::move(core), extraAtom, std::move(expr)};
}

std::vector<SingularPoint> singularities_in_window(const PrescribedString& p,
                                                   double reMin, double reMax,
                                                   double imMin, double imMax) {
  if (!std::isfinite(reMin) || !std::isfinite(reMax) || !std::isfinite(imMin) ||
      !std::isfinite(imMax))
    throw ValidationError("singularities_in_window: window must be bounded");
  if (!(reMin > p.dInfinity))
    throw ValidationError(
        "singularities_in_window: window must stay right of the barrier "
        "Re s = dInfinity, where the singularities accumulate");

  std::vector<SingularPoint> out;
  const InfinitePartSchedule& sched = p.schedule();
  // D_k decreases to dInfinity < reMin, so finitely many parts contribute.
  for (std::int64_t k = 1; sched.dim(k) >= reMin; ++k) {
    const SingularityLattice lat = part_lattice(sched, k);
    for (std::complex<double> s : lat.points_in(reMin, reMax, imMin, imMax))
      out.push_back({s, SingularityLattice::Kind::Essential, k});
  }
  if (p.extraAtom) {
    const SingularityLattice lat = singularity_lattice(*p.extraAtom, 1);
    for (std::complex<double> s : lat.points_in(reMin, reMax, imMin, imMax))
      out.push_back({s, SingularityLattice::Kind::Pole, 0});
  }
  std::sort(out.begin(), out.end(), [](const SingularPoint& x, const SingularPoint& y) {
    if (x.s.real() != y.s.real()) return x.s.real() < y.s.real();
    return x.s.imag() < y.s.imag();
  });
  return out;
}

AbscissaReport report(const PrescribedString& p) {
  AbscissaReport r;
  r.dPar = p.dInfinity;
  r.dMer = p.d1;
  r.dAbs = p.d;
  r.barrier = p.dInfinity;
  return r;
}

ConstructionReport construction_report(const PrescribedString& p,
                                       std::int64_t parts) {
  if (parts < 1 || parts > 10000)
    throw ValidationError("construction_report: parts must lie in [1,10000]");
  ConstructionReport r;
  r.dInfinity = p.dInfinity;
  r.d1 = p.d1;
  r.d = p.d;
  r.coreTotalLength = 1.0;  // Σ_k 2^{-k}·L_k/L_k, exact
  const InfinitePartSchedule& sched = p.schedule();
  for (std::int64_t k = 1; k <= parts; ++k) {
    ConstructionReport::PartInfo info;
    info.k = k;
    info.m = sched.m(k);
    info.dim = sched.dim(k);
    info.a = sched.a(k);  // underflows to 0 for deep parts, by design
    info.partLength = sched.part_length(k);
    info.weight = sched.weight(k);
    info.period = -2.0 * std::numbers::pi / sched.log_a(k);
    r.parts.push_back(info);
  }
  r.extraAtom = p.extraAtom;
  r.extraAtomDimension = p.extraAtom ? p.extraAtom->dimension() : 0.0;
  return r;
}

}  // namespace fractal
