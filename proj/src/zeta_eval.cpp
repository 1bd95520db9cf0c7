#include "fractal/zeta_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <vector>

namespace fractal {
namespace {

constexpr double kDenGuard = 1e-12;
constexpr double kOverflowCeiling = 1e290;
// Hard stop for runaway series (evaluations deep in a resonance band or very
// close to the barrier genuinely need astronomically many terms; refuse
// rather than hang).
constexpr std::int64_t kMaxSeriesTerms = 20'000'000;
constexpr std::int64_t kMaxLiftOrder = 100'000;
constexpr std::int64_t kMaxScheduleParts = 100'000;

// Compensated complex accumulator (Neumaier variant of Kahan summation).
struct Kahan {
  std::complex<double> sum{0.0, 0.0};
  std::complex<double> comp{0.0, 0.0};

  void add(std::complex<double> t) {
    const std::complex<double> y = t - comp;
    const std::complex<double> u = sum + y;
    comp = (u - sum) - y;
    sum = u;
  }
};

double roundoff_allowance(double absAccum) {
  return 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + absAccum);
}

std::complex<double> cpow_int(std::complex<double> z, std::int64_t n) {
  std::complex<double> acc{1.0, 0.0};
  while (n > 0) {
    if (n & 1) acc *= z;
    z *= z;
    n >>= 1;
  }
  return acc;
}

double lattice_distance(double realPart, double period, std::complex<double> s) {
  const double k = std::round(s.imag() / period);
  return std::hypot(s.real() - realPart, s.imag() - k * period);
}

[[noreturn]] void throw_singularity(double realPart, double period,
                                    std::complex<double> s, const char* label) {
  const double k = std::round(s.imag() / period);
  const std::complex<double> q{realPart, k * period};
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "evaluation at s = %.17g%+.17gi is inside the guard region of "
                "%s; nearest singular point %.17g%+.17gi",
                s.real(), s.imag(), label, q.real(), q.imag());
  throw SingularityError(q, buf);
}

// Σ_{n≥1} q^n/(n!)^s, stopping once the geometric majorant of the tail
// (ratios |q|/(n+1)^σ decrease, so |t_n|·r/(1−r) bounds it whenever r < 1)
// drops below tol.
EvalResult inf_order_series(std::complex<double> q, std::complex<double> s,
                            double tol) {
  const double sigma = s.real();
  const double qAbs = std::abs(q);
  Kahan acc;
  double sumAbs = 0.0;
  std::complex<double> term = q;  // n = 1
  for (std::int64_t n = 1;; ++n) {
    acc.add(term);
    sumAbs += std::abs(term);
    if (!(sumAbs < kOverflowCeiling))
      throw DomainError(
          "infinite-order zeta exceeds double range (essential-singularity "
          "blow-up); evaluate further from the lattice");
    const double r = qAbs * std::pow(static_cast<double>(n + 1), -sigma);
    if (r < 1.0) {
      const double tail = std::abs(term) * r / (1.0 - r);
      if (tail <= tol)
        return {acc.sum, tail + roundoff_allowance(sumAbs), n, true};
    }
    if (n >= kMaxSeriesTerms)
      throw DomainError(
          "infinite-order zeta series did not converge within the term "
          "budget (s too close to the barrier or a resonance band)");
    term *= q * std::exp(-s * std::log(static_cast<double>(n + 1)));
  }
}

// Same series over positive reals, returned as a certified upper bound
// (partial sum plus tail majorant).  Used for the schedule tail constant.
double series_upper_bound(double q, double sigma, std::int64_t* termsOut) {
  double sum = 0.0;
  double term = q;
  for (std::int64_t n = 1;; ++n) {
    sum += term;
    if (!(sum < kOverflowCeiling))
      throw DomainError("tail-constant series exceeds double range");
    const double r = q * std::pow(static_cast<double>(n + 1), -sigma);
    if (r < 1.0) {
      const double tail = term * r / (1.0 - r);
      if (tail <= 1e-6 * sum || tail < 1e-300) {
        if (termsOut) *termsOut += n;
        return sum + tail;
      }
    }
    if (n >= kMaxSeriesTerms)
      throw DomainError("tail-constant series did not converge within budget");
    term *= q * std::pow(static_cast<double>(n + 1), -sigma);
  }
}

// ζ of one infinite-order atom given in log form (logA = ln a stays finite
// even when a itself underflows).  dim/period describe its lattice.
EvalResult eval_inf_order_log(double m, double logA, std::complex<double> s,
                              double tol, double guard, const char* label) {
  if (!(s.real() > 0.0))
    throw DomainError(
        "infinite-order zeta: Re s must be > 0 (no continuation further left "
        "is known)");
  const double dim = -std::log(m) / logA;
  const double period = -2.0 * std::numbers::pi / logA;
  if (lattice_distance(dim, period, s) < guard)
    throw_singularity(dim, period, s, label);
  const std::complex<double> den = 1.0 - m * std::exp(s * logA);
  if (std::abs(den) < kDenGuard) throw_singularity(dim, period, s, label);
  return inf_order_series(1.0 / den, s, tol);
}

EvalResult eval_node(const StringExpr& e, std::complex<double> s, double tol,
                     double guard);

// ⊔_k (2^{−k}/L_k)·(part k): finitely many k are summed, the rest certified
// away by the appendix-style uniform bound 1 − m_{k+1}^{1−σ/D_{k+1}} on every
// deeper denominator plus the geometric decay of the weights.
EvalResult eval_scheduled(const InfinitePartSchedule& sched,
                          std::complex<double> s, double tol, double guard) {
  const double sigma = s.real();
  if (!(sigma > sched.dInfinity))
    throw DomainError(
        "scheduled union: Re s must exceed the singularity barrier at "
        "dInfinity; the zeta function does not continue past it");
  Kahan acc;
  double sumAbs = 0.0;
  double bound = 0.0;
  std::int64_t terms = 0;
  const double ln2 = std::numbers::ln2;
  for (std::int64_t k = 1; k <= kMaxScheduleParts; ++k) {
    char label[48];
    std::snprintf(label, sizeof label, "the essential lattice of part %lld",
                  static_cast<long long>(k));
    const double lnW = -static_cast<double>(k) * ln2 - std::log(sched.part_length(k));
    const std::complex<double> ws = std::exp(s * lnW);
    const double wAbs = std::exp(sigma * lnW);
    const double partTol = tol * std::exp2(-static_cast<double>(k + 2));
    const EvalResult inner =
        eval_inf_order_log(static_cast<double>(sched.m(k)), sched.log_a(k), s,
                           partTol / wAbs, guard, label);
    acc.add(ws * inner.value);
    sumAbs += std::abs(ws * inner.value);
    bound += wAbs * inner.errorBound;
    terms += inner.termsUsed;

    // Tail attempt: all parts i > k have D_i < σ, and m_i^{1−σ/D_i} is
    // decreasing in i, so eps lower-bounds every deeper denominator.
    const double dNext = sched.dim(k + 1);
    if (dNext < sigma) {
      const double eps =
          1.0 - std::exp(std::log(static_cast<double>(sched.m(k + 1))) *
                         (1.0 - sigma / dNext));
      if (eps > 0.0) {
        // Skip the attempt while the tail constant would overflow anyway:
        // ln C ≈ σ·(1/eps)^{1/σ}.
        const double lnQ = -std::log(eps);
        if (lnQ / sigma < 700.0 &&
            sigma * std::exp(lnQ / sigma) < 200.0) {
          const double c = series_upper_bound(1.0 / eps, sigma, &terms);
          const double tail = c * std::pow(std::numbers::e - 1.0, -sigma) *
                              std::exp2(-static_cast<double>(k + 1) * sigma) /
                              (1.0 - std::exp2(-sigma));
          if (tail <= tol * 0.5) {
            bound += tail;
            return {acc.sum, bound + roundoff_allowance(sumAbs), terms, true};
          }
        }
      }
    }
  }
  throw DomainError(
      "scheduled union did not reach its certified tail within the part "
      "budget (Re s too close to the barrier)");
}

EvalResult eval_lift(const SeriesLiftString& node, std::complex<double> s,
                     double tol, double guard) {
  const double sigma = s.real();
  const CoefficientFamily& fam = node.family;
  const EvalResult inner =
      eval_node(*node.inner, s, std::max(tol * 0.01, 1e-300), guard);
  const double delta = inner.errorBound;
  const double z = std::abs(inner.value) + delta;
  if (!fam.entire() && z >= fam.radius())
    throw DomainError("series lift (" + fam.name() +
                      "): |zeta| of the inner string reaches the coefficient "
                      "radius; the lifted series is uncertified there");

  Kahan acc;
  double sumAbs = 0.0;
  double innerErr = 0.0;
  std::complex<double> zp{1.0, 0.0};  // inner.value^n
  std::int64_t terms = inner.termsUsed;
  for (std::int64_t n = 0; n <= kMaxLiftOrder; ++n) {
    const double c = fam.coefficient(n);
    if (c > 0.0) {
      const std::complex<double> cs = std::exp(s * std::log(c));
      acc.add(cs * zp);
      sumAbs += std::abs(cs * zp);
      if (n > 0) {
        const double cSigma = std::exp(sigma * std::log(c));
        innerErr += cSigma * static_cast<double>(n) *
                    std::pow(z, static_cast<double>(n - 1)) * delta;
      }
      ++terms;
      if (!(sumAbs < kOverflowCeiling))
        throw DomainError("lifted zeta series exceeds double range");
    }
    const double tail = fam.tail_bound(n, sigma, z);
    if (tail <= tol * 0.5)
      return {acc.sum, tail + innerErr + roundoff_allowance(sumAbs), terms,
              true};
    zp *= inner.value;
  }
  throw DomainError("series lift (" + fam.name() +
                    ") did not certify within the order budget");
}

EvalResult eval_node(const StringExpr& e, std::complex<double> s, double tol,
                     double guard) {
  return std::visit(
      [&](const auto& node) -> EvalResult {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          Kahan acc;
          double sumAbs = 0.0;
          for (const LengthTerm& t : node.terms) {
            const std::complex<double> v =
                static_cast<double>(t.multiplicity) *
                std::exp(s * std::log(t.length));
            acc.add(v);
            sumAbs += std::abs(v);
          }
          return {acc.sum, roundoff_allowance(sumAbs),
                  static_cast<std::int64_t>(node.terms.size()), true};
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          const std::complex<double> v = self_similar_zeta(node.ratios, s);
          return {v, roundoff_allowance(std::abs(v)), 1, true};
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          const CantorParams p{node.m, node.a};
          const SingularityLattice lat = singularity_lattice(p, 1);
          if (lattice_distance(lat.realPart, lat.period, s) < guard)
            throw_singularity(lat.realPart, lat.period, s, lat.label.c_str());
          const std::complex<double> v = closed_form_zeta(p, 1, s);
          return {v, roundoff_allowance(std::abs(v)), 1, true};
        } else if constexpr (std::is_same_v<T, PowerString>) {
          const EvalResult base = eval_node(*node.base, s, tol, guard);
          const std::complex<double> v = cpow_int(base.value, node.n);
          const double outer = std::abs(base.value) + base.errorBound;
          const double bound =
              static_cast<double>(node.n) *
                  std::pow(outer, static_cast<double>(node.n - 1)) *
                  base.errorBound +
              roundoff_allowance(std::abs(v));
          return {v, bound, base.termsUsed, base.certified};
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          const CantorParams p{node.m, node.a};
          p.validate();
          return eval_inf_order_log(static_cast<double>(p.m), std::log(p.a), s,
                                    tol, guard,
                                    "the essential lattice of the "
                                    "infinite-order string");
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          const EvalResult inner = eval_node(*node.inner, s, tol, guard);
          const std::complex<double> g = std::exp(s * std::log(node.gamma));
          const std::complex<double> v = g * inner.value;
          return {v, std::abs(g) * inner.errorBound + roundoff_allowance(std::abs(v)),
                  inner.termsUsed, inner.certified};
        } else if constexpr (std::is_same_v<T, UnionString>) {
          Kahan acc;
          double bound = 0.0, sumAbs = 0.0;
          std::int64_t terms = 0;
          bool certified = true;
          const double partTol = tol / static_cast<double>(node.parts.size());
          for (const StringExpr& part : node.parts) {
            const EvalResult r = eval_node(part, s, partTol, guard);
            acc.add(r.value);
            sumAbs += std::abs(r.value);
            bound += r.errorBound;
            terms += r.termsUsed;
            certified = certified && r.certified;
          }
          return {acc.sum, bound + roundoff_allowance(sumAbs), terms, certified};
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          Kahan acc;
          double bound = 0.0, sumAbs = 0.0;
          std::int64_t terms = 0;
          bool certified = true;
          const double sigma = s.real();
          const double finiteShare =
              node.schedule ? tol * 0.5 : tol;
          if (!node.parts.empty()) {
            const double partTol =
                finiteShare / static_cast<double>(node.parts.size());
            for (std::size_t i = 0; i < node.parts.size(); ++i) {
              const double lnW = std::log(node.weights[i]);
              const std::complex<double> ws = std::exp(s * lnW);
              const double wAbs = std::exp(sigma * lnW);
              const EvalResult r =
                  eval_node(node.parts[i], s, partTol / wAbs, guard);
              acc.add(ws * r.value);
              sumAbs += std::abs(ws * r.value);
              bound += wAbs * r.errorBound;
              terms += r.termsUsed;
              certified = certified && r.certified;
            }
          }
          if (node.schedule) {
            const EvalResult r =
                eval_scheduled(*node.schedule, s, tol * 0.5, guard);
            acc.add(r.value);
            sumAbs += std::abs(r.value);
            bound += r.errorBound;
            terms += r.termsUsed;
            certified = certified && r.certified;
          }
          return {acc.sum, bound + roundoff_allowance(sumAbs), terms, certified};
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          return eval_lift(node, s, tol, guard);
        }
      },
      e.node());
}

// Grid minimum of |1 − m·a^s| over the closed disk: 64×64 square grid clipped
// to the disk, a dense boundary ring (the minimum-modulus principle puts the
// true minimum on the boundary when no zero lies inside), then shrinking
// 9×9 refinements around the best point.
double disk_denominator_min(double m, double logA, const Disk& disk) {
  const auto g = [&](std::complex<double> s) {
    return std::abs(1.0 - m * std::exp(s * logA));
  };
  double best = std::numeric_limits<double>::infinity();
  std::complex<double> bestPt = disk.center;
  const double r = disk.radius;
  for (int i = 0; i < 64; ++i) {
    for (int j = 0; j < 64; ++j) {
      const double x = disk.center.real() + r * (2.0 * i / 63.0 - 1.0);
      const double y = disk.center.imag() + r * (2.0 * j / 63.0 - 1.0);
      const std::complex<double> s{x, y};
      if (std::abs(s - disk.center) > r) continue;
      const double v = g(s);
      if (v < best) { best = v; bestPt = s; }
    }
  }
  for (int i = 0; i < 1024; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / 1024.0;
    const std::complex<double> s =
        disk.center + std::complex<double>{r * std::cos(phi), r * std::sin(phi)};
    const double v = g(s);
    if (v < best) { best = v; bestPt = s; }
  }
  double h = 2.0 * r / 63.0;
  for (int round = 0; round < 4; ++round) {
    const std::complex<double> c = bestPt;
    for (int i = -4; i <= 4; ++i) {
      for (int j = -4; j <= 4; ++j) {
        const std::complex<double> s = c + std::complex<double>{i * h / 4.0, j * h / 4.0};
        if (std::abs(s - disk.center) > r) continue;
        const double v = g(s);
        if (v < best) { best = v; bestPt = s; }
      }
    }
    h *= 0.2;
  }
  return best;
}

}  // namespace

EvalResult eval_zeta(const StringExpr& e, std::complex<double> s, double tol,
                     double guard) {
  if (!(s.real() > 0.0))
    throw DomainError("eval_zeta: Re s must be > 0");
  if (!(tol > 0.0) || !std::isfinite(tol))
    throw ValidationError("eval_zeta: tol must be a positive real");
  if (!(guard >= 0.0) || !std::isfinite(guard))
    throw ValidationError("eval_zeta: guard must be a nonnegative real");
  return eval_node(e, s, tol, guard);
}

EvalResult eval_infinite_order(const CantorParams& p, std::complex<double> s,
                               double tol, double guard) {
  p.validate();
  if (!(tol > 0.0) || !std::isfinite(tol))
    throw ValidationError("eval_infinite_order: tol must be a positive real");
  return eval_inf_order_log(static_cast<double>(p.m), std::log(p.a), s, tol,
                            guard,
                            "the essential lattice of the infinite-order "
                            "string");
}

EvalResult eval_constructed(const PrescribedString& p, std::complex<double> s,
                            double tol, double guard) {
  if (!(s.real() > p.dInfinity))
    throw DomainError(
        "eval_constructed: Re s must exceed the singularity barrier at "
        "dInfinity");
  return eval_zeta(p.expr, s, tol, guard);
}

EpsilonCertificate epsilon_bound(const PrescribedString& p, const Disk& disk) {
  if (!(disk.radius > 0.0) || !std::isfinite(disk.radius) ||
      !std::isfinite(disk.center.real()) || !std::isfinite(disk.center.imag()))
    throw ValidationError("epsilon_bound: disk needs a finite center and a positive radius");
  const InfinitePartSchedule& sched = p.schedule();
  const double lo = disk.center.real() - disk.radius;
  const double hi = disk.center.real() + disk.radius;
  if (!(lo > p.dInfinity))
    throw ValidationError(
        "epsilon_bound: disk must lie strictly right of the barrier "
        "Re s = dInfinity");

  // D_k is strictly decreasing, so the lines meeting [lo,hi] are consecutive.
  std::int64_t k = 1;
  while (sched.dim(k) > hi) ++k;
  const std::int64_t rightCount = k - 1;  // lines strictly right of the disk
  std::vector<std::int64_t> inside;
  while (sched.dim(k) >= lo) inside.push_back(k++);
  const std::int64_t firstLeft = k;  // smallest k with D_k < lo
  if (inside.size() > 1)
    throw ValidationError(
        "epsilon_bound: disk meets more than one vertical line Re s = D_k");
  if (!inside.empty()) {
    const std::int64_t k0 = inside.front();
    const double period = -2.0 * std::numbers::pi / sched.log_a(k0);
    if (lattice_distance(sched.dim(k0), period, disk.center) <= disk.radius)
      throw ValidationError(
          "epsilon_bound: disk touches a singularity lattice point of part " +
          std::to_string(k0));
  }

  // Case (a1): lines right of the disk; σ ≤ hi < D_k gives
  // |1 − m_k a_k^s| ≥ m_k^{1−hi/D_k} − 1.
  double eps1 = std::numeric_limits<double>::infinity();
  for (std::int64_t i = 1; i <= rightCount; ++i)
    eps1 = std::min(eps1, std::exp(std::log(static_cast<double>(sched.m(i))) *
                                   (1.0 - hi / sched.dim(i))) -
                              1.0);
  // Cases (a2)/(c): lines left of the disk; the bound 1 − m_k^{1−lo/D_k} is
  // worst at the shallowest such part.
  const double eps2 =
      1.0 - std::exp(std::log(static_cast<double>(sched.m(firstLeft))) *
                     (1.0 - lo / sched.dim(firstLeft)));
  // Case (b): the straddled line needs the grid minimum over the disk.
  double epsb = std::numeric_limits<double>::infinity();
  if (!inside.empty())
    epsb = 0.9 * disk_denominator_min(static_cast<double>(sched.m(inside.front())),
                                      sched.log_a(inside.front()), disk);

  EpsilonCertificate cert;
  cert.disk = disk;
  cert.epsilon = std::min({eps1, eps2, epsb});
  cert.coveredIndices = "all k >= 1";
  if (!inside.empty())
    cert.caseTag = "b";
  else if (rightCount == 0)
    cert.caseTag = "c";
  else
    cert.caseTag = eps1 <= eps2 ? "a1" : "a2";
  if (!(cert.epsilon > 0.0))
    throw ValidationError("epsilon_bound: certificate degenerated to a nonpositive bound");
  return cert;
}

}  // namespace fractal
