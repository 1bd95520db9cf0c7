#include "fractal/distance_zeta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <variant>

#include <boost/math/quadrature/gauss.hpp>

#include "fractal/dimension.hpp"
#include "fractal/enumeration.hpp"
#include "fractal/errors.hpp"
#include "fractal/zeta_eval.hpp"

namespace fractal {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_finite(double x, const char* op, const char* name) {
  if (!std::isfinite(x))
    throw ValidationError(std::string(op) + ": " + name + " must be finite");
}

void check_delta(const char* op, double delta, double maxLen) {
  check_finite(delta, op, "delta");
  if (!(delta > 0.0))
    throw ValidationError(std::string(op) + ": delta must be positive");
  if (!(delta > 0.5 * maxLen)) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  ": delta too small: need delta > l1/2 = %.17g", 0.5 * maxLen);
    throw ValidationError(std::string(op) + buf);
  }
}

// ---------------------------------------------------------------------------
// Canonical realization A_L = {a_k = Σ_{j≥k} ℓ_j} ∪ {0}, materialized as a
// descending prefix of points with a conservative surrogate below the prefix.

struct RealizationPoints {
  std::vector<double> pts;  // ascending; pts.back() == total
  double total = 0.0;       // a_1 = |L|₁
  double tailEnd = 0.0;     // a_K: queries below it use the surrogate
  double tailGap = 0.0;     // ℓ_K: bound on the spacing of tail points
};

RealizationPoints materialize(const StringExpr& e, double delta,
                              std::int64_t maxPoints) {
  RealizationPoints r;
  r.total = total_length(e);
  if (!std::isfinite(r.total))
    throw DomainError("realization: the string has no finite total length");
  const double cutoff = delta * 1e-6;

  // Neumaier-compensated running remainder a − Σ ℓ, so the tails stay
  // accurate across millions of subtractions.
  double a = r.total;
  double comp = 0.0;
  std::vector<double> desc;
  desc.push_back(a);
  auto cursor = make_cursor(e);
  r.tailGap = max_length(e);  // every gap is bounded by the largest length
  bool fully = false;
  for (;;) {
    auto term = cursor->peek();
    if (!term) {
      fully = true;
      break;
    }
    if (a + comp <= cutoff) break;
    cursor->pop();
    bool stop = false;
    for (std::uint64_t i = 0; i < term->multiplicity; ++i) {
      const double v = -term->length;
      const double t = a + v;
      comp += std::abs(a) >= std::abs(v) ? (a - t) + v : (v - t) + a;
      a = t;
      r.tailGap = term->length;
      desc.push_back(std::max(a + comp, 0.0));
      if (a + comp <= cutoff ||
          static_cast<std::int64_t>(desc.size()) >= maxPoints) {
        stop = true;
        break;
      }
    }
    if (stop) break;
  }
  if (fully) desc.back() = 0.0;  // all lengths consumed: the last tail is 0
  r.tailEnd = desc.back();
  std::reverse(desc.begin(), desc.end());
  r.pts = std::move(desc);
  return r;
}

double line_distance(const RealizationPoints& r, double x) {
  if (x <= 0.0) return -x;  // 0 lies in the closure of every realization
  if (x >= r.total) return x - r.total;
  if (x < r.tailEnd) {
    // Below the materialized prefix: 0 and a_K bracket the query and the tail
    // points are spaced at most ℓ_K apart, so this is an upper bound within
    // ℓ_K/2 of the true distance (and both are below delta·1e−6).
    return std::min({x, r.tailEnd - x, 0.5 * r.tailGap});
  }
  const auto it = std::lower_bound(r.pts.begin(), r.pts.end(), x);
  const double right = *it;
  const double left = it == r.pts.begin() ? 0.0 : *(it - 1);
  return std::min(right - x, x - left);
}

// ---------------------------------------------------------------------------
// Exact distance to C^(m,a) by descending through the construction levels.

double gen_cantor_distance(std::int64_t m, double a, double x) {
  if (x <= 0.0) return -x;
  if (x >= 1.0) return x - 1.0;
  const double gap = (1.0 - static_cast<double>(m) * a) / (m - 1);
  const double pitch = a + gap;
  double scale = 1.0;
  while (scale > 1e-18) {
    auto i = static_cast<std::int64_t>(std::floor(x / pitch));
    i = std::clamp<std::int64_t>(i, 0, m - 1);
    const double u = x - static_cast<double>(i) * pitch;
    if (u >= a) return scale * std::min(u - a, pitch - u);
    if (u < 0.0) return scale * (-u);  // floating slop at a piece boundary
    x = u / a;
    scale *= a;
  }
  return 0.0;  // within 1e−18 of the set
}

// ---------------------------------------------------------------------------
// Evaluator tree mirroring the GeometricSet structure.

struct SetEval {
  enum class Kind { Line, Cantor, Grill, Flat, Union };

  Kind kind = Kind::Line;
  RealizationPoints line;            // Line
  std::int64_t m = 0;                // Cantor
  double a = 0.0;                    // Cantor
  int extraDims = 0;                 // Grill (count) / Flat (zero count)
  std::vector<SetEval> children;     // Grill/Flat: one; Union: parts
  int ambient = 1;
  Box hull;

  double distance(const double* x) const;
};

double unit_interval_distance(double y) {
  if (y < 0.0) return -y;
  if (y > 1.0) return y - 1.0;
  return 0.0;
}

double SetEval::distance(const double* x) const {
  switch (kind) {
    case Kind::Line:
      return line_distance(line, x[0]);
    case Kind::Cantor:
      return gen_cantor_distance(m, a, x[0]);
    case Kind::Grill: {
      const SetEval& base = children.front();
      const double d0 = base.distance(x);
      double q = d0 * d0;
      for (int i = 0; i < extraDims; ++i) {
        const double t = unit_interval_distance(x[base.ambient + i]);
        q += t * t;
      }
      return std::sqrt(q);
    }
    case Kind::Flat: {
      const SetEval& base = children.front();
      const double d0 = base.distance(x);
      double q = d0 * d0;
      for (int i = 0; i < extraDims; ++i) {
        const double t = x[base.ambient + i];
        q += t * t;
      }
      return std::sqrt(q);
    }
    case Kind::Union: {
      double best = std::numeric_limits<double>::infinity();
      for (const SetEval& c : children) best = std::min(best, c.distance(x));
      return best;
    }
  }
  return 0.0;
}

SetEval build_eval(const GeometricSet& set, double delta,
                   std::int64_t maxPoints) {
  SetEval out;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, RealizationSet>) {
          out.kind = SetEval::Kind::Line;
          out.line = materialize(node.of, delta, maxPoints);
          out.ambient = 1;
          out.hull = {{0.0}, {out.line.total}};
        } else if constexpr (std::is_same_v<T, GenCantorSet>) {
          out.kind = SetEval::Kind::Cantor;
          out.m = node.m;
          out.a = node.a;
          out.ambient = 1;
          out.hull = {{0.0}, {1.0}};
        } else if constexpr (std::is_same_v<T, GrillSet>) {
          out.kind = SetEval::Kind::Grill;
          out.extraDims = node.extraDims;
          out.children.push_back(build_eval(*node.base, delta, maxPoints));
          out.ambient = out.children.front().ambient + node.extraDims;
          out.hull = out.children.front().hull;
          for (int i = 0; i < node.extraDims; ++i) {
            out.hull.lo.push_back(0.0);
            out.hull.hi.push_back(1.0);
          }
        } else if constexpr (std::is_same_v<T, EmbeddedFlatSet>) {
          out.kind = SetEval::Kind::Flat;
          out.extraDims = node.zeroDims;
          out.children.push_back(build_eval(*node.base, delta, maxPoints));
          out.ambient = out.children.front().ambient + node.zeroDims;
          out.hull = out.children.front().hull;
          for (int i = 0; i < node.zeroDims; ++i) {
            out.hull.lo.push_back(0.0);
            out.hull.hi.push_back(0.0);
          }
        } else {
          out.kind = SetEval::Kind::Union;
          for (const GeometricSet& part : node.parts)
            out.children.push_back(build_eval(part, delta, maxPoints));
          out.ambient = out.children.front().ambient;
          out.hull = out.children.front().hull;
          for (const SetEval& c : out.children)
            for (int i = 0; i < out.ambient; ++i) {
              out.hull.lo[i] = std::min(out.hull.lo[i], c.hull.lo[i]);
              out.hull.hi[i] = std::max(out.hull.hi[i], c.hull.hi[i]);
            }
        }
      },
      set.node());
  return out;
}

// Upper bound on the box dimension of the set, used by the integrability
// warning (exact for the lattice pieces; the abscissa of the string for
// realizations).
double expected_dimension(const GeometricSet& set) {
  return std::visit(
      [&](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, RealizationSet>) {
          return exact_abscissa(node.of).value;
        } else if constexpr (std::is_same_v<T, GenCantorSet>) {
          return std::log(static_cast<double>(node.m)) / std::log(1.0 / node.a);
        } else if constexpr (std::is_same_v<T, GrillSet>) {
          return expected_dimension(*node.base) + node.extraDims;
        } else if constexpr (std::is_same_v<T, EmbeddedFlatSet>) {
          return expected_dimension(*node.base);
        } else {
          double best = 0.0;
          for (const GeometricSet& part : node.parts)
            best = std::max(best, expected_dimension(part));
          return best;
        }
      },
      set.node());
}

void collect_lattice_scales(const GeometricSet& set,
                            std::vector<double>& scales) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, RealizationSet>) {
          for (const SingularityLattice& lat : expression_lattices(node.of))
            if (lat.period > 0.0)
              scales.push_back(std::exp(-2.0 * kPi / lat.period));
        } else if constexpr (std::is_same_v<T, GenCantorSet>) {
          scales.push_back(node.a);
        } else if constexpr (std::is_same_v<T, GrillSet>) {
          collect_lattice_scales(*node.base, scales);
        } else if constexpr (std::is_same_v<T, EmbeddedFlatSet>) {
          collect_lattice_scales(*node.base, scales);
        } else {
          for (const GeometricSet& part : node.parts)
            collect_lattice_scales(part, scales);
        }
      },
      set.node());
}

// Ratio of consecutive distance-band radii.  When the whole set shares one
// self-similar scale a, bands at radii delta·a^j are homothetic images of each
// other, so the band masses of d(x,A)^{s−N} decay in an exactly geometric
// progression and the deep tail can be extrapolated from measured bands.
// Mixed or unknown scales fall back to 1/2 (the extrapolation then leans on
// the residual-based error term instead of exactness).
double band_scale(const GeometricSet& set) {
  std::vector<double> scales;
  collect_lattice_scales(set, scales);
  if (scales.empty()) return 0.5;
  for (double v : scales)
    if (std::abs(v - scales.front()) > 1e-9) return 0.5;
  double rho = scales.front();
  if (!(rho > 0.0 && rho < 1.0)) return 0.5;
  // Keep the per-band decay moderate; powers/roots of a preserve alignment.
  while (rho > 0.7) rho *= scales.front();
  while (rho < 0.12) rho = std::sqrt(rho);
  return rho;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Edge contributions of the grill tube (ambient N ≥ 3).
//
//   E_q(τ) = ∫₀^{√(δ²−τ²)} (τ² + ρ²)^{(s−N)/2} ρ^{q−1} dρ,
//   I_q    = Σ_gaps 2∫₀^{ℓ/2} E_q(τ) dτ  +  2∫₀^δ E_q(τ) dτ,
//
// absolutely convergent for Re s > N − 1.  q = 2 has a closed form; the rest
// use fixed 64-point Gauss–Legendre rules with substitutions that remove the
// endpoint kinks (ρ = R u² at the inner origin, τ = δ sin φ at the outer
// boundary).  The quadrature error (≲1e−6 relative) is far below the
// statistical error of the Monte Carlo companion term.

using Gauss64 = boost::math::quadrature::gauss<double, 64>;

std::complex<double> edge_profile(int q, double tau, double delta,
                                  std::complex<double> sMinusN) {
  const double r2 = delta * delta - tau * tau;
  if (r2 <= 0.0) return {0.0, 0.0};
  const double radius = std::sqrt(r2);
  if (q == 2) {
    const std::complex<double> e = sMinusN + 2.0;
    return (std::exp(e * std::log(delta)) - std::exp(e * std::log(tau))) / e;
  }
  if (q == 1) {
    auto f = [&](double u) {
      const double rho = radius * u * u;
      return std::exp(0.5 * sMinusN * std::log(tau * tau + rho * rho)) *
             (2.0 * radius * u);
    };
    return Gauss64::integrate(f, 0.0, 1.0);
  }
  auto f = [&](double rho) {
    return std::exp(0.5 * sMinusN * std::log(tau * tau + rho * rho)) *
           std::pow(rho, q - 1);
  };
  return Gauss64::integrate(f, 0.0, radius);
}

// ∫₀^{hi} E_q(τ) dτ with τ = hi·u² (the profile can have a fractional-power
// kink at τ = 0 when Re s < N).
std::complex<double> gap_edge_integral(int q, double hi, double delta,
                                       std::complex<double> sMinusN) {
  auto f = [&](double u) {
    return edge_profile(q, hi * u * u, delta, sMinusN) * (2.0 * hi * u);
  };
  return Gauss64::integrate(f, 0.0, 1.0);
}

std::complex<double> boundary_edge_integral(int q, double delta,
                                            std::complex<double> sMinusN) {
  auto f = [&](double phi) {
    return edge_profile(q, delta * std::sin(phi), delta, sMinusN) *
           (delta * std::cos(phi));
  };
  return Gauss64::integrate(f, 0.0, 0.5 * kPi);
}

std::complex<double> edge_term_sum(const StringExpr& base, int ambientN,
                                   std::complex<double> s, double delta,
                                   double totalLen) {
  std::complex<double> sum{0.0, 0.0};
  if (ambientN < 3) return sum;
  const std::complex<double> sMinusN = s - static_cast<double>(ambientN);
  const double sigma = s.real();
  for (int q = 1; q <= ambientN - 2; ++q) {
    // q·C(N−1,q)·ω_q, ω_q the volume of the unit q-ball.
    double binom = 1.0;
    for (int i = 0; i < q; ++i)
      binom = binom * static_cast<double>(ambientN - 1 - i) / (i + 1);
    const double wq = std::pow(kPi, 0.5 * q) / std::tgamma(0.5 * q + 1.0);
    const double prefactor = q * binom * wq;

    std::complex<double> iq = 2.0 * boundary_edge_integral(q, delta, sMinusN);
    // |E_q| ≤ δ^{σ−N+q}/min(q, σ−N+q) uniformly in τ (bound the kernel by
    // ρ^{σ−N} when σ ≤ N and by δ^{σ−N} otherwise); it certifies the tail of
    // the gap sum.
    const double supProfile =
        std::pow(delta, sigma - ambientN + q) /
        std::min<double>(q, sigma - ambientN + q);
    double covered = 0.0;
    auto cursor = make_cursor(base);
    std::int64_t classes = 0;
    while (auto term = cursor->peek()) {
      cursor->pop();
      const double weight = static_cast<double>(term->multiplicity);
      iq += weight * 2.0 *
            gap_edge_integral(q, 0.5 * term->length, delta, sMinusN);
      covered += weight * term->length;
      // 1e−10 relative keeps the cutoff depth clear of the multiplicity
      // range of lattice strings (2^k exceeds 64 bits near level 63).
      const double tailBound = std::max(totalLen - covered, 0.0) * supProfile;
      if (tailBound <= 1e-10 * (std::abs(iq) + 1e-300)) break;
      if (++classes > 1000000)
        throw DomainError(
            "dzeta_grill: edge-term gap enumeration did not converge");
    }
    sum += prefactor * iq;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Singularity bookkeeping.

// Value of the continued string zeta at s = 0 where a closed form exists.
// The boundary pole of a realization's distance zeta at s = 0 cancels exactly
// when this value is −1.
std::optional<double> zeta_at_zero(const StringExpr& e) {
  using R = std::optional<double>;
  return std::visit(
      [&](const auto& node) -> R {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          double count = 0.0;
          for (const LengthTerm& t : node.terms)
            count += static_cast<double>(t.multiplicity);
          return count;
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          const auto k = static_cast<double>(node.ratios.size());
          if (k == 1.0) return std::nullopt;  // 1/(1−1): pole at 0 itself
          return 1.0 / (1.0 - k);
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          return 1.0 / (1.0 - static_cast<double>(node.m));
        } else if constexpr (std::is_same_v<T, PowerString>) {
          R b = zeta_at_zero(*node.base);
          if (!b) return std::nullopt;
          return std::pow(*b, static_cast<double>(node.n));
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          const double q = 1.0 / (1.0 - static_cast<double>(node.m));
          if (std::abs(q) >= 1.0) return std::nullopt;  // m = 2: boundary case
          return q / (1.0 - q);
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          return zeta_at_zero(*node.inner);
        } else if constexpr (std::is_same_v<T, UnionString>) {
          double sum = 0.0;
          for (const StringExpr& part : node.parts) {
            R v = zeta_at_zero(part);
            if (!v) return std::nullopt;
            sum += *v;
          }
          return sum;
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          if (node.schedule) return std::nullopt;  // infinitely many parts
          double sum = 0.0;
          for (const StringExpr& part : node.parts) {
            R v = zeta_at_zero(part);
            if (!v) return std::nullopt;
            sum += *v;
          }
          return sum;
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          R v = zeta_at_zero(*node.inner);
          if (!v || std::abs(*v) >= 1.0) return std::nullopt;
          // Σ_{n: c_n>0} v^n for the stock families.
          switch (node.family.kind()) {
            case CoefficientFamily::Kind::Exp:
              return 1.0 / (1.0 - *v);
            case CoefficientFamily::Kind::ExpMinusOne:
            case CoefficientFamily::Kind::Geometric:
            case CoefficientFamily::Kind::Log:
              return *v / (1.0 - *v);
            case CoefficientFamily::Kind::Cosh:
              return 1.0 / (1.0 - *v * *v);
            case CoefficientFamily::Kind::Sinh:
              return *v / (1.0 - *v * *v);
            case CoefficientFamily::Kind::Custom:
              return std::nullopt;
          }
          return std::nullopt;
        }
      },
      e.node());
}

bool has_boundary_pole(const StringExpr& e) {
  const auto v = zeta_at_zero(e);
  return !v || std::abs(*v + 1.0) > 1e-12;
}

void append_schedule_lattices(const InfinitePartSchedule& sched,
                              std::vector<SingularityLattice>& out) {
  for (std::int64_t k = 1; k <= 64; ++k) {
    const double dim = sched.dim(k);
    SingularityLattice lat;
    lat.realPart = dim;
    lat.period = -2.0 * kPi / sched.log_a(k);
    lat.kind = SingularityLattice::Kind::Essential;
    lat.label = "part " + std::to_string(k);
    out.push_back(lat);
    if (dim - sched.dInfinity <= 1e-9) break;  // effectively at the barrier
  }
}

}  // namespace

std::vector<SingularityLattice> expression_lattices(const StringExpr& e) {
  std::vector<SingularityLattice> out;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          // entire
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          // Only the principal real pole is enumerated; the complex pole set
          // of a non-lattice self-similar string is not a vertical lattice.
          SingularityLattice lat;
          lat.realPart = exact_abscissa(StringExpr(node)).value;
          lat.period = 0.0;
          lat.kind = SingularityLattice::Kind::Pole;
          lat.label = "self-similar principal pole";
          out.push_back(lat);
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          out.push_back(singularity_lattice(CantorParams{node.m, node.a}, 1));
        } else if constexpr (std::is_same_v<T, PowerString>) {
          out = expression_lattices(*node.base);
          for (SingularityLattice& lat : out)
            if (lat.kind == SingularityLattice::Kind::Pole)
              lat.poleOrder *= node.n;
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          out.push_back(
              singularity_lattice(CantorParams{node.m, node.a}, std::nullopt));
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          out = expression_lattices(*node.inner);  // γ^s is entire, nonvanishing
        } else if constexpr (std::is_same_v<T, UnionString>) {
          for (const StringExpr& part : node.parts) {
            auto sub = expression_lattices(part);
            out.insert(out.end(), sub.begin(), sub.end());
          }
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          for (const StringExpr& part : node.parts) {
            auto sub = expression_lattices(part);
            out.insert(out.end(), sub.begin(), sub.end());
          }
          if (node.schedule) append_schedule_lattices(*node.schedule, out);
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          // The lift is singular exactly where the inner zeta is (entire
          // families), and those singularities are no longer poles.
          out = expression_lattices(*node.inner);
          for (SingularityLattice& lat : out)
            lat.kind = SingularityLattice::Kind::Essential;
        }
      },
      e.node());
  return out;
}

// ---------------------------------------------------------------------------
// Factories.

GeometricSet make_realization(StringExpr e) {
  return GeometricSet(RealizationSet{std::move(e)});
}

GeometricSet make_gen_cantor_set(std::int64_t m, double a) {
  CantorParams{m, a}.validate();
  return GeometricSet(GenCantorSet{m, a});
}

GeometricSet make_grill(GeometricSet base, int extraDims) {
  if (extraDims < 1)
    throw ValidationError("make_grill: extraDims must be >= 1");
  if (ambient_dimension(base) != 1)
    throw ValidationError("make_grill: base must be one-dimensional");
  return GeometricSet(
      GrillSet{std::make_shared<GeometricSet>(std::move(base)), extraDims});
}

GeometricSet make_embedded_flat(GeometricSet base, int zeroDims) {
  if (zeroDims < 1)
    throw ValidationError("make_embedded_flat: zeroDims must be >= 1");
  return GeometricSet(EmbeddedFlatSet{
      std::make_shared<GeometricSet>(std::move(base)), zeroDims});
}

GeometricSet make_union_set(std::vector<GeometricSet> parts) {
  if (parts.empty())
    throw ValidationError("make_union_set: at least one part is required");
  const int n = ambient_dimension(parts.front());
  for (const GeometricSet& part : parts)
    if (ambient_dimension(part) != n)
      throw ValidationError(
          "make_union_set: parts must share one ambient dimension");
  return GeometricSet(UnionSetParts{std::move(parts)});
}

int ambient_dimension(const GeometricSet& set) {
  return std::visit(
      [](const auto& node) -> int {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, RealizationSet>) {
          return 1;
        } else if constexpr (std::is_same_v<T, GenCantorSet>) {
          return 1;
        } else if constexpr (std::is_same_v<T, GrillSet>) {
          return ambient_dimension(*node.base) + node.extraDims;
        } else if constexpr (std::is_same_v<T, EmbeddedFlatSet>) {
          return ambient_dimension(*node.base) + node.zeroDims;
        } else {
          return ambient_dimension(node.parts.front());
        }
      },
      set.node());
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

// ---------------------------------------------------------------------------
// DistanceField.

struct DistanceField::Impl {
  SetEval root;
};

DistanceField DistanceField::build(const GeometricSet& set, double delta,
                                   std::int64_t maxPoints) {
  check_finite(delta, "DistanceField::build", "delta");
  if (!(delta > 0.0))
    throw ValidationError("DistanceField::build: delta must be positive");
  if (maxPoints < 2)
    throw ValidationError("DistanceField::build: maxPoints must be >= 2");
  DistanceField f;
  auto impl = std::make_shared<Impl>();
  impl->root = build_eval(set, delta, maxPoints);
  f.hull_ = impl->root.hull;
  f.ambient_ = impl->root.ambient;
  f.impl_ = std::move(impl);
  return f;
}

double DistanceField::distance(const double* x, int n) const {
  if (n != ambient_)
    throw ValidationError("DistanceField::distance: wrong point dimension");
  return impl_->root.distance(x);
}

// ---------------------------------------------------------------------------
// Exact one-dimensional distance zeta.

std::complex<double> dzeta_line(const StringExpr& e, std::complex<double> s,
                                double delta, double tol) {
  check_delta("dzeta_line", delta, max_length(e));
  if (std::abs(s) < 1e-12)
    throw DomainError("dzeta_line: s = 0 is a pole of the boundary term");
  const double dAbs = exact_abscissa(e).value;
  if (!(s.real() > dAbs)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "dzeta_line: Re s = %.17g is not to the right of the "
                  "abscissa of convergence %.17g",
                  s.real(), dAbs);
    throw DomainError(buf);
  }
  const std::complex<double> zeta = eval_zeta(e, s, tol).value;
  return std::exp((1.0 - s) * std::log(2.0)) / s * zeta +
         2.0 * std::exp(s * std::log(delta)) / s;
}

// ---------------------------------------------------------------------------
// Stratified Monte Carlo with distance-band tail completion.
//
// Uniform sampling cannot resolve the mass of d(x,A)^{s−N} carried at
// distances far below delta: for a set of codimension c and Re(s−N) in
// (−c, 0) the integrand's second moment is infinite, and a fixed budget only
// reaches distance scales whose hit probability is ≳ 1/n, while real mass
// remains at every scale.  The estimator therefore classifies samples into
// geometric distance bands d ∈ (δρ^{j+1}, δρ^j], truncates the empirical sum
// at the deepest well-populated band J, and completes the tail j > J by
// geometric extrapolation of the measured band masses — exact in the limit
// for a single-scale gap structure (each lattice level is a homothety, so
// consecutive band masses have a constant complex ratio).  The reported
// standard error combines the CLT error of the truncated sum with a
// residual-based error for the extrapolated tail, so non-geometric decay
// widens the error bar instead of biasing it silently.

MonteCarloResult dzeta_monte_carlo(const GeometricSet& set,
                                   std::complex<double> s, double delta,
                                   std::int64_t nSamples, std::uint64_t seed) {
  check_finite(delta, "dzeta_monte_carlo", "delta");
  if (!(delta > 0.0))
    throw ValidationError("dzeta_monte_carlo: delta must be positive");
  if (nSamples < 1000)
    throw ValidationError("dzeta_monte_carlo: need nSamples >= 1000");

  const DistanceField field = DistanceField::build(set, delta);
  const int n = field.ambient();
  const Box& hull = field.hull();
  std::vector<double> lo(hull.lo), hi(hull.hi);
  for (int i = 0; i < n; ++i) {
    lo[i] -= delta;
    hi[i] += delta;
  }
  double boxVolume = 1.0;
  for (int i = 0; i < n; ++i) boxVolume *= hi[i] - lo[i];

  constexpr int kStrata = 64;
  // Equal per-stratum counts keep the plain mean identical to the stratified
  // estimator; round the budget up to a multiple of the stratum count.
  const std::int64_t perStratum = (nSamples + kStrata - 1) / kStrata;
  const std::int64_t nUsed = perStratum * kStrata;
  const double stratumWidth = (hi[0] - lo[0]) / kStrata;
  const std::complex<double> exponent = s - static_cast<double>(n);

  MonteCarloResult out;
  out.nSamples = nUsed;
  out.seed = seed;

  constexpr int kBands = 256;
  const double rho = band_scale(set);
  const double logInvRho = std::log(1.0 / rho);
  struct Band {
    double sumRe = 0.0, sumIm = 0.0, sumSq = 0.0;
    std::int64_t count = 0;
  };
  std::vector<Band> bands(kBands);

  double sumAbs = 0.0, maxAbs = 0.0;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int stratum = 0; stratum < kStrata; ++stratum) {
    std::mt19937_64 rng(
        splitmix64(seed ^ (0x9E3779B97F4A7C15ull *
                           static_cast<std::uint64_t>(stratum + 1))));
    const double x0lo = lo[0] + stratum * stratumWidth;
    for (std::int64_t i = 0; i < perStratum; ++i) {
      x[0] = x0lo + unit_double(rng) * stratumWidth;
      for (int j = 1; j < n; ++j)
        x[j] = lo[j] + unit_double(rng) * (hi[j] - lo[j]);
      const double d = field.distance(x.data(), n);
      if (!(d > 0.0 && d < delta)) continue;
      const std::complex<double> f = std::exp(exponent * std::log(d));
      const int j = std::clamp(
          static_cast<int>(std::log(delta / d) / logInvRho), 0, kBands - 1);
      Band& b = bands[j];
      b.sumRe += f.real();
      b.sumIm += f.imag();
      b.sumSq += std::norm(f);
      ++b.count;
      const double af = std::abs(f);
      sumAbs += af;
      maxAbs = std::max(maxAbs, af);
    }
  }

  const auto dn = static_cast<double>(nUsed);
  const double sampleWeight = boxVolume / dn;
  const auto bandMass = [&](int j) {
    return std::complex<double>(bands[j].sumRe, bands[j].sumIm) * sampleWeight;
  };

  // Deepest band still populated well enough to anchor the extrapolation.
  const std::int64_t minCount = std::max<std::int64_t>(64, nUsed / 20000);
  int deepest = -1;
  for (int j = 0; j < kBands; ++j)
    if (bands[j].count >= minCount) deepest = j;

  std::complex<double> completion{0.0, 0.0};
  double seModel = 0.0;
  bool completed = false;
  bool slowDecay = false;
  const int window = std::min(8, deepest);
  if (deepest >= 4 && window >= 3) {
    // Aggregated one-step ratio of band masses over the fit window.
    std::complex<double> num{0.0, 0.0}, den{0.0, 0.0};
    for (int j = deepest - window + 2; j <= deepest; ++j) num += bandMass(j);
    for (int j = deepest - window + 1; j < deepest; ++j) den += bandMass(j);
    if (std::abs(den) > 0.0) {
      const std::complex<double> r = num / den;
      if (std::abs(r) >= 0.995) {
        slowDecay = true;
      } else if (std::abs(r) > 1e-12) {
        // With mu_j = mu_deepest·r^{j−deepest} the window numerator equals
        // mu_deepest·Σ_{k=0}^{window−2} r^{−k}; solve for the anchor.
        std::complex<double> geo{0.0, 0.0}, p{1.0, 0.0};
        for (int k = 0; k < window - 1; ++k) {
          geo += p;
          p /= r;
        }
        const std::complex<double> anchor = num / geo;
        completion = anchor * r / (1.0 - r);
        double residSq = 0.0, mass = 0.0;
        for (int j = deepest - window + 2; j <= deepest; ++j) {
          residSq += std::norm(bandMass(j) - bandMass(j - 1) * r);
          mass += std::abs(bandMass(j));
        }
        const double rel =
            mass > 0.0 ? std::sqrt(residSq * (window - 1)) / mass : 1.0;
        seModel = std::abs(completion) * std::min(1.0, 2.0 * rel);
        completed = true;
      }
    }
  }

  const int cutoff = completed ? deepest : kBands - 1;
  double sumRe = 0.0, sumIm = 0.0, sumSq = 0.0;
  for (int j = 0; j <= cutoff; ++j) {
    sumRe += bands[j].sumRe;
    sumIm += bands[j].sumIm;
    sumSq += bands[j].sumSq;
  }
  const double variance = std::max(
      0.0, (sumSq - (sumRe * sumRe + sumIm * sumIm) / dn) / (dn - 1.0));
  out.value = std::complex<double>(sumRe, sumIm) * sampleWeight + completion;
  out.standardError =
      std::hypot(boxVolume * std::sqrt(variance / dn), seModel);

  const double dimBound = expected_dimension(set);
  const double absIntegral = sumAbs * sampleWeight;
  if (s.real() <= dimBound + 1e-9) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "Re s = %.6g is at or below the box dimension bound %.6g; "
                  "the integral is at its integrability threshold",
                  s.real(), dimBound);
    out.warning = buf;
  } else if (slowDecay) {
    out.warning =
        "distance-band masses are not decaying; the deep-tail mass cannot be "
        "extrapolated and may be underrepresented";
  } else if (!completed && maxAbs * sampleWeight > 0.25 * absIntegral &&
             absIntegral > 0.0) {
    out.warning =
        "heavy-tailed integrand: a single sample carries more than a quarter "
        "of the absolute mass; the variance estimate is unreliable";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grill zeta via the shift identity.

GrillZetaResult dzeta_grill(const StringExpr& base, int ambientN,
                            std::complex<double> s, double delta,
                            std::int64_t mcBudget, std::uint64_t seed) {
  if (ambientN < 2)
    throw ValidationError("dzeta_grill: ambientN must be >= 2");
  const double maxLen = max_length(base);
  check_delta("dzeta_grill", delta, maxLen);
  const std::complex<double> sp = s - static_cast<double>(ambientN - 1);
  if (std::abs(sp) < 1e-12)
    throw DomainError(
        "dzeta_grill: s = N - 1 is a pole of the shift prefactor");
  const double dAbs = exact_abscissa(base).value;
  if (!(s.real() > dAbs + ambientN - 1)) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "dzeta_grill: Re s = %.17g is not to the right of the "
                  "shifted abscissa %.17g",
                  s.real(), dAbs + ambientN - 1);
    throw DomainError(buf);
  }

  const std::complex<double> zetaL = eval_zeta(base, sp, 1e-12).value;
  GrillZetaResult out;
  out.exactPart =
      std::exp((static_cast<double>(ambientN) - s) * std::log(2.0)) / sp *
          zetaL +
      2.0 * std::exp(sp * std::log(delta)) / sp;
  out.exactPart +=
      edge_term_sum(base, ambientN, s, delta, total_length(base));

  const GeometricSet flat =
      make_embedded_flat(make_realization(base), ambientN - 1);
  out.flatPart = dzeta_monte_carlo(flat, s, delta, mcBudget, seed);
  out.value = out.exactPart + out.flatPart.value;
  out.standardError = out.flatPart.standardError;
  return out;
}

// ---------------------------------------------------------------------------
// Prescribed sets.

namespace {

// Fractional target for the lattice components, honoring the integer-target
// policy: integers are rejected unless epsilonOffset opts into the nudge.
double fractional_target(double value, double epsilonOffset, const char* name) {
  const double frac = value - std::floor(value);
  if (frac > 0.0) return value;
  if (epsilonOffset > 0.0) return value - epsilonOffset;
  throw ValidationError(std::string("construct_set: ") + name +
                        " is an integer; the lattice component degenerates "
                        "(set epsilonOffset to nudge the target inward)");
}

// Grill of a one-dimensional set, flat-padded so the ambient dimension is N.
GeometricSet grill_and_pad(GeometricSet oneDim, int grillDims, int ambientN) {
  GeometricSet out = std::move(oneDim);
  if (grillDims >= 1) out = make_grill(std::move(out), grillDims);
  const int pad = ambientN - 1 - grillDims;
  if (pad >= 1) out = make_embedded_flat(std::move(out), pad);
  return out;
}

}  // namespace

PrescribedSet construct_set(double dInfinity, double d1, double d, int ambientN,
                            const SetConstructOptions& options) {
  check_finite(dInfinity, "construct_set", "dInfinity");
  check_finite(d1, "construct_set", "d1");
  check_finite(d, "construct_set", "d");
  if (ambientN < 1)
    throw ValidationError("construct_set: ambientN must be >= 1");
  if (dInfinity < 0.0)
    throw ValidationError("construct_set: need dInfinity >= 0");
  if (!(dInfinity < d1)) throw ValidationError("construct_set: need dInfinity < d1");
  if (!(d1 <= d)) throw ValidationError("construct_set: need d1 <= d");
  if (!(d < ambientN))
    throw ValidationError(
        "construct_set: need d < ambientN (targets lie below the ambient "
        "dimension)");

  const ConstructOptions stringOptions{options.theta, options.mStart,
                                       options.epsilonOffset};
  char buf[256];

  if (ambientN == 1) {
    PrescribedString ps = construct(dInfinity, d1, d, stringOptions);
    std::snprintf(buf, sizeof(buf),
                  "case (i): canonical realization of the prescribed string "
                  "(%.6g, %.6g, %.6g)",
                  dInfinity, d1, d);
    return PrescribedSet{dInfinity, d1, d, ambientN,
                         make_realization(std::move(ps.expr)), buf};
  }

  if (dInfinity >= ambientN - 1) {
    // Case (ii): all three targets in [N−1, N); one grill does it.
    const double shift = ambientN - 1;
    PrescribedString ps =
        construct(dInfinity - shift, d1 - shift, d - shift, stringOptions);
    std::snprintf(buf, sizeof(buf),
                  "case (ii): grill of the shifted-target string (%.6g, %.6g, "
                  "%.6g) with %d unit factors",
                  dInfinity - shift, d1 - shift, d - shift, ambientN - 1);
    return PrescribedSet{
        dInfinity, d1, d, ambientN,
        make_grill(make_realization(std::move(ps.expr)), ambientN - 1), buf};
  }

  // Case (iii): the targets straddle integer gaps; three components.
  const int n1 = static_cast<int>(std::floor(dInfinity)) + 1;
  const double d1prime = std::min(d1, 0.5 * (dInfinity + n1));

  // Barrier component: a case-(i) string grilled up to dimension shift n1−1.
  const double shiftA = n1 - 1;
  PrescribedString psA = construct(dInfinity - shiftA, d1prime - shiftA,
                                   d1prime - shiftA, stringOptions);
  GeometricSet aSet = grill_and_pad(make_realization(std::move(psA.expr)),
                                    n1 - 1, ambientN);

  // Meromorphy component: an infinite-order string whose essential lattice
  // lands on Re s = d1 after the grill shift.
  const double d1target = fractional_target(d1, options.epsilonOffset, "d1");
  const int q1 = static_cast<int>(std::floor(d1target));
  const double frac1 = d1target - q1;
  const auto m1 = options.mStart;
  const double a1 = std::exp(-std::log(static_cast<double>(m1)) / frac1);
  GeometricSet bSet = grill_and_pad(
      make_realization(make_infinite_order(m1, a1)), q1, ambientN);

  // Abscissa component: a generalized Cantor set whose pole lattice lands on
  // Re s = d after the grill shift.
  const double dTarget = fractional_target(d, options.epsilonOffset, "d");
  const int qd = static_cast<int>(std::floor(dTarget));
  const double fracd = dTarget - qd;
  const double ad =
      std::exp(-std::log(static_cast<double>(options.mStart)) / fracd);
  GeometricSet cSet =
      grill_and_pad(make_gen_cantor_set(options.mStart, ad), qd, ambientN);

  std::vector<GeometricSet> parts;
  parts.push_back(std::move(aSet));
  parts.push_back(std::move(bSet));
  parts.push_back(std::move(cSet));
  std::snprintf(buf, sizeof(buf),
                "case (iii): union of barrier grill (N1 = %d, D1' = %.6g), "
                "infinite-order grill at %.6g and Cantor grill at %.6g",
                n1, d1prime, d1target, dTarget);
  return PrescribedSet{dInfinity, d1, d, ambientN,
                       make_union_set(std::move(parts)), buf};
}

// ---------------------------------------------------------------------------
// Singularity bookkeeping.

ShiftedSingularities set_singularities(const GeometricSet& set) {
  ShiftedSingularities out;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, RealizationSet>) {
          out.lattices = expression_lattices(node.of);
          if (has_boundary_pole(node.of)) out.isolatedPoints.push_back(0.0);
        } else if constexpr (std::is_same_v<T, GenCantorSet>) {
          out.lattices.push_back(
              singularity_lattice(CantorParams{node.m, node.a}, 1));
          // The complement string of C^(m,a) has ζ(0) = −1 for every m, so
          // the boundary pole at 0 always cancels.
        } else if constexpr (std::is_same_v<T, GrillSet>) {
          out = set_singularities(*node.base);
          const auto shift = static_cast<double>(node.extraDims);
          for (SingularityLattice& lat : out.lattices) {
            lat.realPart += shift;
            lat.label += " (grill-shifted)";
          }
          // S_new = S + extraDims, so the point {extraDims} appears exactly
          // when 0 was a base singularity.
          for (double& p : out.isolatedPoints) p += shift;
        } else if constexpr (std::is_same_v<T, EmbeddedFlatSet>) {
          out = set_singularities(*node.base);  // ambient-invariant
        } else {
          for (const GeometricSet& part : node.parts) {
            ShiftedSingularities sub = set_singularities(part);
            out.lattices.insert(out.lattices.end(), sub.lattices.begin(),
                                sub.lattices.end());
            for (double p : sub.isolatedPoints) {
              bool seen = false;
              for (double q : out.isolatedPoints)
                if (std::abs(p - q) < 1e-12) seen = true;
              if (!seen) out.isolatedPoints.push_back(p);
            }
          }
        }
      },
      set.node());
  return out;
}

}  // namespace fractal
