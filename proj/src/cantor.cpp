#include "fractal/cantor.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

namespace fractal {
namespace {

// z^n for integer n >= 0 by squaring; keeps error growth at O(log n) multiplies.
std::complex<double> cpow_int(std::complex<double> z, std::int64_t n) {
  std::complex<double> acc{1.0, 0.0};
  while (n > 0) {
    if (n & 1) acc *= z;
    z *= z;
    n >>= 1;
  }
  return acc;
}

std::string param_label(const CantorParams& p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%lld,%g)", static_cast<long long>(p.m), p.a);
  return buf;
}

[[noreturn]] void throw_lattice_hit(const SingularityLattice& lat,
                                    std::complex<double> s) {
  const std::complex<double> q = lat.nearest(s);
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "zeta singular near s = %.17g%+.17gi; nearest point of %s is "
                "%.17g%+.17gi",
                s.real(), s.imag(), lat.label.c_str(), q.real(), q.imag());
  throw SingularityError(q, buf);
}

}  // namespace

void CantorParams::validate() const {
  if (m < 2) throw ValidationError("CantorParams: m must be an integer >= 2");
  if (!(a > 0.0) || !std::isfinite(a))
    throw ValidationError("CantorParams: a must be a finite positive real");
  if (!(static_cast<double>(m) * a < 1.0))
    throw ValidationError("CantorParams: need m*a < 1");
}

double CantorParams::dimension() const {
  return std::log(static_cast<double>(m)) / std::log(1.0 / a);
}

double CantorParams::period() const {
  return 2.0 * std::numbers::pi / std::log(1.0 / a);
}

double CantorParams::total_length() const {
  return 1.0 / (1.0 - static_cast<double>(m) * a);
}

std::complex<double> SingularityLattice::nearest(std::complex<double> s) const {
  const double k = std::round(s.imag() / period);
  return {realPart, k * period};
}

std::vector<std::complex<double>> SingularityLattice::points_in(
    double reMin, double reMax, double imMin, double imMax) const {
  std::vector<std::complex<double>> out;
  if (realPart < reMin || realPart > reMax || imMin > imMax) return out;
  // Slack of 1e-12 period units keeps boundary points computed with roundoff
  // (e.g. im = j*period) inside the window.
  const double kLo = std::ceil(imMin / period - 1e-12);
  const double kHi = std::floor(imMax / period + 1e-12);
  if (kHi - kLo > 1e6)
    throw ValidationError("SingularityLattice::points_in: window spans more than 10^6 lattice points");
  for (double k = kLo; k <= kHi; k += 1.0) out.emplace_back(realPart, k * period);
  return out;
}

std::complex<double> closed_form_zeta(const CantorParams& p, std::int64_t n,
                                      std::complex<double> s, double guard) {
  p.validate();
  if (n < 1) throw ValidationError("closed_form_zeta: order n must be >= 1");
  const std::complex<double> as = std::exp(s * std::log(p.a));
  const std::complex<double> den = 1.0 - static_cast<double>(p.m) * as;
  if (std::abs(den) < guard) throw_lattice_hit(singularity_lattice(p, n), s);
  return cpow_int(1.0 / den, n);
}

std::complex<double> cantor_string_zeta(std::complex<double> s, double guard) {
  const std::complex<double> den = std::exp(s * std::log(3.0)) - 2.0;
  if (std::abs(den) < guard) {
    SingularityLattice lat = singularity_lattice(CantorParams{2, 1.0 / 3.0}, 1);
    lat.label = "cantor string";
    throw_lattice_hit(lat, s);
  }
  return 1.0 / den;
}

std::complex<double> self_similar_zeta(const std::vector<double>& ratios,
                                       std::complex<double> s, double guard) {
  if (ratios.empty())
    throw ValidationError("self_similar_zeta: at least one ratio required");
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0))
      throw ValidationError("self_similar_zeta: each ratio must lie in (0,1)");
    sum += r;
  }
  if (!(sum < 1.0))
    throw ValidationError("self_similar_zeta: ratios must sum to < 1");
  std::complex<double> den{1.0, 0.0};
  for (double r : ratios) den -= std::exp(s * std::log(r));
  if (std::abs(den) < guard) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "self-similar zeta denominator vanishes near s = %.17g%+.17gi",
                  s.real(), s.imag());
    throw SingularityError(s, buf);
  }
  return 1.0 / den;
}

SingularityLattice singularity_lattice(const CantorParams& p,
                                       std::optional<std::int64_t> order) {
  p.validate();
  if (order && *order < 1)
    throw ValidationError("singularity_lattice: pole order must be >= 1");
  SingularityLattice lat;
  lat.realPart = p.dimension();
  lat.period = p.period();
  lat.kind = order ? SingularityLattice::Kind::Pole
                   : SingularityLattice::Kind::Essential;
  lat.poleOrder = order.value_or(1);
  if (!order) {
    lat.label = "inforder" + param_label(p);
  } else if (*order == 1) {
    lat.label = "gencantor" + param_label(p);
  } else {
    lat.label = "power:" + std::to_string(*order) + " of gencantor" + param_label(p);
  }
  return lat;
}

double infinite_order_length(const CantorParams& p) {
  p.validate();
  return std::expm1(1.0 / (1.0 - static_cast<double>(p.m) * p.a));
}

// The coefficient does not depend on the lattice index, hence the unused j.
std::complex<double> laurent_principal(const CantorParams& p, std::int64_t n,
                                       std::int64_t /*j*/) {
  p.validate();
  if (n < 1) throw ValidationError("laurent_principal: order n must be >= 1");
  return {std::pow(1.0 / std::log(1.0 / p.a), static_cast<double>(n)), 0.0};
}

std::complex<double> laurent_principal_richardson(const CantorParams& p,
                                                  std::int64_t n,
                                                  std::int64_t j,
                                                  std::complex<double> direction,
                                                  double h0, int levels) {
  p.validate();
  if (n < 1)
    throw ValidationError("laurent_principal_richardson: order n must be >= 1");
  if (!(h0 > 0.0) || !std::isfinite(h0))
    throw ValidationError("laurent_principal_richardson: h0 must be a finite positive step");
  if (levels < 1 || levels > 16)
    throw ValidationError("laurent_principal_richardson: levels must lie in [1,16]");
  const double mag = std::abs(direction);
  if (!(mag > 0.0) || !std::isfinite(mag))
    throw ValidationError("laurent_principal_richardson: direction must be a nonzero complex number");

  const std::complex<double> dir = direction / mag;
  const std::complex<double> sj{p.dimension(), static_cast<double>(j) * p.period()};
  const double loga = std::log(p.a);
  const auto f = [&](double h) {
    const std::complex<double> step = h * dir;
    const std::complex<double> den =
        1.0 - static_cast<double>(p.m) * std::exp((sj + step) * loga);
    return cpow_int(step / den, n);
  };

  // Step-halving tableau: T[i][0] = f(h0/2^i),
  // T[i][k] = (2^k T[i][k-1] - T[i-1][k-1]) / (2^k - 1); t[] holds row i.
  std::vector<std::complex<double>> t(static_cast<std::size_t>(levels));
  double h = h0;
  for (int i = 0; i < levels; ++i) {
    std::complex<double> last = f(h);
    for (int k = 1; k <= i; ++k) {
      const double w = std::exp2(k);
      const std::complex<double> next = (w * last - t[k - 1]) / (w - 1.0);
      t[k - 1] = last;
      last = next;
    }
    t[static_cast<std::size_t>(i)] = last;
    h *= 0.5;
  }
  return t[static_cast<std::size_t>(levels - 1)];
}

}  // namespace fractal
