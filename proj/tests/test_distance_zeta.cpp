#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <doctest.h>

#include "fractal/distance_zeta.hpp"
#include "fractal/errors.hpp"
#include "fractal/string_expr.hpp"

using namespace fractal;
using cplx = std::complex<double>;

namespace {

// --- independent geometric oracles -------------------------------------------

// Individual (uncoalesced) cantor-string lengths, largest first, down to
// level `levels`: 3^{-k} repeated 2^{k-1} times.
std::vector<double> cantor_lengths(int levels) {
  std::vector<double> out;
  for (int k = 1; k <= levels; ++k)
    out.insert(out.end(), std::size_t(1) << (k - 1), std::pow(3.0, -k));
  return out;
}

// Realization points: suffix sums of the length sequence (plus both ends).
// The enumeration is truncated, so anchor the sums at the exact total (1) by
// starting the accumulator at the dropped tail; otherwise every point sits
// (2/3)^levels too low.
std::vector<double> cantor_points(int levels) {
  auto ls = cantor_lengths(levels);
  double acc = 1.0;
  for (double l : ls) acc -= l;  // = the tail beyond `levels`
  std::vector<double> pts{0.0};
  for (auto it = ls.rbegin(); it != ls.rend(); ++it) pts.push_back(acc += *it);
  return pts;
}

double brute_distance(const std::vector<double>& pts, double x) {
  double best = 1e300;
  for (double p : pts) best = std::min(best, std::abs(x - p));
  return best;
}

// 1-D tube volume of the cantor-string realization: the caps plus every gap,
// less the uncovered middles of gaps wider than 2r.
double tube_length_1d(double r) {
  double v = 1.0 + 2.0 * r;
  for (int k = 1; k <= 70; ++k) {
    const double gap = std::pow(3.0, -k);
    const double uncovered = gap - 2.0 * r;
    if (uncovered <= 0.0) break;  // later gaps are narrower
    v -= std::pow(2.0, k - 1) * uncovered;
  }
  return v;
}

// Exact area of the delta-tube of A x [0,1] in R^2 (A the cantor-string
// realization).  Product structure: d((x,y), A x [0,1])^2 =
// d_A(x)^2 + dist(y,[0,1])^2, so slicing in y gives
//   area = m(delta) + 2 * I,  I = integral_0^delta m(sqrt(delta^2-t^2)) dt,
// with m the 1-D tube volume.  Every piece of I is elementary.
double grill_tube_area(double delta) {
  auto F = [&](double t) {
    const double c = std::sqrt(std::max(0.0, delta * delta - t * t));
    return 0.5 * (t * c + delta * delta * std::asin(std::min(1.0, t / delta)));
  };
  // integral of 1 + 2*sqrt(delta^2 - t^2) over [0, delta]
  double integral = delta + M_PI * delta * delta / 2.0;
  for (int k = 1; k <= 70; ++k) {
    const double gap = std::pow(3.0, -k);
    const double tk =
        std::sqrt(std::max(0.0, delta * delta - gap * gap / 4.0));
    const double piece = gap * (delta - tk) - 2.0 * (F(delta) - F(tk));
    const double w = std::pow(2.0, k - 1) * piece;
    integral -= w;
    if (gap < 2.0 * delta && w < 1e-18) break;
  }
  return tube_length_1d(delta) + 2.0 * integral;
}

}  // namespace

// --- construction and distance fields -----------------------------------------

TEST_CASE("set factories validate") {
  auto line = make_realization(make_cantor_string());
  CHECK(ambient_dimension(line) == 1);
  CHECK(ambient_dimension(make_grill(line, 2)) == 3);
  CHECK(ambient_dimension(make_embedded_flat(make_grill(line, 1), 3)) == 5);

  CHECK_THROWS_AS(make_grill(make_grill(line, 1), 1), ValidationError);
  CHECK_THROWS_AS(make_grill(line, 0), ValidationError);
  CHECK_THROWS_AS(make_gen_cantor_set(2, 0.5), ValidationError);
  CHECK_THROWS_AS(make_union_set({}), ValidationError);
  CHECK_THROWS_AS(
      make_union_set({line, make_grill(make_realization(make_cantor_string()), 1)}),
      ValidationError);
}

TEST_CASE("realization distances match a brute-force point list") {
  auto set = make_realization(make_cantor_string());
  DistanceField f = DistanceField::build(set, 0.25);
  CHECK(f.ambient() == 1);
  CHECK(f.hull().lo[0] == doctest::Approx(0.0));
  CHECK(f.hull().hi[0] == doctest::Approx(1.0));

  auto pts = cantor_points(14);
  for (double x : {0.5, 0.62, 0.7, 0.85, 0.98, 1.2, -0.06}) {
    const double got = f.distance(&x, 1);
    CHECK(got == doctest::Approx(brute_distance(pts, x)).epsilon(1e-12));
  }
  // A concrete hand value: nearest points to 1/2 are 4/9 and 5/9.
  double x = 0.5;
  CHECK(f.distance(&x, 1) == doctest::Approx(1.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("generalized Cantor set distances") {
  auto set = make_gen_cantor_set(2, 1.0 / 3.0);
  DistanceField f = DistanceField::build(set, 0.5);
  auto d1 = [&](double x) { return f.distance(&x, 1); };
  CHECK(d1(0.5) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(d1(1.0 / 3.0 + 0.01) == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(d1(1.0 / 9.0 + 1.0 / 54.0) == doctest::Approx(1.0 / 54.0).epsilon(1e-10));
  CHECK(d1(0.25) <= 1e-15);  // 0.25 lies in the set (ternary 0.020202...)
  CHECK(d1(-0.2) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(d1(1.1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("grill, flat and union distances compose") {
  auto base = make_gen_cantor_set(2, 1.0 / 3.0);
  DistanceField grill = DistanceField::build(make_grill(base, 1), 0.5);
  double p1[2] = {0.5, 0.5};
  CHECK(grill.distance(p1, 2) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  double p2[2] = {0.5, 1.3};
  CHECK(grill.distance(p2, 2) ==
        doctest::Approx(std::hypot(1.0 / 6.0, 0.3)).epsilon(1e-12));
  double p3[2] = {0.25, -0.4};
  CHECK(grill.distance(p3, 2) == doctest::Approx(0.4).epsilon(1e-10));

  DistanceField flat = DistanceField::build(make_embedded_flat(base, 1), 0.5);
  double q[2] = {0.5, 0.3};
  CHECK(flat.distance(q, 2) ==
        doctest::Approx(std::hypot(1.0 / 6.0, 0.3)).epsilon(1e-12));

  DistanceField uni = DistanceField::build(
      make_union_set({make_embedded_flat(base, 1), make_grill(base, 1)}), 0.5);
  CHECK(uni.distance(q, 2) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  CHECK_THROWS_AS(grill.distance(p1, 1), ValidationError);
}

// --- one-dimensional closed form ------------------------------------------------

TEST_CASE("line distance zeta: measure identity at s = 1") {
  // zeta_A(1) = |A_delta| = |L|_1 + 2 delta once delta > l1/2.
  CHECK(dzeta_line(make_cantor_string(), 1.0, 1.0).real() ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::abs(dzeta_line(make_cantor_string(), 1.0, 1.0).imag()) <= 1e-12);
  CHECK(dzeta_line(make_explicit({0.5, 0.25}), 1.0, 0.3).real() ==
        doctest::Approx(1.35).epsilon(1e-12));
}

TEST_CASE("line distance zeta agrees with Monte Carlo") {
  auto e = make_explicit({0.5, 0.25});
  auto set = make_realization(e);
  for (cplx s : {cplx{1.6, 0.0}, cplx{1.2, 0.8}}) {
    const cplx closed = dzeta_line(e, s, 0.3);
    MonteCarloResult mc = dzeta_monte_carlo(set, s, 0.3, 200000, 17);
    CHECK(std::abs(mc.value - closed) <= 3.0 * mc.standardError + 1e-12);
  }
}

TEST_CASE("line distance zeta guards") {
  auto e = make_cantor_string();
  CHECK_THROWS_AS(dzeta_line(e, 1.0, 0.1), ValidationError);      // delta <= l1/2
  CHECK_THROWS_AS(dzeta_line(e, cplx{0.0, 0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(dzeta_line(e, cplx{0.3, 0.0}, 1.0), DomainError);
}

// --- Monte Carlo ------------------------------------------------------------------

TEST_CASE("Monte Carlo is deterministic for a fixed seed") {
  auto set = make_grill(make_realization(make_cantor_string()), 1);
  MonteCarloResult a = dzeta_monte_carlo(set, cplx{2.2, 0.7}, 0.34, 50000, 99);
  MonteCarloResult b = dzeta_monte_carlo(set, cplx{2.2, 0.7}, 0.34, 50000, 99);
  CHECK(a.value.real() == b.value.real());
  CHECK(a.value.imag() == b.value.imag());
  CHECK(a.standardError == b.standardError);
  MonteCarloResult c = dzeta_monte_carlo(set, cplx{2.2, 0.7}, 0.34, 50000, 100);
  CHECK(a.value != c.value);  // different seed, different stream
}

TEST_CASE("Monte Carlo measure identity in one dimension") {
  auto set = make_realization(make_cantor_string());
  // delta = 0.1: only the level-1 gap (1/3) stays partly uncovered.
  const double expected = 1.0 + 2.0 * 0.1 - (1.0 / 3.0 - 0.2);
  MonteCarloResult mc = dzeta_monte_carlo(set, 1.0, 0.1, 400000, 5);
  CHECK(mc.warning.empty());
  CHECK(std::abs(mc.value.real() - expected) <= 3.0 * mc.standardError);
  CHECK(std::abs(mc.value.imag()) <= 3.0 * mc.standardError);
  CHECK(tube_length_1d(0.1) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("Monte Carlo warns below the expected dimension") {
  auto set = make_realization(make_cantor_string());
  MonteCarloResult mc = dzeta_monte_carlo(set, cplx{0.5, 0.0}, 0.2, 2000, 3);
  CHECK_FALSE(mc.warning.empty());
  CHECK_THROWS_AS(dzeta_monte_carlo(set, 1.0, 0.2, 10, 3), ValidationError);
}

// --- grill shift identity ------------------------------------------------------

TEST_CASE("grill measure identity at s = N") {
  const double delta = 0.34;
  const double area = grill_tube_area(delta);
  auto grillSet = make_grill(make_realization(make_cantor_string()), 1);

  MonteCarloResult mc = dzeta_monte_carlo(grillSet, 2.0, delta, 400000, 7);
  CHECK(std::abs(mc.value.real() - area) <= 3.0 * mc.standardError);

  GrillZetaResult g = dzeta_grill(make_cantor_string(), 2, 2.0, delta, 400000, 11);
  CHECK(std::abs(g.value.real() - area) <= 3.0 * g.standardError + 1e-9);
  CHECK(std::abs(g.value.imag()) <= 3.0 * g.standardError + 1e-9);
  // The exact part alone carries the shifted string zeta: at s = 2 it is
  // |L|_1 + 2 delta (the 1-D tube volume of the base, gaps fully covered).
  CHECK(g.exactPart.real() == doctest::Approx(1.0 + 2.0 * delta).epsilon(1e-10));
}

TEST_CASE("shift identity against direct sampling in the plane") {
  auto grillSet = make_grill(make_realization(make_cantor_string()), 1);
  const double delta = 0.34;
  for (cplx s : {cplx{1.8, 0.5}, cplx{2.1, 0.0}, cplx{2.4, -1.2}}) {
    MonteCarloResult lhs = dzeta_monte_carlo(grillSet, s, delta, 250000, 21);
    GrillZetaResult rhs = dzeta_grill(make_cantor_string(), 2, s, delta, 250000, 22);
    const double tol =
        3.0 * std::hypot(lhs.standardError, rhs.standardError) + 1e-9;
    CHECK(std::abs(lhs.value - rhs.value) <= tol);
  }
}

TEST_CASE("grill identity in three dimensions exercises the edge terms") {
  auto grillSet = make_grill(make_realization(make_cantor_string()), 2);
  const double delta = 0.3;
  // Re s must clear the shifted abscissa D + N - 1 = log_3 2 + 2.
  const cplx s{2.8, 0.4};
  MonteCarloResult lhs = dzeta_monte_carlo(grillSet, s, delta, 300000, 31);
  GrillZetaResult rhs = dzeta_grill(make_cantor_string(), 3, s, delta, 300000, 32);
  const double tol =
      3.0 * std::hypot(lhs.standardError, rhs.standardError) + 1e-9;
  CHECK(std::abs(lhs.value - rhs.value) <= tol);
}

TEST_CASE("grill zeta guards") {
  auto e = make_cantor_string();
  CHECK_THROWS_AS(dzeta_grill(e, 1, 2.0, 0.4, 10000), ValidationError);
  CHECK_THROWS_AS(dzeta_grill(e, 2, cplx{1.0, 0.0}, 0.4, 10000), DomainError);
  CHECK_THROWS_AS(dzeta_grill(e, 2, cplx{1.5, 0.0}, 0.4, 10000), DomainError);
  CHECK_THROWS_AS(dzeta_grill(e, 2, 2.0, 0.05, 10000), ValidationError);
}

// --- singularity bookkeeping -----------------------------------------------------

TEST_CASE("expression lattices") {
  auto cantorLat = expression_lattices(make_gen_cantor(2, 1.0 / 3.0));
  REQUIRE(cantorLat.size() == 1);
  CHECK(cantorLat[0].kind == SingularityLattice::Kind::Pole);
  CHECK(cantorLat[0].realPart ==
        doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(1e-13));

  auto powLat = expression_lattices(make_power(make_gen_cantor(2, 1.0 / 3.0), 3));
  REQUIRE(powLat.size() == 1);
  CHECK(powLat[0].poleOrder == 3);

  auto essLat = expression_lattices(make_infinite_order(2, 1.0 / 3.0));
  REQUIRE(essLat.size() == 1);
  CHECK(essLat[0].kind == SingularityLattice::Kind::Essential);

  auto moranLat = expression_lattices(make_self_similar({0.5, 0.25}));
  REQUIRE(moranLat.size() == 1);
  CHECK(moranLat[0].realPart ==
        doctest::Approx(std::log2((1.0 + std::sqrt(5.0)) / 2.0)).epsilon(1e-10));
  CHECK(moranLat[0].period == 0.0);

  CHECK(expression_lattices(make_explicit({0.5, 0.25})).empty());
}

TEST_CASE("grill shift adds an isolated point exactly when 0 is singular") {
  // zeta(0) = -1 cancels the boundary pole of the 1-D tube formula:
  // the cantor string has zeta(0) = 1/(1-2) = -1, gencantor(3, 1/5) has
  // zeta(0) = 1/(1-3) = -1/2.
  auto shifted = set_singularities(
      make_grill(make_realization(make_gen_cantor(3, 0.2)), 1));
  REQUIRE(shifted.isolatedPoints.size() == 1);
  CHECK(shifted.isolatedPoints[0] == doctest::Approx(1.0));
  REQUIRE(shifted.lattices.size() == 1);
  CHECK(shifted.lattices[0].realPart ==
        doctest::Approx(1.0 + std::log(3.0) / std::log(5.0)).epsilon(1e-12));

  CHECK(set_singularities(
            make_grill(make_realization(make_cantor_string()), 1))
            .isolatedPoints.empty());
  // The complement string of C^(m,a) has zeta(0) = -1 for every m.
  CHECK(set_singularities(make_grill(make_gen_cantor_set(3, 0.2), 1))
            .isolatedPoints.empty());
}

// --- prescribed sets -------------------------------------------------------------

TEST_CASE("construct_set case (i): the line") {
  PrescribedSet ps = construct_set(0.2, 0.5, 0.5, 1);
  CHECK(ps.ambientN == 1);
  CHECK(ps.set.get_if<RealizationSet>() != nullptr);
  CHECK(ps.construction.find("case (i)") != std::string::npos);
  auto sing = set_singularities(ps.set);
  REQUIRE_FALSE(sing.lattices.empty());
  double top = -1.0, bottom = 1e300;
  for (const auto& lat : sing.lattices) {
    top = std::max(top, lat.realPart);
    bottom = std::min(bottom, lat.realPart);
  }
  CHECK(top == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(bottom > 0.2);
  CHECK(bottom < 0.21);  // deep parts crowd the barrier
}

TEST_CASE("construct_set case (ii): one grill") {
  PrescribedSet ps = construct_set(1.2, 1.5, 1.8, 2);
  CHECK(ps.ambientN == 2);
  const auto* grill = ps.set.get_if<GrillSet>();
  REQUIRE(grill != nullptr);
  CHECK(grill->extraDims == 1);
  CHECK(ps.construction.find("case (ii)") != std::string::npos);

  auto sing = set_singularities(ps.set);
  bool sawTop = false;
  for (const auto& lat : sing.lattices) {
    CHECK(lat.realPart > 1.2);
    CHECK(lat.realPart <= 1.8 + 1e-9);
    if (std::abs(lat.realPart - 1.8) < 1e-9) {
      sawTop = true;
      CHECK(lat.kind == SingularityLattice::Kind::Pole);
    }
  }
  CHECK(sawTop);
}

TEST_CASE("construct_set case (iii): union of three components") {
  PrescribedSet ps = construct_set(0.3, 1.4, 2.6, 3);
  CHECK(ps.ambientN == 3);
  const auto* uni = ps.set.get_if<UnionSetParts>();
  REQUIRE(uni != nullptr);
  CHECK(uni->parts.size() == 3);
  CHECK(ps.construction.find("case (iii)") != std::string::npos);

  auto sing = set_singularities(ps.set);
  bool sawMer = false, sawAbs = false;
  double bottom = 1e300;
  for (const auto& lat : sing.lattices) {
    bottom = std::min(bottom, lat.realPart);
    CHECK(lat.realPart <= 2.6 + 1e-9);
    if (std::abs(lat.realPart - 1.4) < 1e-9) {
      sawMer = true;
      CHECK(lat.kind == SingularityLattice::Kind::Essential);
    }
    if (std::abs(lat.realPart - 2.6) < 1e-9) {
      sawAbs = true;
      CHECK(lat.kind == SingularityLattice::Kind::Pole);
    }
  }
  CHECK(sawMer);
  CHECK(sawAbs);
  CHECK(bottom > 0.3);
  CHECK(bottom < 0.31);
}

TEST_CASE("construct_set validates and guards integer targets") {
  CHECK_THROWS_AS(construct_set(0.5, 0.4, 0.6, 1), ValidationError);
  CHECK_THROWS_AS(construct_set(0.2, 0.5, 2.2, 2), ValidationError);  // d >= N
  CHECK_THROWS_AS(construct_set(-0.1, 0.5, 0.6, 1), ValidationError);
  CHECK_THROWS_AS(construct_set(0.3, 2.0, 2.5, 3), ValidationError);
  CHECK_THROWS_AS(construct_set(0.3, 1.4, 2.0, 3), ValidationError);
  PrescribedSet ok = construct_set(0.3, 2.0, 2.5, 3, {0.5, 2, 1e-3});
  CHECK(ok.ambientN == 3);
  PrescribedSet ok2 = construct_set(0.3, 1.4, 2.0, 3, {0.5, 2, 1e-3});
  CHECK(ok2.ambientN == 3);
}
