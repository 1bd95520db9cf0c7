#include <cmath>
#include <vector>

#include <doctest.h>

#include "fractal/enumeration.hpp"
#include "fractal/errors.hpp"
#include "fractal/string_expr.hpp"

using namespace fractal;

namespace {

std::vector<LengthTerm> first_terms(const StringExpr& e, std::int64_t n) {
  return enumerate_lengths(e, EnumerationCutoff::max_terms(n));
}

void check_nonincreasing_coalesced(const std::vector<LengthTerm>& terms) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    CHECK(terms[i].length > 0.0);
    CHECK(terms[i].multiplicity >= 1);
    // Strictly decreasing: equal lengths must have been merged.
    if (i > 0) CHECK(terms[i].length < terms[i - 1].length);
  }
}

}  // namespace

TEST_CASE("total length closed forms") {
  CHECK(total_length(make_explicit({0.5, 0.25})) == doctest::Approx(0.75).epsilon(1e-15));
  // Geometric: sum_j m^j a^j = 1/(1-ma).
  CHECK(total_length(make_gen_cantor(2, 1.0 / 3.0)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(total_length(make_cantor_string()) == doctest::Approx(1.0).epsilon(1e-14));
  // Tensor powers multiply total lengths.
  CHECK(total_length(make_power(make_gen_cantor(2, 1.0 / 3.0), 2)) ==
        doctest::Approx(9.0).epsilon(1e-14));
  // Infinite order: exp(1/(1-ma)) - 1.
  CHECK(total_length(make_infinite_order(2, 1.0 / 3.0)) ==
        doctest::Approx(std::expm1(3.0)).epsilon(1e-14));
  CHECK(total_length(scale(0.5, make_explicit({0.5, 0.25}))) ==
        doctest::Approx(0.375).epsilon(1e-15));
  CHECK(total_length(make_union({make_explicit({0.5}), make_explicit({0.25})})) ==
        doctest::Approx(0.75).epsilon(1e-15));
  // Self-similar: 1/(1 - sum r_j) ... at s=1 the total is sum over words =
  // 1/(1-3/4) = 4 for ratios {1/2, 1/4}.
  CHECK(total_length(make_self_similar({0.5, 0.25})) == doctest::Approx(4.0).epsilon(1e-14));
  // Lift: F(|L|_1).
  CHECK(total_length(lift(CoefficientFamily::exp(), make_explicit({0.5, 0.25}))) ==
        doctest::Approx(std::exp(0.75)).epsilon(1e-14));
}

TEST_CASE("max length") {
  CHECK(max_length(make_gen_cantor(2, 1.0 / 3.0)) == doctest::Approx(1.0));
  CHECK(max_length(make_cantor_string()) == doctest::Approx(1.0 / 3.0));
  CHECK(max_length(make_explicit({0.25, 0.5, 0.125})) == doctest::Approx(0.5));
  CHECK(max_length(scale(2.0, make_explicit({0.5}))) == doctest::Approx(1.0));
}

TEST_CASE("factory validation") {
  CHECK_THROWS_AS(make_explicit({0.5, -0.25}), ValidationError);
  CHECK_THROWS_AS(make_explicit(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(make_self_similar({0.5, 0.5}), ValidationError);   // sum = 1
  CHECK_THROWS_AS(make_gen_cantor(2, 0.5), ValidationError);          // ma = 1
  CHECK_THROWS_AS(make_gen_cantor(1, 0.3), ValidationError);          // m < 2
  CHECK_THROWS_AS(scale(0.0, make_explicit({0.5})), ValidationError);
  CHECK_THROWS_AS(make_power(make_explicit({0.5}), 0), ValidationError);
  // Geometric lift needs |L|_1 < 1.
  CHECK_THROWS_AS(lift(CoefficientFamily::geometric(), make_explicit({0.5, 0.5})),
                  ValidationError);
}

TEST_CASE("cantor string leading terms") {
  // Lengths 3^{-j} with multiplicity 2^{j-1}: 1/3, then 1/9 twice, 1/27 four
  // times.
  auto terms = first_terms(make_cantor_string(), 3);
  REQUIRE(terms.size() == 3);
  CHECK(terms[0].length == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(terms[0].multiplicity == 1);
  CHECK(terms[1].length == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  CHECK(terms[1].multiplicity == 2);
  CHECK(terms[2].length == doctest::Approx(1.0 / 27.0).epsilon(1e-15));
  CHECK(terms[2].multiplicity == 4);
}

TEST_CASE("union cursor merges equal lengths") {
  auto u = make_union({make_explicit({0.5, 0.25}), make_explicit({0.5})});
  auto terms = first_terms(u, 10);
  REQUIRE(terms.size() == 2);
  CHECK(terms[0].length == doctest::Approx(0.5));
  CHECK(terms[0].multiplicity == 2);
  CHECK(terms[1].length == doctest::Approx(0.25));
  CHECK(terms[1].multiplicity == 1);
}

TEST_CASE("tensor power enumerates products") {
  // ({1/2, 1/4})^{x2}: 1/4, 1/8 twice, 1/16 once.
  auto sq = make_power(make_explicit({0.5, 0.25}), 2);
  auto terms = first_terms(sq, 10);
  REQUIRE(terms.size() == 3);
  CHECK(terms[0].length == doctest::Approx(0.25));
  CHECK(terms[0].multiplicity == 1);
  CHECK(terms[1].length == doctest::Approx(0.125));
  CHECK(terms[1].multiplicity == 2);
  CHECK(terms[2].length == doctest::Approx(0.0625));
  CHECK(terms[2].multiplicity == 1);
  CHECK(total_length(sq) == doctest::Approx(0.75 * 0.75).epsilon(1e-15));
}

TEST_CASE("self-similar words count like Fibonacci for ratios {1/2,1/4}") {
  // Words over {r1=1/2, r2=1/4} of product 2^{-k}: N_k = N_{k-1} + N_{k-2}.
  auto terms = first_terms(make_self_similar({0.5, 0.25}), 6);
  REQUIRE(terms.size() == 6);
  const std::uint64_t expected[] = {1, 1, 2, 3, 5, 8};
  for (int k = 0; k < 6; ++k) {
    CHECK(terms[k].length == doctest::Approx(std::pow(2.0, -k)).epsilon(1e-14));
    CHECK(terms[k].multiplicity == expected[k]);
  }
}

TEST_CASE("infinite order leading terms") {
  // n=1 contributes 1, then the n=2 block's head 1/2!, then 1/3 of n=1 twice.
  auto e = make_infinite_order(2, 1.0 / 3.0);
  auto terms = first_terms(e, 3);
  REQUIRE(terms.size() == 3);
  CHECK(terms[0].length == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(terms[0].multiplicity == 1);
  CHECK(terms[1].length == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(terms[1].multiplicity == 1);
  CHECK(terms[2].length == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(terms[2].multiplicity == 2);

  auto longer = first_terms(e, 200);
  check_nonincreasing_coalesced(longer);
}

TEST_CASE("cursor peek is stable until pop") {
  auto c = make_cursor(make_cantor_string());
  auto t1 = c->peek();
  auto t2 = c->peek();
  REQUIRE(t1.has_value());
  REQUIRE(t2.has_value());
  CHECK(*t1 == *t2);
  c->pop();
  auto t3 = c->peek();
  REQUIRE(t3.has_value());
  CHECK(t3->length < t1->length);
}

TEST_CASE("finite strings exhaust") {
  auto c = make_cursor(make_explicit({0.5, 0.25, 0.25}));
  REQUIRE(c->peek().has_value());
  CHECK(c->peek()->multiplicity == 1);
  c->pop();
  REQUIRE(c->peek().has_value());
  CHECK(c->peek()->multiplicity == 2);
  c->pop();
  CHECK_FALSE(c->peek().has_value());
  CHECK(is_finite(make_explicit({0.5})));
  CHECK_FALSE(is_finite(make_gen_cantor(2, 1.0 / 3.0)));
}

TEST_CASE("min-length cutoff stops before the first short term") {
  auto terms = enumerate_lengths(make_cantor_string(),
                                 EnumerationCutoff::min_length(0.01));
  // 1/3, 1/9, 1/27, 1/81 >= 0.01 > 1/243.
  REQUIRE(terms.size() == 4);
  CHECK(terms.back().length == doctest::Approx(std::pow(3.0, -4)).epsilon(1e-14));
}

TEST_CASE("multiplicity overflow is detected, not wrapped") {
  // Multiplicities 2^j exceed uint64 at j = 64 while lengths 0.49^j are still
  // representable.
  auto e = make_gen_cantor(2, 0.49);
  CHECK_THROWS_AS(enumerate_lengths(e, EnumerationCutoff::max_terms(66)),
                  OverflowError);
}

TEST_CASE("weighted union with schedule enumerates the scheduled tail") {
  InfinitePartSchedule sched;
  sched.dInfinity = 0.2;
  sched.d1 = 0.5;
  auto e = make_weighted_union({}, {}, sched);
  auto terms = first_terms(e, 50);
  check_nonincreasing_coalesced(terms);
  // Head: every part's largest inner length is 1, so the merged head is the
  // largest weight (weights are not monotone in k: L_k falls off faster than
  // 2^{-k} early on).
  double headWeight = 0.0;
  for (int k = 1; k <= 40; ++k) headWeight = std::max(headWeight, sched.weight(k));
  CHECK(terms[0].length == doctest::Approx(headWeight).epsilon(1e-12));
  // The schedule's own invariants.
  CHECK(sched.dim(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(sched.m(3) == 4);
  for (int k = 1; k <= 12; ++k) {
    CHECK(sched.dim(k) > 0.2);
    if (k > 1) CHECK(sched.dim(k) < sched.dim(k - 1));
    CHECK(sched.part_length(k) ==
          doctest::Approx(std::expm1(1.0 / (1.0 - sched.ma(k)))).epsilon(1e-12));
    CHECK(sched.weight(k) ==
          doctest::Approx(std::exp2(double(-k)) / sched.part_length(k)).epsilon(1e-12));
  }
  CHECK(sched.weight_length_tail(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sched.sup_abscissa() == doctest::Approx(0.5));
}

TEST_CASE("describe is stable and non-empty") {
  CHECK_FALSE(describe(make_cantor_string()).empty());
  CHECK_FALSE(describe(lift(CoefficientFamily::sinh(),
                            make_explicit({0.5, 0.25}))).empty());
  CHECK(describe(make_gen_cantor(2, 1.0 / 3.0)) ==
        describe(make_gen_cantor(2, 1.0 / 3.0)));
}

TEST_CASE("coefficient families") {
  auto f = CoefficientFamily::exp();
  CHECK(f.coefficient(0) == doctest::Approx(1.0));
  CHECK(f.coefficient(3) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(f.entire());
  CHECK(f.value(0.75) == doctest::Approx(std::exp(0.75)).epsilon(1e-15));

  auto g = CoefficientFamily::geometric();
  CHECK(g.coefficient(0) == 0.0);
  CHECK(g.coefficient(5) == doctest::Approx(1.0));
  CHECK(g.radius() == doctest::Approx(1.0));
  CHECK_FALSE(g.entire());
  CHECK(g.value(0.5) == doctest::Approx(1.0).epsilon(1e-15));  // x/(1-x)

  auto h = CoefficientFamily::cosh();
  CHECK(h.coefficient(1) == 0.0);
  CHECK(h.coefficient(2) == doctest::Approx(0.5));
  CHECK(h.value(3.0) == doctest::Approx(std::cosh(3.0)).epsilon(1e-15));

  // Tail bounds are real bounds: compare against a brute partial tail.
  const double sigma = 1.0, Z = 3.0;
  double brute = 0.0;
  for (int n = 11; n <= 60; ++n)
    brute += std::pow(f.coefficient(n), sigma) * std::pow(Z, n);
  CHECK(f.tail_bound(10, sigma, Z) >= brute);
}
