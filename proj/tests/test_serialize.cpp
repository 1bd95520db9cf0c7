#include <cmath>
#include <complex>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "fractal/distance_zeta.hpp"
#include "fractal/errors.hpp"
#include "fractal/parse.hpp"
#include "fractal/prescribe.hpp"
#include "fractal/serialize.hpp"
#include "fractal/string_expr.hpp"

using namespace fractal;
using nlohmann::json;

namespace {

void check_expr_round_trip(const StringExpr& e) {
  const json j = to_json(e);
  const StringExpr back = string_expr_from_json(j);
  CHECK(to_json(back) == j);  // structural identity, bit-for-bit numbers
  CHECK(total_length(back) == total_length(e));
}

}  // namespace

TEST_CASE("expression JSON round trips") {
  InfinitePartSchedule sched;
  sched.dInfinity = 0.2;
  sched.d1 = 0.5;
  check_expr_round_trip(make_explicit({0.5, 0.25, 0.25}));
  check_expr_round_trip(make_self_similar({0.5, 0.25}));
  check_expr_round_trip(make_gen_cantor(2, 1.0 / 3.0));
  check_expr_round_trip(make_cantor_string());
  check_expr_round_trip(make_power(make_gen_cantor(3, 0.2), 4));
  check_expr_round_trip(make_infinite_order(2, 1.0 / 3.0));
  check_expr_round_trip(scale(0.125, make_explicit({0.5})));
  check_expr_round_trip(make_union({make_explicit({0.5}), make_gen_cantor(2, 0.3)}));
  check_expr_round_trip(make_weighted_union({}, {}, sched));
  check_expr_round_trip(make_weighted_union({0.5, 0.25},
                                            {make_explicit({0.5}),
                                             make_gen_cantor(2, 0.3)}));
  check_expr_round_trip(lift(CoefficientFamily::cosh(), make_explicit({0.5, 0.25})));
  check_expr_round_trip(lift(CoefficientFamily::geometric(), make_explicit({0.5, 0.25})));
}

TEST_CASE("custom coefficient families refuse to serialize") {
  auto family = CoefficientFamily::custom(
      "mystery", [](std::int64_t) { return 0.5; }, 1.0,
      [](double x) { return x; },
      [](std::int64_t, double, double) { return 1e308; });
  CHECK_THROWS_AS(to_json(lift(family, make_explicit({0.25}))), ValidationError);
}

TEST_CASE("malformed expression JSON is rejected") {
  CHECK_THROWS_AS(string_expr_from_json(json{{"op", "nonsense"}}), ValidationError);
  CHECK_THROWS_AS(string_expr_from_json(json{{"op", "gencantor"}, {"m", 2}}),
                  ValidationError);
  CHECK_THROWS_AS(
      string_expr_from_json(json{{"op", "gencantor"}, {"m", 2}, {"a", 0.9}}),
      ValidationError);  // m*a >= 1: factories re-validate
  CHECK_THROWS_AS(string_expr_from_json(json::parse("[1,2,3]")), ValidationError);
}

TEST_CASE("geometric set JSON round trips") {
  auto base = make_realization(make_cantor_string());
  for (const GeometricSet& set :
       {base, make_gen_cantor_set(3, 0.2), make_grill(base, 2),
        make_embedded_flat(make_gen_cantor_set(2, 1.0 / 3.0), 1),
        make_union_set({make_grill(base, 1),
                        make_grill(make_gen_cantor_set(2, 1.0 / 3.0), 1)})}) {
    const json j = to_json(set);
    const GeometricSet back = geometric_set_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(ambient_dimension(back) == ambient_dimension(set));
  }
}

TEST_CASE("prescribed string JSON round trips through reconstruction") {
  PrescribedString p = construct(0.1, 0.3, 0.7, {0.4, 3, 0.0});
  const json j = to_json(p);
  PrescribedString back = prescribed_from_json(j);
  CHECK(back.dInfinity == p.dInfinity);
  CHECK(back.d1 == p.d1);
  CHECK(back.d == p.d);
  CHECK(back.options.theta == p.options.theta);
  CHECK(back.options.mStart == p.options.mStart);
  CHECK(to_json(back.expr) == to_json(p.expr));
  REQUIRE(back.extraAtom.has_value());
  CHECK(back.extraAtom->a == p.extraAtom->a);
}

TEST_CASE("report serialization carries exactness tags") {
  PrescribedString p = construct(0.2, 0.5, 0.5);
  const json j = to_json(report(p));
  CHECK(j.at("dPar").get<double>() == doctest::Approx(0.2));
  CHECK(j.at("barrier").get<double>() == doctest::Approx(0.2));
  CHECK(j.at("parExactness").get<std::string>() == "exact-by-construction");
  const json c = to_json(construction_report(p, 4));
  CHECK(c.at("parts").size() == 4);
  CHECK(c.at("coreTotalLength").get<double>() == doctest::Approx(1.0));
}

// --- the expression mini-language ------------------------------------------------

TEST_CASE("parser handles the atoms") {
  CHECK(to_json(parse_string_expr("cantor")) == to_json(make_cantor_string()));
  CHECK(to_json(parse_string_expr("gencantor:2,0.25")) ==
        to_json(make_gen_cantor(2, 0.25)));
  CHECK(to_json(parse_string_expr("selfsim:0.5,0.25")) ==
        to_json(make_self_similar({0.5, 0.25})));
  CHECK(to_json(parse_string_expr("inforder:2,0.25")) ==
        to_json(make_infinite_order(2, 0.25)));
  CHECK(to_json(parse_string_expr("explicit:0.5,0.25")) ==
        to_json(make_explicit({0.5, 0.25})));
}

TEST_CASE("parser handles nesting and whitespace") {
  auto e = parse_string_expr(" scale:0.5( union( explicit:0.5,0.25 ; gencantor:2,0.3 ) ) ");
  auto expected = scale(0.5, make_union({make_explicit({0.5, 0.25}),
                                         make_gen_cantor(2, 0.3)}));
  CHECK(to_json(e) == to_json(expected));

  CHECK(to_json(parse_string_expr("power:3(gencantor:2,0.25)")) ==
        to_json(make_power(make_gen_cantor(2, 0.25), 3)));
  CHECK(to_json(parse_string_expr("lift:cosh(explicit:0.5,0.25)")) ==
        to_json(lift(CoefficientFamily::cosh(), make_explicit({0.5, 0.25}))));
}

TEST_CASE("parser reports positions on junk") {
  CHECK_THROWS_AS(parse_string_expr("gencantor:2"), ValidationError);
  CHECK_THROWS_AS(parse_string_expr("unknown:1"), ValidationError);
  CHECK_THROWS_AS(parse_string_expr("cantor trailing"), ValidationError);
  CHECK_THROWS_AS(parse_string_expr(""), ValidationError);
  try {
    parse_string_expr("union(cantor;)");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
}

TEST_CASE("geometric set parsing") {
  CHECK(to_json(parse_geometric_set("realization:cantor")) ==
        to_json(make_realization(make_cantor_string())));
  CHECK(to_json(parse_geometric_set("gencantorset:2,0.25")) ==
        to_json(make_gen_cantor_set(2, 0.25)));
  CHECK(to_json(parse_geometric_set("grill:2(realization:cantor)")) ==
        to_json(make_grill(make_realization(make_cantor_string()), 2)));
  CHECK(to_json(parse_geometric_set("flat:1(gencantorset:2,0.25)")) ==
        to_json(make_embedded_flat(make_gen_cantor_set(2, 0.25), 1)));
  auto uni = parse_geometric_set(
      "unionset(grill:1(realization:cantor);grill:1(gencantorset:2,0.25))");
  CHECK(ambient_dimension(uni) == 2);
  // Constructed sets parse to their realized geometry.
  auto built = parse_geometric_set("constructed:0.2,0.5,0.5,1");
  CHECK(built.get_if<RealizationSet>() != nullptr);
}

TEST_CASE("complex number parsing") {
  auto c = [](double re, double im) { return std::complex<double>(re, im); };
  CHECK(parse_complex("1+0i") == c(1, 0));
  CHECK(parse_complex("2.5") == c(2.5, 0));
  CHECK(parse_complex("-1.5-2i") == c(-1.5, -2));
  CHECK(parse_complex("i") == c(0, 1));
  CHECK(parse_complex("-i") == c(0, -1));
  CHECK(parse_complex("3e-2+1e+1i") == c(0.03, 10));
  CHECK(parse_complex("1e5i") == c(0, 1e5));
  CHECK(parse_complex(" 2 + 3i ") == c(2, 3));
  CHECK_THROWS_AS(parse_complex("banana"), ValidationError);
  CHECK_THROWS_AS(parse_complex(""), ValidationError);
  CHECK_THROWS_AS(parse_complex("1+2j"), ValidationError);
}
