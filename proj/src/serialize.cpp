#include "fractal/serialize.hpp"

#include <string>
#include <utility>
#include <variant>

#include "fractal/errors.hpp"

namespace fractal {

namespace {

using nlohmann::json;

json complex_json(std::complex<double> z) {
  return json{{"re", z.real()}, {"im", z.imag()}};
}

const char* family_tag(CoefficientFamily::Kind kind) {
  switch (kind) {
    case CoefficientFamily::Kind::Exp: return "exp";
    case CoefficientFamily::Kind::ExpMinusOne: return "expm1";
    case CoefficientFamily::Kind::Cosh: return "cosh";
    case CoefficientFamily::Kind::Sinh: return "sinh";
    case CoefficientFamily::Kind::Geometric: return "geometric";
    case CoefficientFamily::Kind::Log: return "log";
    case CoefficientFamily::Kind::Custom: break;
  }
  throw ValidationError("to_json: custom coefficient families are not "
                        "serializable");
}

CoefficientFamily family_from_tag(const std::string& tag) {
  if (tag == "exp") return CoefficientFamily::exp();
  if (tag == "expm1") return CoefficientFamily::exp_minus_one();
  if (tag == "cosh") return CoefficientFamily::cosh();
  if (tag == "sinh") return CoefficientFamily::sinh();
  if (tag == "geometric") return CoefficientFamily::geometric();
  if (tag == "log") return CoefficientFamily::log();
  throw ValidationError("from_json: unknown coefficient family '" + tag + "'");
}

json schedule_json(const InfinitePartSchedule& s) {
  return json{{"dInfinity", s.dInfinity},
              {"d1", s.d1},
              {"theta", s.theta},
              {"mStart", s.mStart}};
}

InfinitePartSchedule schedule_from_json(const json& j) {
  InfinitePartSchedule s;
  s.dInfinity = j.at("dInfinity").get<double>();
  s.d1 = j.at("d1").get<double>();
  s.theta = j.at("theta").get<double>();
  s.mStart = j.at("mStart").get<std::int64_t>();
  return s;
}

json expr_json(const StringExpr& e) {
  return std::visit(
      [](const auto& node) -> json {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          json terms = json::array();
          for (const LengthTerm& t : node.terms)
            terms.push_back(json{{"length", t.length},
                                 {"multiplicity", t.multiplicity}});
          return json{{"op", "explicit"}, {"terms", std::move(terms)}};
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          return json{{"op", "selfsim"}, {"ratios", node.ratios}};
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          return json{{"op", "gencantor"}, {"m", node.m}, {"a", node.a}};
        } else if constexpr (std::is_same_v<T, PowerString>) {
          return json{{"op", "power"}, {"n", node.n},
                      {"base", expr_json(*node.base)}};
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          return json{{"op", "inforder"}, {"m", node.m}, {"a", node.a}};
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          return json{{"op", "scale"}, {"gamma", node.gamma},
                      {"inner", expr_json(*node.inner)}};
        } else if constexpr (std::is_same_v<T, UnionString>) {
          json parts = json::array();
          for (const StringExpr& p : node.parts) parts.push_back(expr_json(p));
          return json{{"op", "union"}, {"parts", std::move(parts)}};
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          json parts = json::array();
          for (const StringExpr& p : node.parts) parts.push_back(expr_json(p));
          json out{{"op", "weighted_union"},
                   {"weights", node.weights},
                   {"parts", std::move(parts)}};
          out["schedule"] =
              node.schedule ? schedule_json(*node.schedule) : json(nullptr);
          return out;
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          return json{{"op", "lift"},
                      {"family", family_tag(node.family.kind())},
                      {"inner", expr_json(*node.inner)}};
        }
      },
      e.node());
}

StringExpr expr_from_json(const json& j) {
  const std::string op = j.at("op").get<std::string>();
  if (op == "explicit") {
    std::vector<LengthTerm> terms;
    for (const json& t : j.at("terms"))
      terms.push_back(LengthTerm{t.at("length").get<double>(),
                                 t.at("multiplicity").get<std::uint64_t>()});
    return make_explicit(std::move(terms));
  }
  if (op == "selfsim")
    return make_self_similar(j.at("ratios").get<std::vector<double>>());
  if (op == "gencantor")
    return make_gen_cantor(j.at("m").get<std::int64_t>(),
                           j.at("a").get<double>());
  if (op == "power")
    return make_power(expr_from_json(j.at("base")),
                      j.at("n").get<std::int64_t>());
  if (op == "inforder")
    return make_infinite_order(j.at("m").get<std::int64_t>(),
                               j.at("a").get<double>());
  if (op == "scale")
    return scale(j.at("gamma").get<double>(), expr_from_json(j.at("inner")));
  if (op == "union") {
    std::vector<StringExpr> parts;
    for (const json& p : j.at("parts")) parts.push_back(expr_from_json(p));
    return make_union(std::move(parts));
  }
  if (op == "weighted_union") {
    std::vector<StringExpr> parts;
    for (const json& p : j.at("parts")) parts.push_back(expr_from_json(p));
    std::optional<InfinitePartSchedule> schedule;
    if (j.contains("schedule") && !j.at("schedule").is_null())
      schedule = schedule_from_json(j.at("schedule"));
    return make_weighted_union(j.at("weights").get<std::vector<double>>(),
                               std::move(parts), schedule);
  }
  if (op == "lift")
    return lift(family_from_tag(j.at("family").get<std::string>()),
                expr_from_json(j.at("inner")));
  throw ValidationError("from_json: unknown expression op '" + op + "'");
}

json set_json(const GeometricSet& s) {
  return std::visit(
      [](const auto& node) -> json {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, RealizationSet>) {
          return json{{"set", "realization"}, {"of", expr_json(node.of)}};
        } else if constexpr (std::is_same_v<T, GenCantorSet>) {
          return json{{"set", "gencantorset"}, {"m", node.m}, {"a", node.a}};
        } else if constexpr (std::is_same_v<T, GrillSet>) {
          return json{{"set", "grill"}, {"extraDims", node.extraDims},
                      {"base", set_json(*node.base)}};
        } else if constexpr (std::is_same_v<T, EmbeddedFlatSet>) {
          return json{{"set", "flat"}, {"zeroDims", node.zeroDims},
                      {"base", set_json(*node.base)}};
        } else {
          static_assert(std::is_same_v<T, UnionSetParts>);
          json parts = json::array();
          for (const GeometricSet& p : node.parts) parts.push_back(set_json(p));
          return json{{"set", "unionset"}, {"parts", std::move(parts)}};
        }
      },
      s.node());
}

GeometricSet set_from_json(const json& j) {
  const std::string tag = j.at("set").get<std::string>();
  if (tag == "realization")
    return make_realization(expr_from_json(j.at("of")));
  if (tag == "gencantorset")
    return make_gen_cantor_set(j.at("m").get<std::int64_t>(),
                               j.at("a").get<double>());
  if (tag == "grill")
    return make_grill(set_from_json(j.at("base")),
                      j.at("extraDims").get<int>());
  if (tag == "flat")
    return make_embedded_flat(set_from_json(j.at("base")),
                              j.at("zeroDims").get<int>());
  if (tag == "unionset") {
    std::vector<GeometricSet> parts;
    for (const json& p : j.at("parts")) parts.push_back(set_from_json(p));
    return make_union_set(std::move(parts));
  }
  throw ValidationError("from_json: unknown set tag '" + tag + "'");
}

// nlohmann throws its own exception hierarchy on missing/mistyped fields;
// surface those as validation failures like every other malformed input.
template <typename F>
auto rethrow_as_validation(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("from_json: ") + e.what());
  }
}

}  // namespace

json to_json(const StringExpr& e) { return expr_json(e); }

StringExpr string_expr_from_json(const json& j) {
  return rethrow_as_validation([&] { return expr_from_json(j); });
}

json to_json(const PrescribedString& p) {
  json out{{"dInfinity", p.dInfinity},
           {"d1", p.d1},
           {"d", p.d},
           {"options",
            json{{"theta", p.options.theta},
                 {"mStart", p.options.mStart},
                 {"epsilonOffset", p.options.epsilonOffset}}}};
  out["extraAtom"] = p.extraAtom
                         ? json{{"m", p.extraAtom->m}, {"a", p.extraAtom->a}}
                         : json(nullptr);
  out["expr"] = expr_json(p.expr);
  return out;
}

PrescribedString prescribed_from_json(const json& j) {
  // The construction is deterministic in its targets and options, so the
  // stored expression is informational; rebuilding guarantees consistency.
  return rethrow_as_validation([&] {
    ConstructOptions options;
    if (j.contains("options")) {
      const json& o = j.at("options");
      options.theta = o.value("theta", options.theta);
      options.mStart = o.value("mStart", options.mStart);
      options.epsilonOffset = o.value("epsilonOffset", options.epsilonOffset);
    }
    return construct(j.at("dInfinity").get<double>(),
                     j.at("d1").get<double>(), j.at("d").get<double>(),
                     options);
  });
}

json to_json(const AbscissaReport& r) {
  auto tag = [](AbscissaReport::Exactness e) {
    return e == AbscissaReport::Exactness::ExactByConstruction
               ? "exact-by-construction"
               : "numeric-estimate";
  };
  return json{{"dPar", r.dPar},
              {"dMer", r.dMer},
              {"dAbs", r.dAbs},
              {"barrier", r.barrier},
              {"parExactness", tag(r.parExactness)},
              {"merExactness", tag(r.merExactness)},
              {"absExactness", tag(r.absExactness)}};
}

json to_json(const ConstructionReport& r) {
  json parts = json::array();
  for (const ConstructionReport::PartInfo& p : r.parts)
    parts.push_back(json{{"k", p.k},
                         {"m", p.m},
                         {"dim", p.dim},
                         {"a", p.a},
                         {"partLength", p.partLength},
                         {"weight", p.weight},
                         {"period", p.period}});
  json out{{"dInfinity", r.dInfinity},
           {"d1", r.d1},
           {"d", r.d},
           {"coreTotalLength", r.coreTotalLength},
           {"parts", std::move(parts)}};
  out["extraAtom"] = r.extraAtom
                         ? json{{"m", r.extraAtom->m},
                                {"a", r.extraAtom->a},
                                {"dimension", r.extraAtomDimension}}
                         : json(nullptr);
  return out;
}

json to_json(const EvalResult& r) {
  return json{{"value", complex_json(r.value)},
              {"errorBound", r.errorBound},
              {"termsUsed", r.termsUsed},
              {"certified", r.certified}};
}

json to_json(const DimensionEstimate& d) {
  return json{{"value", d.value},
              {"method", d.method == DimensionEstimate::Method::ExactSymbolic
                             ? "exact-symbolic"
                             : "prefix-regression"},
              {"confidenceWidth", d.confidenceWidth},
              {"termsUsed", d.termsUsed},
              {"derivation", d.derivation}};
}

json to_json(const MonteCarloResult& r) {
  return json{{"value", complex_json(r.value)},
              {"standardError", r.standardError},
              {"nSamples", r.nSamples},
              {"seed", r.seed},
              {"warning", r.warning}};
}

json to_json(const GeometricSet& s) { return set_json(s); }

GeometricSet geometric_set_from_json(const json& j) {
  return rethrow_as_validation([&] { return set_from_json(j); });
}

}  // namespace fractal
