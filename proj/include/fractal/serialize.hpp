#pragma once

#include <nlohmann/json.hpp>

#include "fractal/dimension.hpp"
#include "fractal/distance_zeta.hpp"
#include "fractal/prescribe.hpp"
#include "fractal/string_expr.hpp"
#include "fractal/zeta_eval.hpp"

namespace fractal {

// Canonical tagged-JSON form of an expression; doubles serialize with
// shortest-round-trip precision, so parse(dump(e)) reproduces every length
// bit-for-bit.  Custom coefficient families are not serializable.
nlohmann::json to_json(const StringExpr& e);
StringExpr string_expr_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PrescribedString& p);
PrescribedString prescribed_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AbscissaReport& r);
nlohmann::json to_json(const ConstructionReport& r);
nlohmann::json to_json(const EvalResult& r);
nlohmann::json to_json(const DimensionEstimate& d);
nlohmann::json to_json(const MonteCarloResult& r);

nlohmann::json to_json(const GeometricSet& s);
GeometricSet geometric_set_from_json(const nlohmann::json& j);

}  // namespace fractal
