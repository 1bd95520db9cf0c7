#pragma once

#include <complex>
#include <string>

#include "fractal/distance_zeta.hpp"
#include "fractal/string_expr.hpp"

namespace fractal {

// Recursive-descent parser for the expression mini-language:
//
//   expr     := gencantor:m,a | selfsim:r1,r2,... | inforder:m,a
//             | explicit:l1,l2,... | scale:g(expr) | power:n(expr)
//             | union(expr;expr;...) | lift:FAMILY(expr) | cantor
//   FAMILY   := exp | expm1 | cosh | sinh | geometric | log
//
// `cantor` abbreviates scale:0.3333...(gencantor:2,0.3333...) — the classic
// middle-third string with lengths 3^{-j} of multiplicity 2^{j-1}.
// Throws ValidationError with a position-tagged message on malformed input.
StringExpr parse_string_expr(const std::string& text);

// Set mini-language for distance-zeta commands:
//
//   set := realization:expr | gencantorset:m,a | grill:q(set)
//        | flat:q(set) | unionset(set;set;...) | constructed:dinf,d1,d,N
GeometricSet parse_geometric_set(const std::string& text);

// "a", "ai", "a+bi", "a-bi", "bi" with decimal reals.
std::complex<double> parse_complex(const std::string& text);

}  // namespace fractal
