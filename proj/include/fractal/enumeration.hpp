#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "fractal/string_expr.hpp"

namespace fractal {

// Pull-based cursor over the coalesced, nonincreasing length sequence of a
// string.  Terms with equal length (exact binary comparison) are merged with
// summed multiplicities; multiplicity arithmetic is checked and throws
// OverflowError instead of wrapping.  Lengths below DBL_MIN are skipped: they
// are not representable and cannot affect any double-precision sum.
class LengthCursor {
 public:
  virtual ~LengthCursor() = default;

  // Next term, or nullopt when the string is exhausted.  Repeated calls
  // without pop() return the same term.
  virtual std::optional<LengthTerm> peek() = 0;
  virtual void pop() = 0;
};

std::unique_ptr<LengthCursor> make_cursor(const StringExpr& e);

// Stopping rule for materialized enumeration.
struct EnumerationCutoff {
  enum class Kind { MaxTerms, MinLength };

  static EnumerationCutoff max_terms(std::int64_t n);
  static EnumerationCutoff min_length(double lambda);

  Kind kind = Kind::MaxTerms;
  std::int64_t maxTerms = 0;    // number of coalesced terms to emit
  double minLength = 0.0;       // stop before the first term with length < λ
};

// Materializes the first terms of the sequence under the cutoff.
std::vector<LengthTerm> enumerate_lengths(const StringExpr& e,
                                          const EnumerationCutoff& cutoff);

}  // namespace fractal
