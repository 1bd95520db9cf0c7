#include "fractal/string_expr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fractal {

namespace {

// Checked u64 addition/multiplication for multiplicities.
std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r))
    throw OverflowError("multiplicity overflow while coalescing equal lengths");
  return r;
}

double log_factorial(std::int64_t n) { return std::lgamma(double(n) + 1.0); }

}  // namespace

// --- CoefficientFamily --------------------------------------------------------

CoefficientFamily CoefficientFamily::exp() {
  CoefficientFamily f;
  f.kind_ = Kind::Exp;
  f.name_ = "exp";
  f.radius_ = kInfiniteRadius;
  return f;
}

CoefficientFamily CoefficientFamily::exp_minus_one() {
  CoefficientFamily f;
  f.kind_ = Kind::ExpMinusOne;
  f.name_ = "expm1";
  f.radius_ = kInfiniteRadius;
  return f;
}

CoefficientFamily CoefficientFamily::cosh() {
  CoefficientFamily f;
  f.kind_ = Kind::Cosh;
  f.name_ = "cosh";
  f.radius_ = kInfiniteRadius;
  return f;
}

CoefficientFamily CoefficientFamily::sinh() {
  CoefficientFamily f;
  f.kind_ = Kind::Sinh;
  f.name_ = "sinh";
  f.radius_ = kInfiniteRadius;
  return f;
}

CoefficientFamily CoefficientFamily::geometric() {
  CoefficientFamily f;
  f.kind_ = Kind::Geometric;
  f.name_ = "geometric";
  f.radius_ = 1.0;
  return f;
}

CoefficientFamily CoefficientFamily::log() {
  CoefficientFamily f;
  f.kind_ = Kind::Log;
  f.name_ = "log";
  f.radius_ = 1.0;
  return f;
}

CoefficientFamily CoefficientFamily::custom(
    std::string name, std::function<double(std::int64_t)> coeff, double radius,
    std::function<double(double)> value,
    std::function<double(std::int64_t, double, double)> tailBound) {
  if (radius <= 0.0) throw ValidationError("coefficient family radius must be positive");
  if (!coeff || !value || !tailBound)
    throw ValidationError("custom coefficient family needs coefficient, value and tail-bound functions");
  CoefficientFamily f;
  f.kind_ = Kind::Custom;
  f.name_ = std::move(name);
  f.radius_ = radius;
  f.coeff_ = std::move(coeff);
  f.value_ = std::move(value);
  f.tailBound_ = std::move(tailBound);
  return f;
}

double CoefficientFamily::coefficient(std::int64_t n) const {
  if (n < 0) return 0.0;
  switch (kind_) {
    case Kind::Exp:
      return std::exp(-log_factorial(n));
    case Kind::ExpMinusOne:
      return n == 0 ? 0.0 : std::exp(-log_factorial(n));
    case Kind::Cosh:
      return n % 2 == 0 ? std::exp(-log_factorial(n)) : 0.0;
    case Kind::Sinh:
      return n % 2 == 1 ? std::exp(-log_factorial(n)) : 0.0;
    case Kind::Geometric:
      return n >= 1 ? 1.0 : 0.0;
    case Kind::Log:
      return n >= 1 ? 1.0 / double(n) : 0.0;
    case Kind::Custom:
      return coeff_(n);
  }
  return 0.0;
}

double CoefficientFamily::value(double x) const {
  if (std::abs(x) >= radius_)
    throw ValidationError("argument outside the coefficient family's radius of convergence");
  switch (kind_) {
    case Kind::Exp:
      return std::exp(x);
    case Kind::ExpMinusOne:
      return std::expm1(x);
    case Kind::Cosh:
      return std::cosh(x);
    case Kind::Sinh:
      return std::sinh(x);
    case Kind::Geometric:
      return x / (1.0 - x);
    case Kind::Log:
      return -std::log1p(-x);
    case Kind::Custom:
      return value_(x);
  }
  return 0.0;
}

double CoefficientFamily::tail_bound(std::int64_t N, double sigma, double Z) const {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (Z < 0.0 || sigma <= 0.0) return kInf;
  if (Z == 0.0) return 0.0;
  switch (kind_) {
    case Kind::Exp:
    case Kind::ExpMinusOne:
    case Kind::Cosh:
    case Kind::Sinh: {
      // t_n = Z^n/(n!)^sigma; once the step ratio Z/(n+1)^sigma stays <= 1/2
      // the tail is geometrically dominated by twice its first term.
      double ratio = Z * std::exp(-sigma * std::log(double(N) + 2.0));
      if (ratio > 0.5) return kInf;
      double logFirst = (double(N) + 1.0) * std::log(Z) - sigma * log_factorial(N + 1);
      return std::exp(logFirst) / (1.0 - ratio);
    }
    case Kind::Geometric: {
      if (Z >= 1.0) return kInf;
      return std::pow(Z, double(N) + 1.0) / (1.0 - Z);
    }
    case Kind::Log: {
      if (Z >= 1.0) return kInf;
      // n^{-sigma} <= (N+1)^{-sigma} for n > N.
      return std::exp(-sigma * std::log(double(N) + 1.0)) *
             std::pow(Z, double(N) + 1.0) / (1.0 - Z);
    }
    case Kind::Custom:
      return tailBound_(N, sigma, Z);
  }
  return kInf;
}

// --- InfinitePartSchedule -----------------------------------------------------

double InfinitePartSchedule::dim(std::int64_t k) const {
  if (k <= 1) return d1;
  return dInfinity + (d1 - dInfinity) * std::pow(theta, double(k - 1));
}

double InfinitePartSchedule::log_a(std::int64_t k) const {
  return -std::log(double(m(k))) / dim(k);
}

double InfinitePartSchedule::a(std::int64_t k) const { return std::exp(log_a(k)); }

double InfinitePartSchedule::ma(std::int64_t k) const {
  return std::exp(std::log(double(m(k))) * (1.0 - 1.0 / dim(k)));
}

double InfinitePartSchedule::part_length(std::int64_t k) const {
  return std::expm1(1.0 / (1.0 - ma(k)));
}

double InfinitePartSchedule::weight(std::int64_t k) const {
  return std::exp2(double(-k)) / part_length(k);
}

StringExpr InfinitePartSchedule::part(std::int64_t k) const {
  return make_infinite_order(m(k), a(k));
}

double InfinitePartSchedule::weight_length_tail(std::int64_t k) const {
  return std::exp2(1.0 - double(k));
}

double InfinitePartSchedule::head_bound(std::int64_t k) const {
  return std::exp2(double(-k)) / (std::numbers::e - 1.0);
}

// --- factories ----------------------------------------------------------------

namespace {

void validate_schedule(const InfinitePartSchedule& s) {
  if (!(s.dInfinity >= 0.0) || !(s.d1 > s.dInfinity) || !(s.d1 < 1.0))
    throw ValidationError("part schedule requires 0 <= dInfinity < d1 < 1");
  if (!(s.theta > 0.0 && s.theta < 1.0))
    throw ValidationError("part schedule requires theta in (0,1)");
  if (s.mStart < 2) throw ValidationError("part schedule requires mStart >= 2");
}

}  // namespace

StringExpr make_explicit(std::vector<LengthTerm> terms) {
  if (terms.empty()) throw ValidationError("explicit string needs at least one length");
  for (const auto& t : terms) {
    if (!(t.length > 0.0) || !std::isfinite(t.length))
      throw ValidationError("explicit lengths must be positive and finite");
    if (t.multiplicity < 1)
      throw ValidationError("length multiplicities must be at least 1");
  }
  std::sort(terms.begin(), terms.end(),
            [](const LengthTerm& a, const LengthTerm& b) { return a.length > b.length; });
  std::vector<LengthTerm> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().length == t.length)
      merged.back().multiplicity = checked_add(merged.back().multiplicity, t.multiplicity);
    else
      merged.push_back(t);
  }
  return StringExpr(ExplicitString{std::move(merged)});
}

StringExpr make_explicit(const std::vector<double>& lengths) {
  std::vector<LengthTerm> terms;
  terms.reserve(lengths.size());
  for (double l : lengths) terms.push_back({l, 1});
  return make_explicit(std::move(terms));
}

StringExpr make_explicit(std::initializer_list<double> lengths) {
  return make_explicit(std::vector<double>(lengths));
}

StringExpr make_self_similar(std::vector<double> ratios) {
  if (ratios.empty()) throw ValidationError("self-similar string needs at least one ratio");
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0))
      throw ValidationError("self-similar ratios must lie in (0,1)");
    sum += r;
  }
  if (!(sum < 1.0))
    throw ValidationError("self-similar ratios must satisfy sum r_j < 1");
  std::sort(ratios.begin(), ratios.end(), std::greater<>());
  return StringExpr(SelfSimilarString{std::move(ratios)});
}

namespace {
void validate_cantor_params(std::int64_t m, double a, const char* what) {
  if (m < 2) throw ValidationError(std::string(what) + " requires m >= 2");
  if (!(a > 0.0) || !(double(m) * a < 1.0))
    throw ValidationError(std::string(what) + " requires 0 < a and m*a < 1");
}
}  // namespace

StringExpr make_gen_cantor(std::int64_t m, double a) {
  validate_cantor_params(m, a, "generalized Cantor string");
  return StringExpr(GenCantorString{m, a});
}

StringExpr make_cantor_string() {
  return scale(1.0 / 3.0, make_gen_cantor(2, 1.0 / 3.0));
}

StringExpr make_power(StringExpr base, std::int64_t n) {
  if (n < 1) throw ValidationError("tensor power requires n >= 1");
  return StringExpr(PowerString{std::make_shared<const StringExpr>(std::move(base)), n});
}

StringExpr make_infinite_order(std::int64_t m, double a) {
  validate_cantor_params(m, a, "infinite-order Cantor string");
  return StringExpr(InfiniteOrderString{m, a});
}

StringExpr scale(double gamma, StringExpr inner) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw ValidationError("scale factor must be positive and finite");
  return StringExpr(ScaleString{gamma, std::make_shared<const StringExpr>(std::move(inner))});
}

StringExpr make_union(std::vector<StringExpr> parts) {
  if (parts.empty()) throw ValidationError("union needs at least one part");
  return StringExpr(UnionString{std::move(parts)});
}

StringExpr make_weighted_union(std::vector<double> weights,
                               std::vector<StringExpr> parts,
                               std::optional<InfinitePartSchedule> schedule) {
  if (weights.size() != parts.size())
    throw ValidationError("weighted union needs one weight per part");
  if (parts.empty() && !schedule)
    throw ValidationError("weighted union needs parts or a schedule");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw ValidationError("weighted-union weights must be positive and finite");
  if (schedule) validate_schedule(*schedule);
  StringExpr e(WeightedUnionString{std::move(weights), std::move(parts), std::move(schedule)});
  if (!std::isfinite(total_length(e)))
    throw ValidationError("weighted union has divergent total length");
  return e;
}

StringExpr lift(CoefficientFamily family, StringExpr inner) {
  double len = total_length(inner);
  if (!(len < family.radius()))
    throw ValidationError("series lift requires |inner|_1 < radius of the family (" +
                          family.name() + ")");
  return StringExpr(SeriesLiftString{std::move(family),
                                     std::make_shared<const StringExpr>(std::move(inner))});
}

// --- structural operations ----------------------------------------------------

double total_length(const StringExpr& e) {
  return std::visit(
      [](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          double sum = 0.0, c = 0.0;  // compensated
          for (const auto& t : node.terms) {
            double y = t.length * double(t.multiplicity) - c;
            double s = sum + y;
            c = (s - sum) - y;
            sum = s;
          }
          return sum;
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          double r = 0.0;
          for (double x : node.ratios) r += x;
          return 1.0 / (1.0 - r);
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          return 1.0 / (1.0 - double(node.m) * node.a);
        } else if constexpr (std::is_same_v<T, PowerString>) {
          return std::pow(total_length(*node.base), double(node.n));
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          return std::expm1(1.0 / (1.0 - double(node.m) * node.a));
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          return node.gamma * total_length(*node.inner);
        } else if constexpr (std::is_same_v<T, UnionString>) {
          double sum = 0.0;
          for (const auto& p : node.parts) sum += total_length(p);
          return sum;
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          double sum = 0.0;
          for (std::size_t i = 0; i < node.parts.size(); ++i)
            sum += node.weights[i] * total_length(node.parts[i]);
          // Scheduled tail telescopes exactly: sum_k w_k L_k = sum_k 2^{-k} = 1.
          if (node.schedule) sum += 1.0;
          return sum;
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          return node.family.value(total_length(*node.inner));
        }
      },
      e.node());
}

double max_length(const StringExpr& e) {
  return std::visit(
      [](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          return node.terms.front().length;  // sorted nonincreasing
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          return 1.0;  // empty word
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, PowerString>) {
          return std::pow(max_length(*node.base), double(node.n));
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          return 1.0;  // n = 1, empty word
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          return node.gamma * max_length(*node.inner);
        } else if constexpr (std::is_same_v<T, UnionString>) {
          double best = 0.0;
          for (const auto& p : node.parts) best = std::max(best, max_length(p));
          return best;
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          double best = 0.0;
          for (std::size_t i = 0; i < node.parts.size(); ++i)
            best = std::max(best, node.weights[i] * max_length(node.parts[i]));
          if (node.schedule) {
            // Part heads are not monotone in k (weights may locally grow as
            // L_k decreases), so walk while the certified head bound can
            // still beat the best seen.
            for (std::int64_t k = 1; node.schedule->head_bound(k) > best; ++k)
              best = std::max(best, node.schedule->weight(k));
          }
          return best;
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          double M = max_length(*node.inner);
          double best = 0.0;
          for (std::int64_t n = 0;; ++n) {
            best = std::max(best, node.family.coefficient(n) * std::pow(M, double(n)));
            double rest = node.family.tail_bound(n, 1.0, M);
            if (rest < best || rest == 0.0) break;
            if (n > 400) break;  // certified bound never engaged; best-effort
          }
          return best;
        }
      },
      e.node());
}

bool is_finite(const StringExpr& e) {
  return std::visit(
      [](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          return true;
        } else if constexpr (std::is_same_v<T, PowerString>) {
          return is_finite(*node.base);
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          return is_finite(*node.inner);
        } else if constexpr (std::is_same_v<T, UnionString>) {
          for (const auto& p : node.parts)
            if (!is_finite(p)) return false;
          return true;
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          if (node.schedule) return false;
          for (const auto& p : node.parts)
            if (!is_finite(p)) return false;
          return true;
        } else {
          return false;  // self-similar, Cantor atoms, infinite order, lifts
        }
      },
      e.node());
}

std::string describe(const StringExpr& e) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          os << "explicit[" << node.terms.size() << " terms]";
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          os << "selfsim(";
          for (std::size_t i = 0; i < node.ratios.size(); ++i)
            os << (i ? "," : "") << node.ratios[i];
          os << ")";
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          os << "gencantor(" << node.m << "," << node.a << ")";
        } else if constexpr (std::is_same_v<T, PowerString>) {
          os << "power(" << describe(*node.base) << "," << node.n << ")";
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          os << "inforder(" << node.m << "," << node.a << ")";
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          os << "scale(" << node.gamma << "," << describe(*node.inner) << ")";
        } else if constexpr (std::is_same_v<T, UnionString>) {
          os << "union[" << node.parts.size() << "]";
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          os << "wunion[" << node.parts.size()
             << (node.schedule ? "+schedule]" : "]");
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          os << "lift:" << node.family.name() << "(" << describe(*node.inner) << ")";
        }
      },
      e.node());
  return os.str();
}

}  // namespace fractal
