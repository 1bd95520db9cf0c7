#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fractal/errors.hpp"

namespace fractal {

// One coalesced length of a fractal string: a positive length together with
// the number of intervals of exactly that length.
struct LengthTerm {
  double length = 0.0;
  std::uint64_t multiplicity = 1;

  friend bool operator==(const LengthTerm&, const LengthTerm&) = default;
};

// Coefficient family for series lifts F(L) = ⊔_n c_n · L^⊗n.  A family knows
// its coefficients c_n ≥ 0, the radius of convergence of Σ c_n z^n, the value
// F(x) inside the radius, and a certified bound on the tail Σ_{n>N} c_n^σ Z^n
// of the lifted zeta series.
class CoefficientFamily {
 public:
  enum class Kind { Exp, ExpMinusOne, Cosh, Sinh, Geometric, Log, Custom };

  static CoefficientFamily exp();            // c_n = 1/n!
  static CoefficientFamily exp_minus_one();  // c_0 = 0, c_n = 1/n! (n ≥ 1)
  static CoefficientFamily cosh();           // even n: 1/n!
  static CoefficientFamily sinh();           // odd n: 1/n!
  static CoefficientFamily geometric();      // c_n = 1 (n ≥ 1), radius 1
  static CoefficientFamily log();            // c_n = 1/n (n ≥ 1), radius 1

  // Build a custom family.  `tailBound(N, sigma, Z)` must return a certified
  // upper bound on Σ_{n>N} coeff(n)^σ · Z^n, or +inf when no bound is
  // available at that N.  Custom families are not serializable.
  static CoefficientFamily custom(
      std::string name, std::function<double(std::int64_t)> coeff,
      double radius, std::function<double(double)> value,
      std::function<double(std::int64_t, double, double)> tailBound);

  double coefficient(std::int64_t n) const;
  double radius() const { return radius_; }
  // F(x) = Σ c_n x^n for |x| < radius.
  double value(double x) const;
  double tail_bound(std::int64_t N, double sigma, double Z) const;
  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  // Factorial-decay families are entire; geometric/log have radius 1.
  bool entire() const { return radius_ == kInfiniteRadius; }

  static constexpr double kInfiniteRadius = 1e308;

 private:
  CoefficientFamily() = default;

  Kind kind_ = Kind::Custom;
  std::string name_;
  double radius_ = 0.0;
  std::function<double(std::int64_t)> coeff_;
  std::function<double(double)> value_;
  std::function<double(std::int64_t, double, double)> tailBound_;
};

class StringExpr;

// Lazily generated tail of a weighted union: part k ≥ startIndex carries
// weight 2^{−k}/L_k and an infinite-order string with parameters
// m_k = mStart + (k−1), D_k = dInfinity + (d1 − dInfinity)·theta^{k−1}
// (D_1 = d1), a_k = m_k^{−1/D_k}, L_k = exp(1/(1 − m_k·a_k)) − 1.
// Serializable from the four parameters alone.
struct InfinitePartSchedule {
  double dInfinity = 0.0;
  double d1 = 0.5;
  double theta = 0.5;
  std::int64_t mStart = 2;

  std::int64_t m(std::int64_t k) const { return mStart + (k - 1); }
  double dim(std::int64_t k) const;
  // ln(a_k) = −ln(m_k)/D_k; finite even when a_k underflows to zero.
  double log_a(std::int64_t k) const;
  double a(std::int64_t k) const;
  // m_k · a_k = m_k^{1 − 1/D_k}, computed in log space.
  double ma(std::int64_t k) const;
  // L_k = exp(1/(1 − m_k a_k)) − 1; always > e − 1.
  double part_length(std::int64_t k) const;
  double weight(std::int64_t k) const;  // 2^{−k} / L_k
  // Materializes part k as a StringExpr (throws if a_k underflows).
  StringExpr part(std::int64_t k) const;

  // Certified bound on Σ_{i≥k} weight(i)·|part_i|₁ = Σ_{i≥k} 2^{−i} = 2^{1−k}.
  double weight_length_tail(std::int64_t k) const;
  // Certified bound on sup_{i≥k} weight(i)·(largest length of part i);
  // part max length is 1, L_i > e−1, so 2^{−k}/(e−1) works.
  double head_bound(std::int64_t k) const;
  // Certified supremum of the parts' abscissas: D_1 = d1.
  double sup_abscissa() const { return d1; }

  friend bool operator==(const InfinitePartSchedule&,
                         const InfinitePartSchedule&) = default;
};

// --- expression node payloads -----------------------------------------------

// Finite list of lengths, stored coalesced and nonincreasing.
struct ExplicitString {
  std::vector<LengthTerm> terms;
};

// Self-similar string with scaling ratios r_1 ≥ … ≥ r_m, Σ r_j < 1.
// Lengths are products over all finite words (including the empty word).
struct SelfSimilarString {
  std::vector<double> ratios;
};

// m equal ratios a: lengths a^j with multiplicity m^j, j ≥ 0.
struct GenCantorString {
  std::int64_t m = 2;
  double a = 1.0 / 3.0;
};

// n-fold tensor power of the base (zeta raised to the n-th power).
struct PowerString {
  std::shared_ptr<const StringExpr> base;
  std::int64_t n = 1;
};

// ⊔_{n≥1} (1/n!) · GenCantor(m,a)^⊗n; zeta Σ_{n≥1} (1−m a^s)^{−n}/(n!)^s.
struct InfiniteOrderString {
  std::int64_t m = 2;
  double a = 1.0 / 3.0;
};

// Every length multiplied by gamma > 0; zeta gamma^s · inner(s).
struct ScaleString {
  double gamma = 1.0;
  std::shared_ptr<const StringExpr> inner;
};

// Disjoint union: multiset union of lengths, zetas add.
struct UnionString {
  std::vector<StringExpr> parts;
};

// ⊔_k w_k · part_k with explicit finite parts and an optional scheduled
// infinite tail appended after them.
struct WeightedUnionString {
  std::vector<double> weights;
  std::vector<StringExpr> parts;
  std::optional<InfinitePartSchedule> schedule;
};

// F(L) = ⊔_n c_n · L^⊗n for a coefficient family F.
struct SeriesLiftString {
  CoefficientFamily family;
  std::shared_ptr<const StringExpr> inner;
};

// Immutable expression tree over bounded fractal strings.  Construction goes
// through the factory functions below, which validate parameters; nodes are
// cheap to copy (children are shared).
class StringExpr {
 public:
  using Node = std::variant<ExplicitString, SelfSimilarString, GenCantorString,
                            PowerString, InfiniteOrderString, ScaleString,
                            UnionString, WeightedUnionString, SeriesLiftString>;

  explicit StringExpr(Node node) : node_(std::make_shared<Node>(std::move(node))) {}

  const Node& node() const { return *node_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(node_.get());
  }

 private:
  std::shared_ptr<const Node> node_;
};

// --- factories (validating) --------------------------------------------------

// Lengths need not be sorted; they are coalesced and ordered nonincreasing.
StringExpr make_explicit(std::vector<LengthTerm> terms);
StringExpr make_explicit(const std::vector<double>& lengths);
// Disambiguates braced lists of plain lengths, e.g. make_explicit({0.5, 0.25}).
StringExpr make_explicit(std::initializer_list<double> lengths);
StringExpr make_self_similar(std::vector<double> ratios);
StringExpr make_gen_cantor(std::int64_t m, double a);
// Scale(1/3, GenCantor(2, 1/3)): lengths 3^{−j} with multiplicity 2^{j−1}.
StringExpr make_cantor_string();
StringExpr make_power(StringExpr base, std::int64_t n);
StringExpr make_infinite_order(std::int64_t m, double a);
StringExpr make_union(std::vector<StringExpr> parts);
StringExpr make_weighted_union(std::vector<double> weights,
                               std::vector<StringExpr> parts,
                               std::optional<InfinitePartSchedule> schedule = {});

// gamma·L: every length multiplied by gamma > 0.
StringExpr scale(double gamma, StringExpr inner);

// F(L) = ⊔_n c_n·L^⊗n; requires total_length(inner) < radius(F).
StringExpr lift(CoefficientFamily family, StringExpr inner);

// --- structural operations ----------------------------------------------------

// Exact total length |L|₁ = Σ ℓ_j (with multiplicity).  Closed forms where
// available: geometric/self-similar sums, (1−ma)^{−n} for powers,
// exp(1/(1−ma))−1 for infinite-order atoms, F(|inner|₁) for lifts.
// Throws DomainError when the total diverges (Σ r_j ≥ 1 is rejected at
// construction, so this only happens for lifts outside their radius).
double total_length(const StringExpr& e);

// Largest single length of the string (used for enumeration head bounds).
double max_length(const StringExpr& e);

// True when the string provably has finitely many lengths.
bool is_finite(const StringExpr& e);

std::string describe(const StringExpr& e);

}  // namespace fractal
