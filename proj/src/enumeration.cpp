#include "fractal/enumeration.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <queue>
#include <unordered_set>
#include <vector>

namespace fractal {

namespace {

constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r))
    throw OverflowError("multiplicity overflow while coalescing equal lengths");
  return r;
}

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r))
    throw OverflowError("multiplicity overflow in enumeration");
  return r;
}

std::uint64_t checked_pow(std::uint64_t base, std::uint64_t e) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < e; ++i) r = checked_mul(r, base);
  return r;
}

// C(top, k), exact; throws on u64 overflow.
std::uint64_t checked_binomial(std::uint64_t top, std::uint64_t k) {
  if (k > top) return 0;
  k = std::min(k, top - k);
  unsigned __int128 r = 1;
  for (std::uint64_t j = 1; j <= k; ++j) {
    r *= (top - k + j);
    r /= j;  // exact: r holds C(top-k+j, j) after each step
    if (r > kU64Max) throw OverflowError("multiplicity overflow in enumeration");
  }
  return std::uint64_t(r);
}

// n! / prod(runLengths!) for a sorted tuple — the number of distinct
// permutations.
std::uint64_t permutation_count(const std::vector<std::uint32_t>& sorted) {
  unsigned __int128 r = 1;
  std::uint64_t placed = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    std::uint64_t run = j - i;
    // multiply by C(placed + run, run)
    std::uint64_t c = checked_binomial(placed + run, run);
    r *= c;
    if (r > kU64Max) throw OverflowError("multiplicity overflow in enumeration");
    placed += run;
    i = j;
  }
  return std::uint64_t(r);
}

// |e|! / prod e_i!  — multinomial over an exponent vector.
std::uint64_t multinomial(const std::vector<std::uint32_t>& e) {
  unsigned __int128 r = 1;
  std::uint64_t placed = 0;
  for (std::uint32_t x : e) {
    std::uint64_t c = checked_binomial(placed + x, x);
    r *= c;
    if (r > kU64Max) throw OverflowError("multiplicity overflow in enumeration");
    placed += x;
  }
  return std::uint64_t(r);
}

struct VecHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const {
    std::size_t h = 1469598103934665603ull;
    for (std::uint32_t x : v) {
      h ^= x;
      h *= 1099511628211ull;
    }
    return h;
  }
};

// --- simple cursors -----------------------------------------------------------

class ExplicitCursor final : public LengthCursor {
 public:
  explicit ExplicitCursor(std::vector<LengthTerm> terms) : terms_(std::move(terms)) {}

  std::optional<LengthTerm> peek() override {
    if (i_ >= terms_.size()) return std::nullopt;
    return terms_[i_];
  }
  void pop() override { ++i_; }

 private:
  std::vector<LengthTerm> terms_;
  std::size_t i_ = 0;
};

class ScaledCursor final : public LengthCursor {
 public:
  ScaledCursor(double gamma, std::unique_ptr<LengthCursor> inner)
      : gamma_(gamma), inner_(std::move(inner)) {}

  std::optional<LengthTerm> peek() override {
    auto t = inner_->peek();
    if (!t) return std::nullopt;
    double len = gamma_ * t->length;
    if (len == 0.0) return std::nullopt;  // underflow: all later terms smaller
    return LengthTerm{len, t->multiplicity};
  }
  void pop() override { inner_->pop(); }

 private:
  double gamma_;
  std::unique_ptr<LengthCursor> inner_;
};

// Lengths gamma·a^J with multiplicity m^J·C(J+n−1, n−1): the closed form for
// the n-fold tensor power of a generalized Cantor string.  A generic frontier
// walk would pop C(J+n−1, n−1) lattice points per emitted term; the closed
// form keeps deep enumerations cheap.
class GenCantorPowerCursor final : public LengthCursor {
 public:
  GenCantorPowerCursor(std::int64_t m, double a, std::int64_t n, double gamma)
      : m_(m), n_(n), a_(a), gamma_(gamma) {}

  std::optional<LengthTerm> peek() override {
    if (done_) return std::nullopt;
    if (!cached_) {
      double len = gamma_ * std::pow(a_, double(J_));
      if (len == 0.0) {
        done_ = true;
        return std::nullopt;
      }
      std::uint64_t mult = checked_mul(
          checked_pow(std::uint64_t(m_), std::uint64_t(J_)),
          checked_binomial(std::uint64_t(J_ + n_ - 1), std::uint64_t(n_ - 1)));
      cached_ = LengthTerm{len, mult};
    }
    return cached_;
  }
  void pop() override {
    ++J_;
    cached_.reset();
  }

 private:
  std::int64_t m_, J_ = 0, n_;
  double a_, gamma_;
  bool done_ = false;
  std::optional<LengthTerm> cached_;
};

// Best-first walk of exponent vectors over the distinct ratios of a
// self-similar string (optionally inside an n-fold tensor power): the value
// of e is prod r_i^{e_i} and its multiplicity
// C(|e|+n−1, n−1) · |e|!/prod e_i! · prod c_i^{e_i},
// where c_i counts how often ratio r_i repeats in the ratio list.
class ExponentLatticeCursor final : public LengthCursor {
 public:
  ExponentLatticeCursor(std::vector<double> ratios, std::vector<std::uint64_t> counts,
                        std::int64_t n, double gamma)
      : ratios_(std::move(ratios)), counts_(std::move(counts)), n_(n), gamma_(gamma) {
    std::vector<std::uint32_t> zero(ratios_.size(), 0);
    push(zero);
  }

  std::optional<LengthTerm> peek() override {
    if (!cached_) advance();
    return cached_ ? std::optional<LengthTerm>(*cached_) : std::nullopt;
  }
  void pop() override { cached_.reset(); }

 private:
  struct Node {
    double value;
    std::vector<std::uint32_t> e;
    bool operator<(const Node& o) const { return value < o.value; }  // max-heap
  };

  double value_of(const std::vector<std::uint32_t>& e) const {
    double v = gamma_;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > 0) v *= std::pow(ratios_[i], double(e[i]));
    return v;
  }

  std::uint64_t multiplicity_of(const std::vector<std::uint32_t>& e) const {
    std::uint64_t total = 0;
    for (std::uint32_t x : e) total += x;
    std::uint64_t mult = multinomial(e);
    if (n_ > 1)
      mult = checked_mul(mult, checked_binomial(total + std::uint64_t(n_) - 1,
                                                std::uint64_t(n_) - 1));
    for (std::size_t i = 0; i < e.size(); ++i)
      if (counts_[i] > 1) mult = checked_mul(mult, checked_pow(counts_[i], e[i]));
    return mult;
  }

  void push(const std::vector<std::uint32_t>& e) {
    if (visited_.insert(e).second) queue_.push(Node{value_of(e), e});
  }

  void advance() {
    if (queue_.empty()) return;
    double v = queue_.top().value;
    if (v == 0.0) return;  // below double range: exhausted
    std::uint64_t mult = 0;
    while (!queue_.empty() && queue_.top().value == v) {
      Node node = queue_.top();
      queue_.pop();
      mult = checked_add(mult, multiplicity_of(node.e));
      for (std::size_t i = 0; i < node.e.size(); ++i) {
        ++node.e[i];
        push(node.e);
        --node.e[i];
      }
    }
    cached_ = LengthTerm{v, mult};
  }

  std::vector<double> ratios_;
  std::vector<std::uint64_t> counts_;
  std::int64_t n_;
  double gamma_;
  std::priority_queue<Node> queue_;
  std::unordered_set<std::vector<std::uint32_t>, VecHash> visited_;
  std::optional<LengthTerm> cached_;
};

// Generic n-fold tensor power over an arbitrary base cursor: best-first walk
// of sorted index tuples into the memoized base prefix.
class TensorPowerCursor final : public LengthCursor {
 public:
  TensorPowerCursor(std::unique_ptr<LengthCursor> base, std::int64_t n, double gamma)
      : base_(std::move(base)), n_(n), gamma_(gamma) {
    if (ensure(0)) push(std::vector<std::uint32_t>(std::size_t(n_), 0));
  }

  std::optional<LengthTerm> peek() override {
    if (!cached_) advance();
    return cached_ ? std::optional<LengthTerm>(*cached_) : std::nullopt;
  }
  void pop() override { cached_.reset(); }

 private:
  struct Node {
    double value;
    std::vector<std::uint32_t> idx;
    bool operator<(const Node& o) const { return value < o.value; }
  };

  bool ensure(std::size_t i) {
    while (prefix_.size() <= i) {
      auto t = base_->peek();
      if (!t) return false;
      base_->pop();
      prefix_.push_back(*t);
    }
    return true;
  }

  double value_of(const std::vector<std::uint32_t>& idx) const {
    double v = gamma_;
    for (std::uint32_t i : idx) v *= prefix_[i].length;
    return v;
  }

  std::uint64_t multiplicity_of(const std::vector<std::uint32_t>& idx) const {
    std::uint64_t mult = permutation_count(idx);
    for (std::uint32_t i : idx) mult = checked_mul(mult, prefix_[i].multiplicity);
    return mult;
  }

  void push(const std::vector<std::uint32_t>& idx) {
    if (visited_.insert(idx).second) queue_.push(Node{value_of(idx), idx});
  }

  void advance() {
    if (queue_.empty()) return;
    double v = queue_.top().value;
    if (v == 0.0) return;
    std::uint64_t mult = 0;
    while (!queue_.empty() && queue_.top().value == v) {
      Node node = queue_.top();
      queue_.pop();
      mult = checked_add(mult, multiplicity_of(node.idx));
      for (std::size_t j = 0; j < node.idx.size(); ++j) {
        // keep tuples sorted nondecreasing: bump position j only when the
        // result stays canonical
        if (j + 1 < node.idx.size() && node.idx[j] + 1 > node.idx[j + 1]) continue;
        if (!ensure(node.idx[j] + 1)) continue;
        ++node.idx[j];
        push(node.idx);
        --node.idx[j];
      }
    }
    cached_ = LengthTerm{v, mult};
  }

  std::unique_ptr<LengthCursor> base_;
  std::vector<LengthTerm> prefix_;
  std::int64_t n_;
  double gamma_;
  std::priority_queue<Node> queue_;
  std::unordered_set<std::vector<std::uint32_t>, VecHash> visited_;
  std::optional<LengthTerm> cached_;
};

// k-way merge with exact coalescing of equal peeks across children.  Children
// may be added lazily by subclasses (scheduled unions, series lifts) via the
// activation hook, which must add every child whose head bound reaches the
// candidate emission value.
class MergeCursor : public LengthCursor {
 public:
  std::optional<LengthTerm> peek() final {
    if (!cached_) advance();
    return cached_ ? std::optional<LengthTerm>(*cached_) : std::nullopt;
  }
  void pop() final {
    if (!cached_) advance();
    if (!cached_) return;
    for (std::size_t i : holders_) kids_[i]->pop();
    cached_.reset();
    holders_.clear();
  }

 protected:
  void add_child(std::unique_ptr<LengthCursor> c) { kids_.push_back(std::move(c)); }
  // Add any pending children whose certified head bound is >= `atLeast`;
  // return value unused.  Default: no lazy children.
  virtual void activate(double atLeast) { (void)atLeast; }
  // Largest head bound among not-yet-activated children (0 when none).
  virtual double pending_head() const { return 0.0; }

 private:
  void advance() {
    // Activation fixpoint: any pending child could carry the next (largest)
    // term, so activate until the pending head falls below the best active
    // peek.
    for (;;) {
      double best = 0.0;
      bool any = false;
      for (auto& k : kids_) {
        auto t = k->peek();
        if (t && (!any || t->length > best)) best = t->length, any = true;
      }
      double ph = pending_head();
      if (ph > 0.0 && (!any || ph >= best)) {
        std::size_t before = kids_.size();
        activate(any ? best : ph);
        if (kids_.size() == before) break;  // nothing more to add
        continue;
      }
      if (!any) return;
      std::uint64_t mult = 0;
      holders_.clear();
      for (std::size_t i = 0; i < kids_.size(); ++i) {
        auto t = kids_[i]->peek();
        if (t && t->length == best) {
          mult = checked_add(mult, t->multiplicity);
          holders_.push_back(i);
        }
      }
      cached_ = LengthTerm{best, mult};
      return;
    }
    // Activation exhausted without any active peek.
    advance_no_activation();
  }

  void advance_no_activation() {
    double best = 0.0;
    bool any = false;
    for (auto& k : kids_) {
      auto t = k->peek();
      if (t && (!any || t->length > best)) best = t->length, any = true;
    }
    if (!any) return;
    std::uint64_t mult = 0;
    holders_.clear();
    for (std::size_t i = 0; i < kids_.size(); ++i) {
      auto t = kids_[i]->peek();
      if (t && t->length == best) {
        mult = checked_add(mult, t->multiplicity);
        holders_.push_back(i);
      }
    }
    cached_ = LengthTerm{best, mult};
  }

  std::vector<std::unique_ptr<LengthCursor>> kids_;
  std::optional<LengthTerm> cached_;
  std::vector<std::size_t> holders_;
};

class UnionCursor final : public MergeCursor {
 public:
  explicit UnionCursor(std::vector<std::unique_ptr<LengthCursor>> kids) {
    for (auto& k : kids) add_child(std::move(k));
  }
};

// ⊔_{n≥1} (1/n!)·GenCantor(m,a)^{⊗n}; children activated when 1/n! reaches
// the frontier.  Handles a that underflowed to zero (schedule deep parts):
// those children emit only their leading 1/n! term.
class InfiniteOrderCursor final : public MergeCursor {
 public:
  InfiniteOrderCursor(std::int64_t m, double a, double gamma)
      : m_(m), a_(a), gamma_(gamma) {}

 protected:
  void activate(double atLeast) override {
    while (head(nextN_) >= atLeast && head(nextN_) > 0.0) {
      add_child(std::make_unique<GenCantorPowerCursor>(
          m_, a_, nextN_, gamma_ * std::exp(-std::lgamma(double(nextN_) + 1.0))));
      ++nextN_;
    }
  }
  double pending_head() const override { return head(nextN_); }

 private:
  double head(std::int64_t n) const {
    return gamma_ * std::exp(-std::lgamma(double(n) + 1.0));
  }

  std::int64_t m_, nextN_ = 1;
  double a_, gamma_;
};

// Weighted union with a scheduled infinite tail of infinite-order parts.
class ScheduledUnionCursor final : public MergeCursor {
 public:
  ScheduledUnionCursor(std::vector<std::unique_ptr<LengthCursor>> finite,
                       InfinitePartSchedule schedule)
      : schedule_(schedule) {
    for (auto& k : finite) add_child(std::move(k));
  }

 protected:
  void activate(double atLeast) override {
    while (schedule_.head_bound(nextK_) >= atLeast) {
      add_child(std::make_unique<InfiniteOrderCursor>(
          schedule_.m(nextK_), schedule_.a(nextK_), schedule_.weight(nextK_)));
      ++nextK_;
    }
  }
  double pending_head() const override { return schedule_.head_bound(nextK_); }

 private:
  InfinitePartSchedule schedule_;
  std::int64_t nextK_ = 1;
};

std::unique_ptr<LengthCursor> power_cursor(const StringExpr& base, std::int64_t n,
                                           double gamma);

// F(L) = ⊔_n c_n·L^⊗n; child n activated when sup_{i≥n} c_i·M^i reaches the
// frontier (M = largest length of the inner string; the heads are not
// monotone in n when M > 1).
class SeriesLiftCursor final : public MergeCursor {
 public:
  SeriesLiftCursor(CoefficientFamily family, StringExpr inner)
      : family_(std::move(family)), inner_(std::move(inner)), M_(max_length(inner_)) {
    if (family_.coefficient(0) > 0.0) {
      std::vector<LengthTerm> unit{{family_.coefficient(0), 1}};
      add_child(std::make_unique<ExplicitCursor>(std::move(unit)));
    }
  }

 protected:
  void activate(double atLeast) override {
    while (nextN_ <= kMaxOrder) {
      double h = head_sup(nextN_);
      if (h < atLeast || h == 0.0) break;
      if (family_.coefficient(nextN_) > 0.0)
        add_child(power_cursor(inner_, nextN_, family_.coefficient(nextN_)));
      ++nextN_;
    }
  }
  double pending_head() const override {
    return nextN_ <= kMaxOrder ? head_sup(nextN_) : 0.0;
  }

 private:
  static constexpr std::int64_t kMaxOrder = 100000;

  // sup_{i >= n} c_i M^i: factorial families peak near i ≈ M, radius-1
  // families are decreasing (M < 1 by the lift precondition).
  double head_sup(std::int64_t n) const {
    std::int64_t end = n;
    if (family_.entire()) end = std::max(n, std::int64_t(std::ceil(M_))) + 2;
    double best = 0.0;
    for (std::int64_t i = n; i <= end; ++i)
      best = std::max(best, family_.coefficient(i) * std::pow(M_, double(i)));
    return best;
  }

  CoefficientFamily family_;
  StringExpr inner_;
  double M_;
  std::int64_t nextN_ = 1;
};

std::unique_ptr<LengthCursor> power_cursor(const StringExpr& base, std::int64_t n,
                                           double gamma) {
  if (const auto* gc = base.get_if<GenCantorString>())
    return std::make_unique<GenCantorPowerCursor>(gc->m, gc->a, n, gamma);
  if (const auto* ss = base.get_if<SelfSimilarString>()) {
    // group equal ratios: lengths depend only on the exponent vector over
    // distinct values
    std::vector<double> distinct;
    std::vector<std::uint64_t> counts;
    for (double r : ss->ratios) {
      if (!distinct.empty() && distinct.back() == r)
        ++counts.back();
      else {
        distinct.push_back(r);
        counts.push_back(1);
      }
    }
    return std::make_unique<ExponentLatticeCursor>(std::move(distinct),
                                                   std::move(counts), n, gamma);
  }
  if (const auto* p = base.get_if<PowerString>())
    return power_cursor(*p->base, checked_mul(std::uint64_t(p->n), std::uint64_t(n)),
                        gamma);
  if (n == 1) {
    auto inner = make_cursor(base);
    if (gamma == 1.0) return inner;
    return std::make_unique<ScaledCursor>(gamma, std::move(inner));
  }
  return std::make_unique<TensorPowerCursor>(make_cursor(base), n, gamma);
}

}  // namespace

std::unique_ptr<LengthCursor> make_cursor(const StringExpr& e) {
  return std::visit(
      [&](const auto& node) -> std::unique_ptr<LengthCursor> {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ExplicitString>) {
          return std::make_unique<ExplicitCursor>(node.terms);
        } else if constexpr (std::is_same_v<T, SelfSimilarString>) {
          return power_cursor(e, 1, 1.0);
        } else if constexpr (std::is_same_v<T, GenCantorString>) {
          return std::make_unique<GenCantorPowerCursor>(node.m, node.a, 1, 1.0);
        } else if constexpr (std::is_same_v<T, PowerString>) {
          return power_cursor(*node.base, node.n, 1.0);
        } else if constexpr (std::is_same_v<T, InfiniteOrderString>) {
          return std::make_unique<InfiniteOrderCursor>(node.m, node.a, 1.0);
        } else if constexpr (std::is_same_v<T, ScaleString>) {
          return std::make_unique<ScaledCursor>(node.gamma, make_cursor(*node.inner));
        } else if constexpr (std::is_same_v<T, UnionString>) {
          std::vector<std::unique_ptr<LengthCursor>> kids;
          kids.reserve(node.parts.size());
          for (const auto& p : node.parts) kids.push_back(make_cursor(p));
          return std::make_unique<UnionCursor>(std::move(kids));
        } else if constexpr (std::is_same_v<T, WeightedUnionString>) {
          std::vector<std::unique_ptr<LengthCursor>> kids;
          kids.reserve(node.parts.size());
          for (std::size_t i = 0; i < node.parts.size(); ++i)
            kids.push_back(std::make_unique<ScaledCursor>(node.weights[i],
                                                          make_cursor(node.parts[i])));
          if (node.schedule)
            return std::make_unique<ScheduledUnionCursor>(std::move(kids),
                                                          *node.schedule);
          return std::make_unique<UnionCursor>(std::move(kids));
        } else {
          static_assert(std::is_same_v<T, SeriesLiftString>);
          return std::make_unique<SeriesLiftCursor>(node.family, *node.inner);
        }
      },
      e.node());
}

EnumerationCutoff EnumerationCutoff::max_terms(std::int64_t n) {
  if (n < 1) throw ValidationError("MaxTerms cutoff needs n >= 1");
  EnumerationCutoff c;
  c.kind = Kind::MaxTerms;
  c.maxTerms = n;
  return c;
}

EnumerationCutoff EnumerationCutoff::min_length(double lambda) {
  if (!(lambda > 0.0))
    throw ValidationError("MinLength cutoff needs lambda > 0");
  EnumerationCutoff c;
  c.kind = Kind::MinLength;
  c.minLength = lambda;
  return c;
}

std::vector<LengthTerm> enumerate_lengths(const StringExpr& e,
                                          const EnumerationCutoff& cutoff) {
  auto cur = make_cursor(e);
  std::vector<LengthTerm> out;
  for (;;) {
    auto t = cur->peek();
    if (!t) break;
    if (cutoff.kind == EnumerationCutoff::Kind::MinLength && t->length < cutoff.minLength)
      break;
    out.push_back(*t);
    cur->pop();
    if (cutoff.kind == EnumerationCutoff::Kind::MaxTerms &&
        std::int64_t(out.size()) >= cutoff.maxTerms)
      break;
  }
  return out;
}

}  // namespace fractal
