#pragma once

// Finite operations, relations, composition terms and algebras.
//
// Points of A^n are indexed big-endian in base kappa: the first coordinate is
// the most significant digit.  Dense operation tables and relation bitsets
// both use this index, and so do the JSON formats in serialize.hpp.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cloneforge {

using Elem  = std::uint8_t;
using Index = std::uint64_t;
using Point = std::vector<Elem>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input, range violations, arity or domain mismatches.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computation would exceed a configured table or search budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

/// A mathematical precondition of a construction does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An assertion that a proof guarantees has failed; indicates a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline std::atomic<Index>& table_budget_ref() {
  static std::atomic<Index> budget{10'000'000};
  return budget;
}
}  // namespace detail

/// Largest number of entries a dense table may have.
inline Index table_budget() { return detail::table_budget_ref().load(); }
inline void  set_table_budget(Index n) { detail::table_budget_ref().store(n); }

/// kappa^n, or nullopt on overflow past 2^62.
inline std::optional<Index> checked_pow(Index kappa, std::size_t n) {
  Index r = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (kappa != 0 && r > (Index{1} << 62) / kappa) {
      return std::nullopt;
    }
    r *= kappa;
  }
  return r;
}

inline Index ipow(Index kappa, std::size_t n) {
  auto r = checked_pow(kappa, n);
  if (!r) {
    throw BudgetExceeded("power " + std::to_string(kappa) + "^"
                         + std::to_string(n) + " overflows");
  }
  return *r;
}

////////////////////////////////////////////////////////////////////////////
// Domain
////////////////////////////////////////////////////////////////////////////

class Domain {
 public:
  Domain() = default;
  explicit Domain(std::size_t size) : size_(size) {
    if (size == 0 || size > 255) {
      throw InputError("domain size must be in 1..255, got "
                       + std::to_string(size));
    }
  }
  std::size_t size() const noexcept { return size_; }
  bool        operator==(Domain const&) const = default;

 private:
  std::size_t size_ = 1;
};

inline Index encode_point(std::size_t kappa, std::span<Elem const> tuple) {
  Index idx = 0;
  for (Elem x : tuple) {
    if (x >= kappa) {
      throw InputError("element " + std::to_string(x) + " out of range for domain "
                       + std::to_string(kappa));
    }
    idx = idx * kappa + x;
  }
  return idx;
}

inline Point decode_point(std::size_t kappa, std::size_t n, Index idx) {
  Point p(n);
  for (std::size_t i = n; i-- > 0;) {
    p[i] = static_cast<Elem>(idx % kappa);
    idx /= kappa;
  }
  return p;
}

inline void decode_into(std::size_t kappa, Index idx, std::span<Elem> out) {
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Elem>(idx % kappa);
    idx /= kappa;
  }
}

/// Advances p to the next point of A^n in index order; false on wrap-around.
inline bool next_point(std::size_t kappa, std::span<Elem> p) {
  for (std::size_t i = p.size(); i-- > 0;) {
    if (++p[i] < kappa) {
      return true;
    }
    p[i] = 0;
  }
  return false;
}

////////////////////////////////////////////////////////////////////////////
// Operation
////////////////////////////////////////////////////////////////////////////

class Operation {
 public:
  using Rule = std::function<Elem(std::span<Elem const>)>;

  /// Point-value pairs plus a default; used for large-arity operations that
  /// differ from a constant only on a few points.
  struct Sparse {
    Elem                  fallback = 0;
    std::map<Point, Elem> values;
  };

  Operation() = default;

  static Operation from_table(std::size_t kappa, std::size_t arity,
                              std::vector<Elem> table) {
    Domain d(kappa);
    auto   expected = checked_pow(kappa, arity);
    if (!expected || table.size() != *expected) {
      throw InputError("table length " + std::to_string(table.size())
                       + " does not equal " + std::to_string(kappa) + "^"
                       + std::to_string(arity));
    }
    for (Elem v : table) {
      if (v >= kappa) {
        throw InputError("table entry " + std::to_string(v)
                         + " out of range for domain " + std::to_string(kappa));
      }
    }
    Operation op;
    op.domain_ = d;
    op.arity_  = arity;
    op.table_  = std::make_shared<std::vector<Elem> const>(std::move(table));
    return op;
  }

  /// An operation given by an evaluation rule.  The rule must return values
  /// below kappa; evaluation checks this.
  static Operation computed(std::size_t kappa, std::size_t arity, Rule rule) {
    Operation op;
    op.domain_ = Domain(kappa);
    op.arity_  = arity;
    op.rule_   = std::make_shared<Rule const>(std::move(rule));
    return op;
  }

  /// Dense when kappa^arity fits the table budget, computed otherwise.
  template <typename F>
  static Operation tabulate(std::size_t kappa, std::size_t arity, F&& f) {
    auto n = checked_pow(kappa, arity);
    if (n && *n <= table_budget()) {
      std::vector<Elem> table(*n);
      Point             p(arity, 0);
      for (Index i = 0; i < *n; ++i) {
        table[i] = static_cast<Elem>(f(std::span<Elem const>(p)));
        next_point(kappa, p);
      }
      return from_table(kappa, arity, std::move(table));
    }
    return computed(kappa, arity, Rule(std::forward<F>(f)));
  }

  /// Projection onto coordinate `index` (0-based).
  static Operation projection(std::size_t kappa, std::size_t arity,
                              std::size_t index) {
    if (index >= arity) {
      throw InputError("projection index out of range");
    }
    return tabulate(kappa, arity,
                    [index](std::span<Elem const> x) { return x[index]; });
  }

  static Operation constant(std::size_t kappa, std::size_t arity, Elem value) {
    if (value >= kappa) {
      throw InputError("constant out of range");
    }
    return tabulate(kappa, arity, [value](std::span<Elem const>) { return value; });
  }

  static Operation sparse(std::size_t kappa, std::size_t arity, Sparse spec) {
    if (spec.fallback >= kappa) {
      throw InputError("sparse default out of range");
    }
    for (auto const& [p, v] : spec.values) {
      if (p.size() != arity || v >= kappa
          || std::any_of(p.begin(), p.end(), [&](Elem x) { return x >= kappa; })) {
        throw InputError("sparse point out of range or of the wrong length");
      }
    }
    auto shared = std::make_shared<Sparse const>(std::move(spec));
    Operation op = computed(kappa, arity, [shared](std::span<Elem const> x) {
      auto it = shared->values.find(Point(x.begin(), x.end()));
      return it == shared->values.end() ? shared->fallback : it->second;
    });
    op.sparse_ = shared;
    return op;
  }

  static Operation unary(std::size_t kappa, std::vector<Elem> table) {
    return from_table(kappa, 1, std::move(table));
  }

  std::size_t domain() const noexcept { return domain_.size(); }
  std::size_t arity() const noexcept { return arity_; }
  bool        is_dense() const noexcept { return table_ != nullptr; }
  bool        valid() const noexcept { return table_ || rule_; }
  Sparse const* sparse_spec() const noexcept { return sparse_.get(); }

  std::span<Elem const> table() const {
    if (!table_) {
      throw BudgetExceeded("operation has no dense table");
    }
    return *table_;
  }

  /// Entry at a point index; dense lookup or decode-and-evaluate.
  Elem at(Index idx) const {
    if (table_) {
      return (*table_)[idx];
    }
    Point p = decode_point(domain(), arity_, idx);
    return eval_unchecked(p);
  }

  Elem operator()(std::span<Elem const> args) const {
    if (args.size() != arity_) {
      throw InputError("arity mismatch: expected " + std::to_string(arity_)
                       + " arguments, got " + std::to_string(args.size()));
    }
    for (Elem a : args) {
      if (a >= domain()) {
        throw InputError("argument out of range");
      }
    }
    return eval_unchecked(args);
  }

  Elem operator()(std::initializer_list<Elem> args) const {
    return (*this)(std::span<Elem const>(args.begin(), args.size()));
  }

  /// No range checks on the arguments; result is still checked for rules.
  Elem eval_unchecked(std::span<Elem const> args) const {
    if (table_) {
      Index idx = 0;
      for (Elem a : args) {
        idx = idx * domain() + a;
      }
      return (*table_)[idx];
    }
    Elem v = (*rule_)(args);
    if (v >= domain()) {
      throw InternalError("computed operation returned out-of-range value");
    }
    return v;
  }

  /// Dense copy of this operation; throws when over the table budget.
  Operation materialized() const {
    if (table_) {
      return *this;
    }
    auto n = checked_pow(domain(), arity_);
    if (!n || *n > table_budget()) {
      throw BudgetExceeded("cannot tabulate operation of arity "
                           + std::to_string(arity_));
    }
    std::vector<Elem> t(*n);
    Point             p(arity_, 0);
    for (Index i = 0; i < *n; ++i) {
      t[i] = eval_unchecked(p);
      next_point(domain(), p);
    }
    return from_table(domain(), arity_, std::move(t));
  }

  bool can_materialize() const {
    auto n = checked_pow(domain(), arity_);
    return n && *n <= table_budget();
  }

  /// Pointwise equality; both sides are evaluated when one is computed.
  friend bool operator==(Operation const& a, Operation const& b) {
    if (a.domain() != b.domain() || a.arity() != b.arity()) {
      return false;
    }
    if (a.table_ && b.table_) {
      return *a.table_ == *b.table_;
    }
    auto n = checked_pow(a.domain(), a.arity());
    if (!n || *n > table_budget()) {
      throw BudgetExceeded("cannot compare operations pointwise");
    }
    for (Index i = 0; i < *n; ++i) {
      if (a.at(i) != b.at(i)) {
        return false;
      }
    }
    return true;
  }

 private:
  Domain                                   domain_;
  std::size_t                              arity_ = 0;
  std::shared_ptr<std::vector<Elem> const> table_;
  std::shared_ptr<Rule const>              rule_;
  std::shared_ptr<Sparse const>            sparse_;
};

/// The table as a string, for use as a hash key.
inline std::string table_key(Operation const& op) {
  auto t = op.table();
  return std::string(reinterpret_cast<char const*>(t.data()), t.size());
}

/// Pointwise outer(inner_1(x), ..., inner_m(x)).
inline Operation superpose(Operation const& outer, std::vector<Operation> const& inners) {
  if (inners.size() != outer.arity()) {
    throw InputError("superpose: outer arity " + std::to_string(outer.arity())
                     + " but " + std::to_string(inners.size()) + " inner operations");
  }
  std::size_t kappa = outer.domain();
  if (inners.empty()) {
    throw InputError("superpose: cannot infer arity from zero inner operations");
  }
  std::size_t k = inners.front().arity();
  for (auto const& g : inners) {
    if (g.domain() != kappa || g.arity() != k) {
      throw InputError("superpose: inner operations disagree in domain or arity");
    }
  }
  auto n = checked_pow(kappa, k);
  if (n && *n <= table_budget()) {
    std::vector<Elem> t(*n);
    Point             mid(inners.size());
    for (Index i = 0; i < *n; ++i) {
      for (std::size_t j = 0; j < inners.size(); ++j) {
        mid[j] = inners[j].at(i);
      }
      t[i] = outer.eval_unchecked(mid);
    }
    return Operation::from_table(kappa, k, std::move(t));
  }
  return Operation::computed(kappa, k, [outer, inners](std::span<Elem const> x) {
    Point mid(inners.size());
    for (std::size_t j = 0; j < inners.size(); ++j) {
      mid[j] = inners[j].eval_unchecked(x);
    }
    return outer.eval_unchecked(mid);
  });
}

////////////////////////////////////////////////////////////////////////////
// Relation
////////////////////////////////////////////////////////////////////////////

class Relation {
 public:
  Relation() = default;

  /// The empty relation of the given arity.
  Relation(std::size_t kappa, std::size_t arity) : domain_(kappa), arity_(arity) {
    if (arity == 0) {
      throw InputError("relation arity must be at least 1");
    }
    auto n = checked_pow(kappa, arity);
    if (!n || *n > table_budget()) {
      throw BudgetExceeded("relation bitset over budget");
    }
    points_ = *n;
    bits_.assign((points_ + 63) / 64, 0);
  }

  template <typename Pred>
  static Relation from_predicate(std::size_t kappa, std::size_t arity, Pred&& pred) {
    Relation r(kappa, arity);
    Point    p(arity, 0);
    for (Index i = 0; i < r.points_; ++i) {
      if (pred(std::span<Elem const>(p))) {
        r.insert(i);
      }
      next_point(kappa, p);
    }
    return r;
  }

  static Relation from_tuples(std::size_t kappa, std::size_t arity,
                              std::vector<Point> const& tuples) {
    Relation r(kappa, arity);
    for (auto const& t : tuples) {
      if (t.size() != arity) {
        throw InputError("tuple length " + std::to_string(t.size())
                         + " does not match relation arity "
                         + std::to_string(arity));
      }
      r.insert(encode_point(kappa, t));
    }
    return r;
  }

  static Relation full(std::size_t kappa, std::size_t arity) {
    return from_predicate(kappa, arity, [](auto) { return true; });
  }

  std::size_t domain() const noexcept { return domain_.size(); }
  std::size_t arity() const noexcept { return arity_; }
  Index       points() const noexcept { return points_; }

  bool contains(Index idx) const { return (bits_[idx >> 6] >> (idx & 63)) & 1U; }
  bool contains(std::span<Elem const> t) const {
    return contains(encode_point(domain(), t));
  }
  void insert(Index idx) { bits_[idx >> 6] |= std::uint64_t{1} << (idx & 63); }
  void erase(Index idx) { bits_[idx >> 6] &= ~(std::uint64_t{1} << (idx & 63)); }

  std::size_t size() const {
    std::size_t c = 0;
    for (auto w : bits_) {
      c += static_cast<std::size_t>(std::popcount(w));
    }
    return c;
  }

  bool empty() const { return size() == 0; }

  /// Member indices in increasing order.
  std::vector<Index> indices() const {
    std::vector<Index> out;
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      std::uint64_t word = bits_[w];
      while (word != 0) {
        int b = std::countr_zero(word);
        out.push_back(w * 64 + static_cast<Index>(b));
        word &= word - 1;
      }
    }
    return out;
  }

  std::vector<Point> tuples() const {
    std::vector<Point> out;
    for (Index i : indices()) {
      out.push_back(decode_point(domain(), arity_, i));
    }
    return out;
  }

  std::vector<std::uint64_t> const& words() const noexcept { return bits_; }

  Relation intersect(Relation const& o) const {
    check_compatible(o);
    Relation r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      r.bits_[i] &= o.bits_[i];
    }
    return r;
  }

  Relation complement() const {
    Relation r(domain(), arity_);
    for (Index i = 0; i < points_; ++i) {
      if (!contains(i)) {
        r.insert(i);
      }
    }
    return r;
  }

  bool subset_of(Relation const& o) const {
    check_compatible(o);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
      if ((bits_[i] & ~o.bits_[i]) != 0) {
        return false;
      }
    }
    return true;
  }

  friend bool operator==(Relation const& a, Relation const& b) {
    return a.domain() == b.domain() && a.arity_ == b.arity_ && a.bits_ == b.bits_;
  }

  /// Total order: arity, then the sorted member-index list lexicographically.
  friend bool operator<(Relation const& a, Relation const& b) {
    if (a.domain() != b.domain()) {
      return a.domain() < b.domain();
    }
    if (a.arity_ != b.arity_) {
      return a.arity_ < b.arity_;
    }
    auto ia = a.indices();
    auto ib = b.indices();
    return std::lexicographical_compare(ia.begin(), ia.end(), ib.begin(), ib.end());
  }

 private:
  void check_compatible(Relation const& o) const {
    if (domain() != o.domain() || arity_ != o.arity_) {
      throw InputError("relations differ in domain or arity");
    }
  }

  Domain                     domain_;
  std::size_t                arity_  = 0;
  Index                      points_ = 0;
  std::vector<std::uint64_t> bits_;
};

////////////////////////////////////////////////////////////////////////////
// Term
////////////////////////////////////////////////////////////////////////////

/// A composition tree over named basis operations and projections.  Nodes are
/// shared, so a term may be a DAG; evaluation memoizes per node.
class Term {
 public:
  struct Node {
    std::size_t       arity = 0;
    bool              is_projection = false;
    std::size_t       index = 0;  // projection coordinate, 0-based
    std::string       op;
    std::vector<Term> args;
  };

  Term() = default;

  static Term projection(std::size_t arity, std::size_t index) {
    if (index >= arity) {
      throw InputError("projection index " + std::to_string(index)
                       + " out of range for arity " + std::to_string(arity));
    }
    auto n           = std::make_shared<Node>();
    n->arity         = arity;
    n->is_projection = true;
    n->index         = index;
    return Term(std::move(n));
  }

  /// Apply a named operation.  With no children the arity must be given.
  static Term apply(std::string op, std::vector<Term> args,
                    std::optional<std::size_t> arity = std::nullopt) {
    std::size_t k;
    if (args.empty()) {
      if (!arity) {
        throw InputError("apply with no arguments needs an explicit arity");
      }
      k = *arity;
    } else {
      k = args.front().arity();
      for (auto const& a : args) {
        if (a.arity() != k) {
          throw InputError("apply '" + op + "': children disagree in arity");
        }
      }
      if (arity && *arity != k) {
        throw InputError("apply '" + op + "': explicit arity disagrees with children");
      }
    }
    auto n   = std::make_shared<Node>();
    n->arity = k;
    n->op    = std::move(op);
    n->args  = std::move(args);
    return Term(std::move(n));
  }

  bool               valid() const noexcept { return node_ != nullptr; }
  std::size_t        arity() const { return node_->arity; }
  bool               is_projection() const { return node_->is_projection; }
  std::size_t        index() const { return node_->index; }
  std::string const& op() const { return node_->op; }
  std::vector<Term> const& args() const { return node_->args; }
  Node const*        node() const noexcept { return node_.get(); }

  /// Number of distinct nodes in the DAG.
  std::size_t node_count() const {
    std::set<Node const*> seen;
    count_nodes(*this, seen);
    return seen.size();
  }

  /// Height of the tree (projections have depth 0).
  std::size_t depth() const {
    std::unordered_map<Node const*, std::size_t> memo;
    return depth_of(*this, memo);
  }

  /// Names of every operation referenced by the term.
  std::set<std::string> op_names() const {
    std::set<std::string>  names;
    std::set<Node const*>  seen;
    collect_names(*this, names, seen);
    return names;
  }

  friend bool operator==(Term const& a, Term const& b) {
    if (a.node_ == b.node_) {
      return true;
    }
    if (!a.node_ || !b.node_) {
      return false;
    }
    if (a.arity() != b.arity() || a.is_projection() != b.is_projection()) {
      return false;
    }
    if (a.is_projection()) {
      return a.index() == b.index();
    }
    return a.op() == b.op() && a.args() == b.args();
  }

 private:
  explicit Term(std::shared_ptr<Node const> n) : node_(std::move(n)) {}

  static void count_nodes(Term const& t, std::set<Node const*>& seen) {
    if (!seen.insert(t.node()).second) {
      return;
    }
    for (auto const& a : t.args()) {
      count_nodes(a, seen);
    }
  }

  static std::size_t depth_of(Term const&                                    t,
                              std::unordered_map<Node const*, std::size_t>& memo) {
    if (t.is_projection()) {
      return 0;
    }
    if (auto it = memo.find(t.node()); it != memo.end()) {
      return it->second;
    }
    std::size_t d = 0;
    for (auto const& a : t.args()) {
      d = std::max(d, depth_of(a, memo));
    }
    memo[t.node()] = d + 1;
    return d + 1;
  }

  static void collect_names(Term const& t, std::set<std::string>& names,
                            std::set<Node const*>& seen) {
    if (!seen.insert(t.node()).second || t.is_projection()) {
      return;
    }
    names.insert(t.op());
    for (auto const& a : t.args()) {
      collect_names(a, names, seen);
    }
  }

  std::shared_ptr<Node const> node_;
};

/// Named operations; ordered so serialization is deterministic.
using Basis = std::map<std::string, Operation>;

namespace detail {
inline Operation const& lookup(Basis const& basis, std::string const& name,
                               std::size_t nargs) {
  auto it = basis.find(name);
  if (it == basis.end()) {
    throw InputError("unknown basis operation '" + name + "'");
  }
  if (it->second.arity() != nargs) {
    throw InputError("basis operation '" + name + "' has arity "
                     + std::to_string(it->second.arity()) + " but is applied to "
                     + std::to_string(nargs) + " arguments");
  }
  return it->second;
}

inline Elem eval_rec(Term const& t, Basis const& basis, std::span<Elem const> args,
                     std::unordered_map<Term::Node const*, Elem>& memo) {
  if (t.is_projection()) {
    return args[t.index()];
  }
  if (auto it = memo.find(t.node()); it != memo.end()) {
    return it->second;
  }
  Operation const& f = lookup(basis, t.op(), t.args().size());
  Point            mid(t.args().size());
  for (std::size_t i = 0; i < mid.size(); ++i) {
    mid[i] = eval_rec(t.args()[i], basis, args, memo);
  }
  Elem v           = f.eval_unchecked(mid);
  memo[t.node()]   = v;
  return v;
}
}  // namespace detail

/// Evaluates a term at one point.
inline Elem eval_term(Term const& term, Basis const& basis, std::span<Elem const> args) {
  if (args.size() != term.arity()) {
    throw InputError("eval_term: term has arity " + std::to_string(term.arity())
                     + " but got " + std::to_string(args.size()) + " arguments");
  }
  std::unordered_map<Term::Node const*, Elem> memo;
  return detail::eval_rec(term, basis, args, memo);
}

/// Dense table of a term over all kappa^k points, evaluated node by node.
inline Operation materialize(Term const& term, Basis const& basis, std::size_t kappa) {
  std::size_t k = term.arity();
  Index       n = ipow(kappa, k);
  if (n > table_budget()) {
    throw BudgetExceeded("materialize: term arity too large");
  }
  std::unordered_map<Term::Node const*, std::vector<Elem>> memo;
  std::vector<std::vector<Elem>>                           proj(k, std::vector<Elem>(n));
  {
    Point p(k, 0);
    for (Index i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        proj[j][i] = p[j];
      }
      next_point(kappa, p);
    }
  }
  std::function<std::vector<Elem> const&(Term const&)> go;
  go = [&](Term const& t) -> std::vector<Elem> const& {
    if (t.is_projection()) {
      return proj[t.index()];
    }
    if (auto it = memo.find(t.node()); it != memo.end()) {
      return it->second;
    }
    Operation const& f = detail::lookup(basis, t.op(), t.args().size());
    if (f.domain() != kappa) {
      throw InputError("basis operation '" + t.op() + "' has the wrong domain");
    }
    std::vector<std::vector<Elem> const*> cols;
    for (auto const& a : t.args()) {
      cols.push_back(&go(a));
    }
    std::vector<Elem> out(n);
    Point             mid(cols.size());
    for (Index i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < cols.size(); ++j) {
        mid[j] = (*cols[j])[i];
      }
      out[i] = f.eval_unchecked(mid);
    }
    return memo.emplace(t.node(), std::move(out)).first->second;
  };
  return Operation::from_table(kappa, k, go(term));
}

/// Replaces every projection onto coordinate i of `outer` by `inners[i]`.
inline Term compose(Term const& outer, std::vector<Term> const& inners) {
  if (inners.size() != outer.arity()) {
    throw InputError("compose: arity mismatch");
  }
  if (inners.empty()) {
    throw InputError("compose: no inner terms");
  }
  std::size_t k = inners.front().arity();
  std::unordered_map<Term::Node const*, Term> memo;
  std::function<Term(Term const&)>            go = [&](Term const& t) -> Term {
    if (t.is_projection()) {
      return inners[t.index()];
    }
    if (auto it = memo.find(t.node()); it != memo.end()) {
      return it->second;
    }
    std::vector<Term> args;
    args.reserve(t.args().size());
    for (auto const& a : t.args()) {
      args.push_back(go(a));
    }
    Term r = Term::apply(t.op(), std::move(args), k);
    memo.emplace(t.node(), r);
    return r;
  };
  return go(outer);
}

/// Replaces applications of the named operations by the given terms, which
/// must have the arity of the operation they stand for.
inline Term substitute(Term const& term, std::map<std::string, Term> const& defs) {
  std::unordered_map<Term::Node const*, Term> memo;
  std::function<Term(Term const&)>            go = [&](Term const& t) -> Term {
    if (t.is_projection()) {
      return t;
    }
    if (auto it = memo.find(t.node()); it != memo.end()) {
      return it->second;
    }
    std::vector<Term> args;
    args.reserve(t.args().size());
    for (auto const& a : t.args()) {
      args.push_back(go(a));
    }
    Term r;
    if (auto d = defs.find(t.op()); d != defs.end()) {
      if (d->second.arity() != args.size()) {
        throw InputError("substitute: definition of '" + t.op()
                         + "' has the wrong arity");
      }
      r = args.empty() ? d->second : compose(d->second, args);
    } else {
      r = Term::apply(t.op(), std::move(args), t.arity());
    }
    memo.emplace(t.node(), r);
    return r;
  };
  return go(term);
}

/// Identity-projection term list (x_1, ..., x_k).
inline std::vector<Term> projections(std::size_t k) {
  std::vector<Term> out;
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(Term::projection(k, i));
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////
// Algebra
////////////////////////////////////////////////////////////////////////////

struct Algebra {
  std::size_t                                    kappa = 1;
  std::vector<std::pair<std::string, Operation>> ops;

  Algebra() = default;
  Algebra(std::size_t k, std::vector<std::pair<std::string, Operation>> o)
      : kappa(k), ops(std::move(o)) {
    Domain d(kappa);
    for (auto const& [name, op] : ops) {
      if (op.domain() != kappa) {
        throw InputError("operation '" + name + "' does not share the algebra's domain");
      }
    }
  }

  Basis basis() const {
    Basis b;
    for (auto const& [name, op] : ops) {
      b.emplace(name, op);
    }
    return b;
  }
};

/// Name used for unary basis functions: "u_" followed by the table digits.
inline std::string unary_name(std::span<Elem const> table) {
  std::string s = "u_";
  bool        dots = table.size() > 10;
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (dots && i > 0) {
      s += '.';
    }
    s += std::to_string(table[i]);
  }
  return s;
}

}  // namespace cloneforge
