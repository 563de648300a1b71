#pragma once

// The preservation predicate and everything built directly on it: bounded
// arity polymorphism sets, subuniverses of powers and function graphs.

#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "core.hpp"

namespace cloneforge {

namespace detail {
inline std::atomic<Index>& preserve_budget_ref() {
  static std::atomic<Index> budget{100'000'000};
  return budget;
}
}  // namespace detail

/// Largest |rho|^n for which `preserves` enumerates row matrices directly.
inline Index preserve_budget() { return detail::preserve_budget_ref().load(); }
inline void  set_preserve_budget(Index n) { detail::preserve_budget_ref().store(n); }

namespace detail {

// Exhaustive scan of rho^n.  Column j of the matrix is accumulated as a point
// index while rows are chosen, so dense lookups need no decoding.
class MatrixScan {
 public:
  MatrixScan(Operation const& f, Relation const& rho)
      : f_(f), rho_(rho), kappa_(rho.domain()), h_(rho.arity()), rows_(rho.tuples()) {
    if (!f_.is_dense()) {
      cols_.assign(h_, Point(f_.arity()));
    }
  }

  bool run() {
    std::vector<Index> acc(h_, 0);
    return go(0, acc);
  }

 private:
  bool go(std::size_t depth, std::vector<Index> const& acc) {
    if (depth == f_.arity()) {
      Index img = 0;
      for (std::size_t j = 0; j < h_; ++j) {
        Elem v = f_.is_dense() ? f_.at(acc[j]) : f_.eval_unchecked(cols_[j]);
        img    = img * kappa_ + v;
      }
      return rho_.contains(img);
    }
    std::vector<Index> next(h_);
    for (auto const& r : rows_) {
      for (std::size_t j = 0; j < h_; ++j) {
        next[j] = acc[j] * kappa_ + r[j];
        if (!cols_.empty()) {
          cols_[j][depth] = r[j];
        }
      }
      if (!go(depth + 1, next)) {
        return false;
      }
    }
    return true;
  }

  Operation const&   f_;
  Relation const&    rho_;
  std::size_t        kappa_;
  std::size_t        h_;
  std::vector<Point> rows_;
  std::vector<Point> cols_;
};

// Search for a violating matrix column by column.  Column j is only extended
// while every row stays a prefix of some rho-tuple, and the image prefix is
// abandoned once every completion of it lies in rho.
class ColumnSearch {
 public:
  ColumnSearch(Operation const& f, Relation const& rho, Index node_budget)
      : f_(f), rho_(rho), kappa_(rho.domain()), h_(rho.arity()), n_(f.arity()),
        budget_(node_budget) {
    row_prefix_.resize(h_ + 1);
    escape_.resize(h_ + 1);
    for (std::size_t j = 0; j <= h_; ++j) {
      Index sz = ipow(kappa_, j);
      row_prefix_[j].assign(sz, false);
      escape_[j].assign(sz, false);
    }
    for (Index t = 0; t < rho_.points(); ++t) {
      bool in = rho_.contains(t);
      Index p = t;
      for (std::size_t j = h_ + 1; j-- > 0;) {
        if (in) {
          row_prefix_[j][p] = true;
        } else {
          escape_[j][p] = true;
        }
        p /= kappa_;
      }
    }
    columns_.assign(h_, Point(n_, 0));
  }

  // True if a violating matrix exists.
  bool find_violation() { return column(0, 0); }

 private:
  bool column(std::size_t j, Index image_prefix) {
    if (!escape_[j][image_prefix]) {
      return false;
    }
    if (j == h_) {
      return true;
    }
    return coordinate(j, 0, image_prefix);
  }

  bool coordinate(std::size_t j, std::size_t i, Index image_prefix) {
    if (++nodes_ > budget_) {
      throw BudgetExceeded("preservation search exceeded its node budget");
    }
    if (i == n_) {
      Elem v = f_.eval_unchecked(columns_[j]);
      return column(j + 1, image_prefix * kappa_ + v);
    }
    Index row = 0;
    for (std::size_t c = 0; c < j; ++c) {
      row = row * kappa_ + columns_[c][i];
    }
    for (Elem v = 0; v < kappa_; ++v) {
      if (!row_prefix_[j + 1][row * kappa_ + v]) {
        continue;
      }
      columns_[j][i] = v;
      if (coordinate(j, i + 1, image_prefix)) {
        return true;
      }
    }
    return false;
  }

  Operation const&               f_;
  Relation const&                rho_;
  std::size_t                    kappa_;
  std::size_t                    h_;
  std::size_t                    n_;
  Index                          budget_;
  Index                          nodes_ = 0;
  std::vector<std::vector<bool>> row_prefix_;
  std::vector<std::vector<bool>> escape_;
  std::vector<Point>             columns_;
};

}  // namespace detail

/// Exact test whether f maps every n-row matrix of rho-tuples, read column
/// by column, to a rho-tuple.
inline bool preserves(Operation const& f, Relation const& rho) {
  if (f.domain() != rho.domain()) {
    throw InputError("preserves: operation and relation have different domains");
  }
  if (rho.empty()) {
    return true;
  }
  auto matrices = checked_pow(rho.size(), f.arity());
  Operation g   = f;
  if (!g.is_dense() && g.can_materialize()
      && (!matrices || ipow(g.domain(), g.arity()) < *matrices)) {
    g = g.materialized();
  }
  if (matrices && *matrices <= preserve_budget()) {
    return detail::MatrixScan(g, rho).run();
  }
  return !detail::ColumnSearch(g, rho, preserve_budget()).find_violation();
}

/// Checks `samples` random row matrices; false means a violation was found.
inline bool preserves_sampled(Operation const& f, Relation const& rho,
                              std::size_t samples, std::uint64_t seed) {
  if (f.domain() != rho.domain()) {
    throw InputError("preserves: operation and relation have different domains");
  }
  auto rows = rho.tuples();
  if (rows.empty()) {
    return true;
  }
  std::mt19937_64                            rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  std::size_t                                h = rho.arity();
  std::vector<Point>                         cols(h, Point(f.arity()));
  Point                                      img(h);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < f.arity(); ++i) {
      auto const& r = rows[pick(rng)];
      for (std::size_t j = 0; j < h; ++j) {
        cols[j][i] = r[j];
      }
    }
    for (std::size_t j = 0; j < h; ++j) {
      img[j] = f.eval_unchecked(cols[j]);
    }
    if (!rho.contains(img)) {
      return false;
    }
  }
  return true;
}

/// First violating matrix of rho^n in row-lexicographic order, as rows.
inline std::optional<std::vector<Point>> first_violation(Operation const& f,
                                                          Relation const&  rho) {
  auto        rows = rho.tuples();
  std::size_t n    = f.arity();
  std::size_t h    = rho.arity();
  if (rows.empty()) {
    return std::nullopt;
  }
  auto total = checked_pow(rows.size(), n);
  if (!total || *total > preserve_budget()) {
    throw BudgetExceeded("first_violation: too many row matrices");
  }
  std::vector<std::size_t> pick(n, 0);
  Point                    col(n);
  Point                    img(h);
  for (Index c = 0; c < *total; ++c) {
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        col[i] = rows[pick[i]][j];
      }
      img[j] = f.eval_unchecked(col);
    }
    if (!rho.contains(img)) {
      std::vector<Point> out;
      for (std::size_t i = 0; i < n; ++i) {
        out.push_back(rows[pick[i]]);
      }
      return out;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (++pick[i] < rows.size()) {
        break;
      }
      pick[i] = 0;
    }
  }
  return std::nullopt;
}

////////////////////////////////////////////////////////////////////////////
// Polymorphism constraint solver
////////////////////////////////////////////////////////////////////////////

/// The k-ary polymorphisms of a set of relations as a constraint problem: one
/// variable per point of A^k, one constraint per k-row matrix of each
/// relation.  Solutions are produced in lexicographic table order.
class PolSolver {
 public:
  PolSolver(std::vector<Relation> relations, std::size_t kappa, std::size_t arity)
      : relations_(std::move(relations)), kappa_(kappa), arity_(arity) {
    cells_ = ipow(kappa, arity);
    if (cells_ > table_budget()) {
      throw BudgetExceeded("PolSolver: too many table cells");
    }
    for (std::size_t r = 0; r < relations_.size(); ++r) {
      auto const& rel = relations_[r];
      if (rel.domain() != kappa) {
        throw InputError("PolSolver: relation domain mismatch");
      }
      auto rows  = rel.tuples();
      auto count = checked_pow(rows.size(), arity);
      if (!count || *count > preserve_budget()) {
        throw BudgetExceeded("PolSolver: too many constraints");
      }
      std::set<std::vector<Index>> scopes;
      std::vector<std::size_t>     pick(arity, 0);
      std::size_t                  h = rel.arity();
      for (Index c = 0; c < *count; ++c) {
        std::vector<Index> scope(h, 0);
        for (std::size_t j = 0; j < h; ++j) {
          for (std::size_t i = 0; i < arity; ++i) {
            scope[j] = scope[j] * kappa + rows[pick[i]][j];
          }
        }
        scopes.insert(std::move(scope));
        for (std::size_t i = arity; i-- > 0;) {
          if (++pick[i] < rows.size()) {
            break;
          }
          pick[i] = 0;
        }
      }
      for (auto const& s : scopes) {
        constraints_.push_back({s, r});
      }
    }
  }

  Index cells() const noexcept { return cells_; }

  /// Calls cb(table) for each solution with the given cells fixed, in
  /// lexicographic order of tables; cb returns false to stop early.
  template <typename F>
  void enumerate(F&& cb, std::vector<std::pair<Index, Elem>> const& fixed = {}) const {
    Search s(*this, fixed);
    s.run(cb);
  }

  std::optional<std::vector<Elem>> find(
      std::vector<std::pair<Index, Elem>> const& fixed = {}) const {
    std::optional<std::vector<Elem>> out;
    enumerate(
        [&](std::vector<Elem> const& t) {
          out = t;
          return false;
        },
        fixed);
    return out;
  }

 private:
  struct Constraint {
    std::vector<Index> scope;
    std::size_t        rel;
  };

  class Search {
   public:
    Search(PolSolver const& p, std::vector<std::pair<Index, Elem>> const& fixed)
        : p_(p), value_(p.cells_, 0), fixed_value_(p.cells_, -1) {
      std::vector<bool> seen(p.cells_, false);
      for (auto [cell, v] : fixed) {
        if (cell >= p.cells_ || v >= p.kappa_) {
          throw InputError("PolSolver: fixed cell out of range");
        }
        if (fixed_value_[cell] >= 0 && fixed_value_[cell] != v) {
          conflict_ = true;
        }
        fixed_value_[cell] = v;
        if (!seen[cell]) {
          seen[cell] = true;
          order_.push_back(cell);
        }
      }
      for (Index c = 0; c < p.cells_; ++c) {
        if (!seen[c]) {
          order_.push_back(c);
        }
      }
      std::vector<std::size_t> pos(p.cells_);
      for (std::size_t i = 0; i < order_.size(); ++i) {
        pos[order_[i]] = i;
      }
      trigger_.resize(order_.size());
      for (std::size_t c = 0; c < p.constraints_.size(); ++c) {
        std::size_t last = 0;
        for (Index v : p.constraints_[c].scope) {
          last = std::max(last, pos[v]);
        }
        trigger_[last].push_back(c);
      }
    }

    template <typename F>
    void run(F& cb) {
      if (!conflict_) {
        go(0, cb);
      }
    }

   private:
    template <typename F>
    bool go(std::size_t depth, F& cb) {
      if (depth == order_.size()) {
        return cb(const_cast<std::vector<Elem> const&>(value_));
      }
      Index cell = order_[depth];
      Elem  lo = 0, hi = static_cast<Elem>(p_.kappa_ - 1);
      if (fixed_value_[cell] >= 0) {
        lo = hi = static_cast<Elem>(fixed_value_[cell]);
      }
      for (int v = lo; v <= hi; ++v) {
        value_[cell] = static_cast<Elem>(v);
        if (consistent(depth) && !go(depth + 1, cb)) {
          return false;
        }
      }
      return true;
    }

    bool consistent(std::size_t depth) const {
      for (std::size_t c : trigger_[depth]) {
        auto const& con = p_.constraints_[c];
        Index       img = 0;
        for (Index v : con.scope) {
          img = img * p_.kappa_ + value_[v];
        }
        if (!p_.relations_[con.rel].contains(img)) {
          return false;
        }
      }
      return true;
    }

    PolSolver const&                      p_;
    std::vector<Elem>                     value_;
    std::vector<int>                      fixed_value_;
    std::vector<Index>                    order_;
    std::vector<std::vector<std::size_t>> trigger_;
    bool                                  conflict_ = false;
  };

  std::vector<Relation>   relations_;
  std::size_t             kappa_;
  std::size_t             arity_;
  Index                   cells_ = 0;
  std::vector<Constraint> constraints_;
};

/// The k-ary members of Pol(relations), in lexicographic table order.
struct PolFragment {
  std::size_t            kappa = 0;
  std::size_t            arity = 0;
  std::vector<Operation> members;

  bool contains(Operation const& f) const {
    return std::find(members.begin(), members.end(), f) != members.end();
  }
  std::size_t size() const noexcept { return members.size(); }
};

inline PolFragment pol_fragment(std::vector<Relation> const& relations, std::size_t k,
                                std::size_t kappa) {
  Index cells      = ipow(kappa, k);
  auto  candidates = checked_pow(kappa, cells);
  if (!candidates || *candidates > table_budget()) {
    throw BudgetExceeded("pol_fragment: " + std::to_string(kappa) + "^"
                         + std::to_string(kappa) + "^" + std::to_string(k)
                         + " candidate functions exceed the budget");
  }
  PolSolver   solver(relations, kappa, k);
  PolFragment out{kappa, k, {}};
  solver.enumerate([&](std::vector<Elem> const& t) {
    out.members.push_back(Operation::from_table(kappa, k, t));
    return true;
  });
  return out;
}

inline PolFragment pol_fragment(std::vector<Relation> const& relations, std::size_t k) {
  if (relations.empty()) {
    throw InputError("pol_fragment: no relations given and no domain");
  }
  return pol_fragment(relations, k, relations.front().domain());
}

////////////////////////////////////////////////////////////////////////////
// Subuniverses of powers and graphs
////////////////////////////////////////////////////////////////////////////

/// Least subset of A^m containing `seed` and closed under the componentwise
/// action of every basic operation.
inline Relation generated_subuniverse(Algebra const& alg, std::size_t m,
                                      std::vector<Point> const& seed) {
  Relation           out(alg.kappa, m);
  std::vector<Point> members;
  auto               add = [&](Point const& p) {
    Index idx = encode_point(alg.kappa, p);
    if (!out.contains(idx)) {
      out.insert(idx);
      members.push_back(p);
    }
  };
  for (auto const& p : seed) {
    if (p.size() != m) {
      throw InputError("generated_subuniverse: seed tuple of the wrong length");
    }
    add(p);
  }
  for (auto const& [name, op] : alg.ops) {
    if (op.arity() == 0) {
      add(Point(m, op.eval_unchecked({})));
    }
  }
  Point col;
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (auto const& [name, op] : alg.ops) {
      std::size_t n = op.arity();
      if (n == 0) {
        continue;
      }
      // tuples over members[0..i] that use member i at least once
      std::vector<std::size_t> pick(n, 0);
      col.resize(n);
      while (true) {
        bool uses_new = std::find(pick.begin(), pick.end(), i) != pick.end();
        if (uses_new) {
          Point img(m);
          for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t a = 0; a < n; ++a) {
              col[a] = members[pick[a]][j];
            }
            img[j] = op.eval_unchecked(col);
          }
          add(img);
        }
        std::size_t a = n;
        while (a-- > 0) {
          if (++pick[a] <= i) {
            break;
          }
          pick[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) {
          break;
        }
      }
    }
  }
  return out;
}

inline Relation generated_subuniverse(Algebra const& alg, std::size_t m,
                                      Relation const& seed) {
  return generated_subuniverse(alg, m, seed.tuples());
}

inline Relation graph_of(Operation const& f) {
  if (f.arity() != 1) {
    throw InputError("graph_of: operation is not unary");
  }
  Relation r(f.domain(), 2);
  for (Elem a = 0; a < f.domain(); ++a) {
    r.insert(static_cast<Index>(a) * f.domain() + f.at(a));
  }
  return r;
}

}  // namespace cloneforge
