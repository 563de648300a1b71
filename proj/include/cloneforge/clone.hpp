#pragma once

// Clone closure at bounded arity, completeness checks, Mal'cev terms and the
// constructive Slupecki criterion (unary functions plus one irreducible onto
// function generate the chain maximum, and from it everything).

#include <limits>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "core.hpp"

namespace cloneforge {

////////////////////////////////////////////////////////////////////////////
// Closure
////////////////////////////////////////////////////////////////////////////

struct CloneFragment {
  std::size_t            kappa = 0;
  std::size_t            arity = 0;
  std::vector<Operation> members;     // discovery order
  std::vector<Term>      provenance;  // provenance[i] evaluates to members[i]
  std::vector<std::size_t> depth;
  bool                   complete = true;  // false when a bound cut the fixpoint short

  std::size_t size() const noexcept { return members.size(); }

  std::optional<std::size_t> find(Operation const& f) const {
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (members[i] == f) {
        return i;
      }
    }
    return std::nullopt;
  }
  bool contains(Operation const& f) const { return find(f).has_value(); }
};

struct ClosureLimits {
  std::size_t max_members = std::numeric_limits<std::size_t>::max();
  std::size_t max_depth   = std::numeric_limits<std::size_t>::max();
};

namespace detail {

class ClosureEngine {
 public:
  ClosureEngine(Basis const& basis, std::size_t k, std::size_t kappa, ClosureLimits lim)
      : kappa_(kappa), k_(k), lim_(lim) {
    points_ = ipow(kappa, k);
    if (points_ > table_budget()) {
      throw BudgetExceeded("closure: kappa^k exceeds the table budget");
    }
    for (auto const& [name, op] : basis) {
      if (op.domain() != kappa) {
        throw InputError("closure: basis operation '" + name + "' has the wrong domain");
      }
      ops_.push_back({name, op.can_materialize() ? op.materialized() : op});
    }
    auto total = checked_pow(kappa, points_);
    if (total && *total <= (Index{1} << 24)) {
      direct_.assign(*total, -1);
    }
    frag_.kappa = kappa;
    frag_.arity = k;
  }

  template <typename Stop>
  CloneFragment run(Stop&& stop) {
    for (std::size_t i = 0; i < k_; ++i) {
      std::vector<Elem> t(points_);
      Point             p(k_, 0);
      for (Index j = 0; j < points_; ++j) {
        t[j] = p[i];
        next_point(kappa_, p);
      }
      if (add(std::move(t), Term::projection(k_, i), 0) && stop(frag_)) {
        frag_.complete = false;
        return std::move(frag_);
      }
    }
    for (auto const& [name, op] : ops_) {
      if (op.arity() == 0) {
        std::vector<Elem> t(points_, op.eval_unchecked({}));
        if (add(std::move(t), Term::apply(name, {}, k_), 1) && stop(frag_)) {
          frag_.complete = false;
          return std::move(frag_);
        }
      }
    }
    for (std::size_t i = 0; i < tables_.size(); ++i) {
      for (auto const& entry : ops_) {
        if (entry.op.arity() == 0) {
          continue;
        }
        if (!expand(entry, i, stop)) {
          frag_.complete = false;
          return std::move(frag_);
        }
      }
    }
    return std::move(frag_);
  }

 private:
  struct Entry {
    std::string name;
    Operation   op;
  };

  // Applies op to every tuple over members[0..i] that uses member i, in
  // lexicographic order.  Returns false when stopped.
  template <typename Stop>
  bool expand(Entry const& e, std::size_t i, Stop& stop) {
    std::size_t                    m = e.op.arity();
    std::vector<std::size_t>       pick(m);
    std::vector<std::vector<Index>> idx(m + 1, std::vector<Index>(points_, 0));
    bool                           dense = e.op.is_dense();
    auto                           ftab  = dense ? e.op.table() : std::span<Elem const>{};
    Point                          scratch(m);

    std::function<bool(std::size_t, bool)> go = [&](std::size_t pos, bool used) -> bool {
      if (pos == m) {
        std::vector<Elem> res(points_);
        if (dense) {
          for (Index p = 0; p < points_; ++p) {
            res[p] = ftab[idx[m][p]];
          }
        } else {
          for (Index p = 0; p < points_; ++p) {
            for (std::size_t a = 0; a < m; ++a) {
              scratch[a] = tables_[pick[a]][p];
            }
            res[p] = e.op.eval_unchecked(scratch);
          }
        }
        std::size_t d = 0;
        for (std::size_t a = 0; a < m; ++a) {
          d = std::max(d, frag_.depth[pick[a]]);
        }
        if (d + 1 > lim_.max_depth) {
          if (!known(res)) {
            frag_.complete = false;
          }
          return true;
        }
        if (known(res)) {
          return true;
        }
        std::vector<Term> args;
        for (std::size_t a = 0; a < m; ++a) {
          args.push_back(frag_.provenance[pick[a]]);
        }
        add(std::move(res), Term::apply(e.name, std::move(args), k_), d + 1);
        return !stop(frag_);
      }
      std::size_t lo = (pos + 1 == m && !used) ? i : 0;
      for (std::size_t v = lo; v <= i; ++v) {
        pick[pos] = v;
        for (Index p = 0; p < points_; ++p) {
          idx[pos + 1][p] = idx[pos][p] * kappa_ + tables_[v][p];
        }
        if (!go(pos + 1, used || v == i)) {
          return false;
        }
      }
      return true;
    };
    return go(0, false);
  }

  Index code(std::vector<Elem> const& t) const {
    Index c = 0;
    for (Elem v : t) {
      c = c * kappa_ + v;
    }
    return c;
  }

  bool known(std::vector<Elem> const& t) const {
    if (!direct_.empty()) {
      return direct_[code(t)] >= 0;
    }
    return hashed_.count(std::string(t.begin(), t.end())) > 0;
  }

  bool add(std::vector<Elem> t, Term term, std::size_t depth) {
    if (known(t)) {
      return false;
    }
    if (frag_.members.size() >= lim_.max_members) {
      throw BudgetExceeded("closure: member budget of " + std::to_string(lim_.max_members)
                           + " exhausted");
    }
    if (!direct_.empty()) {
      direct_[code(t)] = static_cast<std::int32_t>(tables_.size());
    } else {
      hashed_.emplace(std::string(t.begin(), t.end()), tables_.size());
    }
    frag_.members.push_back(Operation::from_table(kappa_, k_, t));
    frag_.provenance.push_back(std::move(term));
    frag_.depth.push_back(depth);
    tables_.push_back(std::move(t));
    return true;
  }

  std::size_t                                  kappa_;
  std::size_t                                  k_;
  ClosureLimits                                lim_;
  Index                                        points_ = 0;
  std::vector<Entry>                           ops_;
  std::vector<std::vector<Elem>>               tables_;
  std::vector<std::int32_t>                    direct_;
  std::unordered_map<std::string, std::size_t> hashed_;
  CloneFragment                                frag_;
};

inline std::size_t basis_domain(Basis const& basis, std::optional<std::size_t> kappa) {
  if (kappa) {
    return *kappa;
  }
  if (basis.empty()) {
    throw InputError("closure: empty basis needs an explicit domain");
  }
  return basis.begin()->second.domain();
}

inline std::size_t default_member_budget(std::size_t kappa, std::size_t k) {
  Index pts = ipow(kappa, k);
  return static_cast<std::size_t>(std::max<Index>(1, table_budget() / pts));
}

}  // namespace detail

/// The k-ary part of the clone generated by `basis`, with provenance terms.
inline CloneFragment closure_fragment(Basis const& basis, std::size_t k,
                                      std::optional<std::size_t> kappa = std::nullopt) {
  std::size_t   d = detail::basis_domain(basis, kappa);
  ClosureLimits lim;
  lim.max_members = detail::default_member_budget(d, k);
  return detail::ClosureEngine(basis, k, d, lim).run([](CloneFragment const&) {
    return false;
  });
}

/// True iff the k-ary part of the generated clone is all of A^(A^k).
inline bool is_complete_at(Basis const& basis, std::size_t k,
                           std::optional<std::size_t> kappa = std::nullopt) {
  std::size_t d     = detail::basis_domain(basis, kappa);
  auto        total = checked_pow(d, ipow(d, k));
  if (!total || *total > table_budget()) {
    throw BudgetExceeded("is_complete_at: kappa^(kappa^k) exceeds the budget");
  }
  ClosureLimits lim;
  lim.max_members = static_cast<std::size_t>(*total);
  auto frag       = detail::ClosureEngine(basis, k, d, lim).run([&](CloneFragment const& f) {
    return f.size() == *total;
  });
  return frag.size() == *total;
}

////////////////////////////////////////////////////////////////////////////
// Dependence, irreducibility, range
////////////////////////////////////////////////////////////////////////////

inline bool depends_on(Operation const& f, std::size_t i) {
  if (i >= f.arity()) {
    throw InputError("depends_on: variable index out of range");
  }
  Operation   g     = f.materialized();
  std::size_t kappa = g.domain();
  Index       n     = ipow(kappa, g.arity());
  Index       step  = ipow(kappa, g.arity() - 1 - i);
  auto        t     = g.table();
  for (Index p = 0; p < n; ++p) {
    if ((p / step) % kappa != 0) {
      continue;
    }
    for (Index v = 1; v < kappa; ++v) {
      if (t[p + v * step] != t[p]) {
        return true;
      }
    }
  }
  return false;
}

inline std::size_t essential_count(Operation const& f) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < f.arity(); ++i) {
    c += depends_on(f, i) ? 1 : 0;
  }
  return c;
}

inline bool is_irreducible(Operation const& f) { return essential_count(f) >= 2; }

inline std::set<Elem> range_of(Operation const& f) {
  Operation      g = f.materialized();
  std::set<Elem> out(g.table().begin(), g.table().end());
  return out;
}

////////////////////////////////////////////////////////////////////////////
// Mal'cev terms
////////////////////////////////////////////////////////////////////////////

enum class Search { Found, Absent, Unknown };

inline char const* to_string(Search s) {
  switch (s) {
    case Search::Found: return "found";
    case Search::Absent: return "absent";
    default: return "unknown";
  }
}

struct MalcevResult {
  Search              status = Search::Unknown;
  std::optional<Term> term;
  std::size_t         explored = 0;  // ternary members examined
};

inline bool is_malcev(Operation const& p) {
  std::size_t kappa = p.domain();
  for (Elem x = 0; x < kappa; ++x) {
    for (Elem z = 0; z < kappa; ++z) {
      if (p({x, x, z}) != z || p({x, z, z}) != x) {
        return false;
      }
    }
  }
  return true;
}

/// Searches the ternary term operations for p with p(x,x,z) = z and
/// p(x,z,z) = x.  Absence is reported only when the whole ternary fragment
/// was generated within the bounds.
inline MalcevResult find_malcev(Algebra const& alg,
                                std::size_t    depth_bound = std::numeric_limits<std::size_t>::max(),
                                std::optional<std::size_t> member_budget = std::nullopt) {
  MalcevResult  out;
  ClosureLimits lim;
  lim.max_depth   = depth_bound;
  lim.max_members = member_budget.value_or(detail::default_member_budget(alg.kappa, 3));
  try {
    auto frag = detail::ClosureEngine(alg.basis(), 3, alg.kappa, lim)
                    .run([](CloneFragment const& f) { return is_malcev(f.members.back()); });
    out.explored = frag.size();
    if (!frag.members.empty() && is_malcev(frag.members.back())) {
      out.status = Search::Found;
      out.term   = frag.provenance.back();
    } else {
      out.status = frag.complete ? Search::Absent : Search::Unknown;
    }
  } catch (BudgetExceeded const&) {
    out.status = Search::Unknown;
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////
// Constructions over unary functions
////////////////////////////////////////////////////////////////////////////

/// A term together with the operations it names.
struct Construction {
  Term  term;
  Basis basis;
};

namespace detail {

struct Expr {
  Operation op;
  Term      term;
};

// Builds binary expressions over one named operation and arbitrary unary
// functions, tracking the table and the term in parallel.
class UnaryKit {
 public:
  explicit UnaryKit(std::size_t kappa) : kappa_(kappa) {}

  std::size_t kappa() const { return kappa_; }

  std::string name(std::vector<Elem> const& t) {
    auto n = unary_name(t);
    basis_.try_emplace(n, Operation::unary(kappa_, t));
    return n;
  }

  Expr var(std::size_t k, std::size_t i) const {
    return {Operation::projection(kappa_, k, i), Term::projection(k, i)};
  }

  Expr unary(std::vector<Elem> const& t, Expr const& e) {
    auto n = name(t);
    return {superpose(basis_.at(n), {e.op}), Term::apply(n, {e.term})};
  }

  Expr bin(Expr const& outer, Expr const& a, Expr const& b) const {
    return {superpose(outer.op, {a.op, b.op}), compose(outer.term, {a.term, b.term})};
  }

  /// outer applied to arbitrary argument expressions.
  Expr apply(Expr const& outer, std::vector<Expr> const& args) const {
    std::vector<Operation> ops;
    std::vector<Term>      ts;
    for (auto const& a : args) {
      ops.push_back(a.op);
      ts.push_back(a.term);
    }
    return {superpose(outer.op, ops), compose(outer.term, ts)};
  }

  Basis& basis() { return basis_; }

  std::vector<Elem> identity() const {
    std::vector<Elem> t(kappa_);
    for (std::size_t x = 0; x < kappa_; ++x) {
      t[x] = static_cast<Elem>(x);
    }
    return t;
  }

  /// Permutation listing `front` first (in the given order) then the rest
  /// ascending; maps front[i] to i.
  std::vector<Elem> ranking(std::vector<Elem> const& front) const {
    std::vector<Elem> t(kappa_);
    std::vector<bool> placed(kappa_, false);
    Elem              next = 0;
    for (Elem v : front) {
      if (!placed[v]) {
        placed[v] = true;
        t[v]      = next++;
      }
    }
    for (std::size_t x = 0; x < kappa_; ++x) {
      if (!placed[x]) {
        t[x] = next++;
      }
    }
    return t;
  }

 private:
  std::size_t kappa_;
  Basis       basis_;
};

inline std::vector<Elem> invert(std::vector<Elem> const& perm) {
  std::vector<Elem> inv(perm.size());
  for (std::size_t x = 0; x < perm.size(); ++x) {
    inv[perm[x]] = static_cast<Elem>(x);
  }
  return inv;
}

inline std::vector<Elem> compose_unary(std::vector<Elem> const& outer,
                                       std::vector<Elem> const& inner) {
  std::vector<Elem> t(inner.size());
  for (std::size_t x = 0; x < inner.size(); ++x) {
    t[x] = outer[inner[x]];
  }
  return t;
}

inline Elem at2(Operation const& f, Elem x, Elem y) {
  return f.table()[static_cast<Index>(x) * f.domain() + y];
}

inline bool is_max_below(Operation const& g, std::size_t p) {
  for (Elem x = 0; x < p; ++x) {
    for (Elem y = 0; y < p; ++y) {
      if (at2(g, x, y) != std::max(x, y)) {
        return false;
      }
    }
  }
  return true;
}

inline Operation chain_max(std::size_t kappa) {
  return Operation::tabulate(kappa, 2, [](std::span<Elem const> x) {
    return std::max(x[0], x[1]);
  });
}

// a, b, c, d with f(a,c), f(a,d), f(b,c) pairwise distinct: the first
// quadruple in lexicographic order whose 2x2 block takes three values,
// oriented so that the fourth corner (b,d) is a repeated or spare value.
struct Block {
  Elem a, b, c, d;
};

inline std::optional<Block> three_value_block(Operation const& f) {
  std::size_t kappa = f.domain();
  auto distinct3 = [&](Elem a, Elem b, Elem c, Elem d) {
    Elem u = at2(f, a, c), v = at2(f, a, d), w = at2(f, b, c);
    return u != v && v != w && u != w;
  };
  for (Elem a = 0; a < kappa; ++a) {
    for (Elem b = 0; b < kappa; ++b) {
      for (Elem c = 0; c < kappa; ++c) {
        for (Elem d = 0; d < kappa; ++d) {
          std::set<Elem> vals{at2(f, a, c), at2(f, a, d), at2(f, b, c), at2(f, b, d)};
          if (vals.size() < 3) {
            continue;
          }
          for (auto [aa, bb, cc, dd] : {Block{a, b, c, d}, Block{a, b, d, c},
                                        Block{b, a, c, d}, Block{b, a, d, c}}) {
            if (distinct3(aa, bb, cc, dd)) {
              return Block{aa, bb, cc, dd};
            }
          }
        }
      }
    }
  }
  return std::nullopt;
}

// g(x,y) = max(x,y) on [0,p)^2 from f with f(i,y) = y and f(j,y) = l for y < p.
inline Expr merge_step(UnaryKit& kit, Expr const& f, Elem i, Elem j, Elem l, std::size_t p) {
  std::size_t kappa = kit.kappa();
  for (Elem y = 0; y < p; ++y) {
    if (at2(f.op, i, y) != y || at2(f.op, j, y) != l) {
      throw InternalError("merge step: hypotheses f(i,y)=y, f(j,y)=l fail");
    }
  }
  Expr x = kit.var(2, 0), y = kit.var(2, 1);
  Expr f1 = f;
  Elem l1 = l;
  if (i != 0 || j != 1 || l >= p) {
    auto s = kit.identity();
    s[0]   = i;
    s[1]   = j;
    auto t = kit.identity();
    if (l >= p) {
      t[l] = 0;
      l1   = 0;
    }
    f1 = kit.bin(f, kit.unary(s, x), y);
    if (l >= p) {
      f1 = kit.unary(t, f1);
    }
  }
  Expr g;
  if (p == 2) {
    if (l1 == 1) {
      g = f1;
    } else {
      auto h = kit.identity();
      std::swap(h[0], h[1]);
      g = kit.unary(h, kit.bin(f1, x, kit.unary(h, y)));
    }
  } else {
    Expr gp = merge_step(kit, f1, 0, 1, l1, p - 1);
    std::vector<Elem> h1(kappa), h2 = kit.identity();
    for (std::size_t v = 0; v < kappa; ++v) {
      h1[v] = v + 1 < p ? 0 : 1;
    }
    std::swap(h2[l1], h2[p - 1]);
    Expr fp = kit.unary(h2, kit.bin(f1, kit.unary(h1, x), kit.unary(h2, y)));
    g       = kit.bin(fp, fp, gp);
  }
  if (!is_max_below(g.op, p)) {
    throw InternalError("merge step: result is not the maximum on [0,p)");
  }
  return g;
}

inline std::set<Elem> range2(Operation const& f) {
  auto t = f.table();
  return {t.begin(), t.end()};
}

// Case (i) of the three-element base: E agrees with 0 1 / 2 2 on {0,1}^2.
inline Expr base_case_i(UnaryKit& kit, Expr const& e) {
  std::size_t       kappa = kit.kappa();
  std::vector<Elem> h1(kappa, 0), h2(kappa, 1);
  h1[2] = 1;
  h2[0] = 0;
  Expr x = kit.var(2, 0), y = kit.var(2, 1);
  Expr a = kit.unary(h2, kit.bin(e, kit.unary(h1, x), kit.unary(h1, y)));
  Expr b = kit.unary(h2, kit.bin(e, kit.unary(h2, x), kit.unary(h2, y)));
  return kit.bin(e, a, b);
}

// g(x,y) = max(x,y) on [0,p)^2 for irreducible f with range {0..p-1}.
inline Expr max_below(UnaryKit& kit, Expr const& f, std::size_t p) {
  std::size_t kappa = kit.kappa();
  auto        blk   = three_value_block(f.op);
  if (!blk) {
    throw InternalError("no 2x2 block with three values");
  }
  auto [a, b, c, d] = *blk;
  Elem u = at2(f.op, a, c), v = at2(f.op, a, d), w = at2(f.op, b, c);
  Expr x = kit.var(2, 0), y = kit.var(2, 1);
  Expr g;
  if (p == 3) {
    auto s1 = kit.identity(), s2 = kit.identity();
    s1[0] = a;
    s1[1] = b;
    s2[0] = c;
    s2[1] = d;
    auto sigma = kit.ranking({u, v, w});
    Expr F     = kit.unary(sigma, kit.bin(f, kit.unary(s1, x), kit.unary(s2, y)));
    Elem f11   = at2(F.op, 1, 1);
    if (f11 == 2) {
      g = base_case_i(kit, F);
    } else if (f11 == 0) {
      std::vector<Elem> h2(kappa, 1), h3 = kit.identity(), h4 = kit.identity();
      h2[0] = 0;
      h3[0] = 2;
      h3[1] = 0;
      h3[2] = 1;
      std::swap(h4[0], h4[1]);
      Expr inner = kit.unary(h2, kit.bin(F, x, kit.unary(h4, y)));
      g          = base_case_i(kit, kit.unary(h3, kit.bin(F, y, inner)));
    } else {
      auto sw = kit.identity();
      std::swap(sw[1], sw[2]);
      g = base_case_i(kit, kit.unary(sw, kit.bin(F, y, x)));
    }
  } else {
    auto           rng = range2(f.op);
    std::set<Elem> uvw{u, v, w};
    Elem           z = 0;
    for (Elem r : rng) {
      if (!uvw.count(r)) {
        z = r;
        break;
      }
    }
    auto h = kit.identity();
    h[z]   = u;
    std::vector<Elem> kept;
    for (Elem r : rng) {
      if (r != z) {
        kept.push_back(r);
      }
    }
    auto pi  = kit.ranking(kept);
    Expr fpp = kit.unary(compose_unary(pi, h), f);
    Expr gpp = max_below(kit, fpp, p - 1);

    // sections h1, h2 with f(h1(x), h2(x)) = x on the range
    std::vector<Elem> h1(kappa, a), h2(kappa, c);
    h1[u] = a, h2[u] = c;
    h1[v] = a, h2[v] = d;
    h1[w] = b, h2[w] = c;
    for (Elem r : rng) {
      if (uvw.count(r)) {
        continue;
      }
      bool done = false;
      for (Elem s = 0; s < kappa && !done; ++s) {
        for (Elem t = 0; t < kappa && !done; ++t) {
          if (at2(f.op, s, t) == r) {
            h1[r] = s, h2[r] = t;
            done  = true;
          }
        }
      }
    }
    auto rank_of_range = [&](std::vector<Elem> const& hh) {
      std::set<Elem> r(hh.begin(), hh.end());
      return kit.ranking({r.begin(), r.end()});
    };
    auto h3 = rank_of_range(h1), h4 = rank_of_range(h2);
    auto h5 = compose_unary(h3, h1), h6 = compose_unary(h4, h2);
    Expr fp = kit.bin(f, kit.unary(invert(h3), x), kit.unary(invert(h4), y));
    Expr gp = kit.bin(fp, kit.bin(gpp, x, kit.unary(h5, y)), kit.bin(gpp, x, kit.unary(h6, y)));
    Elem l  = at2(fp.op, p - 2, p - 2);
    g       = merge_step(kit, gp, 0, static_cast<Elem>(p - 2), l, p);
  }
  if (!is_max_below(g.op, p)) {
    throw InternalError("max construction failed below " + std::to_string(p));
  }
  return g;
}

// Candidate points for the arity reduction: all of A^n when small, otherwise
// the listed points of a sparse operation and their Hamming neighbours.
inline std::vector<Point> reduction_points(Operation const& f) {
  std::size_t        kappa = f.domain();
  std::size_t        n     = f.arity();
  std::vector<Point> pts;
  auto               total = checked_pow(kappa, n);
  if (total && *total <= 200'000) {
    Point p(n, 0);
    for (Index i = 0; i < *total; ++i) {
      pts.push_back(p);
      next_point(kappa, p);
    }
    return pts;
  }
  auto const* s = f.sparse_spec();
  if (s == nullptr) {
    throw BudgetExceeded("arity reduction: operation too large and not sparse");
  }
  std::set<Point> seen;
  for (auto const& [p, v] : s->values) {
    seen.insert(p);
    for (std::size_t i = 0; i < n; ++i) {
      Point q = p;
      for (Elem x = 0; x < kappa; ++x) {
        q[i] = x;
        seen.insert(q);
      }
    }
  }
  return {seen.begin(), seen.end()};
}

// Binary irreducible onto g = f(h_1(x), ..., h_q(y), ..., h_n(x)).
inline Expr reduce_arity(UnaryKit& kit, Operation const& f, std::string const& fname) {
  std::size_t kappa = f.domain();
  std::size_t n     = f.arity();
  auto        pts   = reduction_points(f);
  std::vector<Elem> val(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    val[i] = f.eval_unchecked(pts[i]);
  }
  // a, q, u with f(a) != f(a with u at q)
  std::optional<std::tuple<Point, std::size_t, Elem>> aqu;
  for (std::size_t i = 0; i < pts.size() && !aqu; ++i) {
    for (std::size_t q = 0; q < n && !aqu; ++q) {
      Point t = pts[i];
      for (Elem uu = 0; uu < kappa && !aqu; ++uu) {
        t[q] = uu;
        if (f.eval_unchecked(t) != val[i]) {
          aqu = std::tuple{pts[i], q, uu};
        }
      }
    }
  }
  if (!aqu) {
    throw PreconditionError("arity reduction: f is constant");
  }
  auto [a, q, u] = *aqu;
  Point at       = a;
  at[q]          = u;
  Elem al1 = f.eval_unchecked(a), al2 = f.eval_unchecked(at);

  // w, z with w_q = z_q and f(w) != f(z); prefer f(w) outside {al1, al2}
  std::optional<std::pair<std::size_t, std::size_t>> wz1, wz2;
  for (std::size_t i = 0; i < pts.size() && !wz1; ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (pts[i][q] != pts[j][q] || val[i] == val[j]) {
        continue;
      }
      if (val[i] != al1 && val[i] != al2) {
        wz1 = std::pair{i, j};
        break;
      }
      if (!wz2) {
        wz2 = std::pair{i, j};
      }
    }
  }
  if (!wz1 && !wz2) {
    throw PreconditionError("arity reduction: f depends on one variable only");
  }
  // preimages y_v of every value
  std::vector<std::optional<Point>> pre(kappa);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!pre[val[i]]) {
      pre[val[i]] = pts[i];
    }
  }
  for (std::size_t v = 0; v < kappa; ++v) {
    if (!pre[v]) {
      throw PreconditionError("arity reduction: f is not onto");
    }
  }

  std::vector<std::vector<Elem>> h(n, std::vector<Elem>(kappa, 0));
  bool                           first_case = wz1.has_value();
  Point                          w, z;
  if (first_case) {
    w = pts[wz1->first], z = pts[wz1->second];
  } else {
    w = pts[wz2->first], z = pts[wz2->second];
  }
  Elem al3 = f.eval_unchecked(w);
  if (!first_case) {
    // any third value serves as the label for (w, z) in this case
    for (Elem v = 0; v < kappa; ++v) {
      if (v != al1 && v != al2) {
        al3 = v;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (Elem v = 0; v < kappa; ++v) {
      h[i][v] = (*pre[v])[i];
    }
    if (first_case) {
      h[i][al1] = a[i];
      h[i][al2] = i == q ? u : z[i];
      h[i][al3] = i == q ? z[q] : w[i];
    } else if (i != q) {
      h[i][al1] = a[i];
      h[i][al2] = w[i];
      h[i][al3] = z[i];
    }
  }
  Expr              x = kit.var(2, 0), y = kit.var(2, 1);
  std::vector<Term> args;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == q) {
      args.push_back(first_case ? kit.unary(h[i], y).term : y.term);
    } else {
      args.push_back(kit.unary(h[i], x).term);
    }
  }
  std::vector<Elem> table(kappa * kappa);
  Point             arg(n);
  for (Elem xv = 0; xv < kappa; ++xv) {
    for (Elem yv = 0; yv < kappa; ++yv) {
      for (std::size_t i = 0; i < n; ++i) {
        arg[i] = i == q ? (first_case ? h[i][yv] : yv) : h[i][xv];
      }
      table[xv * kappa + yv] = f.eval_unchecked(arg);
    }
  }
  Expr g{Operation::from_table(kappa, 2, std::move(table)),
         Term::apply(fname, std::move(args))};
  if (!is_irreducible(g.op) || range_of(g.op).size() != kappa) {
    throw InternalError("arity reduction produced a reducible or non-onto function");
  }
  return g;
}

}  // namespace detail

/// Binary max under 0 < 1 < ... < kappa-1, built from one irreducible onto
/// operation f (named `fname`) and unary functions (named by unary_name).
inline Construction slupecki_construct_max(Operation const& f, std::string const& fname = "f") {
  std::size_t kappa = f.domain();
  if (kappa < 3) {
    throw PreconditionError("Slupecki construction needs at least three elements");
  }
  if (f.arity() < 2) {
    throw PreconditionError("f is reducible");
  }
  detail::UnaryKit kit(kappa);
  detail::Expr     g2;
  if (f.arity() == 2) {
    Operation d = f.materialized();
    if (!is_irreducible(d)) {
      throw PreconditionError("f is reducible");
    }
    if (range_of(d).size() != kappa) {
      throw PreconditionError("f is not onto");
    }
    g2 = {d, Term::apply(fname, projections(2))};
  } else {
    if (f.can_materialize()) {
      Operation d = f.materialized();
      if (!is_irreducible(d)) {
        throw PreconditionError("f is reducible");
      }
      if (range_of(d).size() != kappa) {
        throw PreconditionError("f is not onto");
      }
    }
    g2 = detail::reduce_arity(kit, f, fname);
  }
  detail::Expr out = detail::is_max_below(g2.op, kappa) ? g2
                                                        : detail::max_below(kit, g2, kappa);
  if (!(out.op == detail::chain_max(kappa))) {
    throw InternalError("Slupecki construction did not produce the maximum");
  }
  Basis basis                  = std::move(kit.basis());
  basis.insert_or_assign(fname, f);
  return {out.term, std::move(basis)};
}

/// Term for `target` over a binary operation named `maxname` (assumed to be
/// the chain maximum) and unary functions.
inline Construction complete_from_max(Operation const& target,
                                      std::string const& maxname = "max") {
  std::size_t kappa = target.domain();
  std::size_t k     = target.arity();
  if (k == 0) {
    throw InputError("complete_from_max: target must have arity at least 1");
  }
  Operation        t = target.materialized();
  detail::UnaryKit kit(kappa);
  Basis            basis;
  Operation        mx = detail::chain_max(kappa);
  auto             vars = projections(k);
  Term             term;
  std::size_t      ess = 0, which = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (depends_on(t, i)) {
      ++ess, which = i;
    }
  }
  if (ess <= 1) {
    // essentially unary (or constant): u(x_which)
    std::vector<Elem> u(kappa);
    Index             stride = ipow(kappa, k - 1 - which);
    for (Elem v = 0; v < kappa; ++v) {
      u[v] = t.table()[v * stride];
    }
    term = Term::apply(kit.name(u), {vars[which]});
  } else if (k == 2 && t == mx) {
    term = Term::apply(maxname, vars);
  } else {
    Elem top = static_cast<Elem>(kappa - 1);
    auto max_of = [&](Term const& l, Term const& r) { return Term::apply(maxname, {l, r}); };
    std::optional<Term> acc;
    Point               a(k, 0);
    for (Index idx = 0; idx < t.table().size(); ++idx, next_point(kappa, a)) {
      Elem v = t.table()[idx];
      if (v == 0) {
        continue;
      }
      // min_i delta_{a_i}(x_i) = N(max_i N delta_{a_i}(x_i))
      std::optional<Term> inner;
      for (std::size_t i = 0; i < k; ++i) {
        std::vector<Elem> nd(kappa, top);
        nd[a[i]] = 0;
        Term leaf = Term::apply(kit.name(nd), {vars[i]});
        inner     = inner ? max_of(*inner, leaf) : leaf;
      }
      // u_a(N(s)): N(s) = top iff s = 0
      std::vector<Elem> ua(kappa, 0);
      ua[0] = v;
      Term piece = Term::apply(kit.name(ua), {*inner});
      acc        = acc ? max_of(*acc, piece) : piece;
    }
    term = *acc;
  }
  basis = std::move(kit.basis());
  basis.insert_or_assign(maxname, mx);
  if (!(materialize(term, basis, kappa) == t)) {
    throw InternalError("complete_from_max: term does not reproduce the target");
  }
  return {term, std::move(basis)};
}

}  // namespace cloneforge
