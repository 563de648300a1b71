#pragma once

// Explicit terms over Pol(rho) plus one violator g that realize a given
// target, one construction per relation class, each checked pointwise.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "clone.hpp"
#include "gf.hpp"
#include "preserve.hpp"
#include "rosenberg.hpp"

namespace cloneforge {

namespace detail {

// One coordinate of ext: the unary g(f^1(x_coord), ..., f^n(x_coord)).
struct ExtKey {
  std::size_t                    coord = 0;
  std::vector<std::vector<Elem>> parts;
  std::vector<Elem>              table;
};

// ext(x) = (x, f_key(x_coord) for each key) and the terms that build it.
class Extension {
 public:
  Extension(std::size_t kappa, std::size_t k, Operation g) : kappa_(kappa), k_(k), g_(std::move(g)) {}

  void add(std::size_t coord, std::vector<std::vector<Elem>> parts) {
    ExtKey key{coord, std::move(parts), std::vector<Elem>(kappa_)};
    Point  col(key.parts.size());
    for (std::size_t x = 0; x < kappa_; ++x) {
      for (std::size_t j = 0; j < key.parts.size(); ++j) {
        col[j] = key.parts[j][x];
      }
      key.table[x] = g_.eval_unchecked(col);
    }
    keys_.push_back(std::move(key));
  }

  std::size_t arity() const { return k_ + keys_.size(); }
  std::size_t k() const { return k_; }
  std::vector<ExtKey> const& keys() const { return keys_; }

  Point ext(std::span<Elem const> x) const {
    Point y(x.begin(), x.end());
    for (auto const& key : keys_) {
      y.push_back(key.table[x[key.coord]]);
    }
    return y;
  }

  /// Every ext point, indexed by the encoding of x.
  std::vector<Point> all() const {
    std::vector<Point> out;
    Point              x(k_, 0);
    do {
      out.push_back(ext(x));
    } while (next_point(kappa_, x));
    return out;
  }

  /// H(x_1..x_k, g(f^1(x_i)..f^n(x_i))...) with the unary parts added to pool.
  Term term(std::string const& hname, Basis& pool) const {
    auto              vars = projections(k_);
    std::vector<Term> args(vars);
    for (auto const& key : keys_) {
      std::vector<Term> inner;
      for (auto const& part : key.parts) {
        auto name = unary_name(part);
        pool.try_emplace(name, Operation::unary(kappa_, part));
        inner.push_back(Term::apply(name, {vars[key.coord]}));
      }
      args.push_back(Term::apply(kViolatorName, std::move(inner)));
    }
    return Term::apply(hname, std::move(args));
  }

 private:
  std::size_t         kappa_, k_;
  Operation           g_;
  std::vector<ExtKey> keys_;
};

inline std::vector<std::pair<Point, Point>> violation_pairs(Relation const& rho,
                                                            Operation const& g) {
  auto rows = first_violation(g, rho);
  if (!rows) {
    throw PreconditionError("not a violator: g preserves the relation");
  }
  std::vector<std::pair<Point, Point>> out;
  for (auto const& r : *rows) {
    out.push_back({Point{r[0]}, Point{r[1]}});
  }
  return out;
}

inline WitnessCertificate extension_certificate(std::string const& route, Relation const& rho,
                                                Operation const& g, Operation const& target,
                                                Extension const& ext, Operation const& H,
                                                PreservationCache* cache) {
  Basis pool;
  pool.emplace("H", H);
  Term term = ext.term("H", pool);
  return finish(route, rho, g, target, term, pool, cache);
}

}  // namespace detail

////////////////////////////////////////////////////////////////////////////
// Bounded orders
////////////////////////////////////////////////////////////////////////////

/// The range of ext is an antichain; H is the target there, the greatest
/// element above some range point and the least element elsewhere.
inline WitnessCertificate witness_order(RblRelation const& r, Operation const& g,
                                        Operation const& target,
                                        PreservationCache* cache = nullptr) {
  auto const& rho = r.relation;
  detail::require_violator(rho, g);
  if (auto c = detail::pol_only("order", rho, g, target, cache)) {
    return *c;
  }
  std::size_t kappa = rho.domain(), k = target.arity();
  auto        leq   = [rel = rho](Elem a, Elem b) { return rel.contains(std::array<Elem, 2>{a, b}); };
  auto        rows  = detail::violation_pairs(rho, g);
  detail::Extension ext(kappa, k, g);
  for (std::size_t i = 0; i < k; ++i) {
    for (Elem c = 0; c < kappa; ++c) {
      for (Elem d = 0; d < kappa; ++d) {
        if (c == d || !leq(c, d)) {
          continue;
        }
        std::vector<std::vector<Elem>> parts;
        for (auto const& [a, b] : rows) {
          std::vector<Elem> f(kappa);
          for (Elem s = 0; s < kappa; ++s) {
            f[s] = leq(s, c) ? a[0] : b[0];
          }
          parts.push_back(std::move(f));
        }
        ext.add(i, std::move(parts));
      }
    }
  }
  auto pts  = ext.all();
  auto below = [leq](Point const& x, std::span<Elem const> y) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!leq(x[j], y[j])) {
        return false;
      }
    }
    return true;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i != j && below(pts[i], pts[j])) {
        throw InternalError("order witness: ext range is not an antichain");
      }
    }
  }
  Operation t = target.materialized();
  Elem      lo = r.tag.least, hi = r.tag.greatest;
  Operation H = Operation::tabulate(kappa, ext.arity(), [=](std::span<Elem const> y) {
    Index xi = encode_point(kappa, y.first(k));
    if (std::equal(pts[xi].begin(), pts[xi].end(), y.begin())) {
      return t.at(xi);
    }
    for (auto const& p : pts) {
      if (below(p, y)) {
        return hi;
      }
    }
    return lo;
  });
  return detail::extension_certificate("order", rho, g, target, ext, H, cache);
}

////////////////////////////////////////////////////////////////////////////
// Equivalence relations
////////////////////////////////////////////////////////////////////////////

/// H is the target on the classes of range points and 0 elsewhere.
inline WitnessCertificate witness_equivalence(RblRelation const& r, Operation const& g,
                                              Operation const& target,
                                              PreservationCache* cache = nullptr) {
  auto const& rho = r.relation;
  detail::require_violator(rho, g);
  if (auto c = detail::pol_only("equivalence", rho, g, target, cache)) {
    return *c;
  }
  std::size_t kappa = rho.domain(), k = target.arity();
  auto        eq    = [rel = rho](Elem a, Elem b) { return rel.contains(std::array<Elem, 2>{a, b}); };
  auto        rows  = detail::violation_pairs(rho, g);
  detail::Extension ext(kappa, k, g);
  for (std::size_t i = 0; i < k; ++i) {
    for (Elem c = 0; c < kappa; ++c) {
      for (Elem d = c + 1; d < kappa; ++d) {
        if (!eq(c, d)) {
          continue;
        }
        std::vector<std::vector<Elem>> parts;
        for (auto const& [a, b] : rows) {
          std::vector<Elem> f(kappa, b[0]);
          f[c] = a[0];
          parts.push_back(std::move(f));
        }
        ext.add(i, std::move(parts));
      }
    }
  }
  auto pts     = ext.all();
  auto related = [eq](Point const& x, std::span<Elem const> y) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (!eq(x[j], y[j])) {
        return false;
      }
    }
    return true;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (related(pts[i], pts[j])) {
        throw InternalError("equivalence witness: two range points are related");
      }
    }
  }
  Operation t = target.materialized();
  Operation H = Operation::tabulate(kappa, ext.arity(), [=](std::span<Elem const> y) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (related(pts[i], y)) {
        return t.at(i);
      }
    }
    return Elem{0};
  });
  return detail::extension_certificate("equivalence", rho, g, target, ext, H, cache);
}

////////////////////////////////////////////////////////////////////////////
// Prime permutations
////////////////////////////////////////////////////////////////////////////

/// H commutes with pi and is the target on the range of ext, which meets
/// each parallel class at most once.
inline WitnessCertificate witness_prime_perm(RblRelation const& r, Operation const& g,
                                             Operation const& target,
                                             PreservationCache* cache = nullptr) {
  auto const& rho = r.relation;
  detail::require_violator(rho, g);
  if (auto c = detail::pol_only("prime-permutation", rho, g, target, cache)) {
    return *c;
  }
  std::size_t kappa = rho.domain(), k = target.arity(), n = g.arity();
  auto        pi    = graph_permutation(rho).value();
  std::size_t p     = uniform_cycle_length(pi);
  // pw[t][x] = pi^t(x)
  std::vector<std::vector<Elem>> pw(p, std::vector<Elem>(kappa));
  for (Elem x = 0; x < kappa; ++x) {
    pw[0][x] = x;
  }
  for (std::size_t t = 1; t < p; ++t) {
    for (Elem x = 0; x < kappa; ++x) {
      pw[t][x] = pi[pw[t - 1][x]];
    }
  }
  auto shift = [pw, p](std::span<Elem const> v, std::size_t t) {
    Point o(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      o[i] = pw[t % p][v[i]];
    }
    return o;
  };
  // For each l, the first a with g(pi^l a) != pi^l g(a).
  std::vector<Point> tilde(p);
  for (std::size_t l = 1; l < p; ++l) {
    Point a(n, 0);
    bool  found = false;
    do {
      if (g(shift(a, l)) != pw[l][g(a)]) {
        found = true;
        break;
      }
    } while (next_point(kappa, a));
    if (!found) {
      throw InternalError("prime permutation witness: g commutes with a power of pi");
    }
    tilde[l] = a;
  }
  std::vector<Elem> rep(kappa);
  for (Elem x = 0; x < kappa; ++x) {
    Elem m = x;
    for (std::size_t t = 0; t < p; ++t) {
      m = std::min(m, pw[t][x]);
    }
    rep[x] = m;
  }
  detail::Extension ext(kappa, k, g);
  for (Elem c = 0; c < kappa; ++c) {
    for (std::size_t l = 1; l < p; ++l) {
      std::vector<std::vector<Elem>> parts;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<Elem> f(kappa);
        for (std::size_t t = 0; t < p; ++t) {
          for (Elem x = 0; x < kappa; ++x) {
            Elem base = rep[x] == rep[c] ? c : rep[x];
            if (pw[t][base] == x) {
              f[x] = pw[t][tilde[l][i]];
            }
          }
        }
        parts.push_back(std::move(f));
      }
      ext.add(0, std::move(parts));
    }
  }
  auto                pts = ext.all();
  std::map<Point, Index> where;
  for (Index i = 0; i < pts.size(); ++i) {
    where.emplace(pts[i], i);
  }
  for (auto const& y : pts) {
    for (std::size_t t = 1; t < p; ++t) {
      if (where.contains(shift(y, t))) {
        throw InternalError("prime permutation witness: two range points are parallel");
      }
    }
  }
  Operation t = target.materialized();
  Operation H = Operation::tabulate(kappa, ext.arity(), [=](std::span<Elem const> y) {
    Point       best(y.begin(), y.end());
    std::size_t best_t = 0;
    for (std::size_t s = 0; s < p; ++s) {
      Point z = shift(y, p - s);  // y = pi^s(z)
      if (auto it = where.find(z); it != where.end()) {
        return pw[s][t.at(it->second)];
      }
      if (z < best) {
        best   = z;
        best_t = s;
      }
    }
    return pw[best_t][0];
  });
  return detail::extension_certificate("prime-permutation", rho, g, target, ext, H, cache);
}

////////////////////////////////////////////////////////////////////////////
// Unary central relations (proper nonempty subsets)
////////////////////////////////////////////////////////////////////////////

/// No range point of ext lies in S^N, so H may send S^N to a fixed member of S.
inline WitnessCertificate witness_unary_central(RblRelation const& r, Operation const& g,
                                                Operation const& target,
                                                PreservationCache* cache = nullptr) {
  auto const& rho = r.relation;
  if (rho.arity() != 1) {
    throw PreconditionError("unary central witness needs a unary relation");
  }
  detail::require_violator(rho, g);
  if (auto c = detail::pol_only("unary-central", rho, g, target, cache)) {
    return *c;
  }
  std::size_t kappa = rho.domain(), k = target.arity();
  auto        rows  = first_violation(g, rho).value();
  std::vector<Elem> S;
  for (Elem x = 0; x < kappa; ++x) {
    if (rho.contains(std::array<Elem, 1>{x})) {
      S.push_back(x);
    }
  }
  detail::Extension ext(kappa, k, g);
  for (Elem c : S) {
    std::vector<std::vector<Elem>> parts;
    for (auto const& row : rows) {
      std::vector<Elem> f(kappa);
      for (Elem x = 0; x < kappa; ++x) {
        f[x] = x == c ? row[0] : x;
      }
      parts.push_back(std::move(f));
    }
    ext.add(0, std::move(parts));
  }
  auto pts = ext.all();
  auto inS = [rel = rho](Elem x) { return rel.contains(std::array<Elem, 1>{x}); };
  for (auto const& y : pts) {
    if (std::all_of(y.begin(), y.end(), inS)) {
      throw InternalError("unary central witness: a range point lies inside S");
    }
  }
  Operation t  = target.materialized();
  Elem      s0 = S.front();
  Operation H  = Operation::tabulate(kappa, ext.arity(), [=](std::span<Elem const> y) {
    Index xi = encode_point(kappa, y.first(k));
    if (std::equal(pts[xi].begin(), pts[xi].end(), y.begin())) {
      return t.at(xi);
    }
    return std::all_of(y.begin(), y.end(), inS) ? s0 : Elem{0};
  });
  return detail::extension_certificate("unary-central", rho, g, target, ext, H, cache);
}

////////////////////////////////////////////////////////////////////////////
// Totally reflexive, totally symmetric relations
////////////////////////////////////////////////////////////////////////////

/// A unary operation with its term (arity 1) and the operations it names.
struct UnaryViolator {
  Operation f;
  Term      term;
  Basis     basis;
};

/// Unary f in <Pol(rho) + g> violating rho, via a rainbow tuple of rho.
inline UnaryViolator reduce_to_unary(Relation const& rho, Operation const& g) {
  std::size_t kappa = rho.domain();
  Basis       basis{{kViolatorName, g}};
  if (g.arity() == 1) {
    if (preserves(g, rho)) {
      throw PreconditionError("not a violator: g preserves the relation");
    }
    return {g.materialized(), Term::apply(kViolatorName, projections(1)), basis};
  }
  std::optional<Point> rainbow;
  for (auto const& t : rho.tuples()) {
    if (!has_repeat(t)) {
      rainbow = t;
      break;
    }
  }
  if (!rainbow) {
    throw PreconditionError("rainbow tuple required: the relation equals iota");
  }
  auto rows = first_violation(g, rho);
  if (!rows) {
    throw PreconditionError("not a violator: g preserves the relation");
  }
  std::vector<Term>              args;
  std::vector<std::vector<Elem>> fs;
  Term                           x = Term::projection(1, 0);
  for (auto const& row : *rows) {
    std::vector<Elem> fi(kappa, row[0]);
    for (std::size_t j = 0; j < rainbow->size(); ++j) {
      fi[(*rainbow)[j]] = row[j];
    }
    auto name = unary_name(fi);
    basis.try_emplace(name, Operation::unary(kappa, fi));
    args.push_back(Term::apply(name, {x}));
    fs.push_back(std::move(fi));
  }
  std::vector<Elem> f(kappa);
  Point             col(fs.size());
  for (Elem v = 0; v < kappa; ++v) {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      col[i] = fs[i][v];
    }
    f[v] = g.eval_unchecked(col);
  }
  Operation fop = Operation::unary(kappa, f);
  if (preserves(fop, rho)) {
    throw InternalError("reduce_to_unary: the unary result preserves the relation");
  }
  return {fop, Term::apply(kViolatorName, std::move(args)), basis};
}

/// D = {f(a_1), ..., f(a_h)} outside rho, and terms for D-valued unaries.
class DValuedUnaries {
 public:
  DValuedUnaries(Relation const& rho, UnaryViolator uv) : uv_(std::move(uv)) {
    std::size_t h = rho.arity();
    Point       img(h);
    for (auto const& t : rho.tuples()) {
      for (std::size_t i = 0; i < h; ++i) {
        img[i] = uv_.f.at(t[i]);
      }
      if (!rho.contains(img)) {
        a_.assign(t.begin(), t.end());
        d_.assign(img.begin(), img.end());
        return;
      }
    }
    throw PreconditionError("not a violator: f preserves the relation");
  }

  std::vector<Elem> const& a() const { return a_; }
  std::vector<Elem> const& d() const { return d_; }
  UnaryViolator const&     violator() const { return uv_; }

  /// Term (arity 1) for u = f o l; the operations it names go into pool.
  Term make(std::vector<Elem> const& u, Basis& pool) const {
    std::size_t       kappa = u.size();
    std::vector<Elem> l(kappa);
    for (std::size_t x = 0; x < kappa; ++x) {
      auto it = std::find(d_.begin(), d_.end(), u[x]);
      if (it == d_.end()) {
        throw PreconditionError("requested function takes a value outside D");
      }
      l[x] = a_[it - d_.begin()];
    }
    auto name = unary_name(l);
    pool.try_emplace(name, Operation::unary(kappa, l));
    for (auto const& [n, op] : uv_.basis) {
      pool.try_emplace(n, op);
    }
    return compose(uv_.term, {Term::apply(name, projections(1))});
  }

 private:
  UnaryViolator     uv_;
  std::vector<Elem> a_, d_;
};

inline DValuedUnaries d_valued_unaries(Relation const& rho, UnaryViolator uv) {
  return DValuedUnaries(rho, std::move(uv));
}

/// An operation in Pol(rho) together with, for each value v, a point of D^n
/// on which it takes v.
struct OntoOperation {
  Operation          q;
  std::vector<Point> preimage;
};

/// q(b_i) = i on the points b_i = (d_{p_1(i)}, ..., d_{p_{h^kappa}(i)}) and u
/// elsewhere, where p_1, p_2, ... list the maps kappa -> h lexicographically.
inline OntoOperation central_q(std::size_t kappa, std::vector<Elem> const& d, Elem u) {
  std::size_t h = d.size();
  if (h < 2 || h > kappa || u >= kappa) {
    throw PreconditionError("central_q: inconsistent parameters");
  }
  auto n = checked_pow(h, kappa);
  if (!n || *n > 4096) {
    throw BudgetExceeded("central_q: arity h^kappa too large");
  }
  OntoOperation     out;
  Operation::Sparse spec;
  spec.fallback = u;
  for (std::size_t i = 0; i < kappa; ++i) {
    Point b(*n);
    Point p(kappa, 0);
    for (Index l = 0; l < *n; ++l, next_point(h, p)) {
      b[l] = d[p[i]];
    }
    spec.values[b] = static_cast<Elem>(i);
    out.preimage.push_back(std::move(b));
  }
  out.q = Operation::sparse(kappa, *n, std::move(spec));
  return out;
}

/// The auxiliary operations for an h-regularly generated relation.
struct RegularAux {
  std::vector<Elem> beta;  // beta_i in fibre i for i < h^lambda
  Operation         f;     // f(d_i) = beta_{i-1}
  Operation         r;     // onto, of arity lambda + n*
  OntoOperation     q;     // q = r(f(x_1), ..., f(x_n))
};

inline RegularAux regular_aux(std::size_t kappa, RblClass const& tag, std::vector<Elem> const& d) {
  std::size_t h = tag.h, lambda = tag.lambda;
  auto const& phi = tag.phi;
  std::size_t nu  = ipow(h, lambda);
  if (phi.size() != kappa || h < 3 || d.size() != h) {
    throw PreconditionError("regular_aux: malformed parameters");
  }
  if (h == kappa && lambda == 1) {
    throw PreconditionError("regular_aux: the relation is iota; use the Slupecki route");
  }
  RegularAux        out;
  std::vector<bool> used(kappa, false);
  for (std::size_t i = 0; i < nu; ++i) {
    auto it = std::find(phi.begin(), phi.end(), static_cast<Elem>(i));
    if (it == phi.end()) {
      throw PreconditionError("regular_aux: phi is not onto");
    }
    out.beta.push_back(static_cast<Elem>(it - phi.begin()));
    used[it - phi.begin()] = true;
  }
  for (Elem x = 0; x < kappa; ++x) {
    if (!used[x]) {
      out.beta.push_back(x);
    }
  }
  auto const& beta = out.beta;
  std::vector<std::vector<Elem>> fibre(nu);
  for (Elem x = 0; x < kappa; ++x) {
    fibre[phi[x]].push_back(x);
  }
  std::size_t nstar = 0;
  for (auto const& F : fibre) {
    nstar = std::max(nstar, F.size() - 1);
  }
  std::size_t           n = lambda + nstar;
  std::map<Point, Elem> special;
  for (std::size_t l = 0; l < nu; ++l) {
    for (std::size_t j = 0; j < fibre[l].size(); ++j) {
      Point pt;
      for (std::size_t s = 0; s < lambda; ++s) {
        pt.push_back(beta[regular_digit(l, h, s)]);
      }
      for (std::size_t s = 1; s <= nstar; ++s) {
        pt.push_back(s == j ? beta[1] : beta[0]);
      }
      special.emplace(std::move(pt), fibre[l][j]);
    }
  }
  out.r = Operation::tabulate(kappa, n, [=](std::span<Elem const> a) {
    if (auto it = special.find(Point(a.begin(), a.end())); it != special.end()) {
      return it->second;
    }
    std::size_t l = 0;
    for (std::size_t s = lambda; s-- > 0;) {
      l = l * h + regular_digit(phi[a[s]], h, 0);
    }
    return beta[l];
  });
  // f: read the digit on which phi(d_1), ..., phi(d_h) are pairwise distinct
  std::optional<std::size_t> digit;
  for (std::size_t j = 0; j < lambda && !digit; ++j) {
    std::set<Elem> seen;
    for (Elem x : d) {
      seen.insert(regular_digit(phi[x], h, j));
    }
    if (seen.size() == h) {
      digit = j;
    }
  }
  if (!digit) {
    throw PreconditionError("regular_aux: (d_1..d_h) lies in the relation");
  }
  std::vector<Elem> f(kappa);
  for (Elem x = 0; x < kappa; ++x) {
    Elem v = regular_digit(phi[x], h, *digit);
    for (std::size_t i = 0; i < h; ++i) {
      if (regular_digit(phi[d[i]], h, *digit) == v) {
        f[x] = beta[i];
      }
    }
  }
  out.f = Operation::unary(kappa, f);
  Operation r = out.r;
  out.q.q     = Operation::tabulate(kappa, n, [=](std::span<Elem const> x) {
    Point y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = f[x[i]];
    }
    return r.eval_unchecked(y);
  });
  // f(d_t) = beta_t, so beta_t in a special point is replaced by d_t
  out.q.preimage.resize(kappa);
  for (auto const& [pt, v] : special) {
    Point pre(pt.size());
    for (std::size_t s = 0; s < pt.size(); ++s) {
      auto t = std::find(beta.begin(), beta.begin() + h, pt[s]) - beta.begin();
      pre[s] = d[t];
    }
    out.q.preimage[v] = std::move(pre);
  }
  return out;
}

/// Terms for every unary function over Pol(rho) + g, for a totally reflexive,
/// totally symmetric rho other than iota.
class UnaryGenerator {
 public:
  UnaryGenerator(RblRelation const& r, Operation const& g)
      : dv_(r.relation, reduce_to_unary(r.relation, g)) {
    std::size_t kappa = r.relation.domain();
    if (r.tag.kind == RblKind::Central) {
      onto_ = central_q(kappa, dv_.d(), r.tag.center.front());
    } else if (r.tag.kind == RblKind::HRegular) {
      onto_ = regular_aux(kappa, r.tag, dv_.d()).q;
    } else {
      throw PreconditionError("unary generation needs a central or h-regular relation");
    }
    pool_.emplace("q", onto_.q);
  }

  DValuedUnaries const& d_valued() const { return dv_; }
  OntoOperation const&  onto() const { return onto_; }
  Basis const&          pool() const { return pool_; }

  /// u = q(g_1, ..., g_n) with D-valued g_j.
  Term make(std::vector<Elem> const& u) {
    std::size_t       n = onto_.q.arity();
    std::vector<Term> args;
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<Elem> gj(u.size());
      for (std::size_t x = 0; x < u.size(); ++x) {
        gj[x] = onto_.preimage.at(u[x])[j];
      }
      args.push_back(dv_.make(gj, pool_));
    }
    return Term::apply("q", std::move(args));
  }

 private:
  DValuedUnaries dv_;
  OntoOperation  onto_;
  Basis          pool_;
};

namespace detail {
inline bool is_iota_tag(RblClass const& tag, std::size_t kappa) {
  return tag.kind == RblKind::HRegular && tag.h == kappa && tag.lambda == 1;
}

// Replaces every unary basis name of `c` (other than those in keep) by a term.
template <typename Make>
Term expand_unaries(Construction const& c, std::set<std::string> const& keep, Make&& make) {
  std::map<std::string, Term> defs;
  for (auto const& name : c.term.op_names()) {
    if (keep.contains(name)) {
      continue;
    }
    auto const& op = c.basis.at(name);
    if (op.arity() == 1) {
      auto t = op.materialized().table();
      defs.emplace(name, make(std::vector<Elem>(t.begin(), t.end())));
    }
  }
  return substitute(c.term, defs);
}
}  // namespace detail

/// Central relations with h >= 2 and h-regularly generated relations: all
/// unary functions via an onto q in Pol(rho), then the Slupecki chain.
inline WitnessCertificate witness_trs(RblRelation const& r, Operation const& g,
                                      Operation const& target,
                                      PreservationCache* cache = nullptr) {
  auto const& rho   = r.relation;
  std::size_t kappa = rho.domain();
  detail::require_violator(rho, g);
  if (auto c = detail::pol_only("trs", rho, g, target, cache)) {
    return *c;
  }
  Construction cm = complete_from_max(target, "max");
  if (detail::is_iota_tag(r.tag, kappa)) {
    // every unary function preserves iota, and g is irreducible and onto
    Construction sl   = slupecki_construct_max(g, kViolatorName);
    Term         term = substitute(cm.term, {{"max", sl.term}});
    Basis        pool = sl.basis;
    for (auto const& [name, op] : cm.basis) {
      pool.try_emplace(name, op);
    }
    return detail::finish("iota", rho, g, target, term, pool, cache);
  }
  UnaryGenerator gen(r, g);
  Construction   sl = slupecki_construct_max(gen.onto().q, "q");
  Construction   joined;
  joined.term  = substitute(cm.term, {{"max", sl.term}});
  joined.basis = sl.basis;
  for (auto const& [name, op] : cm.basis) {
    joined.basis.try_emplace(name, op);
  }
  Term term = detail::expand_unaries(joined, {"q"}, [&](std::vector<Elem> const& u) {
    return gen.make(u);
  });
  return detail::finish(r.tag.kind == RblKind::Central ? "central" : "regular", rho, g, target,
                        term, gen.pool(), cache);
}

/// Dispatches on the relation's class.
inline WitnessCertificate witness(RblRelation const& r, Operation const& g,
                                  Operation const& target, PreservationCache* cache = nullptr) {
  if (g.domain() != r.relation.domain() || target.domain() != r.relation.domain()) {
    throw InputError("g, target and relation must share the domain");
  }
  switch (r.tag.kind) {
    case RblKind::BoundedOrder: return witness_order(r, g, target, cache);
    case RblKind::NontrivialEquivalence: return witness_equivalence(r, g, target, cache);
    case RblKind::PrimePermutation: return witness_prime_perm(r, g, target, cache);
    case RblKind::PrimeAffine: return witness_affine(r, g, target, cache);
    case RblKind::Central:
      return r.tag.h == 1 ? witness_unary_central(r, g, target, cache)
                          : witness_trs(r, g, target, cache);
    case RblKind::HRegular: return witness_trs(r, g, target, cache);
  }
  throw InternalError("unknown relation class");
}

inline WitnessCertificate witness(Relation const& rho, Operation const& g,
                                  Operation const& target, PreservationCache* cache = nullptr) {
  auto tags = classify(rho);
  if (tags.empty()) {
    throw PreconditionError("the relation is not in Rosenberg's list");
  }
  return witness(RblRelation{rho, tags.front()}, g, target, cache);
}

}  // namespace cloneforge
