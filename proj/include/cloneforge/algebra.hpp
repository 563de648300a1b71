#pragma once

// Congruences, primality and related probes for finite algebras.

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>

#include "parallel.hpp"
#include "preserve.hpp"
#include "rosenberg.hpp"
#include "serialize.hpp"

namespace cloneforge {

inline constexpr std::size_t kCongruenceCarrierLimit = 64;
inline constexpr std::size_t kCongruenceCountLimit   = 200'000;
inline constexpr std::size_t kPrimalityDomainLimit   = 4;
inline constexpr std::size_t kSpectrumPointLimit     = 16;

/// An equivalence on {0..κ-1} stored as block ids, numbered in order of
/// first appearance so equal partitions compare equal.
struct Congruence {
  std::vector<Elem> block;

  static Congruence from_labels(std::span<std::size_t const> labels) {
    Congruence               c;
    std::vector<std::size_t> seen;
    c.block.reserve(labels.size());
    for (auto l : labels) {
      auto it = std::find(seen.begin(), seen.end(), l);
      if (it == seen.end()) {
        seen.push_back(l);
        it = seen.end() - 1;
      }
      c.block.push_back(static_cast<Elem>(it - seen.begin()));
    }
    return c;
  }

  static Congruence diagonal(std::size_t kappa) {
    Congruence c;
    for (std::size_t a = 0; a < kappa; ++a) {
      c.block.push_back(static_cast<Elem>(a));
    }
    return c;
  }

  static Congruence total(std::size_t kappa) { return {std::vector<Elem>(kappa, 0)}; }

  std::size_t size() const noexcept { return block.size(); }

  std::size_t classes() const {
    return block.empty() ? 0 : *std::max_element(block.begin(), block.end()) + 1u;
  }

  bool related(Elem a, Elem b) const { return block.at(a) == block.at(b); }

  /// Every pair related here is related in `o`.
  bool refines(Congruence const& o) const {
    for (std::size_t a = 0; a < size(); ++a) {
      for (std::size_t b = a + 1; b < size(); ++b) {
        if (block[a] == block[b] && o.block[a] != o.block[b]) {
          return false;
        }
      }
    }
    return true;
  }

  std::vector<std::vector<Elem>> blocks() const {
    std::vector<std::vector<Elem>> out(classes());
    for (std::size_t a = 0; a < size(); ++a) {
      out[block[a]].push_back(static_cast<Elem>(a));
    }
    return out;
  }

  friend bool operator==(Congruence const&, Congruence const&) = default;
  friend auto operator<=>(Congruence const&, Congruence const&) = default;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x          = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return false;
    }
    parent_[std::max(a, b)] = std::min(a, b);
    return true;
  }

  Congruence freeze() {
    std::vector<std::size_t> roots(parent_.size());
    for (std::size_t x = 0; x < parent_.size(); ++x) {
      roots[x] = find(x);
    }
    return Congruence::from_labels(roots);
  }

 private:
  std::vector<std::size_t> parent_;
};

inline void require_carrier(Algebra const& alg, std::size_t limit, char const* what) {
  if (alg.kappa == 0) {
    throw InputError(std::string(what) + ": empty carrier");
  }
  if (alg.kappa > limit) {
    throw BudgetExceeded(std::string(what) + ": carrier of size " + std::to_string(alg.kappa)
                         + " exceeds the limit " + std::to_string(limit));
  }
}

/// Least congruence containing the seed pairs.  Each merged pair is pushed
/// through every basic translation; images that are not yet related are
/// merged and queued in turn.
inline Congruence generate_congruence(Algebra const&                               alg,
                                      std::vector<std::pair<Elem, Elem>> const& seeds) {
  UnionFind                          uf(alg.kappa);
  std::vector<std::pair<Elem, Elem>> queue;
  for (auto [a, b] : seeds) {
    if (uf.unite(a, b)) {
      queue.emplace_back(a, b);
    }
  }
  Point u, v;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    auto [a, b] = queue[q];
    for (auto const& [name, op] : alg.ops) {
      std::size_t n = op.arity();
      if (n == 0) {
        continue;
      }
      Index rest = ipow(alg.kappa, n - 1);
      u.resize(n);
      v.resize(n);
      for (std::size_t pos = 0; pos < n; ++pos) {
        for (Index r = 0; r < rest; ++r) {
          Index x = r;
          for (std::size_t i = n; i-- > 0;) {
            if (i == pos) {
              continue;
            }
            u[i] = v[i] = static_cast<Elem>(x % alg.kappa);
            x /= alg.kappa;
          }
          u[pos]     = a;
          v[pos]     = b;
          Elem fu = op.eval_unchecked(u);
          Elem fv = op.eval_unchecked(v);
          if (uf.unite(fu, fv)) {
            queue.emplace_back(fu, fv);
          }
        }
      }
    }
  }
  return uf.freeze();
}

inline Congruence join(Congruence const& x, Congruence const& y) {
  UnionFind uf(x.size());
  for (auto const* c : {&x, &y}) {
    std::vector<std::size_t> first(c->classes(), SIZE_MAX);
    for (std::size_t a = 0; a < c->size(); ++a) {
      auto& f = first[c->block[a]];
      if (f == SIZE_MAX) {
        f = a;
      } else {
        uf.unite(f, a);
      }
    }
  }
  return uf.freeze();
}

/// Relational product θ∘ψ as a κ×κ boolean matrix.
inline std::vector<bool> relational_product(Congruence const& th, Congruence const& ps) {
  std::size_t       k = th.size();
  std::vector<bool> out(k * k, false);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (th.block[a] != th.block[b]) {
        continue;
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (ps.block[b] == ps.block[c]) {
          out[a * k + c] = true;
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// θ(a, b): the least congruence relating a and b.
inline Congruence principal_congruence(Algebra const& alg, Elem a, Elem b) {
  detail::require_carrier(alg, kCongruenceCarrierLimit, "principal_congruence");
  if (a >= alg.kappa || b >= alg.kappa) {
    throw InputError("principal_congruence: element outside the carrier");
  }
  return detail::generate_congruence(alg, {{a, b}});
}

/// True when every basic operation maps c-related tuples to c-related values.
inline bool is_compatible(Algebra const& alg, Congruence const& c) {
  if (c.size() != alg.kappa) {
    throw InputError("is_compatible: partition size differs from the carrier");
  }
  for (auto const& [name, op] : alg.ops) {
    std::size_t n = op.arity();
    if (n == 0) {
      continue;
    }
    Point u(n), v(n);
    Index rest = ipow(alg.kappa, n - 1);
    for (Elem a = 0; a < alg.kappa; ++a) {
      for (Elem b = a + 1; b < alg.kappa; ++b) {
        if (!c.related(a, b)) {
          continue;
        }
        for (std::size_t pos = 0; pos < n; ++pos) {
          for (Index r = 0; r < rest; ++r) {
            Index x = r;
            for (std::size_t i = n; i-- > 0;) {
              if (i == pos) {
                continue;
              }
              u[i] = v[i] = static_cast<Elem>(x % alg.kappa);
              x /= alg.kappa;
            }
            u[pos] = a;
            v[pos] = b;
            if (!c.related(op.eval_unchecked(u), op.eval_unchecked(v))) {
              return false;
            }
          }
        }
      }
    }
  }
  return true;
}

/// All congruences, from the diagonal up: principal congruences closed under
/// join.  Sorted by decreasing number of classes, then by block ids.
inline std::vector<Congruence> congruences(Algebra const& alg,
                                           std::size_t    limit = kCongruenceCountLimit) {
  detail::require_carrier(alg, kCongruenceCarrierLimit, "congruences");
  std::set<Congruence>    seen;
  std::vector<Congruence> list;
  auto add = [&](Congruence c) {
    if (seen.insert(c).second) {
      if (list.size() >= limit) {
        throw BudgetExceeded("congruences: more than " + std::to_string(limit)
                             + " congruences");
      }
      list.push_back(std::move(c));
    }
  };
  add(Congruence::diagonal(alg.kappa));
  for (Elem a = 0; a < alg.kappa; ++a) {
    for (Elem b = a + 1; b < alg.kappa; ++b) {
      add(detail::generate_congruence(alg, {{a, b}}));
    }
  }
  std::size_t principals = list.size();
  for (std::size_t i = 1; i < list.size(); ++i) {
    for (std::size_t j = 1; j < principals; ++j) {
      add(detail::join(list[i], list[j]));
    }
  }
  std::sort(list.begin(), list.end(), [](Congruence const& x, Congruence const& y) {
    auto cx = x.classes(), cy = y.classes();
    return cx != cy ? cx > cy : x < y;
  });
  return list;
}

/// Exactly two congruences.  The one-element algebra is not simple.
inline bool is_simple(Algebra const& alg) {
  detail::require_carrier(alg, kCongruenceCarrierLimit, "is_simple");
  if (alg.kappa < 2) {
    return false;
  }
  for (Elem a = 0; a < alg.kappa; ++a) {
    for (Elem b = a + 1; b < alg.kappa; ++b) {
      if (detail::generate_congruence(alg, {{a, b}}).classes() != 1) {
        return false;
      }
    }
  }
  return true;
}

struct PermutabilityReport {
  bool                                           permutable = true;
  std::optional<std::pair<Congruence, Congruence>> witness;  // θ∘ψ ≠ ψ∘θ
};

inline PermutabilityReport congruence_permutability(Algebra const& alg) {
  auto                cons = congruences(alg);
  PermutabilityReport rep;
  for (std::size_t i = 0; i < cons.size(); ++i) {
    for (std::size_t j = i + 1; j < cons.size(); ++j) {
      if (detail::relational_product(cons[i], cons[j])
          != detail::relational_product(cons[j], cons[i])) {
        rep.permutable = false;
        rep.witness.emplace(cons[i], cons[j]);
        return rep;
      }
    }
  }
  return rep;
}

inline bool congruence_permutable(Algebra const& alg) {
  return congruence_permutability(alg).permutable;
}

////////////////////////////////////////////////////////////////////////////
// Primality
////////////////////////////////////////////////////////////////////////////

struct PrimalityReport {
  bool                       primal = false;
  std::size_t                scanned = 0;
  std::optional<RblRelation> preserved;
};

inline bool preserved_by_all(Algebra const& alg, Relation const& rho) {
  return std::all_of(alg.ops.begin(), alg.ops.end(),
                     [&](auto const& named) { return preserves(named.second, rho); });
}

/// Primal iff no relation of the five Rosenberg classes (plus the central
/// and regular families) is preserved by every basic operation.
inline PrimalityReport is_primal_rosenberg(Algebra const& alg) {
  detail::require_carrier(alg, kPrimalityDomainLimit, "is_primal_rosenberg");
  PrimalityReport rep;
  if (alg.kappa < 2) {
    throw PreconditionError("is_primal_rosenberg: carrier needs at least two elements");
  }
  auto              rels = enumerate_all_rbl(alg.kappa);
  std::vector<char> hit(rels.size(), 0);
  parallel_for(rels.size(), [&](std::size_t i) {
    hit[i] = preserved_by_all(alg, rels[i].relation) ? 1 : 0;
  });
  rep.scanned = rels.size();
  auto first  = std::find(hit.begin(), hit.end(), 1);
  if (first == hit.end()) {
    rep.primal = true;
  } else {
    rep.preserved = rels[static_cast<std::size_t>(first - hit.begin())];
  }
  return rep;
}

////////////////////////////////////////////////////////////////////////////
// Spectrum and skew congruences
////////////////////////////////////////////////////////////////////////////

struct SpectrumReport {
  bool                    ok = true;
  std::size_t             subuniverses = 0;  // distinct nonempty ones, all powers
  std::optional<Relation> offending;
};

/// Closes every nonempty subset of A^m (m ≤ m_max) and checks that each
/// subuniverse has size κ^j.
inline SpectrumReport almost_minimal_spectrum_check(Algebra const& alg, std::size_t m_max) {
  detail::require_carrier(alg, kCongruenceCarrierLimit, "almost_minimal_spectrum_check");
  SpectrumReport rep;
  for (std::size_t m = 1; m <= m_max; ++m) {
    auto pts = checked_pow(alg.kappa, m);
    if (!pts || *pts > kSpectrumPointLimit) {
      throw BudgetExceeded("almost_minimal_spectrum_check: " + std::to_string(alg.kappa) + "^"
                           + std::to_string(m) + " points exceed the seed limit");
    }
    std::set<std::vector<Index>> seen;
    Index                        n = *pts;
    for (Index mask = 1; mask < (Index{1} << n); ++mask) {
      std::vector<Point> seed;
      for (Index i = 0; i < n; ++i) {
        if (mask >> i & 1) {
          seed.push_back(decode_point(alg.kappa, m, i));
        }
      }
      Relation           sub = generated_subuniverse(alg, m, seed);
      if (!seen.insert(sub.indices()).second) {
        continue;
      }
      ++rep.subuniverses;
      Index size = sub.size(), p = 1;
      while (p < size) {
        p *= alg.kappa;
      }
      if (p != size) {
        rep.ok = false;
        rep.offending.emplace(std::move(sub));
        return rep;
      }
    }
  }
  return rep;
}

/// A² with componentwise operations; the pair (a,b) is element a·κ+b.
inline Algebra square(Algebra const& alg) {
  std::size_t                                    k = alg.kappa;
  std::vector<std::pair<std::string, Operation>> ops;
  for (auto const& [name, op] : alg.ops) {
    std::size_t n = op.arity();
    ops.emplace_back(name, Operation::tabulate(k * k, n, [&](std::span<Elem const> x) {
      Point l(n), r(n);
      for (std::size_t i = 0; i < n; ++i) {
        l[i] = static_cast<Elem>(x[i] / k);
        r[i] = static_cast<Elem>(x[i] % k);
      }
      return static_cast<Elem>(op.eval_unchecked(l) * k + op.eval_unchecked(r));
    }));
  }
  return Algebra(k * k, std::move(ops));
}

/// θ₁ × θ₂ on A², in the element coding of square().
inline Congruence product_congruence(Congruence const& a, Congruence const& b) {
  std::size_t              k = a.size();
  std::vector<std::size_t> labels(k * k);
  for (std::size_t x = 0; x < k; ++x) {
    for (std::size_t y = 0; y < k; ++y) {
      labels[x * k + y] = a.block[x] * k + b.block[y];
    }
  }
  return Congruence::from_labels(labels);
}

struct SkewReport {
  std::size_t               square_congruences = 0;
  std::size_t               factor_congruences = 0;
  std::optional<Congruence> skew;  // on A², first in congruences() order
};

inline SkewReport skew_congruence_check(Algebra const& alg) {
  detail::require_carrier(alg, 4, "skew_congruence_check");
  auto                 con = congruences(alg);
  std::set<Congruence> factors;
  for (auto const& a : con) {
    for (auto const& b : con) {
      factors.insert(product_congruence(a, b));
    }
  }
  SkewReport rep;
  auto       con2          = congruences(square(alg));
  rep.square_congruences   = con2.size();
  rep.factor_congruences   = factors.size();
  for (auto const& c : con2) {
    if (!factors.contains(c)) {
      rep.skew = c;
      break;
    }
  }
  return rep;
}

////////////////////////////////////////////////////////////////////////////
// Automorphisms and subalgebras
////////////////////////////////////////////////////////////////////////////

/// Permutations σ with σ(f(x)) = f(σx) for every basic f, in lexicographic
/// order of their tables (identity first).
inline std::vector<std::vector<Elem>> automorphisms(Algebra const& alg) {
  detail::require_carrier(alg, 8, "automorphisms");
  std::vector<Elem> sigma(alg.kappa);
  std::iota(sigma.begin(), sigma.end(), Elem{0});
  std::vector<std::vector<Elem>> out;
  do {
    bool ok = true;
    for (auto const& [name, op] : alg.ops) {
      Operation d = op.materialized();
      std::size_t n = d.arity();
      Point       y(n);
      for (Index i = 0, e = ipow(alg.kappa, n); ok && i < e; ++i) {
        Point x = decode_point(alg.kappa, n, i);
        for (std::size_t j = 0; j < n; ++j) {
          y[j] = sigma[x[j]];
        }
        ok = sigma[d.eval_unchecked(x)] == d.eval_unchecked(y);
      }
      if (!ok) {
        break;
      }
    }
    if (ok) {
      out.push_back(sigma);
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return out;
}

/// Nonempty proper subsets closed under every basic operation, ordered by
/// their bitmask.
inline std::vector<std::vector<Elem>> proper_subalgebras(Algebra const& alg) {
  detail::require_carrier(alg, 16, "proper_subalgebras");
  std::vector<std::vector<Elem>> out;
  Index                          full = (Index{1} << alg.kappa) - 1;
  for (Index mask = 1; mask < full; ++mask) {
    std::vector<Point> seed;
    for (Elem a = 0; a < alg.kappa; ++a) {
      if (mask >> a & 1) {
        seed.push_back({a});
      }
    }
    Relation sub = generated_subuniverse(alg, 1, seed);
    if (sub.size() == seed.size()) {
      std::vector<Elem> s;
      for (auto const& p : seed) {
        s.push_back(p[0]);
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////
// JSON
////////////////////////////////////////////////////////////////////////////

inline json to_json(Congruence const& c) {
  json j;
  j["blocks"] = c.blocks();
  return j;
}

inline json to_json(PrimalityReport const& r) {
  json j;
  j["primal"]  = r.primal;
  j["scanned"] = r.scanned;
  if (r.preserved) {
    j["certificate"] = to_json(*r.preserved);
  } else {
    j["certificate"] = "no RBL relation preserved";
  }
  return j;
}

inline json to_json(SpectrumReport const& r) {
  json j;
  j["almost_minimal"] = r.ok;
  j["subuniverses"]   = r.subuniverses;
  j["offending"]      = r.offending ? to_json(*r.offending) : json(nullptr);
  return j;
}

inline json to_json(SkewReport const& r) {
  json j;
  j["square_congruences"] = r.square_congruences;
  j["factor_congruences"] = r.factor_congruences;
  j["skew"]               = r.skew ? to_json(*r.skew) : json(nullptr);
  return j;
}

}  // namespace cloneforge
