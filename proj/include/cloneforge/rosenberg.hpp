#pragma once

// The six relation classes whose polymorphism clones are exactly the maximal
// clones: recognizers, enumerators and a census of the maximal clones.

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "parallel.hpp"
#include "preserve.hpp"
#include "serialize.hpp"

namespace cloneforge {

enum class RblKind {
  BoundedOrder,
  PrimePermutation,
  NontrivialEquivalence,
  PrimeAffine,
  Central,
  HRegular,
};

inline constexpr std::array<RblKind, 6> all_rbl_kinds{
    RblKind::BoundedOrder, RblKind::PrimePermutation, RblKind::NontrivialEquivalence,
    RblKind::PrimeAffine,  RblKind::Central,          RblKind::HRegular};

inline char const* to_string(RblKind k) {
  switch (k) {
    case RblKind::BoundedOrder: return "BoundedOrder";
    case RblKind::PrimePermutation: return "PrimePermutation";
    case RblKind::NontrivialEquivalence: return "NontrivialEquivalence";
    case RblKind::PrimeAffine: return "PrimeAffine";
    case RblKind::Central: return "Central";
    case RblKind::HRegular: return "HRegular";
  }
  return "?";
}

inline RblKind parse_rbl_kind(std::string const& s) {
  for (auto k : all_rbl_kinds) {
    if (s == to_string(k)) {
      return k;
    }
  }
  throw InputError("unknown relation class '" + s + "'");
}

/// A class tag with its parameters.  Unused fields stay at their defaults.
struct RblClass {
  RblKind           kind = RblKind::BoundedOrder;
  std::size_t       p      = 0;  // PrimePermutation, PrimeAffine
  std::size_t       m      = 0;  // PrimeAffine
  std::size_t       h      = 0;  // Central, HRegular
  std::size_t       lambda = 0;  // HRegular
  std::vector<Elem> center;      // Central
  std::vector<Elem> phi;         // HRegular: phi(a) as a number below h^lambda
  std::vector<Elem> perm;        // PrimePermutation
  Elem              least = 0, greatest = 0;  // BoundedOrder
  Elem              zero  = 0;                // PrimeAffine

  /// Same class with the same identifying parameters (p, m, h, lambda, center).
  bool same_class(RblClass const& o) const {
    return kind == o.kind && p == o.p && m == o.m && h == o.h && lambda == o.lambda
           && center == o.center;
  }
};

struct RblRelation {
  Relation relation;
  RblClass tag;
};

////////////////////////////////////////////////////////////////////////////
// Special relations
////////////////////////////////////////////////////////////////////////////

inline bool has_repeat(std::span<Elem const> t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = i + 1; j < t.size(); ++j) {
      if (t[i] == t[j]) {
        return true;
      }
    }
  }
  return false;
}

/// Tuples with some repeated coordinate.
inline Relation iota(std::size_t h, std::size_t kappa) {
  return Relation::from_predicate(kappa, h, [](std::span<Elem const> t) { return has_repeat(t); });
}

/// Digit r (0-based, least significant first) of x written in base h.
inline Elem regular_digit(std::size_t x, std::size_t h, std::size_t r) {
  for (std::size_t i = 0; i < r; ++i) {
    x /= h;
  }
  return static_cast<Elem>(x % h);
}

namespace detail {
inline bool omega_member(std::span<Elem const> t, std::size_t h, std::size_t lambda) {
  Point col(t.size());
  for (std::size_t r = 0; r < lambda; ++r) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      col[i] = regular_digit(t[i], h, r);
    }
    if (!has_repeat(col)) {
      return false;
    }
  }
  return true;
}
}  // namespace detail

/// The h-ary relation on h^lambda whose every digit column has a repeat.
/// Element x of h^lambda has digits x mod h, (x / h) mod h, ...
inline Relation omega(std::size_t h, std::size_t lambda) {
  std::size_t size = ipow(h, lambda);
  return Relation::from_predicate(size, h, [&](std::span<Elem const> t) {
    return detail::omega_member(t, h, lambda);
  });
}

/// phi^-1(omega_lambda) for phi: A -> h^lambda.
inline Relation regular_relation(std::size_t kappa, std::size_t h, std::size_t lambda,
                                 std::vector<Elem> const& phi) {
  if (phi.size() != kappa) {
    throw InputError("phi must have one entry per element");
  }
  std::size_t size = ipow(h, lambda);
  for (Elem v : phi) {
    if (v >= size) {
      throw InputError("phi value out of range");
    }
  }
  Point img(h);
  return Relation::from_predicate(kappa, h, [&](std::span<Elem const> t) {
    for (std::size_t i = 0; i < h; ++i) {
      img[i] = phi[t[i]];
    }
    return detail::omega_member(img, h, lambda);
  });
}

////////////////////////////////////////////////////////////////////////////
// Structural predicates
////////////////////////////////////////////////////////////////////////////

inline bool is_totally_reflexive(Relation const& r) {
  return iota(r.arity(), r.domain()).subset_of(r);
}

inline bool is_totally_symmetric(Relation const& r) {
  std::size_t h = r.arity();
  if (h < 2) {
    return true;
  }
  for (auto const& t : r.tuples()) {
    Point s = t;
    std::swap(s[0], s[1]);
    if (!r.contains(s)) {
      return false;
    }
    Point c(h);
    for (std::size_t i = 0; i < h; ++i) {
      c[i] = t[(i + 1) % h];
    }
    if (!r.contains(c)) {
      return false;
    }
  }
  return true;
}

/// Elements a such that (a, a_2, ..., a_h) is in rho for all a_2 .. a_h.
inline std::vector<Elem> center_of(Relation const& r) {
  if (!is_totally_reflexive(r) || !is_totally_symmetric(r)) {
    throw PreconditionError("center_of: relation is not totally reflexive and totally symmetric");
  }
  std::size_t       kappa = r.domain();
  Index             block = ipow(kappa, r.arity() - 1);
  std::vector<Elem> out;
  for (Elem a = 0; a < kappa; ++a) {
    bool all = true;
    for (Index j = 0; j < block && all; ++j) {
      all = r.contains(a * block + j);
    }
    if (all) {
      out.push_back(a);
    }
  }
  return out;
}

inline bool is_prime(std::size_t n) {
  if (n < 2) {
    return false;
  }
  for (std::size_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      return false;
    }
  }
  return true;
}

/// (p, m) with kappa = p^m, p prime.
inline std::optional<std::pair<std::size_t, std::size_t>> prime_power(std::size_t kappa) {
  for (std::size_t p = 2; p <= kappa; ++p) {
    if (kappa % p != 0) {
      continue;
    }
    if (!is_prime(p)) {
      return std::nullopt;
    }
    std::size_t m = 0, n = kappa;
    while (n % p == 0) {
      n /= p;
      ++m;
    }
    if (n == 1) {
      return std::pair{p, m};
    }
    return std::nullopt;
  }
  return std::nullopt;
}

////////////////////////////////////////////////////////////////////////////
// Recognizers
////////////////////////////////////////////////////////////////////////////

inline std::optional<RblClass> recognize_bounded_order(Relation const& r) {
  if (r.arity() != 2) {
    return std::nullopt;
  }
  std::size_t kappa = r.domain();
  auto        le    = [&](Elem a, Elem b) { return r.contains(static_cast<Index>(a) * kappa + b); };
  for (Elem a = 0; a < kappa; ++a) {
    if (!le(a, a)) {
      return std::nullopt;
    }
    for (Elem b = 0; b < kappa; ++b) {
      if (a != b && le(a, b) && le(b, a)) {
        return std::nullopt;
      }
      for (Elem c = 0; c < kappa; ++c) {
        if (le(a, b) && le(b, c) && !le(a, c)) {
          return std::nullopt;
        }
      }
    }
  }
  std::optional<Elem> lo, hi;
  for (Elem a = 0; a < kappa; ++a) {
    bool below = true, above = true;
    for (Elem b = 0; b < kappa; ++b) {
      below = below && le(a, b);
      above = above && le(b, a);
    }
    if (below) {
      lo = a;
    }
    if (above) {
      hi = a;
    }
  }
  if (!lo || !hi) {
    return std::nullopt;
  }
  RblClass c;
  c.kind     = RblKind::BoundedOrder;
  c.least    = *lo;
  c.greatest = *hi;
  return c;
}

/// The permutation whose graph r is, if any.
inline std::optional<std::vector<Elem>> graph_permutation(Relation const& r) {
  if (r.arity() != 2) {
    return std::nullopt;
  }
  std::size_t       kappa = r.domain();
  std::vector<Elem> pi(kappa);
  std::vector<bool> hit(kappa, false);
  for (Elem a = 0; a < kappa; ++a) {
    int count = 0;
    for (Elem b = 0; b < kappa; ++b) {
      if (r.contains(static_cast<Index>(a) * kappa + b)) {
        pi[a] = b;
        ++count;
      }
    }
    if (count != 1 || hit[pi[a]]) {
      return std::nullopt;
    }
    hit[pi[a]] = true;
  }
  return pi;
}

/// Common cycle length of pi if all cycles share it, else 0.
inline std::size_t uniform_cycle_length(std::vector<Elem> const& pi) {
  std::size_t len = 0;
  for (std::size_t a = 0; a < pi.size(); ++a) {
    std::size_t l = 1;
    for (Elem b = pi[a]; b != a; b = pi[b]) {
      ++l;
    }
    if (len != 0 && l != len) {
      return 0;
    }
    len = l;
  }
  return len;
}

inline std::optional<RblClass> recognize_prime_permutation(Relation const& r) {
  auto pi = graph_permutation(r);
  if (!pi) {
    return std::nullopt;
  }
  std::size_t p = uniform_cycle_length(*pi);
  if (!is_prime(p)) {
    return std::nullopt;
  }
  RblClass c;
  c.kind = RblKind::PrimePermutation;
  c.p    = p;
  c.perm = *pi;
  return c;
}

inline bool is_equivalence(Relation const& r) {
  if (r.arity() != 2) {
    return false;
  }
  std::size_t kappa = r.domain();
  auto        e     = [&](Elem a, Elem b) { return r.contains(static_cast<Index>(a) * kappa + b); };
  for (Elem a = 0; a < kappa; ++a) {
    if (!e(a, a)) {
      return false;
    }
    for (Elem b = 0; b < kappa; ++b) {
      if (e(a, b) != e(b, a)) {
        return false;
      }
      for (Elem c = 0; c < kappa; ++c) {
        if (e(a, b) && e(b, c) && !e(a, c)) {
          return false;
        }
      }
    }
  }
  return true;
}

inline std::optional<RblClass> recognize_equivalence(Relation const& r) {
  if (!is_equivalence(r)) {
    return std::nullopt;
  }
  std::size_t kappa = r.domain();
  if (r.size() == kappa || r.size() == kappa * kappa) {
    return std::nullopt;
  }
  RblClass c;
  c.kind = RblKind::NontrivialEquivalence;
  return c;
}

/// An elementary abelian p-group on A, stored as an addition table.
struct AffineGroup {
  std::size_t       kappa = 0;
  std::size_t       p = 0, m = 0;
  Elem              zero = 0;
  std::vector<Elem> add;  // add[a * kappa + b]

  Elem sum(Elem a, Elem b) const { return add[a * kappa + b]; }
};

namespace detail {
inline bool affine_matches(Relation const& r, std::vector<Elem> const& add, std::size_t kappa) {
  Point t(4);
  for (Index i = 0; i < r.points(); ++i) {
    decode_into(kappa, i, t);
    bool in = add[t[0] * kappa + t[1]] == add[t[2] * kappa + t[3]];
    if (in != r.contains(i)) {
      return false;
    }
  }
  return true;
}
}  // namespace detail

/// Reconstructs the group from the relation, trying each element as zero.
inline std::optional<AffineGroup> affine_structure(Relation const& r) {
  if (r.arity() != 4) {
    return std::nullopt;
  }
  std::size_t kappa = r.domain();
  auto        pm    = prime_power(kappa);
  if (!pm) {
    return std::nullopt;
  }
  auto [p, m] = *pm;
  for (Elem e = 0; e < kappa; ++e) {
    std::vector<Elem> add(kappa * kappa);
    bool              ok = true;
    for (Elem a = 0; a < kappa && ok; ++a) {
      for (Elem b = 0; b < kappa && ok; ++b) {
        int count = 0;
        for (Elem d = 0; d < kappa; ++d) {
          if (r.contains(std::array<Elem, 4>{a, b, d, e})) {
            add[a * kappa + b] = d;
            ++count;
          }
        }
        ok = count == 1;
      }
    }
    if (!ok) {
      continue;
    }
    auto S = [&](Elem a, Elem b) { return add[a * kappa + b]; };
    for (Elem a = 0; a < kappa && ok; ++a) {
      ok = S(a, e) == a;
      for (Elem b = 0; b < kappa && ok; ++b) {
        ok = S(a, b) == S(b, a);
        for (Elem c = 0; c < kappa && ok; ++c) {
          ok = S(S(a, b), c) == S(a, S(b, c));
        }
      }
      // every non-zero element has order exactly p
      if (ok && a != e) {
        Elem        x = a;
        std::size_t n = 1;
        while (x != e && n <= kappa) {
          x = S(x, a);
          ++n;
        }
        ok = n == p;
      }
    }
    if (ok && detail::affine_matches(r, add, kappa)) {
      return AffineGroup{kappa, p, m, e, std::move(add)};
    }
  }
  return std::nullopt;
}

inline std::optional<RblClass> recognize_prime_affine(Relation const& r) {
  auto g = affine_structure(r);
  if (!g) {
    return std::nullopt;
  }
  RblClass c;
  c.kind = RblKind::PrimeAffine;
  c.p    = g->p;
  c.m    = g->m;
  c.zero = g->zero;
  return c;
}

inline std::optional<RblClass> recognize_central(Relation const& r) {
  if (!is_totally_reflexive(r) || !is_totally_symmetric(r)) {
    return std::nullopt;
  }
  auto ctr = center_of(r);
  if (ctr.empty() || ctr.size() == r.domain()) {
    return std::nullopt;
  }
  RblClass c;
  c.kind   = RblKind::Central;
  c.h      = r.arity();
  c.center = std::move(ctr);
  return c;
}

namespace detail {
// Calls fn(phi) for every surjection A -> [0, n); stops when fn returns true.
template <typename F>
bool for_each_surjection(std::size_t kappa, std::size_t n, F&& fn) {
  if (n > kappa) {
    return false;
  }
  std::vector<Elem>        phi(kappa, 0);
  std::vector<std::size_t> hits(n, 0);
  hits[0] = kappa;
  while (true) {
    if (std::all_of(hits.begin(), hits.end(), [](std::size_t c) { return c > 0; })
        && fn(phi)) {
      return true;
    }
    std::size_t i = kappa;
    while (i-- > 0) {
      --hits[phi[i]];
      if (++phi[i] < n) {
        ++hits[phi[i]];
        break;
      }
      phi[i] = 0;
      ++hits[0];
    }
    if (i == static_cast<std::size_t>(-1)) {
      return false;
    }
  }
}
}  // namespace detail

inline std::optional<RblClass> recognize_hregular(Relation const& r) {
  std::size_t h     = r.arity();
  std::size_t kappa = r.domain();
  if (h < 3 || h > kappa || !is_totally_reflexive(r) || !is_totally_symmetric(r)) {
    return std::nullopt;
  }
  std::optional<RblClass> out;
  for (std::size_t lambda = 1; ipow(h, lambda) <= kappa && !out; ++lambda) {
    detail::for_each_surjection(kappa, ipow(h, lambda), [&](std::vector<Elem> const& phi) {
      if (regular_relation(kappa, h, lambda, phi) == r) {
        RblClass c;
        c.kind   = RblKind::HRegular;
        c.h      = h;
        c.lambda = lambda;
        c.phi    = phi;
        out      = c;
        return true;
      }
      return false;
    });
  }
  return out;
}

/// Every class the relation belongs to, in class order.
inline std::vector<RblClass> classify(Relation const& r) {
  std::vector<RblClass> out;
  for (auto rec : {recognize_bounded_order, recognize_prime_permutation, recognize_equivalence,
                   recognize_prime_affine, recognize_central, recognize_hregular}) {
    if (auto c = rec(r)) {
      out.push_back(std::move(*c));
    }
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////
// Enumeration
////////////////////////////////////////////////////////////////////////////

namespace detail {

inline void sort_unique(std::vector<RblRelation>& v) {
  std::stable_sort(v.begin(), v.end(), [](RblRelation const& a, RblRelation const& b) {
    return a.relation < b.relation;
  });
  v.erase(std::unique(v.begin(), v.end(),
                      [](RblRelation const& a, RblRelation const& b) {
                        return a.relation == b.relation;
                      }),
          v.end());
}

inline std::vector<RblRelation> enum_orders(std::size_t kappa) {
  std::vector<RblRelation> out;
  for (Elem lo = 0; lo < kappa; ++lo) {
    for (Elem hi = 0; hi < kappa; ++hi) {
      if (lo == hi) {
        continue;
      }
      std::vector<Elem> mid;
      for (Elem a = 0; a < kappa; ++a) {
        if (a != lo && a != hi) {
          mid.push_back(a);
        }
      }
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (std::size_t i = 0; i < mid.size(); ++i) {
        for (std::size_t j = i + 1; j < mid.size(); ++j) {
          pairs.emplace_back(i, j);
        }
      }
      // each middle pair: incomparable, i < j or j < i
      std::vector<int> choice(pairs.size(), 0);
      while (true) {
        Relation r(kappa, 2);
        for (Elem a = 0; a < kappa; ++a) {
          r.insert(a * kappa + a);
          r.insert(lo * kappa + a);
          r.insert(a * kappa + hi);
        }
        for (std::size_t q = 0; q < pairs.size(); ++q) {
          Elem a = mid[pairs[q].first], b = mid[pairs[q].second];
          if (choice[q] == 1) {
            r.insert(a * kappa + b);
          } else if (choice[q] == 2) {
            r.insert(b * kappa + a);
          }
        }
        if (auto c = recognize_bounded_order(r)) {
          out.push_back({r, *c});
        }
        std::size_t q = pairs.size();
        while (q-- > 0) {
          if (++choice[q] < 3) {
            break;
          }
          choice[q] = 0;
        }
        if (q == static_cast<std::size_t>(-1)) {
          break;
        }
      }
    }
  }
  return out;
}

inline std::vector<RblRelation> enum_prime_permutations(std::size_t kappa) {
  std::vector<RblRelation> out;
  std::vector<Elem>        pi(kappa);
  std::iota(pi.begin(), pi.end(), 0);
  do {
    std::size_t p = uniform_cycle_length(pi);
    if (is_prime(p)) {
      Relation r(kappa, 2);
      for (Elem a = 0; a < kappa; ++a) {
        r.insert(a * kappa + pi[a]);
      }
      RblClass c;
      c.kind = RblKind::PrimePermutation;
      c.p    = p;
      c.perm = pi;
      out.push_back({r, c});
    }
  } while (std::next_permutation(pi.begin(), pi.end()));
  return out;
}

inline std::vector<RblRelation> enum_equivalences(std::size_t kappa) {
  std::vector<RblRelation> out;
  // restricted growth strings
  std::vector<Elem> block(kappa, 0);
  while (true) {
    Relation r(kappa, 2);
    for (Elem a = 0; a < kappa; ++a) {
      for (Elem b = 0; b < kappa; ++b) {
        if (block[a] == block[b]) {
          r.insert(a * kappa + b);
        }
      }
    }
    if (auto c = recognize_equivalence(r)) {
      out.push_back({r, *c});
    }
    std::size_t i = kappa;
    bool        advanced = false;
    while (i-- > 1) {
      Elem mx = *std::max_element(block.begin(), block.begin() + i);
      if (block[i] <= mx) {
        ++block[i];
        std::fill(block.begin() + i + 1, block.end(), 0);
        advanced = true;
        break;
      }
    }
    if (!advanced) {
      break;
    }
  }
  return out;
}

inline std::vector<RblRelation> enum_affine(std::size_t kappa) {
  std::vector<RblRelation> out;
  auto                     pm = prime_power(kappa);
  if (!pm) {
    return out;
  }
  auto [p, m] = *pm;
  // canonical Z_p^m on digit vectors
  auto cadd = [&](std::size_t a, std::size_t b) {
    std::size_t r = 0, w = 1;
    for (std::size_t i = 0; i < m; ++i) {
      r += ((a % p + b % p) % p) * w;
      a /= p, b /= p, w *= p;
    }
    return r;
  };
  std::vector<Point> base;
  for (std::size_t a = 0; a < kappa; ++a) {
    for (std::size_t b = 0; b < kappa; ++b) {
      for (std::size_t c = 0; c < kappa; ++c) {
        for (std::size_t d = 0; d < kappa; ++d) {
          if (cadd(a, b) == cadd(c, d)) {
            base.push_back({static_cast<Elem>(a), static_cast<Elem>(b), static_cast<Elem>(c),
                            static_cast<Elem>(d)});
          }
        }
      }
    }
  }
  std::vector<Elem> sigma(kappa);
  std::iota(sigma.begin(), sigma.end(), 0);
  std::set<std::vector<std::uint64_t>> seen;
  do {
    Relation r(kappa, 4);
    for (auto const& t : base) {
      r.insert(encode_point(kappa, Point{sigma[t[0]], sigma[t[1]], sigma[t[2]], sigma[t[3]]}));
    }
    if (seen.insert(r.words()).second) {
      if (auto c = recognize_prime_affine(r)) {
        out.push_back({r, *c});
      }
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return out;
}

inline std::vector<RblRelation> enum_central(std::size_t kappa, std::optional<std::size_t> only_h) {
  std::vector<RblRelation> out;
  for (std::size_t h = 1; h < kappa; ++h) {
    if (only_h && *only_h != h) {
      continue;
    }
    // h-subsets of A as bitmasks, in increasing order
    std::vector<std::uint32_t> subsets;
    for (std::uint32_t s = 0; s < (1U << kappa); ++s) {
      if (static_cast<std::size_t>(std::popcount(s)) == h) {
        subsets.push_back(s);
      }
    }
    auto choices = checked_pow(2, subsets.size());
    if (!choices || *choices > table_budget()) {
      throw BudgetExceeded("central enumeration too large");
    }
    Point t(h);
    for (Index pick = 0; pick < *choices; ++pick) {
      std::set<std::uint32_t> chosen;
      for (std::size_t i = 0; i < subsets.size(); ++i) {
        if ((pick >> i) & 1U) {
          chosen.insert(subsets[i]);
        }
      }
      Relation r(kappa, h);
      for (Index i = 0; i < r.points(); ++i) {
        decode_into(kappa, i, t);
        if (has_repeat(t)) {
          r.insert(i);
          continue;
        }
        std::uint32_t mask = 0;
        for (Elem x : t) {
          mask |= 1U << x;
        }
        if (chosen.count(mask)) {
          r.insert(i);
        }
      }
      if (auto c = recognize_central(r)) {
        out.push_back({r, *c});
      }
    }
  }
  return out;
}

inline std::vector<RblRelation> enum_hregular(std::size_t kappa) {
  std::vector<RblRelation> out;
  for (std::size_t h = 3; h <= kappa; ++h) {
    for (std::size_t lambda = 1; ipow(h, lambda) <= kappa; ++lambda) {
      std::set<std::vector<std::uint64_t>> seen;
      detail::for_each_surjection(kappa, ipow(h, lambda), [&](std::vector<Elem> const& phi) {
        Relation r = regular_relation(kappa, h, lambda, phi);
        if (seen.insert(r.words()).second) {
          RblClass c;
          c.kind   = RblKind::HRegular;
          c.h      = h;
          c.lambda = lambda;
          c.phi    = phi;
          out.push_back({r, c});
        }
        return false;
      });
    }
  }
  return out;
}

}  // namespace detail

inline constexpr std::size_t kEnumerationDomainLimit = 5;

/// Every relation of one class on {0..kappa-1}, sorted, without duplicates.
/// `h` restricts central relations to one arity.
inline std::vector<RblRelation> enumerate_class(std::size_t kappa, RblKind kind,
                                                std::optional<std::size_t> h = std::nullopt) {
  Domain d(kappa);
  if (kappa > kEnumerationDomainLimit) {
    throw BudgetExceeded("enumerate: domains above " + std::to_string(kEnumerationDomainLimit)
                         + " elements are not enumerated");
  }
  std::vector<RblRelation> out;
  switch (kind) {
    case RblKind::BoundedOrder: out = detail::enum_orders(kappa); break;
    case RblKind::PrimePermutation: out = detail::enum_prime_permutations(kappa); break;
    case RblKind::NontrivialEquivalence: out = detail::enum_equivalences(kappa); break;
    case RblKind::PrimeAffine: out = detail::enum_affine(kappa); break;
    case RblKind::Central: out = detail::enum_central(kappa, h); break;
    case RblKind::HRegular: out = detail::enum_hregular(kappa); break;
  }
  detail::sort_unique(out);
  return out;
}

/// All relations of the six classes, class by class.
inline std::vector<RblRelation> enumerate_all_rbl(std::size_t kappa) {
  std::vector<RblRelation> out;
  for (auto k : all_rbl_kinds) {
    auto part = enumerate_class(kappa, k);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////
// Census
////////////////////////////////////////////////////////////////////////////

/// Known numbers of maximal clones for small domains.
inline std::optional<std::uint64_t> known_maximal_clone_count(std::size_t kappa) {
  static std::map<std::size_t, std::uint64_t> const table{
      {2, 5}, {3, 18}, {4, 82}, {5, 643}, {6, 15182}, {7, 7848984}};
  auto it = table.find(kappa);
  if (it == table.end()) {
    return std::nullopt;
  }
  return it->second;
}

/// True if some k-ary polymorphism of rho does not preserve sigma.
inline bool separates(PolSolver const& rho_solver, Relation const& sigma, std::size_t k) {
  std::size_t        kappa = sigma.domain();
  std::size_t        h     = sigma.arity();
  auto               rows  = sigma.tuples();
  auto               count = checked_pow(rows.size(), k);
  if (!count || *count > preserve_budget()) {
    throw BudgetExceeded("separation: too many row matrices");
  }
  std::set<std::vector<Index>> scopes;
  std::vector<std::size_t>     pick(k, 0);
  for (Index c = 0; c < *count; ++c) {
    std::vector<Index> scope(h, 0);
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < k; ++i) {
        scope[j] = scope[j] * kappa + rows[pick[i]][j];
      }
    }
    scopes.insert(std::move(scope));
    for (std::size_t i = k; i-- > 0;) {
      if (++pick[i] < rows.size()) {
        break;
      }
      pick[i] = 0;
    }
  }
  Point t(h);
  for (auto const& scope : scopes) {
    for (Index ti = 0; ti < sigma.points(); ++ti) {
      if (sigma.contains(ti)) {
        continue;
      }
      decode_into(kappa, ti, t);
      std::vector<std::pair<Index, Elem>> fixed;
      bool                                consistent = true;
      for (std::size_t j = 0; j < h && consistent; ++j) {
        for (std::size_t q = 0; q < j; ++q) {
          if (scope[q] == scope[j] && t[q] != t[j]) {
            consistent = false;
          }
        }
        fixed.emplace_back(scope[j], t[j]);
      }
      if (consistent && rho_solver.find(fixed)) {
        return true;
      }
    }
  }
  return false;
}

struct CensusReport {
  std::size_t                                   kappa      = 0;
  std::size_t                                   sep_arity  = 0;
  std::size_t                                   relations  = 0;  // distinct RBL relations
  std::size_t                                   count      = 0;  // distinct clones
  std::vector<std::pair<std::string, std::size_t>> classes;      // clones per class
  std::vector<RblRelation>                      representatives;
};

inline std::size_t default_separation_arity(std::size_t kappa) { return kappa == 2 ? 3 : 2; }

/// Groups the RBL relations by the clone they determine.  Relations are
/// merged unless some polymorphism of arity <= s preserves exactly one of them.
inline CensusReport census(std::size_t kappa, std::optional<std::size_t> sep_arity = std::nullopt) {
  if (kappa < 2) {
    throw InputError("census needs a domain of at least two elements");
  }
  std::size_t s   = sep_arity.value_or(default_separation_arity(kappa));
  if (s < 1) {
    throw InputError("separation arity must be at least 1");
  }
  auto        all = enumerate_all_rbl(kappa);
  // identical relations from different classes collapse to the first
  {
    std::vector<RblRelation> uniq;
    std::set<std::pair<std::size_t, std::vector<std::uint64_t>>> seen;
    for (auto& r : all) {
      if (seen.insert({r.relation.arity(), r.relation.words()}).second) {
        uniq.push_back(std::move(r));
      }
    }
    all = std::move(uniq);
  }
  std::size_t n = all.size();

  std::vector<std::vector<Elem>> sig(n);
  parallel_for(n, [&](std::size_t i) {
    PolSolver solver({all[i].relation}, kappa, 1);
    solver.enumerate([&](std::vector<Elem> const& t) {
      sig[i].insert(sig[i].end(), t.begin(), t.end());
      sig[i].push_back(static_cast<Elem>(kappa));
      return true;
    });
  });

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sig[i] == sig[j]) {
        candidates.emplace_back(i, j);
      }
    }
  }
  std::vector<char> merged(candidates.size(), 0);
  parallel_for(candidates.size(), [&](std::size_t c) {
    auto [i, j] = candidates[c];
    bool sep    = false;
    for (std::size_t k = 2; k <= s && !sep; ++k) {
      PolSolver si({all[i].relation}, kappa, k);
      PolSolver sj({all[j].relation}, kappa, k);
      sep = separates(si, all[j].relation, k) || separates(sj, all[i].relation, k);
    }
    merged[c] = sep ? 0 : 1;
  });

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = root(parent[x]);
  };
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (merged[c]) {
      auto a = root(candidates[c].first), b = root(candidates[c].second);
      if (a != b) {
        parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }

  CensusReport rep;
  rep.kappa     = kappa;
  rep.sep_arity = s;
  rep.relations = n;
  std::map<RblKind, std::size_t> per;
  for (std::size_t i = 0; i < n; ++i) {
    if (root(i) == i) {
      rep.representatives.push_back(all[i]);
      ++per[all[i].tag.kind];
    }
  }
  rep.count = rep.representatives.size();
  for (auto k : all_rbl_kinds) {
    rep.classes.emplace_back(to_string(k), per[k]);
  }
  if (auto expected = known_maximal_clone_count(kappa); expected && *expected != rep.count) {
    throw InternalError("census found " + std::to_string(rep.count) + " clones on "
                        + std::to_string(kappa) + " elements but the known count is "
                        + std::to_string(*expected) + "; separation arity "
                        + std::to_string(s) + " may be too small");
  }
  return rep;
}

////////////////////////////////////////////////////////////////////////////
// JSON
////////////////////////////////////////////////////////////////////////////

namespace detail {
inline json elems_json(std::vector<Elem> const& v) {
  json a = json::array();
  for (Elem x : v) {
    a.push_back(static_cast<int>(x));
  }
  return a;
}
}  // namespace detail

inline json to_json(RblClass const& c) {
  json j;
  j["class"] = to_string(c.kind);
  switch (c.kind) {
    case RblKind::BoundedOrder:
      j["least"]    = static_cast<int>(c.least);
      j["greatest"] = static_cast<int>(c.greatest);
      break;
    case RblKind::PrimePermutation:
      j["p"]           = c.p;
      j["permutation"] = detail::elems_json(c.perm);
      break;
    case RblKind::NontrivialEquivalence: break;
    case RblKind::PrimeAffine:
      j["p"]    = c.p;
      j["m"]    = c.m;
      j["zero"] = static_cast<int>(c.zero);
      break;
    case RblKind::Central:
      j["h"]      = c.h;
      j["center"] = detail::elems_json(c.center);
      break;
    case RblKind::HRegular:
      j["h"]      = c.h;
      j["lambda"] = c.lambda;
      j["phi"]    = detail::elems_json(c.phi);
      break;
  }
  return j;
}

inline json to_json(RblRelation const& r) {
  json j     = to_json(r.relation);
  j["class"] = to_json(r.tag);
  return j;
}

inline json to_json(CensusReport const& rep) {
  json classes = json::object();
  for (auto const& [name, n] : rep.classes) {
    classes[name] = n;
  }
  json reps = json::array();
  for (auto const& r : rep.representatives) {
    reps.push_back(to_json(r));
  }
  json j;
  j["kappa"]            = rep.kappa;
  j["count"]            = rep.count;
  j["relations"]        = rep.relations;
  j["separation_arity"] = rep.sep_arity;
  j["classes"]          = std::move(classes);
  j["representatives"]  = std::move(reps);
  return j;
}

}  // namespace cloneforge
