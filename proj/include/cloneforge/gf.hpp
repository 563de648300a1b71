#pragma once

// GF(p^m) arithmetic, polynomial normal forms, and the prime-affine
// completeness pipeline (mixed monomial -> x^s y^t -> x*y -> any target).

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "core.hpp"
#include "preserve.hpp"
#include "rosenberg.hpp"

namespace cloneforge {

////////////////////////////////////////////////////////////////////////////
// Fields
////////////////////////////////////////////////////////////////////////////

/// Elements are codes sum c_i p^i for the residue class of sum c_i x^i.
/// The modulus is monic of degree m, coefficients listed highest degree first.
struct FieldSpec {
  std::size_t       p = 2, m = 1;
  std::vector<Elem> modulus;
  Elem              primitive = 1;
};

namespace detail {
using ZpPoly = std::vector<int>;  // low degree first

inline void trim(ZpPoly& a) {
  while (!a.empty() && a.back() == 0) {
    a.pop_back();
  }
}

inline ZpPoly zp_mod(ZpPoly a, ZpPoly const& b, int p) {
  trim(a);
  int lead_inv = 1;
  while ((lead_inv * b.back()) % p != 1) {
    ++lead_inv;
  }
  while (a.size() >= b.size()) {
    int         f     = (a.back() * lead_inv) % p;
    std::size_t shift = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i) {
      a[shift + i] = ((a[shift + i] - f * b[i]) % p + p) % p;
    }
    trim(a);
  }
  return a;
}

inline bool zp_irreducible(ZpPoly const& f, int p) {
  std::size_t m = f.size() - 1;
  for (std::size_t d = 1; d <= m / 2; ++d) {
    Index count = ipow(p, d);
    for (Index c = 0; c < count; ++c) {
      ZpPoly q(d + 1);
      Index  x = c;
      for (std::size_t i = 0; i < d; ++i) {
        q[i] = static_cast<int>(x % p);
        x /= p;
      }
      q[d] = 1;
      if (zp_mod(f, q, p).empty()) {
        return false;
      }
    }
  }
  return true;
}
}  // namespace detail

class Field {
 public:
  /// The canonical field: smallest monic irreducible modulus (as a list,
  /// highest degree first) and the smallest primitive element.
  static Field make(std::size_t p, std::size_t m) {
    if (!is_prime(p) || m < 1) {
      throw InputError("field needs a prime p and m >= 1");
    }
    auto q = checked_pow(p, m);
    if (!q || *q > 64) {
      throw InputError("field order too large");
    }
    Index count = ipow(p, m);
    for (Index c = 0; c < count; ++c) {
      detail::ZpPoly f(m + 1);
      Index          x = c;
      for (std::size_t i = 0; i < m; ++i) {
        f[i] = static_cast<int>(x % p);
        x /= p;
      }
      f[m] = 1;
      if (detail::zp_irreducible(f, static_cast<int>(p))) {
        FieldSpec s;
        s.p = p;
        s.m = m;
        for (std::size_t i = m + 1; i-- > 0;) {
          s.modulus.push_back(static_cast<Elem>(f[i]));
        }
        Field fld(s, false);
        for (Elem e = 1; e < fld.q_; ++e) {
          if (fld.order(e) == fld.q_ - 1) {
            fld.spec_.primitive = e;
            break;
          }
        }
        return fld;
      }
    }
    throw InternalError("no irreducible polynomial found");
  }

  /// Validates the modulus (irreducible) and the primitive element.
  explicit Field(FieldSpec s) : Field(std::move(s), true) {}

  FieldSpec const& spec() const { return spec_; }
  std::size_t      p() const { return spec_.p; }
  std::size_t      m() const { return spec_.m; }
  std::size_t      q() const { return q_; }
  Elem             primitive() const { return spec_.primitive; }

  Elem add(Elem a, Elem b) const { return add_[a * q_ + b]; }
  Elem mul(Elem a, Elem b) const { return mul_[a * q_ + b]; }
  Elem neg(Elem a) const { return neg_[a]; }
  Elem sub(Elem a, Elem b) const { return add(a, neg(b)); }
  Elem inv(Elem a) const {
    if (a == 0) {
      throw PreconditionError("inverse of zero");
    }
    return pow(a, q_ - 2);
  }
  Elem pow(Elem a, std::size_t k) const {
    Elem r = 1;
    for (std::size_t i = 0; i < k; ++i) {
      r = mul(r, a);
    }
    return r;
  }
  /// a^(p^i)
  Elem frob(Elem a, std::size_t i) const { return pow(a, ipow(spec_.p, i % spec_.m)); }

  std::size_t order(Elem a) const {
    if (a == 0) {
      return 0;
    }
    Elem        x = a;
    std::size_t n = 1;
    while (x != 1) {
      x = mul(x, a);
      ++n;
    }
    return n;
  }

 private:
  Field(FieldSpec s, bool validate) : spec_(std::move(s)) {
    auto p = spec_.p, m = spec_.m;
    if (!is_prime(p) || m < 1 || spec_.modulus.size() != m + 1 || spec_.modulus.front() != 1) {
      throw InputError("field spec needs a prime p, m >= 1 and a monic modulus of degree m");
    }
    q_ = ipow(p, m);
    detail::ZpPoly f(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
      if (spec_.modulus[i] >= p) {
        throw InputError("modulus coefficient out of range");
      }
      f[m - i] = spec_.modulus[i];
    }
    if (!detail::zp_irreducible(f, static_cast<int>(p))) {
      throw InputError("modulus is reducible");
    }
    auto poly = [&](Elem c) {
      detail::ZpPoly r(m);
      for (std::size_t i = 0; i < m; ++i) {
        r[i] = c % p;
        c    = static_cast<Elem>(c / p);
      }
      return r;
    };
    auto code = [&](detail::ZpPoly const& r) {
      Index c = 0;
      for (std::size_t i = r.size(); i-- > 0;) {
        c = c * p + static_cast<Index>(r[i]);
      }
      return static_cast<Elem>(c);
    };
    add_.resize(q_ * q_);
    mul_.resize(q_ * q_);
    neg_.resize(q_);
    for (Elem a = 0; a < q_; ++a) {
      auto pa = poly(a);
      auto na = pa;
      for (auto& c : na) {
        c = static_cast<int>((p - c) % p);
      }
      neg_[a] = code(na);
      for (Elem b = 0; b < q_; ++b) {
        auto           pb = poly(b);
        detail::ZpPoly s(m), prod(2 * m, 0);
        for (std::size_t i = 0; i < m; ++i) {
          s[i] = static_cast<int>((pa[i] + pb[i]) % p);
          for (std::size_t j = 0; j < m; ++j) {
            prod[i + j] = static_cast<int>((prod[i + j] + pa[i] * pb[j]) % p);
          }
        }
        auto red = detail::zp_mod(prod, f, static_cast<int>(p));
        red.resize(m, 0);
        add_[a * q_ + b] = code(s);
        mul_[a * q_ + b] = code(red);
      }
    }
    if (validate && (spec_.primitive >= q_ || order(spec_.primitive) != q_ - 1)) {
      throw InputError("primitive element does not generate the multiplicative group");
    }
  }

  FieldSpec         spec_;
  std::size_t       q_ = 0;
  std::vector<Elem> add_, mul_, neg_;
};

inline json to_json(FieldSpec const& s) {
  json mod = json::array();
  for (Elem c : s.modulus) {
    mod.push_back(static_cast<int>(c));
  }
  return json{{"p", s.p}, {"m", s.m}, {"modulus", mod}, {"primitive", s.primitive}};
}

template <typename J>
FieldSpec field_spec_from_json(J const& j) {
  FieldSpec s;
  s.p           = detail::require_uint(j, "p");
  s.m           = detail::require_uint(j, "m");
  auto const& m = detail::require(j, "modulus");
  if (!m.is_array()) {
    throw InputError("'modulus' must be an array");
  }
  for (auto const& c : m) {
    if (!c.is_number_integer() || c.template get<long long>() < 0 || c.template get<long long>() > 255) {
      throw InputError("modulus coefficient out of range");
    }
    s.modulus.push_back(static_cast<Elem>(c.template get<int>()));
  }
  s.primitive = static_cast<Elem>(j.contains("primitive") ? detail::require_uint(j, "primitive") : 1);
  return s;
}

/// The relation a + b = c + d of the field's additive group.
inline Relation affine_relation(Field const& f) {
  return Relation::from_predicate(f.q(), 4, [&](std::span<Elem const> t) {
    return f.add(t[0], t[1]) == f.add(t[2], t[3]);
  });
}

////////////////////////////////////////////////////////////////////////////
// Polynomials
////////////////////////////////////////////////////////////////////////////

struct MultiPoly {
  std::size_t                                vars = 0;
  std::map<std::vector<std::size_t>, Elem>   coeffs;  // no zero entries

  Elem eval(Field const& f, std::span<Elem const> x) const {
    Elem s = 0;
    for (auto const& [e, c] : coeffs) {
      Elem t = c;
      for (std::size_t i = 0; i < vars; ++i) {
        t = f.mul(t, f.pow(x[i], e[i]));
      }
      s = f.add(s, t);
    }
    return s;
  }

  Elem coeff(std::vector<std::size_t> const& e) const {
    auto it = coeffs.find(e);
    return it == coeffs.end() ? Elem{0} : it->second;
  }

  friend bool operator==(MultiPoly const&, MultiPoly const&) = default;
};

inline json to_json(MultiPoly const& P) {
  json terms = json::array();
  for (auto const& [e, c] : P.coeffs) {
    terms.push_back(json{{"exp", e}, {"coeff", static_cast<int>(c)}});
  }
  return json{{"vars", P.vars}, {"terms", std::move(terms)}};
}

/// Unique polynomial with exponents below q, from the indicator expansion
/// f(x) = sum_a f(a) prod_i (1 - (x_i - a_i)^(q-1)), one variable at a time.
inline MultiPoly interpolate(Field const& F, Operation const& f) {
  std::size_t q = F.q(), n = f.arity();
  if (f.domain() != q) {
    throw InputError("interpolate: operation domain differs from the field order");
  }
  // delta[a][j]: coefficient of x^j in 1 - (x - a)^(q-1)
  std::vector<std::vector<Elem>> delta(q, std::vector<Elem>(q, 0));
  for (Elem a = 0; a < q; ++a) {
    std::vector<Elem> pw{1};
    for (std::size_t r = 0; r + 1 < q; ++r) {
      std::vector<Elem> nx(pw.size() + 1, 0);
      for (std::size_t j = 0; j < pw.size(); ++j) {
        nx[j + 1] = F.add(nx[j + 1], pw[j]);
        nx[j]     = F.add(nx[j], F.mul(pw[j], F.neg(a)));
      }
      pw = std::move(nx);
    }
    for (std::size_t j = 0; j < q; ++j) {
      delta[a][j] = F.neg(pw[j]);
    }
    delta[a][0] = F.add(delta[a][0], 1);
  }
  Operation         d = f.materialized();
  std::vector<Elem> cur(d.table().begin(), d.table().end());
  Index             total = cur.size();
  for (std::size_t axis = 0; axis < n; ++axis) {
    Index             stride = ipow(q, n - 1 - axis);
    std::vector<Elem> nx(total, 0);
    for (Index base = 0; base < total; ++base) {
      if ((base / stride) % q != 0) {
        continue;
      }
      for (std::size_t j = 0; j < q; ++j) {
        Elem s = 0;
        for (Elem a = 0; a < q; ++a) {
          s = F.add(s, F.mul(cur[base + a * stride], delta[a][j]));
        }
        nx[base + j * stride] = s;
      }
    }
    cur = std::move(nx);
  }
  MultiPoly P;
  P.vars = n;
  Point e(n, 0);
  for (Index i = 0; i < total; ++i, next_point(q, e)) {
    if (cur[i] != 0) {
      P.coeffs.emplace(std::vector<std::size_t>(e.begin(), e.end()), cur[i]);
    }
  }
  return P;
}

/// a0 + sum_i sum_j a[i][j] x_i^(p^j)
struct AffineForm {
  Elem                           a0 = 0;
  std::vector<std::vector<Elem>> a;
};

inline bool is_power_of(std::size_t x, std::size_t p) {
  if (x == 0) {
    return false;
  }
  while (x % p == 0) {
    x /= p;
  }
  return x == 1;
}

inline std::optional<AffineForm> is_affine_form(Field const& F, Operation const& f) {
  auto       P = interpolate(F, f);
  AffineForm out;
  out.a.assign(P.vars, std::vector<Elem>(F.m(), 0));
  for (auto const& [e, c] : P.coeffs) {
    std::size_t nonzero = 0, var = 0;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] != 0) {
        ++nonzero, var = i;
      }
    }
    if (nonzero == 0) {
      out.a0 = c;
      continue;
    }
    if (nonzero > 1 || !is_power_of(e[var], F.p())) {
      return std::nullopt;
    }
    std::size_t j = 0;
    for (std::size_t x = e[var]; x > 1; x /= F.p()) {
      ++j;
    }
    out.a[var][j] = c;
  }
  return out;
}

////////////////////////////////////////////////////////////////////////////
// The multiplication pipeline (all auxiliary operations affine)
////////////////////////////////////////////////////////////////////////////

inline constexpr char const* kAddName = "add";

/// A binary construction with its table and the located monomial.
struct MonomialStep {
  Construction             c;
  Operation                op;
  std::size_t              s = 0, t = 0;
  std::vector<std::size_t> support_trace;  // isolate_monomial only
};

namespace detail {

class AffineKit {
 public:
  explicit AffineKit(Field const& F) : F_(F) {
    std::vector<Elem> t(F.q() * F.q());
    for (Elem a = 0; a < F.q(); ++a) {
      for (Elem b = 0; b < F.q(); ++b) {
        t[a * F.q() + b] = F.add(a, b);
      }
    }
    basis_.emplace(kAddName, Operation::from_table(F.q(), 2, std::move(t)));
  }

  Field const& field() const { return F_; }
  Basis&       basis() { return basis_; }

  Term unary(std::vector<Elem> const& table, Term const& arg) {
    auto name = unary_name(table);
    basis_.try_emplace(name, Operation::unary(F_.q(), table));
    return Term::apply(name, {arg});
  }
  template <typename Fn>
  Term map(Fn&& fn, Term const& arg) {
    std::vector<Elem> t(F_.q());
    for (Elem x = 0; x < F_.q(); ++x) {
      t[x] = fn(x);
    }
    return unary(t, arg);
  }
  Term scale(Elem c, Term const& arg) {
    if (c == 1) {
      return arg;
    }
    return map([&](Elem x) { return F_.mul(c, x); }, arg);
  }
  Term constant(Elem c, Term const& arg) {
    return map([&](Elem) { return c; }, arg);
  }
  Term add(Term const& a, Term const& b) { return Term::apply(kAddName, {a, b}); }

 private:
  Field const& F_;
  Basis        basis_;
};

// sum of lambda * h(cx * x, cy * y) over (cx, cy)
using Combination = std::map<std::pair<Elem, Elem>, Elem>;

inline Operation combination_table(Field const& F, Operation const& h, Combination const& comb) {
  std::size_t       q = F.q();
  std::vector<Elem> t(q * q, 0);
  for (Elem x = 0; x < q; ++x) {
    for (Elem y = 0; y < q; ++y) {
      Elem s = 0;
      for (auto const& [k, lam] : comb) {
        s = F.add(s, F.mul(lam, h(std::array<Elem, 2>{F.mul(k.first, x), F.mul(k.second, y)})));
      }
      t[x * q + y] = s;
    }
  }
  return Operation::from_table(q, 2, std::move(t));
}

inline void comb_add(Field const& F, Combination& c, std::pair<Elem, Elem> k, Elem v) {
  Elem s = F.add(c[k], v);
  if (s == 0) {
    c.erase(k);
  } else {
    c[k] = s;
  }
}

// cur -> a * cur - cur(sx * x, sy * y)
inline Combination comb_step(Field const& F, Combination const& cur, Elem a, Elem sx, Elem sy) {
  Combination out;
  for (auto const& [k, lam] : cur) {
    comb_add(F, out, k, F.mul(a, lam));
    comb_add(F, out, {F.mul(sx, k.first), F.mul(sy, k.second)}, F.neg(lam));
  }
  return out;
}

inline Term combination_term(AffineKit& kit, Term const& h, Combination const& comb) {
  auto                x = Term::projection(2, 0), y = Term::projection(2, 1);
  std::optional<Term> acc;
  for (auto const& [k, lam] : comb) {
    Term piece = kit.scale(lam, compose(h, {kit.scale(k.first, x), kit.scale(k.second, y)}));
    acc        = acc ? kit.add(*acc, piece) : piece;
  }
  if (!acc) {
    return kit.constant(0, x);
  }
  return *acc;
}

inline Basis merged(Basis a, Basis const& b) {
  for (auto const& [n, op] : b) {
    a.try_emplace(n, op);
  }
  return a;
}

}  // namespace detail

/// A binary h with a nonzero coefficient at some x^s y^t, s, t >= 1, built
/// from g by substituting constants, or as f(x + y) for a univariate part f.
inline MonomialStep extract_mixed(Field const& F, Operation const& g,
                                  std::string const& gname = kViolatorName) {
  if (g.domain() != F.q()) {
    throw InputError("extract_mixed: domain differs from the field order");
  }
  if (is_affine_form(F, g)) {
    throw PreconditionError("extract_mixed: g is affine");
  }
  std::size_t       q = F.q(), n = g.arity();
  auto              P = interpolate(F, g);
  detail::AffineKit kit(F);
  auto              x = Term::projection(2, 0), y = Term::projection(2, 1);
  auto finish = [&](std::vector<Term> args, std::size_t s, std::size_t t) {
    MonomialStep st;
    st.c.term  = Term::apply(gname, std::move(args));
    st.c.basis = kit.basis();
    st.c.basis.emplace(gname, g);
    st.op = materialize(st.c.term, st.c.basis, q);
    st.s  = s;
    st.t  = t;
    if (interpolate(F, st.op).coeff({s, t}) == 0) {
      throw InternalError("extract_mixed: located coefficient vanishes");
    }
    return st;
  };
  bool mixed = false;
  for (auto const& [e, c] : P.coeffs) {
    mixed = mixed || std::count_if(e.begin(), e.end(), [](std::size_t v) { return v != 0; }) >= 2;
  }
  if (mixed) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        Point rest(n - 2, 0);
        do {
          std::vector<Elem> vals(n);
          std::size_t       r = 0;
          for (std::size_t v = 0; v < n; ++v) {
            if (v != i && v != j) {
              vals[v] = rest[r++];
            }
          }
          Operation h = Operation::tabulate(q, 2, [&](std::span<Elem const> xy) {
            auto w = vals;
            w[i]   = xy[0];
            w[j]   = xy[1];
            return g.eval_unchecked(w);
          });
          auto H = interpolate(F, h);
          for (auto const& [e, c] : H.coeffs) {
            if (e[0] != 0 && e[1] != 0) {
              std::vector<Term> args;
              for (std::size_t v = 0; v < n; ++v) {
                args.push_back(v == i ? x : v == j ? y : kit.constant(vals[v], x));
              }
              return finish(std::move(args), e[0], e[1]);
            }
          }
        } while (next_point(q, rest));
      }
    }
    throw InternalError("extract_mixed: no substitution exposes the mixed monomial");
  }
  // g is a sum of univariate parts; one of them is not affine
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<std::size_t> d;
    for (auto const& [e, c] : P.coeffs) {
      if (e[i] >= 2 && !is_power_of(e[i], F.p())) {
        d = std::max(d.value_or(0), e[i]);
      }
    }
    if (!d) {
      continue;
    }
    std::size_t pt = 1;
    while (*d % (pt * F.p()) == 0) {
      pt *= F.p();
    }
    std::vector<Term> args;
    for (std::size_t v = 0; v < n; ++v) {
      args.push_back(v == i ? kit.add(x, y) : kit.constant(0, x));
    }
    return finish(std::move(args), *d - pt, pt);
  }
  throw InternalError("extract_mixed: no non-affine part found");
}

/// Removes every monomial except x^s y^t, then normalizes the coefficient.
/// The function is kept as a combination sum lambda * h(cx x, cy y), so each
/// elimination step r = e^u cur - cur(e x, y) costs no term growth.
inline MonomialStep isolate_monomial(Field const& F, Construction const& h, std::size_t s,
                                     std::size_t t) {
  std::size_t q = F.q();
  if (s < 1 || t < 1 || s >= q || t >= q) {
    throw PreconditionError("isolate_monomial: exponents must lie in [1, q-1]");
  }
  Operation hop = materialize(h.term, h.basis, q);
  if (interpolate(F, hop).coeff({s, t}) == 0) {
    throw PreconditionError("isolate_monomial: coefficient at (s,t) is zero");
  }
  MonomialStep        st;
  detail::Combination comb{{{1, 1}, 1}};
  auto                poly = [&] { return interpolate(F, detail::combination_table(F, hop, comb)); };
  auto                P    = poly();
  st.support_trace.push_back(P.coeffs.size());
  // strip monomials free of x, then free of y: cur - cur(0, y), cur - cur(x, 0)
  if (std::any_of(P.coeffs.begin(), P.coeffs.end(), [](auto const& kv) { return kv.first[0] == 0; })) {
    comb = detail::comb_step(F, comb, 1, 0, 1);
    P    = poly();
    st.support_trace.push_back(P.coeffs.size());
  }
  if (std::any_of(P.coeffs.begin(), P.coeffs.end(), [](auto const& kv) { return kv.first[1] == 0; })) {
    comb = detail::comb_step(F, comb, 1, 1, 0);
    P    = poly();
    st.support_trace.push_back(P.coeffs.size());
  }
  Elem e = F.primitive();
  while (P.coeffs.size() > 1) {
    std::vector<std::size_t> uv;
    for (auto const& [k, c] : P.coeffs) {
      if (k != std::vector<std::size_t>{s, t}) {
        uv = k;
        break;
      }
    }
    std::size_t before = P.coeffs.size();
    if (uv[0] != s) {
      comb = detail::comb_step(F, comb, F.pow(e, uv[0]), e, 1);
    } else {
      comb = detail::comb_step(F, comb, F.pow(e, uv[1]), 1, e);
    }
    P = poly();
    st.support_trace.push_back(P.coeffs.size());
    if (P.coeffs.size() >= before || P.coeff({s, t}) == 0) {
      throw InternalError("isolate_monomial: elimination did not shrink the support");
    }
  }
  Elem inv = F.inv(P.coeff({s, t}));
  for (auto& [k, lam] : comb) {
    lam = F.mul(lam, inv);
  }
  detail::AffineKit kit(F);
  st.c.term  = detail::combination_term(kit, h.term, comb);
  st.c.basis = detail::merged(kit.basis(), h.basis);
  st.op      = materialize(st.c.term, st.c.basis, q);
  st.s       = s;
  st.t       = t;
  std::vector<Elem> want(q * q);
  for (Elem x = 0; x < q; ++x) {
    for (Elem y = 0; y < q; ++y) {
      want[x * q + y] = F.mul(F.pow(x, s), F.pow(y, t));
    }
  }
  if (!(st.op == Operation::from_table(q, 2, want))) {
    throw InternalError("isolate_monomial: result is not the monomial");
  }
  return st;
}

/// x*y from c(x, y) = x^s y^t: w = c(x^(p^(m-u)), y^(p^(m-v))) = x^h' y^l',
/// then the (1,1) monomial of w(x+1, y+1).
inline MonomialStep build_multiplication(Field const& F, Construction const& c, std::size_t s,
                                         std::size_t t) {
  std::size_t q = F.q(), p = F.p(), m = F.m();
  if (s < 1 || t < 1 || s >= q || t >= q) {
    throw PreconditionError("build_multiplication: exponents must lie in [1, q-1]");
  }
  if (s == 1 && t == 1) {
    MonomialStep st;
    st.c  = c;
    st.op = materialize(c.term, c.basis, q);
    st.s = st.t = 1;
    return st;
  }
  auto valuation = [&](std::size_t v) {
    std::size_t u = 0;
    while (v % p == 0) {
      v /= p;
      ++u;
    }
    return u;
  };
  std::size_t       u = valuation(s), v = valuation(t);
  detail::AffineKit kit(F);
  auto              x = Term::projection(2, 0), y = Term::projection(2, 1);
  Term              fx = kit.map([&](Elem a) { return F.frob(a, m - u); }, x);
  Term              fy = kit.map([&](Elem a) { return F.frob(a, m - v); }, y);
  Term              w  = compose(c.term, {fx, fy});
  Term              sx = kit.map([&](Elem a) { return F.add(a, 1); }, x);
  Term              sy = kit.map([&](Elem a) { return F.add(a, 1); }, y);
  Construction      qc{compose(w, {sx, sy}), detail::merged(kit.basis(), c.basis)};
  return isolate_monomial(F, qc, 1, 1);
}

/// Field multiplication as a term over g and affine operations.
inline MonomialStep multiplication_from(Field const& F, Operation const& g,
                                        std::string const& gname = kViolatorName) {
  auto mixed = extract_mixed(F, g, gname);
  auto mono  = isolate_monomial(F, mixed.c, mixed.s, mixed.t);
  return build_multiplication(F, mono.c, mono.s, mono.t);
}

/// Term for the polynomial of `target` over +, a named multiplication and
/// affine unary maps.
inline Construction polynomial_term(Field const& F, Operation const& target,
                                    std::string const& mulname) {
  std::size_t       k = target.arity();
  auto              P = interpolate(F, target);
  detail::AffineKit kit(F);
  auto              vars = projections(k);
  std::vector<std::vector<Term>> pw(k);
  for (std::size_t i = 0; i < k; ++i) {
    pw[i].push_back(Term());  // x^0 unused
    pw[i].push_back(vars[i]);
  }
  auto power = [&](std::size_t i, std::size_t e) {
    while (pw[i].size() <= e) {
      pw[i].push_back(Term::apply(mulname, {pw[i].back(), vars[i]}));
    }
    return pw[i][e];
  };
  std::optional<Term> acc;
  for (auto const& [e, c] : P.coeffs) {
    std::optional<Term> mono;
    for (std::size_t i = 0; i < k; ++i) {
      if (e[i] != 0) {
        Term f = power(i, e[i]);
        mono   = mono ? Term::apply(mulname, {*mono, f}) : f;
      }
    }
    Term piece = mono ? kit.scale(c, *mono) : kit.constant(c, vars[0]);
    acc        = acc ? kit.add(*acc, piece) : piece;
  }
  Term term = acc ? *acc : kit.constant(0, vars[0]);
  return {term, kit.basis()};
}

////////////////////////////////////////////////////////////////////////////
// Prime affine witness
////////////////////////////////////////////////////////////////////////////

/// psi: A -> field codes, an isomorphism from the relation's group onto the
/// additive group of the canonical field (greedy basis in element order).
inline std::vector<Elem> affine_labelling(AffineGroup const& G) {
  std::size_t       kappa = G.kappa;
  std::vector<Elem> basis;
  std::vector<Elem> span{G.zero};
  for (Elem x = 0; x < kappa && span.size() < kappa; ++x) {
    if (std::find(span.begin(), span.end(), x) != span.end()) {
      continue;
    }
    basis.push_back(x);
    std::vector<Elem> next;
    for (Elem s : span) {
      Elem y = s;
      for (std::size_t c = 0; c < G.p; ++c) {
        next.push_back(y);
        y = G.sum(y, x);
      }
    }
    span = std::move(next);
  }
  // span lists sum c_i b_i with c_1 varying fastest after the last basis step
  std::vector<Elem> psi(kappa);
  Point             coef(basis.size(), 0);
  for (Index code = 0; code < kappa; ++code) {
    Index c = code;
    Elem  v = G.zero;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (Index r = 0; r < c % G.p; ++r) {
        v = G.sum(v, basis[i]);
      }
      c /= G.p;
    }
    psi[v] = static_cast<Elem>(code);
  }
  return psi;
}

namespace detail {
inline Operation conjugate(Operation const& f, std::vector<Elem> const& to,
                           std::vector<Elem> const& from) {
  std::size_t kappa = f.domain();
  Operation   d     = f.materialized();
  return Operation::tabulate(kappa, f.arity(), [&](std::span<Elem const> x) {
    Point y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      y[i] = from[x[i]];
    }
    return to[d.eval_unchecked(y)];
  });
}
}  // namespace detail

/// Multiplication from g, then the target's polynomial over +, * and affine maps.
inline WitnessCertificate witness_affine(RblRelation const& r, Operation const& g,
                                         Operation const& target,
                                         PreservationCache* cache = nullptr) {
  auto const& rho = r.relation;
  detail::require_violator(rho, g);
  if (auto c = detail::pol_only("affine", rho, g, target, cache)) {
    return *c;
  }
  auto G = affine_structure(rho);
  if (!G) {
    throw PreconditionError("not a prime affine relation");
  }
  Field             F   = Field::make(G->p, G->m);
  auto              psi = affine_labelling(*G);
  std::vector<Elem> inv(psi.size());
  for (Elem a = 0; a < psi.size(); ++a) {
    inv[psi[a]] = a;
  }
  Operation gF   = detail::conjugate(g, psi, inv);
  Operation tF   = detail::conjugate(target, psi, inv);
  auto      mul  = multiplication_from(F, gF);
  auto      poly = polynomial_term(F, tF, "mul");
  Term      term = substitute(poly.term, {{"mul", mul.c.term}});
  Basis     fb   = detail::merged(poly.basis, mul.c.basis);
  Basis                       pool{{kViolatorName, g}};
  std::map<std::string, Term> rename;
  for (auto const& [name, op] : fb) {
    if (name == kViolatorName) {
      continue;
    }
    Operation back = detail::conjugate(op, inv, psi);
    std::string nn = name;
    if (op.arity() == 1) {
      nn = unary_name(back.table());
      if (nn != name) {
        rename.emplace(name, Term::apply(nn, projections(1)));
      }
    }
    pool.emplace(nn, back);
  }
  term = substitute(term, rename);
  return detail::finish("affine", rho, g, target, term, pool, cache);
}

}  // namespace cloneforge
