#pragma once

// Witness certificates: a term over Pol(rho) plus one violator "g".

#include <map>
#include <mutex>
#include <string>

#include "preserve.hpp"
#include "serialize.hpp"

namespace cloneforge {

inline constexpr char const* kViolatorName = "g";

/// Certificates whose expanded term is larger than this store shared subterms once.
inline constexpr std::size_t kNestedTermLimit = 100000;

struct WitnessCertificate {
  std::string                 route;
  Relation                    relation;
  std::size_t                 arity = 0;
  Term                        term;
  Basis                       basis;
  std::map<std::string, bool> preserves;  // every member except g
};

struct VerifyResult {
  bool        valid = false;
  bool        sampled = false;  // some member was too large for an exact check
  std::string reason;
};

/// Memo of preservation results for one relation, keyed by table.
class PreservationCache {
 public:
  explicit PreservationCache(Relation rho) : rho_(std::move(rho)) {}

  Relation const& relation() const { return rho_; }

  /// Exact when the check fits the budget; otherwise sampled (and flagged).
  bool check(Operation const& f, bool* sampled = nullptr) {
    std::optional<std::string> key;
    if (f.is_dense() || (f.can_materialize() && ipow(f.domain(), f.arity()) <= 1'000'000)) {
      key = std::to_string(f.arity()) + ':' + table_key(f.materialized());
      std::lock_guard lock(mu_);
      if (auto it = memo_.find(*key); it != memo_.end()) {
        return it->second;
      }
    }
    bool ok;
    try {
      ok = cloneforge::preserves(f, rho_);
    } catch (BudgetExceeded const&) {
      ok = preserves_sampled(f, rho_, 20000, 1);
      if (sampled != nullptr) {
        *sampled = true;
      }
    }
    if (key) {
      std::lock_guard lock(mu_);
      memo_.emplace(*key, ok);
    }
    return ok;
  }

 private:
  Relation                    rho_;
  std::mutex                  mu_;
  std::map<std::string, bool> memo_;
};

/// Pointwise equality with the target and Pol(rho) membership of every basis
/// member other than g.  When `g` is given, the certificate's g must match.
inline VerifyResult verify_certificate(WitnessCertificate const& cert, Operation const& target,
                                       Operation const*   g     = nullptr,
                                       PreservationCache* cache = nullptr) {
  VerifyResult res;
  auto const&  rho = cert.relation;
  if (target.domain() != rho.domain()) {
    res.reason = "target and relation have different domains";
    return res;
  }
  if (!cert.term.valid() || cert.term.arity() != target.arity()) {
    res.reason = "term arity differs from target arity";
    return res;
  }
  auto gi = cert.basis.find(kViolatorName);
  if (gi == cert.basis.end()) {
    res.reason = "basis has no member named g";
    return res;
  }
  if (g != nullptr && !(gi->second == *g)) {
    res.reason = "certificate g differs from the given operation";
    return res;
  }
  std::optional<PreservationCache> local;
  if (cache == nullptr) {
    local.emplace(rho);
    cache = &*local;
  }
  for (auto const& name : cert.term.op_names()) {
    if (!cert.basis.contains(name)) {
      res.reason = "term uses unknown operation '" + name + "'";
      return res;
    }
  }
  for (auto const& [name, op] : cert.basis) {
    if (name == kViolatorName) {
      continue;
    }
    if (op.domain() != rho.domain()) {
      res.reason = "basis member '" + name + "' has the wrong domain";
      return res;
    }
    if (!cache->check(op, &res.sampled)) {
      res.reason = "basis not in Pol(rho): '" + name + "'";
      return res;
    }
  }
  Operation table;
  try {
    table = materialize(cert.term, cert.basis, rho.domain());
  } catch (InputError const& e) {
    res.reason = std::string("term does not evaluate: ") + e.what();
    return res;
  }
  if (!(table == target.materialized())) {
    res.reason = "term does not match target";
    return res;
  }
  res.valid = true;
  return res;
}

namespace detail {

inline void require_violator(Relation const& rho, Operation const& g) {
  if (g.domain() != rho.domain()) {
    throw InputError("g and the relation have different domains");
  }
  if (preserves(g, rho)) {
    throw PreconditionError("not a violator: g preserves the relation");
  }
}

inline std::optional<std::size_t> projection_index(Operation const& t) {
  Operation d = t.materialized();
  for (std::size_t i = 0; i < d.arity(); ++i) {
    if (d == Operation::projection(d.domain(), d.arity(), i)) {
      return i;
    }
  }
  return std::nullopt;
}

/// Keeps the members the term uses (and g), records preservation flags and
/// checks the term against the target.
inline WitnessCertificate finish(std::string route, Relation const& rho, Operation const& g,
                                 Operation const& target, Term term, Basis const& pool,
                                 PreservationCache* cache) {
  WitnessCertificate c;
  c.route    = std::move(route);
  c.relation = rho;
  c.arity    = target.arity();
  c.term     = std::move(term);
  for (auto const& name : c.term.op_names()) {
    if (name == kViolatorName) {
      continue;
    }
    auto it = pool.find(name);
    if (it == pool.end()) {
      throw InternalError(c.route + ": term uses unregistered operation '" + name + "'");
    }
    c.basis.emplace(name, it->second);
  }
  c.basis.insert_or_assign(kViolatorName, g);
  std::optional<PreservationCache> local;
  if (cache == nullptr) {
    local.emplace(rho);
    cache = &*local;
  }
  for (auto const& [name, op] : c.basis) {
    if (name != kViolatorName) {
      c.preserves[name] = cache->check(op);
      if (!c.preserves[name]) {
        throw InternalError(c.route + ": auxiliary operation '" + name
                            + "' does not preserve the relation");
      }
    }
  }
  if (!(materialize(c.term, c.basis, rho.domain()) == target.materialized())) {
    throw InternalError(c.route + ": term does not reproduce the target");
  }
  return c;
}

/// Certificate that does not need g because the target already preserves rho.
inline std::optional<WitnessCertificate> pol_only(std::string const& route, Relation const& rho,
                                                  Operation const& g, Operation const& target,
                                                  PreservationCache* cache) {
  if (target.arity() == 0) {
    throw InputError("target must have arity at least 1");
  }
  bool in_pol = cache != nullptr ? cache->check(target) : preserves(target, rho);
  if (!in_pol) {
    return std::nullopt;
  }
  Basis pool;
  Term  term;
  if (auto i = projection_index(target)) {
    term = Term::projection(target.arity(), *i);
  } else {
    pool.emplace("h", target.materialized());
    term = Term::apply("h", projections(target.arity()));
  }
  return finish(route, rho, g, target, term, pool, cache);
}

}  // namespace detail

inline json to_json(WitnessCertificate const& c) {
  json basis = json::object();
  for (auto const& [name, op] : c.basis) {
    json j = to_json(op);
    if (auto it = c.preserves.find(name); it != c.preserves.end()) {
      j["preserves"] = it->second;
    }
    basis[name] = std::move(j);
  }
  json j;
  j["route"]    = c.route;
  j["relation"] = to_json(c.relation);
  j["g"]        = kViolatorName;
  j["arity"]    = c.arity;
  if (term_tree_size(c.term, kNestedTermLimit + 1) <= kNestedTermLimit) {
    j["term"] = to_json(c.term);
  } else {
    json shared;
    j["term"]   = to_json_shared(c.term, shared);
    j["shared"] = std::move(shared);
  }
  j["basis"]    = std::move(basis);
  return j;
}

template <typename J>
WitnessCertificate certificate_from_json(J const& j) {
  WitnessCertificate c;
  if (j.contains("route") && j.at("route").is_string()) {
    c.route = j.at("route").template get<std::string>();
  }
  c.relation = relation_from_json(detail::require(j, "relation"));
  c.arity    = detail::require_uint(j, "arity");
  if (j.contains("shared")) {
    c.term = term_from_json_shared(detail::require(j, "term"), j.at("shared"), c.arity);
  } else {
    c.term = term_from_json(detail::require(j, "term"), c.arity);
  }
  auto const& b = detail::require(j, "basis");
  c.basis       = basis_from_json(b);
  for (auto it = b.begin(); it != b.end(); ++it) {
    if (it.value().contains("preserves") && it.value().at("preserves").is_boolean()) {
      c.preserves[it.key()] = it.value().at("preserves").template get<bool>();
    }
  }
  return c;
}

}  // namespace cloneforge
