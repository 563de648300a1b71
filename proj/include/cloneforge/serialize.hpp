#pragma once

// JSON encodings of the core values.
//
//   Operation  {"domain":k,"arity":n,"table":[k^n ints]}
//              {"domain":k,"arity":n,"sparse":{"default":d,"points":[[..]],"values":[..]}}
//   Relation   {"domain":k,"arity":h,"tuples":[[..],..]}
//   Term       {"proj":[k,i]} (i is 1-based) | {"apply":"name","args":[..]}
//   Algebra    {"domain":k,"ops":{"name":operation,..}}

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "core.hpp"

namespace cloneforge {

using json = nlohmann::ordered_json;

namespace detail {
template <typename J>
J const& require(J const& j, char const* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw InputError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

template <typename J>
std::size_t require_uint(J const& j, char const* key) {
  auto const& v = require(j, key);
  if (!v.is_number_integer() || v.template get<long long>() < 0) {
    throw InputError(std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.template get<std::size_t>();
}

template <typename J>
Point parse_point(J const& j, std::size_t kappa) {
  if (!j.is_array()) {
    throw InputError("tuple must be an array");
  }
  Point p;
  for (auto const& x : j) {
    if (!x.is_number_integer() || x.template get<long long>() < 0
        || x.template get<std::size_t>() >= kappa) {
      throw InputError("tuple element out of range");
    }
    p.push_back(static_cast<Elem>(x.template get<std::size_t>()));
  }
  return p;
}

inline json point_json(std::span<Elem const> p) {
  json a = json::array();
  for (Elem x : p) {
    a.push_back(static_cast<int>(x));
  }
  return a;
}
}  // namespace detail

inline json to_json(Operation const& op) {
  json j;
  j["domain"] = op.domain();
  j["arity"]  = op.arity();
  if (!op.is_dense() && op.sparse_spec() != nullptr && !op.can_materialize()) {
    auto const* s = op.sparse_spec();
    json        pts = json::array();
    json        vals = json::array();
    for (auto const& [p, v] : s->values) {
      pts.push_back(detail::point_json(p));
      vals.push_back(static_cast<int>(v));
    }
    j["sparse"] = {{"default", static_cast<int>(s->fallback)},
                   {"points", std::move(pts)},
                   {"values", std::move(vals)}};
    return j;
  }
  Operation dense = op.materialized();
  json      t     = json::array();
  for (Elem v : dense.table()) {
    t.push_back(static_cast<int>(v));
  }
  j["table"] = std::move(t);
  return j;
}

template <typename J>
Operation operation_from_json(J const& j) {
  std::size_t kappa = detail::require_uint(j, "domain");
  std::size_t arity = detail::require_uint(j, "arity");
  if (j.contains("sparse")) {
    auto const&       s = j.at("sparse");
    Operation::Sparse spec;
    spec.fallback = static_cast<Elem>(detail::require_uint(s, "default"));
    auto const& pts  = detail::require(s, "points");
    auto const& vals = detail::require(s, "values");
    if (!pts.is_array() || !vals.is_array() || pts.size() != vals.size()) {
      throw InputError("sparse points and values must be arrays of equal length");
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto v = vals[i];
      if (!v.is_number_integer() || v.template get<long long>() < 0) {
        throw InputError("sparse value must be a non-negative integer");
      }
      spec.values[detail::parse_point(pts[i], kappa)]
          = static_cast<Elem>(std::min<std::size_t>(v.template get<std::size_t>(), 255));
    }
    return Operation::sparse(kappa, arity, std::move(spec));
  }
  auto const& t = detail::require(j, "table");
  if (!t.is_array()) {
    throw InputError("'table' must be an array");
  }
  std::vector<Elem> table;
  table.reserve(t.size());
  for (auto const& v : t) {
    if (!v.is_number_integer() || v.template get<long long>() < 0
        || v.template get<long long>() > 255) {
      throw InputError("table entries must be integers in range");
    }
    table.push_back(static_cast<Elem>(v.template get<int>()));
  }
  return Operation::from_table(kappa, arity, std::move(table));
}

inline json to_json(Relation const& r) {
  json tuples = json::array();
  for (auto const& t : r.tuples()) {
    tuples.push_back(detail::point_json(t));
  }
  json j;
  j["domain"] = r.domain();
  j["arity"]  = r.arity();
  j["tuples"] = std::move(tuples);
  return j;
}

template <typename J>
Relation relation_from_json(J const& j) {
  std::size_t kappa = detail::require_uint(j, "domain");
  std::size_t arity = detail::require_uint(j, "arity");
  auto const& ts    = detail::require(j, "tuples");
  if (!ts.is_array()) {
    throw InputError("'tuples' must be an array");
  }
  std::vector<Point> tuples;
  for (auto const& t : ts) {
    tuples.push_back(detail::parse_point(t, kappa));
  }
  return Relation::from_tuples(kappa, arity, tuples);
}

inline json to_json(Term const& t) {
  if (t.is_projection()) {
    return json{{"proj", json::array({t.arity(), t.index() + 1})}};
  }
  json args = json::array();
  for (auto const& a : t.args()) {
    args.push_back(to_json(a));
  }
  json j;
  j["apply"] = t.op();
  j["args"]  = std::move(args);
  return j;
}

namespace detail {
template <typename J>
std::optional<std::size_t> infer_term_arity(J const& j) {
  if (j.is_object() && j.contains("proj")) {
    auto const& p = j.at("proj");
    if (p.is_array() && p.size() == 2 && p[0].is_number_integer()) {
      return p[0].template get<std::size_t>();
    }
    return std::nullopt;
  }
  if (j.is_object() && j.contains("args") && j.at("args").is_array()) {
    for (auto const& a : j.at("args")) {
      if (auto k = infer_term_arity(a)) {
        return k;
      }
    }
  }
  return std::nullopt;
}

template <typename J>
Term term_from_json_rec(J const& j, std::size_t arity, std::vector<Term> const* shared = nullptr) {
  if (!j.is_object()) {
    throw InputError("term must be an object");
  }
  if (j.contains("ref")) {
    auto const& r = j.at("ref");
    if (shared == nullptr || !r.is_number_unsigned() || r.template get<std::size_t>() >= shared->size()) {
      throw InputError("'ref' does not name an earlier shared subterm");
    }
    Term t = (*shared)[r.template get<std::size_t>()];
    if (t.arity() != arity) {
      throw InputError("shared subterm disagrees with the term arity");
    }
    return t;
  }
  if (j.contains("proj")) {
    auto const& p = j.at("proj");
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer()
        || !p[1].is_number_integer()) {
      throw InputError("'proj' must be [arity, index]");
    }
    auto k = p[0].template get<long long>();
    auto i = p[1].template get<long long>();
    if (k < 1 || static_cast<std::size_t>(k) != arity || i < 1 || i > k) {
      throw InputError("projection [" + std::to_string(k) + "," + std::to_string(i)
                       + "] is malformed or disagrees with the term arity");
    }
    return Term::projection(static_cast<std::size_t>(k), static_cast<std::size_t>(i - 1));
  }
  if (!j.contains("apply") || !j.at("apply").is_string()) {
    throw InputError("term node needs 'proj' or 'apply'");
  }
  std::vector<Term> args;
  if (j.contains("args")) {
    if (!j.at("args").is_array()) {
      throw InputError("'args' must be an array");
    }
    for (auto const& a : j.at("args")) {
      args.push_back(term_from_json_rec(a, arity, shared));
    }
  }
  return Term::apply(j.at("apply").template get<std::string>(), std::move(args), arity);
}
}  // namespace detail

/// Parses a term; the arity is taken from its projection leaves unless given.
template <typename J>
Term term_from_json(J const& j, std::optional<std::size_t> arity = std::nullopt) {
  std::size_t k = arity ? *arity : detail::infer_term_arity(j).value_or(0);
  return detail::term_from_json_rec(j, k);
}

/// Nodes in the fully expanded tree, counted up to `limit`.
inline std::size_t term_tree_size(Term const& t, std::size_t limit) {
  std::unordered_map<Term::Node const*, std::size_t> memo;
  auto size = [&](auto&& self, Term const& u) -> std::size_t {
    if (auto it = memo.find(u.node()); it != memo.end()) {
      return it->second;
    }
    std::size_t n = 1;
    for (auto const& a : u.args()) {
      n = std::min(limit, n + self(self, a));
    }
    memo.emplace(u.node(), n);
    return n;
  };
  return size(size, t);
}

/// Term JSON where every non-projection node with several parents is stored
/// once in `shared` (children before parents) and referenced as {"ref": i}.
inline json to_json_shared(Term const& t, json& shared) {
  std::unordered_map<Term::Node const*, std::size_t> parents;
  auto count = [&](auto&& self, Term const& u) -> void {
    for (auto const& a : u.args()) {
      if (parents[a.node()]++ == 0) {
        self(self, a);
      }
    }
  };
  count(count, t);
  shared = json::array();
  std::unordered_map<Term::Node const*, std::size_t> ref;
  auto emit = [&](auto&& self, Term const& u) -> json {
    if (auto it = ref.find(u.node()); it != ref.end()) {
      return json{{"ref", it->second}};
    }
    if (u.is_projection()) {
      return to_json(u);
    }
    json args = json::array();
    for (auto const& a : u.args()) {
      args.push_back(self(self, a));
    }
    json j;
    j["apply"] = u.op();
    j["args"]  = std::move(args);
    if (parents[u.node()] > 1) {
      ref.emplace(u.node(), shared.size());
      shared.push_back(std::move(j));
      return json{{"ref", shared.size() - 1}};
    }
    return j;
  };
  return emit(emit, t);
}

/// Inverse of to_json_shared.
template <typename J>
Term term_from_json_shared(J const& j, J const& shared, std::size_t arity) {
  if (!shared.is_array()) {
    throw InputError("'shared' must be an array");
  }
  std::vector<Term> defs;
  for (auto const& d : shared) {
    defs.push_back(detail::term_from_json_rec(d, arity, &defs));
  }
  return detail::term_from_json_rec(j, arity, &defs);
}

inline json to_json(Algebra const& a) {
  json ops = json::object();
  for (auto const& [name, op] : a.ops) {
    ops[name] = to_json(op);
  }
  json j;
  j["domain"] = a.kappa;
  j["ops"]    = std::move(ops);
  return j;
}

template <typename J>
Algebra algebra_from_json(J const& j) {
  std::size_t kappa = detail::require_uint(j, "domain");
  auto const& ops   = detail::require(j, "ops");
  if (!ops.is_object()) {
    throw InputError("'ops' must be an object");
  }
  std::vector<std::pair<std::string, Operation>> list;
  for (auto it = ops.begin(); it != ops.end(); ++it) {
    Operation op = operation_from_json(it.value());
    if (op.domain() != kappa) {
      throw InputError("operation '" + it.key() + "' has domain "
                       + std::to_string(op.domain()) + ", algebra has "
                       + std::to_string(kappa));
    }
    list.emplace_back(it.key(), std::move(op));
  }
  return Algebra(kappa, std::move(list));
}

inline json to_json(Basis const& b) {
  json j = json::object();
  for (auto const& [name, op] : b) {
    j[name] = to_json(op);
  }
  return j;
}

template <typename J>
Basis basis_from_json(J const& j) {
  if (!j.is_object()) {
    throw InputError("basis must be an object");
  }
  Basis b;
  for (auto it = j.begin(); it != j.end(); ++it) {
    b.emplace(it.key(), operation_from_json(it.value()));
  }
  return b;
}

inline json parse_json_text(std::string const& text) {
  try {
    return json::parse(text);
  } catch (json::exception const& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
}

inline json read_json_file(std::string const& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str());
}

}  // namespace cloneforge
