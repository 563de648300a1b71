#include <catch_amalgamated.hpp>

#include <cloneforge/serialize.hpp>
#include <cloneforge/witness.hpp>

#include "oracles.hpp"

using namespace cloneforge;

namespace {

Operation random_op(std::mt19937_64& rng, std::size_t kappa, std::size_t n) {
  return Operation::from_table(kappa, n, oracle::random_table(rng, kappa, n));
}

Operation random_violator(std::mt19937_64& rng, Relation const& rho) {
  std::uniform_int_distribution<std::size_t> ar(1, 3);
  while (true) {
    auto g = random_op(rng, rho.domain(), ar(rng));
    if (!preserves(g, rho)) {
      return g;
    }
  }
}

RblRelation find_rbl(std::size_t kappa, RblKind kind, std::size_t h = 0) {
  for (auto const& r : enumerate_all_rbl(kappa)) {
    if (r.tag.kind == kind && (h == 0 || r.relation.arity() == h)) {
      return r;
    }
  }
  throw std::runtime_error("no such relation");
}

// Values of the argument subterms of the top-level H, one point per input.
std::vector<Point> range_points(WitnessCertificate const& c, std::size_t kappa) {
  REQUIRE(c.term.op() == "H");
  std::vector<Operation> parts;
  for (auto const& a : c.term.args()) {
    parts.push_back(materialize(a, c.basis, kappa));
  }
  std::vector<Point> out;
  for (auto const& x : oracle::all_tuples(kappa, c.arity)) {
    Point p;
    for (auto const& f : parts) {
      p.push_back(f(Point(x.begin(), x.end())));
    }
    out.push_back(std::move(p));
  }
  return out;
}

bool related_everywhere(Relation const& rho, Point const& a, Point const& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!rho.contains(Point{a[i], b[i]})) {
      return false;
    }
  }
  return true;
}

// A target of arity k outside Pol(rho), so that g is actually needed.
Operation hard_target(std::mt19937_64& rng, Relation const& rho, std::size_t k) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    auto t = random_op(rng, rho.domain(), k);
    if (!preserves(t, rho)) {
      return t;
    }
  }
  throw std::runtime_error("every sampled target preserves the relation");
}

}  // namespace

TEST_CASE("witness examples for each route") {
  std::mt19937_64 rng(101);
  std::map<std::string, std::size_t> seen;
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_all_rbl(kappa)) {
      auto g = random_violator(rng, r.relation);
      auto t = hard_target(rng, r.relation, 2);
      auto c = witness(r, g, t);
      ++seen[c.route];
      auto v = verify_certificate(c, t, &g);
      INFO(c.route);
      REQUIRE(v.valid);
      CHECK(v.reason.empty());
      CHECK(c.arity == 2);
      CHECK(c.relation == r.relation);
    }
  }
  for (auto route : {"order", "equivalence", "prime-permutation", "unary-central", "affine",
                     "central", "iota"}) {
    CHECK(seen[route] > 0);
  }
}

TEST_CASE("a target already in Pol(rho) needs no violator") {
  auto r = find_rbl(2, RblKind::BoundedOrder);
  auto g = Operation::unary(2, {1, 0});
  auto t = Operation::from_table(2, 2, {0, 0, 0, 1});
  auto c = witness(r, g, t);
  CHECK(verify_certificate(c, t, &g).valid);
  CHECK_FALSE(c.term.op_names().contains(kViolatorName));
}

TEST_CASE("witness rejects non-violators and mismatched domains") {
  auto r = find_rbl(2, RblKind::BoundedOrder);
  auto t = Operation::from_table(2, 2, {1, 1, 1, 0});
  CHECK_THROWS_AS(witness(r, Operation::projection(2, 2, 0), t), PreconditionError);
  CHECK_THROWS_AS(witness(r, Operation::unary(3, {1, 0, 2}), t), InputError);
  CHECK_THROWS_AS(witness(r, Operation::unary(2, {1, 0}), Operation::projection(3, 2, 0)),
                  InputError);
  CHECK_THROWS_AS(witness(Relation::from_tuples(2, 2, {{0, 1}}), Operation::unary(2, {1, 0}), t),
                  PreconditionError);
}

TEST_CASE("the order route's extension range is an antichain") {
  std::mt19937_64 rng(103);
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_class(kappa, RblKind::BoundedOrder)) {
      for (int trial = 0; trial < 5; ++trial) {
        auto g = random_violator(rng, r.relation);
        auto t = hard_target(rng, r.relation, 1 + trial % 2);
        auto c = witness(r, g, t);
        REQUIRE(c.route == "order");
        auto pts = range_points(c, kappa);
        for (auto const& a : pts) {
          for (auto const& b : pts) {
            REQUIRE((a == b || !related_everywhere(r.relation, a, b)));
          }
        }
      }
    }
  }
}

TEST_CASE("the equivalence route's range meets each class once") {
  std::mt19937_64 rng(107);
  for (auto const& r : enumerate_class(3, RblKind::NontrivialEquivalence)) {
    for (int trial = 0; trial < 5; ++trial) {
      auto g   = random_violator(rng, r.relation);
      auto t   = hard_target(rng, r.relation, 2);
      auto c   = witness(r, g, t);
      auto pts = range_points(c, 3);
      for (auto const& a : pts) {
        for (auto const& b : pts) {
          REQUIRE((a == b || !related_everywhere(r.relation, a, b)));
        }
      }
    }
  }
}

TEST_CASE("the prime permutation route's range meets each parallel class once") {
  std::mt19937_64 rng(109);
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_class(kappa, RblKind::PrimePermutation)) {
      std::vector<Elem> pi(kappa);
      for (auto const& t : r.relation.tuples()) {
        pi[t[0]] = t[1];
      }
      for (int trial = 0; trial < 5; ++trial) {
        auto g   = random_violator(rng, r.relation);
        auto t   = hard_target(rng, r.relation, 2);
        auto c   = witness(r, g, t);
        auto pts = range_points(c, kappa);
        std::set<Point> uniq(pts.begin(), pts.end());
        for (auto const& a : uniq) {
          auto b = a;
          for (std::size_t j = 1; j < r.tag.p; ++j) {
            for (auto& e : b) {
              e = pi[e];
            }
            REQUIRE_FALSE(uniq.contains(b));
          }
        }
      }
    }
  }
}

TEST_CASE("the unary central route's range avoids S^N") {
  std::mt19937_64 rng(113);
  for (auto const& r : enumerate_class(3, RblKind::Central, 1)) {
    for (int trial = 0; trial < 5; ++trial) {
      auto g = random_violator(rng, r.relation);
      auto t = hard_target(rng, r.relation, 2);
      auto c = witness(r, g, t);
      for (auto const& p : range_points(c, 3)) {
        bool inside = std::all_of(p.begin(), p.end(),
                                  [&](Elem e) { return r.relation.contains(Point{e}); });
        REQUIRE_FALSE(inside);
      }
    }
  }
}

TEST_CASE("tampered certificates are rejected") {
  std::mt19937_64 rng(127);
  auto            r = find_rbl(3, RblKind::NontrivialEquivalence);
  auto            g = random_violator(rng, r.relation);
  auto            t = hard_target(rng, r.relation, 2);
  auto            c = witness(r, g, t);
  REQUIRE(verify_certificate(c, t, &g).valid);

  auto swapped                 = c;
  swapped.basis.at(kViolatorName) = Operation::projection(3, g.arity(), 0);
  auto v                       = verify_certificate(swapped, t, &g);
  CHECK_FALSE(v.valid);
  CHECK(v.reason == "certificate g differs from the given operation");

  auto bad = c;
  bad.basis.at("H") = hard_target(rng, r.relation, bad.basis.at("H").arity());
  v                 = verify_certificate(bad, t, &g);
  CHECK_FALSE(v.valid);
  CHECK(v.reason.starts_with("basis not in Pol(rho): "));

  auto other = hard_target(rng, r.relation, 2);
  if (!(other == t)) {
    v = verify_certificate(c, other, &g);
    CHECK_FALSE(v.valid);
    CHECK(v.reason == "term does not match target");
  }
  CHECK(verify_certificate(c, Operation::projection(3, 3, 0)).reason
        == "term arity differs from target arity");
}

TEST_CASE("certificate JSON round trip") {
  std::mt19937_64 rng(131);
  for (auto const& r : enumerate_all_rbl(3)) {
    auto g    = random_violator(rng, r.relation);
    auto t    = hard_target(rng, r.relation, 2);
    auto c    = witness(r, g, t);
    auto j    = to_json(c);
    auto back = certificate_from_json(j);
    REQUIRE(to_json(back) == j);
    REQUIRE(verify_certificate(back, t, &g).valid);
    CHECK(j["g"] == "g");
  }
}

TEST_CASE("reduce_to_unary needs a rainbow tuple") {
  auto g = Operation::from_table(3, 2, {0, 2, 1, 2, 1, 0, 1, 0, 2});
  REQUIRE_FALSE(preserves(g, iota(3, 3)));
  CHECK_THROWS_WITH(reduce_to_unary(iota(3, 3), g), Catch::Matchers::ContainsSubstring("rainbow tuple required"));
}

TEST_CASE("reduce_to_unary yields a unary violator with a correct term") {
  std::mt19937_64 rng(137);
  for (std::size_t kappa = 3; kappa <= 4; ++kappa) {
    for (auto const& r : enumerate_all_rbl(kappa)) {
      bool trs = (r.tag.kind == RblKind::Central && r.tag.h >= 2) || r.tag.kind == RblKind::HRegular;
      if (!trs || r.relation == iota(kappa, kappa)) {
        continue;
      }
      auto g  = random_violator(rng, r.relation);
      auto uv = reduce_to_unary(r.relation, g);
      REQUIRE(uv.f.arity() == 1);
      REQUIRE_FALSE(preserves(uv.f, r.relation));
      auto pool = uv.basis;
      pool.try_emplace(kViolatorName, g);
      REQUIRE(materialize(uv.term, pool, kappa) == uv.f);
      for (auto const& [name, op] : uv.basis) {
        if (name != kViolatorName) {
          REQUIRE(preserves(op, r.relation));
        }
      }
    }
  }
}

TEST_CASE("d_valued_unaries realize every D-valued unary") {
  std::mt19937_64 rng(139);
  for (auto const& r : enumerate_class(3, RblKind::Central, 2)) {
    auto g  = random_violator(rng, r.relation);
    auto dv = d_valued_unaries(r.relation, reduce_to_unary(r.relation, g));
    REQUIRE_FALSE(r.relation.contains(Point(dv.d().begin(), dv.d().end())));
    std::vector<Elem> d = dv.d();
    for (auto const& pick : oracle::all_tuples(d.size(), 3)) {
      std::vector<Elem> u(3);
      for (std::size_t x = 0; x < 3; ++x) {
        u[x] = d[pick[x]];
      }
      Basis pool;
      auto  term = dv.make(u, pool);
      pool.try_emplace(kViolatorName, g);
      REQUIRE(materialize(term, pool, 3) == Operation::unary(3, u));
    }
    std::vector<Elem> outside{0, 1, 2};
    if (std::set<Elem>(d.begin(), d.end()).size() < 3) {
      Basis pool;
      CHECK_THROWS_AS(dv.make(outside, pool), PreconditionError);
    }
  }
}

TEST_CASE("central_q is onto and preserves the relation") {
  for (auto const& r : enumerate_class(3, RblKind::Central, 2)) {
    // a pair outside rho
    for (auto const& t : oracle::all_tuples(3, 2)) {
      if (r.relation.contains(Point{t[0], t[1]})) {
        continue;
      }
      auto q = central_q(3, {t[0], t[1]}, r.tag.center.front());
      CHECK(q.q.arity() == 8);
      for (std::size_t v = 0; v < 3; ++v) {
        REQUIRE(q.q(q.preimage[v]) == v);
        for (auto e : q.preimage[v]) {
          REQUIRE((e == t[0] || e == t[1]));
        }
      }
      REQUIRE(preserves(q.q, r.relation));
      break;
    }
  }
  CHECK_THROWS_AS(central_q(3, {0}, 0), PreconditionError);
}

TEST_CASE("regular_aux gives an onto polymorphism") {
  for (auto const& r : enumerate_class(4, RblKind::HRegular)) {
    if (r.relation == iota(4, 4)) {
      CHECK_THROWS_AS(regular_aux(4, r.tag, {0, 1, 2, 3}), PreconditionError);
      continue;
    }
    // a rainbow tuple of phi is outside rho
    std::vector<Elem> d(r.tag.h);
    for (std::size_t c = 0; c < r.tag.h; ++c) {
      d[c] = static_cast<Elem>(std::find(r.tag.phi.begin(), r.tag.phi.end(), c) - r.tag.phi.begin());
    }
    REQUIRE_FALSE(r.relation.contains(Point(d.begin(), d.end())));
    auto aux = regular_aux(4, r.tag, d);
    REQUIRE(preserves(aux.f, r.relation));
    REQUIRE(preserves(aux.r, r.relation));
    for (std::size_t v = 0; v < 4; ++v) {
      REQUIRE(aux.q.q(aux.q.preimage[v]) == v);
      for (auto e : aux.q.preimage[v]) {
        REQUIRE(std::find(d.begin(), d.end(), e) != d.end());
      }
    }
  }
}

TEST_CASE("UnaryGenerator builds all unary functions") {
  std::mt19937_64 rng(149);
  for (std::size_t h = 2; h <= 3; ++h) {
    for (auto const& r : enumerate_class(3, RblKind::Central, h)) {
      auto           g = random_violator(rng, r.relation);
      UnaryGenerator gen(r, g);
      std::vector<std::pair<std::vector<Elem>, Term>> made;
      for (auto const& u : oracle::all_tuples(3, 3)) {
        std::vector<Elem> uv(u.begin(), u.end());
        made.emplace_back(uv, gen.make(uv));
      }
      auto pool = gen.pool();
      pool.try_emplace(kViolatorName, g);
      for (auto const& [u, term] : made) {
        REQUIRE(materialize(term, pool, 3) == Operation::unary(3, u));
      }
      for (auto const& [name, op] : gen.pool()) {
        if (name != kViolatorName) {
          REQUIRE(preserves(op, r.relation));
        }
      }
    }
  }
  auto ord = find_rbl(3, RblKind::BoundedOrder);
  std::mt19937_64 rng2(1);
  CHECK_THROWS_AS(UnaryGenerator(ord, random_violator(rng2, ord.relation)), PreconditionError);
}

TEST_CASE("witness soundness on a sampled battery") {
  std::mt19937_64 rng(151);
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_all_rbl(kappa)) {
      PreservationCache cache(r.relation);
      for (int gi = 0; gi < 3; ++gi) {
        auto g = random_violator(rng, r.relation);
        for (int ti = 0; ti < 3; ++ti) {
          auto t = random_op(rng, kappa, 1 + ti % 2);
          auto c = witness(r, g, t, &cache);
          auto v = verify_certificate(c, t, &g, &cache);
          INFO(c.route);
          REQUIRE(v.valid);
        }
      }
    }
  }
}

TEST_CASE("large certificate terms store shared subterms once") {
  auto x = Term::projection(1, 0);
  auto t = Term::apply("f", {x, x});
  for (int i = 0; i < 40; ++i) {
    t = Term::apply("f", {t, t});
  }
  CHECK(term_tree_size(t, 1000) == 1000);
  json shared;
  auto j = to_json_shared(t, shared);
  CHECK(shared.size() == 40);
  CHECK(j["args"] == json::array({json{{"ref", 39}}, json{{"ref", 39}}}));
  auto back = term_from_json_shared(j, shared, 1);
  json again;
  CHECK(to_json_shared(back, again) == j);
  CHECK(again == shared);
  CHECK(back.depth() == 41);

  CHECK_THROWS_AS(term_from_json_shared(json{{"ref", 0}}, json::array(), 1), InputError);
  json fwd = json::array({json{{"apply", "f"}, {"args", json::array({json{{"ref", 1}}})}}});
  CHECK_THROWS_AS(term_from_json_shared(json{{"ref", 0}}, fwd, 1), InputError);
}
