#include <catch_amalgamated.hpp>

#include <cloneforge/preserve.hpp>
#include <cloneforge/rosenberg.hpp>

#include "oracles.hpp"

using namespace cloneforge;

namespace {

using RelSet = std::set<std::vector<std::uint64_t>>;

RelSet as_set(std::vector<RblRelation> const& v) {
  RelSet s;
  for (auto const& r : v) {
    s.insert(r.relation.words());
  }
  return s;
}

// Every binary relation on kappa elements, as a bitmask over kappa^2 pairs.
template <typename F>
void for_each_binary(std::size_t kappa, F&& fn) {
  std::size_t n = kappa * kappa;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    fn(mask);
  }
}

bool rel(std::uint64_t mask, std::size_t kappa, std::size_t a, std::size_t b) {
  return (mask >> (a * kappa + b)) & 1;
}

Relation from_mask(std::uint64_t mask, std::size_t kappa) {
  return Relation::from_predicate(kappa, 2, [&](std::span<Elem const> t) {
    return rel(mask, kappa, t[0], t[1]);
  });
}

RelSet brute_bounded_orders(std::size_t kappa) {
  RelSet out;
  for_each_binary(kappa, [&](std::uint64_t m) {
    for (std::size_t a = 0; a < kappa; ++a) {
      if (!rel(m, kappa, a, a)) {
        return;
      }
      for (std::size_t b = 0; b < kappa; ++b) {
        if (a != b && rel(m, kappa, a, b) && rel(m, kappa, b, a)) {
          return;
        }
        for (std::size_t c = 0; c < kappa; ++c) {
          if (rel(m, kappa, a, b) && rel(m, kappa, b, c) && !rel(m, kappa, a, c)) {
            return;
          }
        }
      }
    }
    bool least = false, greatest = false;
    for (std::size_t a = 0; a < kappa; ++a) {
      bool lo = true, hi = true;
      for (std::size_t b = 0; b < kappa; ++b) {
        lo = lo && rel(m, kappa, a, b);
        hi = hi && rel(m, kappa, b, a);
      }
      least    = least || lo;
      greatest = greatest || hi;
    }
    if (least && greatest) {
      out.insert(from_mask(m, kappa).words());
    }
  });
  return out;
}

RelSet brute_equivalences(std::size_t kappa) {
  RelSet out;
  for (auto const& p : oracle::set_partitions(kappa)) {
    std::set<Elem> blocks(p.begin(), p.end());
    if (blocks.size() == 1 || blocks.size() == kappa) {
      continue;
    }
    out.insert(Relation::from_predicate(kappa, 2, [&](std::span<Elem const> t) {
                 return p[t[0]] == p[t[1]];
               }).words());
  }
  return out;
}

RelSet brute_prime_permutations(std::size_t kappa) {
  RelSet            out;
  std::vector<Elem> pi(kappa);
  std::iota(pi.begin(), pi.end(), Elem{0});
  do {
    std::set<std::size_t> lengths;
    std::vector<bool>     seen(kappa, false);
    for (std::size_t a = 0; a < kappa; ++a) {
      if (seen[a]) {
        continue;
      }
      std::size_t len = 0;
      for (std::size_t b = a; !seen[b]; b = pi[b]) {
        seen[b] = true;
        ++len;
      }
      lengths.insert(len);
    }
    if (lengths.size() == 1 && is_prime(*lengths.begin())) {
      out.insert(Relation::from_predicate(kappa, 2, [&](std::span<Elem const> t) {
                   return pi[t[0]] == t[1];
                 }).words());
    }
  } while (std::next_permutation(pi.begin(), pi.end()));
  return out;
}

// Binary central relations: reflexive, symmetric, center nonempty and proper.
RelSet brute_binary_central(std::size_t kappa) {
  RelSet out;
  for_each_binary(kappa, [&](std::uint64_t m) {
    for (std::size_t a = 0; a < kappa; ++a) {
      if (!rel(m, kappa, a, a)) {
        return;
      }
      for (std::size_t b = 0; b < kappa; ++b) {
        if (rel(m, kappa, a, b) != rel(m, kappa, b, a)) {
          return;
        }
      }
    }
    std::size_t center = 0;
    for (std::size_t a = 0; a < kappa; ++a) {
      bool all = true;
      for (std::size_t b = 0; b < kappa; ++b) {
        all = all && rel(m, kappa, a, b);
      }
      center += all;
    }
    if (center >= 1 && center < kappa) {
      out.insert(from_mask(m, kappa).words());
    }
  });
  return out;
}

RelSet brute_affine(std::size_t kappa, std::function<Elem(Elem, Elem)> add) {
  RelSet            out;
  std::vector<Elem> s(kappa);
  std::iota(s.begin(), s.end(), Elem{0});
  do {
    out.insert(Relation::from_predicate(kappa, 4, [&](std::span<Elem const> t) {
                 return add(s[t[0]], s[t[1]]) == add(s[t[2]], s[t[3]]);
               }).words());
  } while (std::next_permutation(s.begin(), s.end()));
  return out;
}

}  // namespace

TEST_CASE("iota examples") {
  CHECK(iota(2, 2).tuples() == std::vector<Point>{{0, 0}, {1, 1}});
  CHECK(iota(3, 3).size() == 21);
  CHECK(iota(3, 2).size() == 8);
}

TEST_CASE("omega examples") {
  CHECK(omega(3, 1) == iota(3, 3));
  CHECK(omega(4, 1) == iota(4, 4));
  auto w = omega(3, 2);
  CHECK(w.domain() == 9);
  // (0,0),(1,0),(2,1): coordinate 0 reads 0,1,2 which is rainbow
  Point t{static_cast<Elem>(0 + 3 * 0), static_cast<Elem>(1 + 3 * 0), static_cast<Elem>(2 + 3 * 1)};
  CHECK_FALSE(w.contains(t));
  CHECK(w.contains(Point{0, 0, 5}));
}

TEST_CASE("omega membership matches the coordinatewise definition") {
  for (std::size_t lambda = 1; lambda <= 2; ++lambda) {
    std::size_t n = lambda == 1 ? 3 : 9;
    auto        w = omega(3, lambda);
    for (auto const& t : oracle::all_tuples(n, 3)) {
      bool in = true;
      for (std::size_t r = 0; r < lambda; ++r) {
        std::size_t div = r == 0 ? 1 : 3;
        Elem        a = (t[0] / div) % 3, b = (t[1] / div) % 3, c = (t[2] / div) % 3;
        in        = in && (a == b || b == c || a == c);
      }
      REQUIRE(w.contains(Point(t.begin(), t.end())) == in);
    }
  }
}

TEST_CASE("center_of examples") {
  CHECK(center_of(Relation::full(3, 2)) == std::vector<Elem>{0, 1, 2});
  auto r = Relation::from_predicate(3, 2, [](std::span<Elem const> t) {
    return t[0] == t[1] || t[0] == 0 || t[1] == 0;
  });
  CHECK(center_of(r) == std::vector<Elem>{0});
  CHECK(center_of(iota(3, 3)).empty());
  CHECK(center_of(iota(2, 3)).empty());
  CHECK_THROWS_AS(center_of(Relation::from_tuples(2, 2, {{0, 1}})), PreconditionError);
}

TEST_CASE("classify examples") {
  auto ord = classify(Relation::from_tuples(2, 2, {{0, 0}, {0, 1}, {1, 1}}));
  REQUIRE(ord.size() == 1);
  CHECK(ord[0].kind == RblKind::BoundedOrder);
  CHECK(ord[0].least == 0);
  CHECK(ord[0].greatest == 1);

  auto neg = classify(Relation::from_tuples(2, 2, {{0, 1}, {1, 0}}));
  REQUIRE(neg.size() == 1);
  CHECK(neg[0].kind == RblKind::PrimePermutation);
  CHECK(neg[0].p == 2);

  auto aff = classify(Relation::from_predicate(2, 4, [](std::span<Elem const> t) {
    return (t[0] ^ t[1]) == (t[2] ^ t[3]);
  }));
  REQUIRE(aff.size() == 1);
  CHECK(aff[0].kind == RblKind::PrimeAffine);
  CHECK(aff[0].p == 2);
  CHECK(aff[0].m == 1);

  CHECK(classify(Relation::from_tuples(3, 2, {{0, 1}})).empty());
  CHECK(classify(Relation::full(3, 2)).empty());
}

TEST_CASE("enumerate_class examples") {
  CHECK(enumerate_class(2, RblKind::NontrivialEquivalence).empty());
  auto c1 = enumerate_class(2, RblKind::Central, 1);
  REQUIRE(c1.size() == 2);
  CHECK(c1[0].relation.tuples() == std::vector<Point>{{0}});
  CHECK(c1[1].relation.tuples() == std::vector<Point>{{1}});
  auto pp = enumerate_class(3, RblKind::PrimePermutation);
  REQUIRE(pp.size() == 2);
  for (auto const& r : pp) {
    CHECK(r.tag.p == 3);
    CHECK(r.relation.size() == 3);
  }
}

TEST_CASE("enumerations match brute-force definitions") {
  for (std::size_t kappa = 2; kappa <= 4; ++kappa) {
    CAPTURE(kappa);
    CHECK(as_set(enumerate_class(kappa, RblKind::BoundedOrder)) == brute_bounded_orders(kappa));
    CHECK(as_set(enumerate_class(kappa, RblKind::NontrivialEquivalence))
          == brute_equivalences(kappa));
    CHECK(as_set(enumerate_class(kappa, RblKind::PrimePermutation))
          == brute_prime_permutations(kappa));
    CHECK(as_set(enumerate_class(kappa, RblKind::Central, 2)) == brute_binary_central(kappa));
    auto unary = enumerate_class(kappa, RblKind::Central, 1);
    CHECK(unary.size() == (std::size_t{1} << kappa) - 2);
  }
  CHECK(as_set(enumerate_class(2, RblKind::PrimeAffine))
        == brute_affine(2, [](Elem a, Elem b) { return static_cast<Elem>(a ^ b); }));
  CHECK(as_set(enumerate_class(3, RblKind::PrimeAffine))
        == brute_affine(3, [](Elem a, Elem b) { return static_cast<Elem>((a + b) % 3); }));
  CHECK(as_set(enumerate_class(4, RblKind::PrimeAffine))
        == brute_affine(4, [](Elem a, Elem b) { return static_cast<Elem>(a ^ b); }));
  CHECK(enumerate_class(4, RblKind::PrimeAffine).size() == 1);
}

TEST_CASE("h-regular relations for small domains") {
  auto r3 = enumerate_class(3, RblKind::HRegular);
  REQUIRE(r3.size() == 1);
  CHECK(r3[0].relation == iota(3, 3));

  // κ=4: ι_4, and φ^{-1}(ι_3) for each surjection φ: 4 → 3 up to the relation
  RelSet expect{iota(4, 4).words()};
  for (auto const& phi : oracle::all_tuples(3, 4)) {
    if (std::set<Elem>(phi.begin(), phi.end()).size() != 3) {
      continue;
    }
    expect.insert(Relation::from_predicate(4, 3, [&](std::span<Elem const> t) {
                    Elem a = phi[t[0]], b = phi[t[1]], c = phi[t[2]];
                    return a == b || b == c || a == c;
                  }).words());
  }
  CHECK(as_set(enumerate_class(4, RblKind::HRegular)) == expect);
}

TEST_CASE("enumerated relations classify back to their tag") {
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_all_rbl(kappa)) {
      auto tags = classify(r.relation);
      bool hit  = std::any_of(tags.begin(), tags.end(),
                              [&](RblClass const& c) { return c.same_class(r.tag); });
      REQUIRE(hit);
    }
  }
}

TEST_CASE("h-regular relations are totally reflexive and totally symmetric") {
  for (std::size_t kappa = 3; kappa <= 5; ++kappa) {
    for (auto const& r : enumerate_class(kappa, RblKind::HRegular)) {
      REQUIRE(is_totally_reflexive(r.relation));
      REQUIRE(is_totally_symmetric(r.relation));
    }
  }
}

TEST_CASE("an order and its inverse have the same binary polymorphisms") {
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_class(kappa, RblKind::BoundedOrder)) {
      Relation inv(kappa, 2);
      for (auto const& t : r.relation.tuples()) {
        inv.insert(encode_point(kappa, Point{t[1], t[0]}));
      }
      auto a = pol_fragment({r.relation}, 2);
      auto b = pol_fragment({inv}, 2);
      REQUIRE(a.size() == b.size());
      for (auto const& f : a.members) {
        REQUIRE(b.contains(f));
      }
    }
  }
}

TEST_CASE("iota is regular only with lambda 1 and h equal to the domain") {
  for (std::size_t kappa = 3; kappa <= 4; ++kappa) {
    for (auto const& r : enumerate_class(kappa, RblKind::HRegular)) {
      if (r.relation.arity() == kappa && r.relation == iota(kappa, kappa)) {
        CHECK(r.tag.lambda == 1);
        CHECK(r.tag.h == kappa);
      }
      if (r.tag.lambda >= 2) {
        CHECK_FALSE(r.relation == iota(r.tag.h, kappa));
      }
    }
    auto tags = classify(iota(kappa, kappa));
    REQUIRE(tags.size() == 1);
    CHECK(tags[0].kind == RblKind::HRegular);
    CHECK(tags[0].lambda == 1);
  }
}

TEST_CASE("census counts") {
  CHECK(census(2).count == 5);
  CHECK(census(3).count == 18);
  CHECK(census(4).count == 82);
}

TEST_CASE("the Boolean census matches the five Post classes") {
  auto rep = census(2);
  REQUIRE(rep.representatives.size() == 5);
  using Pred = bool (*)(oracle::Table const&);
  std::vector<std::pair<Pred, std::size_t>> post{{oracle::monotone2, 6},
                                                 {oracle::self_dual2, 4},
                                                 {oracle::affine2, 8},
                                                 {oracle::zero_preserving2, 8},
                                                 {oracle::one_preserving2, 8}};
  std::set<std::set<std::vector<Elem>>> fragments;
  std::vector<bool>                     matched(post.size(), false);
  for (auto const& r : rep.representatives) {
    std::set<std::vector<Elem>> got;
    for (auto const& m : pol_fragment({r.relation}, 2).members) {
      got.emplace(m.table().begin(), m.table().end());
    }
    fragments.insert(got);
    for (std::size_t i = 0; i < post.size(); ++i) {
      std::set<std::vector<Elem>> expect;
      oracle::for_each_table(2, 2, [&](oracle::Table const& t) {
        if (post[i].first(t)) {
          expect.insert(t);
        }
      });
      REQUIRE(expect.size() == post[i].second);
      if (got == expect) {
        matched[i] = true;
      }
    }
  }
  CHECK(fragments.size() == 5);
  CHECK(std::all_of(matched.begin(), matched.end(), [](bool b) { return b; }));
}

TEST_CASE("census input checks") {
  CHECK_THROWS_AS(census(1), InputError);
  CHECK_THROWS_AS(census(9), BudgetExceeded);
}
