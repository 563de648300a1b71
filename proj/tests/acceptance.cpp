// Runs every acceptance criterion twice and prints one PASS/FAIL line each.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <cloneforge/algebra.hpp>
#include <cloneforge/serialize.hpp>
#include <cloneforge/witness.hpp>

#include "oracles.hpp"

using namespace cloneforge;

namespace {

struct Outcome {
  bool        pass = false;
  std::string detail;
};

using Check = std::function<Outcome()>;

Operation random_op(std::mt19937_64& rng, std::size_t kappa, std::size_t n) {
  return Operation::from_table(kappa, n, oracle::random_table(rng, kappa, n));
}

Outcome census_counts() {
  std::ostringstream os;
  bool               ok = true;
  std::size_t const  expect[] = {5, 18, 82};
  for (std::size_t kappa = 2; kappa <= 4; ++kappa) {
    auto n = census(kappa).count;
    ok     = ok && n == expect[kappa - 2];
    os << (kappa > 2 ? " " : "") << "eta_" << kappa << "=" << n;
  }
  return {ok, os.str()};
}

Outcome post_lattice() {
  using Pred = bool (*)(oracle::Table const&);
  std::vector<std::pair<std::string, Pred>> classes{{"monotone", oracle::monotone2},
                                                    {"self-dual", oracle::self_dual2},
                                                    {"affine", oracle::affine2},
                                                    {"0-preserving", oracle::zero_preserving2},
                                                    {"1-preserving", oracle::one_preserving2}};
  std::set<std::set<std::vector<Elem>>> frags;
  for (auto const& r : census(2).representatives) {
    std::set<std::vector<Elem>> s;
    for (auto const& m : pol_fragment({r.relation}, 2).members) {
      s.emplace(m.table().begin(), m.table().end());
    }
    frags.insert(std::move(s));
  }
  std::ostringstream os;
  bool               ok = frags.size() == 5;
  for (auto const& [name, pred] : classes) {
    std::set<std::vector<Elem>> expect;
    oracle::for_each_table(2, 2, [&](oracle::Table const& t) {
      if (pred(t)) {
        expect.insert(t);
      }
    });
    bool hit = frags.contains(expect);
    ok       = ok && hit;
    os << name << "=" << expect.size() << (hit ? "" : "(missing)") << " ";
  }
  std::string s = os.str();
  s.pop_back();
  return {ok, s};
}

Outcome primality() {
  Algebra nand(2, {{"nand", Operation::from_table(2, 2, {1, 1, 1, 0})}});
  Algebra mx(3, {{"f", Operation::tabulate(3, 2, [](std::span<Elem const> x) {
                   return static_cast<Elem>((std::max(x[0], x[1]) + 1) % 3);
                 })}});
  Algebra z3(3, {{"s", Operation::unary(3, {1, 2, 0})}});
  auto    a = is_primal_rosenberg(nand);
  auto    b = is_primal_rosenberg(mx);
  auto    c = is_primal_rosenberg(z3);
  auto    cycle = Relation::from_tuples(3, 2, {{0, 1}, {1, 2}, {2, 0}});
  bool    ok = a.primal && !a.preserved && b.primal && !b.preserved && !c.primal && c.preserved
            && c.preserved->relation == cycle;
  std::ostringstream os;
  os << "NAND primal=" << a.primal << " max+1 primal=" << b.primal
     << " Z3+1 primal=" << c.primal << " certificate="
     << (c.preserved ? to_json(c.preserved->relation)["tuples"].dump() : "none");
  return {ok, os.str()};
}

Outcome affine_biconditional() {
  auto        F   = Field::make(3, 1);
  auto        rho = affine_relation(F);
  std::size_t checked = 0, agree = 0, affine = 0;
  for (std::size_t n = 1; n <= 2; ++n) {
    oracle::for_each_table(3, n, [&](oracle::Table const& t) {
      auto f = Operation::from_table(3, n, t);
      bool a = is_affine_form(F, f).has_value();
      agree += preserves(f, rho) == a;
      affine += a;
      ++checked;
    });
  }
  std::ostringstream os;
  os << checked << " functions, " << agree << " agree, " << affine << " affine";
  return {checked == 27 + 19683 && agree == checked, os.str()};
}

Outcome multiplication_recovery() {
  std::mt19937_64    rng(2024);
  std::ostringstream os;
  bool               ok = true;
  for (auto [p, m, count] : std::vector<std::array<std::size_t, 3>>{{3, 1, 50}, {2, 2, 10}}) {
    auto        F   = Field::make(p, m);
    auto        rho = affine_relation(F);
    auto        mul = Operation::tabulate(F.q(), 2, [&](std::span<Elem const> x) {
      return F.mul(x[0], x[1]);
    });
    std::size_t good = 0;
    for (std::size_t i = 0; i < count;) {
      auto g = random_op(rng, F.q(), 2);
      if (preserves(g, rho)) {
        continue;
      }
      ++i;
      auto  st = multiplication_from(F, g);
      Basis b  = st.c.basis;
      b.try_emplace(kViolatorName, g);
      good += materialize(st.c.term, b, F.q()) == mul;
    }
    ok = ok && good == count;
    os << (p == 3 ? "" : " ") << "GF(" << F.q() << ") " << good << "/" << count;
  }
  return {ok, os.str()};
}

Outcome witness_battery() {
  std::mt19937_64                            rng(7);
  std::uniform_int_distribution<std::size_t> ar(1, 3), tar(1, 2);
  std::size_t                                total = 0, valid = 0, sampled = 0;
  std::map<std::string, std::size_t>         routes;
  std::string                                first_bad;
  for (std::size_t kappa = 2; kappa <= 3; ++kappa) {
    for (auto const& r : enumerate_all_rbl(kappa)) {
      PreservationCache cache(r.relation);
      for (int gi = 0; gi < 20; ++gi) {
        Operation g = random_op(rng, kappa, ar(rng));
        while (preserves(g, r.relation)) {
          g = random_op(rng, kappa, ar(rng));
        }
        for (int ti = 0; ti < 10; ++ti) {
          auto t = random_op(rng, kappa, tar(rng));
          ++total;
          try {
            auto c = witness(r, g, t, &cache);
            auto v = verify_certificate(c, t, &g, &cache);
            ++routes[c.route];
            valid += v.valid;
            sampled += v.sampled;
            if (!v.valid && first_bad.empty()) {
              first_bad = c.route + ": " + v.reason;
            }
          } catch (std::exception const& e) {
            if (first_bad.empty()) {
              first_bad = e.what();
            }
          }
        }
      }
    }
  }
  std::ostringstream os;
  os << valid << "/" << total << " certificates valid";
  if (sampled > 0) {
    os << " (" << sampled << " with sampled membership)";
  }
  os << ";";
  for (auto const& [route, n] : routes) {
    os << " " << route << "=" << n;
  }
  if (!first_bad.empty()) {
    os << "; first failure: " << first_bad;
  }
  return {valid == total, os.str()};
}

Outcome slupecki() {
  std::mt19937_64 rng(11);
  auto            mx = Operation::tabulate(3, 2, [](std::span<Elem const> x) {
    return std::max(x[0], x[1]);
  });
  std::size_t fs = 0, max_ok = 0, targets = 0, target_ok = 0;
  while (fs < 20) {
    auto f = random_op(rng, 3, 2);
    if (!is_irreducible(f) || range_of(f).size() != 3) {
      continue;
    }
    ++fs;
    auto sl = slupecki_construct_max(f, "f");
    max_ok += materialize(sl.term, sl.basis, 3) == mx;
    for (int i = 0; i < 10; ++i) {
      auto  t     = random_op(rng, 3, 2);
      auto  cm    = complete_from_max(t, "max");
      Term  term  = substitute(cm.term, {{"max", sl.term}});
      Basis basis = sl.basis;
      for (auto const& [name, op] : cm.basis) {
        if (name != "max") {
          basis.try_emplace(name, op);
        }
      }
      ++targets;
      target_ok += materialize(term, basis, 3) == t;
    }
  }
  std::ostringstream os;
  os << "max " << max_ok << "/" << fs << ", targets " << target_ok << "/" << targets;
  return {max_ok == fs && target_ok == targets, os.str()};
}

Outcome malcev() {
  auto p = Operation::tabulate(3, 3, [](std::span<Elem const> x) {
    return static_cast<Elem>((x[0] + 3 - x[1] + x[2]) % 3);
  });
  Algebra z3(3, {{"p", p}});
  auto    r  = find_malcev(z3);
  bool    id = false;
  if (r.status == Search::Found) {
    auto t = materialize(*r.term, z3.basis(), 3);
    id     = true;
    for (Elem x = 0; x < 3; ++x) {
      for (Elem z = 0; z < 3; ++z) {
        id = id && t({x, x, z}) == z && t({z, x, x}) == z;
      }
    }
  }
  Algebra lat(2, {{"and", Operation::from_table(2, 2, {0, 0, 0, 1})},
                  {"or", Operation::from_table(2, 2, {0, 1, 1, 1})},
                  {"zero", Operation::constant(2, 0, 0)},
                  {"one", Operation::constant(2, 0, 1)}});
  auto r2 = find_malcev(lat);
  std::ostringstream os;
  os << "Z3 " << to_string(r.status) << " (identities " << (id ? "hold" : "fail") << " on 9 pairs), "
     << "lattice " << to_string(r2.status) << " after " << r2.explored << " ternary members";
  return {r.status == Search::Found && id && r2.status == Search::Absent, os.str()};
}

Outcome skew() {
  Algebra xr(2, {{"xor", Operation::from_table(2, 2, {0, 1, 1, 0})}});
  Algebra nand(2, {{"nand", Operation::from_table(2, 2, {1, 1, 1, 0})}});
  auto    a = skew_congruence_check(xr);
  auto    b = skew_congruence_check(nand);
  std::ostringstream os;
  os << "xor skew=" << (a.skew ? to_json(*a.skew)["blocks"].dump() : "none") << " NAND skew="
     << (b.skew ? to_json(*b.skew)["blocks"].dump() : "none");
  return {a.skew.has_value() && !b.skew.has_value(), os.str()};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Check>> criteria{
      {"census reproduction", census_counts},
      {"Post lattice cross-check", post_lattice},
      {"primality", primality},
      {"affine biconditional over GF(3)", affine_biconditional},
      {"multiplication recovery", multiplication_recovery},
      {"witness soundness battery", witness_battery},
      {"Slupecki constructive check", slupecki},
      {"Mal'cev detection", malcev},
      {"spectrum and skew probes", skew},
  };
  std::vector<Outcome> first, second;
  for (int round = 0; round < 2; ++round) {
    for (auto const& [name, check] : criteria) {
      auto    start = std::chrono::steady_clock::now();
      Outcome o;
      try {
        o = check();
      } catch (std::exception const& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
      std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
      std::cerr << "round " << round + 1 << ": " << name << " took " << secs.count() << " s\n";
      (round == 0 ? first : second).push_back(std::move(o));
    }
  }
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    bool pass = first[i].pass && second[i].pass;
    all       = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << criteria[i].first << ": "
              << first[i].detail << '\n';
  }
  bool same = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    same = same && first[i].pass == second[i].pass && first[i].detail == second[i].detail;
  }
  all = all && same;
  std::cout << (same ? "PASS" : "FAIL") << "  10. determinism: "
            << (same ? "both runs identical" : "runs differ") << '\n';
  return all ? 0 : 1;
}
