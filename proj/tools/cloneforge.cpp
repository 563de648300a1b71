// Command-line front end.  One JSON document on stdout per run.
//
// Exit codes: 0 success, 1 negative verdict, 2 input error, 3 budget exceeded.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include <cloneforge/algebra.hpp>
#include <cloneforge/clone.hpp>
#include <cloneforge/gf.hpp>
#include <cloneforge/rosenberg.hpp>
#include <cloneforge/witness.hpp>

namespace cf = cloneforge;
using cf::json;

namespace {

constexpr int kOk       = 0;
constexpr int kNegative = 1;
constexpr int kInput    = 2;
constexpr int kBudget   = 3;

void emit(json const& j) { std::cout << j.dump(2) << '\n'; }

cf::Index parse_budget(std::string const& text, char const* what) {
  try {
    std::size_t used = 0;
    auto        v    = std::stoull(text, &used);
    if (used != text.size() || v == 0) {
      throw std::invalid_argument(text);
    }
    return static_cast<cf::Index>(v);
  } catch (std::exception const&) {
    throw cf::InputError(std::string(what) + ": expected a positive integer, got '" + text + "'");
  }
}

json field_check(cf::Field const& F) {
  std::size_t q = F.q();
  bool        assoc = true, distrib = true, inverses = true, frobenius = true;
  for (cf::Elem a = 0; a < q; ++a) {
    if (a != 0 && F.mul(a, F.inv(a)) != 1) {
      inverses = false;
    }
    if (F.add(a, F.neg(a)) != 0) {
      inverses = false;
    }
    for (cf::Elem b = 0; b < q; ++b) {
      if (F.add(a, b) != F.add(b, a) || F.mul(a, b) != F.mul(b, a)) {
        assoc = false;
      }
      for (cf::Elem c = 0; c < q; ++c) {
        if (F.add(F.add(a, b), c) != F.add(a, F.add(b, c))
            || F.mul(F.mul(a, b), c) != F.mul(a, F.mul(b, c))) {
          assoc = false;
        }
        if (F.mul(a, F.add(b, c)) != F.add(F.mul(a, b), F.mul(a, c))) {
          distrib = false;
        }
      }
      for (std::size_t i = 0, pi = 1; i < F.m(); ++i, pi *= F.p()) {
        if (F.pow(F.add(a, b), pi) != F.add(F.pow(a, pi), F.pow(b, pi))) {
          frobenius = false;
        }
      }
    }
  }
  bool primitive = F.order(F.primitive()) == q - 1;
  json j;
  j["field"]  = cf::to_json(F.spec());
  j["q"]      = q;
  j["checks"] = {{"commutative_associative", assoc}, {"distributive", distrib},
                 {"inverses", inverses},             {"frobenius", frobenius},
                 {"primitive_order", F.order(F.primitive())}};
  j["ok"] = assoc && distrib && inverses && frobenius && primitive;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloneforge: finite clones, maximal clones and witness terms"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string budget_flag;
  unsigned    threads = 0;
  app.add_option("--table-budget", budget_flag, "largest table or bitset built (entries)");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");

  std::function<int()> run;

  // enumerate
  std::size_t domain = 0;
  std::string klass;
  auto*       sc = app.add_subcommand("enumerate", "list the relations of one or all classes");
  sc->add_option("--domain", domain)->required();
  sc->add_option("--class", klass, "BoundedOrder, PrimePermutation, NontrivialEquivalence, PrimeAffine, Central or HRegular");
  sc->callback([&] {
    run = [&] {
      auto rels = klass.empty() ? cf::enumerate_all_rbl(domain)
                                : cf::enumerate_class(domain, cf::parse_rbl_kind(klass));
      json out  = json::array();
      for (auto const& r : rels) {
        out.push_back(cf::to_json(r));
      }
      emit({{"domain", domain}, {"count", rels.size()}, {"relations", out}});
      return kOk;
    };
  });

  // classify
  std::string rel_path;
  sc = app.add_subcommand("classify", "recognize the classes a relation belongs to");
  sc->add_option("--rel", rel_path)->required();
  sc->callback([&] {
    run = [&] {
      auto rho     = cf::relation_from_json(cf::read_json_file(rel_path));
      auto classes = cf::classify(rho);
      json out     = json::array();
      for (auto const& c : classes) {
        out.push_back(cf::to_json(c));
      }
      emit({{"rbl", !classes.empty()}, {"classes", out}});
      return classes.empty() ? kNegative : kOk;
    };
  });

  // preserves
  std::string op_path;
  sc = app.add_subcommand("preserves", "test whether an operation preserves a relation");
  sc->add_option("--op", op_path)->required();
  sc->add_option("--rel", rel_path)->required();
  sc->callback([&] {
    run = [&] {
      auto f   = cf::operation_from_json(cf::read_json_file(op_path));
      auto rho = cf::relation_from_json(cf::read_json_file(rel_path));
      bool ok  = cf::preserves(f, rho);
      emit({{"preserves", ok}});
      return ok ? kOk : kNegative;
    };
  });

  // pol
  std::size_t arity = 0;
  sc = app.add_subcommand("pol", "all k-ary polymorphisms of a relation");
  sc->add_option("--rel", rel_path)->required();
  sc->add_option("--arity", arity)->required();
  sc->callback([&] {
    run = [&] {
      auto rho  = cf::relation_from_json(cf::read_json_file(rel_path));
      auto frag = cf::pol_fragment({rho}, arity);
      json ms   = json::array();
      for (auto const& f : frag.members) {
        ms.push_back(cf::to_json(f));
      }
      emit({{"arity", arity}, {"count", frag.size()}, {"members", ms}});
      return kOk;
    };
  });

  // closure
  std::string basis_path;
  bool        complete = false;
  sc = app.add_subcommand("closure", "k-ary part of the clone generated by a basis");
  sc->add_option("--basis", basis_path, "named operations, or an algebra file")->required();
  sc->add_option("--arity", arity)->required();
  sc->add_flag("--complete", complete, "only decide whether every k-ary operation is reached");
  sc->callback([&] {
    run = [&] {
      // either {"name": operation, ...} or an algebra file
      auto doc   = cf::read_json_file(basis_path);
      auto basis = doc.contains("ops") && doc.contains("domain")
                       ? cf::algebra_from_json(doc).basis()
                       : cf::basis_from_json(doc);
      if (complete) {
        bool ok = cf::is_complete_at(basis, arity);
        emit({{"arity", arity}, {"complete", ok}});
        return ok ? kOk : kNegative;
      }
      auto frag = cf::closure_fragment(basis, arity);
      json ms   = json::array();
      for (std::size_t i = 0; i < frag.size(); ++i) {
        ms.push_back({{"op", cf::to_json(frag.members[i])},
                      {"term", cf::to_json(frag.provenance[i])},
                      {"depth", frag.depth[i]}});
      }
      emit({{"arity", arity}, {"count", frag.size()}, {"members", ms}});
      return kOk;
    };
  });

  // census
  std::size_t sep_arity = 0;
  sc = app.add_subcommand("census", "count the maximal clones on a domain");
  sc->add_option("--domain", domain)->required();
  sc->add_option("--sep-arity", sep_arity, "arity used to separate relations");
  sc->callback([&] {
    run = [&] {
      auto rep = cf::census(domain, sep_arity == 0 ? std::nullopt
                                                   : std::optional<std::size_t>(sep_arity));
      emit(cf::to_json(rep));
      return kOk;
    };
  });

  // algebra-level probes
  std::string alg_path;
  auto        load_algebra = [&] { return cf::algebra_from_json(cf::read_json_file(alg_path)); };

  sc = app.add_subcommand("primal", "decide primality by scanning the Rosenberg relations");
  sc->add_option("--algebra", alg_path)->required();
  sc->callback([&] {
    run = [&] {
      auto rep = cf::is_primal_rosenberg(load_algebra());
      emit(cf::to_json(rep));
      return rep.primal ? kOk : kNegative;
    };
  });

  std::size_t depth = 0;
  sc = app.add_subcommand("malcev", "search for a Mal'cev term");
  sc->add_option("--algebra", alg_path)->required();
  sc->add_option("--depth", depth, "composition depth bound");
  sc->callback([&] {
    run = [&] {
      auto alg = load_algebra();
      auto res = depth == 0 ? cf::find_malcev(alg) : cf::find_malcev(alg, depth);
      emit({{"status", cf::to_string(res.status)},
            {"term", res.term ? cf::to_json(*res.term) : json(nullptr)},
            {"explored", res.explored}});
      switch (res.status) {
        case cf::Search::Found: return kOk;
        case cf::Search::Absent: return kNegative;
        default: return kBudget;
      }
    };
  });

  sc = app.add_subcommand("congruences", "congruence lattice, simplicity and permutability");
  sc->add_option("--algebra", alg_path)->required();
  sc->callback([&] {
    run = [&] {
      auto alg  = load_algebra();
      auto cons = cf::congruences(alg);
      json out  = json::array();
      for (auto const& c : cons) {
        out.push_back(cf::to_json(c));
      }
      auto perm = cf::congruence_permutability(alg);
      emit({{"count", cons.size()},
            {"congruences", out},
            {"simple", cf::is_simple(alg)},
            {"permutable", perm.permutable}});
      return kOk;
    };
  });

  std::size_t max_power = 0;
  sc = app.add_subcommand("spectrum", "sizes of subuniverses of small powers");
  sc->add_option("--algebra", alg_path)->required();
  sc->add_option("--max-power", max_power)->required();
  sc->callback([&] {
    run = [&] {
      auto rep = cf::almost_minimal_spectrum_check(load_algebra(), max_power);
      emit(cf::to_json(rep));
      return rep.ok ? kOk : kNegative;
    };
  });

  sc = app.add_subcommand("skew", "search for a skew congruence on the square");
  sc->add_option("--algebra", alg_path)->required();
  sc->callback([&] {
    run = [&] {
      auto rep = cf::skew_congruence_check(load_algebra());
      emit(cf::to_json(rep));
      return rep.skew ? kOk : kNegative;
    };
  });

  // witness
  std::string g_path, target_path, verify_path, out_path;
  sc = app.add_subcommand("witness", "express a target over Pol(rho) and a violator g");
  sc->add_option("--rel", rel_path);
  sc->add_option("--g", g_path);
  sc->add_option("--target", target_path)->required();
  sc->add_option("--verify", verify_path, "replay a certificate instead of building one");
  sc->add_option("--out", out_path, "also write the certificate to this file");
  sc->callback([&] {
    run = [&] {
      auto target = cf::operation_from_json(cf::read_json_file(target_path));
      std::optional<cf::Operation> g;
      if (!g_path.empty()) {
        g = cf::operation_from_json(cf::read_json_file(g_path));
      }
      if (!verify_path.empty()) {
        auto cert = cf::certificate_from_json(cf::read_json_file(verify_path));
        if (!rel_path.empty()
            && !(cf::relation_from_json(cf::read_json_file(rel_path)) == cert.relation)) {
          emit({{"valid", false}, {"reason", "certificate is for a different relation"}});
          return kNegative;
        }
        auto res = cf::verify_certificate(cert, target, g ? &*g : nullptr);
        emit({{"valid", res.valid}, {"sampled", res.sampled}, {"reason", res.reason}});
        return res.valid ? kOk : kNegative;
      }
      if (rel_path.empty() || !g) {
        throw cf::InputError("witness: --rel and --g are required unless --verify is given");
      }
      auto rho  = cf::relation_from_json(cf::read_json_file(rel_path));
      auto cert = cf::witness(rho, *g, target);
      json j    = cf::to_json(cert);
      if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out || !(out << j.dump(2) << '\n')) {
          throw cf::InputError("cannot write '" + out_path + "'");
        }
      }
      emit(j);
      return kOk;
    };
  });

  // field
  std::size_t p = 0, m = 1;
  bool        check = false;
  sc = app.add_subcommand("field", "canonical GF(p^m) and its arithmetic checks");
  sc->add_option("--p", p)->required();
  sc->add_option("--m", m);
  sc->add_flag("--check", check, "verify the field axioms on all elements");
  sc->callback([&] {
    run = [&] {
      auto F = cf::Field::make(p, m);
      if (!check) {
        emit({{"field", cf::to_json(F.spec())}, {"q", F.q()}});
        return kOk;
      }
      json j = field_check(F);
      emit(j);
      return j["ok"].get<bool>() ? kOk : kNegative;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (CLI::CallForHelp const& e) {
    return app.exit(e);
  } catch (CLI::ParseError const& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (char const* env = std::getenv("CLONEFORGE_BUDGET"); env != nullptr && *env != '\0') {
      cf::set_table_budget(parse_budget(env, "CLONEFORGE_BUDGET"));
    }
    if (!budget_flag.empty()) {
      cf::set_table_budget(parse_budget(budget_flag, "--table-budget"));
    }
    if (threads != 0) {
      cf::set_thread_count(threads);
    }
    return run();
  } catch (cf::BudgetExceeded const& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return kBudget;
  } catch (cf::InputError const& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (cf::PreconditionError const& e) {
    std::cerr << "precondition failed: " << e.what() << '\n';
    return kInput;
  } catch (std::exception const& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
