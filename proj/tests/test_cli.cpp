#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <cloneforge/serialize.hpp>

namespace fs = std::filesystem;
using cloneforge::json;

namespace {

struct Run {
  int         code = -1;
  std::string out;
  json        doc;
};

class Workdir {
 public:
  Workdir() {
    dir_ = fs::temp_directory_path() / ("cloneforge-cli-" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  ~Workdir() { fs::remove_all(dir_); }

  std::string write(std::string const& name, json const& j) const {
    auto p = dir_ / name;
    std::ofstream(p) << j.dump();
    return p.string();
  }
  std::string write_text(std::string const& name, std::string const& s) const {
    auto p = dir_ / name;
    std::ofstream(p) << s;
    return p.string();
  }
  std::string path(std::string const& name) const { return (dir_ / name).string(); }

 private:
  fs::path dir_;
};

Workdir const& work() {
  static Workdir w;
  return w;
}

Run cli(std::string const& args, std::string const& env = "") {
  auto        out = work().path("stdout.txt");
  std::string cmd = env + (env.empty() ? "" : " ") + "\"" CLONEFORGE_CLI "\" " + args + " > \"" + out
                  + "\" 2>/dev/null";
  int  status = std::system(cmd.c_str());
  Run  r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream     in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  if (!r.out.empty()) {
    r.doc = json::parse(r.out, nullptr, false);
  }
  return r;
}

json op(std::size_t kappa, std::size_t n, std::vector<int> table) {
  return json{{"domain", kappa}, {"arity", n}, {"table", table}};
}

json rel(std::size_t kappa, std::size_t h, std::vector<std::vector<int>> tuples) {
  return json{{"domain", kappa}, {"arity", h}, {"tuples", tuples}};
}

std::string bool_order() { return work().write("order.json", rel(2, 2, {{0, 0}, {0, 1}, {1, 1}})); }

}  // namespace

TEST_CASE("census through the CLI") {
  auto r = cli("census --domain 2");
  REQUIRE(r.code == 0);
  CHECK(r.doc["count"] == 5);
  CHECK(cli("census --domain 3").doc["count"] == 18);
  CHECK(cli("census --domain 9").code == 3);
  CHECK(cli("census --domain 1").code == 2);
}

TEST_CASE("enumerate and classify") {
  auto r = cli("enumerate --domain 3 --class PrimePermutation");
  REQUIRE(r.code == 0);
  CHECK(r.doc["count"] == 2);
  CHECK(cli("enumerate --domain 3 --class Nonsense").code == 2);

  auto c = cli("classify --rel " + bool_order());
  REQUIRE(c.code == 0);
  CHECK(c.doc["rbl"] == true);
  auto none = cli("classify --rel " + work().write("plain.json", rel(3, 2, {{0, 1}})));
  CHECK(none.code == 1);
  CHECK(none.doc["rbl"] == false);
}

TEST_CASE("preserves and pol") {
  auto o   = bool_order();
  auto yes = cli("preserves --op " + work().write("and.json", op(2, 2, {0, 0, 0, 1})) + " --rel " + o);
  CHECK(yes.code == 0);
  CHECK(yes.doc["preserves"] == true);
  auto no = cli("preserves --op " + work().write("nand.json", op(2, 2, {1, 1, 1, 0})) + " --rel " + o);
  CHECK(no.doc["preserves"] == false);

  auto pol = cli("pol --rel " + o + " --arity 2");
  REQUIRE(pol.code == 0);
  CHECK(pol.doc["count"] == 6);
}

TEST_CASE("closure") {
  json basis = {{"domain", 2},
                {"ops", {{"and", op(2, 2, {0, 0, 0, 1})}, {"or", op(2, 2, {0, 1, 1, 1})}}}};
  auto b = work().write("lattice.json", basis);
  auto r = cli("closure --basis " + b + " --arity 2");
  REQUIRE(r.code == 0);
  CHECK(r.doc["count"] == 4);
  CHECK(r.doc["members"][0]["term"].contains("proj"));
  CHECK(cli("closure --basis " + b + " --arity 2 --complete").doc["complete"] == false);
  json sheffer = {{"domain", 2}, {"ops", {{"nand", op(2, 2, {1, 1, 1, 0})}}}};
  CHECK(cli("closure --basis " + work().write("sheffer.json", sheffer) + " --arity 2 --complete")
            .doc["complete"]
        == true);
}

TEST_CASE("algebra probes") {
  json nand = {{"domain", 2}, {"ops", {{"nand", op(2, 2, {1, 1, 1, 0})}}}};
  auto n    = work().write("nand-alg.json", nand);
  auto p    = cli("primal --algebra " + n);
  CHECK(p.code == 0);
  CHECK(p.doc["primal"] == true);
  CHECK(p.doc["certificate"] == "no RBL relation preserved");

  json z3 = {{"domain", 3}, {"ops", {{"s", op(3, 1, {1, 2, 0})}}}};
  auto z  = cli("primal --algebra " + work().write("z3.json", z3));
  CHECK(z.code == 1);
  CHECK(z.doc["primal"] == false);

  CHECK(cli("skew --algebra " + n).code == 1);
  json xr = {{"domain", 2}, {"ops", {{"xor", op(2, 2, {0, 1, 1, 0})}}}};
  auto xp = work().write("xor.json", xr);
  CHECK(cli("skew --algebra " + xp).code == 0);
  CHECK(cli("spectrum --algebra " + n + " --max-power 2").code == 0);

  auto c = cli("congruences --algebra " + n);
  CHECK(c.doc["count"] == 2);
  CHECK(c.doc["simple"] == true);

  json mal = {{"domain", 3}, {"ops", {{"p", op(3, 3, [] {
                                        std::vector<int> t;
                                        for (int x = 0; x < 3; ++x)
                                          for (int y = 0; y < 3; ++y)
                                            for (int z = 0; z < 3; ++z) t.push_back((x + 2 * y + z) % 3);
                                        return t;
                                      }())}}}};
  auto m = cli("malcev --algebra " + work().write("malcev.json", mal));
  CHECK(m.code == 0);
  CHECK(m.doc["status"] == "found");
}

TEST_CASE("witness build and verify round trip") {
  auto o = bool_order();
  auto g = work().write("neg.json", op(2, 1, {1, 0}));
  auto t = work().write("target.json", op(2, 2, {1, 1, 1, 0}));
  auto c = work().path("cert.json");
  auto r = cli("witness --rel " + o + " --g " + g + " --target " + t + " --out " + c);
  REQUIRE(r.code == 0);
  CHECK(r.doc["route"] == "order");
  CHECK(fs::exists(c));

  auto v = cli("witness --verify " + c + " --target " + t + " --g " + g);
  CHECK(v.code == 0);
  CHECK(v.doc["valid"] == true);

  auto other = work().write("other.json", op(2, 2, {0, 1, 1, 0}));
  auto bad   = cli("witness --verify " + c + " --target " + other);
  CHECK(bad.code == 1);
  CHECK(bad.doc["valid"] == false);

  // a relation that g does not violate
  auto id = work().write("id.json", op(2, 1, {0, 1}));
  CHECK(cli("witness --rel " + o + " --g " + id + " --target " + t).code == 2);
  CHECK(cli("witness --target " + t).code == 2);
}

TEST_CASE("field") {
  auto f = cli("field --p 2 --m 2");
  REQUIRE(f.code == 0);
  CHECK(f.doc["q"] == 4);
  CHECK(f.doc["field"]["modulus"] == json::array({1, 1, 1}));
  auto chk = cli("field --p 3 --m 2 --check");
  CHECK(chk.code == 0);
  CHECK(chk.doc["ok"] == true);
  CHECK(cli("field --p 4").code == 2);
}

TEST_CASE("errors and exit codes") {
  CHECK(cli("").code == 2);
  CHECK(cli("nope").code == 2);
  CHECK(cli("classify --rel /nonexistent/file.json").code == 2);
  CHECK(cli("classify --rel " + work().write_text("bad.json", "{\"domain\": ")).code == 2);
  CHECK(cli("preserves --op " + work().write("op3.json", op(3, 1, {0, 1, 2})) + " --rel " + bool_order())
            .code
        == 2);
}

TEST_CASE("table budget from flag and environment") {
  auto full = work().write("full.json", rel(3, 2, [] {
    std::vector<std::vector<int>> t;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) t.push_back({a, b});
    return t;
  }()));
  CHECK(cli("pol --rel " + full + " --arity 2").code == 0);
  CHECK(cli("--table-budget 100 pol --rel " + full + " --arity 2").code == 3);
  CHECK(cli("pol --rel " + full + " --arity 2", "CLONEFORGE_BUDGET=100").code == 3);
  // the flag wins over the environment
  CHECK(cli("--table-budget 10000000 pol --rel " + full + " --arity 2", "CLONEFORGE_BUDGET=100").code
        == 0);
  CHECK(cli("--table-budget abc census --domain 2").code == 2);
}

TEST_CASE("output is deterministic") {
  auto a = cli("census --domain 3");
  auto b = cli("census --domain 3");
  CHECK(a.out == b.out);
  auto o  = bool_order();
  auto g  = work().write("neg.json", op(2, 1, {1, 0}));
  auto t  = work().write("target.json", op(2, 2, {1, 1, 1, 0}));
  auto w1 = cli("witness --rel " + o + " --g " + g + " --target " + t);
  auto w2 = cli("witness --rel " + o + " --g " + g + " --target " + t + " --threads 1");
  CHECK(w1.out == w2.out);
}

TEST_CASE("closure accepts a bare basis map") {
  json basis = {{"and", op(2, 2, {0, 0, 0, 1})}, {"or", op(2, 2, {0, 1, 1, 1})}};
  auto r     = cli("closure --basis " + work().write("map.json", basis) + " --arity 2");
  REQUIRE(r.code == 0);
  CHECK(r.doc["count"] == 4);
}
