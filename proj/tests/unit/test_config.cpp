#include "support.hpp"

#include "kgap/config.hpp"
#include "kgap/runner.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

using namespace kgap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = kgap::test::cache_dir() / name;
  std::ofstream(p) << text;
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

const char* kTorusEquilibrium = R"([grid]
n_per_axis = 5
v_max = 4.0

[domain]
mode = torus
n_cells = 3

[weight]
q = 0.0

[time]
dt = 0.05
t_end = 1.0

[initial]
kind = equilibrium
)";

const char* kSmallBox = R"([grid]
n_per_axis = 3
v_max = 2.0

[domain]
n_cells = 3

[time]
dt = 0.1
t_end = 1.0
fit_window = 0.5

[run]
seed = 12
)";

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig d = parse_config("");
  CHECK(d.n_per_axis == 9);
  CHECK(d.v_max == 6.0);
  CHECK(d.kernel.gamma == -1.0);
  CHECK(d.kappa == 0.05);
  CHECK(d.v_max_list == std::vector<double>{4.0, 6.0, 8.0});
  CHECK_NOTHROW(d.validate("evolve"));

  const RunConfig c = parse_config(kTorusEquilibrium);
  CHECK(c.mode == DomainMode::Torus3);
  CHECK(c.initial == InitialKind::Equilibrium);
  CHECK(c.weight.q == 0.0);
  CHECK(c.n_per_axis == 5);

  const RunConfig l = parse_config("[spectral]\nv_max_list = 2, 4\n[time]\nscheme = crank_nicolson\n");
  CHECK(l.v_max_list == std::vector<double>{2.0, 4.0});
  CHECK(l.scheme == CollisionScheme::CrankNicolson);

  CHECK_THROWS_AS(parse_config("[grid]\nn_per_axiss = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[gird]\nn_per_axis = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn_per_axis = five\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[domain]\nmode = sphere\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\n"), ConfigError);
  CHECK_THROWS_AS(load_config(kgap::test::cache_dir() / "no_such.ini"), ConfigError);
}

TEST_CASE("config validation") {
  auto invalid = [](const std::string& text, const std::string& sub = "evolve") {
    CHECK_THROWS_AS(parse_config(text).validate(sub), ConfigError);
  };
  invalid("[grid]\nn_per_axis = 8\n");
  invalid("[grid]\nv_max = 0\n");
  invalid("[kernel]\ngamma = 0.5\n");
  invalid("[kernel]\ngamma = -3.0\n");
  invalid("[weight]\nbeta = 0.9\n", "nonlinear");
  invalid("[domain]\nmode = torus\n[weight]\nq = 0\n", "nonlinear");
  invalid("[domain]\nmode = torus\n");
  invalid("[time]\ndt = 0\n");
  invalid("[spectral]\nv_max_list = 3\n");
  invalid("[landau]\ngamma_L = -1\n");
  CHECK_NOTHROW(parse_config("[kernel]\ngamma = 0.5\nhard_control = true\n").validate("sweep"));
  CHECK_NOTHROW(parse_config("[weight]\nbeta = 0.9\n").validate("evolve"));
}

TEST_CASE("config echo is json") {
  const json j = json::parse(config_to_json(parse_config(kTorusEquilibrium)));
  CHECK(j.is_object());
  CHECK(j.dump().find("torus") != std::string::npos);
}

TEST_CASE("subcommand exit codes") {
  std::ostringstream log;
  const fs::path out = kgap::test::cache_dir() / "runs";
  CHECK(subcommands().size() == 7);

  RunOptions bad;
  bad.config = write_file("bad.ini", "[grid]\nn_per_axis = 4\n");
  bad.out_dir = out / "bad";
  CHECK(run_subcommand("evolve", bad, log) == kExitConfig);
  CHECK(log.str().find("n_per_axis") != std::string::npos);

  RunOptions missing;
  missing.config = kgap::test::cache_dir() / "no_such.ini";
  missing.out_dir = out / "missing";
  CHECK(run_subcommand("evolve", missing, log) == kExitConfig);

  RunOptions ok;
  ok.config = write_file("box.ini", kSmallBox);
  ok.out_dir = out / "unknown";
  CHECK(run_subcommand("explode", ok, log) == kExitConfig);
}

TEST_CASE("evolve on the equilibrium keeps the energy") {
  std::ostringstream log;
  RunOptions o;
  o.config = write_file("torus_eq.ini", kTorusEquilibrium);
  o.out_dir = kgap::test::cache_dir() / "runs" / "torus_eq";
  o.threads = 1;
  REQUIRE(run_subcommand("evolve", o, log) == kExitOk);
  const json ev = read_json(*o.out_dir / "evolve.json");
  CHECK(ev["relative_drift"].get<double>() < 1e-10);
  const json m = read_json(*o.out_dir / "manifest.json");
  CHECK(m["status"] == "ok");
  CHECK(m["subcommand"] == "evolve");
  CHECK(m["outputs"].size() >= 2);
  CHECK(m["timings_seconds"].contains("total"));
}

TEST_CASE("single-threaded reruns are bit-identical") {
  std::ostringstream log;
  auto run = [&](const std::string& tag) {
    RunOptions o;
    o.config = write_file("box.ini", kSmallBox);
    o.out_dir = kgap::test::cache_dir() / "runs" / tag;
    o.threads = 1;
    // This short run trips the energy-inequality falsification; only the bytes matter here.
    REQUIRE(run_subcommand("evolve", o, log) == kExitFalsified);
    std::map<std::string, std::string> hashes;
    const json m = read_json(*o.out_dir / "manifest.json");
    for (const auto& f : m["outputs"])
      hashes[f["path"].get<std::string>()] = f["sha256"].get<std::string>();
    return hashes;
  };
  const auto a = run("repeat_a");
  const auto b = run("repeat_b");
  REQUIRE(a.count("trace.csv") == 1);
  CHECK(a == b);

  // A different seed changes the random initial data.
  RunOptions o;
  o.config = write_file("box.ini", kSmallBox);
  o.out_dir = kgap::test::cache_dir() / "runs" / "repeat_c";
  o.seed = 13;
  o.threads = 1;
  REQUIRE(run_subcommand("evolve", o, log) != kExitConfig);
  std::string c_hash;
  const json m = read_json(*o.out_dir / "manifest.json");
  for (const auto& f : m["outputs"])
    if (f["path"] == "trace.csv") c_hash = f["sha256"];
  CHECK(c_hash != a.at("trace.csv"));
}

TEST_CASE("selftest passes") {
  std::ostringstream log;
  RunOptions o;
  o.out_dir = kgap::test::cache_dir() / "runs" / "selftest";
  CHECK(run_subcommand("selftest", o, log) == kExitOk);
  const json s = read_json(*o.out_dir / "selftest.json");
  CHECK(s.dump().find("\"ok\":false") == std::string::npos);
}
