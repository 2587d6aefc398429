#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "conclab/cli.hpp"

using namespace conclab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path data_dir() {
  const char* d = std::getenv("CONCLAB_TEST_DATA");
  return d ? fs::path(d) : fs::path("tests/data");
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("conclab_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "conclab");
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("validate") {
  auto dir = scratch("validate");
  auto ok = run({"validate", "--scenario", "stable-cycle", "--out", dir.string()});
  CHECK(ok.code == 0);
  CHECK(read_json(dir / "validation.json")["valid"] == true);

  auto bad = run({"validate", "--scenario", (data_dir() / "rational_torus.json").string(), "--out",
                  dir.string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("irrationality check failed") != std::string::npos);

  auto parse = run({"validate", "--config", (data_dir() / "malformed.json").string(), "--out",
                    dir.string()});
  CHECK(parse.code == 2);
  CHECK(parse.err.find("line") != std::string::npos);
}

TEST_CASE("predict") {
  auto dir = scratch("predict");
  CHECK(run({"predict", "--scenario", "irrational-torus", "--out", dir.string()}).code == 0);
  auto t = read_json(dir / "prediction.json");
  CHECK(t["mu2"].get<double>() == doctest::Approx(0.0).epsilon(1e-15));

  CHECK(run({"predict", "--scenario", "stable-point", "--out", dir.string()}).code == 0);
  auto p = read_json(dir / "prediction.json");
  int selected = 0;
  for (const auto& c : p["components"]) {
    if (c["selected"] == true) {
      ++selected;
      CHECK(c["coefficient"].get<double>() == doctest::Approx(1.0));
    }
  }
  CHECK(selected == 1);

  CHECK(run({"predict", "--scenario", "mixed", "--c", "0", "--out", dir.string()}).code == 0);
  CHECK(read_json(dir / "prediction.json")["tie"] == true);
}

TEST_CASE("run writes a complete, reproducible output directory") {
  auto dir = scratch("run");
  auto cfg = (data_dir() / "tiny_run.json").string();
  auto t0 = std::chrono::steady_clock::now();
  auto r = run({"run", "--config", cfg, "--out", dir.string()});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(secs < 30.0);
  for (const char* f : {"prediction.json", "pairings.csv", "pairings_sweep.csv", "widths.csv",
                        "continuation.csv", "summary.json", "manifest.json", "validation.json"})
    CHECK_MESSAGE(fs::exists(dir / f), f);
  CHECK(slurp(dir / "pairings.csv").rfind("h_id,empirical,predicted,abs_err\n", 0) == 0);
  auto manifest = read_json(dir / "manifest.json");
  CHECK(manifest["files"].contains("summary.json"));
  CHECK(manifest["files"]["summary.json"].get<std::string>().size() == 64);

  auto dir2 = scratch("run2");
  CHECK(run({"run", "--config", cfg, "--out", dir2.string(), "--parallel", "2"}).code == 0);
  for (const auto& e : fs::directory_iterator(dir))
    CHECK_MESSAGE(slurp(e.path()) == slurp(dir2 / e.path().filename()), e.path().filename());
}

TEST_CASE("output directory handling") {
  auto base = scratch("outdir");
  auto nested = base / "a" / "b";
  CHECK(run({"predict", "--scenario", "stable-point", "--out", nested.string()}).code == 0);
  CHECK(fs::exists(nested / "prediction.json"));

  std::ofstream(base / "plain") << "x";
  auto r = run({"predict", "--scenario", "stable-point", "--out", (base / "plain" / "sub").string()});
  CHECK(r.code == 3);
}

TEST_CASE("transport") {
  auto dir = scratch("transport");
  auto ok = run({"transport", "--scenario", (data_dir() / "golden_flat.json").string(), "--out",
                 dir.string()});
  CHECK_MESSAGE(ok.code == 0, ok.err);
  auto t = read_json(dir / "transport.json");
  REQUIRE(t["tori"].size() == 1);
  CHECK(t["tori"][0]["residual"].get<double>() <= 1e-10);
  CHECK(t["tori"][0]["mu2"].get<double>() == doctest::Approx(0.25));

  auto bad = run({"transport", "--scenario", (data_dir() / "rational_torus.json").string(),
                  "--out", dir.string()});
  CHECK(bad.code == 4);
  CHECK(bad.err.find("diophantine") != std::string::npos);

  CHECK(run({"transport", "--scenario", "stable-point", "--out", dir.string()}).code == 2);
}

TEST_CASE("sweep and argument errors") {
  auto dir = scratch("sweep");
  CHECK(run({"sweep", "--scenario", "stable-point", "--n", "64", "--eps", "0.2", "0.1", "--out",
             dir.string()})
            .code == 0);
  auto csv = slurp(dir / "sweep.csv");
  CHECK(csv.rfind("epsilon,n,lambda,residual,iterations\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

  CHECK(run({"sweep", "--scenario", "stable-point", "--n", "16", "--eps", "0.01", "--scheme",
             "centered", "--out", dir.string()})
            .code == 4);
  CHECK(run({"sweep", "--scenario", "stable-point", "--n", "48", "--out", dir.string()}).code == 2);
  CHECK(run({"sweep", "--scenario", "no-such-builtin", "--out", dir.string()}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"sweep", "--eps", "0.1", "0.2", "--out", dir.string()}).code == 2);
  auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(cli::version()) != std::string::npos);
}

TEST_CASE("config parsing") {
  auto cfg = cli::config_from_json(json::parse(R"({"scenario": "mixed", "gap": 0.0,
      "epsilons": [0.1, 0.05, 0.025], "n": 64, "solver": {"method": "power"}})"));
  CHECK(cfg.scenario == "mixed");
  CHECK(cfg.gap == 0.0);
  CHECK(cfg.n == 64);
  CHECK(cfg.method == SolverMethod::Power);
  CHECK_THROWS_AS(cli::config_from_json(json::parse(R"({"sceanrio": "mixed"})")), cli::CliError);
  cfg.n = 100;
  CHECK_THROWS_AS(cli::check_config(cfg), cli::CliError);

  auto s = builtin_scenario("mixed");
  auto back = cli::scenario_from_json(cli::scenario_to_json(s));
  CHECK(back.components().size() == s.components().size());
  std::vector<double> x{0.3, 1.2};
  CHECK(back.c().eval(x) == doctest::Approx(s.c().eval(x)));
}
