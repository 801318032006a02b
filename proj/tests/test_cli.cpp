#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <json.hpp>

// End-to-end tests of the installed binary: spawn it, inspect exit codes and
// artifacts. BULLBEAR_CLI_PATH and BULLBEAR_CONFIG_DIR come from the build.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / "bullbear_cli_tests" / tag;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args, const fs::path& dir, const std::string& env_prefix = "") {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = env_prefix + std::string(BULLBEAR_CLI_PATH) + " " + args + " > " +
                          out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string config_path(const char* name) { return std::string(BULLBEAR_CONFIG_DIR) + "/" + name; }

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

// surface.csv -> numeric rows, header skipped
std::vector<std::vector<double>> read_csv_rows(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      row.push_back(std::stod(line.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json merton_document() { return json::parse(slurp(config_path("merton.json"))); }

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream f(p);
  f << doc.dump(2);
  return p;
}

}  // namespace

TEST_CASE("a config missing the risk-aversion key is refused naming it") {
  const auto dir = scratch("missing_kappa");
  auto doc = merton_document();
  doc["utility"].erase("kappa");
  const auto cfg = write_config(dir, doc);
  const auto r = run_cli("solve --config " + cfg.string() + " --out-dir " + (dir / "out").string(), dir);
  REQUIRE(r.code == 1);
  REQUIRE(r.err.find("utility.kappa") != std::string::npos);

  const auto missing = run_cli("solve --config /nonexistent.json --out-dir " + (dir / "o2").string(), dir);
  REQUIRE(missing.code == 1);
}

TEST_CASE("the degenerate-market surface is constant across beliefs") {
  const auto dir = scratch("merton_solve");
  const auto r = run_cli("solve --config " + config_path("merton.json") + " --grid-nx 51 --grid-nt 200 " +
                             "--out-dir " + (dir / "out").string(),
                         dir);
  REQUIRE(r.code == 0);
  const auto rows = read_csv_rows(dir / "out" / "surface.csv");
  REQUIRE(rows.size() == 201);
  for (const auto& row : rows) {
    REQUIRE(row.size() == 52);  // t plus 51 belief nodes
    double lo = row[1], hi = row[1];
    for (std::size_t j = 1; j < row.size(); ++j) {
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    REQUIRE(hi - lo <= 1e-12);
  }
}

TEST_CASE("identical invocations produce byte-identical artifacts") {
  const auto dir = scratch("deterministic");
  const std::string common = "solve --config " + config_path("merton.json") + " --grid-nx 51 --grid-nt 200";
  REQUIRE(run_cli(common + " --out-dir " + (dir / "a").string(), dir).code == 0);
  REQUIRE(run_cli(common + " --out-dir " + (dir / "b").string(), dir).code == 0);
  REQUIRE(slurp(dir / "a" / "surface.csv") == slurp(dir / "b" / "surface.csv"));
  REQUIRE(slurp(dir / "a" / "bounds.json") == slurp(dir / "b" / "bounds.json"));
  REQUIRE(!slurp(dir / "a" / "surface.csv").empty());
}

TEST_CASE("the manifest lists every artifact and all of them exist") {
  const auto dir = scratch("manifest");
  const auto out = dir / "out";
  REQUIRE(run_cli("solve --config " + config_path("merton.json") +
                      " --grid-nx 51 --grid-nt 200 --out-dir " + out.string(),
                  dir)
              .code == 0);
  const json m = load_json(out / "manifest.json");
  REQUIRE(m["subcommand"] == "solve");
  REQUIRE(m["config"]["market"]["sigma"] == 0.2);
  REQUIRE(m["config"]["grid"]["nx"] == 51);  // echo reflects the override
  REQUIRE(m["outputs"].size() >= 2);
  for (const auto& name : m["outputs"]) REQUIRE(fs::exists(out / name.get<std::string>()));
  REQUIRE(m["timings_ms"].contains("solve"));
}

TEST_CASE("a time grid too coarse for the stiff term is refused with the diagnostic code") {
  const auto dir = scratch("stiff");
  const auto r = run_cli("solve --config " + config_path("merton.json") + " --grid-nt 4 --out-dir " +
                             (dir / "out").string(),
                         dir);
  REQUIRE(r.code == 2);
  REQUIRE(r.err.find("time step too large") != std::string::npos);
}

TEST_CASE("the informative example passes the likelihood-ratio check") {
  const auto dir = scratch("blr_informative");
  const auto r = run_cli("blr-check --config " + config_path("ex21.json") + " --out-dir " +
                             (dir / "out").string(),
                         dir);
  REQUIRE(r.code == 0);
  const json rep = load_json(dir / "out" / "blr_report.json");
  REQUIRE(rep["passes"] == true);
  REQUIRE(rep["b_max_finite"] == true);
  REQUIRE(rep["d3_finite"] == true);
  // the same report went to stdout
  REQUIRE(r.out.find("\"passes\": true") != std::string::npos);
}

TEST_CASE("an uninformative signal fails the likelihood-ratio check with the flag") {
  const auto dir = scratch("blr_uninformative");
  const auto r = run_cli("blr-check --config " + config_path("merton.json") + " --out-dir " +
                             (dir / "out").string(),
                         dir);
  REQUIRE(r.code == 0);  // structurally sound config, negative verdict
  const json rep = load_json(dir / "out" / "blr_report.json");
  REQUIRE(rep["passes"] == false);
  bool uninformative = false;
  for (const auto& f : rep["flags"]) uninformative = uninformative || f.get<std::string>().find("uninformative") != std::string::npos;
  REQUIRE(uninformative);
}

TEST_CASE("disjoint tabulated supports exit with the numerical-diagnostic code") {
  const auto dir = scratch("blr_disjoint");
  auto doc = merton_document();
  doc["signal"]["family"] = "tabulated";
  doc["signal"]["params"] = {{"grid", {0.0, 1.0, 2.0, 3.0}},
                             {"f1", {2.0, 0.0, 0.0, 0.0}},
                             {"f2", {0.0, 0.0, 0.0, 2.0}}};
  doc["signal"]["support"] = {0.0, 3.0};
  const auto cfg = write_config(dir, doc);
  const auto r = run_cli("blr-check --config " + cfg.string() + " --out-dir " + (dir / "out").string(), dir);
  REQUIRE(r.code == 2);
  REQUIRE(r.err.find("disjoint") != std::string::npos);
}

TEST_CASE("an unknown verify check set is refused listing the valid names") {
  const auto dir = scratch("verify_unknown");
  const auto r = run_cli("verify bogus --config " + config_path("merton.json") + " --out-dir " +
                             (dir / "out").string(),
                         dir);
  REQUIRE(r.code == 1);
  REQUIRE(r.err.find("martingale") != std::string::npos);
  REQUIRE(r.err.find("filter-mean") != std::string::npos);
}

TEST_CASE("a zero-path verification request is refused") {
  const auto dir = scratch("verify_zero");
  const auto r = run_cli("verify martingale --config " + config_path("merton.json") +
                             " --paths 0 --out-dir " + (dir / "out").string(),
                         dir);
  REQUIRE(r.code == 1);
  REQUIRE(r.err.find("paths") != std::string::npos);
}

TEST_CASE("seed changes move the estimates but never the verdicts") {
  const auto dir = scratch("verify_seeds");
  const std::string common = "verify martingale --config " + config_path("merton.json") +
                             " --grid-nx 51 --grid-nt 300 --paths 3000 --dt 0.002 ";
  REQUIRE(run_cli(common + "--seed 1 --out-dir " + (dir / "a").string(), dir).code == 0);
  REQUIRE(run_cli(common + "--seed 2 --out-dir " + (dir / "b").string(), dir).code == 0);
  const json a = load_json(dir / "a" / "check_martingale.json");
  const json b = load_json(dir / "b" / "check_martingale.json");
  REQUIRE(a["pass"] == true);
  REQUIRE(b["pass"] == true);
  REQUIRE(a["mean"] != b["mean"]);
  REQUIRE(a["seed"] == 1);
  REQUIRE(b["seed"] == 2);
}

TEST_CASE("the environment out-dir is honored and the flag overrides it") {
  const auto dir = scratch("envdir");
  const auto env_target = dir / "from_env";
  const auto flag_target = dir / "from_flag";
  REQUIRE(run_cli("blr-check --config " + config_path("ex21.json"), dir,
                  "BULLBEAR_OUT_DIR=" + env_target.string() + " ")
              .code == 0);
  REQUIRE(fs::exists(env_target / "blr_report.json"));
  REQUIRE(run_cli("blr-check --config " + config_path("ex21.json") + " --out-dir " + flag_target.string(),
                  dir, "BULLBEAR_OUT_DIR=" + (dir / "ignored").string() + " ")
              .code == 0);
  REQUIRE(fs::exists(flag_target / "blr_report.json"));
  REQUIRE(!fs::exists(dir / "ignored"));
}

TEST_CASE("the closed-form oracle demands a degenerate model") {
  const auto dir = scratch("oracle");
  const auto refused = run_cli("oracle --config " + config_path("ex21.json") + " --out-dir " +
                                   (dir / "bad").string(),
                               dir);
  REQUIRE(refused.code == 1);
  REQUIRE(refused.err.find("degenerate") != std::string::npos);

  const auto ok = run_cli("oracle --config " + config_path("merton.json") + " --grid-nt 16 --out-dir " +
                              (dir / "ok").string(),
                          dir);
  REQUIRE(ok.code == 0);
  const auto rows = read_csv_rows(dir / "ok" / "oracle.csv");
  REQUIRE(rows.size() == 17);
  REQUIRE(rows.back()[1] == 1.0);  // terminal condition
  REQUIRE(rows.front()[1] > 1.0);
}

TEST_CASE("simulated paths export with their signal events") {
  const auto dir = scratch("simulate");
  const auto out = dir / "out";
  REQUIRE(run_cli("simulate --config " + config_path("ex21.json") + " --paths 2 --dt 0.01 --out-dir " +
                      out.string(),
                  dir)
              .code == 0);
  REQUIRE(fs::exists(out / "world_000.csv"));
  REQUIRE(fs::exists(out / "events_001.csv"));
  const auto rows = read_csv_rows(out / "world_000.csv");
  REQUIRE(rows.size() == 101);
  for (const auto& row : rows) {
    REQUIRE((row[1] == 1.0 || row[1] == 2.0));  // regime labels
    REQUIRE(row[2] > 0.0);                      // asset price positive
    REQUIRE((row[3] > 0.0 && row[3] < 1.0));    // filter inside (0,1)
  }
  const json m = load_json(out / "manifest.json");
  REQUIRE(m["outputs"].size() == 4);
}
