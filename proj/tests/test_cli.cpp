// End-to-end tests of the command-line front end: exit codes, deterministic
// reruns, config handling, and golden outputs frozen in tests/golden.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "doctest.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

// Runs the CLI with stderr silenced, capturing stdout and the exit code.
// `env_prefix` is prepended verbatim (e.g. "env REGIME_LR_THREADS=3 ").
RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  const std::string cmd = env_prefix + std::string(REGIME_LR_BIN) + " " +
                          args + " 2>/dev/null";
  std::FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult res;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_tmp") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Shared input series so every case works on the same data.
fs::path make_series(const fs::path& dir) {
  const fs::path csv = dir / "y.csv";
  const RunResult ok = run_cli("simulate --seed 99 --out " + csv.string());
  REQUIRE(ok.exit_code == 0);
  return csv;
}

std::string light_test_config() {
  return R"({
  "test": {
    "ga_population": 12,
    "ga_generations": 5,
    "ga_nm_max_evaluations": 100,
    "j_count": 60
  }
})";
}

}  // namespace

TEST_CASE("simulate writes the series plus sidecar and is deterministic") {
  const fs::path dir = fresh_dir("simulate");
  const std::string out1 = (dir / "a.csv").string();
  const std::string out2 = (dir / "b.csv").string();
  REQUIRE(run_cli("simulate --seed 5 --out " + out1).exit_code == 0);
  REQUIRE(run_cli("simulate --seed 5 --out " + out2).exit_code == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK(slurp(out1 + ".meta.json") == slurp(out2 + ".meta.json"));

  // 500 observations plus p = 1 initial values, one number per line.
  std::istringstream lines(slurp(out1));
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find(',') == std::string::npos);
    ++rows;
  }
  CHECK(rows == 501);

  const json meta = json::parse(slurp(out1 + ".meta.json"));
  CHECK(meta.at("schema_version") == 1);
  CHECK(meta.at("command") == "simulate");
  CHECK(meta.at("rows") == 501);
  CHECK(meta.at("config").at("simulate").at("seed") == 5);

  // A different seed changes the bytes.
  const std::string out3 = (dir / "c.csv").string();
  REQUIRE(run_cli("simulate --seed 6 --out " + out3).exit_code == 0);
  CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("test command: deterministic report, console echoes the JSON") {
  const fs::path dir = fresh_dir("test_cmd");
  const fs::path csv = make_series(dir);
  spit(dir / "cfg.json", light_test_config());
  const std::string base = "test " + csv.string() + " --family gmar --seed 11" +
                           " --threads 1 --config " + (dir / "cfg.json").string();

  const RunResult r1 = run_cli(base + " --out " + (dir / "r1.json").string());
  REQUIRE(r1.exit_code == 0);
  const RunResult r2 = run_cli(base + " --out " + (dir / "r2.json").string());
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));
  CHECK(r1.out == r2.out);

  const json rep = json::parse(slurp(dir / "r1.json"));
  CHECK(rep.at("schema_version") == 1);
  CHECK(rep.at("family") == "gmar");
  CHECK(rep.at("null_sample").size() == 60);
  CHECK(rep.at("grid").size() == 19);
  const double pv = rep.at("p_value").get<double>();
  CHECK(pv >= 0.0);
  CHECK(pv <= 1.0);

  // Console lines print the very same serialization as the stored fields.
  const std::string printed_pv = "p_value " + json(rep.at("p_value")).dump();
  CHECK(r1.out.find(printed_pv) != std::string::npos);
  const std::string printed_lr = "lr_stat " + json(rep.at("lr_stat")).dump();
  CHECK(r1.out.find(printed_lr) != std::string::npos);
  CHECK(r1.out.find("argmax_alpha ") != std::string::npos);

  // Re-running from the report's embedded config reproduces it byte for byte.
  spit(dir / "echo.json", rep.at("config").dump());
  const RunResult r3 = run_cli("test " + csv.string() + " --config " +
                               (dir / "echo.json").string() + " --out " +
                               (dir / "r3.json").string());
  REQUIRE(r3.exit_code == 0);
  CHECK(slurp(dir / "r3.json") == slurp(dir / "r1.json"));
}

TEST_CASE("thread count and its env fallback do not change the numbers") {
  const fs::path dir = fresh_dir("threads");
  const fs::path csv = make_series(dir);
  spit(dir / "cfg.json", light_test_config());
  const std::string base = "test " + csv.string() +
                           " --family gmar --seed 4 --config " +
                           (dir / "cfg.json").string();
  REQUIRE(run_cli(base + " --threads 1 --out " + (dir / "t1.json").string())
              .exit_code == 0);
  // Env fallback path: threads flag left at its 0 default.
  REQUIRE(run_cli(base + " --out " + (dir / "t3.json").string(),
                  "env REGIME_LR_THREADS=3 ")
              .exit_code == 0);

  json a = json::parse(slurp(dir / "t1.json"));
  json b = json::parse(slurp(dir / "t3.json"));
  // Only the echoed thread request may differ.
  a.at("config").at("test").erase("threads");
  b.at("config").at("test").erase("threads");
  CHECK(a == b);
}

TEST_CASE("input and configuration errors exit with code 2") {
  const fs::path dir = fresh_dir("errors");
  const fs::path csv = make_series(dir);

  CHECK(run_cli("test missing_file.csv --family gmar").exit_code == 2);

  spit(dir / "bad.csv", "1.0\n2.0\nnot-a-number\n");
  CHECK(run_cli("test " + (dir / "bad.csv").string() + " --family gmar")
            .exit_code == 2);

  spit(dir / "short.csv", "1.0\n2.0\n3.0\n");
  CHECK(run_cli("test " + (dir / "short.csv").string() + " --family gmar")
            .exit_code == 2);

  spit(dir / "unknown.json", R"({"test": {"not_a_key": 1}})");
  CHECK(run_cli("test " + csv.string() + " --config " +
                (dir / "unknown.json").string())
            .exit_code == 2);

  spit(dir / "badsection.json", R"({"tests": {}})");
  CHECK(run_cli("test " + csv.string() + " --config " +
                (dir / "badsection.json").string())
            .exit_code == 2);

  spit(dir / "badtype.json", R"({"test": {"j_count": "many"}})");
  CHECK(run_cli("test " + csv.string() + " --config " +
                (dir / "badtype.json").string())
            .exit_code == 2);

  CHECK(run_cli("test " + csv.string() + " --family frob").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("test " + csv.string() + " --family gmar --no-such-flag")
            .exit_code == 2);

  // Nonstationary simulation DGP is rejected as input error.
  spit(dir / "unit.json", R"({"simulate": {"coeffs": [1.0]}})");
  CHECK(run_cli("simulate --config " + (dir / "unit.json").string())
            .exit_code == 2);

  // Flags that have no meaning for the subcommand are rejected.
  CHECK(run_cli("simulate --family gmar --out " + (dir / "x.csv").string())
            .exit_code == 2);

  // Malformed grid files.
  spit(dir / "grid0.csv", "0,0\n");
  CHECK(run_cli("test " + csv.string() + " --family lmar --grid-file " +
                (dir / "grid0.csv").string())
            .exit_code == 2);
  spit(dir / "grid1.csv", "1.5\n");
  CHECK(run_cli("test " + csv.string() + " --family gmar --grid-file " +
                (dir / "grid1.csv").string())
            .exit_code == 2);
}

TEST_CASE("estimate reports a profile that never falls below the null") {
  const fs::path dir = fresh_dir("estimate");
  const fs::path csv = make_series(dir);
  spit(dir / "cfg.json",
       R"({"estimate": {"ga_population": 12, "ga_generations": 5,
                        "ga_nm_max_evaluations": 100}})");
  const std::string out = (dir / "est.json").string();
  REQUIRE(run_cli("estimate " + csv.string() +
                  " --family gmar --seed 2 --config " +
                  (dir / "cfg.json").string() + " --out " + out)
              .exit_code == 0);
  const json est = json::parse(slurp(out));
  CHECK(est.at("command") == "estimate");
  CHECK(est.at("fits").size() == 19);
  const double null_ll = est.at("null_fit").at("loglik").get<double>();
  double best = -1e300;
  for (const auto& fit : est.at("fits")) {
    const double ll = fit.at("loglik").get<double>();
    CHECK(ll >= null_ll - 1e-6);
    best = std::max(best, ll);
  }
  CHECK(est.at("best").at("loglik").get<double>() == doctest::Approx(best));
  const int best_index = est.at("best_index").get<int>();
  CHECK(est.at("fits").at(best_index).at("loglik").get<double>() == best);
}

TEST_CASE("mc writes a rejection table and a p-value archive") {
  const fs::path dir = fresh_dir("mc");
  spit(dir / "cfg.json", R"({
    "mc": {
      "dgp": "ar", "intercept": 0.2, "coeffs": [0.5], "sigma2": 1.0,
      "sample_sizes": [100], "replications": 3, "j_count": 40,
      "families": ["lmar", "gmar"],
      "ga_population": 12, "ga_generations": 4, "ga_nm_max_evaluations": 60
    }
  })");
  const std::string base = "mc --config " + (dir / "cfg.json").string() +
                           " --seed 9 --threads 1 --out " +
                           (dir / "study").string();
  REQUIRE(run_cli(base).exit_code == 0);
  const std::string csv = slurp(dir / "study.csv");
  CHECK(csv.find("dgp,sample_size,lmar_10,lmar_5,lmar_1,gmar_10,gmar_5,"
                 "gmar_1") == 0);
  CHECK(csv.find("ar,100,") != std::string::npos);

  const json arch = json::parse(slurp(dir / "study.json"));
  CHECK(arch.at("cells").size() == 2);
  for (const auto& cell : arch.at("cells")) {
    CHECK(cell.at("p_values").size() == 3);
    CHECK(cell.at("rejection_freq").size() == 3);
  }

  // Byte-identical rerun, including the CSV.
  const fs::path dir2 = dir / "again";
  fs::create_directories(dir2);
  REQUIRE(run_cli("mc --config " + (dir / "cfg.json").string() +
                  " --seed 9 --threads 1 --out " + (dir2 / "study").string())
              .exit_code == 0);
  CHECK(slurp(dir / "study.csv") == slurp(dir2 / "study.csv"));
  CHECK(slurp(dir / "study.json") == slurp(dir2 / "study.json"));
}

TEST_CASE("golden outputs stay frozen") {
  const fs::path dir = fresh_dir("golden");
  const fs::path golden = fs::path(TESTS_GOLDEN_DIR);

  // Short AR simulation.
  const std::string sim_out = (dir / "series.csv").string();
  spit(dir / "simcfg.json", R"({
    "simulate": {"dgp": "ar", "length": 20, "presample": 50, "seed": 123,
                  "intercept": 0.2, "coeffs": [0.5], "sigma2": 1.0}
  })");
  REQUIRE(run_cli("simulate --config " + (dir / "simcfg.json").string() +
                  " --out " + sim_out)
              .exit_code == 0);
  CHECK(slurp(sim_out) == slurp(golden / "series.csv"));
  CHECK(slurp(sim_out + ".meta.json") == slurp(golden / "series.csv.meta.json"));

  // Small GMAR test report on a longer frozen series (the short one above
  // is below the test command's minimum length).
  const std::string rep_out = (dir / "report.json").string();
  spit(dir / "testcfg.json", R"({
    "test": {"family": "gmar", "seed": 31, "threads": 1, "j_count": 40,
              "ga_population": 12, "ga_generations": 4,
              "ga_nm_max_evaluations": 60}
  })");
  REQUIRE(run_cli("simulate --seed 77 --out " + (dir / "long.csv").string())
              .exit_code == 0);
  CHECK(slurp(dir / "long.csv") == slurp(golden / "long.csv"));
  REQUIRE(run_cli("test " + (dir / "long.csv").string() + " --config " +
                  (dir / "testcfg.json").string() + " --out " + rep_out)
              .exit_code == 0);
  // The report echoes the input path it was invoked with; normalize that
  // one field so the byte comparison is layout-independent.
  std::string fresh = slurp(rep_out);
  const std::string here = "\"input\": \"" + (dir / "long.csv").string() + "\"";
  const std::size_t at = fresh.find(here);
  REQUIRE(at != std::string::npos);
  fresh.replace(at, here.size(), "\"input\": \"long.csv\"");
  CHECK(fresh == slurp(golden / "report.json"));
}
