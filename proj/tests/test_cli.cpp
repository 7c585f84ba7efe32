// Drives the tve binary end to end and checks exit codes and artifacts.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kBin = TVE_CLI_PATH;
const std::string kData = TVE_SOURCE_DIR "/tests/data/";
const std::string kConfigs = TVE_SOURCE_DIR "/configs/";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tve_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// runs the binary with stdout/stderr captured to a file
int run(const std::string& args, std::string* output = nullptr) {
  const fs::path log = fs::temp_directory_path() / "tve_cli_test_last.log";
  const int st = std::system((kBin + " " + args + " > " + log.string() + " 2>&1").c_str());
  if (output) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("check-material exit codes") {
  std::string out;
  CHECK(run("check-material --config " + kConfigs + "default.toml", &out) == 0);
  CHECK(out.find("FAIL") == std::string::npos);
  CHECK(run("check-material --config " + kData + "q2.toml", &out) == 1);
  CHECK(out.find("determinant growth") != std::string::npos);
  CHECK(run("check-material --config " + kData + "beta0.toml", &out) == 0);
  CHECK(out.find("B(1) = [[0, 0], [0, 0]]") != std::string::npos);
}

TEST_CASE("usage and config errors exit with 2") {
  CHECK(run("frobnicate") == 2);
  CHECK(run("simulate") == 2);
  CHECK(run("simulate --config " + kData + "does_not_exist.toml") == 2);
  const fs::path d = scratch("bad");
  std::ofstream(d / "bad.toml") << "[grid]\nnx = 8\nwhat = 1\n";
  std::string out;
  CHECK(run("check-material --config " + (d / "bad.toml").string(), &out) == 2);
  CHECK(out.find("bad.toml:3") != std::string::npos);
}

TEST_CASE("simulate with zero data") {
  const fs::path d = scratch("zero");
  REQUIRE(run("simulate --config " + kData + "zero.toml --out " + d.string()) == 0);
  const auto s = read_json(d / "summary.json");
  CHECK(s["completed"] == true);
  CHECK(s["steps"] == 2);
  for (const char* k : {"M", "Win", "E", "V"}) CHECK(s["final"][k].get<double>() == 0.0);
  CHECK(fs::exists(d / "ledger.csv"));
  CHECK(fs::exists(d / "config.resolved.toml"));
}

TEST_CASE("simulate output is deterministic and the resolved config reproduces it") {
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  REQUIRE(run("simulate --config " + kData + "small.toml --out " + a.string()) == 0);
  REQUIRE(run("simulate --config " + kData + "small.toml --out " + b.string()) == 0);
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  CHECK(slurp(a / "ledger.csv") == slurp(b / "ledger.csv"));
  REQUIRE(run("simulate --config " + (a / "config.resolved.toml").string() + " --out " + c.string()) == 0);
  CHECK(slurp(a / "summary.json") == slurp(c / "summary.json"));
  CHECK(slurp(a / "config.resolved.toml") == slurp(c / "config.resolved.toml"));
  CHECK(fs::exists(a / "timing.json"));
}

TEST_CASE("linear solver without boundary heating keeps mu at zero for alpha in (1, 2)") {
  const fs::path d = scratch("linear");
  REQUIRE(run("simulate --solver linear --config " + kData + "small.toml --out " + d.string()) == 0);
  const auto s = read_json(d / "summary.json");
  CHECK(s["solver"] == "linear");
  CHECK(s["final"]["mu_mass"].get<double>() == 0.0);
  CHECK(s["final"]["Elin"].get<double>() > 0.0);
}

TEST_CASE("study with too few rungs exits with 2") {
  const fs::path d = scratch("short");
  std::string out;
  CHECK(run("study --kind epsilon --config " + kData + "small.toml --out " + d.string(), &out) == 2);
  CHECK(out.find("InsufficientLadder") != std::string::npos);
}

TEST_CASE("scaling study under pure boundary heating at alpha = 1") {
  const fs::path d = scratch("scaling");
  std::string out;
  const int code = run("study --kind scaling --jobs 4 --config " + kData + "heating_a1.toml --out " + d.string(), &out);
  const auto rep = read_json(d / "study.json");
  CHECK(rep["kind"] == "scaling");
  double theta_slope = 0;
  for (const auto& c : rep["checks"])
    if (c["name"].get<std::string>().find("theta") != std::string::npos) theta_slope = c["value"].get<double>();
  CHECK(theta_slope == doctest::Approx(1.0).epsilon(0.05));
  CHECK(code == (rep["passed"].get<bool>() ? 0 : 1));
  CHECK(fs::exists(d / "study.csv"));
}
