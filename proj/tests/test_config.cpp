#include <fstream>

#include "doctest.h"
#include "tve/config.hpp"

using namespace tve;

namespace {

std::string error_message(const std::string& text) {
  try {
    RunConfig::parse(text, "case.toml");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigParseError);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("toml subset parser") {
  const TomlDoc d = parse_toml("# c\n[a]\nx = 1.5 # trailing\ny = true\nz = \"s\"\nv = [1, 2.5e-1]\nw = [\"l\", \"r\"]\n", "t");
  CHECK(std::get<double>(d.at("a").at("x").v) == 1.5);
  CHECK(std::get<bool>(d.at("a").at("y").v));
  CHECK(std::get<std::string>(d.at("a").at("z").v) == "s");
  CHECK(std::get<std::vector<double>>(d.at("a").at("v").v) == std::vector<double>{1, 0.25});
  CHECK(std::get<std::vector<std::string>>(d.at("a").at("w").v) == std::vector<std::string>{"l", "r"});
  CHECK(d.at("a").at("w").line == 7);
}

TEST_CASE("config parse errors carry source and line") {
  CHECK(error_message("[grid]\nnx = 8\nbogus = 1\n").find("case.toml:3") != std::string::npos);
  CHECK(error_message("[grid]\nnx = 8\n[nope]\nx = 1\n").find("case.toml:4: unknown table [nope]") != std::string::npos);
  CHECK(error_message("[grid]\nnx = \"eight\"\n").find("case.toml:2") != std::string::npos);
  CHECK(error_message("[grid]\nnx = 8\nnx = 9\n").find("case.toml:3") != std::string::npos);
  CHECK(error_message("[grid]\n[grid]\n").find("case.toml:2") != std::string::npos);
  CHECK(error_message("nx = 8\n").find("case.toml:1") != std::string::npos);
  CHECK(error_message("[grid]\nnx = 8.5\n").find("case.toml:2") != std::string::npos);
  CHECK(!error_message("[scheme]\ntau = [1, 2\n").empty());
}

TEST_CASE("defaults and overrides") {
  const RunConfig c = RunConfig::parse("[scheme]\nalpha = 1.5\neps = 0.1\n[grid]\nnx = 8\n");
  CHECK(c.scheme.alpha == 1.5);
  CHECK(c.scheme.eps == 0.1);
  CHECK(c.nx == 8);
  CHECK(c.ny == 16);
  CHECK(c.material.q == MaterialParams{}.q);
}

TEST_CASE("resolved config round trips") {
  const RunConfig a = RunConfig::load(TVE_SOURCE_DIR "/configs/default.toml");
  const std::string r1 = a.resolved_toml();
  const RunConfig b = RunConfig::parse(r1, "resolved");
  CHECK(b.resolved_toml() == r1);
  CHECK(b.scheme.tau == a.scheme.tau);
  CHECK(b.tau_ladder == a.tau_ladder);
  CHECK(b.material.C0 == a.material.C0);
}

TEST_CASE("building the default problem") {
  const RunConfig c = RunConfig::load(TVE_SOURCE_DIR "/configs/default.toml");
  const ProblemSetup p = c.build();
  CHECK(p.grid->num_nodes() == 256);
  CHECK(p.u0.norm() == 0.0);
  CHECK(p.mu0.norm() == 0.0);
  const SlabLoads s = timeslab_average(p.loads, *p.grid, 1, 0.03125);
  CHECK(s.load.norm() > 0);
  CHECK(s.theta_flat.maxCoeff() > 0);
  CHECK(loads_at(p.loads, *p.grid, 0.6).theta_flat.maxCoeff() == 0.0);
}

TEST_CASE("semantic config errors") {
  auto code = [](const std::string& t) {
    try {
      RunConfig::parse(t).build();
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::ConfigParseError;
  };
  CHECK(code("[scheme]\nalpha = 0.5\n") == ErrorCode::AlphaOutOfRange);
  CHECK(code("[grid]\nnx = 2\n") == ErrorCode::GridTooSmall);
  CHECK(code("[loads]\ntheta_flat = 1\ntheta_flat_profile = \"sinusoid\"\n") == ErrorCode::ConfigParseError);
}
