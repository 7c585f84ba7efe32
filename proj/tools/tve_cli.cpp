// tve: check-material, simulate, study
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tve/config.hpp"
#include "tve/material_checks.hpp"

using namespace tve;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigParseError:
    case ErrorCode::AlphaOutOfRange:
    case ErrorCode::GridTooSmall:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::InvalidInitialDatum:
    case ErrorCode::TimeOutOfRange:
    case ErrorCode::NonNestedLadder:
    case ErrorCode::InsufficientLadder:
    case ErrorCode::InvalidNormSpec:
      return 2;
    case ErrorCode::InvariantFailure:
    case ErrorCode::NegativeTemperature:
      return 1;
    default:
      return 3;
  }
}

int report(const Error& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return exit_code(e.code());
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorCode::ConfigParseError, "cannot write " + p.string());
  out << s;
}

int cmd_check_material(const std::string& path) {
  const RunConfig c = RunConfig::load(path);
  const auto results = run_material_suite(c.material);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("%s  %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    ok = ok && r.passed;
  }
  if (!ok) {
    for (const auto& r : results)
      if (!r.passed) std::fprintf(stderr, "error: InvariantFailure: %s\n", r.name.c_str());
    return 1;
  }
  const Material m(c.material);
  const AdmissibleConstants a = m.admissible_constants();
  std::printf("admissible c0 = %.6g, C0 = %.6g (configured c0 = %.6g, C0 = %.6g)\n", a.c0, a.C0, c.material.c0,
              c.material.C0);
  std::printf("heat capacity range on the validity region: [%.6g, %.6g]\n", a.cV_min, a.cV_max);
  const LinearizedTensors t1 = m.linearized_tensors(1.0);
  std::printf("B(1) = [[%.6g, %.6g], [%.6g, %.6g]]%s\n", t1.B(0, 0) + 0.0, t1.B(0, 1) + 0.0, t1.B(1, 0) + 0.0, t1.B(1, 1) + 0.0,
              t1.B.isZero(0) ? " (zero: thermal expansion decoupled)" : "");
  std::printf("cV_bar = %.6g\n", t1.cV_bar);
  return 0;
}

json ledger_summary(const RunResult& r) {
  json j;
  j["solver"] = "nonlinear";
  j["completed"] = r.completed();
  j["steps"] = r.ledger.rows.empty() ? 0 : r.ledger.rows.back().k;
  double rm = 0, rt = 0, mint = INFINITY, eb = 0;
  for (const auto& row : r.ledger.rows) {
    rm = std::max(rm, row.res_mech);
    rt = std::max(rt, row.res_therm);
    mint = std::min(mint, row.min_theta);
    eb = std::max(eb, row.ebal_res);
  }
  if (!r.ledger.rows.empty()) {
    const auto& f = r.ledger.rows.back();
    j["final"] = {{"t", f.t}, {"M", f.M}, {"Win", f.Win}, {"E", f.E}, {"Eeps", f.Eeps}, {"V", f.V}};
  }
  j["max_res_mech"] = rm;
  j["max_res_therm"] = rt;
  j["min_theta"] = std::isfinite(mint) ? mint : 0.0;
  j["max_ebal_res"] = eb;
  if (r.failure)
    j["failure"] = {{"step", r.failure->step}, {"code", to_string(r.failure->code)}, {"message", r.failure->message}};
  else
    j["failure"] = nullptr;
  return j;
}

int cmd_simulate(const std::string& path, std::string solver, std::string out) {
  const RunConfig c = RunConfig::load(path);
  if (solver.empty()) solver = c.linear ? "linear" : "nonlinear";
  if (out.empty()) out = c.output_dir;
  fs::create_directories(out);
  write_text(fs::path(out) / "config.resolved.toml", c.resolved_toml());
  const ProblemSetup setup = c.build();
  const auto t0 = std::chrono::steady_clock::now();
  json summary;
  int code = 0;
  const int every = c.snapshot_every;
  if (solver == "nonlinear") {
    const RunResult r = setup.run_nonlinear(c.scheme.eps, c.scheme.tau);
    r.ledger.write_csv((fs::path(out) / "ledger.csv").string());
    for (const auto& s : r.steps)
      if (every > 0 && s.k % every == 0) {
        write_snapshot_csv((fs::path(out) / ("y_" + std::to_string(s.k) + ".csv")).string(), *setup.grid, s.y, 2);
        write_snapshot_csv((fs::path(out) / ("theta_" + std::to_string(s.k) + ".csv")).string(), *setup.grid,
                           s.theta, 1);
      }
    summary = ledger_summary(r);
    if (r.failure) {
      std::fprintf(stderr, "error: %s at step %d: %s\n", to_string(r.failure->code), r.failure->step,
                   r.failure->message.c_str());
      code = exit_code(r.failure->code) == 2 ? 2 : 3;
    } else if (summary["max_res_mech"].get<double>() > c.scheme.tol_mech ||
               summary["max_res_therm"].get<double>() > c.scheme.tol_therm ||
               summary["min_theta"].get<double>() < -c.scheme.tol_neg()) {
      code = 1;
    }
  } else if (solver == "linear") {
    const LinearRun r = setup.run_linear(c.scheme.tau);
    r.write_csv((fs::path(out) / "ledger.csv").string());
    for (const auto& s : r.steps)
      if (every > 0 && s.k % every == 0) {
        write_snapshot_csv((fs::path(out) / ("u_" + std::to_string(s.k) + ".csv")).string(), *setup.grid, s.u, 2);
        write_snapshot_csv((fs::path(out) / ("mu_" + std::to_string(s.k) + ".csv")).string(), *setup.grid, s.mu, 1);
      }
    summary["solver"] = "linear";
    summary["completed"] = true;
    summary["steps"] = r.ledger.back().k;
    double rm = 0, rt = 0, minmu = INFINITY;
    for (const auto& row : r.ledger) {
      rm = std::max(rm, row.res_mech);
      rt = std::max(rt, row.res_therm);
      minmu = std::min(minmu, row.min_mu);
    }
    const auto& f = r.ledger.back();
    summary["final"] = {{"t", f.t}, {"Elin", f.Elin}, {"mu_mass", f.mu_mass}};
    summary["max_res_mech"] = rm;
    summary["max_res_therm"] = rt;
    summary["min_mu"] = minmu;
    summary["failure"] = nullptr;
  } else {
    throw Error(ErrorCode::ConfigParseError, "--solver must be nonlinear or linear");
  }
  write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(fs::path(out) / "timing.json", json{{"wall_seconds", wall}}.dump(2) + "\n");
  std::printf("%s run: %d steps, wall %.3f s, output in %s\n", solver.c_str(), summary["steps"].get<int>(), wall,
              out.c_str());
  return code;
}

int cmd_study(const std::string& path, const std::string& kind, int jobs, std::string out) {
  const RunConfig c = RunConfig::load(path);
  if (out.empty()) out = c.output_dir;
  const ProblemSetup setup = c.build();
  RunCache cache(setup);
  StudyReport rep;
  if (kind == "tau") rep = tau_refinement_study(setup, c.tau_ladder, jobs, c.norms, &cache);
  else if (kind == "epsilon") rep = epsilon_linearization_study(setup, c.eps_ladder, jobs, &cache);
  else if (kind == "scaling") rep = apriori_scaling_study(setup, c.eps_ladder, jobs, &cache);
  else if (kind == "commute") rep = commutativity_study(setup, c.eps_ladder, c.tau_ladder, jobs, c.norms, &cache);
  else throw Error(ErrorCode::ConfigParseError, "--kind must be tau, epsilon, commute or scaling");
  fs::create_directories(out);
  write_text(fs::path(out) / "config.resolved.toml", c.resolved_toml());
  for (const auto& [key, run] : cache.nonlinear_runs()) {
    char name[96];
    std::snprintf(name, sizeof name, "nonlinear_eps%.6g_tau%.6g", key.first, key.second);
    const fs::path dir = fs::path(out) / name;
    fs::create_directories(dir);
    run->ledger.write_csv((dir / "ledger.csv").string());
  }
  for (const auto& [tau, run] : cache.linear_runs()) {
    char name[64];
    std::snprintf(name, sizeof name, "linear_tau%.6g", tau);
    const fs::path dir = fs::path(out) / name;
    fs::create_directories(dir);
    run->write_csv((dir / "ledger.csv").string());
  }
  rep.write_json((fs::path(out) / "study.json").string());
  rep.write_csv((fs::path(out) / "study.csv").string());
  for (const auto& ch : rep.checks)
    std::printf("%s  %s: %.6g (threshold %.6g)\n", ch.passed ? "PASS" : "FAIL", ch.name.c_str(), ch.value,
                ch.threshold);
  if (rep.degenerate) std::printf("degenerate: all differences vanish\n");
  return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermoviscoelastic staggered-scheme driver"};
  app.require_subcommand(1);
  std::string config, solver, kind, out;
  int jobs = 1;

  auto* check = app.add_subcommand("check-material", "run the material invariant suite");
  check->add_option("--config", config, "run config (TOML)")->required();

  auto* sim = app.add_subcommand("simulate", "run one simulation");
  sim->add_option("--config", config, "run config (TOML)")->required();
  sim->add_option("--solver", solver, "nonlinear or linear")->check(CLI::IsMember({"nonlinear", "linear"}));
  sim->add_option("--out", out, "output directory");

  auto* study = app.add_subcommand("study", "run a convergence study");
  study->add_option("--config", config, "run config (TOML)")->required();
  study->add_option("--kind", kind, "tau, epsilon, commute or scaling")
      ->required()
      ->check(CLI::IsMember({"tau", "epsilon", "commute", "scaling"}));
  study->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  study->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*check) return cmd_check_material(config);
    if (*sim) return cmd_simulate(config, solver, out);
    if (*study) return cmd_study(config, kind, jobs, out);
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
