// Acceptance runs: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tve/analysis.hpp"
#include "tve/config.hpp"
#include "tve/linear_scheme.hpp"
#include "tve/material_checks.hpp"
#include "tve/studies.hpp"

using namespace tve;
using tvetest::random_F;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

int jobs() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

RunConfig default_config() { return RunConfig::load(TVE_SOURCE_DIR "/configs/default.toml"); }

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

// 1. material derivatives, frame indifference, xi = 2R
Outcome material_oracles() {
  const Material m{MaterialParams{}};
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> T(0.0, 1.0), A(0, 6.283185307179586);
  std::normal_distribution<double> n(0, 1);
  const double h = 1e-5;
  double worst = 0, frame = 0;
  bool xi_exact = true;
  std::string worst_name;
  auto track = [&](double e, const char* name) {
    if (e > worst) worst = e, worst_name = name;
  };
  for (int s = 0; s < 100; ++s) {
    const Mat2 F = random_F(rng);
    const double th = 0.05 + T(rng);
    Tensor3 G;
    for (int i = 0; i < 8; ++i) G.v[i] = n(rng);
    Mat2 Fd;
    Fd << n(rng), n(rng), n(rng), n(rng);
    const StrainRateData sd(F, Fd);

    track(rel(m.elastic_stress(F), tvetest::fd_matrix([&](const Mat2& X) { return m.elastic_energy(X); }, F, h)),
          "elastic stress");
    track(rel(m.coupling_stress(F, th),
              tvetest::fd_matrix([&](const Mat2& X) { return m.coupling_energy(X, th); }, F, h)),
          "coupling stress");
    track(rel(m.viscous_stress(sd, th),
              tvetest::fd_matrix([&](const Mat2& X) { return m.dissipation_potential(StrainRateData(F, X), th); },
                                 Fd, h)),
          "viscous stress");
    Mat4 He, Hc, Hv;
    Mat2 dFdth;
    for (int k = 0; k < 4; ++k) {
      Vec4 e = Vec4::Zero();
      e[k] = h;
      const Mat2 E = unvec(e);
      He.col(k) = (vec(m.elastic_stress(F + E)) - vec(m.elastic_stress(F - E))) / (2 * h);
      Hc.col(k) = (vec(m.coupling_stress(F + E, th)) - vec(m.coupling_stress(F - E, th))) / (2 * h);
      Hv.col(k) = (vec(m.viscous_stress(StrainRateData(F, Fd + E), th)) -
                   vec(m.viscous_stress(StrainRateData(F, Fd - E), th))) / (2 * h);
    }
    dFdth = (m.coupling_stress(F, th + h) - m.coupling_stress(F, th - h)) / (2 * h);
    track(rel(m.elastic_hessian(F), He), "elastic Hessian");
    track(rel(m.coupling_hessian(F, th), Hc), "coupling Hessian");
    track(rel(m.viscous_hessian(F, th), Hv), "viscous Hessian");
    track(rel(m.coupling_dFdtheta(F, th), dFdth), "coupling mixed derivative");
    auto scalar = [&](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); };
    track(scalar(m.coupling_dtheta(F, th), (m.coupling_energy(F, th + h) - m.coupling_energy(F, th - h)) / (2 * h)),
          "coupling theta derivative");
    track(scalar(m.heat_capacity(F, th),
                 (m.internal_energy(F, th + h) - m.internal_energy(F, th - h)) / (2 * h)),
          "heat capacity");
    track(scalar(m.internal_energy(F, th),
                 (m.internal_energy_primitive(F, th + h) - m.internal_energy_primitive(F, th - h)) / (2 * h)),
          "internal energy primitive");
    Eigen::Matrix<double, 8, 1> hs;
    Mat8 Hh;
    for (int i = 0; i < 8; ++i) {
      Tensor3 Gp = G, Gm = G;
      Gp.v[i] += h;
      Gm.v[i] -= h;
      hs[i] = (m.hyper_energy(Gp) - m.hyper_energy(Gm)) / (2 * h);
      Hh.col(i) = (m.hyper_stress(Gp).v - m.hyper_stress(Gm).v) / (2 * h);
    }
    track(rel(m.hyper_stress(G).v, hs), "second-gradient stress");
    track(rel(m.hyper_hessian(G), Hh), "second-gradient Hessian");

    const Mat2 Q = tvetest::rotation(A(rng));
    auto fr = [&](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); };
    frame = std::max({frame, fr(m.elastic_energy(Q * F), m.elastic_energy(F)),
                      fr(m.coupling_energy(Q * F, th), m.coupling_energy(F, th)),
                      fr(m.hyper_energy(G.rotated(Q)), m.hyper_energy(G)),
                      fr(m.dissipation_potential(StrainRateData(Q * F, Q * Fd), th), m.dissipation_potential(sd, th)),
                      fr(m.internal_energy(Q * F, th), m.internal_energy(F, th))});
    if (m.dissipation_rate(sd, th) != 2 * m.dissipation_potential(sd, th)) xi_exact = false;
  }
  bool suite = true;
  for (const auto& c : run_material_suite(MaterialParams{})) suite = suite && c.passed;
  return {worst <= 1e-6 && frame <= 1e-12 && xi_exact && suite,
          fmt("max FD rel error %.3g (%s), frame deviation %.3g, xi == 2R %s, suite %s", worst, worst_name.c_str(),
              frame, xi_exact ? "exact" : "inexact", suite ? "ok" : "failed")};
}

// 2. mechanical step vs multistart descent on 5x5
Outcome minimizer_oracle() {
  const Grid g(5, 5, 1.0, 1.0, {Edge::Left});
  const Material m{MaterialParams{}};
  SchemeConfig cfg;
  cfg.tau = 0.1;
  cfg.T = 0.3;
  LoadingProgram loads = LoadingProgram::zero();
  loads.body_force = [](double t, const Vec2& x) { return Vec2(0.2 * t + 0.05 * x[1], -0.1 * x[0]); };
  loads.traction = [](double t, const Vec2& x) { return Vec2(0.1 * x[1], 0.05 + 0.2 * t); };
  const NonlinearScheme scheme(g, m, cfg, loads);
  std::mt19937 rng(3);
  std::normal_distribution<double> n(0, 1);
  double worst = 0, worst_res = 0;
  int starts = 0;
  for (int trial = 0; trial < 3; ++trial) {
    StepState prev{1, g.identity(), ScalarField(g.num_nodes())};
    for (int k = 0; k < g.num_nodes(); ++k) {
      if (!g.is_dirichlet(k)) prev.y.segment<2>(2 * k) += 0.01 * Vec2(n(rng), n(rng));
      prev.theta[k] = 0.2 + 0.1 * std::abs(n(rng));
    }
    const SlabLoads slab = timeslab_average(loads, g, 2, cfg.tau);
    MechStepInfo info;
    const VectorField y = scheme.mechanical_step(prev, slab, &info);
    const MechanicalProblem P(g, m, cfg, prev, slab);
    const auto o = tvetest::brute_force_descent(P, prev.y, 5, 0.01, 1e-10, 100 + trial);
    starts += o.starts_converged;
    worst = std::max(worst, (o.y - y).lpNorm<Eigen::Infinity>());
    worst_res = std::max(worst_res, o.residual);
  }
  return {worst <= 1e-6 && worst_res <= 1e-10 && starts > 0,
          fmt("max sup-norm gap %.3g, oracle residual %.3g, %d converged starts", worst, worst_res, starts)};
}

// 3. default regression run
Outcome regression() {
  const RunConfig c = default_config();
  const ProblemSetup p = c.build();
  const NonlinearScheme scheme(*p.grid, *p.material, p.cfg, p.loads);
  const RunResult r = scheme.run(p.u0, p.mu0);
  if (!r.completed())
    return {false, "run stopped at step " + std::to_string(r.failure ? r.failure->step : -1) + ": " +
                       (r.failure ? r.failure->message : std::string("?"))};
  double rm = 0, rt = 0, mint = INFINITY;
  for (size_t k = 1; k < r.ledger.rows.size(); ++k) {
    const auto& row = r.ledger.rows[k];
    rm = std::max(rm, row.res_mech);
    rt = std::max(rt, row.res_therm);
    mint = std::min(mint, row.min_theta);
  }
  const auto fit = check_step_energy_inequality(scheme, r, 0.5);
  const auto eb = check_energy_balance(scheme, r);
  double escale = 0;
  for (const auto& row : r.ledger.rows) escale = std::max(escale, std::abs(row.E));
  const int steps = static_cast<int>(r.steps.size()) - 1;
  const bool ok = steps == 16 && rm <= 1e-8 && rt <= 1e-8 && mint >= -1e-10 && fit.competitor_ok &&
                  eb.max_residual <= 1e-6 * escale;
  return {ok, fmt("%d steps, max residuals %.3g / %.3g, min theta %.3g, competitor %s, balance %.3g vs scale %.3g, "
                  "fitted C_M %.3g",
                  steps, rm, rt, mint, fit.competitor_ok ? "ok" : "violated", eb.max_residual, escale, fit.C_M)};
}

// 4. closed system
Outcome closed_system() {
  RunConfig c = default_config();
  c.scheme.kappa = 0;
  c.traction = VectorLoadSpec{};
  c.body_force = VectorLoadSpec{};
  c.theta_flat = 0;
  c.theta_flat_profile = "zero";
  c.u0 = "bend";
  c.u0_amplitude = 0.2;
  c.mu0 = "bump";
  c.mu0_amplitude = 0.5;
  const ProblemSetup p = c.build();
  const NonlinearScheme scheme(*p.grid, *p.material, p.cfg, p.loads);
  const RunResult r = scheme.run(p.u0, p.mu0);
  if (!r.completed()) return {false, "run failed: " + r.failure->message};
  double worst = -INFINITY;
  for (size_t k = 1; k < r.ledger.rows.size(); ++k)
    worst = std::max(worst, r.ledger.rows[k].E - r.ledger.rows[k - 1].E);
  const double drop = r.ledger.rows.front().E - r.ledger.rows.back().E;
  return {worst <= 1e-8, fmt("max per-step increase of E %.3g, E0 %.6g, total decrease %.3g", worst,
                             r.ledger.rows.front().E, drop)};
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ", ") + fmt("%.3g", x);
  return s;
}

// 5. tau refinement on the regression problem
Outcome tau_refinement(RunCache& cache, const ProblemSetup& p) {
  const auto rep = tau_refinement_study(p, {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, jobs(), {}, &cache);
  std::string d;
  bool ok = !rep.degenerate;
  for (size_t i = 0; i < rep.norms.size(); ++i) {
    d += rep.norms[i] + ": factors [" + join(rep.factors[i]) + "]; ";
    for (double f : rep.factors[i]) ok = ok && f <= 0.75;
  }
  return {ok && rep.passed, d};
}

// 6. epsilon scaling for alpha = 1, 2
Outcome eps_scaling(std::map<double, std::unique_ptr<RunCache>>& caches, std::map<double, ProblemSetup>& setups) {
  bool ok = true;
  std::string d;
  for (double a : {1.0, 2.0}) {
    const auto rep = apriori_scaling_study(setups.at(a), {0.2, 0.1, 0.05, 0.025}, jobs(), caches.at(a).get());
    const double lo[3] = {1.8, a - 0.2, 0.8}, hi[3] = {2.2, a + 0.2, 1.2};
    d += fmt("alpha %g slopes:", a);
    for (size_t i = 0; i < rep.checks.size() && i < 3; ++i) {
      const double s = rep.checks[i].value;
      ok = ok && s >= lo[i] && s <= hi[i];
      d += fmt(" %.3f", s);
    }
    d += "; ";
    ok = ok && rep.checks.size() == 3;
  }
  return {ok, d};
}

// 7. linearization for alpha = 1, 2
Outcome linearization(std::map<double, std::unique_ptr<RunCache>>& caches, std::map<double, ProblemSetup>& setups) {
  bool ok = true;
  std::string d;
  for (double a : {1.0, 2.0}) {
    const auto rep = epsilon_linearization_study(setups.at(a), {0.2, 0.1, 0.05, 0.025}, jobs(), caches.at(a).get());
    const auto& E = rep.errors.at(0);
    double minf = INFINITY;
    for (size_t i = 1; i < E.size(); ++i) minf = std::min(minf, E[i - 1] / E[i]);
    double relf = NAN;
    for (const auto& c : rep.checks)
      if (c.name.find("relative") != std::string::npos) relf = c.value;
    ok = ok && !rep.degenerate && minf >= 1.5 && relf <= 0.05 && rep.passed;
    d += fmt("alpha %g: E = [%s], min reduction %.3f, E(0.025)/|linear| %.3g; ", a, join(E).c_str(), minf, relf);
  }
  return {ok, d};
}

// 8. decoupling in the linear system
Outcome decoupling() {
  const Grid g(12, 12, 1.0, 1.0, {Edge::Left});
  const Material m{MaterialParams{}};
  auto cfg = [](double a, double kappa) {
    LinearConfig c;
    c.alpha = a;
    c.tau = 1.0 / 32;
    c.T = 0.5;
    c.kappa = kappa;
    return c;
  };
  auto bump = [&](double amp, double cx) {
    ScalarField s(g.num_nodes());
    for (int n = 0; n < g.num_nodes(); ++n) {
      const Vec2 x = g.position(n);
      s[n] = amp * std::exp(-20 * ((x[0] - cx) * (x[0] - cx) + (x[1] - 0.5) * (x[1] - 0.5)));
    }
    return s;
  };
  auto u_init = [&](double amp) {
    VectorField u = VectorField::Zero(2 * g.num_nodes());
    for (int n = 0; n < g.num_nodes(); ++n) {
      const Vec2 x = g.position(n);
      u.segment<2>(2 * n) = amp * x[0] * Vec2(x[1], 1 - x[1]);
    }
    return u;
  };
  LoadingProgram base = LoadingProgram::zero();
  base.traction = [](double t, const Vec2& x) { return Vec2(0.1 * t, 0.05 * x[1]); };
  base.boundary_temperature = [](double t, const Vec2& x) { return 0.5 * t * x[1]; };
  LoadingProgram mech_changed = base;
  mech_changed.traction = [](double t, const Vec2&) { return Vec2(-0.3 * t, 0.2); };
  mech_changed.body_force = [](double, const Vec2& x) { return Vec2(x[1], 0.1); };
  LoadingProgram heat_changed = base;
  heat_changed.boundary_temperature = [](double t, const Vec2& x) { return 1 + t * x[0]; };

  const LinearizedTensors t15 = m.linearized_tensors(1.5);
  const LinearRun r0 = LinearScheme(g, t15, cfg(1.5, 1), base).run_linear(u_init(0.1), bump(0.3, 0.5));
  const LinearRun ru = LinearScheme(g, t15, cfg(1.5, 1), mech_changed).run_linear(u_init(-0.2), bump(0.3, 0.5));
  const LinearRun rm = LinearScheme(g, t15, cfg(1.5, 1), heat_changed).run_linear(u_init(0.1), bump(0.8, 0.3));
  bool mu_same = true, u_same = true, mu_moved = false, u_moved = false;
  for (size_t k = 0; k < r0.steps.size(); ++k) {
    mu_same = mu_same && r0.steps[k].mu == ru.steps[k].mu;
    u_same = u_same && r0.steps[k].u == rm.steps[k].u;
    u_moved = u_moved || r0.steps[k].u != ru.steps[k].u;
    mu_moved = mu_moved || r0.steps[k].mu != rm.steps[k].mu;
  }

  // alpha = 2: moving load, insulated
  RunConfig c = default_config();
  c.traction = VectorLoadSpec{};
  c.theta_flat = 0;
  c.theta_flat_profile = "zero";
  c.body_force.amplitude = Vec2(0.0, 0.5);
  c.body_force.profile = "constant";
  c.body_force_shape = "moving";
  c.scheme.kappa = 0;
  c.scheme.alpha = 2;
  const ProblemSetup p = c.build();
  const LinearRun r2 = p.run_linear(p.cfg.tau);
  bool increasing = true;
  double min_inc = INFINITY;
  for (size_t k = 1; k < r2.ledger.size(); ++k) {
    const double inc = r2.ledger[k].mu_mass - r2.ledger[k - 1].mu_mass;
    min_inc = std::min(min_inc, inc);
    increasing = increasing && inc > 0;
  }

  // alpha = 1: boundary heating only
  RunConfig c1 = default_config();
  c1.traction = VectorLoadSpec{};
  c1.scheme.alpha = 1;
  c1.theta_flat = 1.0;
  c1.theta_flat_profile = "constant";
  const ProblemSetup p1 = c1.build();
  const LinearRun r1 = p1.run_linear(p1.cfg.tau);
  double umax = 0;
  for (const auto& s : r1.steps) umax = std::max(umax, h1_norm(*p1.grid, s.u));

  const bool ok = mu_same && u_same && u_moved && mu_moved && increasing && umax > 0;
  return {ok, fmt("alpha 1.5: mu unchanged by u-data %s, u unchanged by mu-data %s; alpha 2: min heat increment "
                  "%.3g; alpha 1: max |u|_H1 %.3g",
                  mu_same ? "bitwise" : "NO", u_same ? "bitwise" : "NO", min_inc, umax)};
}

// 9. commutativity on the default suite
Outcome commutativity(RunCache& cache, const ProblemSetup& p) {
  const auto rep = commutativity_study(p, {0.2, 0.1, 0.05, 0.025}, {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}, jobs(),
                                       {}, &cache);
  std::string d;
  for (const auto& c : rep.checks) d += fmt("%s %.3g <= %.3g; ", c.name.c_str(), c.value, c.threshold);
  return {rep.passed && !rep.degenerate, d};
}

// 10. regularized dissipation rate in the thermal step
Outcome regularization() {
  bool ok = true;
  std::string d;
  for (double a : {1.0, 1.5, 2.0}) {
    RunConfig c = default_config();
    c.scheme.alpha = a;
    c.scheme.regularize_xi = true;
    c.traction.amplitude *= 20;  // fast loading so that xi exceeds 1 somewhere
    const ProblemSetup p = c.build();
    const NonlinearScheme scheme(*p.grid, *p.material, p.cfg, p.loads);
    const RunResult r = scheme.run(p.u0, p.mu0);
    if (!r.completed()) return {false, fmt("alpha %g run failed: %s", a, r.failure->message.c_str())};
    double excess = -INFINITY;
    bool identical = true;
    int points = 0;
    for (size_t k = 1; k < r.ledger.rows.size(); ++k) {
      const auto& t = r.ledger.rows[k].therm;
      excess = std::max(excess, t.xi_reg_excess);
      identical = identical && t.xi_reg_identical;
      points += t.regularized_points;
    }
    if (a < 2) ok = ok && excess <= 0 && points > 0;
    else ok = ok && identical;
    d += fmt("alpha %g: max(xi_reg - xi) %.3g, %d points with xi > 1, identical %s; ", a, excess, points,
             identical ? "yes" : "no");
  }
  return {ok, d};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.passed) ++failed;
    std::printf("%s  %d %s (%.1f s): %s\n", o.passed ? "PASS" : "FAIL", id, name, dt, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "material oracle suite", [] {
    auto o = material_oracles();
    return o;
  });
  report(2, "tiny-instance minimizer oracle", minimizer_oracle);
  report(3, "scheme regression", regression);
  report(4, "closed-system monotonicity", closed_system);

  std::map<double, ProblemSetup> setups;
  std::map<double, std::unique_ptr<RunCache>> caches;
  for (double a : {1.0, 2.0}) {
    RunConfig c = default_config();
    c.scheme.alpha = a;
    setups.emplace(a, c.build());
  }
  for (auto& [a, p] : setups) caches.emplace(a, std::make_unique<RunCache>(p));

  report(5, "tau refinement", [&] { return tau_refinement(*caches.at(2.0), setups.at(2.0)); });
  report(6, "epsilon scaling", [&] { return eps_scaling(caches, setups); });
  report(7, "linearization", [&] { return linearization(caches, setups); });
  report(8, "alpha-dependent decoupling", decoupling);
  report(9, "commutativity", [&] { return commutativity(*caches.at(2.0), setups.at(2.0)); });
  report(10, "regularization contract", regularization);

  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
