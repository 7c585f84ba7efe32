#include "tve/studies.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace tve {

LinearConfig ProblemSetup::linear_config(double tau) const {
  LinearConfig lc;
  lc.alpha = cfg.alpha;
  lc.tau = tau;
  lc.T = cfg.T;
  lc.kappa = cfg.kappa;
  return lc;
}

RunResult ProblemSetup::run_nonlinear(double eps, double tau) const {
  SchemeConfig c = cfg;
  c.eps = eps;
  c.tau = tau;
  NonlinearScheme scheme(*grid, *material, c, loads);
  return scheme.run(u0, mu0);
}

LinearRun ProblemSetup::run_linear(double tau) const {
  LinearScheme scheme(*grid, material->linearized_tensors(cfg.alpha), linear_config(tau), loads);
  return scheme.run_linear(u0, mu0);
}

std::shared_ptr<const RunResult> RunCache::nonlinear(double eps, double tau) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = nl_.find({eps, tau});
    if (it != nl_.end()) return it->second;
  }
  auto r = std::make_shared<const RunResult>(setup_.run_nonlinear(eps, tau));
  if (r->failure) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "run eps=%g tau=%g failed at step %d: ", eps, tau, r->failure->step);
    throw Error(r->failure->code, buf + r->failure->message);
  }
  std::lock_guard<std::mutex> lock(mu_);
  return nl_.emplace(std::make_pair(eps, tau), r).first->second;
}

std::shared_ptr<const LinearRun> RunCache::linear(double tau) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = lin_.find(tau);
    if (it != lin_.end()) return it->second;
  }
  auto r = std::make_shared<const LinearRun>(setup_.run_linear(tau));
  std::lock_guard<std::mutex> lock(mu_);
  return lin_.emplace(tau, r).first->second;
}

void RunCache::prefetch(const std::vector<std::pair<double, double>>& nonlinear_keys,
                        const std::vector<double>& linear_keys, int jobs) {
  const size_t n = nonlinear_keys.size() + linear_keys.size();
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        if (i < nonlinear_keys.size()) nonlinear(nonlinear_keys[i].first, nonlinear_keys[i].second);
        else linear(linear_keys[i - nonlinear_keys.size()]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  const int nt = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
}

std::vector<std::pair<std::pair<double, double>, std::shared_ptr<const RunResult>>> RunCache::nonlinear_runs() {
  std::lock_guard<std::mutex> lock(mu_);
  return {nl_.begin(), nl_.end()};
}

std::vector<std::pair<double, std::shared_ptr<const LinearRun>>> RunCache::linear_runs() {
  std::lock_guard<std::mutex> lock(mu_);
  return {lin_.begin(), lin_.end()};
}

void check_ladder(const std::vector<double>& ladder, bool nested) {
  if (ladder.size() < 3) throw Error(ErrorCode::InsufficientLadder, "a study needs at least 3 rungs");
  for (size_t i = 1; i < ladder.size(); ++i) {
    if (!(ladder[i] < ladder[i - 1] && ladder[i] > 0))
      throw Error(ErrorCode::InsufficientLadder, "ladder must be positive and strictly decreasing");
    if (nested) {
      const double q = ladder[i - 1] / ladder[i];
      if (std::abs(q - std::round(q)) > 1e-9 * q) throw Error(ErrorCode::NonNestedLadder, "ladder is not nested");
    }
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void StudyReport::write_json(const std::string& path) const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["ladder"] = ladder;
  for (size_t i = 0; i < norms.size(); ++i) {
    j["errors"][norms[i]] = errors[i];
    j["factors"][norms[i]] = factors[i];
  }
  for (const auto& c : checks)
    j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
  j["runtimes"] = runtimes;
  j["degenerate"] = degenerate;
  j["passed"] = passed;
  j["note"] = note;
  std::ofstream(path) << j.dump(2) << "\n";
}

void StudyReport::write_csv(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::ConfigParseError, "cannot write " + path);
  std::fprintf(f, "rung,norm,value,factor\n");
  for (size_t i = 0; i < norms.size(); ++i)
    for (size_t r = 0; r < errors[i].size(); ++r) {
      const double fac = r > 0 && r - 1 < factors[i].size() ? factors[i][r - 1] : NAN;
      std::fprintf(f, "%zu,%s,%.17g,%.17g\n", r, norms[i].c_str(), errors[i][r], fac);
    }
  std::fclose(f);
}

namespace {

std::vector<double> ratios(const std::vector<double>& e, bool inverse) {
  std::vector<double> out;
  for (size_t i = 1; i < e.size(); ++i) {
    const double a = inverse ? e[i] : e[i - 1], b = inverse ? e[i - 1] : e[i];
    out.push_back(b == 0 ? (a == 0 ? 0.0 : INFINITY) : a / b);
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void finish(StudyReport& rep) {
  rep.passed = true;
  for (const auto& c : rep.checks) rep.passed = rep.passed && c.passed;
}

}  // namespace

StudyReport tau_refinement_study(const ProblemSetup& setup, const std::vector<double>& taus, int jobs, NormSpec norms,
                                 RunCache* cache) {
  check_ladder(taus, true);
  norms.validate();
  RunCache local(setup);
  RunCache& rc = cache ? *cache : local;
  const double eps = setup.cfg.eps;
  StudyReport rep;
  rep.kind = "tau";
  rep.ladder = taus;
  std::vector<std::pair<double, double>> keys;
  for (double t : taus) keys.emplace_back(eps, t);
  const auto t0 = std::chrono::steady_clock::now();
  rc.prefetch(keys, {}, jobs);
  rep.runtimes.push_back(seconds_since(t0));

  std::vector<Trajectory> tr;
  for (double t : taus) tr.push_back(deformation_trajectory(*rc.nonlinear(eps, t)));
  const Grid& g = *setup.grid;
  char sname[32];
  std::snprintf(sname, sizeof sname, "Ls(IxO) theta, s=%g", norms.s);
  rep.norms = {"Linf(I;H1) y", "L2(I;H1) ydot", sname};
  rep.errors.assign(3, {});
  for (size_t i = 0; i + 1 < tr.size(); ++i) {
    rep.errors[0].push_back(linf_h1_difference(g, tr[i], tr[i + 1]));
    rep.errors[1].push_back(l2_h1_rate_difference(g, tr[i], tr[i + 1]));
    rep.errors[2].push_back(ls_spacetime_difference(g, tr[i], tr[i + 1], norms.s));
  }
  bool all_zero = true;
  for (int n = 0; n < 3; ++n) {
    rep.factors.push_back(ratios(rep.errors[n], true));
    double worst = 0;
    bool zero = true;
    for (double e : rep.errors[n]) zero = zero && e == 0;
    for (double f : rep.factors[n]) worst = std::max(worst, f);
    all_zero = all_zero && zero;
    rep.checks.push_back({"max reduction factor, " + rep.norms[n], worst, 0.75, zero || worst <= 0.75});
  }
  rep.degenerate = all_zero;
  finish(rep);
  return rep;
}

StudyReport epsilon_linearization_study(const ProblemSetup& setup, const std::vector<double>& eps, int jobs,
                                        RunCache* cache) {
  check_ladder(eps, false);
  RunCache local(setup);
  RunCache& rc = cache ? *cache : local;
  const double tau = setup.cfg.tau;
  StudyReport rep;
  rep.kind = "epsilon";
  rep.ladder = eps;
  std::vector<std::pair<double, double>> keys;
  for (double e : eps) keys.emplace_back(e, tau);
  const auto t0 = std::chrono::steady_clock::now();
  rc.prefetch(keys, {tau}, jobs);
  rep.runtimes.push_back(seconds_since(t0));

  const Grid& g = *setup.grid;
  const Trajectory lin = linear_trajectory(*rc.linear(tau));
  double lin_u = 0, lin_mu = 0;
  for (size_t k = 0; k < lin.v.size(); ++k) {
    lin_u = std::max(lin_u, h1_norm(g, lin.v[k]));
    lin_mu = std::max(lin_mu, lp_norm(g, lin.s[k], 1.0));
  }
  rep.norms = {"E", "max H1 u", "max L1 mu"};
  rep.errors.assign(3, {});
  for (double e : eps) {
    const Trajectory tr = rescaled_trajectory(*rc.nonlinear(e, tau), g);
    const double eu = linf_h1_difference(g, tr, lin);
    const double em = max_l1_difference(g, tr, lin);
    rep.errors[0].push_back(eu + em);
    rep.errors[1].push_back(eu);
    rep.errors[2].push_back(em);
  }
  for (int n = 0; n < 3; ++n) rep.factors.push_back(ratios(rep.errors[n], false));
  const auto& E = rep.errors[0];
  const double lin_norm = lin_u + lin_mu;
  bool zero = lin_norm == 0;
  for (double e : E) zero = zero && e == 0;
  rep.degenerate = zero;
  double worst = INFINITY;
  for (double f : rep.factors[0]) worst = std::min(worst, f);
  rep.checks.push_back({"min error reduction per halving", worst, 1.5, zero || worst >= 1.5});
  const double rel = lin_norm > 0 ? E.back() / lin_norm : 0.0;
  rep.checks.push_back({"final error relative to linear norm", rel, 0.05, zero || rel <= 0.05});
  char buf[128];
  std::snprintf(buf, sizeof buf, "linear norm %.6g (u %.6g, mu %.6g)", lin_norm, lin_u, lin_mu);
  rep.note = buf;
  finish(rep);
  return rep;
}

StudyReport apriori_scaling_study(const ProblemSetup& setup, const std::vector<double>& eps, int jobs,
                                  RunCache* cache) {
  check_ladder(eps, false);
  RunCache local(setup);
  RunCache& rc = cache ? *cache : local;
  const double tau = setup.cfg.tau, alpha = setup.cfg.alpha;
  StudyReport rep;
  rep.kind = "scaling";
  rep.ladder = eps;
  std::vector<std::pair<double, double>> keys;
  for (double e : eps) keys.emplace_back(e, tau);
  const auto t0 = std::chrono::steady_clock::now();
  rc.prefetch(keys, {}, jobs);
  rep.runtimes.push_back(seconds_since(t0));

  const Grid& g = *setup.grid;
  rep.norms = {"max M", "max L1 theta", "L2(IxO) grad ydot"};
  rep.errors.assign(3, {});
  for (double e : eps) {
    const auto run = rc.nonlinear(e, tau);
    double M = 0, th = 0;
    for (const auto& r : run->ledger.rows) M = std::max(M, r.M);
    for (const auto& s : run->steps) th = std::max(th, lp_norm(g, s.theta, 1.0));
    rep.errors[0].push_back(M);
    rep.errors[1].push_back(th);
    rep.errors[2].push_back(std::sqrt(run->ledger.rows.back().V));
  }
  const double expect[3] = {2.0, alpha, 1.0};
  bool all_zero = true;
  for (int n = 0; n < 3; ++n) {
    rep.factors.push_back(ratios(rep.errors[n], false));
    bool zero = true;
    for (double v : rep.errors[n]) zero = zero && v == 0;
    all_zero = all_zero && zero;
    const double slope = zero ? expect[n] : loglog_slope(eps, rep.errors[n]);
    rep.checks.push_back({"log-log slope, " + rep.norms[n], slope, expect[n],
                          zero || std::abs(slope - expect[n]) <= 0.2 + 1e-12});
  }
  rep.degenerate = all_zero;
  finish(rep);
  return rep;
}

StudyReport commutativity_study(const ProblemSetup& setup, const std::vector<double>& eps,
                                const std::vector<double>& taus, int jobs, NormSpec norms, RunCache* cache) {
  check_ladder(eps, false);
  check_ladder(taus, true);
  norms.validate();
  RunCache local(setup);
  RunCache& rc = cache ? *cache : local;
  const double e_min = eps.back(), e_prev = eps[eps.size() - 2];
  const double t_min = taus.back();
  StudyReport rep;
  rep.kind = "commute";
  rep.ladder = taus;
  std::vector<std::pair<double, double>> keys;
  for (double t : taus) keys.emplace_back(e_min, t);
  for (double e : eps)
    if (e != e_min) keys.emplace_back(e, t_min);
  const auto t0 = std::chrono::steady_clock::now();
  rc.prefetch(keys, taus, jobs);
  rep.runtimes.push_back(seconds_since(t0));

  const Grid& g = *setup.grid;
  std::vector<Trajectory> A, B;
  for (double t : taus) {
    A.push_back(rescaled_trajectory(*rc.nonlinear(e_min, t), g));
    B.push_back(linear_trajectory(*rc.linear(t)));
  }
  const Trajectory A_eps_prev = rescaled_trajectory(*rc.nonlinear(e_prev, t_min), g);
  const size_t L = taus.size() - 1;

  auto du = [&](const Trajectory& a, const Trajectory& b) { return linf_h1_difference(g, a, b); };
  auto dm = [&](const Trajectory& a, const Trajectory& b) { return ls_spacetime_difference(g, a, b, norms.s); };

  char sname[48];
  std::snprintf(sname, sizeof sname, "Ls(IxO) mu, s=%g", norms.s);
  rep.norms = {"path A tau increments, Linf(I;H1) u", "path B tau increments, Linf(I;H1) u",
               std::string("path A tau increments, ") + sname, std::string("path B tau increments, ") + sname};
  rep.errors.assign(4, {});
  for (size_t i = 0; i < L; ++i) {
    rep.errors[0].push_back(du(A[i], A[i + 1]));
    rep.errors[1].push_back(du(B[i], B[i + 1]));
    rep.errors[2].push_back(dm(A[i], A[i + 1]));
    rep.errors[3].push_back(dm(B[i], B[i + 1]));
  }
  for (int n = 0; n < 4; ++n) rep.factors.push_back(ratios(rep.errors[n], true));

  const double Du = du(A[L], B[L]), Dm = dm(A[L], B[L]);
  const double bound_u = rep.errors[0].back() + rep.errors[1].back() + du(A[L], A_eps_prev);
  const double bound_m = rep.errors[2].back() + rep.errors[3].back() + dm(A[L], A_eps_prev);
  rep.checks.push_back({"discrepancy Linf(I;H1) u", Du, bound_u, Du <= bound_u});
  rep.checks.push_back({std::string("discrepancy ") + sname, Dm, bound_m, Dm <= bound_m});
  rep.degenerate = Du == 0 && Dm == 0 && bound_u == 0 && bound_m == 0;
  rep.note =
      "path A: finest-eps proxy at each tau, then finest tau; its final increments are the tau-increment at the "
      "finest eps plus the eps-increment at the finest tau. path B: linear runs.";
  finish(rep);
  return rep;
}

}  // namespace tve
