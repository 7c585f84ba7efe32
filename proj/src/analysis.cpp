#include "tve/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace tve {

Trajectory deformation_trajectory(const RunResult& run) {
  Trajectory tr;
  tr.tau = run.cfg.tau;
  for (const auto& s : run.steps) {
    tr.v.push_back(s.y);
    tr.s.push_back(s.theta);
  }
  return tr;
}

Trajectory rescaled_trajectory(const RunResult& run, const Grid& g) {
  Trajectory tr;
  tr.tau = run.cfg.tau;
  const VectorField id = g.identity();
  const double ea = run.cfg.eps_alpha();
  for (const auto& s : run.steps) {
    tr.v.push_back((s.y - id) / run.cfg.eps);
    tr.s.push_back(s.theta / ea);
  }
  return tr;
}

Trajectory linear_trajectory(const LinearRun& run) {
  Trajectory tr;
  tr.tau = run.cfg.tau;
  for (const auto& s : run.steps) {
    tr.v.push_back(s.u);
    tr.s.push_back(s.mu);
  }
  return tr;
}

namespace {

// slab index k with t in ((k-1) tau, k tau], and the affine weight of step k
std::pair<int, double> locate(const Trajectory& tr, double t) {
  const int K = static_cast<int>(tr.v.size()) - 1;
  if (K < 0 || t < -1e-12 * tr.tau || t > tr.T() + 1e-12 * tr.tau)
    throw Error(ErrorCode::TimeOutOfRange, "interpolant evaluated outside [0, T]");
  if (K == 0) return {0, 1.0};
  const double x = t / tr.tau;
  int k = static_cast<int>(std::ceil(x - 1e-9));
  k = std::clamp(k, 1, K);
  return {k, std::clamp(x - (k - 1), 0.0, 1.0)};
}

}  // namespace

std::pair<VectorField, ScalarField> evaluate_interpolant(const Trajectory& tr, InterpolantMode mode, double t) {
  auto [k, lam] = locate(tr, t);
  if (tr.v.size() == 1) return {tr.v[0], tr.s[0]};
  // exactly at a grid time all modes return that step
  if (lam == 1.0) return {tr.v[k], tr.s[k]};
  if (lam == 0.0) return {tr.v[k - 1], tr.s[k - 1]};
  switch (mode) {
    case InterpolantMode::Left: return {tr.v[k - 1], tr.s[k - 1]};
    case InterpolantMode::Right: return {tr.v[k], tr.s[k]};
    case InterpolantMode::Affine:
      return {(1 - lam) * tr.v[k - 1] + lam * tr.v[k], (1 - lam) * tr.s[k - 1] + lam * tr.s[k]};
  }
  return {tr.v[k], tr.s[k]};
}

VectorField interpolant_rate(const Trajectory& tr, double t) {
  auto [k, lam] = locate(tr, t);
  (void)lam;
  if (tr.v.size() == 1) return VectorField::Zero(tr.v[0].size());
  return (tr.v[k] - tr.v[k - 1]) / tr.tau;
}

void NormSpec::validate() const {
  const double d = kDim;
  if (!(r >= 1 && r < (d + 2) / (d + 1))) throw Error(ErrorCode::InvalidNormSpec, "r must lie in [1, (d+2)/(d+1))");
  if (!(s >= 1 && s < (d + 2) / d)) throw Error(ErrorCode::InvalidNormSpec, "s must lie in [1, (d+2)/d)");
}

double h1_norm(const Grid& g, const VectorField& v) {
  double s = 0;
  const auto& m = g.nodal_weights();
  for (int n = 0; n < g.num_nodes(); ++n) s += m[n] * v.segment<2>(2 * n).squaredNorm();
  for (const Mat2& G : g.gradient_at_quadrature(v)) s += g.cell_weight() * G.squaredNorm();
  return std::sqrt(s);
}

double lp_norm(const Grid& g, const ScalarField& s, double p) {
  g.check_scalar(s);
  const auto& m = g.nodal_weights();
  double acc = 0;
  for (int n = 0; n < g.num_nodes(); ++n) acc += m[n] * std::pow(std::abs(s[n]), p);
  return std::pow(acc, 1 / p);
}

namespace {

// (coarse, fine, ratio)
struct Nested {
  const Trajectory* c;
  const Trajectory* f;
  int r;
};

Nested nest(const Trajectory& a, const Trajectory& b) {
  const Trajectory* c = a.tau >= b.tau ? &a : &b;
  const Trajectory* f = a.tau >= b.tau ? &b : &a;
  const double q = c->tau / f->tau;
  const int r = static_cast<int>(std::lround(q));
  if (r < 1 || std::abs(q - r) > 1e-9 * q) throw Error(ErrorCode::NonNestedLadder, "time steps are not nested");
  if (std::abs(c->T() - f->T()) > 1e-9 * c->T()) throw Error(ErrorCode::ShapeMismatch, "different horizons");
  return {c, f, r};
}

}  // namespace

double linf_h1_difference(const Grid& g, const Trajectory& a, const Trajectory& b) {
  const auto [c, f, r] = nest(a, b);
  double m = 0;
  for (size_t j = 0; j < f->v.size(); ++j) {
    const auto cv = evaluate_interpolant(*c, InterpolantMode::Affine, j * f->tau).first;
    m = std::max(m, h1_norm(g, cv - f->v[j]));
  }
  return m;
}

double l2_h1_rate_difference(const Grid& g, const Trajectory& a, const Trajectory& b) {
  const auto [c, f, r] = nest(a, b);
  double s = 0;
  for (size_t j = 1; j < f->v.size(); ++j) {
    const size_t kc = (j + r - 1) / r;
    const VectorField dc = (c->v[kc] - c->v[kc - 1]) / c->tau;
    const VectorField df = (f->v[j] - f->v[j - 1]) / f->tau;
    const double n = h1_norm(g, dc - df);
    s += f->tau * n * n;
  }
  return std::sqrt(s);
}

double ls_spacetime_difference(const Grid& g, const Trajectory& a, const Trajectory& b, double p) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  const auto [c, f, r] = nest(a, b);
  double acc = 0;
  for (size_t j = 1; j < f->v.size(); ++j)
    for (int q = 0; q < 5; ++q) {
      const double t = (j - 1 + 0.5 * (1 + x[q])) * f->tau;
      const ScalarField d = evaluate_interpolant(*c, InterpolantMode::Affine, t).second -
                            evaluate_interpolant(*f, InterpolantMode::Affine, t).second;
      const double n = lp_norm(g, d, p);
      acc += 0.5 * w[q] * f->tau * std::pow(n, p);
    }
  return std::pow(acc, 1 / p);
}

double max_l1_difference(const Grid& g, const Trajectory& a, const Trajectory& b) {
  const auto [c, f, r] = nest(a, b);
  double m = 0;
  for (size_t j = 0; j < f->s.size(); ++j) {
    const auto cs = evaluate_interpolant(*c, InterpolantMode::Affine, j * f->tau).second;
    m = std::max(m, lp_norm(g, cs - f->s[j], 1.0));
  }
  return m;
}

EnergyInequalityFit check_step_energy_inequality(const NonlinearScheme& scheme, const RunResult& run, double c_M) {
  EnergyInequalityFit fit;
  fit.c_M = c_M;
  const Grid& g = scheme.grid();
  const auto& cfg = run.cfg;
  const double eps2 = cfg.eps * cfg.eps;
  for (size_t k = 1; k < run.steps.size(); ++k) {
    const auto& r0 = run.ledger.rows[k - 1];
    const auto& r1 = run.ledger.rows[k];
    const SlabLoads slab = timeslab_average(scheme.loads(), g, static_cast<int>(k), cfg.tau);
    const ScalarField th1 = run.steps[k - 1].theta.cwiseMax(0.0).cwiseMin(1.0);
    const double source = std::pow(lp_norm(g, th1, 2.0), 2) + eps2 * (slab.f_l2 * slab.f_l2 + slab.g_l2 * slab.g_l2);
    const double lhs = r1.M + c_M * (r1.V - r0.V);
    const double excess = lhs - r0.M;
    const double denom = cfg.tau * (r0.M + source);
    if (excess > 1e-14 * std::max(1.0, r0.M)) {
      if (denom <= 0) fit.finite = false;
      else fit.C_M = std::max(fit.C_M, excess / denom);
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(r1.objective_prev));
    const bool ok = r1.objective <= r1.objective_prev + slack;
    fit.competitor.push_back(ok);
    fit.competitor_ok = fit.competitor_ok && ok;
  }
  return fit;
}

EnergyBalanceReport check_energy_balance(const NonlinearScheme& scheme, const RunResult& run) {
  EnergyBalanceReport rep;
  const Grid& g = scheme.grid();
  const auto& cfg = run.cfg;
  double escale = 1.0;
  for (const auto& r : run.ledger.rows) escale = std::max(escale, std::abs(r.E));
  for (size_t k = 1; k < run.steps.size(); ++k) {
    const SlabLoads slab = timeslab_average(scheme.loads(), g, static_cast<int>(k), cfg.tau);
    const auto ti = scheme.tested_identities(run.steps[k - 1], run.steps[k], slab);
    const double res = cfg.tau * (std::abs(ti.mech) + std::abs(ti.therm));
    const VectorField dy = (run.steps[k].y - run.steps[k - 1].y) / cfg.tau;
    double l1 = 0;
    for (int n = 0; n < g.num_nodes(); ++n) l1 += g.nodal_weights()[n] * dy.segment<2>(2 * n).lpNorm<1>();
    const double bound =
        cfg.tau * (cfg.tol_mech * cfg.eps * l1 + cfg.tol_therm * cfg.eps_alpha() * g.area()) + 1e-12 * escale;
    rep.residual.push_back(res);
    rep.bound.push_back(bound);
    rep.max_residual = std::max(rep.max_residual, res);
    rep.passed = rep.passed && res <= bound;
  }
  return rep;
}

}  // namespace tve
