#include "tve/nonlinear_scheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/SparseCholesky>

namespace tve {

// ---- config -------------------------------------------------------------

int SchemeConfig::num_steps() const {
  const double r = T / tau;
  const long K = std::lround(r);
  if (K < 1 || std::abs(r - K) > 1e-9 * std::max(1.0, r))
    throw Error(ErrorCode::ConfigParseError, "T / tau must be a positive integer");
  return static_cast<int>(K);
}

double SchemeConfig::eps_alpha() const { return std::pow(eps, alpha); }

void SchemeConfig::validate() const {
  if (!(alpha >= 1 && alpha <= 2)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [1, 2]");
  if (!(eps > 0 && eps <= 1)) throw Error(ErrorCode::ConfigParseError, "eps must lie in (0, 1]");
  if (!(tau > 0 && T > 0)) throw Error(ErrorCode::ConfigParseError, "tau and T must be positive");
  if (!(kappa >= 0)) throw Error(ErrorCode::ConfigParseError, "kappa must be nonnegative");
  if (!(tol_mech > 0 && tol_therm > 0)) throw Error(ErrorCode::ConfigParseError, "tolerances must be positive");
  num_steps();
}

// ---- ledger -------------------------------------------------------------

const char* RunLedger::header() {
  return "k,t,M,Win,E,Eeps,F_k,V_k,diss_step,res_mech,res_therm,min_theta,ebal_res,flux";
}

void RunLedger::write_csv(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::ConfigParseError, "cannot write " + path);
  std::fprintf(f, "%s\n", header());
  for (const auto& r : rows)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.t,
                 r.M, r.Win, r.E, r.Eeps, r.F, r.V, r.diss, r.res_mech, r.res_therm, r.min_theta, r.ebal_res, r.flux);
  std::fclose(f);
}

namespace {

double clip0(double t) { return t > 0 ? t : 0.0; }

// local dof layout of a cell stencil: (node k, component a) -> 2k + a
void local_operators(const CellStencil& st, Eigen::MatrixXd& BF, Eigen::MatrixXd& BG) {
  const int nl = 2 * static_cast<int>(st.nodes.size());
  BF.setZero(4, nl);
  BG.setZero(8, nl);
  static const int idx[2][2] = {{2, 3}, {3, 4}};
  for (size_t k = 0; k < st.nodes.size(); ++k)
    for (int a = 0; a < 2; ++a) {
      const int col = 2 * static_cast<int>(k) + a;
      for (int b = 0; b < 2; ++b) {
        BF(2 * a + b, col) = st.coef[k][b];
        for (int c = 0; c < 2; ++c) BG(4 * a + 2 * b + c, col) = st.coef[k][idx[b][c]];
      }
    }
}

}  // namespace

// ---- mechanical problem -------------------------------------------------

MechanicalProblem::MechanicalProblem(const Grid& g, const Material& m, const SchemeConfig& cfg,
                                     const StepState& prev, const SlabLoads& loads)
    : g_(g), m_(m), cfg_(cfg) {
  F0_ = g.deformation_gradient(prev.y);
  th_.resize(g.num_cells());
  th_avg_.resize(g.num_cells());
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto nodes = g.cell_nodes(c);
    double s = 0;
    for (int q = 0; q < 4; ++q) {
      th_[c][q] = clip0(prev.theta[nodes[q]]);
      s += th_[c][q];
    }
    th_avg_[c] = 0.25 * s;
  }
  load_ = loads.load;
  id_ = g.identity();
  dof_to_free_.assign(2 * g.num_nodes(), -1);
  for (int n = 0; n < g.num_nodes(); ++n)
    if (!g.is_dirichlet(n))
      for (int a = 0; a < 2; ++a) {
        dof_to_free_[2 * n + a] = static_cast<int>(free_.size());
        free_.push_back(2 * n + a);
      }
}

MechanicalProblem::Value MechanicalProblem::value(const VectorField& y) const {
  Value v;
  const auto F = g_.deformation_gradient(y);
  const auto G = g_.deformation_second_gradient(y);
  const double w = g_.cell_weight();
  for (int c = 0; c < g_.num_cells(); ++c) {
    if (!(F[c].determinant() > 0)) {
      v.feasible = false;
      v.value = INFINITY;
      return v;
    }
    const double el = m_.elastic_energy(F[c]);
    const double hy = m_.hyper_energy(G[c]);
    double cp = 0, cpa = 0;
    for (int q = 0; q < 4; ++q) {
      const double e = 0.25 * m_.coupling_energy(F[c], th_[c][q]);
      cp += e;
      cpa += std::abs(e);
    }
    const double r = m_.dissipation_potential(StrainRateData(F0_[c], F[c] - F0_[c]), th_avg_[c]) / cfg_.tau;
    v.value += w * (el + hy + cp + r);
    v.scale += w * (std::abs(el) + hy + cpa + r);
  }
  const double lt = cfg_.eps * load_.dot(y - id_);
  v.value -= lt;
  v.scale += std::abs(lt);
  return v;
}

VectorField MechanicalProblem::gradient(const VectorField& y) const {
  const auto F = g_.deformation_gradient(y);
  const auto G = g_.deformation_second_gradient(y);
  const double w = g_.cell_weight();
  VectorField grad = -cfg_.eps * load_;
  for (int c = 0; c < g_.num_cells(); ++c) {
    Mat2 P = m_.elastic_stress(F[c]);
    for (int q = 0; q < 4; ++q) P += 0.25 * m_.coupling_stress(F[c], th_[c][q]);
    P += m_.viscous_stress(StrainRateData(F0_[c], (F[c] - F0_[c]) / cfg_.tau), th_avg_[c]);
    P *= w;
    Tensor3 Q = m_.hyper_stress(G[c]);
    Q.v *= w;
    const auto& st = g_.stencils()[c];
    for (size_t k = 0; k < st.nodes.size(); ++k) {
      const auto& cf = st.coef[k];
      for (int a = 0; a < 2; ++a)
        grad[2 * st.nodes[k] + a] += P(a, 0) * cf[0] + P(a, 1) * cf[1] + Q(a, 0, 0) * cf[2] +
                                     (Q(a, 0, 1) + Q(a, 1, 0)) * cf[3] + Q(a, 1, 1) * cf[4];
    }
  }
  return grad;
}

Eigen::SparseMatrix<double> MechanicalProblem::hessian(const VectorField& y) const {
  const auto F = g_.deformation_gradient(y);
  const auto G = g_.deformation_second_gradient(y);
  const double w = g_.cell_weight();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(g_.num_cells()) * 576);
  Eigen::MatrixXd BF, BG;
  for (int c = 0; c < g_.num_cells(); ++c) {
    Mat4 hF = m_.elastic_hessian(F[c]);
    for (int q = 0; q < 4; ++q) hF += 0.25 * m_.coupling_hessian(F[c], th_[c][q]);
    hF += m_.viscous_hessian(F0_[c], th_avg_[c]) / cfg_.tau;
    const auto& st = g_.stencils()[c];
    local_operators(st, BF, BG);
    Eigen::MatrixXd K = w * (BF.transpose() * hF * BF);
    // keep the sparsity pattern fixed across iterations
    K += w * (BG.transpose() * m_.hyper_hessian(G[c]) * BG);
    const int nl = static_cast<int>(K.rows());
    for (int i = 0; i < nl; ++i) {
      const int fi = dof_to_free_[2 * st.nodes[i / 2] + i % 2];
      if (fi < 0) continue;
      for (int j = 0; j < nl; ++j) {
        const int fj = dof_to_free_[2 * st.nodes[j / 2] + j % 2];
        if (fj < 0) continue;
        trip.emplace_back(fi, fj, K(i, j));
      }
    }
  }
  const int nf = static_cast<int>(free_.size());
  Eigen::SparseMatrix<double> H(nf, nf);
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

double MechanicalProblem::scaled_residual(const VectorField& grad) const {
  double r = 0;
  for (int d : free_) r = std::max(r, std::abs(grad[d]) / g_.nodal_weights()[d / 2]);
  return r / cfg_.eps;
}

// ---- thermal problem ----------------------------------------------------

ThermalProblem::ThermalProblem(const Grid& g, const Material& m, const SchemeConfig& cfg, const StepState& prev,
                               const VectorField& y_new, const SlabLoads& loads)
    : g_(g), m_(m), cfg_(cfg) {
  F_ = g.deformation_gradient(y_new);
  const auto F0 = g.deformation_gradient(prev.y);
  const int nc = g.num_cells();
  w_prev_.resize(nc);
  h_.resize(nc);
  const bool reg = cfg.use_regularized();
  const double w = g.cell_weight();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < nc; ++c) {
    const auto nodes = g.cell_nodes(c);
    double th_avg = 0;
    for (int q = 0; q < 4; ++q) th_avg += 0.25 * clip0(prev.theta[nodes[q]]);
    const Mat2 Fdot = (F_[c] - F0[c]) / cfg.tau;
    const double xi = m.dissipation_rate(StrainRateData(F0[c], Fdot), th_avg);
    const double xr = reg ? Material::regularized_dissipation_rate(xi, cfg.alpha) : xi;
    xi_info_.xi_reg_excess = std::max(xi_info_.xi_reg_excess, xr - xi);
    if (xr != xi) xi_info_.xi_reg_identical = false;
    if (xi > 1) ++xi_info_.regularized_points;
    for (int q = 0; q < 4; ++q) {
      const double tp = prev.theta[nodes[q]];
      w_prev_[c][q] = m.internal_energy_ext(F0[c], tp);
      h_[c][q] = ddot(m.coupling_stress(F0[c], clip0(tp)), Fdot) + xr;
    }
    const Mat2 K = m.pulled_back_conductivity(F0[c], th_avg);
    Eigen::Matrix4d Ke = Eigen::Matrix4d::Zero();
    for (const auto& B : g.q1_gauss_gradients()) Ke += 0.25 * w * B.transpose() * K * B;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trip.emplace_back(nodes[a], nodes[b], Ke(a, b));
  }
  const ScalarField target = cfg.eps_alpha() * loads.theta_flat;
  robin_rhs_ = ScalarField::Zero(g.num_nodes());
  for (int n = 0; n < g.num_nodes(); ++n) {
    const double mb = cfg.kappa * g.boundary_weights()[n];
    if (mb == 0) continue;
    trip.emplace_back(n, n, mb);
    robin_rhs_[n] = mb * target[n];
  }
  A_.resize(g.num_nodes(), g.num_nodes());
  A_.setFromTriplets(trip.begin(), trip.end());
}

double ThermalProblem::value(const ScalarField& th) const {
  const double w = 0.25 * g_.cell_weight();
  double v = 0;
  for (int c = 0; c < g_.num_cells(); ++c) {
    const auto nodes = g_.cell_nodes(c);
    for (int q = 0; q < 4; ++q) {
      const double t = th[nodes[q]];
      v += w * ((m_.internal_energy_primitive_ext(F_[c], t) - w_prev_[c][q] * t) / cfg_.tau - h_[c][q] * t);
    }
  }
  return v + 0.5 * th.dot(A_ * th) - robin_rhs_.dot(th);
}

ScalarField ThermalProblem::gradient(const ScalarField& th) const {
  const double w = 0.25 * g_.cell_weight();
  ScalarField grad = A_ * th - robin_rhs_;
  for (int c = 0; c < g_.num_cells(); ++c) {
    const auto nodes = g_.cell_nodes(c);
    for (int q = 0; q < 4; ++q) {
      const double t = th[nodes[q]];
      grad[nodes[q]] += w * ((m_.internal_energy_ext(F_[c], t) - w_prev_[c][q]) / cfg_.tau - h_[c][q]);
    }
  }
  return grad;
}

Eigen::SparseMatrix<double> ThermalProblem::hessian(const ScalarField& th) const {
  const double w = 0.25 * g_.cell_weight();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(g_.num_nodes());
  for (int c = 0; c < g_.num_cells(); ++c) {
    const auto nodes = g_.cell_nodes(c);
    for (int q = 0; q < 4; ++q) d[nodes[q]] += w * m_.heat_capacity_ext(F_[c], th[nodes[q]]) / cfg_.tau;
  }
  Eigen::SparseMatrix<double> H = A_;
  for (int n = 0; n < g_.num_nodes(); ++n) H.coeffRef(n, n) += d[n];
  return H;
}

double ThermalProblem::scaled_residual(const ScalarField& grad) const {
  double r = 0;
  for (int n = 0; n < g_.num_nodes(); ++n) r = std::max(r, std::abs(grad[n]) / g_.nodal_weights()[n]);
  return r / cfg_.eps_alpha();
}

// ---- scheme -------------------------------------------------------------

NonlinearScheme::NonlinearScheme(const Grid& g, const Material& m, SchemeConfig cfg, LoadingProgram loads)
    : g_(g), m_(m), cfg_(cfg), loads_(std::move(loads)) {
  cfg_.validate();
}

StepState NonlinearScheme::init_state(const VectorField& u0, const ScalarField& mu0) const {
  g_.check_scalar(mu0);
  if (mu0.size() > 0 && mu0.minCoeff() < 0)
    throw Error(ErrorCode::InvalidInitialDatum, "initial temperature must be nonnegative");
  StepState s;
  s.k = 0;
  s.y = g_.initial_deformation(cfg_.eps, u0);
  s.theta = cfg_.eps_alpha() * mu0;
  for (const Mat2& F : g_.deformation_gradient(s.y))
    if (!(F.determinant() > 0)) throw Error(ErrorCode::NonPositiveDeterminant, "initial deformation");
  return s;
}

namespace {

template <class Solver>
bool factor_pd(Solver& solver, const Eigen::SparseMatrix<double>& H) {
  solver.factorize(H);
  if (solver.info() != Eigen::Success) return false;
  return solver.vectorD().minCoeff() > 0;
}

}  // namespace

VectorField NonlinearScheme::mechanical_step(const StepState& prev, const SlabLoads& loads,
                                             MechStepInfo* info) const {
  MechanicalProblem P(g_, m_, cfg_, prev, loads);
  VectorField y = prev.y;
  auto v = P.value(y);
  if (!v.feasible) throw Error(ErrorCode::NonPositiveDeterminant, "previous deformation is not admissible");
  MechStepInfo inf;
  inf.objective_prev = v.value;
  const auto& fr = P.free_dofs();
  const int nf = static_cast<int>(fr.size());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analyzed = false;
  double lambda = 0;

  VectorField grad = P.gradient(y);
  double res = P.scaled_residual(grad);
  int it = 0;
  for (; res > cfg_.tol_mech; ++it) {
    if (it >= cfg_.max_iter_mech) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "mechanical residual %.3e after %d iterations", res, it);
      throw Error(ErrorCode::MaxIterExceeded, buf);
    }
    Eigen::SparseMatrix<double> H = P.hessian(y);
    if (!analyzed) {
      solver.analyzePattern(H);
      analyzed = true;
    }
    Eigen::VectorXd gf(nf);
    for (int i = 0; i < nf; ++i) gf[i] = grad[fr[i]];
    const double diag_scale = H.diagonal().cwiseAbs().mean();
    lambda = lambda > 0 ? lambda * 0.1 : 0.0;
    if (lambda < 1e-12 * diag_scale) lambda = 0;

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Eigen::SparseMatrix<double> Hs = H;
      if (lambda > 0)
        for (int i = 0; i < nf; ++i) Hs.coeffRef(i, i) += lambda;
      if (!factor_pd(solver, Hs)) {
        lambda = lambda > 0 ? 10 * lambda : 1e-6 * diag_scale;
        continue;
      }
      const Eigen::VectorXd d = solver.solve(-gf);
      const double slope = gf.dot(d);
      double step = 1.0;
      for (int bt = 0; bt < cfg_.max_backtracks; ++bt, step *= 0.5) {
        VectorField yt = y;
        for (int i = 0; i < nf; ++i) yt[fr[i]] += step * d[i];
        const auto vt = P.value(yt);
        if (!vt.feasible) continue;
        bool ok = vt.value <= v.value + cfg_.armijo * step * slope;
        VectorField gt;
        if (!ok && vt.value <= v.value + 1e-13 * v.scale) {
          gt = P.gradient(yt);
          ok = P.scaled_residual(gt) < res;
        }
        if (ok) {
          y = yt;
          v = vt;
          grad = gt.size() ? gt : P.gradient(y);
          res = P.scaled_residual(grad);
          accepted = true;
          break;
        }
      }
      if (!accepted) lambda = lambda > 0 ? 10 * lambda : 1e-6 * diag_scale;
    }
    if (!accepted) throw Error(ErrorCode::LineSearchFailed, "no admissible descent step in the mechanical step");
  }
  inf.iterations = it;
  inf.residual = res;
  inf.objective = v.value;
  if (info) *info = inf;
  return y;
}

ScalarField NonlinearScheme::thermal_step(const StepState& prev, const VectorField& y_new, const SlabLoads& loads,
                                          ThermStepInfo* info) const {
  ThermalProblem P(g_, m_, cfg_, prev, y_new, loads);
  ThermStepInfo inf = P.xi_info();
  ScalarField th = prev.theta;
  double val = P.value(th);
  ScalarField grad = P.gradient(th);
  double res = P.scaled_residual(grad);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  bool analyzed = false;
  int it = 0;
  for (; res > cfg_.tol_therm; ++it) {
    if (it >= cfg_.max_iter_therm) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "thermal residual %.3e after %d iterations", res, it);
      throw Error(ErrorCode::MaxIterExceeded, buf);
    }
    const Eigen::SparseMatrix<double> H = P.hessian(th);
    if (!analyzed) {
      solver.analyzePattern(H);
      analyzed = true;
    }
    if (!factor_pd(solver, H)) throw Error(ErrorCode::NewtonDiverged, "thermal Hessian is not positive definite");
    const Eigen::VectorXd d = solver.solve(-grad);
    const double slope = grad.dot(d);
    bool accepted = false;
    double step = 1.0;
    for (int bt = 0; bt < 40 && !accepted; ++bt, step *= 0.5) {
      const ScalarField tt = th + step * d;
      const double vt = P.value(tt);
      bool ok = vt <= val + cfg_.armijo * step * slope;
      ScalarField gt;
      if (!ok && vt <= val + 1e-13 * (std::abs(val) + 1e-300)) {
        gt = P.gradient(tt);
        ok = P.scaled_residual(gt) < res;
      }
      if (ok) {
        th = tt;
        val = vt;
        grad = gt.size() ? gt : P.gradient(th);
        res = P.scaled_residual(grad);
        accepted = true;
      }
    }
    if (!accepted) throw Error(ErrorCode::NewtonDiverged, "thermal line search failed");
  }
  inf.iterations = it;
  inf.residual = res;
  inf.min_theta_raw = th.minCoeff();
  if (inf.min_theta_raw < -cfg_.tol_neg()) {
    inf.clamped = true;
    th = th.cwiseMax(0.0);
  }
  if (info) *info = inf;
  return th;
}

double NonlinearScheme::mechanical_energy(const VectorField& y) const {
  const auto F = g_.deformation_gradient(y);
  const auto G = g_.deformation_second_gradient(y);
  double s = 0;
  for (int c = 0; c < g_.num_cells(); ++c) s += m_.elastic_energy(F[c]) + m_.hyper_energy(G[c]);
  return s * g_.cell_weight();
}

double NonlinearScheme::internal_energy_integral(const StepState& st) const {
  const auto F = g_.deformation_gradient(st.y);
  double s = 0;
  for (int c = 0; c < g_.num_cells(); ++c)
    for (int n : g_.cell_nodes(c)) s += m_.internal_energy_ext(F[c], st.theta[n]);
  return 0.25 * g_.cell_weight() * s;
}

TestedIdentities NonlinearScheme::tested_identities(const StepState& prev, const StepState& next,
                                                    const SlabLoads& loads) const {
  const double tau = cfg_.tau;
  const double w = g_.cell_weight();
  const auto F0 = g_.deformation_gradient(prev.y);
  const auto F1 = g_.deformation_gradient(next.y);
  const auto G1 = g_.deformation_second_gradient(next.y);
  const VectorField dy = (next.y - prev.y) / tau;
  const auto dG = g_.second_gradient_at_quadrature(dy);
  TestedIdentities r;
  for (int c = 0; c < g_.num_cells(); ++c) {
    const auto nodes = g_.cell_nodes(c);
    const Mat2 dF = (F1[c] - F0[c]) / tau;
    double th_avg = 0;
    for (int n : nodes) th_avg += 0.25 * clip0(prev.theta[n]);
    Mat2 P = m_.elastic_stress(F1[c]);
    for (int n : nodes) P += 0.25 * m_.coupling_stress(F1[c], clip0(prev.theta[n]));
    const double xi = m_.dissipation_rate(StrainRateData(F0[c], dF), th_avg);
    const double xr = cfg_.use_regularized() ? Material::regularized_dissipation_rate(xi, cfg_.alpha) : xi;
    r.mech += w * (ddot(P, dF) + m_.hyper_stress(G1[c]).v.dot(dG[c].v) + xi);
    for (int n : nodes) {
      const double dw = (m_.internal_energy_ext(F1[c], next.theta[n]) - m_.internal_energy_ext(F0[c], prev.theta[n])) / tau;
      r.therm += 0.25 * w * (dw - ddot(m_.coupling_stress(F0[c], clip0(prev.theta[n])), dF) - xr);
    }
  }
  r.mech -= cfg_.eps * loads.load.dot(dy);
  const double ea = cfg_.eps_alpha();
  for (int n = 0; n < g_.num_nodes(); ++n)
    r.therm += cfg_.kappa * g_.boundary_weights()[n] * (next.theta[n] - ea * loads.theta_flat[n]);
  return r;
}

LedgerRow NonlinearScheme::ledger_row(const StepState* prev, const StepState& s, const SlabLoads* slab,
                                      double V) const {
  LedgerRow r;
  r.k = s.k;
  r.t = s.k * cfg_.tau;
  const double eps = cfg_.eps, al = cfg_.alpha;
  const auto F = g_.deformation_gradient(s.y);
  r.M = mechanical_energy(s.y);
  double win = 0, wpow = 0;
  for (int c = 0; c < g_.num_cells(); ++c)
    for (int n : g_.cell_nodes(c)) {
      const double wi = m_.internal_energy_ext(F[c], s.theta[n]);
      win += wi;
      wpow += std::pow(std::max(wi, 0.0), 2 / al);
      if (!m_.in_validity_region(F[c], s.theta[n])) ++r.validity_violations;
    }
  const double qw = 0.25 * g_.cell_weight();
  r.Win = qw * win;
  r.E = r.M + r.Win;
  r.Eeps = r.M / (eps * eps) + al / (2 * eps * eps) * qw * wpow;
  const SlabLoads inst = loads_at(loads_, g_, r.t);
  r.F = r.E - eps * inst.load.dot(s.y - g_.identity());
  r.V = V;
  r.min_theta = s.theta.minCoeff();
  const ScalarField& tf = slab ? slab->theta_flat : inst.theta_flat;
  const double ea = cfg_.eps_alpha();
  for (int n = 0; n < g_.num_nodes(); ++n)
    r.flux += cfg_.kappa * g_.boundary_weights()[n] * (s.theta[n] - ea * tf[n]);
  if (prev && slab) {
    const auto F0 = g_.deformation_gradient(prev->y);
    const auto th0 = g_.cell_average(prev->theta.cwiseMax(0.0));
    double d = 0;
    for (int c = 0; c < g_.num_cells(); ++c)
      d += m_.dissipation_rate(StrainRateData(F0[c], (F[c] - F0[c]) / cfg_.tau), th0[c]);
    r.diss = cfg_.tau * g_.cell_weight() * d;
    const auto ti = tested_identities(*prev, s, *slab);
    r.ebal_res = cfg_.tau * (std::abs(ti.mech) + std::abs(ti.therm));
  }
  return r;
}

RunResult NonlinearScheme::run(const VectorField& u0, const ScalarField& mu0) const {
  RunResult out;
  out.cfg = cfg_;
  out.steps.push_back(init_state(u0, mu0));
  out.ledger.rows.push_back(ledger_row(nullptr, out.steps[0], nullptr, 0.0));
  const int K = cfg_.num_steps();
  double V = 0;
  for (int k = 1; k <= K; ++k) {
    const StepState& prev = out.steps.back();
    const SlabLoads slab = timeslab_average(loads_, g_, k, cfg_.tau);
    StepState next;
    next.k = k;
    MechStepInfo mi;
    ThermStepInfo ti;
    try {
      next.y = mechanical_step(prev, slab, &mi);
      next.theta = thermal_step(prev, next.y, slab, &ti);
    } catch (const Error& e) {
      out.failure = StepFailure{k, e.code(), e.what()};
      break;
    }
    const auto F0 = g_.deformation_gradient(prev.y);
    const auto F1 = g_.deformation_gradient(next.y);
    for (int c = 0; c < g_.num_cells(); ++c) V += (F1[c] - F0[c]).squaredNorm() / cfg_.tau * g_.cell_weight();
    LedgerRow row = ledger_row(&prev, next, &slab, V);
    row.res_mech = mi.residual;
    row.res_therm = ti.residual;
    row.objective_prev = mi.objective_prev;
    row.objective = mi.objective;
    row.mech_iters = mi.iterations;
    row.therm_iters = ti.iterations;
    row.nonneg_violation = ti.clamped;
    row.therm = ti;
    out.ledger.rows.push_back(row);
    out.steps.push_back(std::move(next));
  }
  return out;
}

}  // namespace tve
