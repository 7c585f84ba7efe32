#include "tve/linear_scheme.hpp"

#include <cmath>
#include <cstdio>

namespace tve {

int LinearConfig::num_steps() const {
  const double r = T / tau;
  const long K = std::lround(r);
  if (K < 1 || std::abs(r - K) > 1e-9 * std::max(1.0, r))
    throw Error(ErrorCode::ConfigParseError, "T / tau must be a positive integer");
  return static_cast<int>(K);
}

void LinearConfig::validate() const {
  if (!(alpha >= 1 && alpha <= 2)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [1, 2]");
  if (!(tau > 0 && T > 0)) throw Error(ErrorCode::ConfigParseError, "tau and T must be positive");
  if (!(kappa >= 0)) throw Error(ErrorCode::ConfigParseError, "kappa must be nonnegative");
  num_steps();
}

const char* LinearRun::header() { return "k,t,Elin,diss_step,mu_mass,min_mu,res_mech,res_therm"; }

void LinearRun::write_csv(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::ConfigParseError, "cannot write " + path);
  std::fprintf(f, "%s\n", header());
  for (const auto& r : ledger)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.k, r.t, r.Elin, r.diss, r.mu_mass, r.min_mu,
                 r.res_mech, r.res_therm);
  std::fclose(f);
}

namespace {

Mat4 sym_projector() {
  Mat4 P = Mat4::Zero();
  P(0, 0) = P(3, 3) = 1;
  P(1, 1) = P(1, 2) = P(2, 1) = P(2, 2) = 0.5;
  return P;
}

// 4 x 8 map from the corner displacements (node-major, component-minor) to vec(grad u)
Eigen::Matrix<double, 4, 8> gradient_map(const Grid& g, int c) {
  Eigen::Matrix<double, 4, 8> B = Eigen::Matrix<double, 4, 8>::Zero();
  const auto& st = g.stencils()[c];
  const auto nodes = g.cell_nodes(c);
  for (size_t k = 0; k < st.nodes.size(); ++k) {
    int q = -1;
    for (int i = 0; i < 4; ++i)
      if (nodes[i] == st.nodes[k]) q = i;
    if (q < 0) continue;  // nodes only seen by the second-difference stencil
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) B(2 * a + b, 2 * q + a) = st.coef[k][b];
  }
  return B;
}

}  // namespace

LinearScheme::LinearScheme(const Grid& g, LinearizedTensors tensors, LinearConfig cfg, LoadingProgram loads)
    : g_(g), t_(std::move(tensors)), cfg_(cfg), loads_(std::move(loads)) {
  cfg_.validate();
  const Mat4 P = sym_projector();
  CWs_ = P * t_.CW * P;
  CDs_ = P * t_.CD * P;
  CDas_ = P * t_.CD_alpha * P;

  dof_to_free_.assign(2 * g.num_nodes(), -1);
  for (int n = 0; n < g.num_nodes(); ++n)
    if (!g.is_dirichlet(n))
      for (int a = 0; a < 2; ++a) {
        dof_to_free_[2 * n + a] = static_cast<int>(free_.size());
        free_.push_back(2 * n + a);
      }

  const double w = g.cell_weight();
  const Mat4 Cstep = CWs_ + CDs_ / cfg_.tau;
  std::vector<Eigen::Triplet<double>> tu, tv, tm;
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto nodes = g.cell_nodes(c);
    const auto B = gradient_map(g, c);
    const Eigen::Matrix<double, 8, 8> Ke = w * B.transpose() * Cstep * B;
    const Eigen::Matrix<double, 8, 8> Kv = w * B.transpose() * CDs_ * B;
    for (int i = 0; i < 8; ++i) {
      const int fi = dof_to_free_[2 * nodes[i / 2] + i % 2];
      if (fi < 0) continue;
      for (int j = 0; j < 8; ++j) {
        const int dj = 2 * nodes[j / 2] + j % 2;
        tv.emplace_back(fi, dj, Kv(i, j));
        const int fj = dof_to_free_[dj];
        if (fj >= 0) tu.emplace_back(fi, fj, Ke(i, j));
      }
    }
    Eigen::Matrix4d Kt = Eigen::Matrix4d::Zero();
    for (const auto& G : g.q1_gauss_gradients()) Kt += 0.25 * w * G.transpose() * t_.K0 * G;
    for (int a = 0; a < 4; ++a) {
      tm.emplace_back(nodes[a], nodes[a], 0.25 * w * t_.cV_bar / cfg_.tau);
      for (int b = 0; b < 4; ++b) tm.emplace_back(nodes[a], nodes[b], Kt(a, b));
    }
  }
  for (int n = 0; n < g.num_nodes(); ++n)
    if (g.boundary_weights()[n] > 0) tm.emplace_back(n, n, cfg_.kappa * g.boundary_weights()[n]);
  const int nf = static_cast<int>(free_.size());
  Ku_.resize(nf, nf);
  Ku_.setFromTriplets(tu.begin(), tu.end());
  Kvisc_.resize(nf, 2 * g.num_nodes());
  Kvisc_.setFromTriplets(tv.begin(), tv.end());
  Kmu_.resize(g.num_nodes(), g.num_nodes());
  Kmu_.setFromTriplets(tm.begin(), tm.end());
  solve_u_.compute(Ku_);
  if (solve_u_.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "linear mechanical system");
  solve_mu_.compute(Kmu_);
  if (solve_mu_.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "linear thermal system");
}

Eigen::VectorXd LinearScheme::restrict(const VectorField& v) const {
  Eigen::VectorXd r(free_.size());
  for (size_t i = 0; i < free_.size(); ++i) r[i] = v[free_[i]];
  return r;
}

VectorField LinearScheme::expand(const Eigen::VectorXd& v) const {
  VectorField out = VectorField::Zero(2 * g_.num_nodes());
  for (size_t i = 0; i < free_.size(); ++i) out[free_[i]] = v[i];
  return out;
}

std::vector<Mat2> LinearScheme::sym_gradients(const VectorField& u) const {
  auto G = g_.gradient_at_quadrature(u);
  for (auto& e : G) e = 0.5 * (e + e.transpose()).eval();
  return G;
}

LinearState LinearScheme::init_state(const VectorField& u0, const ScalarField& mu0) const {
  g_.check_vector(u0);
  g_.check_scalar(mu0);
  for (int n = 0; n < g_.num_nodes(); ++n)
    if (g_.is_dirichlet(n) && u0.segment<2>(2 * n).norm() != 0)
      throw Error(ErrorCode::InvalidInitialDatum, "initial displacement does not vanish on the Dirichlet part");
  return LinearState{0, u0, mu0};
}

VectorField LinearScheme::linear_mechanical_step(const LinearState& prev, const SlabLoads& loads,
                                                 double* rel_res) const {
  Eigen::VectorXd rhs = restrict(loads.load) + Kvisc_ * prev.u / cfg_.tau;
  if (t_.B.norm() > 0) {
    const auto mu_c = g_.cell_average(prev.mu);
    const double w = g_.cell_weight();
    VectorField f = VectorField::Zero(2 * g_.num_nodes());
    for (int c = 0; c < g_.num_cells(); ++c) {
      const auto& st = g_.stencils()[c];
      const Mat2 S = w * mu_c[c] * t_.B;
      for (size_t k = 0; k < st.nodes.size(); ++k)
        for (int a = 0; a < 2; ++a) f[2 * st.nodes[k] + a] -= S(a, 0) * st.coef[k][0] + S(a, 1) * st.coef[k][1];
    }
    rhs += restrict(f);
  }
  const Eigen::VectorXd x = solve_u_.solve(rhs);
  if (solve_u_.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "linear mechanical solve");
  if (rel_res) *rel_res = (Ku_ * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
  return expand(x);
}

ScalarField LinearScheme::linear_thermal_step(const LinearState& prev, const VectorField& u_new,
                                              const SlabLoads& loads, double* rel_res) const {
  const double w = g_.cell_weight();
  ScalarField rhs = ScalarField::Zero(g_.num_nodes());
  for (int c = 0; c < g_.num_cells(); ++c)
    for (int n : g_.cell_nodes(c)) rhs[n] += 0.25 * w * t_.cV_bar / cfg_.tau * prev.mu[n];
  if (CDas_.norm() > 0) {
    const auto e = sym_gradients((u_new - prev.u) / cfg_.tau);
    for (int c = 0; c < g_.num_cells(); ++c) {
      const double s = vec(e[c]).dot(CDas_ * vec(e[c]));
      for (int n : g_.cell_nodes(c)) rhs[n] += 0.25 * w * s;
    }
  }
  for (int n = 0; n < g_.num_nodes(); ++n)
    rhs[n] += cfg_.kappa * g_.boundary_weights()[n] * loads.theta_flat[n];
  const ScalarField mu = solve_mu_.solve(rhs);
  if (solve_mu_.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "linear thermal solve");
  if (rel_res) *rel_res = (Kmu_ * mu - rhs).norm() / std::max(rhs.norm(), 1e-300);
  return mu;
}

double LinearScheme::elastic_energy(const VectorField& u) const {
  double s = 0;
  for (const Mat2& e : sym_gradients(u)) s += vec(e).dot(CWs_ * vec(e));
  return 0.5 * g_.cell_weight() * s;
}

double LinearScheme::viscous_form(const VectorField& v) const {
  double s = 0;
  for (const Mat2& e : sym_gradients(v)) s += vec(e).dot(CDs_ * vec(e));
  return g_.cell_weight() * s;
}

LinearRun LinearScheme::run_linear(const VectorField& u0, const ScalarField& mu0) const {
  LinearRun out;
  out.cfg = cfg_;
  out.steps.push_back(init_state(u0, mu0));
  const Eigen::VectorXd mass = g_.nodal_weights() * t_.cV_bar;
  auto row = [&](const LinearState& s, double diss, double rm, double rt) {
    LinearLedgerRow r;
    r.k = s.k;
    r.t = s.k * cfg_.tau;
    r.Elin = elastic_energy(s.u);
    r.diss = diss;
    r.mu_mass = mass.dot(s.mu);
    r.min_mu = s.mu.minCoeff();
    r.res_mech = rm;
    r.res_therm = rt;
    return r;
  };
  out.ledger.push_back(row(out.steps[0], 0, 0, 0));
  for (int k = 1; k <= cfg_.num_steps(); ++k) {
    const LinearState& prev = out.steps.back();
    const SlabLoads slab = timeslab_average(loads_, g_, k, cfg_.tau);
    LinearState next;
    next.k = k;
    double rm = 0, rt = 0;
    next.u = linear_mechanical_step(prev, slab, &rm);
    next.mu = linear_thermal_step(prev, next.u, slab, &rt);
    const double diss = cfg_.tau * viscous_form((next.u - prev.u) / cfg_.tau);
    out.ledger.push_back(row(next, diss, rm, rt));
    out.steps.push_back(std::move(next));
  }
  return out;
}

}  // namespace tve
