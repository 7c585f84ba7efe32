#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "tve/grid.hpp"
#include "tve/loading.hpp"
#include "tve/material.hpp"

namespace tve {

struct SchemeConfig {
  double eps = 1.0;
  double alpha = 2.0;
  double tau = 1.0 / 32;
  double T = 0.5;
  double kappa = 1.0;
  std::optional<bool> regularize_xi;  // unset: regularize iff alpha < 2
  double tol_mech = 1e-8;
  double tol_therm = 1e-8;
  int max_iter_mech = 60;
  int max_iter_therm = 60;
  double armijo = 1e-4;
  int max_backtracks = 60;

  int num_steps() const;
  bool use_regularized() const { return regularize_xi.value_or(alpha < 2); }
  double eps_alpha() const;
  double tol_neg() const { return 1e-10 * eps_alpha(); }
  void validate() const;
};

struct StepState {
  int k = 0;
  VectorField y;
  ScalarField theta;
};

struct MechStepInfo {
  int iterations = 0;
  double residual = 0.0;        // scaled sup-norm of the Euler-Lagrange residual
  double objective_prev = 0.0;  // objective at y^{k-1}
  double objective = 0.0;       // objective at y^k
};

struct ThermStepInfo {
  int iterations = 0;
  double residual = 0.0;
  double min_theta_raw = 0.0;   // before clamping
  bool clamped = false;
  double xi_reg_excess = 0.0;   // max over quadrature points of xi_reg - xi
  bool xi_reg_identical = true; // xi_reg == xi bitwise everywhere
  int regularized_points = 0;   // points with xi > 1
};

struct LedgerRow {
  int k = 0;
  double t = 0, M = 0, Win = 0, E = 0, Eeps = 0, F = 0, V = 0, diss = 0;
  double res_mech = 0, res_therm = 0, min_theta = 0, ebal_res = 0, flux = 0;
  // not part of the csv
  double objective_prev = 0, objective = 0;
  int mech_iters = 0, therm_iters = 0, validity_violations = 0;
  bool nonneg_violation = false;
  ThermStepInfo therm;
};

struct RunLedger {
  std::vector<LedgerRow> rows;
  static const char* header();
  void write_csv(const std::string& path) const;
};

struct StepFailure {
  int step = 0;
  ErrorCode code = ErrorCode::MaxIterExceeded;
  std::string message;
};

struct RunResult {
  SchemeConfig cfg;
  std::vector<StepState> steps;
  RunLedger ledger;
  std::optional<StepFailure> failure;
  bool completed() const { return !failure && static_cast<int>(steps.size()) == cfg.num_steps() + 1; }
};

// Per-step discrete functional minimized in the mechanical step,
//   M(y) + W_cpl(y, theta^{k-1}) + R(y^{k-1}, y - y^{k-1}, theta^{k-1}) / tau - eps <l^k, y - id>.
class MechanicalProblem {
 public:
  MechanicalProblem(const Grid& g, const Material& m, const SchemeConfig& cfg, const StepState& prev,
                    const SlabLoads& loads);

  struct Value {
    double value = 0;
    double scale = 0;  // sum of absolute contributions, for roundoff-aware comparisons
    bool feasible = true;
  };
  Value value(const VectorField& y) const;
  VectorField gradient(const VectorField& y) const;           // all dofs
  Eigen::SparseMatrix<double> hessian(const VectorField& y) const;  // free dofs only
  double scaled_residual(const VectorField& grad) const;
  const std::vector<int>& free_dofs() const { return free_; }

 private:
  const Grid& g_;
  const Material& m_;
  const SchemeConfig& cfg_;
  std::vector<Mat2> F0_;
  std::vector<std::array<double, 4>> th_;  // theta^{k-1} at cell corners, clipped at 0
  std::vector<double> th_avg_;
  VectorField load_, id_;
  std::vector<int> free_, dof_to_free_;
};

// Convex thermal functional of the second half-step.
class ThermalProblem {
 public:
  ThermalProblem(const Grid& g, const Material& m, const SchemeConfig& cfg, const StepState& prev,
                 const VectorField& y_new, const SlabLoads& loads);

  double value(const ScalarField& th) const;
  ScalarField gradient(const ScalarField& th) const;
  Eigen::SparseMatrix<double> hessian(const ScalarField& th) const;
  double scaled_residual(const ScalarField& grad) const;
  const ThermStepInfo& xi_info() const { return xi_info_; }

 private:
  const Grid& g_;
  const Material& m_;
  const SchemeConfig& cfg_;
  std::vector<Mat2> F_;
  std::vector<std::array<double, 4>> w_prev_, h_;
  Eigen::SparseMatrix<double> A_;  // conduction + Robin
  ScalarField robin_rhs_;
  ThermStepInfo xi_info_;
};

// Mechanical and thermal Euler-Lagrange equations tested with delta y and 1.
struct TestedIdentities {
  double mech = 0;
  double therm = 0;
};

class NonlinearScheme {
 public:
  NonlinearScheme(const Grid& g, const Material& m, SchemeConfig cfg, LoadingProgram loads);

  const Grid& grid() const { return g_; }
  const Material& material() const { return m_; }
  const SchemeConfig& config() const { return cfg_; }
  const LoadingProgram& loads() const { return loads_; }

  StepState init_state(const VectorField& u0, const ScalarField& mu0) const;
  VectorField mechanical_step(const StepState& prev, const SlabLoads& loads, MechStepInfo* info = nullptr) const;
  ScalarField thermal_step(const StepState& prev, const VectorField& y_new, const SlabLoads& loads,
                           ThermStepInfo* info = nullptr) const;
  RunResult run(const VectorField& u0, const ScalarField& mu0) const;

  // energies on a state
  double mechanical_energy(const VectorField& y) const;
  double internal_energy_integral(const StepState& s) const;
  TestedIdentities tested_identities(const StepState& prev, const StepState& next, const SlabLoads& loads) const;
  LedgerRow ledger_row(const StepState* prev, const StepState& s, const SlabLoads* slab, double V) const;

 private:
  const Grid& g_;
  const Material& m_;
  SchemeConfig cfg_;
  LoadingProgram loads_;
};

}  // namespace tve
