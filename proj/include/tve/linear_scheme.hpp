#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "tve/grid.hpp"
#include "tve/loading.hpp"
#include "tve/material.hpp"

namespace tve {

struct LinearConfig {
  double alpha = 2.0;
  double tau = 1.0 / 32;
  double T = 0.5;
  double kappa = 1.0;

  int num_steps() const;
  void validate() const;
};

struct LinearState {
  int k = 0;
  VectorField u;
  ScalarField mu;
};

struct LinearLedgerRow {
  int k = 0;
  double t = 0, Elin = 0, diss = 0, mu_mass = 0, min_mu = 0, res_mech = 0, res_therm = 0;
};

struct LinearRun {
  LinearConfig cfg;
  std::vector<LinearState> steps;
  std::vector<LinearLedgerRow> ledger;

  static const char* header();
  void write_csv(const std::string& path) const;
};

// Staggered scheme for the linearized system: Kelvin-Voigt elasticity with
// tensors CW, CD and thermal coupling B^(alpha), and a linear heat equation
// with heat capacity cV_bar, conductivity K0 and source CD^(alpha) e : e.
class LinearScheme {
 public:
  LinearScheme(const Grid& g, LinearizedTensors tensors, LinearConfig cfg, LoadingProgram loads);

  const LinearConfig& config() const { return cfg_; }
  const LinearizedTensors& tensors() const { return t_; }

  LinearState init_state(const VectorField& u0, const ScalarField& mu0) const;
  VectorField linear_mechanical_step(const LinearState& prev, const SlabLoads& loads, double* rel_res = nullptr) const;
  ScalarField linear_thermal_step(const LinearState& prev, const VectorField& u_new, const SlabLoads& loads,
                                  double* rel_res = nullptr) const;
  LinearRun run_linear(const VectorField& u0, const ScalarField& mu0) const;

  // 1/2 \int CW e(u) : e(u)
  double elastic_energy(const VectorField& u) const;
  // \int CD e(v) : e(v)
  double viscous_form(const VectorField& v) const;
  const Eigen::SparseMatrix<double>& mechanical_matrix() const { return Ku_; }
  const Eigen::SparseMatrix<double>& thermal_matrix() const { return Kmu_; }

 private:
  Eigen::VectorXd restrict(const VectorField& v) const;
  VectorField expand(const Eigen::VectorXd& v) const;
  std::vector<Mat2> sym_gradients(const VectorField& u) const;

  const Grid& g_;
  LinearizedTensors t_;
  LinearConfig cfg_;
  LoadingProgram loads_;
  Mat4 CWs_, CDs_, CDas_;  // restricted to symmetric arguments
  std::vector<int> free_, dof_to_free_;
  Eigen::SparseMatrix<double> Ku_, Kmu_, Kvisc_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solve_u_, solve_mu_;
};

}  // namespace tve
