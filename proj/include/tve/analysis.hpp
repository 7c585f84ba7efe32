#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tve/grid.hpp"
#include "tve/linear_scheme.hpp"
#include "tve/nonlinear_scheme.hpp"

namespace tve {

// Step sequence of one run, sampled at t = k tau.
struct Trajectory {
  double tau = 0.0;
  std::vector<VectorField> v;  // deformation or displacement
  std::vector<ScalarField> s;  // temperature

  double T() const { return tau * (static_cast<int>(v.size()) - 1); }
};

Trajectory deformation_trajectory(const RunResult& run);
// u = (y - id) / eps and mu = theta / eps^alpha
Trajectory rescaled_trajectory(const RunResult& run, const Grid& g);
Trajectory linear_trajectory(const LinearRun& run);

enum class InterpolantMode { Left, Right, Affine };

// Left/right-constant or affine-in-time reconstruction at t in [0, T].
std::pair<VectorField, ScalarField> evaluate_interpolant(const Trajectory& tr, InterpolantMode mode, double t);
// derivative of the affine interpolant (piecewise constant, right-continuous slab choice)
VectorField interpolant_rate(const Trajectory& tr, double t);

struct NormSpec {
  double r = 1.3;  // W^{1,r} exponent for temperatures
  double s = 1.9;  // L^s exponent for temperatures
  void validate() const;
};

double h1_norm(const Grid& g, const VectorField& v);
double lp_norm(const Grid& g, const ScalarField& s, double p);

// Differences between two trajectories on nested time grids (the coarse step
// an integer multiple of the fine one; equal steps allowed).
double linf_h1_difference(const Grid& g, const Trajectory& a, const Trajectory& b);
double l2_h1_rate_difference(const Grid& g, const Trajectory& a, const Trajectory& b);
double ls_spacetime_difference(const Grid& g, const Trajectory& a, const Trajectory& b, double s);
double max_l1_difference(const Grid& g, const Trajectory& a, const Trajectory& b);

struct EnergyInequalityFit {
  double c_M = 0.0;
  double C_M = 0.0;              // smallest constant making the inequality hold at every step
  bool finite = true;
  std::vector<bool> competitor;  // per step k >= 1
  bool competitor_ok = true;
};

EnergyInequalityFit check_step_energy_inequality(const NonlinearScheme& scheme, const RunResult& run, double c_M);

struct EnergyBalanceReport {
  std::vector<double> residual;  // per step k >= 1: tau (|mech| + |therm|)
  std::vector<double> bound;
  double max_residual = 0.0;
  bool passed = true;
};

EnergyBalanceReport check_energy_balance(const NonlinearScheme& scheme, const RunResult& run);

}  // namespace tve
