#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tve/grid.hpp"

namespace tve {

// Scalar time profile multiplying a load amplitude.
struct TimeProfile {
  enum class Kind { Zero, Constant, Ramp, Sinusoid, Pulse, Table };
  Kind kind = Kind::Zero;
  double duration = 1.0;  // ramp time, sinusoid period or pulse length
  std::vector<std::pair<double, double>> table;

  double operator()(double t) const;

  static TimeProfile parse(const std::string& name, double duration);
  static TimeProfile from_csv(const std::string& path);
  std::string name() const;
};

struct LoadingProgram {
  std::function<Vec2(double, const Vec2&)> body_force;
  std::function<Vec2(double, const Vec2&)> traction;
  std::function<double(double, const Vec2&)> boundary_temperature;
  // Neumann edges carrying the traction; empty means all of them
  std::vector<Edge> traction_edges;

  static LoadingProgram zero();
};

struct SlabLoads {
  VectorField load;              // <l, v> = load.dot(v)
  ScalarField theta_flat;        // boundary temperature at nodes (unscaled)
  std::vector<Vec2> f_cells;
  std::vector<Vec2> g_segments;  // zero on segments without traction
  double f_l2 = 0.0, g_l2 = 0.0;
};

// l^k and theta_flat^k: averages over ((k-1) tau, k tau] by 5-point Gauss quadrature
SlabLoads timeslab_average(const LoadingProgram& prog, const Grid& g, int k, double tau);
// instantaneous loads at time t
SlabLoads loads_at(const LoadingProgram& prog, const Grid& g, double t);

}  // namespace tve
