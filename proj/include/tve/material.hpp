#pragma once

#include <string>
#include <vector>

#include "tve/errors.hpp"
#include "tve/types.hpp"

namespace tve {

// Reference thermoviscoelastic model. Elastic part
//   W_el(F) = a1 |F^T F - I|^2 + a2 (J - 1)^2 + a3 (J^-q + q J - (q + 1)),
// second-grade part H(G) = cH |G|^p, coupling
//   W_cpl(F, theta) = w0(theta) + w1(theta) tr(C - I),
//   w0 = -cV theta (log theta - 1),  w1 = -beta theta / (1 + theta),
// viscosity D = (eta / 2) I_sym and conductivity k0 I.
struct MaterialParams {
  double a1 = 1.0;
  double a2 = 1.0;
  double a3 = 0.5;
  double q = 4.0;
  double cH = 1e-3;
  double p = 4.0;
  double cV = 1.0;
  double beta = 0.2;
  double eta = 1.0;
  double k0 = 0.5;
  double c0 = 1e-3;
  double C0 = 100.0;
  // validity region of the reference model
  double max_strain = 0.5;
  double max_theta = 10.0;
};

struct ParamViolation {
  std::string check;
  std::string message;
};

// All parameter-level invariants; empty when the parameters are admissible.
std::vector<ParamViolation> check_params(const MaterialParams& p);

// F together with its rate; Cdot = Fdot^T F + F^T Fdot.
struct StrainRateData {
  Mat2 F = Mat2::Identity();
  Mat2 Fdot = Mat2::Zero();
  Mat2 Cdot = Mat2::Zero();

  StrainRateData() = default;
  StrainRateData(const Mat2& F_, const Mat2& Fdot_)
      : F(F_), Fdot(Fdot_), Cdot(Fdot_.transpose() * F_ + F_.transpose() * Fdot_) {}
};

struct LinearizedTensors {
  double alpha = 2.0;
  Mat4 CW = Mat4::Zero();       // elastic Hessian at the identity
  Mat4 CD = Mat4::Zero();       // 4 D(Id, 0)
  Mat2 B = Mat2::Zero();        // d_F d_theta W_cpl(Id, 0) when alpha == 1
  Mat4 CD_alpha = Mat4::Zero(); // CD when alpha == 2
  Mat2 K0 = Mat2::Zero();
  double cV_bar = 0.0;
};

struct AdmissibleConstants {
  double c0 = 0.0;
  double C0 = 0.0;
  double cV_min = 0.0, cV_max = 0.0;     // heat capacity range on the validity region
  double coercivity = 0.0;               // W_el >= coercivity * dist^2(F, SO(2)), sampled
  double growth_lower = 0.0, growth_shift = 0.0;  // W_el >= g (|F|^2 + J^-q) - shift, sampled
};

class Material {
 public:
  explicit Material(MaterialParams params);

  const MaterialParams& params() const { return p_; }

  double elastic_energy(const Mat2& F) const;
  Mat2 elastic_stress(const Mat2& F) const;
  Mat4 elastic_hessian(const Mat2& F) const;
  Mat4 elastic_hessian_at_identity() const { return elastic_hessian(Mat2::Identity()); }

  double hyper_energy(const Tensor3& G) const;
  Tensor3 hyper_stress(const Tensor3& G) const;
  Mat8 hyper_hessian(const Tensor3& G) const;

  double coupling_energy(const Mat2& F, double theta) const;
  Mat2 coupling_stress(const Mat2& F, double theta) const;
  Mat4 coupling_hessian(const Mat2& F, double theta) const;
  double coupling_dtheta(const Mat2& F, double theta) const;
  Mat2 coupling_dFdtheta(const Mat2& F, double theta) const;

  double heat_capacity(const Mat2& F, double theta) const;
  double internal_energy(const Mat2& F, double theta) const;
  // \int_0^theta W_in(F, s) ds
  double internal_energy_primitive(const Mat2& F, double theta) const;

  // Extensions to theta < 0 used inside the thermal solver: W_in is continued
  // linearly with slope heat_capacity(F, 0), which keeps the thermal functional
  // convex and C^1 across zero.
  double internal_energy_ext(const Mat2& F, double theta) const;
  double heat_capacity_ext(const Mat2& F, double theta) const;
  double internal_energy_primitive_ext(const Mat2& F, double theta) const;

  // R(F, Fdot, theta) = 1/2 D Cdot : Cdot
  double dissipation_potential(const StrainRateData& s, double theta) const;
  Mat2 viscous_stress(const StrainRateData& s, double theta) const;
  // second derivative of R in Fdot (R is quadratic in Fdot)
  Mat4 viscous_hessian(const Mat2& F, double theta) const;
  // xi = D Cdot : Cdot
  double dissipation_rate(const StrainRateData& s, double theta) const;
  static double regularized_dissipation_rate(double xi, double alpha);

  Mat2 pulled_back_conductivity(const Mat2& F, double theta) const;

  LinearizedTensors linearized_tensors(double alpha) const;

  bool in_validity_region(const Mat2& F, double theta) const;

  AdmissibleConstants admissible_constants() const;

 private:
  void check_state(const Mat2& F, double theta) const;
  double w0(double t) const;
  double w1(double t) const;
  double dw1(double t) const;

  MaterialParams p_;
};

}  // namespace tve
