#include "tve/material.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace tve {

std::vector<ParamViolation> check_params(const MaterialParams& p) {
  std::vector<ParamViolation> out;
  auto fail = [&](const char* check, const std::string& msg) { out.push_back({check, msg}); };
  const double d = kDim;

  if (!(p.a1 > 0 && p.a2 > 0 && p.a3 > 0 && p.cH > 0 && p.cV > 0 && p.eta > 0 && p.k0 > 0))
    fail("positivity", "a1, a2, a3, cH, cV, eta, k0 must be positive");
  if (!(p.beta >= 0)) fail("positivity", "beta must be nonnegative");
  if (!(p.p > d)) fail("second-grade exponent", "p must exceed the dimension (p > 2)");
  if (p.p > d) {
    const double qmin = p.p * d / (p.p - d);
    if (!(p.q >= qmin)) {
      std::ostringstream s;
      s << "elastic lower bound needs q >= p d / (p - d) = " << qmin << ", got q = " << p.q;
      fail("elastic lower bound (determinant growth)", s.str());
    }
  }
  if (!(p.beta <= p.cV / 4)) fail("validity region", "beta must not exceed cV / 4");
  if (!(p.c0 > 0 && p.C0 > p.c0)) fail("assumption constants", "need 0 < c0 < C0");
  if (!(p.C0 >= p.c0 * (d + 1))) fail("assumption constants", "need C0 >= c0 (d + 1)");
  if (!(p.max_strain > 0 && p.max_theta > 0)) fail("validity region", "bounds must be positive");
  return out;
}

Material::Material(MaterialParams params) : p_(params) {
  auto v = check_params(p_);
  if (!v.empty()) throw Error(ErrorCode::InvariantFailure, v.front().check + ": " + v.front().message);
}

void Material::check_state(const Mat2& F, double theta) const {
  if (!(F.determinant() > 0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  if (!(theta >= 0)) throw Error(ErrorCode::NegativeTemperature, "theta < 0");
}

// ---- elastic ------------------------------------------------------------

namespace {

// expm1(x) - x without cancellation
double expm1_minus(double x) {
  if (std::abs(x) > 0.1) return std::expm1(x) - x;
  double term = x * x / 2, sum = 0;
  for (int n = 3; n < 20 && term != 0; ++n) {
    sum += term;
    term *= x / n;
  }
  return sum;
}

// s - log(1 + s) without cancellation
double minus_log1p(double s) {
  if (std::abs(s) > 0.1) return s - std::log1p(s);
  double pw = s * s, sum = 0;
  for (int n = 2; n < 40; ++n, pw *= -s) sum += pw / n;
  return sum;
}

// F^T F - I and det F - 1 from D = F - I, accurate for F near the identity
Mat2 strain_from(const Mat2& D) { return D + D.transpose() + D.transpose() * D; }
double jm1_from(const Mat2& D) { return D.trace() + D.determinant(); }
// |F|^2 - 2
double trace_strain(const Mat2& F) {
  const Mat2 D = F - Mat2::Identity();
  return 2 * D.trace() + D.squaredNorm();
}

}  // namespace

double Material::elastic_energy(const Mat2& F) const {
  const double J = F.determinant();
  if (!(J > 0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  const Mat2 D = F - Mat2::Identity();
  const Mat2 E = strain_from(D);
  const double s = jm1_from(D);
  // J^-q + q J - (q + 1) = (e^x - 1 - x) + q (s - log(1 + s)), x = -q log(1 + s)
  const double x = -p_.q * std::log1p(s);
  return p_.a1 * E.squaredNorm() + p_.a2 * s * s + p_.a3 * (expm1_minus(x) + p_.q * minus_log1p(s));
}

Mat2 Material::elastic_stress(const Mat2& F) const {
  const double J = F.determinant();
  if (!(J > 0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  const Mat2 E = strain_from(F - Mat2::Identity());
  const double sj = jm1_from(F - Mat2::Identity());
  const double dphi = 2 * p_.a2 * sj - p_.a3 * p_.q * std::expm1(-(p_.q + 1) * std::log1p(sj));
  return 4 * p_.a1 * F * E + dphi * cofactor(F);
}

Mat4 Material::elastic_hessian(const Mat2& F) const {
  const double J = F.determinant();
  if (!(J > 0)) throw Error(ErrorCode::NonPositiveDeterminant, "det F <= 0");
  const Mat2 E = F.transpose() * F - Mat2::Identity();
  const Mat2 cof = cofactor(F);
  const double sj = jm1_from(F - Mat2::Identity());
  const double dphi = 2 * p_.a2 * sj - p_.a3 * p_.q * std::expm1(-(p_.q + 1) * std::log1p(sj));
  const double ddphi = 2 * p_.a2 + p_.a3 * p_.q * (p_.q + 1) * std::pow(J, -p_.q - 2);
  Mat4 H;
  for (int j = 0; j < 4; ++j) {
    Vec4 e = Vec4::Zero();
    e[j] = 1;
    const Mat2 dF = unvec(e);
    const Mat2 dE = dF.transpose() * F + F.transpose() * dF;
    const Mat2 dP = 4 * p_.a1 * (dF * E + F * dE) + ddphi * ddot(cof, dF) * cof + dphi * cofactor(dF);
    H.col(j) = vec(dP);
  }
  return H;
}

// ---- second grade -------------------------------------------------------

double Material::hyper_energy(const Tensor3& G) const { return p_.cH * std::pow(G.norm(), p_.p); }

Tensor3 Material::hyper_stress(const Tensor3& G) const {
  Tensor3 out;
  const double n = G.norm();
  if (n == 0) return out;
  out.v = p_.cH * p_.p * std::pow(n, p_.p - 2) * G.v;
  return out;
}

Mat8 Material::hyper_hessian(const Tensor3& G) const {
  const double n = G.norm();
  if (n == 0) return p_.p == 2 ? Mat8(2 * p_.cH * Mat8::Identity()) : Mat8(Mat8::Zero());
  return p_.cH * p_.p *
         (std::pow(n, p_.p - 2) * Mat8::Identity() + (p_.p - 2) * std::pow(n, p_.p - 4) * G.v * G.v.transpose());
}

// ---- coupling -----------------------------------------------------------

double Material::w0(double t) const { return t == 0 ? 0.0 : -p_.cV * t * (std::log(t) - 1); }
double Material::w1(double t) const { return -p_.beta * t / (1 + t); }
double Material::dw1(double t) const { return -p_.beta / ((1 + t) * (1 + t)); }

double Material::coupling_energy(const Mat2& F, double theta) const {
  check_state(F, theta);
  const Mat2 D = F - Mat2::Identity();
  return w0(theta) + w1(theta) * (2 * D.trace() + D.squaredNorm());
}

Mat2 Material::coupling_stress(const Mat2& F, double theta) const {
  check_state(F, theta);
  return 2 * w1(theta) * F;
}

Mat4 Material::coupling_hessian(const Mat2& F, double theta) const {
  check_state(F, theta);
  return 2 * w1(theta) * Mat4::Identity();
}

double Material::coupling_dtheta(const Mat2& F, double theta) const {
  check_state(F, theta);
  const double dw0 = theta == 0 ? INFINITY : -p_.cV * std::log(theta);
  return dw0 + dw1(theta) * trace_strain(F);
}

Mat2 Material::coupling_dFdtheta(const Mat2& F, double theta) const {
  check_state(F, theta);
  return 2 * dw1(theta) * F;
}

double Material::heat_capacity(const Mat2& F, double theta) const {
  check_state(F, theta);
  const double t1 = 1 + theta;
  return p_.cV - 2 * p_.beta * theta * trace_strain(F) / (t1 * t1 * t1);
}

double Material::internal_energy(const Mat2& F, double theta) const {
  check_state(F, theta);
  const double t1 = 1 + theta;
  const Mat2 D = F - Mat2::Identity();
  return p_.cV * theta - p_.beta * theta * theta / (t1 * t1) * (2 * D.trace() + D.squaredNorm());
}

double Material::internal_energy_primitive(const Mat2& F, double theta) const {
  check_state(F, theta);
  // \int_0^t s^2 / (1 + s)^2 ds = t + t / (1 + t) - 2 log(1 + t)
  double g;
  if (theta < 1e-3) {
    const double t = theta;
    g = t * t * t * (1.0 / 3 - t / 2 + 3 * t * t / 5 - 2 * t * t * t / 3);
  } else {
    g = theta + theta / (1 + theta) - 2 * std::log1p(theta);
  }
  return 0.5 * p_.cV * theta * theta - p_.beta * trace_strain(F) * g;
}

double Material::internal_energy_ext(const Mat2& F, double theta) const {
  if (theta >= 0) return internal_energy(F, theta);
  return heat_capacity(F, 0.0) * theta;
}

double Material::heat_capacity_ext(const Mat2& F, double theta) const {
  return heat_capacity(F, std::max(theta, 0.0));
}

double Material::internal_energy_primitive_ext(const Mat2& F, double theta) const {
  if (theta >= 0) return internal_energy_primitive(F, theta);
  return 0.5 * heat_capacity(F, 0.0) * theta * theta;
}

// ---- dissipation --------------------------------------------------------

double Material::dissipation_potential(const StrainRateData& s, double theta) const {
  check_state(s.F, theta);
  return 0.25 * p_.eta * s.Cdot.squaredNorm();
}

Mat2 Material::viscous_stress(const StrainRateData& s, double theta) const {
  check_state(s.F, theta);
  return p_.eta * s.F * s.Cdot;
}

Mat4 Material::viscous_hessian(const Mat2& F, double theta) const {
  check_state(F, theta);
  Mat4 H;
  for (int j = 0; j < 4; ++j) {
    Vec4 e = Vec4::Zero();
    e[j] = 1;
    const Mat2 dFdot = unvec(e);
    H.col(j) = vec(p_.eta * F * (dFdot.transpose() * F + F.transpose() * dFdot));
  }
  return H;
}

double Material::dissipation_rate(const StrainRateData& s, double theta) const {
  check_state(s.F, theta);
  return 0.5 * p_.eta * s.Cdot.squaredNorm();
}

double Material::regularized_dissipation_rate(double xi, double alpha) {
  if (!(alpha >= 1 && alpha <= 2)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [1, 2]");
  if (xi <= 1) return xi;
  return std::pow(xi, alpha / 2);
}

// ---- conduction ---------------------------------------------------------

Mat2 Material::pulled_back_conductivity(const Mat2& F, double theta) const {
  check_state(F, theta);
  const Mat2 C = F.transpose() * F;
  return p_.k0 * F.determinant() * C.inverse();
}

// ---- linearization ------------------------------------------------------

LinearizedTensors Material::linearized_tensors(double alpha) const {
  if (!(alpha >= 1 && alpha <= 2)) throw Error(ErrorCode::AlphaOutOfRange, "alpha must lie in [1, 2]");
  const Mat2 I = Mat2::Identity();
  LinearizedTensors t;
  t.alpha = alpha;
  t.CW = elastic_hessian(I);
  t.CD = viscous_hessian(I, 0.0);
  if (alpha == 1) t.B = coupling_dFdtheta(I, 0.0);
  if (alpha == 2) t.CD_alpha = t.CD;
  t.K0 = pulled_back_conductivity(I, 0.0);
  t.cV_bar = heat_capacity(I, 0.0);
  return t;
}

bool Material::in_validity_region(const Mat2& F, double theta) const {
  return (F - Mat2::Identity()).norm() <= p_.max_strain && theta >= 0 && theta <= p_.max_theta;
}

// ---- constants ----------------------------------------------------------

AdmissibleConstants Material::admissible_constants() const {
  AdmissibleConstants a;
  const double r = p_.max_strain;
  // range of tr(C - I) = 2 tr A + |A|^2 over |A| <= r
  const double tr_min = std::min(0.0, -2 * std::sqrt(2.0) * r + r * r);
  const double tr_max = 2 * std::sqrt(2.0) * r + r * r;
  auto peak = [&](auto f, double lo, double hi) {
    double m = 0;
    for (int i = 0; i <= 2000; ++i) m = std::max(m, f(lo + (hi - lo) * i / 2000.0));
    return m;
  };
  const double g3 = peak([](double t) { return t / std::pow(1 + t, 3); }, 0, p_.max_theta);
  const double g2 = peak([](double t) { return t / std::pow(1 + t, 2); }, 0, p_.max_theta);
  a.cV_min = p_.cV - 2 * p_.beta * g3 * tr_max;
  a.cV_max = p_.cV - 2 * p_.beta * g3 * tr_min;
  const double win_min = p_.cV - p_.beta * g2 * tr_max;
  const double win_max = p_.cV - p_.beta * g2 * tr_min;

  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> ang(0, 2 * M_PI), sv(0.3, 2.5), wide(0.05, 20.0);
  double coerc = INFINITY, grow = INFINITY;
  const double shift = 3.0;
  for (int i = 0; i < 20000; ++i) {
    const double phi = ang(rng), psi = ang(rng);
    Mat2 R, V;
    R << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
    V << std::cos(psi), -std::sin(psi), std::sin(psi), std::cos(psi);
    const double s1 = sv(rng), s2 = sv(rng);
    const Mat2 F = R * V * Eigen::Vector2d(s1, s2).asDiagonal() * V.transpose();
    const double d2 = (s1 - 1) * (s1 - 1) + (s2 - 1) * (s2 - 1);
    if (d2 > 1e-8) coerc = std::min(coerc, elastic_energy(F) / d2);
    const double w1 = wide(rng), w2 = wide(rng);
    const Mat2 Fw = R * V * Eigen::Vector2d(w1, w2).asDiagonal() * V.transpose();
    const double J = Fw.determinant();
    grow = std::min(grow, (elastic_energy(Fw) + shift) / (Fw.squaredNorm() + std::pow(J, -p_.q)));
  }
  a.coercivity = 0.5 * coerc;
  a.growth_lower = 0.5 * grow;
  a.growth_shift = shift;

  const double lows[] = {p_.eta / 2, p_.k0, p_.cH, a.cV_min, win_min, a.coercivity, a.growth_lower};
  const double highs[] = {p_.eta / 2, p_.k0, p_.cH * p_.p, a.cV_max, win_max, 4 * p_.beta, shift};
  a.c0 = *std::min_element(std::begin(lows), std::end(lows));
  a.C0 = std::max(*std::max_element(std::begin(highs), std::end(highs)), a.c0 * (kDim + 1));
  return a;
}

}  // namespace tve
