#include "tve/material_checks.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace tve {
namespace {

Mat2 rotation(double phi) {
  Mat2 Q;
  Q << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  return Q;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

std::vector<CheckResult> run_material_suite(const MaterialParams& params, unsigned seed) {
  std::vector<CheckResult> out;
  const auto violations = check_params(params);
  for (const auto& v : violations) out.push_back({v.check, false, v.message});
  if (!violations.empty()) return out;
  out.push_back({"parameter constraints", true, "all parameter-level constraints hold"});

  const Material m(params);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1), T(0.0, params.max_theta), A(0, 2 * M_PI);
  const double r = params.max_strain;
  auto sample_F = [&] {
    Mat2 X;
    X << U(rng), U(rng), U(rng), U(rng);
    return Mat2(Mat2::Identity() + (r * 0.999 * std::abs(U(rng))) * X / X.norm());
  };
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}); };

  {
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
      const Mat2 F = sample_F();
      const double th = T(rng);
      const Mat2 Q = rotation(A(rng));
      Tensor3 G;
      for (int k = 0; k < 8; ++k) G.v[k] = U(rng);
      const StrainRateData s(F, Mat2::Random());
      const StrainRateData sq(Q * F, Q * s.Fdot);
      worst = std::max({worst, rel(m.elastic_energy(Q * F), m.elastic_energy(F)),
                        rel(m.hyper_energy(G.rotated(Q)), m.hyper_energy(G)),
                        rel(m.coupling_energy(Q * F, th), m.coupling_energy(F, th)),
                        rel(m.dissipation_potential(sq, th), m.dissipation_potential(s, th))});
    }
    out.push_back({"frame indifference", worst < 1e-12, "max relative deviation " + fmt(worst)});
  }

  const auto ac = m.admissible_constants();
  {
    double worst = INFINITY;
    for (int i = 0; i < 500; ++i) {
      const Mat2 F = rotation(A(rng)) * sample_F();
      Eigen::JacobiSVD<Mat2> svd(F);
      const Vec2 s = svd.singularValues();
      const double d2 = (s.array() - 1).square().sum();
      if (d2 < 1e-10) continue;
      worst = std::min(worst, m.elastic_energy(F) / d2);
    }
    out.push_back({"elastic coercivity near SO(2)", worst >= ac.coercivity,
                   "min W/dist^2 = " + fmt(worst) + ", bound " + fmt(ac.coercivity)});
  }

  {
    const double h = 1e-6;
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const Mat2 F = sample_F();
      const double th = 0.05 + T(rng);
      const Mat2 P = m.elastic_stress(F), Pc = m.coupling_stress(F, th);
      Mat2 fd = Mat2::Zero(), fdc = Mat2::Zero();
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          Mat2 dF = Mat2::Zero();
          dF(a, b) = h;
          fd(a, b) = (m.elastic_energy(F + dF) - m.elastic_energy(F - dF)) / (2 * h);
          fdc(a, b) = (m.coupling_energy(F + dF, th) - m.coupling_energy(F - dF, th)) / (2 * h);
        }
      worst = std::max(worst, (P - fd).norm() / std::max(P.norm(), 1e-2));
      worst = std::max(worst, (Pc - fdc).norm() / std::max(Pc.norm(), 1e-2));
      const double dth = (m.coupling_energy(F, th + h) - m.coupling_energy(F, th - h)) / (2 * h);
      worst = std::max(worst, rel(m.coupling_dtheta(F, th), dth));
    }
    out.push_back({"derivative consistency", worst < 1e-6, "max relative error " + fmt(worst)});
  }

  {
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
      const StrainRateData s(sample_F(), Mat2::Random());
      const double th = T(rng);
      worst = std::max(worst, rel(m.dissipation_rate(s, th), 2 * m.dissipation_potential(s, th)));
    }
    out.push_back({"dissipation rate is twice the potential", worst < 1e-12, "max deviation " + fmt(worst)});
  }

  {
    double lo = INFINITY, hi = 0;
    for (int i = 0; i < 1000; ++i) {
      const Mat2 F = sample_F();
      const double th = T(rng);
      const double c = m.heat_capacity(F, th);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    const bool ok = lo >= params.c0 && hi <= params.C0 && lo >= ac.cV_min - 1e-12 && hi <= ac.cV_max + 1e-12;
    out.push_back({"heat capacity bounds", ok, "sampled range [" + fmt(lo) + ", " + fmt(hi) + "]"});
  }

  {
    bool ok = true;
    double prev = -1;
    for (int i = 0; i <= 400; ++i) {
      const double xi = 0.01 * i;
      for (double al : {1.0, 1.5, 2.0}) {
        const double v = Material::regularized_dissipation_rate(xi, al);
        if (v > xi * (1 + 1e-15)) ok = false;
      }
      const double v = Material::regularized_dissipation_rate(xi, 1.5);
      if (v < prev) ok = false;
      prev = v;
    }
    out.push_back({"regularized dissipation rate", ok, "monotone and bounded by the unregularized rate"});
  }

  {
    const Mat2 I = Mat2::Identity();
    const Mat2 F = sample_F();
    const bool ok = m.elastic_energy(I) == 0 && m.elastic_stress(I).norm() == 0 && m.hyper_energy(Tensor3{}) == 0 &&
                    m.coupling_energy(F, 0) == 0 && m.internal_energy(F, 0) == 0;
    out.push_back({"normalization", ok, "W_el(I) = 0, H(0) = 0, W_cpl(F, 0) = 0, W_in(F, 0) = 0"});
  }

  {
    const bool ok = params.c0 <= ac.c0 && params.C0 >= ac.C0;
    out.push_back({"assumption constants", ok,
                   "admissible c0 = " + fmt(ac.c0) + ", C0 = " + fmt(ac.C0) + " (configured " + fmt(params.c0) +
                       ", " + fmt(params.C0) + ")"});
  }
  return out;
}

}  // namespace tve
