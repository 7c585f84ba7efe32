#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "tve/types.hpp"

namespace tvetest {

using tve::Mat2;

inline Mat2 rotation(double a) {
  Mat2 Q;
  Q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return Q;
}

// random F with det in [lo, hi]
inline Mat2 random_F(std::mt19937& rng, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> u(-0.4, 0.4), d(lo, hi), a(0, 6.283185307179586);
  for (;;) {
    Mat2 F = Mat2::Identity();
    F(0, 0) += u(rng);
    F(0, 1) += u(rng);
    F(1, 0) += u(rng);
    F(1, 1) += u(rng);
    const double J = F.determinant();
    if (J <= 0) continue;
    const double target = d(rng);
    F *= std::sqrt(target / J);
    return rotation(a(rng)) * F;
  }
}

inline Mat2 fd_matrix(const std::function<double(const Mat2&)>& f, const Mat2& F, double h) {
  Mat2 D;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat2 Fp = F, Fm = F;
      Fp(i, j) += h;
      Fm(i, j) -= h;
      D(i, j) = (f(Fp) - f(Fm)) / (2 * h);
    }
  return D;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

template <class A, class B>
double rel_err_mat(const A& a, const B& b) {
  return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm()));
}

}  // namespace tvetest
