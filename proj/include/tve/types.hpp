#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

namespace tve {

constexpr int kDim = 2;

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;
// Linear maps on 2x2 matrices, acting on the row-major vectorization (F00, F01, F10, F11).
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Vec8 = Eigen::Matrix<double, 8, 1>;

// Nodal fields. Vector fields are interleaved: (v0x, v0y, v1x, v1y, ...).
using ScalarField = Eigen::VectorXd;
using VectorField = Eigen::VectorXd;

inline Vec4 vec(const Mat2& A) { return Vec4(A(0, 0), A(0, 1), A(1, 0), A(1, 1)); }

inline Mat2 unvec(const Vec4& v) {
  Mat2 A;
  A << v[0], v[1], v[2], v[3];
  return A;
}

inline double ddot(const Mat2& A, const Mat2& B) { return (A.array() * B.array()).sum(); }

// cof(F) = det(F) F^{-T}
inline Mat2 cofactor(const Mat2& F) {
  Mat2 C;
  C << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
  return C;
}

// G(a, b, c) = d_b d_c y_a, row-major storage.
struct Tensor3 {
  Vec8 v = Vec8::Zero();

  double& operator()(int a, int b, int c) { return v[4 * a + 2 * b + c]; }
  double operator()(int a, int b, int c) const { return v[4 * a + 2 * b + c]; }
  double norm_sq() const { return v.squaredNorm(); }
  double norm() const { return v.norm(); }

  // Q acting on the first index.
  Tensor3 rotated(const Mat2& Q) const {
    Tensor3 out;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          out(a, b, c) = Q(a, 0) * (*this)(0, b, c) + Q(a, 1) * (*this)(1, b, c);
    return out;
  }
};

}  // namespace tve
