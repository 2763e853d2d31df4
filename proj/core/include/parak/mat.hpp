#pragma once

#include "parak/scalar.hpp"

#include <Eigen/Dense>

#include <array>

namespace parak {

struct Vec3 {
  std::array<Scalar, 3> c{};

  Scalar& operator[](int i) { return c[i]; }
  const Scalar& operator[](int i) const { return c[i]; }

  Eigen::Vector3cd to_eigen() const { return {c[0].v, c[1].v, c[2].v}; }
  static Vec3 from_eigen(const Eigen::Vector3cd& v) {
    Vec3 r; for (int i = 0; i < 3; ++i) r[i] = Scalar(v(i)); return r;
  }
  bool exact() const { return c[0].exact() && c[1].exact() && c[2].exact(); }
  double norm() const { return to_eigen().norm(); }
};

struct Mat3 {
  std::array<std::array<Scalar, 3>, 3> m{};

  Scalar& operator()(int i, int j) { return m[i][j]; }
  const Scalar& operator()(int i, int j) const { return m[i][j]; }

  static Mat3 identity() {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = Scalar(GQ(i == j ? 1 : 0));
    return r;
  }
  static Mat3 zero() {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = Scalar(GQ(0));
    return r;
  }

  bool exact() const {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (!m[i][j].exact()) return false;
    return true;
  }

  Eigen::Matrix3cd to_eigen() const {
    Eigen::Matrix3cd r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = m[i][j].v;
    return r;
  }
  static Mat3 from_eigen(const Eigen::Matrix3cd& e) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = Scalar(e(i, j));
    return r;
  }

  friend Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r = Mat3::zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        Scalar s = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
        r(i, j) = s;
      }
    return r;
  }
  friend Vec3 operator*(const Mat3& a, const Vec3& v) {
    Vec3 r;
    for (int i = 0; i < 3; ++i)
      r[i] = a(i, 0) * v[0] + a(i, 1) * v[1] + a(i, 2) * v[2];
    return r;
  }
  friend Mat3 operator*(const Scalar& s, const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = s * a(i, j);
    return r;
  }
  friend Mat3 operator+(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = a(i, j) + b(i, j);
    return r;
  }
  friend Mat3 operator-(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = a(i, j) - b(i, j);
    return r;
  }

  Scalar det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
         - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
         + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  Mat3 transpose() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = m[j][i];
    return r;
  }

  // Adjugate-based inverse; exactness propagates when all entries are exact.
  Mat3 inverse() const {
    Scalar d = det();
    Mat3 adj;
    adj(0, 0) = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    adj(0, 1) = m[0][2] * m[2][1] - m[0][1] * m[2][2];
    adj(0, 2) = m[0][1] * m[1][2] - m[0][2] * m[1][1];
    adj(1, 0) = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    adj(1, 1) = m[0][0] * m[2][2] - m[0][2] * m[2][0];
    adj(1, 2) = m[0][2] * m[1][0] - m[0][0] * m[1][2];
    adj(2, 0) = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    adj(2, 1) = m[0][1] * m[2][0] - m[0][0] * m[2][1];
    adj(2, 2) = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = adj(i, j) / d;
    return r;
  }

  double frobenius() const { return to_eigen().norm(); }
};

inline Mat3 make_mat(std::initializer_list<cplx> vals) {
  Mat3 r;
  int k = 0;
  for (cplx z : vals) { r(k / 3, k % 3) = Scalar(z); ++k; }
  return r;
}

inline Mat3 make_mat_exact(std::initializer_list<GQ> vals) {
  Mat3 r;
  int k = 0;
  for (const GQ& z : vals) { r(k / 3, k % 3) = Scalar(z); ++k; }
  return r;
}

}  // namespace parak
