// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace slipgreen {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double pi = 3.14159265358979323846;

inline double det3(const Vec3& a, const Vec3& b, const Vec3& c) {
  // columns a, b, c in order
  Mat3 m;
  m.col(0) = a;
  m.col(1) = b;
  m.col(2) = c;
  return m.determinant();
}

/// (a ⊗ b)_{ij} = a_i b_j
inline Mat3 outer(const Vec3& a, const Vec3& b) { return a * b.transpose(); }

/// Full contraction A : B = Σ_ij A_ij B_ij.
inline double contract(const Mat3& a, const Mat3& b) { return (a.array() * b.array()).sum(); }

inline std::array<double, 9> row_major(const Mat3& m) {
  std::array<double, 9> out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[3 * i + j] = m(i, j);
  return out;
}

inline Mat3 from_row_major(const std::array<double, 9>& v) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[3 * i + j];
  return m;
}

}  // namespace slipgreen
