// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Second-order finite differences on the full grid box: central in the
// interior and across periodic wraps, one-sided second-order at the ends of
// non-periodic axes. Diagnostics use these and never assume a boundary condition.
#pragma once

#include <algorithm>

#include "slipgreen/grid.hpp"

namespace slipgreen {

namespace detail {

inline void require_derivable(const Grid& g) {
  for (int a = 0; a < 3; ++a)
    if (g.dim(a) < 3) throw ParameterError("finite differences need at least 3 nodes per axis");
}

// ∂_axis of a nodal array.
inline std::vector<double> diff(const Grid& g, const std::vector<double>& f, int axis) {
  std::vector<double> out(f.size());
  const int n = g.dim(axis);
  const bool per = g.periodic(axis);
  const double inv2h = 0.5 / g.h();
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? std::size_t(g.dim(0)) : std::size_t(g.dim(0)) * g.dim(1));
  const std::ptrdiff_t total = std::ptrdiff_t(f.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < total; ++m) {
    const std::size_t idx = std::size_t(m);
    const int i = g.ijk(idx)[axis];
    const std::size_t base = idx - std::size_t(i) * stride;
    auto at = [&](int k) { return f[base + std::size_t(k) * stride]; };
    double d;
    if (i > 0 && i < n - 1) d = (at(i + 1) - at(i - 1)) * inv2h;
    else if (per) d = (at((i + 1) % n) - at((i - 1 + n) % n)) * inv2h;
    else if (i == 0) d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
    else d = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
    out[idx] = d;
  }
  return out;
}

// ∂²_axis: central, or the four-point one-sided stencil (three-point if n = 3).
inline std::vector<double> diff2(const Grid& g, const std::vector<double>& f, int axis) {
  std::vector<double> out(f.size());
  const int n = g.dim(axis);
  const bool per = g.periodic(axis);
  const double ih2 = 1.0 / (g.h() * g.h());
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? std::size_t(g.dim(0)) : std::size_t(g.dim(0)) * g.dim(1));
  const std::ptrdiff_t total = std::ptrdiff_t(f.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < total; ++m) {
    const std::size_t idx = std::size_t(m);
    const int i = g.ijk(idx)[axis];
    const std::size_t base = idx - std::size_t(i) * stride;
    auto at = [&](int k) { return f[base + std::size_t(k) * stride]; };
    double d;
    if (i > 0 && i < n - 1) d = at(i + 1) - 2.0 * at(i) + at(i - 1);
    else if (per) d = at((i + 1) % n) - 2.0 * at(i) + at((i - 1 + n) % n);
    else if (n == 3) d = at(0) - 2.0 * at(1) + at(2);
    else if (i == 0) d = 2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3);
    else d = 2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4);
    out[idx] = d * ih2;
  }
  return out;
}

}  // namespace detail

inline ScalarField partial(const ScalarField& f, int axis) {
  detail::require_derivable(*f.grid);
  ScalarField out(f.grid);
  out.v = detail::diff(*f.grid, f.v, axis);
  require_finite(out, "partial");
  return out;
}

inline VectorField gradient(const ScalarField& f) {
  detail::require_derivable(*f.grid);
  VectorField out(f.grid);
  for (int a = 0; a < 3; ++a) out.c[a] = detail::diff(*f.grid, f.v, a);
  require_finite(out, "gradient");
  return out;
}

/// (∇u)_{ij} = ∂_j u_i.
inline TensorField velocity_gradient(const VectorField& u) {
  detail::require_derivable(*u.grid);
  TensorField out(u.grid);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.c[3 * i + j] = detail::diff(*u.grid, u.c[i], j);
  require_finite(out, "velocity_gradient");
  return out;
}

inline VectorField curl(const VectorField& u) {
  detail::require_derivable(*u.grid);
  const Grid& g = *u.grid;
  VectorField out(u.grid);
  const auto d32 = detail::diff(g, u.c[2], 1), d23 = detail::diff(g, u.c[1], 2);
  const auto d13 = detail::diff(g, u.c[0], 2), d31 = detail::diff(g, u.c[2], 0);
  const auto d21 = detail::diff(g, u.c[1], 0), d12 = detail::diff(g, u.c[0], 1);
  for (std::size_t n = 0; n < g.size(); ++n) {
    out.c[0][n] = d32[n] - d23[n];
    out.c[1][n] = d13[n] - d31[n];
    out.c[2][n] = d21[n] - d12[n];
  }
  require_finite(out, "curl");
  return out;
}

inline ScalarField divergence(const VectorField& u) {
  detail::require_derivable(*u.grid);
  const Grid& g = *u.grid;
  ScalarField out(u.grid);
  const auto a = detail::diff(g, u.c[0], 0), b = detail::diff(g, u.c[1], 1), c = detail::diff(g, u.c[2], 2);
  for (std::size_t n = 0; n < g.size(); ++n) out.v[n] = a[n] + b[n] + c[n];
  require_finite(out, "divergence");
  return out;
}

/// 𝒮u = (∇u + ∇ᵀu)/2.
inline TensorField sym_grad(const VectorField& u) {
  TensorField du = velocity_gradient(u);
  TensorField out(u.grid);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (std::size_t n = 0; n < u.size(); ++n) out.c[3 * i + j][n] = 0.5 * (du.c[3 * i + j][n] + du.c[3 * j + i][n]);
  return out;
}

/// 7-point Laplacian with one-sided second-order rows at non-periodic ends.
inline ScalarField fd_laplacian(const ScalarField& f) {
  detail::require_derivable(*f.grid);
  ScalarField out(f.grid);
  for (int a = 0; a < 3; ++a) {
    const auto d = detail::diff2(*f.grid, f.v, a);
    for (std::size_t n = 0; n < d.size(); ++n) out.v[n] += d[n];
  }
  require_finite(out, "fd_laplacian");
  return out;
}

inline VectorField fd_laplacian(const VectorField& u) {
  VectorField out(u.grid);
  for (int c = 0; c < 3; ++c) {
    ScalarField s(u.grid);
    s.v = u.c[c];
    out.c[c] = fd_laplacian(s).v;
  }
  return out;
}

}  // namespace slipgreen
