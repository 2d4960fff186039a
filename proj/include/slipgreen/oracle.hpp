// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reference solver for −Δu = f on a laterally periodic slab 0 ≤ z ≤ H with
// a constant-coefficient oblique condition at z = 0: spectral in x, y and
// second-order finite differences in z, one complex tridiagonal solve per mode.
#pragma once

#include <complex>
#include <vector>

#include <fftw3.h>

#include "slipgreen/geometry.hpp"
#include "slipgreen/grid.hpp"
#include "slipgreen/operators.hpp"

namespace slipgreen {

enum class TopBoundary { dirichlet_zero, decay_matched };

struct SpectralSlab {
  double period = 2.0;  // lateral period L
  int lateral_modes = 64;
  double height = 2.0;  // H
  int vertical_nodes = 65;
  TopBoundary top = TopBoundary::dirichlet_zero;

  double spacing() const { return period / lateral_modes; }

  void validate() const {
    const int n = lateral_modes;
    if (n < 4 || (n & (n - 1)) != 0) throw ParameterError("lateral mode count must be a power of two >= 4");
    if (!(period > 0.0) || !(height > 0.0)) throw ParameterError("slab period and height must be positive");
    if (vertical_nodes < 4) throw ParameterError("slab needs at least 4 vertical nodes");
    const double hz = height / (vertical_nodes - 1);
    if (std::abs(hz - spacing()) > 1e-12 * spacing())
      throw ParameterError("slab spacing must be isotropic: H/(n3-1) == L/n");
  }

  /// Grid covering [−L/2, L/2)² × [0, H].
  GridPtr grid() const {
    validate();
    return make_grid({-0.5 * period, -0.5 * period, 0.0}, spacing(), {lateral_modes, lateral_modes, vertical_nodes},
                     {true, true, false}, DomainSpec::half_space());
  }
};

namespace detail {

// Thomas algorithm on complex tridiagonal rows lo·x[k−1] + di·x[k] + up·x[k+1] = r.
inline void thomas(std::vector<std::complex<double>>& lo, std::vector<std::complex<double>>& di,
                   std::vector<std::complex<double>>& up, std::vector<std::complex<double>>& r) {
  const std::size_t n = di.size();
  double scale = 0.0;
  for (const auto& d : di) scale = std::max(scale, std::abs(d));
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      const auto m = lo[k] / di[k - 1];
      di[k] -= m * up[k - 1];
      r[k] -= m * r[k - 1];
    }
    if (!(std::abs(di[k]) > 1e-13 * scale)) throw IllPosedError("resonant mode: zero pivot in the oblique slab solve");
  }
  r[n - 1] /= di[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) r[k] = (r[k] - up[k] * r[k + 1]) / di[k];
}

}  // namespace detail

/// Solves each component of −Δu = f with its own boundary condition at z = 0.
inline VectorField solve_poisson_oblique(const VectorField& f, const ObliqueBC& bc, const SpectralSlab& slab) {
  slab.validate();
  bc.validate();
  const Grid& g = *f.grid;
  const int n = slab.lateral_modes, nz = slab.vertical_nodes;
  if (g.dim(0) != n || g.dim(1) != n || g.dim(2) != nz || !g.periodic(0) || !g.periodic(1) || g.periodic(2) ||
      std::abs(g.h() - slab.spacing()) > 1e-12 * slab.spacing())
    throw ParameterError("field grid does not match the spectral slab");
  const double h = slab.spacing();
  const int half = n / 2 + 1;
  const std::size_t level = std::size_t(n) * n, slevel = std::size_t(half) * n;

  std::vector<double> real(level * nz);
  std::vector<std::complex<double>> spec(slevel * nz);
  int dims[2] = {n, n};
  auto* s = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_plan fwd = fftw_plan_many_dft_r2c(2, dims, nz, real.data(), nullptr, 1, int(level), s, nullptr, 1, int(slevel),
                                         FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_many_dft_c2r(2, dims, nz, s, nullptr, 1, int(slevel), real.data(), nullptr, 1, int(level),
                                         FFTW_ESTIMATE);
  struct PlanGuard {
    fftw_plan a, b;
    ~PlanGuard() {
      fftw_destroy_plan(a);
      fftw_destroy_plan(b);
    }
  } guard{fwd, bwd};

  VectorField u(f.grid);
  const double twopi_L = 2.0 * pi / slab.period;
  std::vector<std::complex<double>> lo(nz), di(nz), up(nz), r(nz);
  for (int c = 0; c < 3; ++c) {
    real = f.c[c];
    fftw_execute(fwd);
    const auto& comp = bc.component[c];
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < half; ++m) {
        const int jj = j <= n / 2 ? j : j - n;
        const bool nyquist = m == n / 2 || j == n / 2;
        const double kx = twopi_L * m, ky = twopi_L * jj;
        const double k2 = kx * kx + ky * ky, kabs = std::sqrt(k2);
        const double kappa = nyquist ? 0.0 : kx * comp.b.x() + ky * comp.b.y();
        for (int k = 0; k < nz; ++k) {
          lo[k] = -1.0;
          di[k] = 2.0 + h * h * k2;
          up[k] = -1.0;
          r[k] = h * h * spec[std::size_t(m) + std::size_t(half) * j + slevel * k];
        }
        // bottom row
        lo[0] = 0.0;
        if (comp.mode == BCMode::dirichlet) {
          di[0] = 1.0;
          up[0] = 0.0;
          r[0] = 0.0;
        } else {
          // ghost from the boundary condition: û₋₁ = û₁ + 2h(a + iκ)/b₃ û₀
          const std::complex<double> robin = std::complex<double>(comp.a, kappa) / comp.b.z();
          di[0] = 2.0 + h * h * k2 - 2.0 * h * robin;
          up[0] = -2.0;
        }
        // top row
        up[nz - 1] = 0.0;
        bool pure_neumann = false;
        if (slab.top == TopBoundary::dirichlet_zero) {
          lo[nz - 1] = 0.0;
          di[nz - 1] = 1.0;
          r[nz - 1] = 0.0;
        } else {
          lo[nz - 1] = -2.0;
          di[nz - 1] = 2.0 + h * h * k2 + 2.0 * h * kabs;
          pure_neumann = k2 == 0.0 && comp.mode != BCMode::dirichlet && comp.a == 0.0;
        }
        if (pure_neumann) {
          // compatibility: the discrete integral of f must vanish; then fix the gauge at the top
          std::complex<double> total = 0.0;
          double mag = 0.0;
          for (int k = 0; k < nz; ++k) {
            const double w = (k == 0 || k == nz - 1) ? 0.5 : 1.0;
            total += w * r[k];
            mag += w * std::abs(r[k]);
          }
          if (std::abs(total) > 1e-10 * std::max(mag, 1e-300))
            throw IllPosedError("pure Neumann mean mode: integral of f does not vanish");
          lo[nz - 1] = 0.0;
          di[nz - 1] = 1.0;
          r[nz - 1] = 0.0;
        }
        detail::thomas(lo, di, up, r);
        for (int k = 0; k < nz; ++k) spec[std::size_t(m) + std::size_t(half) * j + slevel * k] = r[k];
      }
    fftw_execute(bwd);
    const double scale = 1.0 / double(level);
    for (std::size_t q = 0; q < real.size(); ++q) u.c[c][q] = real[q] * scale;
  }
  require_finite(u, "solve_poisson_oblique");
  return u;
}

/// max over bottom nodes of |a u + b·∇u| (regular components) or |u| (dirichlet),
/// with one-sided second-order normal derivatives.
inline std::array<double, 3> oblique_bc_residual(const VectorField& u, const ObliqueBC& bc) {
  const Grid& g = *u.grid;
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    ScalarField s(u.grid);
    s.v = u.c[c];
    const VectorField du = gradient(s);
    for (int j = 0; j < g.dim(1); ++j)
      for (int i = 0; i < g.dim(0); ++i) {
        const std::size_t n = g.index(i, j, 0);
        const auto& comp = bc.component[c];
        const double res = comp.mode == BCMode::dirichlet ? u.c[c][n] : comp.a * u.c[c][n] + comp.b.dot(du.at(n));
        out[c] = std::max(out[c], std::abs(res));
      }
  }
  return out;
}

}  // namespace slipgreen
