// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Analytic flow fixtures.
#pragma once

#include <cmath>

#include "slipgreen/snapshot.hpp"

namespace slipgreen {

/// u = (U₀(ν/β + z), 0, 0): balances βU = νU′ on the wall z = 0 (outward normal −e₃).
inline Snapshot generate_shear(double beta, double nu, double U0, GridPtr grid) {
  if (!(beta > 0.0) || !(nu > 0.0)) throw ParameterError("shear fixture needs beta > 0 and nu > 0");
  const auto kind = grid->domain().kind;
  if (kind != DomainKind::half_space && kind != DomainKind::channel)
    throw ParameterError("shear fixture needs a half-space or channel grid");
  Snapshot s;
  s.grid = grid;
  s.nu = nu;
  s.beta = beta;
  s.u = sample_vector(grid, [&](const Vec3& x) { return Vec3{U0 * (nu / beta + x.z()), 0.0, 0.0}; });
  s.metadata = {{"generator", "shear"}, {"U0", U0}};
  return s;
}

/// u = (sin x cos y, −cos x sin y, 0), ω = (0, 0, 2 sin x sin y).
inline Snapshot generate_taylor_green(GridPtr grid, double nu = 1.0, double beta = 1.0) {
  Snapshot s;
  s.grid = grid;
  s.nu = nu;
  s.beta = beta;
  s.u = sample_vector(grid, [](const Vec3& x) {
    return Vec3{std::sin(x.x()) * std::cos(x.y()), -std::cos(x.x()) * std::sin(x.y()), 0.0};
  });
  s.metadata = {{"generator", "taylor-green"}};
  return s;
}

/// ∫|u|² of the Taylor-Green field over [0,2π)² × [0, Lz).
inline double taylor_green_energy(double lz) { return 2.0 * pi * pi * lz; }

/// Uniform rotation Ω about the x³ axis, u = Ω(−y, x, 0).
inline Snapshot generate_rigid_rotation(double omega, GridPtr grid, double nu = 1.0, double beta = 1.0) {
  Snapshot s;
  s.grid = grid;
  s.nu = nu;
  s.beta = beta;
  s.u = sample_vector(grid, [&](const Vec3& x) { return Vec3{-omega * x.y(), omega * x.x(), 0.0}; });
  s.metadata = {{"generator", "rigid-rotation"}, {"Omega", omega}};
  return s;
}

struct MisalignedLayout {
  double width = 0.0;  // ramp width w
  double phi = 0.0;    // total turning Φ, sin Φ = ρ√w
  double z_start = 0.0;
};

/// Vorticity (cos φ(z), sin φ(z), 0) with φ rising linearly by Φ across a
/// ramp of width w = k·h, k ≤ 3, whose ends sit on grid planes. The largest
/// |sin θ|/√|x−y| belongs to the two ramp ends, so the coherence modulus is
/// sin Φ/√w. The analytic ω is stored; the companion u = (∫sin φ, −∫cos φ, 0)
/// has a kinked curl at the ramp ends, recorded as the consistency tolerance.
inline MisalignedLayout misaligned_layout(double rho, const Grid& g) {
  if (!(rho >= 0.0)) throw ParameterError("rho_target must be >= 0");
  if (g.dim(2) < 8) throw ParameterError("misaligned fixture needs at least 8 nodes in z");
  MisalignedLayout L;
  const int k0 = g.dim(2) / 2 - 1;
  L.z_start = g.origin().z() + k0 * g.h();
  for (int k = 3; k >= 1; --k) {
    const double w = k * g.h();
    const double s = rho * std::sqrt(w);
    // the within-ramp ratio sin(gd)/√d must still be increasing at d = w
    if (s < std::sin(1.1655611852072113)) {
      L.width = w;
      L.phi = std::asin(s);
      return L;
    }
  }
  throw ParameterError("rho_target too large for this grid spacing");
}

inline Snapshot generate_misaligned(double rho, GridPtr grid) {
  const MisalignedLayout L = misaligned_layout(rho, *grid);
  const double za = L.z_start, zb = L.z_start + L.width, z0 = grid->origin().z();
  const double g = L.phi / L.width;
  auto phase = [&](double z) { return z <= za ? 0.0 : (z >= zb ? L.phi : g * (z - za)); };
  auto vel = [&](const Vec3& x) -> Vec3 {
    const double z = x.z();
    if (z <= za) return {0.0, -(z - z0), 0.0};
    if (g == 0.0) return {0.0, -(z - z0), 0.0};
    if (z <= zb) return {(1.0 - std::cos(g * (z - za))) / g, -(za - z0) - std::sin(g * (z - za)) / g, 0.0};
    const double s = std::sin(L.phi), c = std::cos(L.phi);
    return {(1.0 - c) / g + s * (z - zb), -(za - z0) - s / g - c * (z - zb), 0.0};
  };
  Snapshot s;
  s.grid = grid;
  s.u = sample_vector(grid, vel);
  s.omega = sample_vector(grid, [&](const Vec3& x) {
    const double p = phase(x.z());
    return Vec3{std::cos(p), std::sin(p), 0.0};
  });
  s.metadata = {{"generator", "misaligned"},
                {"rho_target", rho},
                {"ramp_width", L.width},
                {"ramp_turning", L.phi},
                {"vorticity_consistency_tolerance", vorticity_consistency(s)}};
  return s;
}

/// Smallest positive root of ν λ sin(λH/2) = β cos(λH/2): the even shear
/// eigenmode cos(λ(z − H/2)) of the slip channel.
inline double channel_shear_eigenvalue(double beta, double nu, double height) {
  auto f = [&](double l) { return nu * l * std::sin(0.5 * l * height) - beta * std::cos(0.5 * l * height); };
  double lo = 0.0, hi = pi / height;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Shear eigenmode plus an optional divergence-free 3D perturbation with u³ = 0 on both walls.
inline Snapshot generate_channel_mode(double beta, double nu, GridPtr grid, double amplitude = 1.0,
                                      double perturbation = 0.0) {
  if (grid->domain().kind != DomainKind::channel) throw ParameterError("channel mode needs a channel grid");
  if (!(beta > 0.0) || !(nu > 0.0)) throw ParameterError("channel mode needs beta > 0 and nu > 0");
  const double H = grid->domain().height;
  const double lam = channel_shear_eigenvalue(beta, nu, H);
  const double k1 = 2.0 * pi / grid->length(0), k2 = 2.0 * pi / grid->length(1), kz = pi / H;
  Snapshot s;
  s.grid = grid;
  s.nu = nu;
  s.beta = beta;
  s.u = sample_vector(grid, [&](const Vec3& x) {
    Vec3 v{amplitude * std::cos(lam * (x.z() - 0.5 * H)), 0.0, 0.0};
    if (perturbation != 0.0) {
      v.x() += -perturbation * kz / k1 * std::sin(k1 * x.x()) * std::cos(k2 * x.y()) * std::cos(kz * x.z());
      v.z() += perturbation * std::cos(k1 * x.x()) * std::cos(k2 * x.y()) * std::sin(kz * x.z());
    }
    return v;
  });
  s.metadata = {{"generator", "channel-mode"}, {"lambda", lam}, {"amplitude", amplitude}, {"perturbation", perturbation}};
  return s;
}

}  // namespace slipgreen
