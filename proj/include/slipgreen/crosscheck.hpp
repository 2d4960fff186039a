// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Kernel convolution against the spectral slab solver, with a least-squares
// fit of the Θ-term factor for the regular components.
#pragma once

#include <cmath>
#include <limits>

#include "slipgreen/oracle.hpp"
#include "slipgreen/reconstruct.hpp"

namespace slipgreen {

struct CrossCheckOptions {
  int target_stride = 0;  // sample every stride-th node per axis; 0 means n/16
  int lateral_images = 2;
  bool tabulated = true;
  SingularOptions singular;
};

struct CrossCheckReport {
  std::size_t targets = 0;
  std::array<double, 3> dirichlet_discrepancy{};  // rel L², image kernel vs oracle (dirichlet components only)
  std::array<double, 3> exact_discrepancy{};      // rel L², printed kernel vs oracle
  std::array<double, 3> fitted_calibration{};     // λ minimising |(u_λ − u_oracle)|, NaN for dirichlet components
  std::array<double, 3> calibrated_discrepancy{};
  std::array<double, 3> bc_residual{};            // oracle's own discrete BC residual

  nlohmann::json to_json() const {
    auto arr = [](const std::array<double, 3>& a) {
      nlohmann::json j = nlohmann::json::array();
      for (double v : a) j.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
      return j;
    };
    return {{"targets", targets},
            {"dirichlet_discrepancy", arr(dirichlet_discrepancy)},
            {"paper_exact_discrepancy", arr(exact_discrepancy)},
            {"fitted_calibration_factor", arr(fitted_calibration)},
            {"calibrated_discrepancy", arr(calibrated_discrepancy)},
            {"oracle_bc_residual", arr(bc_residual)}};
  }
};

/// Compares g ∗ f with the oracle solution of −Δu = f on the slab grid of f.
/// For dirichlet components only the image kernel is compared. For regular
/// components u_λ = u_D + λ(u_P − u_D) is linear in λ, so the fit is closed form.
inline CrossCheckReport oracle_cross_check(const VectorField& f, const ObliqueBC& bc, const SpectralSlab& slab,
                                           const CrossCheckOptions& opts = {}) {
  const VectorField uo = solve_poisson_oblique(f, bc, slab);
  const Grid& g = *f.grid;
  const int stride = opts.target_stride > 0 ? opts.target_stride : std::max(1, slab.lateral_modes / 16);
  std::vector<std::size_t> targets;
  for (std::size_t q = 0; q < g.size(); ++q) {
    const auto [i, j, k] = g.ijk(q);
    if (i % stride == 0 && j % stride == 0 && k % stride == 0) targets.push_back(q);
  }
  ConvolutionOptions co;
  co.lateral_images = opts.lateral_images;
  co.singular = opts.singular;
  KernelOptions kd;
  kd.variant = KernelVariant::dirichlet;
  KernelOptions kp;
  kp.tabulated = opts.tabulated;
  const auto ud = green_convolution(f, bc, targets, kd, co);
  const auto up = green_convolution(f, bc, targets, kp, co);

  CrossCheckReport rep;
  rep.targets = targets.size();
  rep.bc_residual = oblique_bc_residual(uo, bc);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int c = 0; c < 3; ++c) {
    double ref2 = 0.0, ed = 0.0, ep = 0.0, tt = 0.0, te = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const double o = uo.c[c][targets[k]];
      const double d = ud[k](c) - o, T = up[k](c) - ud[k](c);
      ref2 += o * o;
      ed += d * d;
      ep += (up[k](c) - o) * (up[k](c) - o);
      tt += T * T;
      te += T * (o - ud[k](c));
    }
    const double den = ref2 > 0.0 ? ref2 : 1.0;
    rep.dirichlet_discrepancy[c] = std::sqrt(ed / den);
    rep.exact_discrepancy[c] = std::sqrt(ep / den);
    if (bc.component[c].mode == BCMode::dirichlet || !(tt > 0.0)) {
      rep.fitted_calibration[c] = nan;
      rep.calibrated_discrepancy[c] = nan;
      continue;
    }
    const double lam = te / tt;
    rep.fitted_calibration[c] = lam;
    // |u_D + λT − u_o|² = ed − 2λ te + λ² tt
    rep.calibrated_discrepancy[c] = std::sqrt(std::max(0.0, ed - 2.0 * lam * te + lam * lam * tt) / den);
  }
  return rep;
}

/// Smooth compact bump exp(1 − 1/(1 − r²)), r = |x − c|/ρ.
inline double compact_bump(const Vec3& x, const Vec3& c, double rho) {
  const double r = (x - c).norm() / rho;
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

}  // namespace slipgreen
