// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slipgreen/crosscheck.hpp"
#include "slipgreen/generators.hpp"
#include "slipgreen/reconstruct.hpp"

using namespace slipgreen;

namespace {

constexpr double R = 0.5, ZS = 0.7;
constexpr int P = 10, Q = 10;

// Divergence-free, compactly supported fields in a half-space box.
// Robin form: u³ carries p(z) = z − a z²/2 so that a u + ∂₃u = 0 on z = 0 for the lateral components.
Vec3 robin_field(const Vec3& x, double a) {
  const double s = (x.x() * x.x() + x.y() * x.y()) / (R * R), t = x.z() / ZS;
  if (s >= 1 || t >= 1) return Vec3::Zero();
  const double om = 1 - s, g1 = -2.0 * P / (R * R) * std::pow(om, P - 1);
  const double lap = -4.0 * P / (R * R) * std::pow(om, P - 1) + 4.0 * P * (P - 1) * s / (R * R) * std::pow(om, P - 2);
  const double z = x.z(), p = z - 0.5 * a * z * z, dp = 1 - a * z, B = std::pow(1 - t * t, Q),
               dB = Q * std::pow(1 - t * t, Q - 1) * (-2 * t / ZS);
  const double dh = dp * B + p * dB;
  return {g1 * x.x() * dh, g1 * x.y() * dh, -lap * p * B};
}

// u = ∇×(0, 0, Φ z² B): tangential, and zero on z = 0 to second order.
Vec3 dirichlet_field(const Vec3& x) {
  const double s = (x.x() * x.x() + x.y() * x.y()) / (R * R), t = x.z() / ZS;
  if (s >= 1 || t >= 1) return Vec3::Zero();
  const double g1 = -2.0 * P / (R * R) * std::pow(1 - s, P - 1);
  const double a3 = x.z() * x.z() * std::pow(1 - t * t, Q);
  return {g1 * x.y() * a3, -g1 * x.x() * a3, 0.0};
}

GridPtr half_box(int N) {
  const double h = 1.0 / N;
  return make_grid({-0.625, -0.625, 0}, h, {int(1.25 * N) + 1, int(1.25 * N) + 1, int(0.875 * N) + 1},
                   {false, false, false}, DomainSpec::half_space());
}

// global flat chart with d₃ beyond the data, d₄ = 1/4
ReconstructionPlan flat_plan(const Grid& g, double min_d2 = 40.0) {
  ReconstructionPlan pl;
  AtlasOptions ao;
  ao.min_d2 = min_d2;
  ao.d4_cap = 0.25;
  pl.atlas = build_atlas(DomainSpec::half_space(), Box{g.origin(), g.origin() + Vec3(1.25, 1.25, 0.875)}, 1, ao);
  pl.bc = navier_to_oblique(1, 1, 0, 0);
  pl.kernel.tabulated = true;
  return pl;
}

std::size_t node_at(const Grid& g, const Vec3& x) {
  const Vec3 q = (x - g.origin()) / g.h();
  return g.index(int(std::lround(q.x())), int(std::lround(q.y())), int(std::lround(q.z())));
}

std::vector<std::size_t> eighth_targets(const Grid& g, double zlo, double zhi) {
  std::vector<std::size_t> out;
  auto on = [](double v) { return std::abs(v * 8 - std::round(v * 8)) < 1e-9; };
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec3 x = g.position(n);
    if (on(x.x()) && on(x.y()) && on(x.z()) && x.z() >= zlo - 1e-9 && x.z() <= zhi + 1e-9 &&
        std::abs(x.x()) <= 0.375 + 1e-9 && std::abs(x.y()) <= 0.375 + 1e-9)
      out.push_back(n);
  }
  return out;
}

}  // namespace

TEST(Reconstruct, ZeroVorticityGivesZero) {
  const auto g = half_box(32);
  auto pl = flat_plan(*g);
  pl.targets = eighth_targets(*g, 0.0, 0.75);
  const auto r = assemble_velocity(VectorField(g), pl);
  for (int c = 0; c < 3; ++c)
    for (double v : r.u.c[c]) ASSERT_EQ(v, 0.0);
  EXPECT_EQ(r.report["targets"], pl.targets.size());
}

TEST(Reconstruct, Linearity) {
  const auto g = half_box(32);
  auto pl = flat_plan(*g);
  pl.targets = {node_at(*g, Vec3(0.125, 0.0, 0.25)), node_at(*g, Vec3(-0.25, 0.125, 0.0)),
                node_at(*g, Vec3(0.0, 0.0, 0.5))};
  const auto w1 = curl(sample_vector(g, [](const Vec3& x) { return robin_field(x, -1.0); }));
  const auto w2 = curl(sample_vector(g, dirichlet_field));
  VectorField w3(g);
  const double alpha = 1.7;
  for (int c = 0; c < 3; ++c)
    for (std::size_t n = 0; n < g->size(); ++n) w3.c[c][n] = alpha * w1.c[c][n] + w2.c[c][n];
  const auto a = assemble_velocity(w1, pl), b = assemble_velocity(w2, pl), c = assemble_velocity(w3, pl);
  for (auto t : pl.targets) {
    const Vec3 lhs = c.u.at(t), rhs = alpha * a.u.at(t) + b.u.at(t);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * std::max(1.0, lhs.norm()));
  }
}

TEST(Reconstruct, CutoffSwapOnlyActsInAnnulus) {
  // small d₃ (= 1/2) so the cutoff matters: ζ(r/d₃) = 1 for r ≤ 1/8, 0 for r ≥ 3/8
  const auto g = half_box(32);
  auto smooth = flat_plan(*g, 2.0);
  ASSERT_NEAR(smooth.atlas.d3(), 0.5, 1e-12);
  auto quintic = smooth;
  quintic.zeta = CutoffProfile{CutoffProfile::Kind::quintic};
  const Vec3 x0(0.0, 0.0, 0.375);
  smooth.targets = quintic.targets = {node_at(*g, x0)};
  const std::size_t t = smooth.targets[0];
  // vorticity supported in a small ball around c
  auto localized = [&](const Vec3& c, double rho) {
    return sample_vector(g, [&](const Vec3& x) {
      const double b = compact_bump(x, c, rho);
      return Vec3(0.0, b, 0.5 * b);
    });
  };
  // ∇×ω reaches one cell past the bump radius
  const double rho = 0.05;
  {
    const auto w = localized(x0 + Vec3(0.03, 0.0, 0.02), rho);
    const auto a = assemble_velocity(w, smooth), b = assemble_velocity(w, quintic);
    EXPECT_EQ(a.u.at(t), b.u.at(t));
    EXPECT_GT(a.u.at(t).norm(), 0.0);
  }
  {
    const auto w = localized(x0 + Vec3(0.25, 0.0, 0.0), rho);
    const auto a = assemble_velocity(w, smooth), b = assemble_velocity(w, quintic);
    EXPECT_GT((a.u.at(t) - b.u.at(t)).norm(), 1e-6 * a.u.at(t).norm());
  }
  {
    // beyond 3d₃/4: both profiles drop the source entirely
    const auto w = localized(x0 + Vec3(0.0, 0.5, 0.0), rho);
    const auto a = assemble_velocity(w, smooth), b = assemble_velocity(w, quintic);
    EXPECT_EQ(a.u.at(t), Vec3::Zero());
    EXPECT_EQ(b.u.at(t), Vec3::Zero());
    EXPECT_EQ(a.j2.at(t), Vec3::Zero());
  }
}

TEST(Reconstruct, DirichletManufacturedConvergesSecondOrder) {
  std::vector<ConvergenceLevel> levels;
  for (int N : {32, 64}) {
    const auto g = half_box(N);
    const auto u = sample_vector(g, dirichlet_field);
    auto pl = flat_plan(*g);
    pl.bc = ObliqueBC::dirichlet();
    pl.kernel.variant = KernelVariant::dirichlet;
    pl.targets = eighth_targets(*g, 0.25, 0.5);
    levels.push_back({curl(u), pl, u});
  }
  const auto rows = convergence_study(levels);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[1].max_error, rows[0].max_error);
  EXPECT_NEAR(rows[1].order, 2.0, 0.4);
  const auto j = to_json(rows);
  EXPECT_EQ(j.size(), 2u);
}

TEST(Reconstruct, ZeroFieldConvergenceRows) {
  std::vector<ConvergenceLevel> levels;
  for (int N : {32, 40}) {
    const auto g = half_box(N);
    auto pl = flat_plan(*g);
    pl.targets = eighth_targets(*g, 0.25, 0.5);
    levels.push_back({VectorField(g), pl, VectorField(g)});
  }
  for (const auto& r : convergence_study(levels)) {
    EXPECT_EQ(r.max_error, 0.0);
    EXPECT_EQ(r.rms_error, 0.0);
  }
}

TEST(Reconstruct, ResidualReportSplitsCollar) {
  const auto g = half_box(32);
  const auto u = sample_vector(g, [](const Vec3& x) { return robin_field(x, -1.0); });
  auto pl = flat_plan(*g);
  pl.kernel.variant = KernelVariant::oracle_calibrated;
  pl.kernel.calibration = -3.0;
  pl.targets = eighth_targets(*g, 0.0, 0.5);
  const auto r = assemble_velocity(curl(u), pl, &u);
  const auto& res = r.report["residual"];
  EXPECT_GT(res["collar"]["points"].get<int>(), 0);
  EXPECT_GT(res["interior"]["points"].get<int>(), 0);
  EXPECT_EQ(res["collar_width"], pl.atlas.d4());
  EXPECT_EQ(r.report["calibration_factor"], -3.0);
  EXPECT_LT(res["interior"]["relative_l2"].get<double>(), 0.1);
}

TEST(Reconstruct, PlanValidation) {
  const auto g = half_box(16);  // d₄ = 1/4 is only 4 cells here
  auto pl = flat_plan(*g);
  EXPECT_THROW(assemble_velocity(VectorField(g), pl), ConfigurationError);
  pl.min_cells_across_d4 = 4;
  pl.targets = {g->size() + 3};
  EXPECT_THROW(assemble_velocity(VectorField(g), pl), ConfigurationError);
  const auto ball = make_grid(Vec3(-1, -1, -1), 1.0 / 16, {33, 33, 33}, {false, false, false}, DomainSpec::ball(1.0));
  pl.targets.clear();
  EXPECT_THROW(assemble_velocity(VectorField(ball), pl), ConfigurationError);
}

TEST(J2, ConstantNormalVorticityHasNoSurfaceTerm) {
  const auto g = half_box(32);
  const auto pl = flat_plan(*g);
  VectorField w(g);
  for (std::size_t n = 0; n < g->size(); ++n) w.c[2][n] = 1.0;
  const auto s = j2_decompose(w, pl, 0, node_at(*g, Vec3(0.0, 0.0, 0.125)));
  EXPECT_EQ(s.j23, Vec3::Zero());
  EXPECT_GT(s.surface_points, 0u);
}

TEST(J2, SplitIdentityConvergesWithRefinement) {
  const Vec3 x0(0.125, 0.0625, 0.125);
  double prev = 0.0;
  for (int N : {32, 64}) {
    const auto g = half_box(N);
    ReconstructionPlan pl = flat_plan(*g, 2.0);
    pl.kernel.variant = KernelVariant::oracle_calibrated;
    pl.kernel.calibration = -3.0;
    const auto w = curl(sample_vector(g, [](const Vec3& x) { return robin_field(x, -1.0); }));
    const auto s = j2_decompose(w, pl, 0, node_at(*g, x0));
    const double e = (s.sum() - s.direct).norm();
    EXPECT_LT(e, 0.05 * s.direct.norm());
    if (prev > 0.0) EXPECT_GT(std::log2(prev / e), 1.0);
    prev = e;
    EXPECT_NEAR(s.to_json()["split_error"].get<double>(), e, 1e-15);
  }
}

TEST(J2, ShearSurfaceTermAgreesWithFinerSurfaceMesh) {
  const int N = 32;
  const double h = 1.0 / N;
  const auto g = make_grid({-1, -1, 0}, h, {2 * N, 2 * N, N + 1}, {true, true, false}, DomainSpec::half_space());
  const auto sh = generate_shear(1, 1, 1, g);
  ReconstructionPlan pl;
  AtlasOptions ao;
  ao.min_d2 = 2;
  pl.atlas = build_atlas(DomainSpec::half_space(), Box{g->origin(), g->origin() + Vec3(2, 2, 1)}, 1, ao);
  pl.bc = navier_to_oblique(1, 1, 0, 0);
  const std::size_t t = g->index(N, N, N / 8);
  const auto coarse = j2_decompose(vorticity(sh), pl, 0, t);
  J2Options fine;
  fine.surface_spacing = h / 4;
  const auto ref = j2_decompose(vorticity(sh), pl, 0, t, fine);
  EXPECT_GT(coarse.j23.norm(), 1e-4);
  EXPECT_LT((coarse.j23 - ref.j23).norm(), 0.02 * ref.j23.norm());
  EXPECT_GT(ref.surface_points, coarse.surface_points);
  // ∇×ω = 0 for the affine profile, so the direct volume form vanishes
  EXPECT_EQ(coarse.direct, Vec3::Zero());
}

TEST(Singular, LatticeConstantMatchesDirectSum) {
  EXPECT_EQ(lattice_self_constant, oracle::cubic_lattice_constant);
  // h³ Σ_{n≠0} e^{−|nh|²}/|nh| against 2π − C h²
  for (double h : {0.25, 0.125}) {
    const int M = int(std::ceil(6.5 / h));
    double s = 0.0;
    for (int i = -M; i <= M; ++i)
      for (int j = -M; j <= M; ++j)
        for (int k = -M; k <= M; ++k) {
          if (i == 0 && j == 0 && k == 0) continue;
          const double r = h * std::sqrt(double(i * i + j * j + k * k));
          s += std::exp(-r * r) / r;
        }
    s *= h * h * h;
    const double corrected = s + lattice_self_constant * h * h;
    EXPECT_LT(std::abs(corrected - 2 * pi), 0.05 * lattice_self_constant * h * h);
  }
}

TEST(Singular, OptionsParsing) {
  EXPECT_EQ(singular_correction_from_string("ball"), SingularCorrection::ball);
  EXPECT_EQ(singular_correction_from_string("lattice"), SingularCorrection::lattice);
  EXPECT_THROW(singular_correction_from_string("disc"), ParameterError);
  SingularOptions so;
  so.correction = SingularCorrection::ball;
  EXPECT_EQ(so.exclusion_radius(0.1), 0.2);
  so.exclusion_cells = 0.5;
  EXPECT_THROW(so.validate(), ParameterError);
}
