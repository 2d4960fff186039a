// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <gtest/gtest.h>

#include "slipgreen/geometry.hpp"

using namespace slipgreen;

namespace {

BoundaryChart identity_chart() {
  BoundaryChart c;
  c.d1 = c.d2 = 10.0;
  c.set_cutoff_radii();
  return c;
}

std::vector<BoundaryChart> sample_charts() {
  std::vector<BoundaryChart> out;
  auto ball = build_atlas(DomainSpec::ball(1.5), Box{Vec3(-2, -2, -2), Vec3(2, 2, 2)}, 2);
  auto cyl = build_atlas(DomainSpec::cylinder(2.0), Box{Vec3(-3, -3, -1), Vec3(3, 3, 1)}, 2);
  for (std::size_t k = 0; k < ball.charts().size(); k += 5) out.push_back(ball.charts()[k]);
  for (std::size_t k = 0; k < cyl.charts().size(); k += 3) out.push_back(cyl.charts()[k]);
  BoundaryChart lin = identity_chart();
  lin.height = HeightFunction::linear(0.3, -0.2);
  out.push_back(lin);
  return out;
}

// a point inside the chart, drawn in straightened coordinates
Vec3 random_chart_point(const BoundaryChart& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-0.9, 0.9), v(0.0, 1.8);
  return unstraighten(c, Vec3(u(rng) * c.d2, u(rng) * c.d2, v(rng) * c.d2));
}

}  // namespace

TEST(Straighten, IdentityChart) {
  const Vec3 z = straighten(identity_chart(), Vec3(1, 2, 3));
  EXPECT_EQ(z, Vec3(1, 2, 3));
}

TEST(Straighten, LinearHeightSubtracts) {
  BoundaryChart c = identity_chart();
  c.height = HeightFunction::linear(1.0, 0.0);
  const Vec3 z = straighten(c, Vec3(1, 0, 2));
  EXPECT_DOUBLE_EQ(z.x(), 1.0);
  EXPECT_DOUBLE_EQ(z.y(), 0.0);
  EXPECT_DOUBLE_EQ(z.z(), 1.0);
}

TEST(Straighten, BallNorthPoleCentreMapsToPlane) {
  const double R = 1.0;
  BoundaryChart c;
  c.center = Vec3(0, 0, R);
  // third axis into the fluid, i.e. towards the centre of the ball
  c.rotation << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  c.height = HeightFunction::sphere(R);
  c.d1 = c.d2 = 0.5;
  c.set_cutoff_radii();
  EXPECT_NEAR(straighten(c, c.center).z(), 0.0, 1e-15);
  // another sphere point inside the chart also lands on the plane
  const Vec3 p = R * Vec3(0.2, 0.1, 1.0).normalized();
  EXPECT_NEAR(straighten(c, p).z(), 0.0, 1e-14);
  // and interior points sit above it
  EXPECT_GT(straighten(c, 0.9 * p).z(), 0.0);
}

TEST(Straighten, OutOfChartThrows) {
  BoundaryChart c = identity_chart();
  c.d2 = 1.0;
  EXPECT_THROW(straighten(c, Vec3(5, 0, 0.5)), OutOfChartError);
  EXPECT_THROW(straighten(c, Vec3(0, 0, -0.5)), OutOfChartError);
  EXPECT_THROW(jacobian(c, Vec3(5, 0, 0.5)), OutOfChartError);
}

TEST(Straighten, InverseRoundTripOnRandomChartPoints) {
  std::mt19937_64 rng(7);
  const auto charts = sample_charts();
  int n = 0;
  while (n < 1000)
    for (const auto& c : charts) {
      const Vec3 x = random_chart_point(c, rng);
      const Vec3 back = unstraighten(c, straighten(c, x));
      ASSERT_LT((back - x).norm(), 1e-12);
      ++n;
    }
}

TEST(Straighten, BoundaryPointsOfAtlasChartsMapToPlane) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (const auto& c : sample_charts()) {
    const Vec3 zp(u(rng) * c.d2, u(rng) * c.d2, 0.0);
    const Vec3 x = unstraighten(c, zp);
    if (c.height.kind == HeightFunction::Kind::sphere) EXPECT_NEAR(x.norm(), 1.5, 1e-12);
    if (c.height.kind == HeightFunction::Kind::cylinder) EXPECT_NEAR(std::hypot(x.x(), x.y()), 2.0, 1e-12);
    EXPECT_NEAR(straighten(c, x).z(), 0.0, 1e-12);
  }
}

TEST(Jacobian, IdentityChartIsIdentity) {
  EXPECT_TRUE(jacobian(identity_chart(), Vec3(0.3, 0.2, 0.4)).isApprox(Mat3::Identity()));
}

TEST(Jacobian, LinearHeightThirdRow) {
  BoundaryChart c = identity_chart();
  c.height = HeightFunction::linear(1.0, 0.0);
  const Mat3 J = jacobian(c, Vec3(0.1, 0.1, 0.5));
  EXPECT_EQ(J.row(2), Eigen::RowVector3d(-1, 0, 1));
  EXPECT_DOUBLE_EQ(J.determinant(), 1.0);
}

TEST(Jacobian, UnitDeterminantEverywhere) {
  std::mt19937_64 rng(3);
  for (const auto& c : sample_charts())
    for (int k = 0; k < 100; ++k) {
      const Vec3 x = random_chart_point(c, rng);
      ASSERT_NEAR(std::abs(jacobian(c, x).determinant()), 1.0, 1e-12);
    }
}

TEST(Jacobian, MatchesFiniteDifferencesOfStraighten) {
  std::mt19937_64 rng(5);
  const double h = 1e-6;
  for (const auto& c : sample_charts()) {
    const Vec3 x = random_chart_point(c, rng);
    const Mat3 J = jacobian(c, x);
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e(a) = h;
      const Vec3 fd = (straighten(c, x + e) - straighten(c, x - e)) / (2 * h);
      EXPECT_LT((fd - J.col(a)).norm(), 1e-7);
    }
  }
}

TEST(Reflect, Examples) {
  EXPECT_EQ(reflect(Vec3(1, 2, 3)), Vec3(1, 2, -3));
  EXPECT_EQ(reflect(Vec3(0, 0, 0)), Vec3(0, 0, 0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int k = 0; k < 100; ++k) {
    const Vec3 z(u(rng), u(rng), u(rng));
    EXPECT_EQ(reflect(reflect(z)), z);
    const Vec3 p(z.x(), z.y(), 0.0);
    EXPECT_EQ(reflect(p), p);
  }
}

TEST(Curvature, PrincipalCurvatures) {
  EXPECT_EQ(principal_curvatures(DomainSpec::half_space()), std::make_pair(0.0, 0.0));
  EXPECT_EQ(principal_curvatures(DomainSpec::ball(2.0)), std::make_pair(0.5, 0.5));
  EXPECT_EQ(principal_curvatures(DomainSpec::cylinder(4.0)), std::make_pair(0.25, 0.0));
}

TEST(Curvature, SurfaceGeometryIsConstantAndDiagonal) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  for (auto d : {DomainSpec::ball(2.0), DomainSpec::cylinder(4.0), DomainSpec::half_space()}) {
    for (int k = 0; k < 20; ++k) {
      Vec3 x(n(rng), n(rng), n(rng));
      if (d.kind == DomainKind::ball) x = 2.0 * x.normalized();
      if (d.kind == DomainKind::cylinder) x.head<2>() = 4.0 * x.head<2>().normalized();
      if (d.kind == DomainKind::half_space) x.z() = 0.0;
      const auto g = surface_geometry(d, x);
      const auto [k1, k2] = principal_curvatures(d);
      EXPECT_EQ(g.kappa1, k1);
      EXPECT_EQ(g.kappa2, k2);
      EXPECT_EQ(g.second_form(0, 1), 0.0);
      EXPECT_DOUBLE_EQ(g.mean_curvature, g.second_form.trace());
      EXPECT_NEAR(g.normal.norm(), 1.0, 1e-14);
      EXPECT_NEAR(g.tangent1.dot(g.normal), 0.0, 1e-14);
      EXPECT_NEAR(g.tangent2.dot(g.normal), 0.0, 1e-14);
    }
  }
}

TEST(DomainSpecTest, RadiusValidated) {
  EXPECT_THROW(DomainSpec::ball(0.0), ParameterError);
  EXPECT_THROW(DomainSpec::cylinder(-1.0), ParameterError);
}

TEST(NavierToOblique, HalfSpace) {
  const auto bc = navier_to_oblique(1.0, 1.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(bc.component[0].a, -1.0);
  EXPECT_DOUBLE_EQ(bc.component[1].a, -1.0);
  EXPECT_EQ(bc.component[0].b, Vec3::UnitZ());
  EXPECT_EQ(bc.component[2].mode, BCMode::dirichlet);
}

TEST(NavierToOblique, Ball) {
  const auto [k1, k2] = principal_curvatures(DomainSpec::ball(2.0));
  const auto bc = navier_to_oblique(1.0, 0.5, k1, k2);
  EXPECT_DOUBLE_EQ(bc.component[0].a, -2.5);
  EXPECT_DOUBLE_EQ(bc.component[1].a, -2.5);
}

TEST(NavierToOblique, Cylinder) {
  const auto [k1, k2] = principal_curvatures(DomainSpec::cylinder(4.0));
  const auto bc = navier_to_oblique(1.0, 1.0, k1, k2);
  EXPECT_DOUBLE_EQ(bc.component[0].a, -1.25);
  EXPECT_DOUBLE_EQ(bc.component[1].a, -1.0);
}

TEST(NavierToOblique, RejectsNonpositive) {
  EXPECT_THROW(navier_to_oblique(0.0, 1.0, 0, 0), ParameterError);
  EXPECT_THROW(navier_to_oblique(1.0, -1.0, 0, 0), ParameterError);
}

TEST(NavierToOblique, InvariantsOverRandomParameters) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> lg(-3, 3);
  for (int k = 0; k < 200; ++k) {
    const double beta = std::pow(10.0, lg(rng)), nu = std::pow(10.0, lg(rng)), R = std::pow(10.0, lg(rng));
    for (auto d : {DomainSpec::half_space(), DomainSpec::ball(R), DomainSpec::cylinder(R)}) {
      const auto [k1, k2] = principal_curvatures(d);
      const auto bc = navier_to_oblique(beta, nu, k1, k2);
      EXPECT_NO_THROW(bc.validate());
      for (int i = 0; i < 2; ++i) {
        EXPECT_LE(bc.component[i].a, 0.0);
        EXPECT_NEAR(bc.component[i].b.norm(), 1.0, 1e-15);
        EXPECT_GT(bc.component[i].b.z(), 0.0);
      }
      EXPECT_TRUE(is_regular(bc, Vec3::UnitZ()).regular);
    }
  }
}

TEST(IsRegular, Examples) {
  ObliqueBC down = ObliqueBC::uniform(-1.0, Vec3(0, 0, -1));
  EXPECT_TRUE(is_regular(down, Vec3(0, 0, -1)).regular);
  ObliqueBC tangential = ObliqueBC::uniform(-1.0, Vec3(1, 0, 0));
  EXPECT_FALSE(is_regular(tangential, Vec3(0, 0, 1)).regular);
  ObliqueBC neumann = ObliqueBC::uniform(0.0, Vec3(0, 0, 1));
  const auto r = is_regular(neumann, Vec3(0, 0, 1));
  EXPECT_TRUE(r.regular);
  EXPECT_TRUE(r.neumann_degenerate);
  EXPECT_FALSE(is_regular(down, Vec3(0, 0, -1)).neumann_degenerate);
}

TEST(ObliqueBCTest, ValidateRejectsBadCoefficients) {
  EXPECT_THROW(ObliqueBC::uniform(0.5, Vec3::UnitZ()), ParameterError);
  EXPECT_THROW(ObliqueBC::uniform(-1.0, Vec3(0, 0, 2)), ParameterError);
}

TEST(Cutoff, PlateausAndSlope) {
  for (auto kind : {CutoffProfile::Kind::smooth, CutoffProfile::Kind::quintic}) {
    CutoffProfile z{kind};
    double prev = 1.0;
    for (int k = 0; k <= 4000; ++k) {
      const double t = k / 4000.0;
      const double v = z(t);
      if (t <= 0.25) EXPECT_EQ(v, 1.0);
      if (t >= 0.75) EXPECT_EQ(v, 0.0);
      EXPECT_LE(v, prev + 1e-15);
      EXPECT_LE(std::abs(z.derivative(t)), 4.0);
      prev = v;
    }
    // derivative agrees with differences
    for (double t : {0.3, 0.5, 0.7}) EXPECT_NEAR(z.derivative(t), (z(t + 1e-6) - z(t - 1e-6)) / 2e-6, 1e-6);
  }
}

TEST(Atlas, HalfSpaceSlabSingleFlatChart) {
  const auto a = build_atlas(DomainSpec::half_space(), Box{Vec3(0, 0, 0), Vec3(1, 1, 1)}, 1);
  ASSERT_EQ(a.charts().size(), 1u);
  EXPECT_TRUE(a.cubes().empty());
  EXPECT_EQ(a.charts()[0].height.kind, HeightFunction::Kind::flat);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    const auto chi = a.partition(Vec3(u(rng), u(rng), u(rng)));
    EXPECT_EQ(chi.size(), 1u);
    EXPECT_DOUBLE_EQ(chi[0], 1.0);
  }
}

TEST(Atlas, CutoffRadii) {
  const auto a = build_atlas(DomainSpec::ball(1.0), Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 4);
  for (const auto& c : a.charts()) {
    EXPECT_EQ(c.d3, std::min(c.d1, c.d2) / 4.0);
    EXPECT_LE(c.d4, c.d3 / 2.0);
  }
  AtlasOptions o;
  o.d4_cap = 0.01;
  const auto b = build_atlas(DomainSpec::ball(1.0), Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 4, o);
  EXPECT_EQ(b.d4(), 0.01);
}

TEST(Atlas, BallPartitionSumsToOne) {
  const auto a = build_atlas(DomainSpec::ball(1.0), Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 8);
  EXPECT_EQ(a.charts().size(), 6u * 64u);
  for (const auto& c : a.charts()) EXPECT_NEAR(c.center.norm(), 1.0, 1e-14);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  int n = 0;
  while (n < 1000) {
    const Vec3 x(u(rng), u(rng), u(rng));
    if (x.norm() > 1.0) continue;
    double s = 0.0;
    for (double w : a.partition(x)) {
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
      s += w;
    }
    ASSERT_NEAR(s, 1.0, 1e-12);
    ++n;
  }
  // boundary points too
  for (int k = 0; k < 200; ++k) {
    const Vec3 x = Vec3(u(rng), u(rng), u(rng)).normalized();
    double s = 0.0;
    for (double w : a.partition(x)) s += w;
    ASSERT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Atlas, CylinderPartitionOnGridSamples) {
  const auto a = build_atlas(DomainSpec::cylinder(1.0), Box{Vec3(-1, -1, -0.5), Vec3(1, 1, 0.5)}, 3);
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j)
      for (int k = 0; k <= 10; ++k) {
        const Vec3 x(-1 + 0.1 * i, -1 + 0.1 * j, -0.5 + 0.1 * k);
        if (std::hypot(x.x(), x.y()) > 1.0) continue;
        double s = 0.0;
        for (double w : a.partition(x)) s += w;
        ASSERT_NEAR(s, 1.0, 1e-12);
      }
}

TEST(Atlas, InteriorCubesKeepDistanceFromBoundary) {
  for (auto d : {DomainSpec::ball(1.0), DomainSpec::cylinder(1.0)}) {
    const auto a = build_atlas(d, Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 4);
    ASSERT_FALSE(a.cubes().empty());
    for (const auto& q : a.cubes()) {
      // farthest point of the closed cube support
      const double w = q.half_width;
      for (int c = 0; c < 8; ++c) {
        const Vec3 corner = q.center + w * Vec3(c & 1 ? 1 : -1, c & 2 ? 1 : -1, c & 4 ? 1 : -1);
        EXPECT_GE(d.depth(corner), a.d1() - 1e-12);
      }
    }
  }
}

TEST(Atlas, SupportsInsideCoverElements) {
  const auto a = build_atlas(DomainSpec::ball(1.0), Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 4);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 300; ++k) {
    const Vec3 x(u(rng), u(rng), u(rng));
    if (x.norm() > 1.0) continue;
    const auto chi = a.partition(x);
    for (std::size_t c = a.cubes().size(); c < chi.size(); ++c)
      if (chi[c] > 0.0) EXPECT_TRUE(a.charts()[c - a.cubes().size()].contains(x));
  }
}

TEST(Atlas, PartitionGradientMatchesDifferences) {
  const auto a = build_atlas(DomainSpec::ball(1.0), Box{Vec3(-1, -1, -1), Vec3(1, 1, 1)}, 3);
  const Vec3 x(0.3, -0.4, 0.5);
  const auto chi = a.partition(x);
  for (std::size_t c = 0; c < chi.size(); ++c) {
    if (chi[c] == 0.0) continue;
    const auto [w, g] = a.partition_element(c, x);
    EXPECT_NEAR(w, chi[c], 1e-14);
    for (int e = 0; e < 3; ++e) {
      Vec3 d = Vec3::Zero();
      d(e) = 1e-6;
      const double fd = (a.partition(x + d)[c] - a.partition(x - d)[c]) / 2e-6;
      EXPECT_NEAR(g(e), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Atlas, DegenerateBoxThrows) {
  EXPECT_THROW(build_atlas(DomainSpec::half_space(), Box{Vec3(0, 0, 0), Vec3(1, 0, 1)}, 1), ConfigurationError);
  EXPECT_THROW(build_atlas(DomainSpec::half_space(), Box{Vec3(0, 0, -2), Vec3(1, 1, -1)}, 1), ConfigurationError);
}

TEST(Atlas, JsonCarriesChartData) {
  const auto a = build_atlas(DomainSpec::ball(2.0), Box{Vec3(-2, -2, -2), Vec3(2, 2, 2)}, 2);
  const auto j = a.to_json();
  EXPECT_EQ(j["domain"]["kind"], "ball");
  EXPECT_EQ(j["domain"]["radius"], 2.0);
  ASSERT_EQ(j["boundary_charts"].size(), a.charts().size());
  EXPECT_EQ(j["boundary_charts"][0]["rotation"].size(), 9u);
  EXPECT_EQ(j["d3"], a.d3());
  const Mat3 R = from_row_major(j["boundary_charts"][0]["rotation"].get<std::array<double, 9>>());
  EXPECT_TRUE(R.isApprox(a.charts()[0].rotation));
  EXPECT_NEAR(R.determinant(), 1.0, 1e-14);
}
