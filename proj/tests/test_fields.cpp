// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "slipgreen/generators.hpp"
#include "slipgreen/operators.hpp"
#include "slipgreen/snapshot.hpp"
#include "slipgreen/stepper.hpp"

using namespace slipgreen;

namespace {

GridPtr box_grid(int n, double len = 1.0) {
  return make_grid(Vec3(-0.5, -0.3, 0.1), len / (n - 1), {n, n, n}, {false, false, false}, DomainSpec::half_space());
}

GridPtr periodic_box(int n) {
  return make_grid(Vec3::Zero(), 2 * pi / n, {n, n, n}, {true, true, true}, DomainSpec::half_space());
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// random quadratic vector field with its exact gradient
struct Quadratic {
  std::array<double, 3> c0{};
  std::array<Vec3, 3> lin;
  std::array<Mat3, 3> quad;  // symmetric
  Vec3 value(const Vec3& x) const {
    Vec3 v;
    for (int i = 0; i < 3; ++i) v(i) = c0[i] + lin[i].dot(x) + x.dot(quad[i] * x);
    return v;
  }
  Mat3 grad(const Vec3& x) const {  // (i, j) = ∂_j u_i
    Mat3 g;
    for (int i = 0; i < 3; ++i) g.row(i) = (lin[i] + 2.0 * quad[i] * x).transpose();
    return g;
  }
};

Quadratic random_quadratic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Quadratic q;
  for (int i = 0; i < 3; ++i) {
    q.c0[i] = u(rng);
    q.lin[i] = Vec3(u(rng), u(rng), u(rng));
    Mat3 m;
    for (int a = 0; a < 9; ++a) m(a) = u(rng);
    q.quad[i] = 0.5 * (m + m.transpose());
  }
  return q;
}

}  // namespace

TEST(Operators, CurlExamples) {
  const auto g = box_grid(9);
  const auto rot = sample_vector(g, [](const Vec3& x) { return Vec3(-x.y(), x.x(), 0); });
  const auto w = curl(rot);
  for (std::size_t n = 0; n < g->size(); ++n) ASSERT_LT((w.at(n) - Vec3(0, 0, 2)).norm(), 1e-12);
  const auto gp = sample_vector(g, [](const Vec3& x) { return Vec3(2 * x.x(), 0, 2 * x.z()); });
  const auto w2 = curl(gp);
  for (int c = 0; c < 3; ++c) EXPECT_LT(max_abs(w2.c[c]), 1e-12);
}

TEST(Operators, TaylorGreenCurlSecondOrder) {
  double prev = 0.0;
  for (int n : {16, 32, 64}) {
    const auto s = generate_taylor_green(periodic_box(n));
    const auto w = curl(s.u);
    double e = 0.0;
    for (std::size_t q = 0; q < s.grid->size(); ++q) {
      const Vec3 x = s.grid->position(q);
      e = std::max(e, (w.at(q) - Vec3(0, 0, 2 * std::sin(x.x()) * std::sin(x.y()))).norm());
    }
    if (prev > 0.0) EXPECT_NEAR(std::log2(prev / e), 2.0, 0.1);
    prev = e;
    EXPECT_LT(max_abs(divergence(s.u).v), 1e-12);  // exactly discrete-solenoidal on the periodic grid
  }
}

TEST(Operators, SymGradExamples) {
  const auto g = box_grid(7);
  const auto rot = sample_vector(g, [](const Vec3& x) { return Vec3(-x.y(), x.x(), 0); });
  const auto S = sym_grad(rot);
  for (int a = 0; a < 9; ++a) EXPECT_LT(max_abs(S.c[a]), 1e-12);
  const auto shear = sample_vector(g, [](const Vec3& x) { return Vec3(x.z(), 0, 0); });
  const auto T = sym_grad(shear);
  for (std::size_t n = 0; n < g->size(); ++n) {
    Mat3 want = Mat3::Zero();
    want(0, 2) = want(2, 0) = 0.5;
    ASSERT_LT((T.at(n) - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Operators, TraceOfSymGradIsDivergence) {
  std::mt19937_64 rng(1);
  const auto g = box_grid(17);
  const double k1 = 1.3, k2 = 0.7;
  const auto u = sample_vector(g, [&](const Vec3& x) {
    return Vec3(std::sin(k1 * x.x() + x.z()), std::cos(k2 * x.y()) * x.x(), std::exp(0.3 * x.z()) * x.y());
  });
  const auto S = sym_grad(u);
  const auto d = divergence(u);
  for (std::size_t n = 0; n < g->size(); ++n) ASSERT_NEAR(S.at(n).trace(), d.v[n], 1e-12);
}

TEST(Operators, DivergenceExamples) {
  const auto g = box_grid(6);
  const auto u = sample_vector(g, [](const Vec3& x) { return x; });
  for (double v : divergence(u).v) ASSERT_NEAR(v, 3.0, 1e-12);
}

TEST(Operators, ExactOnQuadratics) {
  std::mt19937_64 rng(2);
  const auto g = box_grid(8);
  for (int trial = 0; trial < 5; ++trial) {
    const auto q = random_quadratic(rng);
    const auto u = sample_vector(g, [&](const Vec3& x) { return q.value(x); });
    const auto G = velocity_gradient(u);
    const auto w = curl(u);
    const auto d = divergence(u);
    const auto S = sym_grad(u);
    ScalarField s0(g);
    s0.v = u.c[0];
    const auto grad0 = gradient(s0);
    for (std::size_t n = 0; n < g->size(); ++n) {
      const Vec3 x = g->position(n);
      const Mat3 J = q.grad(x);
      ASSERT_LT((G.at(n) - J).cwiseAbs().maxCoeff(), 1e-12);
      ASSERT_LT((grad0.at(n) - J.row(0).transpose()).norm(), 1e-12);
      const Vec3 wx(J(2, 1) - J(1, 2), J(0, 2) - J(2, 0), J(1, 0) - J(0, 1));
      ASSERT_LT((w.at(n) - wx).norm(), 1e-12);
      ASSERT_NEAR(d.v[n], J.trace(), 1e-12);
      ASSERT_LT((S.at(n) - 0.5 * (J + J.transpose())).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Operators, NullIdentitiesOnSmoothFields) {
  // per-axis difference operators commute, so both identities hold up to rounding
  for (int n : {17, 33}) {
    const auto g = box_grid(n);
    const auto phi = sample_scalar(g, [](const Vec3& x) { return std::sin(2 * x.x()) * std::cos(x.y() + x.z()); });
    const auto cg = curl(gradient(phi));
    const auto u = sample_vector(g, [](const Vec3& x) {
      return Vec3(std::sin(x.y() * x.z()), std::cos(1.5 * x.x()), x.x() * std::exp(-x.y()));
    });
    const auto dc = divergence(curl(u));
    for (int c = 0; c < 3; ++c) EXPECT_LT(max_abs(cg.c[c]), 1e-10);
    EXPECT_LT(max_abs(dc.v), 1e-10);
  }
}

TEST(Operators, TooSmallGridThrows) {
  const auto g = make_grid(Vec3::Zero(), 0.1, {5, 2, 5}, {false, false, false}, DomainSpec::half_space());
  EXPECT_THROW(curl(VectorField(g)), ParameterError);
  EXPECT_THROW(divergence(VectorField(g)), ParameterError);
}

TEST(GridTest, BoundaryFlagsLieOnSurface) {
  const double R = 1.0;
  const auto g = make_grid(Vec3(-1.2, -1.2, -1.2), 2.4 / 48, {49, 49, 49}, {false, false, false}, DomainSpec::ball(R));
  int boundary = 0;
  for (std::size_t n = 0; n < g->size(); ++n) {
    if (g->flag(n) != NodeFlag::boundary) continue;
    ++boundary;
    EXPECT_LE(std::abs(g->domain().depth(g->position(n))), g->h() / 100 + 1e-15);
  }
  EXPECT_GT(boundary, 0);
  EXPECT_THROW(make_grid(Vec3::Zero(), 0.0, {3, 3, 3}, {false, false, false}, DomainSpec::half_space()), ParameterError);
}

TEST(GridTest, InterpolatorExactOnAffine) {
  const auto g = box_grid(9);
  const auto u = sample_vector(g, [](const Vec3& x) { return Vec3(1 + 2 * x.x() - x.z(), x.y(), 3 * x.z()); });
  Interpolator I(*g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> r(0, 1);
  for (int k = 0; k < 100; ++k) {
    const Vec3 x = g->origin() + Vec3(r(rng), r(rng), r(rng));
    const Vec3 v = I(x, [&](std::size_t n) { return u.at(n); });
    EXPECT_LT((v - Vec3(1 + 2 * x.x() - x.z(), x.y(), 3 * x.z())).norm(), 1e-12);
  }
}

TEST(Generators, ShearFixture) {
  const double beta = 2.0, nu = 0.5, U0 = 1.5;
  const auto g = make_grid(Vec3(0, 0, 0), 0.1, {8, 8, 11}, {true, true, false}, DomainSpec::half_space());
  const auto s = generate_shear(beta, nu, U0, g);
  const auto w = vorticity(s);
  const auto d = divergence(s.u);
  ScalarField u1(g);
  u1.v = s.u.c[0];
  const auto du = gradient(u1);
  for (std::size_t n = 0; n < g->size(); ++n) {
    ASSERT_LT((w.at(n) - Vec3(0, U0, 0)).norm(), 1e-12);
    ASSERT_EQ(d.v[n], 0.0);
    if (g->ijk(n)[2] == 0) ASSERT_LT(std::abs(beta * s.u.c[0][n] - nu * du.at(n).z()), 1e-12);
  }
  EXPECT_THROW(generate_shear(0.0, 1.0, 1.0, g), ParameterError);
  const auto ball = make_grid(Vec3(-2, -2, -2), 0.5, {9, 9, 9}, {false, false, false}, DomainSpec::ball(1.0));
  EXPECT_THROW(generate_shear(1.0, 1.0, 1.0, ball), ParameterError);
}

TEST(Generators, TaylorGreenEnergy) {
  const auto g = periodic_box(32);
  const auto s = generate_taylor_green(g);
  double e = 0.0;
  for (std::size_t n = 0; n < g->size(); ++n) e += s.u.at(n).squaredNorm() * g->volume_weight(n);
  EXPECT_NEAR(e, oracle::taylor_green_energy_box, 1e-9);
  EXPECT_NEAR(taylor_green_energy(2 * pi), oracle::taylor_green_energy_box, 1e-12);
  const auto w = vorticity(s);
  for (std::size_t n = 0; n < g->size(); ++n) {
    ASSERT_EQ(w.c[0][n], 0.0);
    ASSERT_EQ(w.c[1][n], 0.0);
  }
}

TEST(Generators, MisalignedFixture) {
  const auto g = make_grid(Vec3::Zero(), 1.0 / 32, {8, 8, 33}, {true, true, false}, DomainSpec::half_space());
  const auto s0 = generate_misaligned(0.0, g);
  for (std::size_t n = 0; n < g->size(); ++n) ASSERT_EQ(s0.omega->at(n), Vec3(1, 0, 0));
  const auto s = generate_misaligned(1.0, g);
  ASSERT_TRUE(s.omega.has_value());
  const auto L = misaligned_layout(1.0, *g);
  EXPECT_NEAR(std::sin(L.phi) / std::sqrt(L.width), 1.0, 1e-12);
  for (std::size_t n = 0; n < g->size(); ++n) ASSERT_NEAR(s.omega->at(n).norm(), 1.0, 1e-14);
  EXPECT_LE(vorticity_consistency(s), s.metadata["vorticity_consistency_tolerance"].get<double>());
  // stored ω is the curl of u away from the two ramp ends
  const auto w = curl(s.u);
  for (std::size_t n = 0; n < g->size(); ++n) {
    const double z = g->position(n).z();
    if (std::abs(z - L.z_start) > 1.5 * g->h() && std::abs(z - L.z_start - L.width) > 1.5 * g->h() &&
        (z < L.z_start || z > L.z_start + L.width))
      ASSERT_LT((w.at(n) - s.omega->at(n)).norm(), 1e-10);
  }
  EXPECT_THROW(generate_misaligned(-1.0, g), ParameterError);
  EXPECT_THROW(generate_misaligned(100.0, g), ParameterError);
}

TEST(Generators, ChannelEigenvalueMatchesReference) {
  EXPECT_NEAR(channel_shear_eigenvalue(1.0, 1.0, 1.0), oracle::channel_lambda_b1_n1_h1, 1e-13);
  EXPECT_NEAR(channel_shear_eigenvalue(2.0, 0.5, 1.0), oracle::channel_lambda_b2_n05_h1, 1e-13);
  // large slip coefficient tends to the no-slip limit π/H
  EXPECT_NEAR(channel_shear_eigenvalue(1e8, 1.0, 1.0), pi, 1e-6);
}

TEST(Stepper, ShearModeDecayRate) {
  const double beta = 2.0, nu = 0.5;
  const auto g = make_channel_grid({4, 4, 33}, 1.0);
  const auto s0 = generate_channel_mode(beta, nu, g);
  const double lam = s0.metadata["lambda"];
  ChannelStepper st(g, nu, beta, StepperOptions{100000, 1e-10});
  const double T = 1.0 / (nu * lam * lam);
  const double dt0 = 0.5 * st.max_dt(s0.u);
  const int steps = int(std::ceil(T / dt0));
  const double dt = T / steps;
  const auto out = st.run(s0, dt, steps);
  ASSERT_EQ(out.size(), 2u);
  const std::size_t mid = g->index(0, 0, 16);
  const double rate = -std::log(out.back().u.c[0][mid] / out.front().u.c[0][mid]) / out.back().t;
  EXPECT_NEAR(rate / (nu * lam * lam), 1.0, 0.02);
  EXPECT_NEAR(out.back().t, T, 1e-12);
}

TEST(Stepper, ProjectionKinematicsAndMass) {
  const auto g = make_channel_grid({8, 8, 17}, 1.0);
  const auto s0 = generate_channel_mode(1.0, 0.1, g, 0.0, 0.2);
  ChannelStepper st(g, 0.1, 1.0);
  VectorField u = s0.u;
  auto flux = [&](const VectorField& v) {
    double f = 0.0;
    for (std::size_t n = 0; n < g->size(); ++n) f += v.c[0][n] * g->volume_weight(n);
    return f;
  };
  double prev = flux(u);
  const double dt = 0.5 * st.max_dt(u);
  for (int k = 0; k < 20; ++k) {
    st.step(u, dt);
    EXPECT_LE(st.last_divergence(), 1e-10);
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        ASSERT_EQ(u.c[2][g->index(i, j, 0)], 0.0);
        ASSERT_EQ(u.c[2][g->index(i, j, 16)], 0.0);
      }
    const double f = flux(u);
    EXPECT_LE(std::abs(f - prev), 1e-10);
    prev = f;
  }
}

TEST(Stepper, GuardsAndSaveCadence) {
  const auto g = make_channel_grid({4, 4, 9}, 1.0);
  const auto s0 = generate_channel_mode(1.0, 1.0, g);
  ChannelStepper st(g, 1.0, 1.0, StepperOptions{3, 1e-10});
  VectorField u = s0.u;
  EXPECT_THROW(st.step(u, 10 * st.max_dt(u)), StepSizeError);
  EXPECT_THROW(st.step(u, -1.0), StepSizeError);
  const auto out = st.run(s0, 0.5 * st.max_dt(s0.u), 7);
  ASSERT_EQ(out.size(), 4u);  // initial, 3, 6, 7
  EXPECT_EQ(out[2].metadata["step"], 6);
  EXPECT_EQ(out[3].metadata["step"], 7);
  EXPECT_THROW(ChannelStepper(box_grid(9), 1.0, 1.0), ParameterError);
  EXPECT_THROW(generate_channel_mode(1.0, 1.0, box_grid(9)), ParameterError);
}

TEST(SnapshotIO, RoundTripBitExact) {
  const auto g = make_grid(Vec3(0.1, -0.2, 0.0), 0.05, {5, 6, 7}, {true, false, false}, DomainSpec::ball(0.3));
  Snapshot s = generate_rigid_rotation(0.7, g, 0.3, 4.0);
  s.t = 1.25;
  s.omega = curl(s.u);
  s.u.c[1][3] = std::nextafter(1.0 / 3.0, 1.0);
  s.u.c[2][4] = -0.0;
  s.u.c[2][5] = 5e-324;
  const auto dir = std::filesystem::temp_directory_path() / "slipgreen_snapshot_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "a.nsf").string();
  write_snapshot(path, s);
  const auto r = read_snapshot(path);
  EXPECT_TRUE(r.grid->same_shape(*g));
  EXPECT_EQ(r.grid->domain().kind, DomainKind::ball);
  EXPECT_EQ(r.nu, 0.3);
  EXPECT_EQ(r.beta, 4.0);
  EXPECT_EQ(r.t, 1.25);
  ASSERT_TRUE(r.omega.has_value());
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(std::memcmp(r.u.c[c].data(), s.u.c[c].data(), s.u.c[c].size() * 8), 0);
    EXPECT_EQ(std::memcmp(r.omega->c[c].data(), s.omega->c[c].data(), s.u.c[c].size() * 8), 0);
  }
  EXPECT_EQ(encode_snapshot(r), encode_snapshot(s));
  // header layout: magic, little-endian length, JSON
  const std::string bytes = encode_snapshot(s);
  EXPECT_EQ(bytes.substr(0, 8), "NSFSNAP1");
  const auto h = nlohmann::json::parse(bytes.substr(16, detail::get_u64(reinterpret_cast<const unsigned char*>(bytes.data()) + 8)));
  EXPECT_EQ(h["dims"], nlohmann::json({5, 6, 7}));
  std::filesystem::remove_all(dir);
}

TEST(SnapshotIO, CorruptionIsReported) {
  const auto g = box_grid(4);
  const auto s = generate_rigid_rotation(1.0, g);
  std::string bytes = encode_snapshot(s);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_snapshot(bad), FormatError);
  EXPECT_THROW(decode_snapshot(bytes.substr(0, bytes.size() - 8)), FormatError);
  EXPECT_THROW(decode_snapshot(bytes.substr(0, 10)), FormatError);
  std::string ver = bytes;
  const auto pos = ver.find("\"format_version\":1");
  ASSERT_NE(pos, std::string::npos);
  ver[pos + 17] = '2';
  EXPECT_THROW(decode_snapshot(ver), UnsupportedVersionError);
  EXPECT_THROW(read_snapshot("/nonexistent/dir/x.nsf"), Error);
}

TEST(SnapshotIO, StoredVorticitySource) {
  const auto g = box_grid(5);
  Snapshot s = generate_rigid_rotation(1.0, g);
  EXPECT_THROW(vorticity(s, VorticitySource::stored), ConfigurationError);
  EXPECT_EQ(vorticity_consistency(s), 0.0);
  s.omega = curl(s.u);
  EXPECT_LT(vorticity_consistency(s), 1e-12);
}
