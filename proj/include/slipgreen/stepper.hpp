// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Small Navier-slip channel solver: Heun (RK2) advection-diffusion with a
// pressure projection after each stage. Lateral directions are periodic and
// handled by FFT; the wall-normal direction uses the same finite differences
// as the diagnostic operators so that the projected field is discretely
// solenoidal under `divergence`.
#pragma once

#include <complex>
#include <map>
#include <vector>

#include <fftw3.h>

#include "slipgreen/snapshot.hpp"

namespace slipgreen {

/// Batched 2D real FFT over the two lateral axes of an x-fastest array.
class LateralFFT {
 public:
  LateralFFT(int n0, int n1, int n2) : n0_(n0), n1_(n1), n2_(n2) {
    real_.assign(std::size_t(n0) * n1 * n2, 0.0);
    spec_.assign(spectral_size(), {0.0, 0.0});
    int n[2] = {n1, n0};
    auto* s = reinterpret_cast<fftw_complex*>(spec_.data());
    // FFTW_ESTIMATE keeps the plan, and hence the rounding, independent of timing
    fwd_ = fftw_plan_many_dft_r2c(2, n, n2, real_.data(), nullptr, 1, n0 * n1, s, nullptr, 1, n1 * (n0 / 2 + 1),
                                  FFTW_ESTIMATE);
    bwd_ = fftw_plan_many_dft_c2r(2, n, n2, s, nullptr, 1, n1 * (n0 / 2 + 1), real_.data(), nullptr, 1, n0 * n1,
                                  FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw SolverError("FFTW planning failed");
  }
  ~LateralFFT() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  LateralFFT(const LateralFFT&) = delete;
  LateralFFT& operator=(const LateralFFT&) = delete;

  std::size_t spectral_size() const { return std::size_t(n0_ / 2 + 1) * n1_ * n2_; }
  int half() const { return n0_ / 2 + 1; }
  /// spectral index for lateral mode (m, j) at level k
  std::size_t sindex(int m, int j, int k) const { return std::size_t(m) + std::size_t(half()) * (j + std::size_t(n1_) * k); }

  void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
    real_ = in;
    fftw_execute(fwd_);
    out = spec_;
  }
  /// Inverse transform including the 1/(n0 n1) normalisation.
  void backward(const std::vector<std::complex<double>>& in, std::vector<double>& out) {
    spec_ = in;
    fftw_execute(bwd_);
    const double scale = 1.0 / (double(n0_) * n1_);
    out.resize(real_.size());
    for (std::size_t i = 0; i < real_.size(); ++i) out[i] = real_[i] * scale;
  }

 private:
  int n0_, n1_, n2_;
  std::vector<double> real_;
  std::vector<std::complex<double>> spec_;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

struct StepperOptions {
  int save_every = 1;
  double divergence_tolerance = 1e-10;
};

class ChannelStepper {
 public:
  ChannelStepper(GridPtr grid, double nu, double beta, StepperOptions opts = {})
      : grid_(std::move(grid)), nu_(nu), beta_(beta), opts_(opts),
        fft_(grid_->dim(0), grid_->dim(1), grid_->dim(2)) {
    const Grid& g = *grid_;
    if (g.domain().kind != DomainKind::channel) throw ParameterError("stepper needs a channel grid");
    if (!g.periodic(0) || !g.periodic(1) || g.periodic(2)) throw ParameterError("stepper needs periodic x, y and walls in z");
    if (g.dim(0) < 3 || g.dim(1) < 3 || g.dim(2) < 5) throw ParameterError("stepper grid too small");
    if (std::abs(g.origin().z()) > 1e-12 || std::abs(g.length(2) - g.domain().height) > 1e-9 * g.domain().height)
      throw ParameterError("stepper grid must span the channel 0 <= z <= height");
    if (!(nu > 0.0) || !(beta > 0.0)) throw ParameterError("stepper needs nu > 0 and beta > 0");
    build_vertical_operators();
  }

  double nu() const { return nu_; }
  double beta() const { return beta_; }

  /// Largest admissible step, 0.5·min(h/|u|∞, h²/(6ν)).
  double max_dt(const VectorField& u) const {
    double umax = 0.0;
    for (const auto& c : u.c)
      for (double v : c) umax = std::max(umax, std::abs(v));
    const double h = grid_->h();
    const double adv = umax > 0.0 ? h / umax : std::numeric_limits<double>::infinity();
    return 0.5 * std::min(adv, h * h / (6.0 * nu_));
  }

  /// −(u·∇)u + νΔu with Navier ghosts u₋₁ = u₁ − 2h(β/ν)u₀ (and mirrored at the top).
  VectorField rhs(const VectorField& u) const {
    const Grid& g = *grid_;
    const int n0 = g.dim(0), n1 = g.dim(1), n2 = g.dim(2), N = n2 - 1;
    const double h = g.h(), ih2 = 1.0 / (h * h), i2h = 0.5 / h, slip = 2.0 * h * beta_ / nu_;
    VectorField out(grid_);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n2; ++k)
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n0; ++i) {
          const std::size_t n = g.index(i, j, k);
          const std::size_t xp = g.index((i + 1) % n0, j, k), xm = g.index((i + n0 - 1) % n0, j, k);
          const std::size_t yp = g.index(i, (j + 1) % n1, k), ym = g.index(i, (j + n1 - 1) % n1, k);
          const bool wall = k == 0 || k == N;
          const double u1 = u.c[0][n], u2 = u.c[1][n], u3 = u.c[2][n];
          for (int c = 0; c < 3; ++c) {
            const auto& f = u.c[c];
            if (c == 2 && wall) {
              out.c[2][n] = 0.0;
              continue;
            }
            double lap = (f[xp] + f[xm] + f[yp] + f[ym] - 4.0 * f[n]) * ih2;
            double adv = u1 * (f[xp] - f[xm]) * i2h + u2 * (f[yp] - f[ym]) * i2h;
            if (k == 0) {
              const double inner = f[g.index(i, j, 1)];
              lap += (2.0 * inner - 2.0 * f[n] - slip * f[n]) * ih2;
            } else if (k == N) {
              const double inner = f[g.index(i, j, N - 1)];
              lap += (2.0 * inner - 2.0 * f[n] - slip * f[n]) * ih2;
            } else {
              const double up = f[g.index(i, j, k + 1)], dn = f[g.index(i, j, k - 1)];
              lap += (up - 2.0 * f[n] + dn) * ih2;
              adv += u3 * (up - dn) * i2h;
            }
            out.c[c][n] = -adv + nu_ * lap;
          }
        }
    return out;
  }

  /// Discrete Leray projection: u ← u − Gφ with D G φ = D u, G_z = 0 on the walls.
  void project(VectorField& u) {
    const Grid& g = *grid_;
    const int n0 = g.dim(0), n1 = g.dim(1), n2 = g.dim(2);
    const double h = g.h();
    const ScalarField d = divergence(u);
    std::vector<std::complex<double>> dh, u3h, phih(fft_.spectral_size());
    fft_.forward(d.v, dh);
    fft_.forward(u.c[2], u3h);
    bool zeroed = false;
    for (int j = 0; j < n1; ++j)
      for (int m = 0; m < fft_.half(); ++m) {
        const double sx = std::sin(2.0 * pi * m / n0) / h, sy = std::sin(2.0 * pi * j / n1) / h;
        const double k2 = sx * sx + sy * sy;
        if (k2 < 1e-20 / (h * h)) {
          // no lateral gradient: u³ of this mode must vanish to be solenoidal with u³ = 0 on the walls
          for (int k = 0; k < n2; ++k) u3h[fft_.sindex(m, j, k)] = 0.0;
          zeroed = true;
          continue;
        }
        const auto& lu = operator_for(k2);
        Eigen::VectorXd re(n2), im(n2);
        for (int k = 0; k < n2; ++k) {
          re(k) = dh[fft_.sindex(m, j, k)].real();
          im(k) = dh[fft_.sindex(m, j, k)].imag();
        }
        const Eigen::VectorXd pr = lu.solve(re), pi_ = lu.solve(im);
        for (int k = 0; k < n2; ++k) phih[fft_.sindex(m, j, k)] = {pr(k), pi_(k)};
      }
    std::vector<double> phi;
    fft_.backward(phih, phi);
    if (zeroed) fft_.backward(u3h, u.c[2]);
    // subtract Gφ
    const double i2h = 0.5 / h;
    VectorField corr(grid_);
    for (int k = 0; k < n2; ++k)
      for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n0; ++i) {
          const std::size_t n = g.index(i, j, k);
          corr.c[0][n] = (phi[g.index((i + 1) % n0, j, k)] - phi[g.index((i + n0 - 1) % n0, j, k)]) * i2h;
          corr.c[1][n] = (phi[g.index(i, (j + 1) % n1, k)] - phi[g.index(i, (j + n1 - 1) % n1, k)]) * i2h;
          corr.c[2][n] = (k == 0 || k == n2 - 1) ? 0.0 : (phi[g.index(i, j, k + 1)] - phi[g.index(i, j, k - 1)]) * i2h;
        }
    for (int c = 0; c < 3; ++c)
      for (std::size_t n = 0; n < u.size(); ++n) u.c[c][n] -= corr.c[c][n];
    for (int j = 0; j < n1; ++j)
      for (int i = 0; i < n0; ++i) {
        u.c[2][g.index(i, j, 0)] = 0.0;
        u.c[2][g.index(i, j, n2 - 1)] = 0.0;
      }
    last_divergence_ = 0.0;
    for (double v : divergence(u).v) last_divergence_ = std::max(last_divergence_, std::abs(v));
    if (!(last_divergence_ <= opts_.divergence_tolerance))
      throw SolverError("projection left divergence " + std::to_string(last_divergence_));
  }

  double last_divergence() const { return last_divergence_; }

  /// One Heun step with projection after each stage.
  void step(VectorField& u, double dt) {
    if (!(dt > 0.0)) throw StepSizeError("time step must be positive");
    const double lim = max_dt(u);
    if (dt > lim) throw StepSizeError("time step " + std::to_string(dt) + " exceeds CFL limit " + std::to_string(lim));
    const VectorField f0 = rhs(u);
    VectorField us = u;
    for (int c = 0; c < 3; ++c)
      for (std::size_t n = 0; n < u.size(); ++n) us.c[c][n] += dt * f0.c[c][n];
    project(us);
    const VectorField f1 = rhs(us);
    for (int c = 0; c < 3; ++c)
      for (std::size_t n = 0; n < u.size(); ++n) u.c[c][n] = 0.5 * (u.c[c][n] + us.c[c][n] + dt * f1.c[c][n]);
    project(u);
    require_finite(u, "channel step");
  }

  /// The initial snapshot followed by every `save_every`-th state.
  std::vector<Snapshot> run(const Snapshot& s0, double dt, int n_steps) {
    if (!s0.grid->same_shape(*grid_)) throw ParameterError("snapshot grid does not match the stepper grid");
    if (n_steps < 0) throw ParameterError("number of steps must be >= 0");
    if (opts_.save_every < 1) throw ParameterError("save_every must be >= 1");
    std::vector<Snapshot> out;
    Snapshot s = s0;
    s.grid = grid_;
    s.u.grid = grid_;
    s.omega.reset();
    s.nu = nu_;
    s.beta = beta_;
    project(s.u);
    s.metadata["divergence_after_projection"] = last_divergence_;
    out.push_back(s);
    for (int n = 1; n <= n_steps; ++n) {
      step(s.u, dt);
      s.t += dt;
      if (n % opts_.save_every == 0 || n == n_steps) {
        s.metadata["step"] = n;
        s.metadata["dt"] = dt;
        s.metadata["divergence_after_projection"] = last_divergence_;
        out.push_back(s);
      }
    }
    return out;
  }

 private:
  void build_vertical_operators() {
    const int n2 = grid_->dim(2), N = n2 - 1;
    const double i2h = 0.5 / grid_->h();
    Gz_ = Eigen::MatrixXd::Zero(n2, n2);
    for (int k = 1; k < N; ++k) {
      Gz_(k, k + 1) = i2h;
      Gz_(k, k - 1) = -i2h;
    }
    Dz_ = Eigen::MatrixXd::Zero(n2, n2);
    Dz_(0, 0) = -3.0 * i2h;
    Dz_(0, 1) = 4.0 * i2h;
    Dz_(0, 2) = -i2h;
    for (int k = 1; k < N; ++k) {
      Dz_(k, k + 1) = i2h;
      Dz_(k, k - 1) = -i2h;
    }
    Dz_(N, N) = 3.0 * i2h;
    Dz_(N, N - 1) = -4.0 * i2h;
    Dz_(N, N - 2) = i2h;
    DG_ = Dz_ * Gz_;
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd>& operator_for(double k2) {
    auto it = lu_.find(k2);
    if (it != lu_.end()) return it->second;
    const int n2 = grid_->dim(2);
    const Eigen::MatrixXd A = DG_ - k2 * Eigen::MatrixXd::Identity(n2, n2);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    if (!(lu.rcond() > 1e-14))
      throw SolverError("projection operator is singular for a lateral mode");
    return lu_.emplace(k2, std::move(lu)).first->second;
  }

  GridPtr grid_;
  double nu_, beta_;
  StepperOptions opts_;
  LateralFFT fft_;
  Eigen::MatrixXd Gz_, Dz_, DG_;
  std::map<double, Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
  double last_divergence_ = 0.0;
};

inline std::vector<Snapshot> step_channel(const Snapshot& s, double dt, int n_steps, StepperOptions opts = {}) {
  ChannelStepper st(s.grid, s.nu, s.beta, opts);
  return st.run(s, dt, n_steps);
}

}  // namespace slipgreen
