// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Explicit half-space Green's matrix for diagonal constant-coefficient oblique
// boundary conditions. Γ is kept unnormalised (1/|x−y|) and the 1/4π sits in
// the matrix.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "slipgreen/errors.hpp"
#include "slipgreen/geometry.hpp"
#include "slipgreen/linalg.hpp"
#include "slipgreen/quadrature.hpp"

namespace slipgreen {

struct ThetaQuadrature {
  double tolerance = 1e-10;  // absolute, on Θ
  std::size_t max_panels = 400;

  void validate() const {
    if (!(tolerance > 0.0)) throw ParameterError("theta quadrature tolerance must be positive");
    if (max_panels < 1) throw ParameterError("theta quadrature needs at least one panel");
  }
};

struct ThetaResult {
  double value = 0.0;
  double error = 0.0;       // quadrature estimate plus tail bound
  double truncation = 0.0;  // S
  std::size_t evaluations = 0;
  bool converged = true;
};

namespace detail {

// Bound on ∫_S^∞ of the Θ integrand, with α = −a r⋆ ≥ 0, c = ⟨b,ξ⟩ and m = 1 − c².
inline double theta_tail_bound(double alpha, double m, double S) {
  double bound = std::numeric_limits<double>::infinity();
  if (S > 1.0) {
    const double q = S - 1.0;
    bound = 1.0 / q + 1.0 / (q * q);
    if (alpha > 0.0) bound = std::min(bound, std::exp(-alpha * S) * (1.0 + S) / (q * q * q) / alpha);
  }
  if (alpha > 0.0 && m > 0.0)
    bound = std::min(bound, std::exp(-alpha * S) * ((1.0 + S) / alpha + 1.0 / (alpha * alpha)) / std::pow(m, 1.5));
  return bound;
}

inline double theta_truncation(double alpha, double m, double budget) {
  double lo = -12.0, hi = 17.0;  // log10 S
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (theta_tail_bound(alpha, m, std::pow(10.0, mid)) <= budget) hi = mid;
    else lo = mid;
  }
  return std::pow(10.0, hi);
}

struct ThetaSetup {
  double alpha, c, S, t_max, sigma;
};

inline ThetaSetup theta_setup(double a, const Vec3& b, const Vec3& xi, double rstar, double budget) {
  if (!(a <= 0.0)) throw ParameterError("theta requires a <= 0");
  if (std::abs(b.norm() - 1.0) > 1e-12 || !(b.z() > 0.0))
    throw ParameterError("theta requires a unit direction b with b3 > 0");
  if (!(rstar > 0.0)) throw SingularityError("theta requires |x - y*| > 0");
  const double c = b.dot(xi);
  if (c <= -1.0 + 1e-14) throw DegenerateDirectionError("<b, xi> = -1: theta integrand is singular at s = 1");
  const double alpha = -a * rstar;
  const double m = std::max(0.0, 1.0 - c * c);
  const double S = theta_truncation(alpha, m, budget);
  // s = σ(eᵗ − 1): the algebraic tail and the exponential cutoff are both O(1) wide in t
  const double sigma = 1.0 / (1.0 + alpha);
  return {alpha, c, S, std::log1p(S / sigma), sigma};
}

}  // namespace detail

/// Θ(x, y⋆) by adaptive Gauss-Kronrod in t, s = σ(eᵗ − 1), over s ∈ [0, S].
/// The tail beyond S gets a tenth of the tolerance, the panels the rest.
inline ThetaResult theta_xi(double a, const Vec3& b, const Vec3& xi, double rstar, const ThetaQuadrature& q = {}) {
  q.validate();
  const auto st = detail::theta_setup(a, b, xi, rstar, 0.1 * q.tolerance);
  const double xi3 = xi.z(), b3 = b.z(), c2 = 2.0 * st.c;
  auto f = [&](double t) {
    const double s = st.sigma * std::expm1(t);
    const double D = 1.0 + s * (c2 + s);
    return std::exp(-st.alpha * s) * (xi3 + b3 * s) / (D * std::sqrt(D)) * st.sigma * std::exp(t);
  };
  auto r = quad::integrate(f, 0.0, st.t_max, 0.9 * q.tolerance, q.max_panels);
  return {r.value, r.error + detail::theta_tail_bound(st.alpha, 1.0 - st.c * st.c, st.S), st.S, r.evaluations,
          r.converged};
}

inline ThetaResult theta(double a, const Vec3& b, const Vec3& x, const Vec3& ystar, const ThetaQuadrature& q = {}) {
  const Vec3 w = x - ystar;
  const double rs = w.norm();
  if (!(rs > 0.0)) throw SingularityError("theta requires x != y*");
  return theta_xi(a, b, w / rs, rs, q);
}

/// Θ for b = e₃ on a bicubic table in (ln α, c), c = ξ₃ ∈ [0, 1]. For b = e₃
/// Θ depends on those two numbers only. Outside α ∈ [α_lo, α_hi] call quadrature.
class ThetaTable {
 public:
  static constexpr double alpha_lo = 1e-3, alpha_hi = 1e4;

  explicit ThetaTable(double tolerance = 1e-11, int n_tau = 1200, int n_c = 65) : nt_(n_tau), nc_(n_c) {
    if (n_tau < 8 || n_c < 8) throw ParameterError("theta table needs at least 8 nodes per axis");
    t0_ = std::log(alpha_lo);
    dt_ = (std::log(alpha_hi) - t0_) / (nt_ - 1);
    dc_ = 1.0 / (nc_ - 1);
    ThetaQuadrature q;
    q.tolerance = tolerance;
    q.max_panels = 2000;
    // one node of padding on each side so every cell has a full 4×4 stencil
    v_.resize(std::size_t(nt_ + 2) * (nc_ + 2));
    for (int i = -1; i <= nt_; ++i)
      for (int j = -1; j <= nc_; ++j) {
        const double alpha = std::exp(t0_ + i * dt_);
        const double c = j * dc_;
        // Θ only sees ξ through ξ₃ = ⟨b, ξ⟩ = c here, so (0, 0, c) also serves the padding node c > 1
        const double val = theta_xi(-alpha, Vec3::UnitZ(), Vec3(0.0, 0.0, c), 1.0, q).value;
        v_[slot(i, j)] = val;
      }
  }

  bool covers(double alpha) const { return alpha >= alpha_lo && alpha <= alpha_hi; }

  double operator()(double alpha, double c) const {
    if (!covers(alpha) || c < 0.0 || c > 1.0) throw ParameterError("theta table queried out of range");
    const double x = (std::log(alpha) - t0_) / dt_, y = c / dc_;
    const int i = std::clamp(int(std::floor(x)), 0, nt_ - 2), j = std::clamp(int(std::floor(y)), 0, nc_ - 2);
    double wx[4], wy[4];
    cubic_weights(x - i, wx);
    cubic_weights(y - j, wy);
    double out = 0.0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) out += wx[a] * wy[b] * v_[slot(i - 1 + a, j - 1 + b)];
    return out;
  }

  /// Shared table at the default resolution.
  static const ThetaTable& shared() {
    static const ThetaTable t;
    return t;
  }

 private:
  std::size_t slot(int i, int j) const { return std::size_t(i + 1) * (nc_ + 2) + std::size_t(j + 1); }

  // Lagrange weights on nodes −1, 0, 1, 2 at offset t ∈ [0, 1].
  static void cubic_weights(double t, double w[4]) {
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  }

  int nt_, nc_;
  double t0_, dt_, dc_;
  std::vector<double> v_;
};

/// K(w) = Θ/|w| with w = x − y⋆, together with ∇_w K (differentiated under the integral).
struct ThetaKernel {
  double k = 0.0;
  Vec3 grad = Vec3::Zero();
  std::size_t evaluations = 0;
};

inline ThetaKernel theta_kernel_with_gradient(double a, const Vec3& b, const Vec3& w, const ThetaQuadrature& q = {}) {
  q.validate();
  const double rs = w.norm();
  if (!(rs > 0.0)) throw SingularityError("theta requires x != y*");
  const Vec3 xi = w / rs;
  const auto st = detail::theta_setup(a, b, xi, rs, 0.1 * q.tolerance);
  using V4 = Eigen::Matrix<double, 4, 1>;
  auto f = [&](double t) -> V4 {
    const double s = st.sigma * std::expm1(t);
    const double D = 1.0 + s * (2.0 * st.c + s);
    const double D32 = D * std::sqrt(D);
    const double num = xi.z() + b.z() * s;
    const double scale = std::exp(-st.alpha * s) * st.sigma * std::exp(t);
    const Vec3 v = xi + b * s;
    V4 out;
    out(0) = num / D32;
    out.tail<3>() = -3.0 * num / (D32 * D) * v;
    out(3) += 1.0 / D32;
    return out * scale;
  };
  auto r = quad::integrate(f, 0.0, st.t_max, 0.9 * q.tolerance, q.max_panels);
  ThetaKernel out;
  out.k = r.value(0) / rs;
  out.grad = r.value.tail<3>() / (rs * rs);
  out.evaluations = r.evaluations;
  return out;
}

// ---------------------------------------------------------------------------
// Green's matrix
// ---------------------------------------------------------------------------

enum class KernelVariant { paper_exact, oracle_calibrated, dirichlet };

inline std::string to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::paper_exact: return "paper-exact";
    case KernelVariant::oracle_calibrated: return "oracle-calibrated";
    case KernelVariant::dirichlet: return "dirichlet";
  }
  return "unknown";
}

inline KernelVariant kernel_variant_from_string(const std::string& s) {
  if (s == "paper-exact" || s == "paper_exact") return KernelVariant::paper_exact;
  if (s == "oracle-calibrated" || s == "oracle_calibrated" || s == "calibrated") return KernelVariant::oracle_calibrated;
  if (s == "dirichlet") return KernelVariant::dirichlet;
  throw ParameterError("unknown kernel variant '" + s + "'");
}

struct KernelOptions {
  KernelVariant variant = KernelVariant::paper_exact;
  double calibration = 1.0;  // λ multiplying the printed Θ coefficient (oracle-calibrated only)
  ThetaQuadrature quadrature;
  bool tabulated = false;  // b = e₃ components read Θ from ThetaTable::shared()

  nlohmann::json to_json() const {
    nlohmann::json j{{"variant", to_string(variant)}, {"theta_tolerance", quadrature.tolerance}, {"theta_tabulated", tabulated}};
    if (variant == KernelVariant::oracle_calibrated) j["calibration_factor"] = calibration;
    return j;
  }
};

/// Coefficient c with g = (1/4π)[Γ − Γ⋆ + c·Θ/r⋆]; the printed form has c = −2b₃/3.
inline double theta_coefficient(const ComponentBC& comp, const KernelOptions& opts) {
  if (comp.mode == BCMode::dirichlet || opts.variant == KernelVariant::dirichlet) return 0.0;
  const double lambda = opts.variant == KernelVariant::oracle_calibrated ? opts.calibration : 1.0;
  return -2.0 * comp.b.z() / 3.0 * lambda;
}

inline double gamma(const Vec3& x, const Vec3& y) {
  const double r = (x - y).norm();
  if (!(r > 0.0)) throw SingularityError("gamma: x == y");
  return 1.0 / r;
}

namespace detail {

inline void check_half_space_pair(const Vec3& x, const Vec3& y) {
  if (x.z() < -1e-12 || y.z() < -1e-12) throw ParameterError("green: points must lie in the closed upper half-space");
  if (!((x - y).norm() > 0.0)) throw SingularityError("green: x == y");
}

// Components sharing (mode, a, b) share one Θ evaluation.
inline int first_equal_component(const ObliqueBC& bc, int i) {
  for (int j = 0; j < i; ++j) {
    const auto &p = bc.component[j], &q = bc.component[i];
    if (p.mode == q.mode && p.a == q.a && p.b == q.b) return j;
  }
  return i;
}

inline double theta_value(const ComponentBC& comp, const Vec3& x, const Vec3& ys, const KernelOptions& opts) {
  if (opts.tabulated && comp.b == Vec3::UnitZ()) {
    const Vec3 w = x - ys;
    const double rs = w.norm();
    const double alpha = -comp.a * rs;
    const auto& t = ThetaTable::shared();
    if (rs > 0.0 && t.covers(alpha)) return t(alpha, std::clamp(w.z() / rs, 0.0, 1.0));
  }
  return theta(comp.a, comp.b, x, ys, opts.quadrature).value;
}

}  // namespace detail

/// Diagonal Green's matrix value at (x, y).
inline Mat3 green(const ObliqueBC& bc, const Vec3& x, const Vec3& y, const KernelOptions& opts = {}) {
  detail::check_half_space_pair(x, y);
  const Vec3 ys = reflect(y);
  const double images = 1.0 / (x - y).norm() - 1.0 / (x - ys).norm();
  std::array<double, 3> k{};
  Mat3 g = Mat3::Zero();
  for (int i = 0; i < 3; ++i) {
    const double c = theta_coefficient(bc.component[i], opts);
    const int j = detail::first_equal_component(bc, i);
    if (c != 0.0) {
      if (j == i) {
        const auto& comp = bc.component[i];
        k[i] = detail::theta_value(comp, x, ys, opts) / (x - ys).norm();
      } else {
        k[i] = k[j];
      }
    }
    g(i, i) = (images + c * k[i]) / (4.0 * pi);
  }
  return g;
}

inline Mat3 green(const ObliqueBC& bc, const Vec3& x, const Vec3& y, bool include_theta) {
  KernelOptions o;
  if (!include_theta) o.variant = KernelVariant::dirichlet;
  return green(bc, x, y, o);
}

enum class GradientWrt { x, y };

/// Gradients of the three diagonal entries with respect to x or y.
inline std::array<Vec3, 3> grad_green(const ObliqueBC& bc, const Vec3& x, const Vec3& y, GradientWrt wrt,
                                      const KernelOptions& opts = {}) {
  detail::check_half_space_pair(x, y);
  const Vec3 ys = reflect(y);
  const Vec3 d = x - y, w = x - ys;
  const double r = d.norm(), rs = w.norm();
  const Mat3 R = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
  // ∇ of (1/r − 1/r⋆)
  const Vec3 img = wrt == GradientWrt::x ? Vec3(-d / (r * r * r) + w / (rs * rs * rs))
                                         : Vec3(d / (r * r * r) - R * w / (rs * rs * rs));
  std::array<Vec3, 3> out{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  std::array<Vec3, 3> kgrad{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  for (int i = 0; i < 3; ++i) {
    const double c = theta_coefficient(bc.component[i], opts);
    const int j = detail::first_equal_component(bc, i);
    if (c != 0.0) {
      if (j == i) {
        const auto& comp = bc.component[i];
        Vec3 gw;
        try {
          gw = theta_kernel_with_gradient(comp.a, comp.b, w, opts.quadrature).grad;
        } catch (const DegenerateDirectionError&) {
          // central differences of K in w as a fallback
          const double step = 1e-6 * rs;
          for (int e = 0; e < 3; ++e) {
            Vec3 wp = w, wm = w;
            wp(e) += step;
            wm(e) -= step;
            gw(e) = (theta(comp.a, comp.b, wp, Vec3::Zero(), opts.quadrature).value / wp.norm() -
                     theta(comp.a, comp.b, wm, Vec3::Zero(), opts.quadrature).value / wm.norm()) /
                    (2.0 * step);
          }
        }
        kgrad[i] = wrt == GradientWrt::x ? gw : Vec3(-(R * gw));
      } else {
        kgrad[i] = kgrad[j];
      }
    }
    out[i] = (img + c * kgrad[i]) / (4.0 * pi);
  }
  return out;
}

/// (g·ζ(r/d₄), g·(1−ζ(r/d₄))), arranged so that near + far == g exactly.
inline std::pair<double, double> near_far_split(double g, double r, const CutoffProfile& zeta, double d4) {
  if (!(r > 0.0)) throw ParameterError("near_far_split requires r > 0");
  if (!(d4 > 0.0)) throw ParameterError("near_far_split requires d4 > 0");
  const double z = zeta(r / d4);
  if (z == 1.0) return {g, 0.0};
  if (z == 0.0) return {0.0, g};
  // Sterbenz: the larger share is computed by multiplication, the smaller by an exact subtraction.
  if (z >= 0.5) {
    const double near = g * z;
    return {near, g - near};
  }
  const double far = g * (1.0 - z);
  return {g - far, far};
}

struct GreenEval {
  Mat3 value = Mat3::Zero();
  std::array<Vec3, 3> grad_x{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  Mat3 near = Mat3::Zero();
  Mat3 far = Mat3::Zero();
};

inline GreenEval green_eval(const ObliqueBC& bc, const Vec3& x, const Vec3& y, double d4,
                            const KernelOptions& opts = {}, const CutoffProfile& zeta = {}) {
  GreenEval e;
  e.value = green(bc, x, y, opts);
  e.grad_x = grad_green(bc, x, y, GradientWrt::x, opts);
  const double r = (x - y).norm();
  for (int i = 0; i < 3; ++i) {
    auto [n, f] = near_far_split(e.value(i, i), r, zeta, d4);
    e.near(i, i) = n;
    e.far(i, i) = f;
  }
  return e;
}

// ---------------------------------------------------------------------------
// Self-verification
// ---------------------------------------------------------------------------

struct KernelReport {
  KernelOptions options;
  double step = 0.0;
  std::size_t samples = 0;
  std::array<double, 3> laplacian_max{};      // max |Δ_x g_i| by 7-point differences
  std::size_t laplacian_skipped = 0;           // stencil would leave the half-space
  std::array<double, 3> bc_residual_max{};     // max |a g_i + b·∇g_i| (regular components) or |g_i| (dirichlet)
  std::array<double, 3> decay_exponent{};      // median slope of log|g_i| against log r
  std::array<double, 3> fitted_calibration{};  // least-squares λ cancelling the boundary residual, NaN if none

  nlohmann::json to_json() const {
    auto arr = [](const std::array<double, 3>& a) {
      nlohmann::json j = nlohmann::json::array();
      for (double v : a) j.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
      return j;
    };
    return {{"kernel", options.to_json()},
            {"fd_step", step},
            {"samples", samples},
            {"laplacian_residual_max", arr(laplacian_max)},
            {"laplacian_skipped", laplacian_skipped},
            {"bc_residual_max", arr(bc_residual_max)},
            {"decay_exponent", arr(decay_exponent)},
            {"fitted_calibration_factor", arr(fitted_calibration)}};
  }
};

/// Residual report for the kernel. Boundary residuals are evaluated at the
/// projection (x¹, x², 0) of each sample's first point.
inline KernelReport verify_kernel(const ObliqueBC& bc, const std::vector<std::pair<Vec3, Vec3>>& sample, double h,
                                  const KernelOptions& opts = {}) {
  bc.validate();
  if (!(h > 0.0)) throw ConfigurationError("finite-difference step must be positive");
  for (const auto& [x, y] : sample)
    if ((x - y).norm() < 10.0 * h) throw ConfigurationError("finite-difference step too large for the pair separation");

  KernelReport rep;
  rep.options = opts;
  rep.step = h;
  rep.samples = sample.size();
  std::array<std::vector<double>, 3> slopes;
  std::array<double, 3> num{}, den{};
  KernelOptions exact = opts;
  exact.variant = KernelVariant::oracle_calibrated;
  exact.calibration = 1.0;  // printed coefficient, used as the λ basis
  KernelOptions images = opts;
  images.variant = KernelVariant::dirichlet;

  for (const auto& [x, y] : sample) {
    if (x.z() >= 2.0 * h) {
      Mat3 lap = -6.0 * green(bc, x, y, opts);
      for (int e = 0; e < 3; ++e) {
        Vec3 xp = x, xm = x;
        xp(e) += h;
        xm(e) -= h;
        lap += green(bc, xp, y, opts) + green(bc, xm, y, opts);
      }
      for (int i = 0; i < 3; ++i) rep.laplacian_max[i] = std::max(rep.laplacian_max[i], std::abs(lap(i, i)) / (h * h));
    } else {
      ++rep.laplacian_skipped;
    }

    const Vec3 xb{x.x(), x.y(), 0.0};
    if ((xb - y).norm() > 0.0) {
      const Mat3 g = green(bc, xb, y, opts);
      const auto dg = grad_green(bc, xb, y, GradientWrt::x, opts);
      const Mat3 g0 = green(bc, xb, y, images);
      const auto dg0 = grad_green(bc, xb, y, GradientWrt::x, images);
      const Mat3 g1 = green(bc, xb, y, exact);
      const auto dg1 = grad_green(bc, xb, y, GradientWrt::x, exact);
      for (int i = 0; i < 3; ++i) {
        const auto& c = bc.component[i];
        double res;
        if (c.mode == BCMode::dirichlet) {
          res = g(i, i);
        } else {
          res = c.a * g(i, i) + c.b.dot(dg[i]);
          const double r0 = c.a * g0(i, i) + c.b.dot(dg0[i]);
          const double r1 = c.a * (g1(i, i) - g0(i, i)) + c.b.dot(dg1[i] - dg0[i]);
          num[i] += r0 * r1;
          den[i] += r1 * r1;
        }
        rep.bc_residual_max[i] = std::max(rep.bc_residual_max[i], std::abs(res));
      }
    }

    if (slopes[0].size() < 8) {
      const Vec3 dir{x.x() - y.x(), x.y() - y.y(), std::abs(x.z() - y.z())};  // stays in the half-space
      const Vec3 x1 = y + 16.0 * dir, x2 = y + 64.0 * dir;
      const Mat3 ga = green(bc, x1, y, opts), gb = green(bc, x2, y, opts);
      for (int i = 0; i < 3; ++i)
        if (ga(i, i) != 0.0 && gb(i, i) != 0.0)
          slopes[i].push_back(std::log(std::abs(gb(i, i) / ga(i, i))) / std::log(4.0));
    }
  }
  for (int i = 0; i < 3; ++i) {
    auto& s = slopes[i];
    if (s.empty()) {
      rep.decay_exponent[i] = std::numeric_limits<double>::quiet_NaN();
    } else {
      std::sort(s.begin(), s.end());
      rep.decay_exponent[i] = s[s.size() / 2];
    }
    rep.fitted_calibration[i] = den[i] > 0.0 ? -num[i] / den[i] : std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

/// Random pairs in [−1,1]²×[z_lo, 1] with separation at least `min_sep`.
inline std::vector<std::pair<Vec3, Vec3>> random_pairs(std::size_t n, unsigned long seed, double min_sep,
                                                       double z_lo = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(-1.0, 1.0), vert(z_lo, 1.0);
  std::vector<std::pair<Vec3, Vec3>> out;
  out.reserve(n);
  while (out.size() < n) {
    const Vec3 x{lat(rng), lat(rng), vert(rng)};
    const Vec3 y{lat(rng), lat(rng), vert(rng)};
    if ((x - y).norm() >= min_sep) out.emplace_back(x, y);
  }
  return out;
}

}  // namespace slipgreen
