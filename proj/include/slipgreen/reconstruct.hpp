// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Velocity from vorticity by the chart-localised representation
//   u = J₁ + J₂ (+ J₃, not computable; reported as a residual),
// direct summation over grid nodes with a singular-cell correction, and the
// three-term split of J₂ obtained by integrating the curl by parts.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "slipgreen/geometry.hpp"
#include "slipgreen/grid.hpp"
#include "slipgreen/kernels.hpp"
#include "slipgreen/operators.hpp"

namespace slipgreen {

// ---------------------------------------------------------------------------
// Singular cell
// ---------------------------------------------------------------------------

/// `lattice`: only the target node is dropped and the punctured lattice sum of
/// 1/r is completed with the cubic-lattice constant, C h² f(x).
/// `ball`: nodes inside r₀ are dropped and the closed-form ∫_B dy/|x−y| = 2πr₀²
/// times f(x) is added instead. That freezes f on the ball and does not match
/// the lattice sum just outside it; its O(h²) error constant is much larger.
enum class SingularCorrection { lattice, ball };

inline std::string to_string(SingularCorrection c) { return c == SingularCorrection::lattice ? "lattice" : "ball"; }

inline SingularCorrection singular_correction_from_string(const std::string& s) {
  if (s == "lattice") return SingularCorrection::lattice;
  if (s == "ball") return SingularCorrection::ball;
  throw ParameterError("unknown singular correction '" + s + "'");
}

struct SingularOptions {
  double exclusion_cells = 2.0;  // r₀ = exclusion_cells·h, ball form only
  SingularCorrection correction = SingularCorrection::lattice;

  // nodes closer than this to the target are left out of the direct sum
  double exclusion_radius(double h) const {
    return correction == SingularCorrection::lattice ? 0.5 * h : exclusion_cells * h;
  }

  void validate() const {
    if (!(exclusion_cells >= 1.0)) throw ParameterError("singular exclusion radius must be at least one cell");
  }
  nlohmann::json to_json() const {
    return {{"exclusion_cells", exclusion_cells}, {"correction", to_string(correction)}};
  }
};

/// h³ Σ_{n≠0} f(nh)/|nh| = ∫ f(y)/|y| dy − C h² f(0) + O(h⁴) on the cubic lattice.
inline constexpr double lattice_self_constant = 2.8372974794806;

namespace detail {

// Weight of f(x) standing in for the left-out part of ∫ f(y)/|x−y| dy.
inline double singular_weight(const Grid& g, std::size_t t, const SingularOptions& so) {
  const double h = g.h();
  const double d = g.domain().depth(g.position(t));
  const bool wall = std::abs(d) <= 1e-9 * h;
  // at the wall the half-weighted layer already plays the part of the missing half space
  if (so.correction == SingularCorrection::lattice) return lattice_self_constant * h * h * (wall ? 0.5 : 1.0);
  const double r0 = so.exclusion_cells * h;
  const double cap = (!wall && d < r0) ? pi * (r0 - d) * (r0 - d) : 0.0;
  return 2.0 * pi * r0 * r0 - (wall ? pi * r0 * r0 : cap);
}

// Diagonal kernel on straightened points with per-component Θ sharing.
class PairKernel {
 public:
  PairKernel(const ObliqueBC& bc, const KernelOptions& opts) : bc_(bc), opts_(opts) {
    bc.validate();
    for (int i = 0; i < 3; ++i) {
      coef_[i] = theta_coefficient(bc.component[i], opts);
      share_[i] = detail::first_equal_component(bc, i);
    }
  }

  /// 4π·G_ii(X, Y) without the direct 1/|X−Y| term (added by the caller).
  std::array<double, 3> regular_part(const Vec3& X, const Vec3& Y, bool with_image) const {
    const Vec3 ys = reflect(Y);
    const double rs = (X - ys).norm();
    std::array<double, 3> out{};
    if (!(rs > 0.0)) return out;
    const double img = with_image ? 1.0 / rs : 0.0;
    std::array<double, 3> k{};
    for (int i = 0; i < 3; ++i) {
      if (coef_[i] != 0.0) k[i] = share_[i] == i ? detail::theta_value(bc_.component[i], X, ys, opts_) / rs : k[share_[i]];
      out[i] = -img + coef_[i] * k[i];
    }
    return out;
  }

  /// 4π·∇_Y G_ii(X, Y), direct term included (the caller excludes r = 0).
  std::array<Vec3, 3> gradient_y(const Vec3& X, const Vec3& Y) const {
    return scaled(grad_green(bc_, X, Y, GradientWrt::y, opts_));
  }

  const KernelOptions& options() const { return opts_; }

 private:
  static std::array<Vec3, 3> scaled(std::array<Vec3, 3> g) {
    for (auto& v : g) v *= 4.0 * pi;
    return g;
  }
  const ObliqueBC& bc_;
  KernelOptions opts_;
  std::array<double, 3> coef_{};
  std::array<int, 3> share_{};
};

inline bool nonzero(const Vec3& v) { return v.x() != 0.0 || v.y() != 0.0 || v.z() != 0.0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Direct half-space convolution
// ---------------------------------------------------------------------------

struct ConvolutionOptions {
  SingularOptions singular;
  int lateral_images = 0;  // copies of the source shifted by whole periods in x and y
};

/// u_i(x) = ∫ G_ii(x, y) f_i(y) dy over a half-space grid, at the listed nodes.
inline std::vector<Vec3> green_convolution(const VectorField& f, const ObliqueBC& bc,
                                           const std::vector<std::size_t>& targets, const KernelOptions& kopts = {},
                                           const ConvolutionOptions& copts = {}) {
  const Grid& g = *f.grid;
  if (g.domain().kind != DomainKind::half_space) throw ConfigurationError("green_convolution needs a half-space grid");
  if (g.origin().z() < -1e-12) throw ConfigurationError("half-space grid must start at z = 0");
  copts.singular.validate();
  if (copts.lateral_images < 0) throw ParameterError("lateral_images must be >= 0");
  if (copts.lateral_images > 0 && !(g.periodic(0) && g.periodic(1)))
    throw ConfigurationError("lateral images need a laterally periodic grid");
  const detail::PairKernel kernel(bc, kopts);
  const double r0 = copts.singular.exclusion_radius(g.h());
  const double Lx = g.length(0), Ly = g.length(1);
  const int M = copts.lateral_images;

  struct Source {
    Vec3 y, q;
  };
  std::vector<Source> src;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec3 q = f.at(n) * g.volume_weight(n);
    if (detail::nonzero(q)) src.push_back({g.position(n), q});
  }

  std::vector<Vec3> out(targets.size(), Vec3::Zero());
  const std::ptrdiff_t nt = std::ptrdiff_t(targets.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t t = 0; t < nt; ++t) {
    const std::size_t node = targets[std::size_t(t)];
    const Vec3 x = g.position(node);
    const bool wall = x.z() <= 1e-9 * g.h();
    Vec3 acc = Vec3::Zero();
    for (const auto& s : src)
      for (int p = -M; p <= M; ++p)
        for (int q = -M; q <= M; ++q) {
          const Vec3 y = s.y + Vec3(p * Lx, q * Ly, 0.0);
          const bool home = p == 0 && q == 0;
          const double r = (x - y).norm();
          // on the wall Γ and Γ⋆ coincide and cancel
          const auto reg = kernel.regular_part(x, y, !wall);
          const double direct = (wall || (home && r < r0)) ? 0.0 : 1.0 / r;
          for (int i = 0; i < 3; ++i) acc(i) += (direct + reg[i]) * s.q(i);
        }
    if (!wall) acc += f.at(node) * detail::singular_weight(g, node, copts.singular);
    out[std::size_t(t)] = acc / (4.0 * pi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reconstruction plan
// ---------------------------------------------------------------------------

struct ReconstructionPlan {
  Atlas atlas;
  ObliqueBC bc;
  KernelOptions kernel;
  SingularOptions singular;
  CutoffProfile zeta;
  std::vector<std::size_t> targets;  // grid nodes; empty means every domain node
  int min_cells_across_d4 = 8;

  nlohmann::json to_json() const {
    return {{"kernel", kernel.to_json()},
            {"bc", slipgreen::to_json(bc)},
            {"singular", singular.to_json()},
            {"cutoff_profile", zeta.kind == CutoffProfile::Kind::smooth ? "smooth" : "quintic"},
            {"d3", atlas.d3()},
            {"d4", atlas.d4()},
            {"charts", atlas.charts().size()},
            {"interior_cubes", atlas.cubes().size()},
            {"targets", targets.size()}};
  }
};

namespace detail {

inline std::vector<std::size_t> plan_targets(const ReconstructionPlan& plan, const Grid& g) {
  if (!plan.targets.empty()) {
    for (auto t : plan.targets)
      if (t >= g.size()) throw ConfigurationError("target index outside the grid");
    return plan.targets;
  }
  std::vector<std::size_t> all;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.in_domain(n)) all.push_back(n);
  return all;
}

inline void check_plan(const ReconstructionPlan& plan, const Grid& g) {
  plan.singular.validate();
  plan.bc.validate();
  if (plan.atlas.size() == 0) throw ConfigurationError("reconstruction plan has an empty atlas");
  if (plan.atlas.domain().kind != g.domain().kind) throw ConfigurationError("atlas and grid describe different domains");
  const double d4 = plan.atlas.d4();
  if (d4 < plan.min_cells_across_d4 * g.h())
    throw ConfigurationError("grid under-resolves d4: " + std::to_string(d4 / g.h()) + " cells across, need " +
                             std::to_string(plan.min_cells_across_d4));
}

// Straightening without the extent check (targets near a chart edge still
// need T_b x when a source of that chart is within the cutoff radius).
inline Vec3 straighten_any(const BoundaryChart& c, const Vec3& x) {
  Vec3 z = c.rotated(x);
  z.z() -= c.height.value(z.x(), z.y());
  return z;
}

struct ChartShare {
  int chart;
  double chi;
  Vec3 Y;  // T_b y
  Vec3 q;  // source vector in the chart frame, times the node weight
};

struct SourceNode {
  std::size_t node;
  Vec3 y;
  double chi_interior;
  Vec3 q;  // physical frame, times the node weight
  std::vector<ChartShare> charts;
};

inline std::vector<SourceNode> source_nodes(const VectorField& f, const Atlas& atlas) {
  const Grid& g = *f.grid;
  const std::size_t ncubes = atlas.cubes().size();
  std::vector<SourceNode> out;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.in_domain(n)) continue;
    const Vec3 fq = f.at(n);
    if (!nonzero(fq)) continue;
    const Vec3 y = g.position(n);
    const auto chi = atlas.partition(y);
    SourceNode s{n, y, 0.0, fq * g.volume_weight(n), {}};
    for (std::size_t c = 0; c < chi.size(); ++c) {
      if (chi[c] == 0.0) continue;
      if (c < ncubes) {
        s.chi_interior += chi[c];
      } else {
        const auto& ch = atlas.charts()[c - ncubes];
        s.charts.push_back({int(c - ncubes), chi[c], straighten(ch, y), ch.rotation * s.q});
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

struct ReconstructionResult {
  VectorField u;   // J₁ + J₂ at the targets, zero elsewhere
  VectorField j1;  // interior-chart part
  VectorField j2;  // boundary-chart part
  nlohmann::json report;
};

namespace detail {

inline std::pair<double, double> residual_norms(const std::vector<double>& e, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0, mx = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    num += e[k] * e[k];
    den += ref[k] * ref[k];
    mx = std::max(mx, std::abs(e[k]));
  }
  return {mx, den > 0.0 ? std::sqrt(num / den) : std::sqrt(num)};
}

}  // namespace detail

/// J₁ + J₂ of ω at the plan targets. The curl of ω is taken by finite
/// differences before summation. With a reference velocity, J₃ is reported
/// as u_ref − (J₁ + J₂), split into the boundary collar (depth < d₄) and the rest.
inline ReconstructionResult assemble_velocity(const VectorField& omega, const ReconstructionPlan& plan,
                                              const VectorField* u_ref = nullptr) {
  const Grid& g = *omega.grid;
  detail::check_plan(plan, g);
  const auto targets = detail::plan_targets(plan, g);
  for (auto t : targets) (void)plan.atlas.partition(g.position(t));  // coverage, throws if uncovered

  const VectorField q = curl(omega);
  const auto src = detail::source_nodes(q, plan.atlas);
  const detail::PairKernel kernel(plan.bc, plan.kernel);
  const auto& charts = plan.atlas.charts();
  const double d3 = plan.atlas.d3();
  const double r0 = plan.singular.exclusion_radius(g.h());
  const std::size_t ncubes = plan.atlas.cubes().size();

  ReconstructionResult res{VectorField(omega.grid), VectorField(omega.grid), VectorField(omega.grid), {}};
  const std::ptrdiff_t nt = std::ptrdiff_t(targets.size());
#pragma omp parallel for schedule(dynamic, 2)
  for (std::ptrdiff_t ti = 0; ti < nt; ++ti) {
    const std::size_t node = targets[std::size_t(ti)];
    const Vec3 x = g.position(node);
    std::vector<Vec3> X(charts.size());
    for (std::size_t c = 0; c < charts.size(); ++c) X[c] = detail::straighten_any(charts[c], x);
    Vec3 j1 = Vec3::Zero(), j2 = Vec3::Zero();
    for (const auto& s : src) {
      const double r = (x - s.y).norm();
      const bool near = r < r0;
      if (s.chi_interior > 0.0 && !near) {
        const double z = plan.zeta(r / d3);
        if (z > 0.0) j1 += s.chi_interior * z / r * s.q;
      }
      for (const auto& cs : s.charts) {
        const auto& ch = charts[std::size_t(cs.chart)];
        const Vec3& Xc = X[std::size_t(cs.chart)];
        const double R = (Xc - cs.Y).norm();
        const double z = plan.zeta(R / ch.d3);
        if (z == 0.0) continue;
        const bool wall = Xc.z() <= 1e-9 * g.h();
        const auto reg = kernel.regular_part(Xc, cs.Y, !(wall && near));
        const double direct = near ? 0.0 : 1.0 / R;
        Vec3 v;
        for (int i = 0; i < 3; ++i) v(i) = (direct + reg[i]) * cs.q(i);
        j2 += cs.chi * z * (ch.rotation.transpose() * v);
      }
    }
    // singular cell: Σ_c χ_c(x) = 1, so the correction splits by χ
    const bool wall = std::abs(g.domain().depth(x)) <= 1e-9 * g.h();
    if (!wall) {
      const auto chi = plan.atlas.partition(x);
      double chi_i = 0.0;
      for (std::size_t c = 0; c < ncubes; ++c) chi_i += chi[c];
      const Vec3 corr = q.at(node) * detail::singular_weight(g, node, plan.singular);
      j1 += chi_i * corr;
      j2 += (1.0 - chi_i) * corr;
    }
    j1 /= 4.0 * pi;
    j2 /= 4.0 * pi;
    res.j1.set(node, j1);
    res.j2.set(node, j2);
    res.u.set(node, j1 + j2);
  }
  require_finite(res.u, "assemble_velocity");

  nlohmann::json rep = plan.to_json();
  rep["targets"] = targets.size();
  rep["sources"] = src.size();
  if (plan.kernel.variant == KernelVariant::oracle_calibrated) rep["calibration_factor"] = plan.kernel.calibration;
  if (u_ref) {
    if (!u_ref->grid->same_shape(g)) throw ConfigurationError("reference velocity lives on a different grid");
    std::vector<double> e_int, r_int, e_col, r_col;
    const double d4 = plan.atlas.d4();
    for (auto t : targets) {
      const Vec3 e = u_ref->at(t) - res.u.at(t);
      const bool collar = g.domain().depth(g.position(t)) < d4;
      for (int i = 0; i < 3; ++i) {
        (collar ? e_col : e_int).push_back(e(i));
        (collar ? r_col : r_int).push_back(u_ref->at(t)(i));
      }
    }
    auto [mi, ri] = detail::residual_norms(e_int, r_int);
    auto [mc, rc] = detail::residual_norms(e_col, r_col);
    rep["residual"] = {{"interior", {{"points", e_int.size() / 3}, {"max_abs", mi}, {"relative_l2", ri}}},
                       {"collar", {{"points", e_col.size() / 3}, {"max_abs", mc}, {"relative_l2", rc}}},
                       {"collar_width", d4}};
  }
  res.report = std::move(rep);
  return res;
}

// ---------------------------------------------------------------------------
// J₂ split
// ---------------------------------------------------------------------------

struct J2Split {
  Vec3 direct = Vec3::Zero();  // ∫ χ ζ G (∇×ω)
  Vec3 j21 = Vec3::Zero();     // ∫ ω · (χ ζ ∇_y G × e)
  Vec3 j22 = Vec3::Zero();     // ∫ ω · (G ∇(χ ζ) × e)
  Vec3 j23 = Vec3::Zero();     // −∫_Σ χ ζ G e·(ω × n)
  std::size_t surface_points = 0;

  Vec3 sum() const { return j21 + j22 + j23; }
  nlohmann::json to_json() const {
    auto v = [](const Vec3& a) { return nlohmann::json{a.x(), a.y(), a.z()}; };
    return {{"direct", v(direct)}, {"j21", v(j21)}, {"j22", v(j22)},          {"j23", v(j23)},
            {"sum", v(sum())},     {"split_error", (sum() - direct).norm()}, {"surface_points", surface_points}};
  }
};

struct J2Options {
  double surface_spacing = 0.0;  // surface mesh step in chart coordinates; 0 means the grid spacing
};

/// The three parts of one boundary chart's contribution at target x, all with
/// the ζ(|T x − T y|/d₄) cutoff, in the physical frame. ω on Σ comes from
/// trilinear interpolation of the nodal field (one-sided at the wall layer).
inline J2Split j2_decompose(const VectorField& omega, const ReconstructionPlan& plan, std::size_t chart_index,
                            std::size_t target, const J2Options& jo = {}) {
  const Grid& g = *omega.grid;
  detail::check_plan(plan, g);
  if (chart_index >= plan.atlas.charts().size()) throw ConfigurationError("chart index out of range");
  if (target >= g.size()) throw ConfigurationError("target index outside the grid");
  const auto& ch = plan.atlas.charts()[chart_index];
  const std::size_t c_all = plan.atlas.cubes().size() + chart_index;
  const Vec3 x = g.position(target);
  const Vec3 X = detail::straighten_any(ch, x);
  if (!(X.z() > 0.0)) throw ConfigurationError("j2_decompose needs an interior target");
  const double d4 = ch.d4, h = g.h(), r0 = plan.singular.exclusion_radius(h);
  const detail::PairKernel kernel(plan.bc, plan.kernel);
  const Mat3& O = ch.rotation;
  const VectorField q = curl(omega);

  J2Split out;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!g.in_domain(n)) continue;
    const Vec3 y = g.position(n);
    if (!ch.contains(y)) continue;
    const Vec3 Y = straighten(ch, y);
    const double R = (X - Y).norm();
    if (R >= 0.75 * d4) continue;
    const auto [chi, dchi] = plan.atlas.partition_element(c_all, y);
    if (chi == 0.0 && dchi.squaredNorm() == 0.0) continue;
    const double w = g.volume_weight(n);
    const double zeta = plan.zeta(R / d4);
    const Mat3 J = jacobian(ch, y);
    const bool near = (x - y).norm() < r0;
    const Vec3 wq = O * q.at(n);
    const Vec3 om = omega.at(n);
    // G values in the chart frame (4π-scaled); the direct term is left out inside r₀
    const auto reg = kernel.regular_part(X, Y, true);
    std::array<double, 3> G;
    for (int i = 0; i < 3; ++i) G[i] = (near ? 0.0 : 1.0 / R) + reg[i];
    // ∇_y(χζ) = ζ∇χ + χ ζ'(R/d₄)/d₄ · Jᵀ(Y − X)/R
    Vec3 dcz = zeta * dchi;
    if (R > 0.0) dcz += chi * plan.zeta.derivative(R / d4) / d4 * (J.transpose() * (Y - X)) / R;
    // the odd direct gradient cancels over the singular ball; the self node is dropped
    std::array<Vec3, 3> dG{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};  // Eigen default ctor does not zero
    if (R > 0.0) {
      const auto gy = kernel.gradient_y(X, Y);
      const Vec3 direct = near ? Vec3((X - Y) / (R * R * R)) : Vec3::Zero();
      for (int i = 0; i < 3; ++i) dG[i] = J.transpose() * (gy[i] - direct);
    }
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = O.row(i).transpose();
      out.direct += e * (w * chi * zeta * G[i] * wq(i));
      out.j21 += e * (w * chi * zeta * om.dot(dG[i].cross(e)));
      out.j22 += e * (w * G[i] * om.dot(dcz.cross(e)));
    }
  }
  // singular cell (direct and J₂₂; J₂₁'s kernel is odd there)
  {
    const auto [chi, dchi] = plan.atlas.partition_element(c_all, x);
    const double S = detail::singular_weight(g, target, plan.singular);
    const Vec3 wq = O * q.at(target);
    const Vec3 om = omega.at(target);
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = O.row(i).transpose();
      out.direct += e * (chi * S * wq(i));
      out.j22 += e * (S * om.dot(dchi.cross(e)));
    }
  }
  // surface part on the chart parameter square, dS = √(1 + |∇F|²) dz¹dz²
  const double hs = jo.surface_spacing > 0.0 ? jo.surface_spacing : h;
  const int m = int(std::ceil(0.75 * d4 / hs));
  const Interpolator interp(g);
  for (int b = -m; b <= m; ++b)
    for (int a = -m; a <= m; ++a) {
      const double z1 = X.x() + a * hs, z2 = X.y() + b * hs;
      const Vec3 Y{z1, z2, 0.0};
      const double R = (X - Y).norm();
      if (R >= 0.75 * d4) continue;
      if (std::abs(z1) >= ch.d2 || std::abs(z2) >= ch.d2) continue;
      const Vec3 p = unstraighten(ch, Y);
      if (!g.domain().contains(p, 1e-9)) continue;
      const double chi = plan.atlas.partition_element(c_all, p).first;
      if (chi == 0.0) continue;
      const Eigen::Vector2d gF = ch.height.gradient(z1, z2);
      const double dS = std::sqrt(1.0 + gF.squaredNorm()) * hs * hs;
      const Vec3 om = interp(p, [&](std::size_t k) { return omega.at(k); });
      const Vec3 n = g.domain().outward_normal(p);
      const Vec3 oxn = om.cross(n);
      const auto reg = kernel.regular_part(X, Y, true);
      const double zeta = plan.zeta(R / d4);
      for (int i = 0; i < 3; ++i) {
        const Vec3 e = O.row(i).transpose();
        out.j23 -= e * (chi * zeta * (1.0 / R + reg[i]) * e.dot(oxn) * dS);
      }
      ++out.surface_points;
    }
  const double s = 1.0 / (4.0 * pi);
  out.direct *= s;
  out.j21 *= s;
  out.j22 *= s;
  out.j23 *= s;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence study
// ---------------------------------------------------------------------------

struct ConvergenceLevel {
  VectorField omega;
  ReconstructionPlan plan;
  VectorField u_ref;
};

struct ConvergenceRow {
  double h = 0.0;
  double max_error = 0.0;
  double rms_error = 0.0;
  double order = 0.0;  // log(e_{k−1}/e_k)/log(h_{k−1}/h_k), 0 on the first row
};

/// Reconstruction error at the plan targets outside the d₄ collar, per level.
inline std::vector<ConvergenceRow> convergence_study(const std::vector<ConvergenceLevel>& levels) {
  std::vector<ConvergenceRow> rows;
  for (const auto& L : levels) {
    const auto r = assemble_velocity(L.omega, L.plan, &L.u_ref);
    const Grid& g = *L.omega.grid;
    ConvergenceRow row;
    row.h = g.h();
    double sq = 0.0;
    std::size_t cnt = 0;
    for (auto t : detail::plan_targets(L.plan, g)) {
      if (g.domain().depth(g.position(t)) < L.plan.atlas.d4()) continue;
      const double e = (L.u_ref.at(t) - r.u.at(t)).norm();
      row.max_error = std::max(row.max_error, e);
      sq += e * e;
      ++cnt;
    }
    row.rms_error = cnt ? std::sqrt(sq / cnt) : 0.0;
    if (!rows.empty() && rows.back().max_error > 0.0 && row.max_error > 0.0)
      row.order = std::log(rows.back().max_error / row.max_error) / std::log(rows.back().h / row.h);
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json to_json(const std::vector<ConvergenceRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows)
    j.push_back({{"h", r.h}, {"max_error", r.max_error}, {"rms_error", r.rms_error}, {"order", r.order}});
  return j;
}

}  // namespace slipgreen
