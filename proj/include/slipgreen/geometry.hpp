// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Domains with constant principal curvatures, their boundary-straightening
// charts, the cutoff profile and partition of unity used to localise kernel
// representations, and the reduction of Navier-slip + impermeability to a
// constant-coefficient diagonal oblique-derivative condition.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "slipgreen/errors.hpp"
#include "slipgreen/linalg.hpp"

namespace slipgreen {

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// Fluid domains. Ball is centred at the origin; the cylinder axis is the x³
/// axis; the half-space is {x³ > 0}; the channel is {0 < x³ < height}.
enum class DomainKind { half_space, ball, cylinder, channel };

inline std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::half_space: return "half-space";
    case DomainKind::ball: return "ball";
    case DomainKind::cylinder: return "cylinder";
    case DomainKind::channel: return "channel";
  }
  return "unknown";
}

inline DomainKind domain_kind_from_string(const std::string& s) {
  if (s == "half-space" || s == "half_space") return DomainKind::half_space;
  if (s == "ball") return DomainKind::ball;
  if (s == "cylinder" || s == "cylinder-duct") return DomainKind::cylinder;
  if (s == "channel") return DomainKind::channel;
  throw ParameterError("unknown domain kind '" + s + "'");
}

struct DomainSpec {
  DomainKind kind = DomainKind::half_space;
  double radius = 0.0;  // ball, cylinder
  double height = 0.0;  // channel

  static DomainSpec half_space() { return {}; }
  static DomainSpec ball(double r) { return checked({DomainKind::ball, r, 0.0}); }
  static DomainSpec cylinder(double r) { return checked({DomainKind::cylinder, r, 0.0}); }
  static DomainSpec channel(double h) { return checked({DomainKind::channel, 0.0, h}); }

  static DomainSpec checked(DomainSpec d) {
    d.validate();
    return d;
  }

  void validate() const {
    if ((kind == DomainKind::ball || kind == DomainKind::cylinder) && !(radius > 0.0))
      throw ParameterError(to_string(kind) + " radius must be positive");
    if (kind == DomainKind::channel && !(height > 0.0))
      throw ParameterError("channel height must be positive");
  }

  /// Signed distance to the boundary, positive inside the fluid.
  double depth(const Vec3& x) const {
    switch (kind) {
      case DomainKind::half_space: return x.z();
      case DomainKind::channel: return std::min(x.z(), height - x.z());
      case DomainKind::ball: return radius - x.norm();
      case DomainKind::cylinder: return radius - std::hypot(x.x(), x.y());
    }
    return 0.0;
  }

  bool contains(const Vec3& x, double tol = 0.0) const { return depth(x) >= -tol; }

  /// Outward unit normal at the boundary point nearest to x.
  Vec3 outward_normal(const Vec3& x) const {
    switch (kind) {
      case DomainKind::half_space: return {0.0, 0.0, -1.0};
      case DomainKind::channel:
        return x.z() < 0.5 * height ? Vec3{0.0, 0.0, -1.0} : Vec3{0.0, 0.0, 1.0};
      case DomainKind::ball: return x.normalized();
      case DomainKind::cylinder: return Vec3{x.x(), x.y(), 0.0}.normalized();
    }
    return Vec3::Zero();
  }
};

inline nlohmann::json to_json(const DomainSpec& d) {
  nlohmann::json j{{"kind", to_string(d.kind)}};
  if (d.kind == DomainKind::ball || d.kind == DomainKind::cylinder) j["radius"] = d.radius;
  if (d.kind == DomainKind::channel) j["height"] = d.height;
  return j;
}

inline DomainSpec domain_from_json(const nlohmann::json& j) {
  DomainSpec d;
  d.kind = domain_kind_from_string(j.at("kind").get<std::string>());
  d.radius = j.value("radius", 0.0);
  d.height = j.value("height", 0.0);
  d.validate();
  return d;
}

/// Principal curvatures with the convention κ ≥ 0 for boundaries that are
/// convex toward the fluid. For the cylinder κ₁ is the circumferential one.
inline std::pair<double, double> principal_curvatures(const DomainSpec& d) {
  d.validate();
  switch (d.kind) {
    case DomainKind::half_space:
    case DomainKind::channel: return {0.0, 0.0};
    case DomainKind::ball: return {1.0 / d.radius, 1.0 / d.radius};
    case DomainKind::cylinder: return {1.0 / d.radius, 0.0};
  }
  return {0.0, 0.0};
}

/// Second fundamental form data at a boundary point, stored in the principal frame.
struct SurfaceGeometry {
  Eigen::Matrix2d second_form = Eigen::Matrix2d::Zero();
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double mean_curvature = 0.0;  // κ₁ + κ₂
  Vec3 normal = Vec3::Zero();   // outward
  Vec3 tangent1 = Vec3::Zero();  // principal direction for κ₁
  Vec3 tangent2 = Vec3::Zero();

  double second_form_norm() const { return std::max(std::abs(kappa1), std::abs(kappa2)); }
  /// II(u, v) for ambient vectors, using the tangential projections.
  double second_form_apply(const Vec3& u, const Vec3& v) const {
    return kappa1 * u.dot(tangent1) * v.dot(tangent1) + kappa2 * u.dot(tangent2) * v.dot(tangent2);
  }
};

inline SurfaceGeometry surface_geometry(const DomainSpec& d, const Vec3& x) {
  SurfaceGeometry g;
  auto [k1, k2] = principal_curvatures(d);
  g.kappa1 = k1;
  g.kappa2 = k2;
  g.mean_curvature = k1 + k2;
  g.second_form << k1, 0.0, 0.0, k2;
  g.normal = d.outward_normal(x);
  switch (d.kind) {
    case DomainKind::half_space:
    case DomainKind::channel:
      g.tangent1 = Vec3::UnitX();
      g.tangent2 = Vec3::UnitY();
      break;
    case DomainKind::cylinder:
      g.tangent1 = Vec3{-g.normal.y(), g.normal.x(), 0.0};
      g.tangent2 = Vec3::UnitZ();
      break;
    case DomainKind::ball: {
      const Vec3 trial = std::abs(g.normal.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
      g.tangent1 = trial.cross(g.normal).normalized();
      g.tangent2 = g.normal.cross(g.tangent1);
      break;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Oblique boundary conditions
// ---------------------------------------------------------------------------

enum class BCMode { regular_oblique, dirichlet };

/// One scalar condition a·u + b·∇u = 0 (regular oblique) or u = 0 (dirichlet).
/// Coordinates are straightened chart coordinates with the fluid in {z³ > 0}.
struct ComponentBC {
  BCMode mode = BCMode::dirichlet;
  double a = 0.0;
  Vec3 b = Vec3::Zero();
};

struct ObliqueBC {
  std::array<ComponentBC, 3> component{};

  static ObliqueBC dirichlet() { return {}; }

  static ObliqueBC uniform(double a, const Vec3& b) {
    ObliqueBC bc;
    for (auto& c : bc.component) c = {BCMode::regular_oblique, a, b};
    bc.validate();
    return bc;
  }

  void validate() const {
    for (int i = 0; i < 3; ++i) {
      const auto& c = component[i];
      if (c.mode != BCMode::regular_oblique) continue;
      if (!(c.a <= 0.0))
        throw ParameterError("oblique coefficient a must be <= 0 (component " + std::to_string(i + 1) + ")");
      if (std::abs(c.b.norm() - 1.0) > 1e-12)
        throw ParameterError("oblique direction b must be a unit vector (component " + std::to_string(i + 1) + ")");
    }
  }
};

inline nlohmann::json to_json(const ObliqueBC& bc) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : bc.component) {
    if (c.mode == BCMode::dirichlet)
      arr.push_back({{"mode", "dirichlet"}});
    else
      arr.push_back({{"mode", "regular-oblique"}, {"a", c.a}, {"b", {c.b.x(), c.b.y(), c.b.z()}}});
  }
  return arr;
}

/// Navier slip + u·n = 0 in a principal frame with the straightened fluid side
/// at z³ > 0: the tangential components become a u + ∂₃u = 0 with
/// a = −(β + νκᵢ)/ν and b = (0,0,+1); the normal component is Dirichlet.
inline ObliqueBC navier_to_oblique(double beta, double nu, double kappa1, double kappa2) {
  if (!(beta > 0.0)) throw ParameterError("slip coefficient beta must be positive");
  if (!(nu > 0.0)) throw ParameterError("viscosity nu must be positive");
  ObliqueBC bc;
  const double kappa[2] = {kappa1, kappa2};
  for (int i = 0; i < 2; ++i)
    bc.component[i] = {BCMode::regular_oblique, -(beta + nu * kappa[i]) / nu, Vec3::UnitZ()};
  bc.component[2] = {BCMode::dirichlet, 0.0, Vec3::Zero()};
  bc.validate();
  return bc;
}

struct RegularityCheck {
  bool regular = true;
  bool neumann_degenerate = false;  // some component has a = 0 with b ∥ n
};

inline RegularityCheck is_regular(const ObliqueBC& bc, const Vec3& n) {
  RegularityCheck out;
  for (const auto& c : bc.component) {
    if (c.mode != BCMode::regular_oblique) continue;
    if (std::abs(c.b.dot(n)) <= 1e-12) out.regular = false;
    if (c.a == 0.0 && c.b.cross(n).norm() <= 1e-12) out.neumann_degenerate = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

/// Height of the boundary over the tangent plane at the chart centre.
struct HeightFunction {
  enum class Kind { flat, linear, sphere, cylinder };
  Kind kind = Kind::flat;
  double radius = 0.0;               // sphere, cylinder
  Eigen::Vector2d slope = {0.0, 0.0};  // linear

  static HeightFunction flat() { return {}; }
  static HeightFunction linear(double s1, double s2) { return {Kind::linear, 0.0, {s1, s2}}; }
  static HeightFunction sphere(double r) { return {Kind::sphere, r, {0.0, 0.0}}; }
  static HeightFunction cylinder(double r) { return {Kind::cylinder, r, {0.0, 0.0}}; }

  double value(double z1, double z2) const {
    switch (kind) {
      case Kind::flat: return 0.0;
      case Kind::linear: return slope.x() * z1 + slope.y() * z2;
      case Kind::sphere: return radius - std::sqrt(radius * radius - z1 * z1 - z2 * z2);
      case Kind::cylinder: return radius - std::sqrt(radius * radius - z1 * z1);
    }
    return 0.0;
  }

  Eigen::Vector2d gradient(double z1, double z2) const {
    switch (kind) {
      case Kind::flat: return {0.0, 0.0};
      case Kind::linear: return slope;
      case Kind::sphere: {
        const double s = std::sqrt(radius * radius - z1 * z1 - z2 * z2);
        return {z1 / s, z2 / s};
      }
      case Kind::cylinder: return {z1 / std::sqrt(radius * radius - z1 * z1), 0.0};
    }
    return {0.0, 0.0};
  }

  std::string name() const {
    switch (kind) {
      case Kind::flat: return "flat";
      case Kind::linear: return "linear";
      case Kind::sphere: return "sphere";
      case Kind::cylinder: return "cylinder";
    }
    return "unknown";
  }
};

/// A boundary chart U_b. `rotation` has the chart axes as rows, so
/// z = rotation·(x − centre); the third axis points into the fluid.
struct BoundaryChart {
  Vec3 center = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  HeightFunction height;
  double d1 = 1.0;
  double d2 = 1.0;
  double d3 = 0.25;
  double d4 = 0.125;

  /// Sets d3 = min(d1, d2)/4 and d4 = min(d3/2, cap).
  void set_cutoff_radii(double d4_cap = std::numeric_limits<double>::infinity()) {
    d3 = std::min(d1, d2) / 4.0;
    d4 = std::min(d3 / 2.0, d4_cap);
  }

  Vec3 rotated(const Vec3& x) const { return rotation * (x - center); }

  bool contains(const Vec3& x) const {
    const Vec3 z = rotated(x);
    const double zp3 = z.z() - lateral_height(z);
    const double slack = 1e-12 * d2;
    return std::abs(z.x()) <= d2 + slack && std::abs(z.y()) <= d2 + slack && zp3 >= -1e-10 * d2 &&
           zp3 <= 2.0 * d2 + slack;
  }

 private:
  double lateral_height(const Vec3& z) const {
    if (std::abs(z.x()) > d2 * (1 + 1e-12) || std::abs(z.y()) > d2 * (1 + 1e-12))
      return 0.0;
    return height.value(z.x(), z.y());
  }
};

inline void require_in_chart(const BoundaryChart& chart, const Vec3& x) {
  if (!chart.contains(x)) throw OutOfChartError("point lies outside the chart extents");
}

/// T_b(x): rotate into the chart frame, then subtract the boundary height.
inline Vec3 straighten(const BoundaryChart& chart, const Vec3& x) {
  require_in_chart(chart, x);
  Vec3 z = chart.rotated(x);
  z.z() -= chart.height.value(z.x(), z.y());
  return z;
}

inline Vec3 unstraighten(const BoundaryChart& chart, const Vec3& zp) {
  Vec3 z = zp;
  z.z() += chart.height.value(zp.x(), zp.y());
  return chart.center + chart.rotation.transpose() * z;
}

/// ∇T_b(x) = [[1,0,0],[0,1,0],[−∂₁F,−∂₂F,1]]·O_b, the matrix Ξ evaluated at x.
inline Mat3 jacobian(const BoundaryChart& chart, const Vec3& x) {
  require_in_chart(chart, x);
  const Vec3 z = chart.rotated(x);
  const Eigen::Vector2d g = chart.height.gradient(z.x(), z.y());
  Mat3 shear = Mat3::Identity();
  shear(2, 0) = -g.x();
  shear(2, 1) = -g.y();
  return shear * chart.rotation;
}

/// y⋆ = (y¹, y², −y³).
inline Vec3 reflect(const Vec3& z) { return {z.x(), z.y(), -z.z()}; }

/// Straightened separation pulled back by the chart Jacobian at y (♯) or x (♭).
inline Vec3 pullback_separation_sharp(const BoundaryChart& chart, const Vec3& x, const Vec3& y) {
  return jacobian(chart, y).transpose() * (straighten(chart, x) - straighten(chart, y));
}
inline Vec3 pullback_separation_flat(const BoundaryChart& chart, const Vec3& x, const Vec3& y) {
  return jacobian(chart, x).transpose() * (straighten(chart, x) - straighten(chart, y));
}

// ---------------------------------------------------------------------------
// Cutoff profile ζ
// ---------------------------------------------------------------------------

/// Nonincreasing ζ with ζ ≡ 1 on [0, 1/4], ζ ≡ 0 on [3/4, ∞) and |ζ'| ≤ 4.
/// `smooth` is C^∞ (exponential transition); `quintic` is a C² alternative
/// with the same plateaus.
struct CutoffProfile {
  enum class Kind { smooth, quintic };
  Kind kind = Kind::smooth;

  double operator()(double t) const {
    if (t <= 0.25) return 1.0;
    if (t >= 0.75) return 0.0;
    const double s = 1.5 - 2.0 * t;  // s ∈ (0,1), s = 1 at t = 1/4
    if (kind == Kind::quintic) return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    const double g = 1.0 / s - 1.0 / (1.0 - s);
    if (g > 700.0) return 0.0;
    return 1.0 / (1.0 + std::exp(g));
  }

  double derivative(double t) const {
    if (t <= 0.25 || t >= 0.75) return 0.0;
    const double s = 1.5 - 2.0 * t;
    if (kind == Kind::quintic) return -2.0 * 30.0 * s * s * (1.0 - s) * (1.0 - s);
    const double g = 1.0 / s - 1.0 / (1.0 - s);
    if (std::abs(g) > 700.0) return 0.0;
    const double psi = 1.0 / (1.0 + std::exp(g));
    const double dpsi = psi * (1.0 - psi) * (1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s)));
    return -2.0 * dpsi;
  }
};

// ---------------------------------------------------------------------------
// Partition of unity
// ---------------------------------------------------------------------------

namespace detail {
// exp(1 − 1/(1 − t²)) on (−1, 1), zero outside; equals 1 at t = 0.
inline double bump(double t) {
  const double q = 1.0 - t * t;
  if (q <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / q);
}
inline double bump_derivative(double t) {
  const double q = 1.0 - t * t;
  if (q <= 0.0) return 0.0;
  return bump(t) * (-2.0 * t / (q * q));
}
}  // namespace detail

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& x, double pad = 0.0) const {
    return (x.array() >= lo.array() - pad).all() && (x.array() <= hi.array() + pad).all();
  }
};

struct InteriorCube {
  Vec3 center = Vec3::Zero();
  double half_width = 1.0;
};

struct AtlasOptions {
  double min_d2 = 0.0;  // lower bound on chart extent (a single large chart removes cutoffs)
  double d4_cap = std::numeric_limits<double>::infinity();
};

/// Finite cover of the truncated closed domain by interior cubes and boundary
/// charts, with χ_c = w_c / Σ w built from smooth bumps supported in U_c.
class Atlas {
 public:
  Atlas() = default;
  Atlas(DomainSpec domain, Box box, std::vector<InteriorCube> cubes, std::vector<BoundaryChart> charts,
        double d1, double d2)
      : domain_(domain), box_(box), cubes_(std::move(cubes)), charts_(std::move(charts)), d1_(d1), d2_(d2) {
    for (std::size_t i = 0; i < cubes_.size(); ++i) {
      const Vec3 q = cubes_[i].center / d1_;
      cube_index_[{lround(q.x()), lround(q.y()), lround(q.z())}] = i;
    }
    for (const auto& c : charts_) reach_ = std::max(reach_, std::sqrt(2.0 * c.d2 * c.d2 + 9.0 * c.d2 * c.d2));
  }

  const DomainSpec& domain() const { return domain_; }
  const Box& box() const { return box_; }
  const std::vector<InteriorCube>& cubes() const { return cubes_; }
  const std::vector<BoundaryChart>& charts() const { return charts_; }
  double d1() const { return d1_; }
  double d2() const { return d2_; }
  double d3() const { return std::min(d1_, d2_) / 4.0; }
  double d4() const { return charts_.empty() ? d3() / 2.0 : charts_.front().d4; }
  std::size_t size() const { return cubes_.size() + charts_.size(); }

  /// Cover element c's unnormalised weight; cubes come first, then charts.
  double raw_weight(std::size_t c, const Vec3& x) const {
    if (c < cubes_.size()) {
      const auto& q = cubes_[c];
      const Vec3 t = (x - q.center) / q.half_width;
      return detail::bump(t.x()) * detail::bump(t.y()) * detail::bump(t.z());
    }
    const auto& ch = charts_[c - cubes_.size()];
    const Vec3 z = ch.rotated(x);
    if (std::abs(z.x()) >= ch.d2 || std::abs(z.y()) >= ch.d2) return 0.0;
    const double zp3 = z.z() - ch.height.value(z.x(), z.y());
    return detail::bump(z.x() / ch.d2) * detail::bump(z.y() / ch.d2) * detail::bump(zp3 / (2.0 * ch.d2));
  }

  Vec3 raw_weight_gradient(std::size_t c, const Vec3& x) const {
    using detail::bump;
    using detail::bump_derivative;
    if (c < cubes_.size()) {
      const auto& q = cubes_[c];
      const Vec3 t = (x - q.center) / q.half_width;
      return Vec3{bump_derivative(t.x()) * bump(t.y()) * bump(t.z()),
                  bump(t.x()) * bump_derivative(t.y()) * bump(t.z()),
                  bump(t.x()) * bump(t.y()) * bump_derivative(t.z())} /
             q.half_width;
    }
    const auto& ch = charts_[c - cubes_.size()];
    const Vec3 z = ch.rotated(x);
    if (std::abs(z.x()) >= ch.d2 || std::abs(z.y()) >= ch.d2) return Vec3::Zero();
    const Eigen::Vector2d g = ch.height.gradient(z.x(), z.y());
    const double zp3 = z.z() - ch.height.value(z.x(), z.y());
    const double s1 = z.x() / ch.d2, s2 = z.y() / ch.d2, s3 = zp3 / (2.0 * ch.d2);
    const Vec3 dzp{bump_derivative(s1) * bump(s2) * bump(s3) / ch.d2,
                   bump(s1) * bump_derivative(s2) * bump(s3) / ch.d2,
                   bump(s1) * bump(s2) * bump_derivative(s3) / (2.0 * ch.d2)};
    Mat3 shear = Mat3::Identity();
    shear(2, 0) = -g.x();
    shear(2, 1) = -g.y();
    return (shear * ch.rotation).transpose() * dzp;
  }

  /// Indices of cover elements whose weight may be nonzero at x.
  std::vector<std::size_t> candidates(const Vec3& x) const {
    std::vector<std::size_t> out;
    if (!cubes_.empty()) {
      const Vec3 q = x / d1_;
      const long ix = lround(q.x()), iy = lround(q.y()), iz = lround(q.z());
      for (long a = -1; a <= 1; ++a)
        for (long b = -1; b <= 1; ++b)
          for (long c = -1; c <= 1; ++c) {
            auto it = cube_index_.find({ix + a, iy + b, iz + c});
            if (it != cube_index_.end()) out.push_back(it->second);
          }
      std::sort(out.begin(), out.end());
    }
    for (std::size_t k = 0; k < charts_.size(); ++k)
      if ((x - charts_[k].center).norm() <= reach_) out.push_back(cubes_.size() + k);
    return out;
  }

  /// χ_c(x) for all cover elements (dense). Throws if x is not covered.
  std::vector<double> partition(const Vec3& x) const {
    std::vector<double> chi(size(), 0.0);
    double total = 0.0;
    const auto cand = candidates(x);
    for (auto c : cand) {
      chi[c] = raw_weight(c, x);
      total += chi[c];
    }
    if (!(total > 0.0)) throw ConfigurationError("point is not covered by the atlas");
    for (auto c : cand) chi[c] /= total;
    return chi;
  }

  /// χ_c(x) and ∇χ_c(x) for a single element.
  std::pair<double, Vec3> partition_element(std::size_t c, const Vec3& x) const {
    double total = 0.0;
    Vec3 total_grad = Vec3::Zero();
    for (auto k : candidates(x)) {
      total += raw_weight(k, x);
      total_grad += raw_weight_gradient(k, x);
    }
    if (!(total > 0.0)) throw ConfigurationError("point is not covered by the atlas");
    const double w = raw_weight(c, x);
    const Vec3 gw = raw_weight_gradient(c, x);
    return {w / total, (gw * total - w * total_grad) / (total * total)};
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["domain"] = slipgreen::to_json(domain_);
    j["box"] = {{"lo", {box_.lo.x(), box_.lo.y(), box_.lo.z()}}, {"hi", {box_.hi.x(), box_.hi.y(), box_.hi.z()}}};
    j["d1"] = d1_;
    j["d2"] = d2_;
    j["d3"] = d3();
    j["d4"] = d4();
    auto& charts = j["boundary_charts"] = nlohmann::json::array();
    for (const auto& c : charts_)
      charts.push_back({{"center", {c.center.x(), c.center.y(), c.center.z()}},
                        {"rotation", row_major(c.rotation)},
                        {"height", {{"kind", c.height.name()}, {"radius", c.height.radius},
                                    {"slope", {c.height.slope.x(), c.height.slope.y()}}}},
                        {"d1", c.d1}, {"d2", c.d2}, {"d3", c.d3}, {"d4", c.d4}});
    auto& cubes = j["interior_cubes"] = nlohmann::json::array();
    for (const auto& q : cubes_)
      cubes.push_back({{"center", {q.center.x(), q.center.y(), q.center.z()}}, {"half_width", q.half_width}});
    return j;
  }

 private:
  DomainSpec domain_;
  Box box_;
  std::vector<InteriorCube> cubes_;
  std::vector<BoundaryChart> charts_;
  double d1_ = 1.0;
  double d2_ = 1.0;
  double reach_ = 0.0;
  std::map<std::tuple<long, long, long>, std::size_t> cube_index_;
};

namespace detail {

inline Mat3 frame_rows(const Vec3& e1, const Vec3& e2, const Vec3& e3) {
  Mat3 r;
  r.row(0) = e1.transpose();
  r.row(1) = e2.transpose();
  r.row(2) = e3.transpose();
  return r;
}

// Lattice of cubes with spacing d1 whose closure keeps distance >= d1 from Σ.
inline std::vector<InteriorCube> lattice_cubes(const DomainSpec& domain, const Box& box, double d1) {
  std::vector<InteriorCube> cubes;
  const double corner = std::sqrt(3.0) * d1;
  const Vec3 lo = box.lo.array() - d1, hi = box.hi.array() + d1;
  const long i0 = static_cast<long>(std::floor(lo.x() / d1)), i1 = static_cast<long>(std::ceil(hi.x() / d1));
  const long j0 = static_cast<long>(std::floor(lo.y() / d1)), j1 = static_cast<long>(std::ceil(hi.y() / d1));
  const long k0 = static_cast<long>(std::floor(lo.z() / d1)), k1 = static_cast<long>(std::ceil(hi.z() / d1));
  for (long k = k0; k <= k1; ++k)
    for (long j = j0; j <= j1; ++j)
      for (long i = i0; i <= i1; ++i) {
        const Vec3 c{i * d1, j * d1, k * d1};
        double clearance = 0.0;
        if (domain.kind == DomainKind::ball) clearance = domain.radius - c.norm() - corner;
        else if (domain.kind == DomainKind::cylinder)
          clearance = domain.radius - std::hypot(c.x(), c.y()) - std::sqrt(2.0) * d1;
        else clearance = domain.depth(c) - d1;
        if (clearance < d1) continue;
        if (!box.contains(c, d1)) continue;
        cubes.push_back({c, d1});
      }
  return cubes;
}

}  // namespace detail

/// Builds a cover of the domain truncated to `box`.
///
/// `density` controls the number of boundary charts: n×n flat charts per wall
/// for planar boundaries, 6n² cubed-sphere charts on the ball and 4n charts per
/// axial layer on the cylinder.
inline Atlas build_atlas(const DomainSpec& domain, const Box& box, int density, const AtlasOptions& opts = {}) {
  domain.validate();
  const Vec3 ext = box.extent();
  if (!(ext.array() > 0.0).all()) throw ConfigurationError("degenerate bounding box");
  if (density < 1) throw ConfigurationError("chart density must be >= 1");
  std::vector<BoundaryChart> charts;
  std::vector<InteriorCube> cubes;
  double d1 = 0.0, d2 = 0.0;

  auto finish_chart = [&](BoundaryChart c) {
    c.d1 = d1;
    c.d2 = d2;
    c.set_cutoff_radii(opts.d4_cap);
    charts.push_back(c);
  };

  switch (domain.kind) {
    case DomainKind::half_space:
    case DomainKind::channel: {
      if (box.hi.z() <= 0.0 || (domain.kind == DomainKind::channel && box.lo.z() >= domain.height))
        throw ConfigurationError("bounding box does not intersect the domain");
      const double top = domain.kind == DomainKind::channel ? std::min(box.hi.z(), domain.height) : box.hi.z();
      const double cx = ext.x() / density, cy = ext.y() / density;
      const double depth_needed = domain.kind == DomainKind::channel ? 0.3 * domain.height : 0.55 * top;
      d2 = std::max({0.75 * std::max(cx, cy), depth_needed, opts.min_d2});
      d1 = d2;
      for (int j = 0; j < density; ++j)
        for (int i = 0; i < density; ++i) {
          const double x = box.lo.x() + (i + 0.5) * cx, y = box.lo.y() + (j + 0.5) * cy;
          BoundaryChart c;
          c.center = {x, y, 0.0};
          c.rotation = Mat3::Identity();
          finish_chart(c);
          if (domain.kind == DomainKind::channel) {
            BoundaryChart t;
            t.center = {x, y, domain.height};
            t.rotation = detail::frame_rows(Vec3::UnitX(), -Vec3::UnitY(), -Vec3::UnitZ());
            finish_chart(t);
          }
        }
      break;
    }
    case DomainKind::ball: {
      const double R = domain.radius;
      const double spacing = 0.5 * pi / density;
      d2 = std::max(R * std::min(0.6, 1.6 * spacing), opts.min_d2);
      if (d2 > 0.6 * R) throw ConfigurationError("ball charts must satisfy d2 <= 0.6 R");
      d1 = d2 / 4.0;
      const Vec3 axes[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
      for (int face = 0; face < 6; ++face) {
        const Vec3 nrm = (face % 2 == 0 ? 1.0 : -1.0) * axes[face / 2];
        const Vec3 u = axes[(face / 2 + 1) % 3], v = axes[(face / 2 + 2) % 3];
        for (int j = 0; j < density; ++j)
          for (int i = 0; i < density; ++i) {
            const double alpha = -0.25 * pi + (i + 0.5) * spacing;
            const double beta = -0.25 * pi + (j + 0.5) * spacing;
            const Vec3 p = R * (nrm + std::tan(alpha) * u + std::tan(beta) * v).normalized();
            if (!box.contains(p, 3.0 * d2)) continue;
            const Vec3 e3 = -p / R;
            const Vec3 trial = std::abs(e3.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
            const Vec3 e1 = trial.cross(e3).normalized();
            BoundaryChart c;
            c.center = p;
            c.rotation = detail::frame_rows(e1, e3.cross(e1), e3);
            c.height = HeightFunction::sphere(R);
            finish_chart(c);
          }
      }
      cubes = detail::lattice_cubes(domain, box, d1);
      break;
    }
    case DomainKind::cylinder: {
      const double R = domain.radius;
      const int ntheta = 4 * density;
      const double dtheta = 2.0 * pi / ntheta;
      d2 = std::max(R * std::min(0.6, 1.2 * dtheta), opts.min_d2);
      if (d2 > 0.6 * R) throw ConfigurationError("cylinder charts must satisfy d2 <= 0.6 R");
      d1 = d2 / 4.0;
      const long l0 = static_cast<long>(std::floor((box.lo.z() - d2) / d2));
      const long l1 = static_cast<long>(std::ceil((box.hi.z() + d2) / d2));
      for (long l = l0; l <= l1; ++l)
        for (int k = 0; k < ntheta; ++k) {
          const double th = (k + 0.5) * dtheta;
          const Vec3 er{std::cos(th), std::sin(th), 0.0}, et{-std::sin(th), std::cos(th), 0.0};
          const Vec3 p = R * er + Vec3{0.0, 0.0, l * d2};
          if (!box.contains(p, 3.0 * d2)) continue;
          BoundaryChart c;
          c.center = p;
          c.rotation = detail::frame_rows(et, -Vec3::UnitZ(), -er);
          c.height = HeightFunction::cylinder(R);
          finish_chart(c);
        }
      cubes = detail::lattice_cubes(domain, box, d1);
      break;
    }
  }
  return Atlas(domain, box, std::move(cubes), std::move(charts), d1, d2);
}

}  // namespace slipgreen
