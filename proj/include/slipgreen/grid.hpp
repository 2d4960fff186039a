// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Uniform isotropic grids with a domain mask, and the nodal field containers.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "slipgreen/errors.hpp"
#include "slipgreen/geometry.hpp"
#include "slipgreen/linalg.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slipgreen {

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

enum class NodeFlag : std::uint8_t { interior, boundary, exterior };

/// Nodes x = origin + h·(i, j, k). A periodic axis with n nodes has period n·h;
/// a non-periodic axis spans (n − 1)·h.
class Grid {
 public:
  Grid(Vec3 origin, double h, std::array<int, 3> dims, std::array<bool, 3> periodic, DomainSpec domain)
      : origin_(origin), h_(h), dims_(dims), periodic_(periodic), domain_(domain) {
    if (!(h > 0.0)) throw ParameterError("grid spacing must be positive");
    for (int a = 0; a < 3; ++a)
      if (dims[a] < 1) throw ParameterError("grid dimensions must be positive");
    domain_.validate();
    const std::size_t n = size();
    flags_.resize(n);
    const double tol = h / 100.0;
    for (int k = 0; k < dims[2]; ++k)
      for (int j = 0; j < dims[1]; ++j)
        for (int i = 0; i < dims[0]; ++i) {
          const double d = domain_.depth(position(i, j, k));
          flags_[index(i, j, k)] = d > tol ? NodeFlag::interior : (d >= -tol ? NodeFlag::boundary : NodeFlag::exterior);
        }
  }

  const Vec3& origin() const { return origin_; }
  double h() const { return h_; }
  const std::array<int, 3>& dims() const { return dims_; }
  int dim(int a) const { return dims_[a]; }
  bool periodic(int a) const { return periodic_[a]; }
  const std::array<bool, 3>& periodicity() const { return periodic_; }
  const DomainSpec& domain() const { return domain_; }
  std::size_t size() const { return std::size_t(dims_[0]) * dims_[1] * dims_[2]; }

  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(dims_[0]) * (std::size_t(j) + std::size_t(dims_[1]) * std::size_t(k));
  }
  std::array<int, 3> ijk(std::size_t n) const {
    const int i = int(n % dims_[0]);
    const std::size_t r = n / dims_[0];
    return {i, int(r % dims_[1]), int(r / dims_[1])};
  }
  Vec3 position(int i, int j, int k) const { return origin_ + h_ * Vec3(i, j, k); }
  Vec3 position(std::size_t n) const {
    const auto [i, j, k] = ijk(n);
    return position(i, j, k);
  }
  NodeFlag flag(std::size_t n) const { return flags_[n]; }
  bool in_domain(std::size_t n) const { return flags_[n] != NodeFlag::exterior; }

  /// Extent of the box along an axis (period for periodic axes).
  double length(int a) const { return periodic_[a] ? dims_[a] * h_ : (dims_[a] - 1) * h_; }

  /// Volume weight: h³ × trapezoid factors at non-periodic box faces, zero outside the domain.
  double volume_weight(std::size_t n) const {
    if (!in_domain(n)) return 0.0;
    const auto c = ijk(n);
    double w = h_ * h_ * h_;
    for (int a = 0; a < 3; ++a)
      if (!periodic_[a] && dims_[a] > 1 && (c[a] == 0 || c[a] == dims_[a] - 1)) w *= 0.5;
    return w;
  }

  bool same_shape(const Grid& o) const {
    return dims_ == o.dims_ && h_ == o.h_ && origin_ == o.origin_ && periodic_ == o.periodic_;
  }

 private:
  Vec3 origin_;
  double h_;
  std::array<int, 3> dims_;
  std::array<bool, 3> periodic_;
  DomainSpec domain_;
  std::vector<NodeFlag> flags_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(Vec3 origin, double h, std::array<int, 3> dims, std::array<bool, 3> periodic,
                         DomainSpec domain) {
  return std::make_shared<const Grid>(origin, h, dims, periodic, domain);
}

/// Channel 0 ≤ z ≤ height with lateral periods n·h.
inline GridPtr make_channel_grid(std::array<int, 3> dims, double height) {
  if (dims[2] < 3) throw ParameterError("channel grid needs at least 3 vertical nodes");
  const double h = height / (dims[2] - 1);
  return make_grid(Vec3::Zero(), h, dims, {true, true, false}, DomainSpec::channel(height));
}

struct ScalarField {
  GridPtr grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double fill = 0.0) : grid(std::move(g)), v(grid->size(), fill) {}
  double& operator[](std::size_t n) { return v[n]; }
  double operator[](std::size_t n) const { return v[n]; }
};

struct VectorField {
  GridPtr grid;
  std::array<std::vector<double>, 3> c;

  VectorField() = default;
  explicit VectorField(GridPtr g) : grid(std::move(g)) {
    for (auto& x : c) x.assign(grid->size(), 0.0);
  }
  Vec3 at(std::size_t n) const { return {c[0][n], c[1][n], c[2][n]}; }
  void set(std::size_t n, const Vec3& v) {
    c[0][n] = v.x();
    c[1][n] = v.y();
    c[2][n] = v.z();
  }
  std::size_t size() const { return c[0].size(); }
};

/// Row-major 3×3 per node: entry (i, j) in c[3i + j].
struct TensorField {
  GridPtr grid;
  std::array<std::vector<double>, 9> c;

  TensorField() = default;
  explicit TensorField(GridPtr g) : grid(std::move(g)) {
    for (auto& x : c) x.assign(grid->size(), 0.0);
  }
  Mat3 at(std::size_t n) const {
    Mat3 m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = c[3 * i + j][n];
    return m;
  }
};

inline void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw SolverError(std::string(what) + ": non-finite value");
}
inline void require_finite(const ScalarField& f, const char* what) { require_finite(f.v, what); }
inline void require_finite(const VectorField& f, const char* what) {
  for (const auto& x : f.c) require_finite(x, what);
}
inline void require_finite(const TensorField& f, const char* what) {
  for (const auto& x : f.c) require_finite(x, what);
}

template <typename F>
VectorField sample_vector(const GridPtr& g, F&& f) {
  VectorField out(g);
  const std::size_t n = g->size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < std::ptrdiff_t(n); ++m) out.set(std::size_t(m), f(g->position(std::size_t(m))));
  return out;
}

template <typename F>
ScalarField sample_scalar(const GridPtr& g, F&& f) {
  ScalarField out(g);
  const std::size_t n = g->size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < std::ptrdiff_t(n); ++m) out.v[std::size_t(m)] = f(g->position(std::size_t(m)));
  return out;
}

inline double max_abs_difference(const VectorField& a, const VectorField& b, bool domain_only = true) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (domain_only && !a.grid->in_domain(n)) continue;
    for (int k = 0; k < 3; ++k) m = std::max(m, std::abs(a.c[k][n] - b.c[k][n]));
  }
  return m;
}

/// Trilinear interpolation of a nodal field at an arbitrary point of the box.
class Interpolator {
 public:
  explicit Interpolator(const Grid& g) : g_(g) {}

  template <typename Get>
  auto operator()(const Vec3& x, Get&& get) const {
    const Vec3 q = (x - g_.origin()) / g_.h();
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      const int n = g_.dim(a);
      double t = q(a);
      int i = int(std::floor(t));
      if (g_.periodic(a)) {
        frac[a] = t - i;
        base[a] = ((i % n) + n) % n;
      } else {
        if (n == 1) {
          base[a] = 0;
          frac[a] = 0.0;
          continue;
        }
        i = std::clamp(i, 0, n - 2);
        frac[a] = t - i;
        base[a] = i;
      }
    }
    using T = std::decay_t<decltype(get(std::size_t(0)))>;
    T acc = get(g_.index(base[0], base[1], base[2])) * 0.0;
    for (int c = 0; c < 8; ++c) {
      int idx[3];
      double w = 1.0;
      for (int a = 0; a < 3; ++a) {
        const int bit = (c >> a) & 1;
        int i = base[a] + bit;
        if (g_.periodic(a)) i %= g_.dim(a);
        else if (g_.dim(a) == 1) i = 0;
        idx[a] = i;
        w *= bit ? frac[a] : 1.0 - frac[a];
      }
      if (w != 0.0) acc = acc + get(g_.index(idx[0], idx[1], idx[2])) * w;
    }
    return acc;
  }

 private:
  const Grid& g_;
};

}  // namespace slipgreen
