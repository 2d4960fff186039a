// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Alignment statistics, stretching and norm integrals, and the inequality
// monitors evaluated on snapshots and snapshot series.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "slipgreen/snapshot.hpp"

namespace slipgreen {

// ---------------------------------------------------------------------------
// Turning angle and coherence
// ---------------------------------------------------------------------------

/// sin of the angle between two vorticity vectors, or nullopt when either
/// magnitude is below Λ (or zero).
inline std::optional<double> turning_angle(const Vec3& w1, const Vec3& w2, double lambda = 0.0) {
  const double a = w1.norm(), b = w2.norm();
  if (a == 0.0 || b == 0.0 || !(a >= lambda) || !(b >= lambda)) return std::nullopt;
  const double s = w1.cross(w2).norm() / (a * b);
  // parallel up to rounding in the components
  if (s <= 8.0 * std::numeric_limits<double>::epsilon()) return 0.0;
  return std::min(s, 1.0);
}

struct AlignmentOptions {
  std::optional<double> lambda;  // absolute threshold; default 1e−6·max|ω|
  std::size_t random_pairs = 100000;
  double near_radius_cells = 4.0;  // exhaustive pairs with |x − y| ≤ r_nn = near_radius_cells·h
  std::uint64_t seed = 20261014;
  std::optional<VorticitySource> vorticity;  // unset: stored if the snapshot has one, else curl u

  void validate() const {
    if (lambda && !(*lambda >= 0.0)) throw ParameterError("vorticity threshold must be >= 0");
    if (!(near_radius_cells >= 0.0)) throw ParameterError("near-pair radius must be >= 0");
  }
};

struct PairRecord {
  std::size_t i = 0, j = 0;
  Vec3 x = Vec3::Zero(), y = Vec3::Zero();
  double sin_theta = 0.0;
  double distance = 0.0;
  double ratio = 0.0;  // sinθ/√|x−y|
};

struct AlignmentReport {
  bool empty = true;  // no admitted pair
  double rho = 0.0;
  double lambda = 0.0;
  std::size_t admitted_nodes = 0;
  std::size_t near_pairs = 0;            // admitted near pairs
  std::size_t random_pairs_drawn = 0;
  std::size_t random_pairs_admitted = 0;
  std::uint64_t seed = 0;
  double near_radius = 0.0;
  std::string vorticity_source;
  std::optional<PairRecord> worst;
  std::vector<double> levels;          // exceedance levels
  std::vector<std::uint64_t> exceed;   // admitted pairs with ratio ≥ level

  std::size_t pairs_sampled() const { return near_pairs + random_pairs_admitted; }
};

inline nlohmann::json to_json(const PairRecord& p) {
  return {{"i", p.i},
          {"j", p.j},
          {"x", {p.x.x(), p.x.y(), p.x.z()}},
          {"y", {p.y.x(), p.y.y(), p.y.z()}},
          {"sin_theta", p.sin_theta},
          {"distance", p.distance},
          {"ratio", p.ratio}};
}

inline nlohmann::json to_json(const AlignmentReport& r) {
  nlohmann::json hist = nlohmann::json::array();
  for (std::size_t k = 0; k < r.levels.size(); ++k) hist.push_back({{"level", r.levels[k]}, {"count", r.exceed[k]}});
  return {{"empty", r.empty},
          {"rho_hat", r.rho},
          {"lambda", r.lambda},
          {"admitted_nodes", r.admitted_nodes},
          {"pairs_sampled", r.pairs_sampled()},
          {"near_pairs", r.near_pairs},
          {"random_pairs_drawn", r.random_pairs_drawn},
          {"random_pairs_admitted", r.random_pairs_admitted},
          {"near_radius", r.near_radius},
          {"seed", r.seed},
          {"vorticity_source", r.vorticity_source},
          {"worst_pair", r.worst ? to_json(*r.worst) : nlohmann::json(nullptr)},
          {"exceedance", hist}};
}

inline std::string to_csv(const AlignmentReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "level,count\n";
  for (std::size_t k = 0; k < r.levels.size(); ++k) os << r.levels[k] << ',' << r.exceed[k] << '\n';
  return os.str();
}

namespace detail {

// Larger ratio wins; ties go to the lexicographically smaller node pair.
inline bool better_pair(const PairRecord& a, const PairRecord& b) {
  if (a.ratio != b.ratio) return a.ratio > b.ratio;
  const auto ka = std::minmax(a.i, a.j), kb = std::minmax(b.i, b.j);
  return ka < kb;
}

inline Vec3 min_image(const Grid& g, Vec3 d) {
  for (int a = 0; a < 3; ++a)
    if (g.periodic(a)) {
      const double L = g.length(a);
      d(a) -= L * std::round(d(a) / L);
    }
  return d;
}

inline std::vector<double> exceedance_levels() {
  std::vector<double> lv;
  for (int k = -6; k <= 6; ++k) lv.push_back(std::pow(10.0, 0.5 * k));
  return lv;
}

struct PairAccumulator {
  std::optional<PairRecord> best;
  std::vector<std::uint64_t> exceed;
  std::size_t count = 0;

  void add(const PairRecord& p, const std::vector<double>& levels) {
    ++count;
    for (std::size_t k = 0; k < levels.size(); ++k)
      if (p.ratio >= levels[k]) ++exceed[k];
    if (!best || better_pair(p, *best)) best = p;
  }
  void merge(const PairAccumulator& o) {
    count += o.count;
    for (std::size_t k = 0; k < exceed.size(); ++k) exceed[k] += o.exceed[k];
    if (o.best && (!best || better_pair(*o.best, *best))) best = o.best;
  }
};

// index in [0, n) from a 64-bit draw, multiply-high
inline std::size_t draw_index(std::mt19937_64& rng, std::size_t n) {
  return std::size_t((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline constexpr std::size_t pair_chunk = 8192;

}  // namespace detail

inline VorticitySource resolve_source(const Snapshot& s, std::optional<VorticitySource> src) {
  if (src) return *src;
  return s.omega ? VorticitySource::stored : VorticitySource::derived;
}

/// Coherence modulus ρ̂ = max |sinθ|/√|x−y| over admitted pairs: every pair of
/// nodes within r_nn, plus random node pairs drawn uniformly from the domain
/// and kept when both ends are admitted. Random pairs come in fixed chunks,
/// each with its own generator seeded from (seed, chunk), so the result does
/// not depend on the thread count.
inline AlignmentReport coherence_rho(const Snapshot& s, const AlignmentOptions& opts = {}) {
  opts.validate();
  const Grid& g = *s.grid;
  const VorticitySource src = resolve_source(s, opts.vorticity);
  const VectorField w = vorticity(s, src);

  std::vector<std::size_t> domain;
  double wmax = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.in_domain(n)) {
      domain.push_back(n);
      wmax = std::max(wmax, w.at(n).norm());
    }
  const double lambda = opts.lambda ? *opts.lambda : 1e-6 * wmax;
  std::vector<char> admitted(g.size(), 0);
  std::size_t n_adm = 0;
  for (auto n : domain) {
    const double m = w.at(n).norm();
    if (m > 0.0 && m >= lambda) {
      admitted[n] = 1;
      ++n_adm;
    }
  }

  AlignmentReport rep;
  rep.lambda = lambda;
  rep.admitted_nodes = n_adm;
  rep.seed = opts.seed;
  rep.near_radius = opts.near_radius_cells * g.h();
  rep.vorticity_source = src == VorticitySource::stored ? "stored" : "derived";
  rep.levels = detail::exceedance_levels();
  const auto& levels = rep.levels;

  auto make_pair = [&](std::size_t i, std::size_t j, const Vec3& sep) -> std::optional<PairRecord> {
    const auto st = turning_angle(w.at(i), w.at(j), lambda);
    if (!st) return std::nullopt;
    PairRecord p;
    p.i = i;
    p.j = j;
    p.x = g.position(i);
    p.y = g.position(j);
    p.sin_theta = *st;
    p.distance = sep.norm();
    p.ratio = p.sin_theta / std::sqrt(p.distance);
    return p;
  };

  // near pairs, each unordered pair once through the positive half of the offset ball
  std::vector<std::array<int, 3>> offsets;
  const int m = int(std::floor(opts.near_radius_cells + 1e-9));
  const double r2 = opts.near_radius_cells * opts.near_radius_cells * (1.0 + 1e-12);
  for (int c = 0; c <= m; ++c)
    for (int b = -m; b <= m; ++b)
      for (int a = -m; a <= m; ++a) {
        const bool positive = c > 0 || (c == 0 && (b > 0 || (b == 0 && a > 0)));
        if (positive && double(a * a + b * b + c * c) <= r2) offsets.push_back({a, b, c});
      }

  detail::PairAccumulator total;
  total.exceed.assign(levels.size(), 0);
  const std::ptrdiff_t nd = std::ptrdiff_t(domain.size());
#pragma omp parallel
  {
    detail::PairAccumulator local;
    local.exceed.assign(levels.size(), 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < nd; ++q) {
      const std::size_t n = domain[std::size_t(q)];
      if (!admitted[n]) continue;
      const auto ijk = g.ijk(n);
      for (const auto& off : offsets) {
        std::array<int, 3> t{ijk[0] + off[0], ijk[1] + off[1], ijk[2] + off[2]};
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
          const int d = g.dim(a);
          if (g.periodic(a)) t[a] = ((t[a] % d) + d) % d;
          else if (t[a] < 0 || t[a] >= d) inside = false;
        }
        if (!inside) continue;
        const std::size_t k = g.index(t[0], t[1], t[2]);
        if (k == n || !admitted[k]) continue;
        const Vec3 sep = g.h() * Vec3(off[0], off[1], off[2]);
        if (auto p = make_pair(n, k, sep)) local.add(*p, levels);
      }
    }
#pragma omp critical(slipgreen_near_pairs)
    total.merge(local);
  }
  rep.near_pairs = total.count;

  // random pairs
  if (domain.size() >= 2 && opts.random_pairs > 0) {
    const std::size_t M = opts.random_pairs;
    const std::ptrdiff_t nchunks = std::ptrdiff_t((M + detail::pair_chunk - 1) / detail::pair_chunk);
    detail::PairAccumulator far;
    far.exceed.assign(levels.size(), 0);
#pragma omp parallel
    {
      detail::PairAccumulator local;
      local.exceed.assign(levels.size(), 0);
#pragma omp for schedule(static)
      for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
        std::seed_seq seq{std::uint32_t(opts.seed), std::uint32_t(opts.seed >> 32), std::uint32_t(c)};
        std::mt19937_64 rng(seq);
        const std::size_t begin = std::size_t(c) * detail::pair_chunk;
        const std::size_t end = std::min(M, begin + detail::pair_chunk);
        for (std::size_t k = begin; k < end; ++k) {
          const std::size_t i = domain[detail::draw_index(rng, domain.size())];
          std::size_t j = i;
          while (j == i) j = domain[detail::draw_index(rng, domain.size())];
          if (!admitted[i] || !admitted[j]) continue;
          const Vec3 sep = detail::min_image(g, g.position(j) - g.position(i));
          if (auto p = make_pair(i, j, sep)) local.add(*p, levels);
        }
      }
#pragma omp critical(slipgreen_far_pairs)
      far.merge(local);
    }
    rep.random_pairs_drawn = M;
    rep.random_pairs_admitted = far.count;
    total.merge(far);
  }
  total.count = rep.pairs_sampled();

  rep.exceed = total.exceed;
  if (total.best) {
    rep.empty = false;
    rep.rho = total.best->ratio;
    rep.worst = total.best;
  }
  return rep;
}

struct CriterionRow {
  double t = 0.0;
  double rho_hat = 0.0;
  bool pass = true;
  bool vacuous = false;  // no admitted pair at this time
  double margin = 0.0;   // ρ − ρ̂
  std::optional<PairRecord> worst;
};

struct CriterionReport {
  double rho = 0.0;
  bool pass = true;
  std::vector<CriterionRow> rows;
};

/// Pass at time t iff ρ̂(t) ≤ ρ; a time with no admitted pair passes vacuously.
inline CriterionReport criterion_check(const std::vector<Snapshot>& series, double rho,
                                       const AlignmentOptions& opts = {}) {
  if (!(rho >= 0.0)) throw ParameterError("criterion rho must be >= 0");
  if (series.empty()) throw ParameterError("criterion check needs at least one snapshot");
  CriterionReport out;
  out.rho = rho;
  for (const auto& s : series) {
    const auto a = coherence_rho(s, opts);
    CriterionRow r;
    r.t = s.t;
    r.rho_hat = a.rho;
    r.vacuous = a.empty;
    r.pass = a.empty || a.rho <= rho;
    r.margin = rho - a.rho;
    r.worst = a.worst;
    out.pass = out.pass && r.pass;
    out.rows.push_back(r);
  }
  return out;
}

inline nlohmann::json to_json(const CriterionReport& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows)
    rows.push_back({{"t", r.t},
                    {"rho_hat", r.rho_hat},
                    {"pass", r.pass},
                    {"vacuous", r.vacuous},
                    {"margin", r.margin},
                    {"worst_pair", r.worst ? to_json(*r.worst) : nlohmann::json(nullptr)}});
  return {{"rho", c.rho}, {"pass", c.pass}, {"rows", rows}};
}

inline std::string to_csv(const CriterionReport& c) {
  std::ostringstream os;
  os.precision(17);
  os << "t,rho_hat,pass,vacuous,margin\n";
  for (const auto& r : c.rows) os << r.t << ',' << r.rho_hat << ',' << r.pass << ',' << r.vacuous << ',' << r.margin << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

template <typename F>
double volume_integral(const Grid& g, F&& f) {
  double s = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double w = g.volume_weight(n);
    if (w != 0.0) s += w * f(n);
  }
  return s;
}

struct SurfacePoint {
  Vec3 x;
  Vec3 n;  // outward normal
  double w = 0.0;
  std::ptrdiff_t node = -1;  // grid node when the point is one, else −1 (trilinear values)
};

/// Quadrature on Σ inside the grid box. Flat walls use the wall nodes with
/// h² weights; the sphere a midpoint (θ, φ) mesh and the cylinder a φ mesh
/// on the grid's z nodes, both sampled by trilinear interpolation.
inline std::vector<SurfacePoint> surface_quadrature(const Grid& g) {
  const auto& dom = g.domain();
  const double h = g.h();
  std::vector<SurfacePoint> out;
  auto lateral_factor = [&](const std::array<int, 3>& c, int a) {
    return (!g.periodic(a) && g.dim(a) > 1 && (c[a] == 0 || c[a] == g.dim(a) - 1)) ? 0.5 : 1.0;
  };
  auto in_box = [&](const Vec3& x) {
    for (int a = 0; a < 3; ++a) {
      const double lo = g.origin()(a), hi = lo + (g.dim(a) - 1) * h;
      if (!g.periodic(a) && (x(a) < lo - 1e-9 * h || x(a) > hi + 1e-9 * h)) return false;
    }
    return true;
  };
  switch (dom.kind) {
    case DomainKind::half_space:
    case DomainKind::channel: {
      if (g.periodic(2)) return out;  // no wall
      for (std::size_t n = 0; n < g.size(); ++n) {
        if (g.flag(n) != NodeFlag::boundary) continue;
        const auto c = g.ijk(n);
        const Vec3 x = g.position(n);
        out.push_back({x, dom.outward_normal(x), h * h * lateral_factor(c, 0) * lateral_factor(c, 1), std::ptrdiff_t(n)});
      }
      break;
    }
    case DomainKind::ball: {
      const double R = dom.radius;
      const int nt = std::max(8, int(std::ceil(pi * R / h)));
      const int np = 2 * nt;
      const double dt = pi / nt, dp = 2.0 * pi / np;
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < np; ++j) {
          const double th = (i + 0.5) * dt, ph = (j + 0.5) * dp;
          const Vec3 nrm{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
          const Vec3 x = R * nrm;
          if (!in_box(x)) throw ConfigurationError("grid box does not contain the sphere");
          out.push_back({x, nrm, R * R * std::sin(th) * dt * dp, -1});
        }
      break;
    }
    case DomainKind::cylinder: {
      const double R = dom.radius;
      const int np = std::max(16, int(std::ceil(2.0 * pi * R / h)));
      const double dp = 2.0 * pi / np;
      for (int k = 0; k < g.dim(2); ++k) {
        const double z = g.origin().z() + k * h;
        const double fz = (!g.periodic(2) && g.dim(2) > 1 && (k == 0 || k == g.dim(2) - 1)) ? 0.5 : 1.0;
        for (int j = 0; j < np; ++j) {
          const double ph = (j + 0.5) * dp;
          const Vec3 nrm{std::cos(ph), std::sin(ph), 0.0};
          const Vec3 x = R * nrm + Vec3(0.0, 0.0, z);
          if (!in_box(x)) throw ConfigurationError("grid box does not contain the cylinder wall");
          out.push_back({x, nrm, R * dp * h * fz, -1});
        }
      }
      break;
    }
  }
  return out;
}

namespace detail {

inline Vec3 sample_at(const Interpolator& I, const SurfacePoint& p, const VectorField& f) {
  if (p.node >= 0) return f.at(std::size_t(p.node));
  return I(p.x, [&](std::size_t n) { return f.at(n); });
}

inline Mat3 sample_at(const Interpolator& I, const SurfacePoint& p, const TensorField& f) {
  if (p.node >= 0) return f.at(std::size_t(p.node));
  return I(p.x, [&](std::size_t n) -> Mat3 { return f.at(n); });
}

inline double frobenius2(const TensorField& t, std::size_t n) {
  double s = 0.0;
  for (const auto& c : t.c) s += c[n] * c[n];
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stretching and norms
// ---------------------------------------------------------------------------

/// ∫ 𝒮u : ω⊗ω, volume-weighted over domain nodes (signed).
inline double stretch_integral(const VectorField& u, const VectorField& w) {
  const TensorField S = sym_grad(u);
  return volume_integral(*u.grid, [&](std::size_t n) {
    const Vec3 o = w.at(n);
    return o.dot(S.at(n) * o);
  });
}

inline double stretch_term(const Snapshot& s, VorticitySource src = VorticitySource::derived) {
  return std::abs(stretch_integral(s.u, vorticity(s, src)));
}

struct StretchReport {
  double stretch = 0.0;         // |∫ 𝒮u : ω⊗ω|
  double stretch_signed = 0.0;
  double enstrophy = 0.0;       // ∫|ω|²
  double energy = 0.0;          // ∫|u|²
  double grad_u = 0.0;          // ∫|∇u|²
  double grad_omega = 0.0;      // ∫|∇ω|²
  double hessian_u = 0.0;       // ∫|∇∇u|²
  double boundary_u = 0.0;      // ∫_Σ|u|²
  double boundary_grad_u = 0.0; // ∫_Σ|∇u|²
  int boundary_stencil_order = 2;  // one-sided normal differences at walls
};

inline nlohmann::json to_json(const StretchReport& r) {
  return {{"stretch", r.stretch},
          {"stretch_signed", r.stretch_signed},
          {"enstrophy", r.enstrophy},
          {"energy", r.energy},
          {"grad_u", r.grad_u},
          {"grad_omega", r.grad_omega},
          {"hessian_u", r.hessian_u},
          {"boundary_u", r.boundary_u},
          {"boundary_grad_u", r.boundary_grad_u},
          {"boundary_stencil_order", r.boundary_stencil_order}};
}

inline StretchReport global_norms(const Snapshot& s, VorticitySource src = VorticitySource::derived) {
  const Grid& g = *s.grid;
  const VectorField w = vorticity(s, src);
  const TensorField du = velocity_gradient(s.u);
  const TensorField dw = velocity_gradient(w);
  StretchReport r;
  r.stretch_signed = stretch_integral(s.u, w);
  r.stretch = std::abs(r.stretch_signed);
  r.enstrophy = volume_integral(g, [&](std::size_t n) { return w.at(n).squaredNorm(); });
  r.energy = volume_integral(g, [&](std::size_t n) { return s.u.at(n).squaredNorm(); });
  r.grad_u = volume_integral(g, [&](std::size_t n) { return detail::frobenius2(du, n); });
  r.grad_omega = volume_integral(g, [&](std::size_t n) { return detail::frobenius2(dw, n); });
  std::vector<double> hess(g.size(), 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = j; k < 3; ++k) {
        const auto d = j == k ? detail::diff2(g, s.u.c[i], j) : detail::diff(g, du.c[3 * i + j], k);
        const double mult = j == k ? 1.0 : 2.0;
        for (std::size_t n = 0; n < g.size(); ++n) hess[n] += mult * d[n] * d[n];
      }
  r.hessian_u = volume_integral(g, [&](std::size_t n) { return hess[n]; });
  const Interpolator I(g);
  for (const auto& p : surface_quadrature(g)) {
    r.boundary_u += p.w * detail::sample_at(I, p, s.u).squaredNorm();
    r.boundary_grad_u += p.w * detail::sample_at(I, p, du).squaredNorm();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Boundary checks
// ---------------------------------------------------------------------------

struct BoundaryResidualPoint {
  Vec3 x;
  double tangential1 = 0.0, tangential2 = 0.0;  // βu·τ + ν(ω×n)·τ − 2νII(u,τ)
  double normal = 0.0;                          // u·n
};

struct NavierResidual {
  std::vector<BoundaryResidualPoint> points;
  double max_tangential = 0.0;
  double max_normal = 0.0;
  double max() const { return std::max(max_tangential, max_normal); }
};

inline nlohmann::json to_json(const NavierResidual& r) {
  return {{"points", r.points.size()}, {"max_tangential", r.max_tangential}, {"max_normal", r.max_normal}};
}

/// Navier slip residual in the vorticity form on the surface quadrature points.
inline NavierResidual navier_bc_residual(const Snapshot& s) {
  const Grid& g = *s.grid;
  const VectorField w = curl(s.u);
  const Interpolator I(g);
  NavierResidual out;
  for (const auto& p : surface_quadrature(g)) {
    const SurfaceGeometry sg = surface_geometry(g.domain(), p.x);
    const Vec3 u = detail::sample_at(I, p, s.u), o = detail::sample_at(I, p, w);
    const Vec3 wn = o.cross(sg.normal);
    BoundaryResidualPoint r{p.x};
    const Vec3 tau[2] = {sg.tangent1, sg.tangent2};
    double res[2];
    for (int k = 0; k < 2; ++k)
      res[k] = s.beta * u.dot(tau[k]) + s.nu * wn.dot(tau[k]) - 2.0 * s.nu * sg.second_form_apply(u, tau[k]);
    r.tangential1 = res[0];
    r.tangential2 = res[1];
    r.normal = u.dot(sg.normal);
    out.max_tangential = std::max({out.max_tangential, std::abs(res[0]), std::abs(res[1])});
    out.max_normal = std::max(out.max_normal, std::abs(r.normal));
    out.points.push_back(r);
  }
  return out;
}

struct GateOptions {
  double bc_tolerance = 1e-8;         // Navier residual below which a snapshot counts as consistent
  double relative_tolerance = 1e-9;   // slack on equality cases
};

struct TangentialBound {
  double max_violation = 0.0;  // max(0, |ω∥| − (β/ν + 2‖II‖)|u|)
  double max_ratio = 0.0;      // max |ω∥| / bound where the bound is positive
  double navier_residual = 0.0;
  bool asserted = false;
  bool holds = true;
  std::string reason;
};

inline nlohmann::json to_json(const TangentialBound& t) {
  return {{"max_violation", t.max_violation}, {"max_ratio", t.max_ratio}, {"navier_residual", t.navier_residual},
          {"asserted", t.asserted},           {"holds", t.holds},         {"reason", t.reason}};
}

/// |ω∥| ≤ (β/ν + 2‖II‖∞)|u| on Σ; asserted only when the snapshot satisfies the Navier condition.
inline TangentialBound tangential_vorticity_bound(const Snapshot& s, const GateOptions& gate = {}) {
  const Grid& g = *s.grid;
  const VectorField w = curl(s.u);
  const Interpolator I(g);
  const double II = surface_geometry(g.domain(), Vec3::Zero()).second_form_norm();
  const double k = s.beta / s.nu + 2.0 * II;
  TangentialBound out;
  out.navier_residual = navier_bc_residual(s).max();
  bool within = true;
  for (const auto& p : surface_quadrature(g)) {
    const Vec3 u = detail::sample_at(I, p, s.u), o = detail::sample_at(I, p, w);
    const Vec3 wpar = o - o.dot(p.n) * p.n;
    const double lhs = wpar.norm(), bound = k * u.norm();
    out.max_violation = std::max(out.max_violation, lhs - bound);
    if (bound > 0.0) out.max_ratio = std::max(out.max_ratio, lhs / bound);
    if (lhs > bound * (1.0 + gate.relative_tolerance)) within = false;
  }
  out.max_violation = std::max(out.max_violation, 0.0);
  out.asserted = out.navier_residual <= gate.bc_tolerance;
  if (!out.asserted) out.reason = "navier residual " + std::to_string(out.navier_residual) + " above tolerance";
  out.holds = within;
  return out;
}

// ---------------------------------------------------------------------------
// Inequality ledger
// ---------------------------------------------------------------------------

struct LedgerRow {
  std::string check;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;  // lhs − rhs; ≤ 0 (or within the band) when the inequality holds
  bool asserted = false;
  bool holds = true;
  nlohmann::json terms = nlohmann::json::object();
};

struct InequalityLedger {
  std::vector<LedgerRow> rows;
  nlohmann::json constants = nlohmann::json::object();  // fitted or proof constants
  std::string note;

  bool all_hold() const {
    for (const auto& r : rows)
      if (r.asserted && !r.holds) return false;
    return true;
  }
};

inline nlohmann::json to_json(const InequalityLedger& L) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : L.rows)
    rows.push_back({{"check", r.check},
                    {"t", r.t},
                    {"lhs", r.lhs},
                    {"rhs", r.rhs},
                    {"residual", r.residual},
                    {"asserted", r.asserted},
                    {"holds", r.holds},
                    {"terms", r.terms}});
  nlohmann::json j{{"rows", rows}, {"constants", L.constants}, {"all_hold", L.all_hold()}};
  if (!L.note.empty()) j["note"] = L.note;
  return j;
}

inline std::string to_csv(const InequalityLedger& L) {
  std::ostringstream os;
  os.precision(17);
  os << "check,t,lhs,rhs,residual,asserted,holds\n";
  for (const auto& r : L.rows)
    os << r.check << ',' << r.t << ',' << r.lhs << ',' << r.rhs << ',' << r.residual << ',' << r.asserted << ','
       << r.holds << '\n';
  return os.str();
}

/// ∫|∇u|² ≤ ‖II‖∞∫|u|² + ∫|ω|².
inline LedgerRow div_curl_check(const Snapshot& s, const GateOptions& gate = {}) {
  const auto N = global_norms(s);
  const double II = surface_geometry(s.grid->domain(), Vec3::Zero()).second_form_norm();
  LedgerRow r;
  r.check = "div-curl";
  r.t = s.t;
  r.lhs = N.grad_u;
  r.rhs = II * N.energy + N.enstrophy;
  r.residual = r.lhs - r.rhs;
  const double navier = navier_bc_residual(s).max();
  r.asserted = navier <= gate.bc_tolerance;
  r.holds = r.residual <= gate.relative_tolerance * std::max(r.lhs, r.rhs);
  r.terms = {{"grad_u", N.grad_u}, {"energy", N.energy}, {"enstrophy", N.enstrophy},
             {"second_form_norm", II}, {"navier_residual", navier}};
  return r;
}

/// ∫|∇∇u|² against ∫|∇ω|² + ∫|ω|² + ∫|u|²; the ratio is reported as c₅, never asserted.
inline LedgerRow second_derivative_ratio(const Snapshot& s) {
  const auto N = global_norms(s);
  LedgerRow r;
  r.check = "second-derivative";
  r.t = s.t;
  r.lhs = N.hessian_u;
  r.rhs = N.grad_omega + N.enstrophy + N.energy;
  r.residual = r.lhs - r.rhs;
  r.terms = {{"c5", r.rhs > 0.0 ? r.lhs / r.rhs : 0.0}};
  return r;
}

namespace detail {

// Three-point Lagrange derivative on a nonuniform time grid, one-sided at the ends.
inline std::vector<double> time_derivative(const std::vector<double>& t, const std::vector<double>& f) {
  const std::size_t n = t.size();
  if (n < 3) throw ParameterError("time derivative needs at least 3 snapshots");
  for (std::size_t k = 1; k < n; ++k)
    if (!(t[k] > t[k - 1])) throw ParameterError("snapshot times must be strictly increasing");
  auto d3 = [&](std::size_t a, std::size_t at) {
    const double t0 = t[a], t1 = t[a + 1], t2 = t[a + 2], x = t[at];
    const double l0 = ((x - t1) + (x - t2)) / ((t0 - t1) * (t0 - t2));
    const double l1 = ((x - t0) + (x - t2)) / ((t1 - t0) * (t1 - t2));
    const double l2 = ((x - t0) + (x - t1)) / ((t2 - t0) * (t2 - t1));
    return l0 * f[a] + l1 * f[a + 1] + l2 * f[a + 2];
  };
  std::vector<double> d(n);
  d[0] = d3(0, 0);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = d3(k - 1, k);
  d[n - 1] = d3(n - 3, n - 1);
  return d;
}

inline double series_dt(const std::vector<Snapshot>& s) {
  double dt = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < s.size(); ++k) dt = std::min(dt, s[k].t - s[k - 1].t);
  return dt;
}

}  // namespace detail

/// Tolerance band α·dt² + γ·h² on the energy defect.
struct EnergyBand {
  double alpha = 0.0;
  double gamma = 0.0;
  double safety = 2.0;
  double operator()(double dt, double h) const { return safety * (alpha * dt * dt + gamma * h * h); }
};

inline nlohmann::json to_json(const EnergyBand& b) {
  return {{"alpha", b.alpha}, {"gamma", b.gamma}, {"safety", b.safety}};
}

namespace detail {

struct EnergyTerms {
  std::vector<double> t, half_dEdt, dissipation, boundary_u;
};

inline EnergyTerms energy_terms(const std::vector<Snapshot>& series) {
  if (series.size() < 3) throw ParameterError("energy monitor needs at least 3 snapshots");
  EnergyTerms e;
  std::vector<double> E;
  for (const auto& s : series) {
    const auto N = global_norms(s);
    e.t.push_back(s.t);
    E.push_back(N.energy);
    e.dissipation.push_back(s.nu * N.grad_u);
    e.boundary_u.push_back(N.boundary_u);
  }
  e.half_dEdt = time_derivative(e.t, E);
  for (auto& v : e.half_dEdt) v *= 0.5;
  return e;
}

// max over steps of |½dE/dt + ν∫|∇u|² + β∫_Σ|u|²|, the energy balance of a flat-wall slip flow
inline double energy_defect(const std::vector<Snapshot>& series) {
  const auto e = energy_terms(series);
  double m = 0.0;
  for (std::size_t k = 0; k < e.t.size(); ++k)
    m = std::max(m, std::abs(e.half_dEdt[k] + e.dissipation[k] + series[k].beta * e.boundary_u[k]));
  return m;
}

}  // namespace detail

/// Fits α, γ ≥ 0 so the band passes through the defects of two refinement
/// levels; if the exact fit needs a negative coefficient, the cheaper of the
/// two single-term envelopes is used.
inline EnergyBand fit_energy_band(const std::vector<Snapshot>& coarse, const std::vector<Snapshot>& fine) {
  const double ec = detail::energy_defect(coarse), ef = detail::energy_defect(fine);
  const double tc = detail::series_dt(coarse), tf = detail::series_dt(fine);
  const double hc = coarse.front().grid->h(), hf = fine.front().grid->h();
  EnergyBand b;
  const double a11 = tc * tc, a12 = hc * hc, a21 = tf * tf, a22 = hf * hf;
  const double det = a11 * a22 - a12 * a21;
  if (std::abs(det) > 1e-12 * std::abs(a11 * a22)) {
    b.alpha = (ec * a22 - a12 * ef) / det;
    b.gamma = (a11 * ef - ec * a21) / det;
    if (b.alpha >= 0.0 && b.gamma >= 0.0) return b;
  }
  const double alpha_only = std::max(ec / a11, ef / a21), gamma_only = std::max(ec / a12, ef / a22);
  // compare the envelopes on the coarse level
  if (alpha_only * a11 <= gamma_only * a12) {
    b.alpha = alpha_only;
    b.gamma = 0.0;
  } else {
    b.alpha = 0.0;
    b.gamma = gamma_only;
  }
  return b;
}

/// ½d/dt∫|u|² + ν∫|∇u|² − c₁∫_Σ|u|² per snapshot, c₁ = β + 3ν‖II‖∞.
/// With a band the residual is asserted to stay below it; otherwise report-only.
inline InequalityLedger energy_inequality_monitor(const std::vector<Snapshot>& series,
                                                  const std::optional<EnergyBand>& band = {}) {
  const auto e = detail::energy_terms(series);
  const double II = surface_geometry(series.front().grid->domain(), Vec3::Zero()).second_form_norm();
  const double dt = detail::series_dt(series), h = series.front().grid->h();
  InequalityLedger L;
  for (std::size_t k = 0; k < e.t.size(); ++k) {
    const auto& s = series[k];
    const double c1 = s.beta + 3.0 * s.nu * II;
    LedgerRow r;
    r.check = "energy";
    r.t = e.t[k];
    r.lhs = e.half_dEdt[k] + e.dissipation[k] - c1 * e.boundary_u[k];
    r.rhs = 0.0;
    r.residual = r.lhs;
    r.asserted = band.has_value();
    r.holds = r.residual <= (band ? (*band)(dt, h) : 0.0);
    r.terms = {{"half_dEdt", e.half_dEdt[k]},
               {"dissipation", e.dissipation[k]},
               {"boundary_u", e.boundary_u[k]},
               {"c1", c1},
               {"defect", e.half_dEdt[k] + e.dissipation[k] + s.beta * e.boundary_u[k]}};
    L.rows.push_back(r);
  }
  L.constants["c1"] = series.front().beta + 3.0 * series.front().nu * II;
  if (band) {
    L.constants["band"] = to_json(*band);
    L.constants["band_value"] = (*band)(dt, h);
  }
  return L;
}

/// ½d/dt∫|ω|² + (ν/2)∫|∇ω|² − c₀∫_Σ(|∇u|² + |u|²) ≤ [Stretch] with the least
/// c₀ ≥ 0 satisfying every step. c₀ is infinite if some step needs it with
/// no boundary term available.
inline InequalityLedger enstrophy_inequality_monitor(const std::vector<Snapshot>& series) {
  if (series.size() < 3) throw ParameterError("enstrophy monitor needs at least 3 snapshots");
  std::vector<double> t, Om, diss, bnd, st;
  for (const auto& s : series) {
    const auto N = global_norms(s);
    t.push_back(s.t);
    Om.push_back(N.enstrophy);
    diss.push_back(0.5 * s.nu * N.grad_omega);
    bnd.push_back(N.boundary_grad_u + N.boundary_u);
    st.push_back(N.stretch);
  }
  auto half_dO = detail::time_derivative(t, Om);
  for (auto& v : half_dO) v *= 0.5;
  double c0 = 0.0;
  bool unbounded = false;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double need = half_dO[k] + diss[k] - st[k];
    if (need <= 0.0) continue;
    if (bnd[k] > 0.0) c0 = std::max(c0, need / bnd[k]);
    else unbounded = true;
  }
  if (unbounded) c0 = std::numeric_limits<double>::infinity();
  InequalityLedger L;
  for (std::size_t k = 0; k < t.size(); ++k) {
    LedgerRow r;
    r.check = "enstrophy";
    r.t = t[k];
    r.lhs = half_dO[k] + diss[k] - (unbounded ? 0.0 : c0 * bnd[k]);
    r.rhs = st[k];
    r.residual = r.lhs - r.rhs;
    r.asserted = false;  // c₀ is fitted, the rows show margins
    r.holds = unbounded ? false : r.residual <= 1e-12 * std::max({std::abs(r.lhs), std::abs(r.rhs), 1e-300});
    r.terms = {{"half_dOmega_dt", half_dO[k]}, {"half_nu_grad_omega", diss[k]}, {"boundary", bnd[k]}, {"stretch", st[k]}};
    L.rows.push_back(r);
  }
  L.constants["c0"] = unbounded ? nlohmann::json("inf") : nlohmann::json(c0);
  L.constants["boundary_stencil_order"] = 2;
  return L;
}

// ---------------------------------------------------------------------------
// Algebraic and geometric identities
// ---------------------------------------------------------------------------

/// [a×b⊗c + c⊗(a×b)] : (d⊗d) against 2⟨c,d⟩det(a, b, d).
inline std::pair<double, double> det_identity_check(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 ab = a.cross(b);
  const Mat3 M = outer(ab, c) + outer(c, ab);
  const double lhs = contract(M, outer(d, d));
  const double rhs = 2.0 * c.dot(d) * det3(a, b, d);
  return {lhs, rhs};
}

/// For η = φn with n the unit outward normal extended off Σ: ½n·∇|η|² − (∇·η)(η·n)
/// and H|η|², H = −∇·n = −(κ₁ + κ₂), by central differences of step δ at x ∈ Σ.
inline std::pair<double, double> normal_field_identity(const DomainSpec& dom, const Vec3& x,
                                                       const std::function<double(const Vec3&)>& phi,
                                                       double step = 1e-4) {
  auto eta = [&](const Vec3& y) -> Vec3 { return phi(y) * dom.outward_normal(y); };
  const Vec3 n = dom.outward_normal(x);
  Vec3 grad_e2;
  double div = 0.0;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e(a) = step;
    const Vec3 p = eta(x + e), m = eta(x - e);
    grad_e2(a) = (p.squaredNorm() - m.squaredNorm()) / (2.0 * step);
    div += (p(a) - m(a)) / (2.0 * step);
  }
  const Vec3 e0 = eta(x);
  const double lhs = 0.5 * n.dot(grad_e2) - div * e0.dot(n);
  const auto [k1, k2] = principal_curvatures(dom);
  return {lhs, -(k1 + k2) * e0.squaredNorm()};
}

}  // namespace slipgreen
