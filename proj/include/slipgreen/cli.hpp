// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Kept in a header so tests can drive `run` with
// captured streams instead of spawning the binary.
#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fftw3.h>

#include "CLI11.hpp"
#include "slipgreen/slipgreen.hpp"

namespace slipgreen::cli {

inline constexpr int exit_ok = 0, exit_validation = 2, exit_numerical = 3, exit_internal = 1;

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

/// Flat key=value lines; '#' starts a comment anywhere on a line.
inline std::map<std::string, std::string> parse_config(std::istream& in, const std::string& name = "config") {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigurationError(name + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    if (key.empty()) throw ConfigurationError(name + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw ConfigurationError(name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

inline std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigurationError("cannot open config file '" + path + "'");
  return parse_config(f, path);
}

/// Appends --key=value for config entries not already given as flags.
inline std::vector<std::string> merge_config(std::vector<std::string> args,
                                             const std::map<std::string, std::string>& cfg) {
  std::set<std::string> given;
  for (const auto& a : args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  for (const auto& [k, v] : cfg) {
    if (k == "config" || given.count(k)) continue;
    args.push_back("--" + k + "=" + v);
  }
  return args;
}

// ---------------------------------------------------------------------------
// Provenance and output
// ---------------------------------------------------------------------------

inline std::string fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

struct Params {
  // global
  std::string config_path, report_path, csv_path;
  int threads = 0;
  std::uint64_t seed = 20261014;
  // I/O
  std::string output, input;
  std::vector<std::string> inputs;
  // grid and physics
  std::vector<int> dims;
  double spacing = 0.0, height = 1.0;
  std::string domain = "half-space";
  double radius = 1.0;
  double beta = 1.0, nu = 1.0, u0 = 1.0;
  double rho = 1.0;
  double amplitude = 1.0, perturbation = 0.0, dt = 0.0;
  int steps = 0, save_every = 0;
  // boundary condition and kernel
  std::string bc = "navier";
  double a = -1.0, kappa1 = 0.0, kappa2 = 0.0;
  std::vector<double> b{0.0, 0.0, 1.0};
  std::string variant = "paper-exact";
  double calibration = 1.0, theta_tolerance = 1e-10;
  bool theta_table = true;
  std::vector<double> x{0.0, 0.0, 1.0}, y{0.3, 0.0, 0.5};
  double d4 = 0.25;
  int samples = 1000;
  double fd_step = 1e-3, min_separation = 0.1;
  // oracle
  int modes = 32;
  double slab_height = 0.0;  // 0: equal to the period
  double period = 2.0, z0 = 0.3, source_radius = 0.2, separation = 0.2;
  std::string top = "dirichlet-zero", source = "bump-pair";
  bool compare = false;
  int images = 2, stride = 0;
  // reconstruction
  int density = 1;
  double min_d2 = 0.0, d4_cap = 0.0;
  std::string singular = "lattice", vorticity = "auto";
  // diagnostics
  std::optional<double> lambda, rho_threshold;
  std::size_t pairs = 100000;
  double nn_radius = 4.0;
  std::optional<double> band_alpha, band_gamma;
  int surface_samples = 200;
  int quadruples = 10000;
};

class Run {
 public:
  Run(std::ostream& out, const Params& p) : out_(out), p_(p) {}

  std::string command;
  std::map<std::string, std::string> config;  // effective option values
  std::string kernel_variant = "none";

  std::string config_hash() const {
    std::string canon;
    for (const auto& [k, v] : config) canon += k + "=" + v + "\n";
    return fnv1a64(command + "\n" + canon);
  }

  nlohmann::json provenance() const {
    return {{"tool", "slipgreen"},
            {"version", slipgreen::version},
            {"command", command},
            {"config_hash", config_hash()},
            {"config", config},
            {"seed", p_.seed},
            {"kernel_variant", kernel_variant},
            {"libraries",
             {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"fftw", std::string(fftw_version)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION}}}};
  }

  void emit(nlohmann::json body) const {
    body["provenance"] = provenance();
    const std::string text = body.dump(2) + "\n";
    if (p_.report_path.empty()) {
      out_ << text;
    } else {
      write_text(p_.report_path, text);
    }
  }

  void emit_csv(const std::string& csv) const {
    if (!p_.csv_path.empty()) write_text(p_.csv_path, csv);
  }

  static void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigurationError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw ConfigurationError("write to '" + path + "' failed");
  }

 private:
  std::ostream& out_;
  const Params& p_;
};

// ---------------------------------------------------------------------------
// Helpers shared by commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::array<int, 3> dims3(const std::vector<int>& d) {
  if (d.size() != 3) throw ParameterError("--dims needs three comma-separated integers");
  for (int v : d)
    if (v < 3) throw ParameterError("every grid dimension must be >= 3");
  return {d[0], d[1], d[2]};
}

inline Vec3 vec3(const std::vector<double>& v, const char* what) {
  if (v.size() != 3) throw ParameterError(std::string(what) + " needs three comma-separated numbers");
  return {v[0], v[1], v[2]};
}

inline nlohmann::json jvec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

inline DomainSpec make_domain(const Params& p) {
  const DomainKind k = domain_kind_from_string(p.domain);
  switch (k) {
    case DomainKind::half_space: return DomainSpec::half_space();
    case DomainKind::ball: return DomainSpec::ball(p.radius);
    case DomainKind::cylinder: return DomainSpec::cylinder(p.radius);
    case DomainKind::channel: return DomainSpec::channel(p.height);
  }
  throw ParameterError("unknown domain");
}

inline ObliqueBC make_bc(const Params& p) {
  if (p.bc == "dirichlet") return ObliqueBC::dirichlet();
  if (p.bc == "navier") return navier_to_oblique(p.beta, p.nu, p.kappa1, p.kappa2);
  if (p.bc == "oblique") return ObliqueBC::uniform(p.a, vec3(p.b, "--b"));
  throw ParameterError("unknown boundary condition '" + p.bc + "'");
}

inline KernelOptions make_kernel(const Params& p) {
  KernelOptions k;
  k.variant = kernel_variant_from_string(p.variant);
  k.calibration = p.calibration;
  k.quadrature.tolerance = p.theta_tolerance;
  k.quadrature.validate();
  k.tabulated = p.theta_table;
  if (!std::isfinite(p.calibration)) throw ParameterError("calibration factor must be finite");
  return k;
}

inline nlohmann::json snapshot_summary(const Snapshot& s) {
  nlohmann::json h = snapshot_header(s);
  nlohmann::json meta = h["metadata"];
  meta.erase("provenance");
  h["metadata"] = meta;
  return h;
}

inline std::optional<VorticitySource> vorticity_source(const std::string& s) {
  if (s == "auto") return std::nullopt;
  if (s == "derived") return VorticitySource::derived;
  if (s == "stored") return VorticitySource::stored;
  throw ParameterError("unknown vorticity source '" + s + "'");
}

inline std::string series_name(const std::string& prefix, int k) {
  std::string base = prefix;
  if (base.size() > 4 && base.substr(base.size() - 4) == ".nsf") base.resize(base.size() - 4);
  std::ostringstream os;
  os << base << '_' << std::setw(4) << std::setfill('0') << k << ".nsf";
  return os.str();
}

inline void finish_snapshot(Snapshot& s, const Run& run) { s.metadata["provenance"] = run.provenance(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline void cmd_generate_shear(const Params& p, Run& run) {
  const auto d = detail::dims3(p.dims);
  const double h = p.spacing > 0.0 ? p.spacing : 1.0 / (d[2] - 1);
  GridPtr g;
  if (p.domain == "channel")
    g = make_channel_grid(d, h * (d[2] - 1));
  else if (p.domain == "half-space")
    g = make_grid(Vec3::Zero(), h, d, {true, true, false}, DomainSpec::half_space());
  else
    throw ParameterError("shear fixture needs --domain half-space or channel");
  Snapshot s = generate_shear(p.beta, p.nu, p.u0, g);
  const auto nr = navier_bc_residual(s);
  s.metadata["bc_residual"] = nr.max();
  s.metadata["navier_residual"] = to_json(nr);
  s.metadata["divergence_max"] = [&] {
    double m = 0.0;
    for (double v : divergence(s.u).v) m = std::max(m, std::abs(v));
    return m;
  }();
  detail::finish_snapshot(s, run);
  write_snapshot(p.output, s);
  run.emit({{"output", p.output}, {"snapshot", detail::snapshot_summary(s)}, {"bc_residual", nr.max()}});
}

inline void cmd_generate_taylor_green(const Params& p, Run& run) {
  const auto d = detail::dims3(p.dims);
  if (d[0] != d[1]) throw ParameterError("Taylor-Green box needs equal lateral dimensions");
  const double h = 2.0 * pi / d[0];
  auto g = make_grid(Vec3::Zero(), h, d, {true, true, true}, DomainSpec::half_space());
  Snapshot s = generate_taylor_green(g, p.nu, p.beta);
  const auto N = global_norms(s);
  s.metadata["energy"] = N.energy;
  s.metadata["energy_analytic"] = taylor_green_energy(d[2] * h);
  detail::finish_snapshot(s, run);
  write_snapshot(p.output, s);
  run.emit({{"output", p.output}, {"snapshot", detail::snapshot_summary(s)}, {"norms", to_json(N)}});
}

inline void cmd_generate_misaligned(const Params& p, Run& run) {
  const auto d = detail::dims3(p.dims);
  const double h = p.spacing > 0.0 ? p.spacing : 1.0 / d[0];
  auto g = make_grid(Vec3::Zero(), h, d, {true, true, false}, DomainSpec::half_space());
  Snapshot s = generate_misaligned(p.rho, g);
  detail::finish_snapshot(s, run);
  write_snapshot(p.output, s);
  run.emit({{"output", p.output}, {"snapshot", detail::snapshot_summary(s)}});
}

inline void cmd_generate_channel_run(const Params& p, Run& run) {
  const auto d = detail::dims3(p.dims);
  if (p.save_every < 0) throw ParameterError("--save-every must be >= 0");
  auto g = make_channel_grid(d, p.height);
  const Snapshot s0 = generate_channel_mode(p.beta, p.nu, g, p.amplitude, p.perturbation);
  const double lam = s0.metadata["lambda"];
  const double rate = p.nu * lam * lam;  // energy of the mode decays as e^{−2 rate t}
  ChannelStepper probe(g, p.nu, p.beta);
  double dt = p.dt;
  int n = p.steps;
  const double T = p.steps > 0 && p.dt > 0.0 ? p.steps * p.dt : 1.0 / rate;  // one e-fold of the amplitude
  if (dt <= 0.0) {
    if (n > 0) {
      dt = T / n;
    } else {
      const double lim = probe.max_dt(s0.u);
      n = int(std::ceil(T / (0.5 * lim)));
      dt = T / n;
    }
  } else if (n <= 0) {
    n = int(std::ceil(T / dt));
  }
  StepperOptions so;
  so.save_every = p.save_every > 0 ? p.save_every : std::max(1, n / 20);  // about 20 saved states
  ChannelStepper st(g, p.nu, p.beta, so);
  auto series = st.run(s0, dt, n);

  nlohmann::json files = nlohmann::json::array();
  double div_max = 0.0, un_max = 0.0;
  const double E0 = global_norms(series.front()).energy;
  for (std::size_t k = 0; k < series.size(); ++k) {
    auto& s = series[k];
    div_max = std::max(div_max, double(s.metadata.value("divergence_after_projection", 0.0)));
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i)
        un_max = std::max({un_max, std::abs(s.u.c[2][g->index(i, j, 0)]), std::abs(s.u.c[2][g->index(i, j, d[2] - 1)])});
    detail::finish_snapshot(s, run);
    const std::string name = detail::series_name(p.output, int(k));
    write_snapshot(name, s);
    files.push_back(name);
  }
  const double E1 = global_norms(series.back()).energy;
  const double t1 = series.back().t;
  const double measured = t1 > 0.0 ? -0.5 * std::log(E1 / E0) / t1 : 0.0;
  run.emit({{"files", files},
            {"lambda", lam},
            {"decay_rate_expected", rate},
            {"decay_rate_measured", measured},
            {"decay_rate_relative_error", measured / rate - 1.0},
            {"dt", dt},
            {"steps", n},
            {"max_divergence_after_projection", div_max},
            {"max_wall_normal_velocity", un_max}});
}

inline void cmd_kernel_eval(const Params& p, Run& run) {
  const ObliqueBC bc = detail::make_bc(p);
  const KernelOptions ko = detail::make_kernel(p);
  run.kernel_variant = to_string(ko.variant);
  const Vec3 x = detail::vec3(p.x, "--x"), y = detail::vec3(p.y, "--y");
  if (!(p.d4 > 0.0)) throw ParameterError("--d4 must be positive");
  const GreenEval e = green_eval(bc, x, y, p.d4, ko);
  nlohmann::json comps = nlohmann::json::array();
  for (int i = 0; i < 3; ++i) {
    nlohmann::json c{{"value", e.value(i, i)}, {"grad_x", detail::jvec(e.grad_x[i])}, {"near", e.near(i, i)},
                     {"far", e.far(i, i)}};
    const auto& cb = bc.component[i];
    if (cb.mode == BCMode::regular_oblique) c["theta"] = theta(cb.a, cb.b, x, reflect(y), ko.quadrature).value;
    comps.push_back(c);
  }
  run.emit({{"x", detail::jvec(x)}, {"y", detail::jvec(y)}, {"bc", to_json(bc)}, {"kernel", ko.to_json()},
            {"gamma", gamma(x, y)}, {"components", comps}});
}

inline void cmd_kernel_verify(const Params& p, Run& run) {
  const ObliqueBC bc = detail::make_bc(p);
  const KernelOptions ko = detail::make_kernel(p);
  run.kernel_variant = to_string(ko.variant);
  if (p.samples < 1) throw ParameterError("--samples must be >= 1");
  const auto pairs = random_pairs(std::size_t(p.samples), p.seed, p.min_separation);
  const KernelReport rep = verify_kernel(bc, pairs, p.fd_step, ko);
  run.emit({{"bc", to_json(bc)}, {"report", rep.to_json()}});
}

inline VectorField oracle_source(const Params& p, GridPtr g) {
  if (!(p.source_radius > 0.0) || !(p.z0 > 0.0)) throw ParameterError("source radius and height must be positive");
  if (p.source == "bump") {
    return sample_vector(g, [&](const Vec3& x) {
      const double b = compact_bump(x, Vec3(0.0, 0.0, p.z0), p.source_radius);
      return Vec3(b, b, b);
    });
  }
  if (p.source == "bump-pair") {
    return sample_vector(g, [&](const Vec3& x) {
      const double b = compact_bump(x, Vec3(p.separation, 0.0, p.z0), p.source_radius) -
                       compact_bump(x, Vec3(-p.separation, 0.0, p.z0), p.source_radius);
      return Vec3(b, b, b);
    });
  }
  throw ParameterError("unknown oracle source '" + p.source + "'");
}

inline void cmd_oracle_solve(const Params& p, Run& run) {
  SpectralSlab slab;
  slab.lateral_modes = p.modes;
  slab.period = p.period;
  slab.height = p.slab_height > 0.0 ? p.slab_height : p.period;
  const double ratio = slab.height / slab.spacing();
  if (std::abs(ratio - std::round(ratio)) > 1e-9) throw ParameterError("slab height must be a whole number of grid cells");
  slab.vertical_nodes = int(std::round(ratio)) + 1;
  if (p.top == "dirichlet-zero")
    slab.top = TopBoundary::dirichlet_zero;
  else if (p.top == "decay-matched")
    slab.top = TopBoundary::decay_matched;
  else
    throw ParameterError("unknown top boundary '" + p.top + "'");
  const ObliqueBC bc = detail::make_bc(p);
  auto g = slab.grid();
  const VectorField f = oracle_source(p, g);
  nlohmann::json body{{"bc", to_json(bc)},
                      {"slab",
                       {{"period", slab.period},
                        {"lateral_modes", slab.lateral_modes},
                        {"height", slab.height},
                        {"vertical_nodes", slab.vertical_nodes},
                        {"top", p.top}}},
                      {"source", {{"kind", p.source}, {"z0", p.z0}, {"radius", p.source_radius}}}};
  const VectorField u = solve_poisson_oblique(f, bc, slab);
  {
    const auto r = oblique_bc_residual(u, bc);
    body["bc_residual"] = {r[0], r[1], r[2]};
  }
  if (p.compare) {
    run.kernel_variant = "paper-exact";
    CrossCheckOptions co;
    co.lateral_images = p.images;
    co.target_stride = p.stride;
    co.tabulated = p.theta_table;
    body["cross_check"] = oracle_cross_check(f, bc, slab, co).to_json();
  }
  if (!p.output.empty()) {
    Snapshot s;
    s.grid = g;
    s.u = u;
    s.metadata = {{"generator", "oracle"}, {"bc", to_json(bc)}};
    detail::finish_snapshot(s, run);
    write_snapshot(p.output, s);
    body["output"] = p.output;
  }
  run.emit(body);
}

inline void cmd_reconstruct(const Params& p, Run& run) {
  const Snapshot s = read_snapshot(p.input);
  const Grid& g = *s.grid;
  ObliqueBC bc;
  if (p.bc == "navier") {
    const auto [k1, k2] = principal_curvatures(g.domain());
    bc = navier_to_oblique(s.beta, s.nu, k1, k2);
  } else {
    bc = detail::make_bc(p);
  }
  ReconstructionPlan plan;
  plan.bc = bc;
  plan.kernel = detail::make_kernel(p);
  run.kernel_variant = to_string(plan.kernel.variant);
  plan.singular.correction = singular_correction_from_string(p.singular);
  AtlasOptions ao;
  ao.min_d2 = p.min_d2;
  if (p.d4_cap > 0.0) ao.d4_cap = p.d4_cap;
  const Vec3 hi = g.position(g.dim(0) - 1, g.dim(1) - 1, g.dim(2) - 1);
  plan.atlas = build_atlas(g.domain(), Box{g.origin(), hi}, p.density, ao);
  if (p.stride < 0) throw ParameterError("--stride must be >= 0");
  const int st = std::max(1, p.stride);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto [i, j, k] = g.ijk(n);
    if (g.in_domain(n) && i % st == 0 && j % st == 0 && k % st == 0) plan.targets.push_back(n);
  }
  const auto src = resolve_source(s, detail::vorticity_source(p.vorticity));
  const VectorField w = vorticity(s, src);
  auto res = assemble_velocity(w, plan, &s.u);
  if (!p.output.empty()) {
    Snapshot out = s;
    out.u = res.u;
    out.omega.reset();
    out.metadata = {{"generator", "reconstruct"}, {"source", p.input}, {"report", res.report}};
    detail::finish_snapshot(out, run);
    write_snapshot(p.output, out);
  }
  run.emit({{"input", p.input}, {"report", res.report}});
}

inline AlignmentOptions alignment_options(const Params& p) {
  AlignmentOptions ao;
  ao.lambda = p.lambda;
  ao.random_pairs = p.pairs;
  ao.near_radius_cells = p.nn_radius;
  ao.seed = p.seed;
  ao.vorticity = detail::vorticity_source(p.vorticity);
  ao.validate();
  return ao;
}

inline void cmd_diagnose(const Params& p, Run& run) {
  const Snapshot s = read_snapshot(p.input);
  const AlignmentOptions ao = alignment_options(p);
  const AlignmentReport ar = coherence_rho(s, ao);
  const auto src = resolve_source(s, ao.vorticity);
  InequalityLedger ledger;
  ledger.rows.push_back(div_curl_check(s));
  ledger.rows.push_back(second_derivative_ratio(s));
  nlohmann::json body{{"input", p.input},
                      {"t", s.t},
                      {"vorticity_source", src == VorticitySource::stored ? "stored" : "derived"},
                      {"alignment", to_json(ar)},
                      {"norms", to_json(global_norms(s, src))},
                      {"stretch", stretch_term(s, src)},
                      {"navier_residual", to_json(navier_bc_residual(s))},
                      {"tangential_bound", to_json(tangential_vorticity_bound(s))},
                      {"ledger", to_json(ledger)}};
  if (p.rho_threshold) body["criterion"] = to_json(criterion_check({s}, *p.rho_threshold, ao));
  run.emit(body);
  run.emit_csv(to_csv(ar));
}

inline void cmd_monitor(const Params& p, Run& run) {
  if (p.inputs.empty()) throw ParameterError("monitor needs at least one snapshot");
  std::vector<Snapshot> series;
  for (const auto& f : p.inputs) series.push_back(read_snapshot(f));
  std::optional<EnergyBand> band;
  if (p.band_alpha || p.band_gamma) {
    if (!(p.band_alpha && p.band_gamma)) throw ParameterError("--band-alpha and --band-gamma go together");
    band = EnergyBand{*p.band_alpha, *p.band_gamma};
  }
  const auto en = energy_inequality_monitor(series, band);
  const auto es = enstrophy_inequality_monitor(series);
  nlohmann::json body{{"inputs", p.inputs}, {"energy", to_json(en)}, {"enstrophy", to_json(es)}};
  if (p.rho_threshold) body["criterion"] = to_json(criterion_check(series, *p.rho_threshold, alignment_options(p)));
  InequalityLedger all;
  all.rows = en.rows;
  all.rows.insert(all.rows.end(), es.rows.begin(), es.rows.end());
  run.emit(body);
  run.emit_csv(to_csv(all));
}

inline Vec3 random_boundary_point(const DomainSpec& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  switch (d.kind) {
    case DomainKind::ball: {
      Vec3 v;
      do v = {u(rng), u(rng), u(rng)};
      while (v.norm() < 0.1 || v.norm() > 1.0);
      return d.radius * v.normalized();
    }
    case DomainKind::cylinder: {
      const double phi = pi * u(rng);
      return {d.radius * std::cos(phi), d.radius * std::sin(phi), u(rng)};
    }
    case DomainKind::channel: return {u(rng), u(rng), u(rng) > 0.0 ? d.height : 0.0};
    case DomainKind::half_space: break;
  }
  return {u(rng), u(rng), 0.0};
}

inline void cmd_identity_check(const Params& p, Run& run) {
  if (p.quadruples < 1 || p.surface_samples < 0) throw ParameterError("sample counts must be positive");
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rv = [&] { return Vec3(u(rng), u(rng), u(rng)); };
  double worst = 0.0, worst_rel = 0.0;
  for (int k = 0; k < p.quadruples; ++k) {
    const Vec3 a = rv(), b = rv(), c = rv(), d = rv();
    const auto [l, r] = det_identity_check(a, b, c, d);
    worst = std::max(worst, std::abs(l - r));
    worst_rel = std::max(worst_rel, std::abs(l - r) / std::max(1.0, std::abs(r)));
  }
  const DomainSpec dom = detail::make_domain(p);
  const auto phi = [](const Vec3& x) { return 1.0 + x.x() * x.y() + 0.5 * x.z(); };
  double nworst = 0.0;
  for (int k = 0; k < p.surface_samples; ++k) {
    const auto [l, r] = normal_field_identity(dom, random_boundary_point(dom, rng), phi);
    nworst = std::max(nworst, std::abs(l - r));
  }
  run.emit({{"determinant_identity", {{"samples", p.quadruples}, {"max_abs_error", worst}, {"max_rel_error", worst_rel},
                                      {"holds", worst_rel <= 1e-12}}},
            {"mean_curvature_identity",
             {{"domain", to_json(dom)}, {"samples", p.surface_samples}, {"max_abs_error", nworst},
              {"holds", nworst <= 1e-6}}}});
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

inline void collect_options(const CLI::App* a, std::map<std::string, std::string>& kv) {
  static const std::set<std::string> skip{"help", "version", "config", "threads", "report", "csv"};
  for (const CLI::Option* o : a->get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || skip.count(name)) continue;
    std::string v;
    if (o->count() > 0) {
      for (std::size_t i = 0; i < o->results().size(); ++i) v += (i ? "," : "") + o->results()[i];
    } else {
      v = o->get_default_str();
    }
    kv[name] = v;
  }
  for (const CLI::App* s : a->get_subcommands()) collect_options(s, kv);
}

inline std::string command_path(const CLI::App* a) {
  std::string out;
  for (const CLI::App* s = a; !s->get_subcommands().empty();) {
    s = s->get_subcommands().front();
    out += (out.empty() ? "" : " ") + s->get_name();
  }
  return out;
}

}  // namespace detail

/// Runs one command; returns the process exit status.
inline int run(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
  Params p;
  CLI::App app{"slipgreen: half-space oblique Green's kernels, reconstruction and alignment diagnostics",
               "slipgreen"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", slipgreen::version);
  app.add_option("--config", p.config_path, "flat key=value file; flags override it");
  app.add_option("--threads", p.threads, "worker threads (default NSF_THREADS, else all)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", p.seed, "RNG seed, recorded in every report");
  app.add_option("--report", p.report_path, "write the JSON report here instead of stdout");
  app.add_option("--csv", p.csv_path, "also write a flat CSV table here");

  const std::vector<std::string> variants{"paper-exact", "oracle-calibrated", "dirichlet"};
  auto add_kernel = [&](CLI::App* c) {
    c->add_option("--variant", p.variant, "kernel variant")->check(CLI::IsMember(variants));
    c->add_option("--calibration", p.calibration, "Theta-term factor for oracle-calibrated");
    c->add_option("--theta-tol", p.theta_tolerance, "Theta quadrature tolerance")->check(CLI::PositiveNumber);
    c->add_flag("--theta-table,!--no-theta-table", p.theta_table, "tabulated Theta for b = e3");
  };
  auto add_bc = [&](CLI::App* c, bool physics) {
    c->add_option("--bc", p.bc, "boundary condition")->check(CLI::IsMember({"dirichlet", "navier", "oblique"}));
    c->add_option("--a", p.a, "oblique coefficient a <= 0");
    c->add_option("--b", p.b, "oblique direction (unit)")->delimiter(',')->expected(3);
    c->add_option("--kappa1", p.kappa1, "principal curvature 1");
    c->add_option("--kappa2", p.kappa2, "principal curvature 2");
    if (physics) {
      c->add_option("--beta", p.beta, "slip coefficient")->check(CLI::PositiveNumber);
      c->add_option("--nu", p.nu, "viscosity")->check(CLI::PositiveNumber);
    }
  };
  auto add_dims = [&](CLI::App* c, std::vector<int> def) {
    p.dims = def;
    c->add_option("--dims", p.dims, "grid nodes n1,n2,n3")->delimiter(',')->expected(3);
  };

  auto* gen = app.add_subcommand("generate", "write a fixture snapshot (.nsf)");
  gen->require_subcommand(1);
  auto* shear = gen->add_subcommand("shear", "affine Navier-slip shear");
  shear->add_option("--beta", p.beta)->check(CLI::PositiveNumber);
  shear->add_option("--nu", p.nu)->check(CLI::PositiveNumber);
  shear->add_option("--u0", p.u0, "shear rate U0");
  shear->add_option("--spacing", p.spacing, "grid spacing (0: 1/(n3-1))")->check(CLI::NonNegativeNumber);
  shear->add_option("--domain", p.domain)->check(CLI::IsMember({"half-space", "channel"}));
  shear->add_option("-o,--output", p.output)->required();
  auto* tg = gen->add_subcommand("taylor-green", "periodic Taylor-Green cell");
  tg->add_option("--beta", p.beta)->check(CLI::PositiveNumber);
  tg->add_option("--nu", p.nu)->check(CLI::PositiveNumber);
  tg->add_option("-o,--output", p.output)->required();
  auto* mis = gen->add_subcommand("misaligned", "vorticity turning with a set coherence modulus");
  mis->add_option("--rho", p.rho, "target coherence modulus")->check(CLI::NonNegativeNumber);
  mis->add_option("--spacing", p.spacing, "grid spacing (0: 1/n1)")->check(CLI::NonNegativeNumber);
  mis->add_option("-o,--output", p.output)->required();
  auto* chan = gen->add_subcommand("channel-run", "step the slip channel and write the series");
  chan->add_option("--beta", p.beta)->check(CLI::PositiveNumber);
  chan->add_option("--nu", p.nu)->check(CLI::PositiveNumber);
  chan->add_option("--height", p.height)->check(CLI::PositiveNumber);
  chan->add_option("--amplitude", p.amplitude);
  chan->add_option("--perturbation", p.perturbation);
  chan->add_option("--dt", p.dt, "time step (0: half the CFL limit)")->check(CLI::NonNegativeNumber);
  chan->add_option("--steps", p.steps, "steps (0: one e-fold)")->check(CLI::NonNegativeNumber);
  chan->add_option("--save-every", p.save_every, "keep every k-th state (0: about 20 states)")->check(CLI::NonNegativeNumber);
  chan->add_option("-o,--output", p.output, "file prefix; writes <prefix>_NNNN.nsf")->required();

  auto* kern = app.add_subcommand("kernel", "evaluate or verify the half-space Green's matrix");
  kern->require_subcommand(1);
  auto* keval = kern->add_subcommand("eval", "value, gradient and near/far split at one pair");
  add_bc(keval, true);
  add_kernel(keval);
  keval->add_option("--x", p.x, "target point")->delimiter(',')->expected(3);
  keval->add_option("--y", p.y, "source point")->delimiter(',')->expected(3);
  keval->add_option("--d4", p.d4, "cutoff radius")->check(CLI::PositiveNumber);
  auto* kver = kern->add_subcommand("verify", "PDE and boundary residuals over random pairs");
  add_bc(kver, true);
  add_kernel(kver);
  kver->add_option("--samples", p.samples)->check(CLI::PositiveNumber);
  kver->add_option("--fd-step", p.fd_step)->check(CLI::PositiveNumber);
  kver->add_option("--min-separation", p.min_separation)->check(CLI::PositiveNumber);

  auto* ora = app.add_subcommand("oracle", "spectral slab reference solver");
  ora->require_subcommand(1);
  auto* osolve = ora->add_subcommand("solve", "solve -Lap u = f for a bump source");
  add_bc(osolve, true);
  osolve->add_option("--modes", p.modes, "lateral modes (power of two)");
  osolve->add_option("--period", p.period)->check(CLI::PositiveNumber);
  osolve->add_option("--height", p.slab_height, "slab height (0: period)")->check(CLI::NonNegativeNumber);
  osolve->add_option("--top", p.top)->check(CLI::IsMember({"dirichlet-zero", "decay-matched"}));
  osolve->add_option("--source", p.source)->check(CLI::IsMember({"bump", "bump-pair"}));
  osolve->add_option("--z0", p.z0)->check(CLI::PositiveNumber);
  osolve->add_option("--source-radius", p.source_radius)->check(CLI::PositiveNumber);
  osolve->add_option("--separation", p.separation)->check(CLI::NonNegativeNumber);
  osolve->add_flag("--compare", p.compare, "cross-check against the kernel convolution");
  osolve->add_option("--images", p.images, "lateral image copies")->check(CLI::NonNegativeNumber);
  osolve->add_option("--stride", p.stride, "target stride (0: modes/16)")->check(CLI::NonNegativeNumber);
  osolve->add_flag("--theta-table,!--no-theta-table", p.theta_table);
  osolve->add_option("-o,--output", p.output, "write the solution as .nsf");

  auto* rec = app.add_subcommand("reconstruct", "velocity from vorticity via the localized representation");
  rec->add_option("input", p.input, "snapshot (.nsf)")->required();
  add_bc(rec, false);
  add_kernel(rec);
  rec->add_option("--density", p.density, "chart density")->check(CLI::PositiveNumber);
  rec->add_option("--min-d2", p.min_d2)->check(CLI::NonNegativeNumber);
  rec->add_option("--d4-cap", p.d4_cap, "upper bound on d4 (0: none)")->check(CLI::NonNegativeNumber);
  rec->add_option("--stride", p.stride, "target every stride-th node")->check(CLI::NonNegativeNumber);
  rec->add_option("--singular", p.singular)->check(CLI::IsMember({"lattice", "ball"}));
  rec->add_option("--vorticity", p.vorticity)->check(CLI::IsMember({"auto", "derived", "stored"}));
  rec->add_option("-o,--output", p.output, "write the reconstructed field as .nsf");

  auto* diag = app.add_subcommand("diagnose", "alignment, norms and boundary checks for one snapshot");
  diag->add_option("input", p.input, "snapshot (.nsf)")->required();
  diag->add_option("--lambda", p.lambda, "vorticity threshold (default 1e-6 max|w|)")->check(CLI::NonNegativeNumber);
  diag->add_option("--pairs", p.pairs, "random pairs");
  diag->add_option("--nn-radius", p.nn_radius, "near-pair radius in cells")->check(CLI::PositiveNumber);
  diag->add_option("--vorticity", p.vorticity)->check(CLI::IsMember({"auto", "derived", "stored"}));
  diag->add_option("--rho", p.rho_threshold, "criterion threshold")->check(CLI::NonNegativeNumber);

  auto* mon = app.add_subcommand("monitor", "energy and enstrophy ledgers over a time series");
  mon->add_option("inputs", p.inputs, "snapshots in time order")->required();
  mon->add_option("--band-alpha", p.band_alpha, "energy band dt^2 coefficient")->check(CLI::NonNegativeNumber);
  mon->add_option("--band-gamma", p.band_gamma, "energy band h^2 coefficient")->check(CLI::NonNegativeNumber);
  mon->add_option("--rho", p.rho_threshold, "criterion threshold")->check(CLI::NonNegativeNumber);
  mon->add_option("--lambda", p.lambda)->check(CLI::NonNegativeNumber);
  mon->add_option("--pairs", p.pairs);
  mon->add_option("--nn-radius", p.nn_radius)->check(CLI::PositiveNumber);
  mon->add_option("--vorticity", p.vorticity)->check(CLI::IsMember({"auto", "derived", "stored"}));

  auto* ident = app.add_subcommand("identity-check", "determinant and mean-curvature identities");
  ident->add_option("--samples", p.quadruples, "random quadruples")->check(CLI::PositiveNumber);
  ident->add_option("--surface-samples", p.surface_samples)->check(CLI::NonNegativeNumber);
  ident->add_option("--domain", p.domain)->check(CLI::IsMember({"half-space", "ball", "cylinder", "channel"}));
  ident->add_option("--radius", p.radius)->check(CLI::PositiveNumber);

  for (CLI::App* c : {shear, tg, mis, chan}) c->fallthrough();
  for (CLI::App* c : {gen, kern, ora}) c->fallthrough();
  for (CLI::App* c : {rec, diag, mon, ident, keval, kver, osolve}) c->fallthrough();
  add_dims(shear, {32, 32, 32});
  add_dims(tg, {32, 32, 32});
  add_dims(mis, {64, 64, 64});
  add_dims(chan, {8, 8, 17});
  p.dims.clear();

  std::vector<std::string> args(argv_in.begin() + (argv_in.empty() ? 0 : 1), argv_in.end());
  try {
    // the config file is read before parsing so that flags can override it
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) args = merge_config(args, read_config(args[i + 1]));
      else if (args[i].rfind("--config=", 0) == 0) args = merge_config(args, read_config(args[i].substr(9)));
      else continue;
      break;
    }
    if (!args.empty() && args[0].rfind("-", 0) != 0 && !app.get_subcommand_no_throw(args[0])) {
      err << "error: unknown command '" << args[0] << "'\n\n" << app.help();
      return exit_validation;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::CallForVersion&) {
    out << slipgreen::version << "\n";
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return exit_validation;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::numerical ? exit_numerical : exit_validation;
  }

  const std::string command = detail::command_path(&app);
  // per-command defaults that differ between subcommands
  if (p.dims.empty()) {
    if (shear->parsed() || tg->parsed()) p.dims = {32, 32, 32};
    else if (mis->parsed()) p.dims = {64, 64, 64};
    else p.dims = {8, 8, 17};
  }

  Run run(out, p);
  run.command = command;
  detail::collect_options(&app, run.config);
  // flags carry no default string; record the effective value
  for (const char* f : {"theta-table", "compare"})
    if (auto it = run.config.find(f); it != run.config.end())
      it->second = (std::string(f) == "compare" ? p.compare : p.theta_table) ? "true" : "false";
  try {
    int threads = p.threads;
    if (threads == 0)
      if (const char* env = std::getenv("NSF_THREADS")) {
        try {
          threads = std::stoi(env);
        } catch (const std::exception&) {
          throw ParameterError("NSF_THREADS must be an integer");
        }
        if (threads < 0) throw ParameterError("NSF_THREADS must be >= 0");
      }
    set_threads(threads);

    if (shear->parsed()) cmd_generate_shear(p, run);
    else if (tg->parsed()) cmd_generate_taylor_green(p, run);
    else if (mis->parsed()) cmd_generate_misaligned(p, run);
    else if (chan->parsed()) cmd_generate_channel_run(p, run);
    else if (keval->parsed()) cmd_kernel_eval(p, run);
    else if (kver->parsed()) cmd_kernel_verify(p, run);
    else if (osolve->parsed()) cmd_oracle_solve(p, run);
    else if (rec->parsed()) cmd_reconstruct(p, run);
    else if (diag->parsed()) cmd_diagnose(p, run);
    else if (mon->parsed()) cmd_monitor(p, run);
    else if (ident->parsed()) cmd_identity_check(p, run);
    else throw ParameterError("no command given");
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::numerical ? exit_numerical : exit_validation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return exit_internal;
  }
  return exit_ok;
}

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace slipgreen::cli
