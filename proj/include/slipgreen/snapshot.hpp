// Copyright 2026 The slipgreen Authors
// SPDX-License-Identifier: Apache-2.0
//
// Snapshots and the .nsf container:
//   "NSFSNAP1" | uint64 LE header length | UTF-8 JSON header | LE float64 payload
// The payload holds every stored field, component-major, x-fastest.
#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"

#include "slipgreen/grid.hpp"
#include "slipgreen/operators.hpp"

namespace slipgreen {

inline constexpr char nsf_magic[8] = {'N', 'S', 'F', 'S', 'N', 'A', 'P', '1'};
inline constexpr int nsf_version = 1;

struct Snapshot {
  GridPtr grid;
  VectorField u;
  std::optional<VectorField> omega;  // stored vorticity; diagnostics derive curl(u) unless told otherwise
  double nu = 1.0;
  double beta = 1.0;
  double t = 0.0;
  nlohmann::json metadata = nlohmann::json::object();
};

enum class VorticitySource { derived, stored };

inline VectorField vorticity(const Snapshot& s, VorticitySource src = VorticitySource::derived) {
  if (src == VorticitySource::stored) {
    if (!s.omega) throw ConfigurationError("snapshot has no stored vorticity");
    return *s.omega;
  }
  return curl(s.u);
}

/// max |ω − curl u| over domain nodes, or 0 when ω is not stored.
inline double vorticity_consistency(const Snapshot& s) {
  if (!s.omega) return 0.0;
  return max_abs_difference(*s.omega, curl(s.u));
}

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(char((v >> (8 * b)) & 0xff));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

inline void put_doubles(std::string& out, const std::vector<double>& v) {
  const std::size_t off = out.size();
  out.resize(off + 8 * v.size());
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + off, v.data(), 8 * v.size());
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(v[i]);
      for (int b = 0; b < 8; ++b) out[off + 8 * i + b] = char((bits >> (8 * b)) & 0xff);
    }
  }
}

inline void get_doubles(const unsigned char* p, std::vector<double>& v) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(v.data(), p, 8 * v.size());
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::bit_cast<double>(get_u64(p + 8 * i));
  }
}

}  // namespace detail

inline nlohmann::json snapshot_header(const Snapshot& s) {
  const Grid& g = *s.grid;
  nlohmann::json fields = nlohmann::json::array();
  fields.push_back({{"name", "u"}, {"components", 3}});
  if (s.omega) fields.push_back({{"name", "omega"}, {"components", 3}});
  return {{"format_version", nsf_version},
          {"dims", {g.dim(0), g.dim(1), g.dim(2)}},
          {"spacing", g.h()},
          {"origin", {g.origin().x(), g.origin().y(), g.origin().z()}},
          {"periodicity", {g.periodic(0), g.periodic(1), g.periodic(2)}},
          {"domain", to_json(g.domain())},
          {"nu", s.nu},
          {"beta", s.beta},
          {"t", s.t},
          {"stored_fields", fields},
          {"metadata", s.metadata}};
}

inline std::string encode_snapshot(const Snapshot& s) {
  std::string out(nsf_magic, 8);
  const std::string header = snapshot_header(s).dump();
  detail::put_u64(out, header.size());
  out += header;
  for (const auto& c : s.u.c) detail::put_doubles(out, c);
  if (s.omega)
    for (const auto& c : s.omega->c) detail::put_doubles(out, c);
  return out;
}

inline Snapshot decode_snapshot(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), nsf_magic, 8) != 0) throw FormatError("not an .nsf snapshot (bad magic)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t hlen = detail::get_u64(p + 8);
  if (hlen > bytes.size() - 16) throw FormatError("truncated .nsf header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(16, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed .nsf header: ") + e.what());
  }
  try {
    const int version = h.at("format_version").get<int>();
    if (version != nsf_version) throw UnsupportedVersionError("unsupported .nsf format version " + std::to_string(version));
    const auto dims = h.at("dims").get<std::array<int, 3>>();
    const auto origin = h.at("origin").get<std::array<double, 3>>();
    const auto per = h.at("periodicity").get<std::array<bool, 3>>();
    Snapshot s;
    s.grid = make_grid({origin[0], origin[1], origin[2]}, h.at("spacing").get<double>(), dims, per,
                       domain_from_json(h.at("domain")));
    s.nu = h.at("nu").get<double>();
    s.beta = h.at("beta").get<double>();
    s.t = h.at("t").get<double>();
    s.metadata = h.value("metadata", nlohmann::json::object());
    const std::size_t n = s.grid->size();
    std::size_t off = 16 + hlen;
    bool have_u = false;
    for (const auto& f : h.at("stored_fields")) {
      const std::string name = f.at("name").get<std::string>();
      if (f.at("components").get<int>() != 3) throw FormatError("field '" + name + "' must have 3 components");
      if (bytes.size() < off + 24 * n) throw FormatError("truncated .nsf payload");
      VectorField v(s.grid);
      for (auto& c : v.c) {
        detail::get_doubles(p + off, c);
        off += 8 * n;
      }
      if (name == "u") {
        s.u = std::move(v);
        have_u = true;
      } else if (name == "omega") {
        s.omega = std::move(v);
      } else {
        throw FormatError("unknown stored field '" + name + "'");
      }
    }
    if (!have_u) throw FormatError(".nsf snapshot has no velocity field");
    if (off != bytes.size()) throw FormatError("trailing bytes after .nsf payload");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad .nsf header field: ") + e.what());
  }
}

inline void write_snapshot(const std::string& path, const Snapshot& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigurationError("cannot open '" + path + "' for writing");
  const std::string bytes = encode_snapshot(s);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw ConfigurationError("write to '" + path + "' failed");
}

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigurationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_snapshot(ss.str());
}

}  // namespace slipgreen
