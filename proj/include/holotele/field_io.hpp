#pragma once

// HFLD field dump container (little-endian):
//   "HFLD" | version u32 | Nx Ny Nt u32 | dx dy dt f64 | domain u32 | role u32
//   followed by Nx*Ny*Nt interleaved (re, im) f64 pairs, row-major (x, y, t).

#include <string>

#include "holotele/binary_io.hpp"
#include "holotele/lattice.hpp"

namespace holotele {

inline constexpr std::uint32_t kFieldFormatVersion = 1;

inline std::string encode_field(const FieldState& f) {
  std::string out;
  out.reserve(48 + 16 * f.values.size());
  binio::put_magic(out, "HFLD");
  binio::put_u32(out, kFieldFormatVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(f.grid.nx));
  binio::put_u32(out, static_cast<std::uint32_t>(f.grid.ny));
  binio::put_u32(out, static_cast<std::uint32_t>(f.grid.nt));
  binio::put_f64(out, f.grid.dx);
  binio::put_f64(out, f.grid.dy);
  binio::put_f64(out, f.grid.dt);
  binio::put_u32(out, static_cast<std::uint32_t>(f.domain));
  binio::put_u32(out, static_cast<std::uint32_t>(f.role));
  for (const auto& v : f.values) {
    binio::put_f64(out, v.real());
    binio::put_f64(out, v.imag());
  }
  return out;
}

inline FieldState decode_field(std::string_view bytes) {
  binio::Cursor cur(bytes);
  cur.expect_magic("HFLD");
  const auto version = cur.u32("version");
  if (version != kFieldFormatVersion)
    throw IoError("unsupported HFLD version " + std::to_string(version));
  SpaceTimeGrid g;
  g.nx = cur.u32("Nx");
  g.ny = cur.u32("Ny");
  g.nt = cur.u32("Nt");
  g.dx = cur.f64("dx");
  g.dy = cur.f64("dy");
  g.dt = cur.f64("dt");
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw IoError(std::string("HFLD header: ") + e.what());
  }
  const auto domain = cur.u32("domain tag");
  const auto role = cur.u32("role tag");
  if (domain > 1) throw IoError("HFLD: invalid domain tag " + std::to_string(domain));
  if (role > static_cast<std::uint32_t>(Role::Noise))
    throw IoError("HFLD: invalid role tag " + std::to_string(role));
  std::vector<cplx> values(g.size());
  for (auto& v : values) {
    const double re = cur.f64("field value");
    const double im = cur.f64("field value");
    v = {re, im};
  }
  if (cur.remaining() != 0)
    throw IoError("HFLD: " + std::to_string(cur.remaining()) + " trailing bytes");
  return FieldState(g, static_cast<Domain>(domain), static_cast<Role>(role), std::move(values));
}

inline void write_field(const std::string& path, const FieldState& f) {
  binio::write_file(path, encode_field(f));
}

inline FieldState read_field(const std::string& path) { return decode_field(binio::read_file(path)); }

} // namespace holotele
