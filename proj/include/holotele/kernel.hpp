#pragma once

// Fourier-domain Bogoliubov kernels of the two OPAs,
//
//   s_m(q, Omega) = U_m(q, Omega) a_m(q, Omega) + V_m(q, Omega) a_m^dag(-q, -Omega),
//
// and the closed-form quantities that depend on them: squeezing degree r,
// ellipse orientation psi, the Green function G of the teleportation noise
// and the Victor out-spectrum.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "holotele/binary_io.hpp"
#include "holotele/lattice.hpp"

namespace holotele {

enum class KernelModel { FlatBand, GaussianBand, Tabulated };

inline const char* to_string(KernelModel m) {
  switch (m) {
  case KernelModel::FlatBand: return "flat";
  case KernelModel::GaussianBand: return "gaussian";
  case KernelModel::Tabulated: return "tabulated";
  }
  return "unknown";
}

struct KernelParams {
  KernelModel model = KernelModel::FlatBand;
  double r0 = 0.0;
  double q_c = std::numbers::pi;      // radians per length unit
  double omega_c = std::numbers::pi;  // radians per time unit
  double psi0 = 0.0;

  void validate() const {
    if (!(r0 >= 0.0) || !std::isfinite(r0)) throw ConfigError("kernel: r0 must be finite and >= 0");
    if (!(q_c > 0.0) || !std::isfinite(q_c)) throw ConfigError("kernel: q_c must be finite and > 0");
    if (!(omega_c > 0.0) || !std::isfinite(omega_c))
      throw ConfigError("kernel: omega_c must be finite and > 0");
    if (!std::isfinite(psi0)) throw ConfigError("kernel: psi0 must be finite");
  }

  double coherence_area() const { return std::pow(2.0 * std::numbers::pi / q_c, 2); }
  double coherence_time() const { return 2.0 * std::numbers::pi / omega_c; }

  /// Squeezing band |q| <= q_c/2, |Omega| <= omega_c/2 with a small relative
  /// slack so lattice points on the edge count as inside.
  bool in_band(double q_norm, double omega, double shrink = 1.0) const {
    constexpr double slack = 1.0 + 1e-12;
    return q_norm <= shrink * 0.5 * q_c * slack && std::abs(omega) <= shrink * 0.5 * omega_c * slack;
  }

  double squeezing_at(double q_norm, double omega) const {
    switch (model) {
    case KernelModel::FlatBand: return in_band(q_norm, omega) ? r0 : 0.0;
    case KernelModel::GaussianBand: {
      const double a = 2.0 * q_norm / q_c;
      const double b = 2.0 * omega / omega_c;
      return r0 * std::exp(-a * a - b * b);
    }
    case KernelModel::Tabulated: break;
    }
    throw KernelError("squeezing_at: tabulated kernels have no parametric form");
  }
};

struct SqueezingKernel {
  SpaceTimeGrid grid;
  std::vector<cplx> u;
  std::vector<cplx> v;
  int opa_index = 1;
};

/// Both OPA kernels; type-II operation means U1 = U2 and V1 = -V2.
struct KernelPair {
  SqueezingKernel opa1;
  SqueezingKernel opa2;

  const SpaceTimeGrid& grid() const { return opa1.grid; }
};

inline std::string describe_point(const SpaceTimeGrid& g, std::size_t i) {
  const auto k = g.unravel(i);
  std::ostringstream os;
  os << "(kx=" << k.ix << ", ky=" << k.iy << ", kt=" << k.it << "; qx=" << g.qx(k.ix)
     << ", qy=" << g.qy(k.iy) << ", omega=" << g.omega(k.it) << ")";
  return os.str();
}

/// Max relative deviation from |U|^2 - |V|^2 = 1 and the worst lattice point.
inline std::pair<double, std::size_t> canonical_identity_residual(const SqueezingKernel& k) {
  double worst = 0.0;
  std::size_t where = 0;
  for (std::size_t i = 0; i < k.u.size(); ++i) {
    const double nu = std::norm(k.u[i]);
    const double nv = std::norm(k.v[i]);
    const double rel = std::abs(nu - nv - 1.0) / std::max(1.0, nu + nv);
    if (rel > worst) {
      worst = rel;
      where = i;
    }
  }
  return {worst, where};
}

inline SqueezingKernel build_kernel(const KernelParams& params, const SpaceTimeGrid& grid, int opa_index) {
  params.validate();
  grid.validate();
  if (params.model == KernelModel::Tabulated)
    throw ConfigError("build_kernel: tabulated kernels are built with kernel_from_table");
  if (opa_index != 1 && opa_index != 2) throw ConfigError("build_kernel: opa_index must be 1 or 2");
  SqueezingKernel k{grid, std::vector<cplx>(grid.size()), std::vector<cplx>(grid.size()), opa_index};
  const double sign = opa_index == 1 ? 1.0 : -1.0;
  const cplx phase = std::polar(1.0, 2.0 * params.psi0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unravel(i);
    const double r = params.squeezing_at(grid.q_norm(idx), grid.omega(idx.it));
    k.u[i] = std::cosh(r);
    k.v[i] = sign * phase * std::sinh(r);
  }
  return k;
}

inline KernelPair build_kernel_pair(const KernelParams& params, const SpaceTimeGrid& grid) {
  return {build_kernel(params, grid, 1), build_kernel(params, grid, 2)};
}

/// r = log(|U| + |V|).
inline double squeezing_degree(const SqueezingKernel& k, std::size_t i) {
  return std::log(std::abs(k.u[i]) + std::abs(k.v[i]));
}

inline double squeezing_degree(const SqueezingKernel& k, const LatticeIndex& idx) {
  return squeezing_degree(k, k.grid.linear(idx));
}

/// psi = arg{U(q, Omega) V(-q, -Omega)} / 2 in (-pi/2, pi/2]; empty where
/// V(-q, -Omega) = 0 and the ellipse orientation is undefined.
inline std::optional<double> orientation_angle(const SqueezingKernel& k, std::size_t i) {
  const cplx v_conj = k.v[conjugate_mode_index(k.grid, i)];
  if (std::abs(v_conj) == 0.0) return std::nullopt;
  return 0.5 * std::arg(k.u[i] * v_conj);
}

inline std::optional<double> orientation_angle(const SqueezingKernel& k, const LatticeIndex& idx) {
  return orientation_angle(k, k.grid.linear(idx));
}

/// e^{-2r} cos^2 psi + e^{2r} sin^2 psi; the orientation is irrelevant at r = 0.
inline double green_from_r_psi(double r, std::optional<double> psi) {
  if (!psi) return std::exp(-2.0 * r);
  const double c = std::cos(*psi);
  const double s = std::sin(*psi);
  return std::exp(-2.0 * r) * c * c + std::exp(2.0 * r) * s * s;
}

/// Throws KernelError naming the worst point if U1 != U2 or V1 != -V2.
inline void check_type_ii_symmetry(const KernelPair& pair, double tol = 1e-12) {
  require_same_grid(pair.opa1.grid, pair.opa2.grid, "type-II symmetry");
  double worst = 0.0;
  std::size_t where = 0;
  for (std::size_t i = 0; i < pair.opa1.u.size(); ++i) {
    const double scale = std::max(1.0, std::abs(pair.opa1.u[i]) + std::abs(pair.opa1.v[i]));
    const double du = std::abs(pair.opa1.u[i] - pair.opa2.u[i]) / scale;
    const double dv = std::abs(pair.opa1.v[i] + pair.opa2.v[i]) / scale;
    const double d = std::max(du, dv);
    if (d > worst) {
      worst = d;
      where = i;
    }
  }
  if (worst > tol) {
    std::ostringstream os;
    os << "type-II symmetry U1 = U2, V1 = -V2 violated by " << worst << " at "
       << describe_point(pair.grid(), where);
    throw KernelError(os.str());
  }
}

struct GreenKernel {
  SpaceTimeGrid grid;
  std::vector<double> g;
};

/// G(q, Omega) = |U(q, Omega) - V*(-q, -Omega)|^2.
inline GreenKernel green_kernel(const KernelPair& pair) {
  check_type_ii_symmetry(pair);
  const auto& k = pair.opa1;
  GreenKernel out{k.grid, std::vector<double>(k.u.size())};
  for (std::size_t i = 0; i < k.u.size(); ++i)
    out.g[i] = std::norm(k.u[i] - std::conj(k.v[conjugate_mode_index(k.grid, i)]));
  return out;
}

/// Largest lattice residual of the equal-point commutators of F = E2 + E1^dag,
/// [f(k), f^dag(k)] and [f(k), f(-k)], in units of the vacuum commutator. With
/// c_m = |U_m|^2 - |V_m|^2 and w_m(k) = U_m(k) V_m(-k) - V_m(k) U_m(-k):
///
///   normal(k)    = (c1 + c2)(k)/2 - (c1 + c2)(-k)/2 + Re(w2 - w1)(k)
///   anomalous(k) = Re(w1 + w2)(k) + (c2 - c1)(k)/2 - (c2 - c1)(-k)/2
///
/// Both vanish for any pair of proper Bogoliubov kernels; they do not depend
/// on the type-II relation itself.
inline double noise_commutator_check(const KernelPair& pair) {
  require_same_grid(pair.opa1.grid, pair.opa2.grid, "noise_commutator_check");
  const auto& g = pair.grid();
  auto c = [](const SqueezingKernel& k, std::size_t i) { return std::norm(k.u[i]) - std::norm(k.v[i]); };
  auto w = [&](const SqueezingKernel& k, std::size_t i) {
    const std::size_t j = conjugate_mode_index(g, i);
    return k.u[i] * k.v[j] - k.v[i] * k.u[j];
  };
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t j = conjugate_mode_index(g, i);
    const double c1 = c(pair.opa1, i), c2 = c(pair.opa2, i);
    const double c1m = c(pair.opa1, j), c2m = c(pair.opa2, j);
    const cplx w1 = w(pair.opa1, i), w2 = w(pair.opa2, i);
    const double normal = 0.5 * (c1 + c2) - 0.5 * (c1m + c2m) + std::real(w2 - w1);
    const double anomalous = std::real(w1 + w2) + 0.5 * (c2 - c1) - 0.5 * (c2m - c1m);
    worst = std::max({worst, std::abs(normal), std::abs(anomalous)});
  }
  return worst;
}

/// Victor's out-spectrum: in + 2 A0^2 (e^{-2r} cos^2 psi + e^{2r} sin^2 psi).
/// The local-oscillator phase phi does not enter.
inline std::vector<double> analytic_out_spectrum(const KernelPair& pair, double phi,
                                                 const std::vector<double>& in_spectrum, double a0) {
  (void)phi;
  const auto& k = pair.opa1;
  if (in_spectrum.size() != k.u.size()) throw GridMismatch("analytic_out_spectrum: size mismatch");
  std::vector<double> out(in_spectrum.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = in_spectrum[i] +
             2.0 * a0 * a0 * green_from_r_psi(squeezing_degree(k, i), orientation_angle(k, i));
  return out;
}

/// Copy of a type-II pair whose OPA2 kernel keeps V2 = -V1 only on half of
/// the lattice (V2 = +V1 on the mirror half). Used to exercise the failure
/// path of the commutator verification.
inline KernelPair with_broken_type_ii_symmetry(KernelPair pair) {
  const auto& g = pair.grid();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t j = conjugate_mode_index(g, i);
    if (i < j) pair.opa2.v[i] = pair.opa1.v[i];
  }
  return pair;
}

// ---------------------------------------------------------------------------
// Tabulated kernels: HKRN container (little-endian)
//   "HKRN" | version u32 | Nqx Nqy NOmega u32 | dq_x dq_y dOmega f64
//   then U then V as interleaved (re, im) f64, row-major (qx, qy, Omega),
//   frequency indices in FFT order (non-negative first, then negative).

inline constexpr std::uint32_t kKernelFormatVersion = 1;

struct KernelTable {
  std::size_t nqx = 0, nqy = 0, nomega = 0;
  double dqx = 0.0, dqy = 0.0, domega = 0.0;
  std::vector<cplx> u;
  std::vector<cplx> v;
};

inline std::string encode_kernel_table(const KernelTable& t) {
  std::string out;
  binio::put_magic(out, "HKRN");
  binio::put_u32(out, kKernelFormatVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(t.nqx));
  binio::put_u32(out, static_cast<std::uint32_t>(t.nqy));
  binio::put_u32(out, static_cast<std::uint32_t>(t.nomega));
  binio::put_f64(out, t.dqx);
  binio::put_f64(out, t.dqy);
  binio::put_f64(out, t.domega);
  for (const auto* arr : {&t.u, &t.v})
    for (const auto& z : *arr) {
      binio::put_f64(out, z.real());
      binio::put_f64(out, z.imag());
    }
  return out;
}

inline KernelTable decode_kernel_table(std::string_view bytes) {
  binio::Cursor cur(bytes);
  cur.expect_magic("HKRN");
  const auto version = cur.u32("version");
  if (version != kKernelFormatVersion)
    throw IoError("unsupported HKRN version " + std::to_string(version));
  KernelTable t;
  t.nqx = cur.u32("Nqx");
  t.nqy = cur.u32("Nqy");
  t.nomega = cur.u32("NOmega");
  t.dqx = cur.f64("dq_x");
  t.dqy = cur.f64("dq_y");
  t.domega = cur.f64("dOmega");
  const std::size_t n = t.nqx * t.nqy * t.nomega;
  if (n == 0) throw IoError("HKRN: empty lattice");
  for (auto* arr : {&t.u, &t.v}) {
    arr->resize(n);
    for (auto& z : *arr) {
      const double re = cur.f64("kernel value");
      const double im = cur.f64("kernel value");
      z = {re, im};
    }
  }
  if (cur.remaining() != 0) throw IoError("HKRN: " + std::to_string(cur.remaining()) + " trailing bytes");
  return t;
}

inline KernelTable read_kernel_table(const std::string& path) {
  return decode_kernel_table(binio::read_file(path));
}

inline void write_kernel_table(const std::string& path, const KernelTable& t) {
  binio::write_file(path, encode_kernel_table(t));
}

inline KernelTable table_from_kernel(const SqueezingKernel& k) {
  return {k.grid.nx, k.grid.ny, k.grid.nt, k.grid.dqx(), k.grid.dqy(), k.grid.domega(), k.u, k.v};
}

/// Tolerance on |U|^2 - |V|^2 = 1 for externally supplied tables.
inline constexpr double kTabulatedCanonicalTolerance = 1e-6;

/// Builds the OPA kernel from a table describing OPA1; OPA2 gets V -> -V.
inline SqueezingKernel kernel_from_table(const KernelTable& t, const SpaceTimeGrid& grid, int opa_index) {
  grid.validate();
  if (opa_index != 1 && opa_index != 2) throw ConfigError("kernel_from_table: opa_index must be 1 or 2");
  if (t.nqx != grid.nx || t.nqy != grid.ny || t.nomega != grid.nt)
    throw KernelError("tabulated kernel lattice " + std::to_string(t.nqx) + "x" + std::to_string(t.nqy) +
                      "x" + std::to_string(t.nomega) + " does not match grid");
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); };
  if (!close(t.dqx, grid.dqx()) || !close(t.dqy, grid.dqy()) || !close(t.domega, grid.domega()))
    throw KernelError("tabulated kernel frequency spacing does not match grid");
  SqueezingKernel k{grid, t.u, t.v, opa_index};
  const auto [worst, where] = canonical_identity_residual(k);
  if (worst > kTabulatedCanonicalTolerance) {
    std::ostringstream os;
    os << "tabulated kernel violates |U|^2 - |V|^2 = 1: relative residual " << worst << " at "
       << describe_point(grid, where) << " (|U|^2 - |V|^2 = "
       << std::norm(k.u[where]) - std::norm(k.v[where]) << ")";
    throw KernelError(os.str());
  }
  if (opa_index == 2)
    for (auto& z : k.v) z = -z;
  return k;
}

inline KernelPair kernel_pair_from_table(const KernelTable& t, const SpaceTimeGrid& grid) {
  return {kernel_from_table(t, grid, 1), kernel_from_table(t, grid, 2)};
}

} // namespace holotele
