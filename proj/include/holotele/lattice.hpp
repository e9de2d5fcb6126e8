#pragma once

// Space-time lattice, complex field containers and the Fourier transform pair
//
//   s(q, Omega) = sum_{rho,t} exp[i(Omega t - q.rho)] S(rho, t) dx dy dt
//   S(rho, t)   = (1/V) sum_{q,Omega} exp[-i(Omega t - q.rho)] s(q, Omega)
//
// with V = Nx dx Ny dy Nt dt. Space uses the "forward" sign and time the
// "backward" sign, so both are realized with one 3-D FFTW forward/backward
// transform plus a reflection of the time-frequency axis.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <fftw3.h>

#include "holotele/error.hpp"

namespace holotele {

using cplx = std::complex<double>;

/// Lattice position (ix, iy, it); in the Fourier domain the same triple
/// indexes (k_x, k_y, k_t) with wrap-around for negative frequencies.
struct LatticeIndex {
  std::size_t ix = 0;
  std::size_t iy = 0;
  std::size_t it = 0;

  friend bool operator==(const LatticeIndex&, const LatticeIndex&) = default;
};

struct SpaceTimeGrid {
  std::size_t nx = 1;
  std::size_t ny = 1;
  std::size_t nt = 1;
  double dx = 1.0;
  double dy = 1.0;
  double dt = 1.0;

  friend bool operator==(const SpaceTimeGrid&, const SpaceTimeGrid&) = default;

  void validate() const {
    if (nx < 1 || ny < 1 || nt < 1) throw ConfigError("grid dimensions must be >= 1");
    if (!(dx > 0.0) || !(dy > 0.0) || !(dt > 0.0) || !std::isfinite(dx) || !std::isfinite(dy) ||
        !std::isfinite(dt))
      throw ConfigError("grid spacings must be finite and > 0");
  }

  std::size_t size() const noexcept { return nx * ny * nt; }

  std::size_t linear(std::size_t ix, std::size_t iy, std::size_t it) const noexcept {
    return (ix * ny + iy) * nt + it;
  }
  std::size_t linear(const LatticeIndex& idx) const noexcept { return linear(idx.ix, idx.iy, idx.it); }

  LatticeIndex unravel(std::size_t linear_index) const noexcept {
    LatticeIndex idx;
    idx.it = linear_index % nt;
    idx.iy = (linear_index / nt) % ny;
    idx.ix = linear_index / (nt * ny);
    return idx;
  }

  double cell_volume() const noexcept { return dx * dy * dt; }
  double volume() const noexcept { return static_cast<double>(size()) * cell_volume(); }

  /// dq_x dq_y dOmega / (2 pi)^3; equals 1 / volume().
  double frequency_cell_measure() const noexcept { return 1.0 / volume(); }

  double dqx() const noexcept { return 2.0 * std::numbers::pi / (static_cast<double>(nx) * dx); }
  double dqy() const noexcept { return 2.0 * std::numbers::pi / (static_cast<double>(ny) * dy); }
  double domega() const noexcept { return 2.0 * std::numbers::pi / (static_cast<double>(nt) * dt); }

  /// Index k in [0, n) interpreted symmetrically: k <= n/2 is non-negative,
  /// the Nyquist index n/2 (even n) maps to +n/2.
  static std::int64_t signed_index(std::size_t k, std::size_t n) noexcept {
    return k <= n / 2 ? static_cast<std::int64_t>(k)
                      : static_cast<std::int64_t>(k) - static_cast<std::int64_t>(n);
  }

  double qx(std::size_t kx) const noexcept { return dqx() * static_cast<double>(signed_index(kx, nx)); }
  double qy(std::size_t ky) const noexcept { return dqy() * static_cast<double>(signed_index(ky, ny)); }
  double omega(std::size_t kt) const noexcept {
    return domega() * static_cast<double>(signed_index(kt, nt));
  }
  double q_norm(const LatticeIndex& k) const noexcept { return std::hypot(qx(k.ix), qy(k.iy)); }
};

/// Index of the mode at (-q, -Omega) under periodic wrap-around.
inline LatticeIndex conjugate_mode_index(const SpaceTimeGrid& grid, const LatticeIndex& k) noexcept {
  return {(grid.nx - k.ix) % grid.nx, (grid.ny - k.iy) % grid.ny, (grid.nt - k.it) % grid.nt};
}

inline std::size_t conjugate_mode_index(const SpaceTimeGrid& grid, std::size_t linear_index) noexcept {
  return grid.linear(conjugate_mode_index(grid, grid.unravel(linear_index)));
}

enum class Domain : std::uint32_t { Position = 0, Fourier = 1 };

enum class Role : std::uint32_t {
  AIn = 0,
  Squeezed1 = 1,
  Squeezed2 = 2,
  Epr1 = 3,
  Epr2 = 4,
  Bx = 5,
  Bp = 6,
  AOut = 7,
  Noise = 8,
};

inline const char* to_string(Domain d) { return d == Domain::Position ? "position" : "fourier"; }

inline const char* to_string(Role r) {
  switch (r) {
  case Role::AIn: return "a_in";
  case Role::Squeezed1: return "squeezed1";
  case Role::Squeezed2: return "squeezed2";
  case Role::Epr1: return "epr1";
  case Role::Epr2: return "epr2";
  case Role::Bx: return "b_x";
  case Role::Bp: return "b_p";
  case Role::AOut: return "a_out";
  case Role::Noise: return "noise";
  }
  return "unknown";
}

/// Complex field envelope sampled on the lattice, row-major (x, y, t).
struct FieldState {
  SpaceTimeGrid grid;
  Domain domain = Domain::Position;
  Role role = Role::AIn;
  std::vector<cplx> values;

  FieldState() = default;
  FieldState(const SpaceTimeGrid& g, Domain d, Role r)
      : grid(g), domain(d), role(r), values(g.size(), cplx{0.0, 0.0}) {}
  FieldState(const SpaceTimeGrid& g, Domain d, Role r, std::vector<cplx> v)
      : grid(g), domain(d), role(r), values(std::move(v)) {
    if (values.size() != grid.size())
      throw GridMismatch("field has " + std::to_string(values.size()) + " values, grid has " +
                         std::to_string(grid.size()) + " points");
  }

  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }
  cplx& at(const LatticeIndex& idx) { return values[grid.linear(idx)]; }
  const cplx& at(const LatticeIndex& idx) const { return values[grid.linear(idx)]; }
};

inline void require_same_grid(const SpaceTimeGrid& a, const SpaceTimeGrid& b, const char* where) {
  if (!(a == b)) throw GridMismatch(std::string(where) + ": grids differ");
}

inline void require_domain(const FieldState& f, Domain d, const char* where) {
  if (f.domain != d)
    throw UsageError(std::string(where) + ": expected " + to_string(d) + "-domain field, got " +
                     to_string(f.domain));
}

namespace detail {

/// Process-wide FFTW plan cache. Planning is serialized; execution through
/// fftw_execute_dft on caller-owned arrays is thread-safe. FFTW_UNALIGNED
/// makes the chosen codelets independent of buffer alignment, so results are
/// bit-reproducible across runs and processes.
class FftPlans {
public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(std::size_t nx, std::size_t ny, std::size_t nt, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(nx, ny, nt, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> scratch_in(nx * ny * nt), scratch_out(nx * ny * nt);
    fftw_plan plan = fftw_plan_dft_3d(
        static_cast<int>(nx), static_cast<int>(ny), static_cast<int>(nt),
        reinterpret_cast<fftw_complex*>(scratch_in.data()),
        reinterpret_cast<fftw_complex*>(scratch_out.data()), sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t, int>, fftw_plan> plans_;
};

inline void execute(const SpaceTimeGrid& g, int sign, std::span<const cplx> in, std::span<cplx> out) {
  fftw_plan plan = FftPlans::instance().get(g.nx, g.ny, g.nt, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

} // namespace detail

inline FieldState forward_transform(const FieldState& f) {
  require_domain(f, Domain::Position, "forward_transform");
  const auto& g = f.grid;
  std::vector<cplx> raw(g.size());
  detail::execute(g, FFTW_FORWARD, f.values, raw);
  FieldState out(g, Domain::Fourier, f.role);
  const double dv = g.cell_volume();
  for (std::size_t ix = 0; ix < g.nx; ++ix)
    for (std::size_t iy = 0; iy < g.ny; ++iy)
      for (std::size_t kt = 0; kt < g.nt; ++kt)
        out.values[g.linear(ix, iy, kt)] = dv * raw[g.linear(ix, iy, (g.nt - kt) % g.nt)];
  return out;
}

inline FieldState inverse_transform(const FieldState& f) {
  require_domain(f, Domain::Fourier, "inverse_transform");
  const auto& g = f.grid;
  std::vector<cplx> reflected(g.size());
  for (std::size_t ix = 0; ix < g.nx; ++ix)
    for (std::size_t iy = 0; iy < g.ny; ++iy)
      for (std::size_t kt = 0; kt < g.nt; ++kt)
        reflected[g.linear(ix, iy, (g.nt - kt) % g.nt)] = f.values[g.linear(ix, iy, kt)];
  FieldState out(g, Domain::Position, f.role);
  detail::execute(g, FFTW_BACKWARD, reflected, out.values);
  const double scale = 1.0 / g.volume();
  for (auto& v : out.values) v *= scale;
  return out;
}

/// Sum |S|^2 dx dy dt (position) or sum |s|^2 / V (Fourier); equal by Parseval.
inline double field_energy(const FieldState& f) {
  double sum = 0.0;
  for (const auto& v : f.values) sum += std::norm(v);
  return f.domain == Domain::Position ? sum * f.grid.cell_volume()
                                      : sum * f.grid.frequency_cell_measure();
}

} // namespace holotele
