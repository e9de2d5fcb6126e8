#pragma once

// Phase-space (symmetric-ordering) sampling of vacuum, squeezed and
// coherent-plus-vacuum fields.
//
// Fourier modes are stored in physical units: a(k) = sqrt(V) alpha(k) with
// alpha a circular complex Gaussian of <|alpha|^2> = 1/2. In position space
// this is white noise with <|A|^2> = 1 / (2 dx dy dt), the symmetric-order
// moment of a field with [A(x), A^dag(x')] = delta(x - x').

#include <cstdint>
#include <random>

#include "holotele/kernel.hpp"
#include "holotele/lattice.hpp"

namespace holotele {

enum class StreamLabel : std::uint64_t {
  Opa1Vacuum = 1,
  Opa2Vacuum = 2,
  InputVacuum = 3,
};

struct RngSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t trial_index = 0;
};

struct CoherentInputSpec {
  cplx amplitude{0.0, 0.0};
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Per-trial stream seed: a pure function of (master seed, trial, label).
inline constexpr std::uint64_t stream_seed(const RngSpec& rng, StreamLabel label) noexcept {
  std::uint64_t h = splitmix64(rng.master_seed);
  h = splitmix64(h ^ rng.trial_index);
  return splitmix64(h ^ static_cast<std::uint64_t>(label));
}

inline std::mt19937_64 make_engine(const RngSpec& rng, StreamLabel label) {
  return std::mt19937_64(stream_seed(rng, label));
}

inline Role role_for(StreamLabel label) {
  switch (label) {
  case StreamLabel::Opa1Vacuum: return Role::Squeezed1;
  case StreamLabel::Opa2Vacuum: return Role::Squeezed2;
  case StreamLabel::InputVacuum: return Role::AIn;
  }
  return Role::AIn;
}

/// Ratio between stored Fourier values and dimensionless mode amplitudes.
inline double mode_scale(const SpaceTimeGrid& grid) { return std::sqrt(grid.volume()); }

inline FieldState sample_vacuum(const SpaceTimeGrid& grid, const RngSpec& rng, StreamLabel label) {
  auto engine = make_engine(rng, label);
  std::normal_distribution<double> quadrature(0.0, 0.5);
  const double scale = mode_scale(grid);
  FieldState out(grid, Domain::Fourier, role_for(label));
  for (auto& v : out.values) {
    const double re = quadrature(engine);
    const double im = quadrature(engine);
    v = scale * cplx{re, im};
  }
  return out;
}

/// s(k) = U(k) a(k) + V(k) a*(-k), reading only the input array.
inline FieldState apply_squeezing(const FieldState& vac, const SqueezingKernel& k) {
  require_domain(vac, Domain::Fourier, "apply_squeezing");
  require_same_grid(vac.grid, k.grid, "apply_squeezing");
  FieldState out(vac.grid, Domain::Fourier, k.opa_index == 1 ? Role::Squeezed1 : Role::Squeezed2);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const std::size_t j = conjugate_mode_index(vac.grid, i);
    out.values[i] = k.u[i] * vac.values[i] + k.v[i] * std::conj(vac.values[j]);
  }
  return out;
}

/// Vacuum plus a plane wave: the (0,0,0) bin carries amplitude * V, so the
/// position-domain ensemble mean equals `amplitude` at every pixel.
inline FieldState sample_coherent_input(const SpaceTimeGrid& grid, const CoherentInputSpec& spec,
                                        const RngSpec& rng) {
  auto out = sample_vacuum(grid, rng, StreamLabel::InputVacuum);
  out.values[0] += spec.amplitude * grid.volume();
  return out;
}

} // namespace holotele
