#pragma once

// The teleportation chain: EPR beams from two squeezed fields, Alice's
// homodyne photocurrents, Bob's modulation and recombination, and the added
// noise field F = E2 + E1^dag.

#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

#include "holotele/kernel.hpp"
#include "holotele/lattice.hpp"
#include "holotele/stochastic.hpp"

namespace holotele {

struct ProtocolParams {
  double b0 = 1.0;
  double g = std::numbers::sqrt2 / 2.0;
  double a0 = 1.0;

  /// g B0 sqrt(2) = 1.
  static ProtocolParams teleporting(double b0 = 1.0, double a0 = 1.0) {
    ProtocolParams p{b0, 1.0 / (b0 * std::numbers::sqrt2), a0};
    p.validate();
    return p;
  }

  /// Explicit gain for gain-mismatch experiments.
  static ProtocolParams with_gain(double b0, double g, double a0 = 1.0) {
    ProtocolParams p{b0, g, a0};
    p.validate();
    return p;
  }

  void validate() const {
    if (!(b0 > 0.0) || !std::isfinite(b0)) throw ConfigError("protocol: B0 must be finite and > 0");
    if (!(a0 > 0.0) || !std::isfinite(a0)) throw ConfigError("protocol: A0 must be finite and > 0");
    if (!std::isfinite(g)) throw ConfigError("protocol: g must be finite");
  }

  bool satisfies_gain_condition(double tol = 1e-12) const {
    return std::abs(g * b0 * std::numbers::sqrt2 - 1.0) <= tol;
  }
};

/// (1/sqrt 2) [[1, 1], [-1, 1]], used for BS1 and BS2.
struct BeamSplitterMatrix {
  static constexpr double kScale = std::numbers::sqrt2 / 2.0;
  static constexpr double r[2][2] = {{kScale, kScale}, {-kScale, kScale}};

  static std::pair<cplx, cplx> apply(cplx in1, cplx in2) {
    return {r[0][0] * in1 + r[0][1] * in2, r[1][0] * in1 + r[1][1] * in2};
  }
};

struct PhotocurrentFrame {
  SpaceTimeGrid grid;
  std::vector<double> i_x;
  std::vector<double> i_p;
  std::uint64_t trial_index = 0;
};

/// E1 = (S1 + S2)/sqrt 2, E2 = (-S1 + S2)/sqrt 2.
inline std::pair<FieldState, FieldState> make_epr(const FieldState& s1, const FieldState& s2) {
  require_same_grid(s1.grid, s2.grid, "make_epr");
  if (s1.domain != s2.domain) throw UsageError("make_epr: fields are in different domains");
  FieldState e1(s1.grid, s1.domain, Role::Epr1);
  FieldState e2(s1.grid, s1.domain, Role::Epr2);
  for (std::size_t i = 0; i < s1.values.size(); ++i)
    std::tie(e1.values[i], e2.values[i]) = BeamSplitterMatrix::apply(s1.values[i], s2.values[i]);
  return {std::move(e1), std::move(e2)};
}

/// Mixes A_in with E1 on BS2 and returns the per-pixel balanced-homodyne
/// photocurrents i_x = 2 B0 Re B_x, i_p = 2 B0 Im B_p.
inline PhotocurrentFrame alice_stage(const FieldState& a_in, const FieldState& e1, const ProtocolParams& p) {
  require_domain(a_in, Domain::Position, "alice_stage");
  require_domain(e1, Domain::Position, "alice_stage");
  require_same_grid(a_in.grid, e1.grid, "alice_stage");
  const std::size_t n = a_in.values.size();
  PhotocurrentFrame frame{a_in.grid, std::vector<double>(n), std::vector<double>(n), 0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto [bx, bp] = BeamSplitterMatrix::apply(a_in.values[i], e1.values[i]);
    frame.i_x[i] = 2.0 * p.b0 * bx.real();
    frame.i_p[i] = 2.0 * p.b0 * bp.imag();
  }
  return frame;
}

/// A_out = E2 + g (i_x - i i_p).
inline FieldState bob_stage(const PhotocurrentFrame& frame, const FieldState& e2, const ProtocolParams& p) {
  require_domain(e2, Domain::Position, "bob_stage");
  require_same_grid(frame.grid, e2.grid, "bob_stage");
  if (frame.i_x.size() != e2.values.size() || frame.i_p.size() != e2.values.size())
    throw GridMismatch("bob_stage: frame size does not match grid");
  FieldState out(e2.grid, Domain::Position, Role::AOut);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = e2.values[i] + p.g * cplx{frame.i_x[i], -frame.i_p[i]};
  return out;
}

/// F = E2 + E1* (c-number form of E2 + E1^dag).
inline FieldState noise_field(const FieldState& e1, const FieldState& e2) {
  require_same_grid(e1.grid, e2.grid, "noise_field");
  require_domain(e1, Domain::Position, "noise_field");
  require_domain(e2, Domain::Position, "noise_field");
  FieldState f(e1.grid, Domain::Position, Role::Noise);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = e2.values[i] + std::conj(e1.values[i]);
  return f;
}

/// How photocurrents cross the classical channel.
enum class ChannelModel {
  Exact,        // double precision, no loss
  Float32Wire,  // rounded to the 32-bit floats of the frame stream
};

inline void quantize_to_wire(PhotocurrentFrame& frame) {
  for (auto* arr : {&frame.i_x, &frame.i_p})
    for (auto& v : *arr) v = static_cast<double>(static_cast<float>(v));
}

struct TeleportConfig {
  SpaceTimeGrid grid;
  std::shared_ptr<const KernelPair> kernels;
  ProtocolParams protocol = ProtocolParams::teleporting();
  CoherentInputSpec input;
  ChannelModel channel = ChannelModel::Exact;

  void validate() const {
    grid.validate();
    protocol.validate();
    if (!kernels) throw ConfigError("teleport config: no kernels");
    require_same_grid(grid, kernels->grid(), "teleport config");
    if (!std::isfinite(input.amplitude.real()) || !std::isfinite(input.amplitude.imag()))
      throw ConfigError("input amplitude must be finite");
  }
};

struct EprHalves {
  FieldState e1;
  FieldState e2;
};

/// Samples both OPA vacua for the trial and returns the position-domain EPR
/// beams. Alice and Bob each call this with the shared seed.
inline EprHalves make_epr_beams(const TeleportConfig& cfg, const RngSpec& rng) {
  const auto s1 = apply_squeezing(sample_vacuum(cfg.grid, rng, StreamLabel::Opa1Vacuum), cfg.kernels->opa1);
  const auto s2 = apply_squeezing(sample_vacuum(cfg.grid, rng, StreamLabel::Opa2Vacuum), cfg.kernels->opa2);
  auto [e1, e2] = make_epr(inverse_transform(s1), inverse_transform(s2));
  return {std::move(e1), std::move(e2)};
}

inline FieldState make_input_field(const TeleportConfig& cfg, const RngSpec& rng) {
  return inverse_transform(sample_coherent_input(cfg.grid, cfg.input, rng));
}

struct TrialRecord {
  FieldState a_in;
  FieldState a_out;
  PhotocurrentFrame frame;
  FieldState f;
};

inline TrialRecord run_teleport(const TeleportConfig& cfg, const RngSpec& rng) {
  auto epr = make_epr_beams(cfg, rng);
  auto a_in = make_input_field(cfg, rng);
  auto frame = alice_stage(a_in, epr.e1, cfg.protocol);
  frame.trial_index = rng.trial_index;
  if (cfg.channel == ChannelModel::Float32Wire) quantize_to_wire(frame);
  auto a_out = bob_stage(frame, epr.e2, cfg.protocol);
  auto f = noise_field(epr.e1, epr.e2);
  return {std::move(a_in), std::move(a_out), std::move(frame), std::move(f)};
}

} // namespace holotele
