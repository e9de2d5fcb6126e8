#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "holotele/protocol.hpp"

using namespace holotele;

namespace {

const SpaceTimeGrid kGrid{4, 4, 8, 1.0, 1.0, 1.0};

FieldState random_position(std::uint64_t seed, Role role) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  FieldState f(kGrid, Domain::Position, role);
  for (auto& v : f.values) v = {n(rng), n(rng)};
  return f;
}

TeleportConfig make_config(double r0, cplx amplitude = {}) {
  KernelParams p;
  p.r0 = r0;
  TeleportConfig c;
  c.grid = kGrid;
  c.kernels = std::make_shared<const KernelPair>(build_kernel_pair(p, kGrid));
  c.input = {amplitude};
  return c;
}

} // namespace

TEST(Protocol, GainCondition) {
  const auto p = ProtocolParams::teleporting(2.5);
  EXPECT_TRUE(p.satisfies_gain_condition());
  EXPECT_NEAR(p.g, 1.0 / (2.5 * std::sqrt(2.0)), 1e-15);
  EXPECT_FALSE(ProtocolParams::with_gain(1.0, 1.0).satisfies_gain_condition());
  EXPECT_THROW(ProtocolParams::teleporting(0.0), ConfigError);
  EXPECT_THROW(ProtocolParams::with_gain(1.0, 1.0, -1.0), ConfigError);
}

TEST(Protocol, BeamSplitterIsUnitary) {
  const auto& r = BeamSplitterMatrix::r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double dot = r[i][0] * r[j][0] + r[i][1] * r[j][1];
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-15);
    }
  const auto [a, b] = BeamSplitterMatrix::apply({1.0, 2.0}, {-0.5, 0.25});
  EXPECT_NEAR(std::norm(a) + std::norm(b), 5.0 + 0.3125, 1e-12);
}

TEST(Protocol, EprCombination) {
  const auto s1 = random_position(1, Role::Squeezed1), s2 = random_position(2, Role::Squeezed2);
  const auto [e1, e2] = make_epr(s1, s2);
  for (std::size_t i = 0; i < kGrid.size(); ++i) {
    EXPECT_NEAR(std::abs(e1.values[i] - (s1.values[i] + s2.values[i]) / std::sqrt(2.0)), 0, 1e-15);
    EXPECT_NEAR(std::abs(e2.values[i] - (s2.values[i] - s1.values[i]) / std::sqrt(2.0)), 0, 1e-15);
  }
}

TEST(Protocol, ZeroFrameLeavesE2) {
  const auto e2 = random_position(3, Role::Epr2);
  PhotocurrentFrame zero{kGrid, std::vector<double>(kGrid.size()), std::vector<double>(kGrid.size()), 0};
  const auto out = bob_stage(zero, e2, ProtocolParams::teleporting());
  EXPECT_EQ(out.values, e2.values);
}

TEST(Protocol, OutputIsInputPlusNoise) {
  // With the gain condition, A_out = A_in + E2 + E1^* exactly.
  const auto a_in = random_position(4, Role::AIn), e1 = random_position(5, Role::Epr1);
  const auto e2 = random_position(6, Role::Epr2);
  for (double b0 : {1.0, 0.3, 7.0}) {
    const auto p = ProtocolParams::teleporting(b0);
    const auto out = bob_stage(alice_stage(a_in, e1, p), e2, p);
    const auto f = noise_field(e1, e2);
    for (std::size_t i = 0; i < kGrid.size(); ++i)
      EXPECT_NEAR(std::abs(out.values[i] - a_in.values[i] - f.values[i]), 0, 1e-12);
  }
}

TEST(Protocol, DoubledGainDoublesTransfer) {
  const auto a_in = random_position(7, Role::AIn), e1 = random_position(8, Role::Epr1);
  const auto e2 = random_position(9, Role::Epr2);
  const auto p = ProtocolParams::teleporting(1.0);
  const auto p2 = ProtocolParams::with_gain(1.0, 2 * p.g);
  const auto frame = alice_stage(a_in, e1, p);
  const auto out1 = bob_stage(frame, e2, p), out2 = bob_stage(frame, e2, p2);
  for (std::size_t i = 0; i < kGrid.size(); ++i)
    EXPECT_NEAR(std::abs((out2.values[i] - e2.values[i]) - 2.0 * (out1.values[i] - e2.values[i])), 0, 1e-12);
}

TEST(Protocol, PhotocurrentsAreLinear) {
  const auto a = random_position(10, Role::AIn), b = random_position(11, Role::AIn);
  const auto e1 = random_position(12, Role::Epr1);
  FieldState zero(kGrid, Domain::Position, Role::Epr1);
  FieldState sum(kGrid, Domain::Position, Role::AIn);
  for (std::size_t i = 0; i < kGrid.size(); ++i) sum.values[i] = a.values[i] + 3.0 * b.values[i];
  const auto p = ProtocolParams::teleporting();
  const auto fs = alice_stage(sum, e1, p), fa = alice_stage(a, e1, p), fb = alice_stage(b, zero, p);
  for (std::size_t i = 0; i < kGrid.size(); ++i) {
    EXPECT_NEAR(fs.i_x[i], fa.i_x[i] + 3.0 * fb.i_x[i], 1e-12);
    EXPECT_NEAR(fs.i_p[i], fa.i_p[i] + 3.0 * fb.i_p[i], 1e-12);
  }
}

TEST(Protocol, VacuumNoiseLevel) {
  // r = 0: E1 and E2 are independent vacua, so <|F|^2> = 1/dV.
  const auto cfg = make_config(0.0);
  double sum = 0.0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t)
    for (const auto& v : run_teleport(cfg, {2, static_cast<std::uint64_t>(t)}).f.values) sum += std::norm(v);
  EXPECT_NEAR(sum / (trials * kGrid.size()) * kGrid.cell_volume(), 1.0, 0.03);
}

TEST(Protocol, RunIsDeterministic) {
  const auto cfg = make_config(1.0, {1.0, 0.5});
  const auto a = run_teleport(cfg, {8, 3}), b = run_teleport(cfg, {8, 3});
  EXPECT_EQ(a.a_out.values, b.a_out.values);
  EXPECT_EQ(a.frame.i_x, b.frame.i_x);
  EXPECT_NE(a.a_out.values, run_teleport(cfg, {8, 4}).a_out.values);
}

TEST(Protocol, WireChannelRoundsToFloat) {
  auto cfg = make_config(1.0);
  cfg.channel = ChannelModel::Float32Wire;
  const auto rec = run_teleport(cfg, {1, 1});
  for (double v : rec.frame.i_x) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
}

TEST(Protocol, GridMismatchRejected) {
  const SpaceTimeGrid other{2, 2, 2, 1, 1, 1};
  FieldState e2(other, Domain::Position, Role::Epr2);
  PhotocurrentFrame frame{kGrid, std::vector<double>(kGrid.size()), std::vector<double>(kGrid.size()), 0};
  EXPECT_THROW(bob_stage(frame, e2, ProtocolParams::teleporting()), GridMismatch);
  auto cfg = make_config(0.0);
  cfg.grid = other;
  EXPECT_THROW(cfg.validate(), GridMismatch);
}
