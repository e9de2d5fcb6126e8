#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "holotele/field_io.hpp"
#include "holotele/lattice.hpp"

using namespace holotele;

namespace {

// Direct sum over the lattice, written from the transform definition:
// f(q, Omega) = sum dV exp(i (Omega t - q.rho)) F(rho, t).
std::vector<cplx> naive_forward(const SpaceTimeGrid& g, const std::vector<cplx>& in) {
  std::vector<cplx> out(g.size());
  const double dv = g.dx * g.dy * g.dt;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto K = g.unravel(k);
    cplx acc{0.0, 0.0};
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto N = g.unravel(n);
      const double x = N.ix * g.dx, y = N.iy * g.dy, t = N.it * g.dt;
      const double phase = g.omega(K.it) * t - g.qx(K.ix) * x - g.qy(K.iy) * y;
      acc += dv * std::polar(1.0, phase) * in[n];
    }
    out[k] = acc;
  }
  return out;
}

FieldState random_field(const SpaceTimeGrid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  FieldState f(g, Domain::Position, Role::AIn);
  for (auto& v : f.values) v = {n(rng), n(rng)};
  return f;
}

double max_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const std::vector<SpaceTimeGrid> kGrids = {
    {4, 4, 8, 1.0, 1.0, 1.0}, {3, 5, 6, 0.5, 1.5, 0.25}, {1, 1, 7, 1.0, 1.0, 2.0}, {6, 2, 1, 0.3, 0.7, 1.0}};

} // namespace

TEST(Lattice, IndexRoundTrip) {
  const SpaceTimeGrid g{3, 4, 5, 1, 1, 1};
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.linear(g.unravel(i)), i);
  EXPECT_EQ(g.linear(1, 2, 3), (1u * 4 + 2) * 5 + 3);
}

TEST(Lattice, SignedFrequencies) {
  const SpaceTimeGrid g{8, 5, 4, 0.5, 1.0, 2.0};
  EXPECT_EQ(SpaceTimeGrid::signed_index(4, 8), 4);
  EXPECT_EQ(SpaceTimeGrid::signed_index(5, 8), -3);
  EXPECT_EQ(SpaceTimeGrid::signed_index(3, 5), -2);
  EXPECT_DOUBLE_EQ(g.qx(1), 2 * std::numbers::pi / 4.0);
  EXPECT_DOUBLE_EQ(g.omega(3), -2 * std::numbers::pi / 8.0);
  EXPECT_DOUBLE_EQ(g.frequency_cell_measure() * g.volume(), 1.0);
}

TEST(Lattice, ConjugateModeIsInvolution) {
  const SpaceTimeGrid g{4, 3, 6, 1, 1, 1};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto j = conjugate_mode_index(g, i);
    EXPECT_EQ(conjugate_mode_index(g, j), i);
    const auto a = g.unravel(i), b = g.unravel(j);
    EXPECT_NEAR(g.qx(a.ix) + g.qx(b.ix), a.ix * 2 == g.nx ? 2 * g.qx(a.ix) : 0.0, 1e-12);
  }
}

TEST(Lattice, ValidateRejectsBadGrids) {
  EXPECT_THROW((SpaceTimeGrid{0, 1, 1, 1, 1, 1}.validate()), ConfigError);
  EXPECT_THROW((SpaceTimeGrid{1, 1, 1, -1, 1, 1}.validate()), ConfigError);
  EXPECT_THROW((SpaceTimeGrid{1, 1, 1, 1, NAN, 1}.validate()), ConfigError);
}

TEST(Lattice, ForwardMatchesDirectSum) {
  for (const auto& g : kGrids) {
    const auto f = random_field(g, 7);
    const auto fast = forward_transform(f);
    EXPECT_EQ(fast.domain, Domain::Fourier);
    EXPECT_LT(max_diff(fast.values, naive_forward(g, f.values)), 1e-10) << g.nx << "x" << g.ny << "x" << g.nt;
  }
}

TEST(Lattice, RoundTripIsIdentity) {
  for (const auto& g : kGrids) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto f = random_field(g, seed);
      const auto back = inverse_transform(forward_transform(f));
      EXPECT_EQ(back.domain, Domain::Position);
      EXPECT_LT(max_diff(back.values, f.values), 1e-12);
    }
  }
}

TEST(Lattice, ParsevalHolds) {
  for (const auto& g : kGrids) {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      const auto f = random_field(g, seed);
      const double e = field_energy(f);
      EXPECT_NEAR(field_energy(forward_transform(f)), e, 1e-10 * e);
    }
  }
}

TEST(Lattice, TransformIsLinear) {
  const SpaceTimeGrid g{4, 3, 8, 1, 1, 0.5};
  const auto a = random_field(g, 1), b = random_field(g, 2);
  const cplx alpha{0.3, -1.2};
  FieldState sum(g, Domain::Position, Role::AIn);
  for (std::size_t i = 0; i < g.size(); ++i) sum.values[i] = a.values[i] + alpha * b.values[i];
  const auto fa = forward_transform(a), fb = forward_transform(b), fs = forward_transform(sum);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(fs.values[i] - fa.values[i] - alpha * fb.values[i]), 0, 1e-10);
}

TEST(Lattice, PlaneWaveLandsOnOneMode) {
  const SpaceTimeGrid g{4, 4, 8, 1, 1, 1};
  // exp(-i (Omega t - q.rho)) at (kx, ky, kt) = (1, 3, 2) maps to V at that mode.
  FieldState f(g, Domain::Position, Role::AIn);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto N = g.unravel(n);
    f.values[n] = std::polar(1.0, -(g.omega(2) * N.it - g.qx(1) * N.ix - g.qy(3) * N.iy));
  }
  const auto s = forward_transform(f);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double expect = k == g.linear(1, 3, 2) ? g.volume() : 0.0;
    EXPECT_NEAR(std::abs(s.values[k]), expect, 1e-10);
  }
}

TEST(Lattice, DomainChecks) {
  const SpaceTimeGrid g{2, 2, 2, 1, 1, 1};
  FieldState f(g, Domain::Fourier, Role::AIn);
  EXPECT_THROW(forward_transform(f), UsageError);
  FieldState p(g, Domain::Position, Role::AIn);
  EXPECT_THROW(inverse_transform(p), UsageError);
  EXPECT_THROW(FieldState(g, Domain::Position, Role::AIn, std::vector<cplx>(3)), GridMismatch);
}

TEST(FieldIo, RoundTripIsExact) {
  const SpaceTimeGrid g{3, 2, 5, 0.25, 0.5, 2.0};
  auto f = random_field(g, 3);
  f.role = Role::AOut;
  const auto back = decode_field(encode_field(f));
  EXPECT_EQ(back.grid, g);
  EXPECT_EQ(back.role, Role::AOut);
  EXPECT_EQ(back.domain, Domain::Position);
  EXPECT_EQ(back.values, f.values);
}

TEST(FieldIo, RejectsCorruption) {
  const SpaceTimeGrid g{2, 2, 2, 1, 1, 1};
  const auto bytes = encode_field(random_field(g, 4));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_field(bad_magic), IoError);
  EXPECT_THROW(decode_field(bytes.substr(0, bytes.size() - 3)), IoError);
  EXPECT_THROW(decode_field(bytes + "x"), IoError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  EXPECT_THROW(decode_field(bad_version), IoError);
  auto bad_role = bytes;
  bad_role[48] = 42;
  EXPECT_THROW(decode_field(bad_role), IoError);
}
