#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "holotele/kernel.hpp"

using namespace holotele;

namespace {

const SpaceTimeGrid kGrid{8, 8, 16, 1.0, 1.0, 1.0};

KernelParams flat(double r0, double psi0 = 0.0) {
  KernelParams p;
  p.r0 = r0;
  p.psi0 = psi0;
  return p;
}

} // namespace

TEST(Kernel, FlatBandValues) {
  const auto k = build_kernel(flat(1.5), kGrid, 1);
  // q_c = pi: band edge |q| <= pi/2, i.e. |kx| <= 2 on an 8-point axis.
  EXPECT_DOUBLE_EQ(k.u[kGrid.linear(0, 0, 0)].real(), std::cosh(1.5));
  EXPECT_DOUBLE_EQ(k.v[kGrid.linear(2, 0, 4)].real(), std::sinh(1.5));
  EXPECT_DOUBLE_EQ(k.u[kGrid.linear(3, 0, 0)].real(), 1.0);
  EXPECT_DOUBLE_EQ(std::abs(k.v[kGrid.linear(0, 0, 5)]), 0.0);
  EXPECT_DOUBLE_EQ(std::abs(k.v[kGrid.linear(2, 2, 0)]), 0.0);  // |q| = pi/sqrt 2 > pi/2
}

TEST(Kernel, GaussianBandValues) {
  KernelParams p = flat(1.0);
  p.model = KernelModel::GaussianBand;
  const auto k = build_kernel(p, kGrid, 1);
  const double q = kGrid.qx(2), w = kGrid.omega(4);
  const double r = std::exp(-std::pow(2 * q / p.q_c, 2) - std::pow(2 * w / p.omega_c, 2));
  EXPECT_NEAR(squeezing_degree(k, LatticeIndex{2, 0, 4}), r, 1e-12);
  EXPECT_NEAR(squeezing_degree(k, LatticeIndex{0, 0, 0}), 1.0, 1e-12);
}

TEST(Kernel, CanonicalIdentityEverywhere) {
  for (double r0 : {0.0, 0.3, 1.5, 3.0})
    for (double psi : {0.0, 0.4, std::numbers::pi / 2})
      for (auto model : {KernelModel::FlatBand, KernelModel::GaussianBand}) {
        auto p = flat(r0, psi);
        p.model = model;
        const auto pair = build_kernel_pair(p, kGrid);
        EXPECT_LT(canonical_identity_residual(pair.opa1).first, 1e-12);
        EXPECT_LT(canonical_identity_residual(pair.opa2).first, 1e-12);
      }
}

TEST(Kernel, TypeIIRelation) {
  const auto pair = build_kernel_pair(flat(1.2, 0.3), kGrid);
  for (std::size_t i = 0; i < kGrid.size(); ++i) {
    EXPECT_EQ(pair.opa1.u[i], pair.opa2.u[i]);
    EXPECT_EQ(pair.opa1.v[i], -pair.opa2.v[i]);
  }
  EXPECT_NO_THROW(check_type_ii_symmetry(pair));
}

TEST(Kernel, OrientationAngle) {
  const auto k = build_kernel(flat(1.0, 0.35), kGrid, 1);
  EXPECT_NEAR(*orientation_angle(k, LatticeIndex{1, 0, 1}), 0.35, 1e-12);
  EXPECT_FALSE(orientation_angle(k, LatticeIndex{4, 0, 0}).has_value());
}

TEST(Kernel, GreenValues) {
  for (double psi : {0.0, 0.3, std::numbers::pi / 2}) {
    const double r0 = 0.8;
    const auto pair = build_kernel_pair(flat(r0, psi), kGrid);
    const auto g = green_kernel(pair);
    const double c = std::cos(psi), s = std::sin(psi);
    const double in_band = std::exp(-2 * r0) * c * c + std::exp(2 * r0) * s * s;
    EXPECT_NEAR(g.g[kGrid.linear(1, 1, 2)], in_band, 1e-12);
    EXPECT_NEAR(g.g[kGrid.linear(4, 0, 0)], 1.0, 1e-12);
    EXPECT_NEAR(green_from_r_psi(r0, psi), in_band, 1e-12);
  }
}

TEST(Kernel, GreenRequiresTypeII) {
  const auto broken = with_broken_type_ii_symmetry(build_kernel_pair(flat(1.0), kGrid));
  EXPECT_THROW(green_kernel(broken), KernelError);
}

TEST(Kernel, CommutatorVanishesForTypeIIPair) {
  for (double r0 : {0.0, 0.7, 2.0}) {
    KernelParams p = flat(r0, 0.2);
    p.model = KernelModel::GaussianBand;
    EXPECT_LT(noise_commutator_check(build_kernel_pair(p, kGrid)), 1e-10);
  }
}

TEST(Kernel, CommutatorDetectsBrokenPair) {
  // Mirror half with V2 = +V1: the anomalous commutator picks up 2 sinh r cosh r.
  const double r0 = 1.0;
  const double residual = noise_commutator_check(with_broken_type_ii_symmetry(build_kernel_pair(flat(r0), kGrid)));
  EXPECT_NEAR(residual, std::sinh(2 * r0), 1e-10);
}

TEST(Kernel, AnalyticOutSpectrum) {
  const std::vector<double> in(kGrid.size(), 1.0);
  const auto pair = build_kernel_pair(flat(1.5), kGrid);
  const auto out = analytic_out_spectrum(pair, 0.0, in, 1.0);
  EXPECT_NEAR(out[kGrid.linear(0, 1, 1)] / in[0], 1.0 + 2.0 * std::exp(-3.0), 1e-12);
  const auto strong = build_kernel_pair(flat(2.0), kGrid);
  EXPECT_NEAR(analytic_out_spectrum(strong, 0.0, in, 1.0)[kGrid.linear(0, 1, 1)], 1.0366, 1e-4);
  EXPECT_NEAR(out[kGrid.linear(4, 4, 8)], 3.0, 1e-12);
  const auto rotated = build_kernel_pair(flat(1.5, std::numbers::pi / 2), kGrid);
  EXPECT_NEAR(analytic_out_spectrum(rotated, 0.0, in, 1.0)[kGrid.linear(1, 0, 0)], 1.0 + 2.0 * std::exp(3.0), 1e-9);
}

TEST(Kernel, ValidationErrors) {
  EXPECT_THROW(build_kernel(flat(-1.0), kGrid, 1), ConfigError);
  auto p = flat(1.0);
  p.model = KernelModel::Tabulated;
  EXPECT_THROW(build_kernel(p, kGrid, 1), ConfigError);
  EXPECT_THROW(build_kernel(flat(1.0), kGrid, 3), ConfigError);
}

TEST(KernelTable, RoundTrip) {
  const auto k = build_kernel(flat(1.1, 0.2), kGrid, 1);
  const auto t = decode_kernel_table(encode_kernel_table(table_from_kernel(k)));
  const auto pair = kernel_pair_from_table(t, kGrid);
  const auto ref = build_kernel_pair(flat(1.1, 0.2), kGrid);
  EXPECT_EQ(pair.opa1.u, ref.opa1.u);
  EXPECT_EQ(pair.opa1.v, ref.opa1.v);
  EXPECT_EQ(pair.opa2.v, ref.opa2.v);
}

TEST(KernelTable, Rejections) {
  auto t = table_from_kernel(build_kernel(flat(1.0), kGrid, 1));
  auto wrong_grid = SpaceTimeGrid{8, 8, 8, 1, 1, 1};
  EXPECT_THROW(kernel_from_table(t, wrong_grid, 1), KernelError);
  auto spacing = t;
  spacing.domega *= 2;
  EXPECT_THROW(kernel_from_table(spacing, kGrid, 1), KernelError);
  auto non_canonical = t;
  non_canonical.v[5] = 0.5;
  non_canonical.u[5] = 1.0;
  EXPECT_THROW(kernel_from_table(non_canonical, kGrid, 1), KernelError);
  auto bytes = encode_kernel_table(t);
  EXPECT_THROW(decode_kernel_table(bytes.substr(0, 30)), IoError);
  bytes[1] = 'Q';
  EXPECT_THROW(decode_kernel_table(bytes), IoError);
}
