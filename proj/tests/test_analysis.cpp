#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "holotele/analysis.hpp"
#include "holotele/oracle.hpp"
#include "holotele/protocol.hpp"
#include "holotele/stochastic.hpp"

using namespace holotele;

namespace {

const SpaceTimeGrid kGrid{4, 4, 8, 1.0, 1.0, 1.0};

std::shared_ptr<const KernelPair> pair_for(double r0, double psi0 = 0.0, const SpaceTimeGrid& g = kGrid) {
  KernelParams p;
  p.r0 = r0;
  p.psi0 = psi0;
  return std::make_shared<const KernelPair>(build_kernel_pair(p, g));
}

std::vector<FieldState> noise_fields(double r0, int trials, std::uint64_t seed, const SpaceTimeGrid& g = kGrid) {
  TeleportConfig c;
  c.grid = g;
  c.kernels = pair_for(r0, 0.0, g);
  std::vector<FieldState> out;
  for (int t = 0; t < trials; ++t) out.push_back(run_teleport(c, {seed, static_cast<std::uint64_t>(t)}).f);
  return out;
}

// Unbiased periodogram written directly from its definition.
std::vector<double> naive_spectrum(const SpaceTimeGrid& g, const std::vector<std::vector<double>>& currents) {
  const std::size_t n = g.size();
  const double m = static_cast<double>(currents.size());
  std::vector<std::vector<cplx>> ft;
  for (const auto& c : currents) {
    std::vector<cplx> f(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto K = g.unravel(k);
      for (std::size_t x = 0; x < n; ++x) {
        const auto X = g.unravel(x);
        const double ph = g.omega(K.it) * X.it * g.dt - g.qx(K.ix) * X.ix * g.dx - g.qy(K.iy) * X.iy * g.dy;
        f[k] += g.cell_volume() * std::polar(1.0, ph) * c[x];
      }
    }
    ft.push_back(std::move(f));
  }
  std::vector<double> s(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx mean{};
    for (const auto& f : ft) mean += f[k];
    mean /= m;
    for (const auto& f : ft) s[k] += std::norm(f[k] - mean);
    s[k] /= (m - 1.0) * g.volume();
  }
  return s;
}

SpectrumReport flat_report(double value, std::uint64_t trials = 2000) {
  SpectrumReport r;
  r.grid = kGrid;
  r.estimated.assign(kGrid.size(), value);
  r.standard_error.assign(kGrid.size(), 0.01);
  r.trials = trials;
  return r;
}

} // namespace

TEST(Homodyne, ProjectsQuadrature) {
  FieldState a(kGrid, Domain::Position, Role::AOut);
  a.values[0] = {1.0, 0.0};
  a.values[1] = {0.0, 1.0};
  a.values[2] = {3.0, -2.0};
  const auto x = homodyne_project(a, 0.0, 1.5);
  EXPECT_DOUBLE_EQ(x[0], 3.0);
  EXPECT_DOUBLE_EQ(x[1], 0.0);
  EXPECT_DOUBLE_EQ(x[2], 9.0);
  const auto p = homodyne_project(a, std::numbers::pi / 2, 1.0);
  EXPECT_NEAR(p[0], 0.0, 1e-15);
  EXPECT_NEAR(p[1], 2.0, 1e-15);
  EXPECT_NEAR(p[2], -4.0, 1e-15);
}

TEST(Spectrum, MatchesDirectPeriodogram) {
  const SpaceTimeGrid g{2, 3, 4, 0.5, 1.0, 2.0};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> currents(6, std::vector<double>(g.size()));
  for (auto& c : currents)
    for (auto& v : c) v = n(rng) + 0.5;
  const auto est = spectrum_estimate(currents, g);
  const auto ref = naive_spectrum(g, currents);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(est.estimated[k], ref[k], 1e-10 * (1 + ref[k]));
  EXPECT_EQ(est.trials, 6u);
}

TEST(Spectrum, RefusesSingleTrial) {
  SpectrumAccumulator acc(kGrid);
  acc.add_current(std::vector<double>(kGrid.size(), 1.0));
  EXPECT_THROW(acc.estimate(), EstimatorError);
}

TEST(Spectrum, VacuumGivesA0Squared) {
  const double a0 = 1.3;
  SpectrumAccumulator acc(kGrid);
  for (std::uint64_t t = 0; t < 400; ++t)
    acc.add_current(homodyne_project(inverse_transform(sample_vacuum(kGrid, {9, t}, StreamLabel::InputVacuum)), 0.4, a0));
  const auto e = acc.estimate();
  double mean = 0.0;
  for (double v : e.value) mean += v;
  mean /= static_cast<double>(kGrid.size());
  // Per-bin relative SE ~ 0.07 (0.05 on the self-conjugate bins); averaged over 128 bins.
  EXPECT_NEAR(mean / (a0 * a0), 1.0, 0.03);
}

TEST(Spectrum, MergeMatchesSinglePass) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> currents(50, std::vector<double>(kGrid.size()));
  for (auto& c : currents)
    for (auto& v : c) v = n(rng);
  SpectrumAccumulator all(kGrid), a(kGrid), b(kGrid);
  for (std::size_t t = 0; t < currents.size(); ++t) {
    all.add_current(currents[t]);
    (t < 20 ? a : b).add_current(currents[t]);
  }
  a.merge(b);
  const auto x = all.estimate(), y = a.estimate();
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    EXPECT_NEAR(x.value[k], y.value[k], 1e-10 * x.value[k]);
    EXPECT_NEAR(x.standard_error[k], y.standard_error[k], 1e-8 * x.standard_error[k]);
  }
}

TEST(Spectrum, EstimateTracksOracle) {
  const auto pair = pair_for(1.0, 0.3);
  TeleportConfig c;
  c.grid = kGrid;
  c.kernels = pair;
  SpectrumAccumulator acc(kGrid);
  for (std::uint64_t t = 0; t < 1500; ++t) acc.add_current(homodyne_project(run_teleport(c, {21, t}).a_out, 0.0, 1.0));
  const auto est = acc.estimate();
  OracleInput in{kGrid, *pair, ProtocolParams::teleporting(), 0.0, {}};
  const auto exact = propagate_exact(in).out_spectrum.estimated;
  int within = 0;
  for (std::size_t k = 0; k < kGrid.size(); ++k)
    if (std::abs(est.value[k] - exact[k]) <= 3.0 * est.standard_error[k]) ++within;
  EXPECT_GE(within, static_cast<int>(0.95 * kGrid.size()));
}

TEST(Compare, PassesOnExactAgreement) {
  const auto pair = pair_for(1.5);
  const auto in = flat_report(1.0);
  auto out = flat_report(0.0);
  out.estimated = analytic_out_spectrum(*pair, 0.0, in.estimated, 1.0);
  const auto cmp = compare_spectra(in, out, *pair, KernelParams{}, 0.0);
  EXPECT_TRUE(cmp.passed);
  EXPECT_NEAR(cmp.out_of_band.mean_ratio, 3.0, 1e-12);
  EXPECT_NEAR(cmp.in_band.mean_ratio, 1.0 + 2.0 * std::exp(-3.0), 1e-12);
  EXPECT_GT(cmp.in_band.bins, 0u);
}

TEST(Compare, FailsWhenBandIsWrong) {
  const auto pair = pair_for(1.5);
  const auto in = flat_report(1.0);
  auto out = flat_report(3.0);  // the classical answer everywhere
  const auto cmp = compare_spectra(in, out, *pair, KernelParams{}, 0.0);
  EXPECT_FALSE(cmp.passed);
  EXPECT_NEAR(cmp.out_of_band.rms_relative_error, 0.0, 1e-12);
}

TEST(Compare, RejectsPhiMismatch) {
  const auto pair = pair_for(0.0);
  auto out = flat_report(3.0);
  out.phi = 1.0;
  EXPECT_THROW(compare_spectra(flat_report(1.0), out, *pair, KernelParams{}, 0.0), UsageError);
}

TEST(Green, VacuumNoiseIsLocal) {
  const auto fields = noise_fields(0.0, 300, 4);
  const auto r = green_estimate(fields, *pair_for(0.0));
  // r = 0: <F(l) F*(0)> = delta_l / dV.
  for (std::size_t l = 0; l < kGrid.size(); ++l) {
    const double expect = l == 0 ? 1.0 : 0.0;
    EXPECT_NEAR(std::abs(r.estimated_correlation[l] - expect), 0.0, 5.0 * r.correlation_standard_error[l] + 1e-12)
        << "lag " << l;
    EXPECT_NEAR(std::abs(r.analytic_correlation[l]), expect, 1e-12);
  }
}

TEST(Green, RefusesSingleTrial) {
  const auto fields = noise_fields(0.0, 1, 4);
  EXPECT_THROW(green_estimate(fields, *pair_for(0.0)), EstimatorError);
}

TEST(CoarseGrain, WholeGridBlockHasUnitVariance) {
  const auto fields = noise_fields(0.0, 400, 8);
  const auto r = coarse_grain(fields, {4, 4, 8}, *pair_for(0.0));
  ASSERT_EQ(r.blocks, 1u);
  EXPECT_NEAR(r.at(0, 0).real(), 1.0, 5.0 * r.standard_error[0]);
  EXPECT_DOUBLE_EQ(r.predicted_diagonal, 1.0);
}

TEST(CoarseGrain, BlockLayout) {
  BlockLayout lay(kGrid, {2, 4, 2});
  EXPECT_EQ(lay.blocks(), 2u * 1u * 4u);
  EXPECT_EQ(lay.block_of(3, 3, 7), (1u * 1 + 0) * 4 + 3);
  EXPECT_DOUBLE_EQ(lay.area(), 8.0);
  EXPECT_DOUBLE_EQ(lay.duration(), 2.0);
  EXPECT_THROW(BlockLayout(kGrid, {3, 4, 2}), ConfigError);
  EXPECT_THROW(BlockLayout(kGrid, {0, 4, 2}), ConfigError);
}

TEST(CoarseGrain, SumsOverBlocks) {
  CoarseGrainAccumulator acc(kGrid, {2, 2, 4});
  FieldState f(kGrid, Domain::Position, Role::Noise);
  for (auto& v : f.values) v = {1.0, 0.0};
  const auto b = acc.block_values(f);
  for (const auto& v : b) EXPECT_NEAR(v.real(), 16.0 / 4.0, 1e-12);  // 16 cells / sqrt(S T)
}

TEST(Gaussianity, GaussianNoisePasses) {
  const auto fields = noise_fields(1.0, 400, 12);
  const std::vector<WickCheck> checks = {
      {"zero_lag", {}, {}, {}, {}}, {"intensity", {}, {}, {1, 0, 0}, {1, 0, 0}}, {"pair", {}, {0, 1, 0}, {}, {0, 1, 0}}};
  const auto t = gaussianity_check(fields, checks);
  for (const auto& row : t.wick_rows)
    EXPECT_NEAR(row.ratio, 1.0, 5.0 * row.ratio_standard_error + 1e-3) << row.label;
  EXPECT_LT(t.pair_moment_z, 5.0);
  // Zero lag: <|F|^4> factorizes into 2 <|F|^2>^2.
  EXPECT_NEAR(t.wick_rows[0].wick.real(), 2.0 * t.second_moment * t.second_moment, 1e-9 * t.second_moment);
}

TEST(Gaussianity, RandomSignFieldFails) {
  // F = s with s = +-1 everywhere: <|F|^4> = 1 but Wick predicts 2.
  std::vector<FieldState> fields;
  for (int t = 0; t < 50; ++t) {
    FieldState f(kGrid, Domain::Position, Role::Noise);
    for (auto& v : f.values) v = (t % 2) ? 1.0 : -1.0;
    fields.push_back(f);
  }
  const auto table = gaussianity_check(fields, {{"zero_lag", {}, {}, {}, {}}});
  EXPECT_NEAR(table.wick_rows[0].ratio, 0.5, 1e-12);
}

TEST(Gaussianity, ShiftWraps) {
  const auto i = kGrid.linear(3, 0, 7);
  EXPECT_EQ(shifted(kGrid, i, {1, -1, 2}), kGrid.linear(0, 3, 1));
}
