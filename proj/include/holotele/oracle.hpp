#pragma once

// Exact second-moment propagation for tiny grids. Every field in the chain is
// an affine-free linear map y = M z + N z* of the stacked vacuum amplitudes
// z = [a1, a2, a_in] (one entry per Fourier mode), built from naive DFT
// matrices. Covariances follow from <z z^dag> = (V/2) 1 and <z z^T> = 0.
// Nothing here uses the FFT plans, the samplers or the Monte Carlo estimators.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "holotele/analysis.hpp"
#include "holotele/kernel.hpp"
#include "holotele/lattice.hpp"
#include "holotele/protocol.hpp"

namespace holotele {

/// 6 x 6 x 8 lattice points, i.e. 864 stacked vacuum modes.
inline constexpr std::size_t kOracleMaxPoints = 288;

namespace oracle_detail {

using Mat = Eigen::MatrixXcd;

/// y = M z + N z*.
struct Linear {
  Mat m, n;

  Linear conj() const { return {n.conjugate(), m.conjugate()}; }
  Linear re() const { return {0.5 * (m + n.conjugate()), 0.5 * (n + m.conjugate())}; }
  Linear im() const {
    const cplx h{0.0, -0.5};
    return {h * (m - n.conjugate()), h * (n - m.conjugate())};
  }
  Linear operator+(const Linear& o) const { return {m + o.m, n + o.n}; }
  Linear operator-(const Linear& o) const { return {m - o.m, n - o.n}; }
  friend Linear operator*(cplx c, const Linear& a) { return {c * a.m, c * a.n}; }
  friend Linear operator*(const Mat& t, const Linear& a) { return {t * a.m, t * a.n}; }
};

/// Phase e^{i(Omega t - q.rho)} between mode k and point x.
inline cplx forward_phase(const SpaceTimeGrid& g, std::size_t k, std::size_t x) {
  const auto kk = g.unravel(k);
  const auto xx = g.unravel(x);
  const double frac = static_cast<double>((kk.it * xx.it) % g.nt) / static_cast<double>(g.nt) -
                      static_cast<double>((kk.ix * xx.ix) % g.nx) / static_cast<double>(g.nx) -
                      static_cast<double>((kk.iy * xx.iy) % g.ny) / static_cast<double>(g.ny);
  return std::polar(1.0, 2.0 * std::numbers::pi * frac);
}

/// Forward transform matrix: f = D F with D[k, x] = dV e^{i(Omega t - q.rho)}.
inline Mat forward_matrix(const SpaceTimeGrid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Mat d(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index x = 0; x < n; ++x)
      d(k, x) = g.cell_volume() * forward_phase(g, static_cast<std::size_t>(k), static_cast<std::size_t>(x));
  return d;
}

/// Inverse: F = D^-1 f with entries (1/V) e^{-i(Omega t - q.rho)}.
inline Mat inverse_matrix(const SpaceTimeGrid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  Mat d(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index k = 0; k < n; ++k)
      d(x, k) = std::conj(forward_phase(g, static_cast<std::size_t>(k), static_cast<std::size_t>(x))) / g.volume();
  return d;
}

/// Fourier-domain squeezed field of block `slot`: s(k) = U a(k) + V a*(-k).
inline Linear squeezed(const SqueezingKernel& k, std::size_t slot, std::size_t modes) {
  const auto n = static_cast<Eigen::Index>(k.grid.size());
  const auto cols = static_cast<Eigen::Index>(modes);
  Linear out{Mat::Zero(n, cols), Mat::Zero(n, cols)};
  const auto base = static_cast<Eigen::Index>(slot * k.grid.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto j = static_cast<Eigen::Index>(conjugate_mode_index(k.grid, static_cast<std::size_t>(i)));
    out.m(i, base + i) = k.u[static_cast<std::size_t>(i)];
    out.n(i, base + j) = k.v[static_cast<std::size_t>(i)];
  }
  return out;
}

/// <y y^dag> for y = M z + N z*.
inline Mat covariance(const Linear& y, double volume) {
  return 0.5 * volume * (y.m * y.m.adjoint() + y.n * y.n.adjoint());
}

/// <y y^T>.
inline Mat anomalous(const Linear& y, double volume) {
  return 0.5 * volume * (y.m * y.n.transpose() + y.n * y.m.transpose());
}

/// Per-bin spectrum <|I(k)|^2>/V of a Fourier-domain linear field.
inline std::vector<double> diagonal_spectrum(const Linear& f, double volume) {
  std::vector<double> s(static_cast<std::size_t>(f.m.rows()));
  for (Eigen::Index k = 0; k < f.m.rows(); ++k)
    s[static_cast<std::size_t>(k)] = 0.5 * (f.m.row(k).squaredNorm() + f.n.row(k).squaredNorm());
  (void)volume;  // (1/V)(V/2)(...)
  return s;
}

} // namespace oracle_detail

struct OracleInput {
  SpaceTimeGrid grid;
  KernelPair kernels;
  ProtocolParams protocol = ProtocolParams::teleporting();
  double phi = 0.0;
  std::vector<BlockShape> blocks;  // coarse covariances to compute
};

struct OracleCoarse {
  BlockShape block;
  std::size_t blocks = 0;
  std::vector<cplx> covariance;  // blocks x blocks, row-major
};

struct OracleResult {
  SpectrumReport in_spectrum;   // source = "oracle", standard_error = 0
  SpectrumReport out_spectrum;
  std::vector<double> green_spectrum;    // <|f(k)|^2>/V
  std::vector<cplx> green_correlation;   // <F(x + l) F*(x)>, lattice average over x
  double stationarity_residual = 0.0;    // max |C(x + l, x) - C(l, 0)| * dV
  double pair_moment_max = 0.0;          // max |<F F>| * dV
  double commutator_residual = 0.0;      // max |[F, F^dag]|, |[F, F]| in units of 1/dV
  double min_eigenvalue = 0.0;           // of <F F^dag> * dV
  double min_symmetric_variance = 0.0;   // smallest <|a_out(k)|^2>/V over Fourier modes
  std::vector<OracleCoarse> coarse;
};

/// Exact chain propagation. Throws OracleSizeError for grids above
/// kOracleMaxPoints lattice points.
inline OracleResult propagate_exact(const OracleInput& in) {
  using namespace oracle_detail;
  const auto& g = in.grid;
  g.validate();
  in.protocol.validate();
  if (g.size() > kOracleMaxPoints)
    throw OracleSizeError("oracle: grid " + std::to_string(g.nx) + "x" + std::to_string(g.ny) + "x" +
                          std::to_string(g.nt) + " has " + std::to_string(g.size()) + " points; the dense " +
                          "propagation is limited to " + std::to_string(kOracleMaxPoints) +
                          " (e.g. 6x6x8); use the windowed block covariance for larger grids");
  require_same_grid(g, in.kernels.grid(), "propagate_exact");
  const std::size_t n = g.size();
  const std::size_t modes = 3 * n;
  const double vol = g.volume();
  const double dv = g.cell_volume();
  const Mat dfw = forward_matrix(g);
  const Mat dinv = inverse_matrix(g);

  const Linear s1 = dinv * squeezed(in.kernels.opa1, 0, modes);
  const Linear s2 = dinv * squeezed(in.kernels.opa2, 1, modes);
  SqueezingKernel vacuum{g, std::vector<cplx>(n, 1.0), std::vector<cplx>(n, 0.0), 0};
  const Linear a_in = dinv * squeezed(vacuum, 2, modes);

  const double h = std::numbers::sqrt2 / 2.0;
  const Linear e1 = h * (s1 + s2);
  const Linear e2 = h * (s2 - s1);
  const Linear bx = h * (a_in + e1);
  const Linear bp = h * (e1 - a_in);
  const Linear ix = 2.0 * in.protocol.b0 * bx.re();
  const Linear ip = 2.0 * in.protocol.b0 * bp.im();
  const Linear a_out = e2 + in.protocol.g * (ix - cplx{0.0, 1.0} * ip);
  const Linear f = a_out - a_in;

  OracleResult r;
  auto homodyne = [&](const Linear& a) {
    const cplx rot = std::polar(1.0, -in.phi);
    return dfw * (2.0 * (rot * a).re());  // A0 applied below
  };
  const double a0sq = in.protocol.a0 * in.protocol.a0;
  auto report = [&](const Linear& a) {
    SpectrumReport s;
    s.grid = g;
    s.phi = in.phi;
    s.estimated = diagonal_spectrum(homodyne(a), vol);
    for (auto& v : s.estimated) v *= a0sq;
    s.analytic = s.estimated;
    s.standard_error.assign(n, 0.0);
    s.trials = 0;
    s.source = "oracle";
    return s;
  };
  r.in_spectrum = report(a_in);
  r.out_spectrum = report(a_out);

  r.green_spectrum = diagonal_spectrum(dfw * f, vol);

  const Mat cov = covariance(f, vol);
  auto lag_offset = [&](std::size_t l) {
    const auto li = g.unravel(l);
    return LatticeOffset{static_cast<std::int64_t>(li.ix), static_cast<std::int64_t>(li.iy),
                         static_cast<std::int64_t>(li.it)};
  };
  auto cov_at = [&](std::size_t a, std::size_t b) {
    return cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };
  r.green_correlation.assign(n, cplx{});
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t l = 0; l < n; ++l) r.green_correlation[l] += cov_at(shifted(g, x, lag_offset(l)), x);
  for (auto& c : r.green_correlation) c /= static_cast<double>(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t l = 0; l < n; ++l)
      r.stationarity_residual = std::max(
          r.stationarity_residual, std::abs(cov_at(shifted(g, x, lag_offset(l)), x) - r.green_correlation[l]) * dv);

  r.pair_moment_max = anomalous(f, vol).cwiseAbs().maxCoeff() * dv;
  const Mat comm = vol * (f.m * f.m.adjoint() - f.n * f.n.adjoint());
  const Mat comm2 = vol * (f.m * f.n.transpose() - f.n * f.m.transpose());
  r.commutator_residual = std::max(comm.cwiseAbs().maxCoeff(), comm2.cwiseAbs().maxCoeff()) * dv;

  Eigen::SelfAdjointEigenSolver<Mat> es(cov * dv, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();

  const auto out_modes = diagonal_spectrum(dfw * a_out, vol);
  r.min_symmetric_variance = *std::min_element(out_modes.begin(), out_modes.end());

  for (const auto& shape : in.blocks) {
    BlockLayout lay(g, shape);
    const auto nb = static_cast<Eigen::Index>(lay.blocks());
    Mat w = Mat::Zero(nb, static_cast<Eigen::Index>(n));
    const double scale = dv / std::sqrt(lay.area() * lay.duration());
    for (std::size_t ix2 = 0; ix2 < g.nx; ++ix2)
      for (std::size_t iy = 0; iy < g.ny; ++iy)
        for (std::size_t it = 0; it < g.nt; ++it)
          w(static_cast<Eigen::Index>(lay.block_of(ix2, iy, it)), static_cast<Eigen::Index>(g.linear(ix2, iy, it))) =
              scale;
    const Mat c = w * cov * w.adjoint();
    OracleCoarse oc{shape, lay.blocks(), std::vector<cplx>(lay.blocks() * lay.blocks())};
    for (Eigen::Index i = 0; i < nb; ++i)
      for (Eigen::Index j = 0; j < nb; ++j) oc.covariance[static_cast<std::size_t>(i * nb + j)] = c(i, j);
    r.coarse.push_back(std::move(oc));
  }
  return r;
}

/// Per-mode noise spectrum S_F(k) = <|f(k)|^2>/V of F = E2 + E1* for an
/// arbitrary kernel pair (no symmetry assumed).
inline std::vector<double> noise_mode_spectrum(const KernelPair& pair) {
  const auto& g = pair.grid();
  const auto& k1 = pair.opa1;
  const auto& k2 = pair.opa2;
  std::vector<double> s(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t j = conjugate_mode_index(g, i);
    s[i] = 0.25 * (std::norm(-k1.u[i] + std::conj(k1.v[j])) + std::norm(std::conj(k1.u[j]) - k1.v[i]) +
                   std::norm(k2.u[i] + std::conj(k2.v[j])) + std::norm(k2.v[i] + std::conj(k2.u[j])));
  }
  return s;
}

/// Block covariance <F(j, i) F*(j', i')> for any grid size, from the mode
/// spectrum weighted by the block window functions:
///   C = (1/(S T V)) sum_k S_F(k) W_b(k) W_b'(k)*,  W_b(k) = dV sum_{x in b} e^{-i(Omega t - q.rho)}.
inline OracleCoarse windowed_block_covariance(const KernelPair& pair, const BlockShape& shape) {
  const auto& g = pair.grid();
  BlockLayout lay(g, shape);
  const auto sf = noise_mode_spectrum(pair);
  // Separable 1-D window sums; the phase sign follows e^{+i q rho} e^{-i Omega t}.
  auto window = [](std::size_t n, std::size_t len, std::size_t nblocks, double sign) {
    std::vector<cplx> w(n * nblocks);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t b = 0; b < nblocks; ++b) {
        cplx acc{};
        for (std::size_t x = b * len; x < (b + 1) * len; ++x)
          acc += std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>((k * x) % n) / static_cast<double>(n));
        w[k * nblocks + b] = acc;
      }
    return w;
  };
  const auto wx = window(g.nx, shape.lx, lay.nbx, 1.0);
  const auto wy = window(g.ny, shape.ly, lay.nby, 1.0);
  const auto wt = window(g.nt, shape.lt, lay.nbt, -1.0);
  const std::size_t nb = lay.blocks();
  const double dv = g.cell_volume();
  const double pref = dv * dv / (lay.area() * lay.duration() * g.volume());
  OracleCoarse out{shape, nb, std::vector<cplx>(nb * nb)};
  std::vector<cplx> wk(nb);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (sf[k] == 0.0) continue;
    const auto kk = g.unravel(k);
    for (std::size_t bx = 0; bx < lay.nbx; ++bx)
      for (std::size_t by = 0; by < lay.nby; ++by)
        for (std::size_t bt = 0; bt < lay.nbt; ++bt)
          wk[(bx * lay.nby + by) * lay.nbt + bt] =
              wx[kk.ix * lay.nbx + bx] * wy[kk.iy * lay.nby + by] * wt[kk.it * lay.nbt + bt];
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < nb; ++j) out.covariance[i * nb + j] += sf[k] * wk[i] * std::conj(wk[j]);
  }
  for (auto& c : out.covariance) c *= pref;
  return out;
}

} // namespace holotele
