#pragma once

// Victor's verification: homodyne projection, photocurrent noise spectra,
// Green-function and coarse-grained covariance estimates of the noise field,
// and Wick (Gaussianity) moment checks. All accumulators are mergeable so
// the trial harness can reduce them in any grouping.

#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "holotele/kernel.hpp"
#include "holotele/lattice.hpp"

namespace holotele {

/// i(rho, t) = A0 (a e^{-i phi} + a* e^{i phi}) = 2 A0 Re(a e^{-i phi}).
inline std::vector<double> homodyne_project(const FieldState& a, double phi, double a0) {
  require_domain(a, Domain::Position, "homodyne_project");
  const cplx rot = std::polar(1.0, -phi);
  std::vector<double> out(a.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * a0 * (a.values[i] * rot).real();
  return out;
}

inline FieldState real_field(const SpaceTimeGrid& grid, std::span<const double> values, Role role) {
  if (values.size() != grid.size()) throw GridMismatch("real array does not match grid");
  FieldState f(grid, Domain::Position, role);
  for (std::size_t i = 0; i < values.size(); ++i) f.values[i] = values[i];
  return f;
}

inline double standard_error(double sum, double sum_sq, double n) {
  if (n < 2) return 0.0;
  const double var = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
  return std::sqrt(var / n);
}

// ---------------------------------------------------------------------------
// Spectra

/// Periodogram accumulator for real photocurrents. The ensemble mean is
/// removed per pixel (equivalently per Fourier bin); the estimate
///   S(k) = sum_t |I_t(k) - mean I(k)|^2 / ((T - 1) V)
/// is unbiased, and a pure-vacuum homodyne current gives A0^2 in every bin.
class SpectrumAccumulator {
public:
  SpectrumAccumulator() = default;
  explicit SpectrumAccumulator(const SpaceTimeGrid& grid)
      : grid_(grid), sum_i_(grid.size()), sum_a_(grid.size()), sum_a2_(grid.size()), sum_ai_(grid.size()),
        sum_i2_(grid.size()) {}

  void add_current(std::span<const double> current) {
    add_transform(forward_transform(real_field(grid_, current, Role::AOut)));
  }

  /// Adds a precomputed forward transform of a real current.
  void add_transform(const FieldState& transformed) {
    require_domain(transformed, Domain::Fourier, "SpectrumAccumulator");
    require_same_grid(transformed.grid, grid_, "SpectrumAccumulator");
    for (std::size_t k = 0; k < sum_i_.size(); ++k) {
      const cplx z = transformed.values[k];
      const double a = std::norm(z);
      sum_i_[k] += z;
      sum_a_[k] += a;
      sum_a2_[k] += a * a;
      sum_ai_[k] += a * z;
      sum_i2_[k] += z * z;
    }
    ++count_;
  }

  void merge(const SpectrumAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0 && sum_i_.empty()) {
      *this = o;
      return;
    }
    require_same_grid(grid_, o.grid_, "SpectrumAccumulator::merge");
    for (std::size_t k = 0; k < sum_i_.size(); ++k) {
      sum_i_[k] += o.sum_i_[k];
      sum_a_[k] += o.sum_a_[k];
      sum_a2_[k] += o.sum_a2_[k];
      sum_ai_[k] += o.sum_ai_[k];
      sum_i2_[k] += o.sum_i2_[k];
    }
    count_ += o.count_;
  }

  std::uint64_t count() const { return count_; }
  const SpaceTimeGrid& grid() const { return grid_; }

  struct Estimate {
    std::vector<double> value;
    std::vector<double> standard_error;
  };

  Estimate estimate() const {
    if (count_ < 2)
      throw EstimatorError("spectrum estimate needs at least 2 trials to separate fluctuations from the mean, got " +
                           std::to_string(count_));
    const double t = static_cast<double>(count_);
    const double inv_v = 1.0 / grid_.volume();
    Estimate e{std::vector<double>(sum_i_.size()), std::vector<double>(sum_i_.size())};
    for (std::size_t k = 0; k < sum_i_.size(); ++k) {
      const cplx m = sum_i_[k] / t;
      const double c = std::norm(m);
      // q_t = |I_t - m|^2 = a_t - 2 b_t + c with b_t = Re(I_t m*).
      const double sum_q = std::max(0.0, sum_a_[k] - t * c);
      const double sum_b = t * c;
      const double sum_b2 = 0.5 * (c * sum_a_[k] + std::real(std::conj(m * m) * sum_i2_[k]));
      const double sum_ab = std::real(std::conj(m) * sum_ai_[k]);
      const double sum_q2 = sum_a2_[k] + 4.0 * sum_b2 + t * c * c - 4.0 * sum_ab + 2.0 * c * sum_a_[k] - 4.0 * c * sum_b;
      const double var_q = std::max(0.0, (sum_q2 - sum_q * sum_q / t) / (t - 1.0));
      e.value[k] = sum_q / ((t - 1.0)) * inv_v;
      e.standard_error[k] = std::sqrt(var_q / t) * t / (t - 1.0) * inv_v;
    }
    return e;
  }

private:
  SpaceTimeGrid grid_;
  std::uint64_t count_ = 0;
  std::vector<cplx> sum_i_;
  std::vector<double> sum_a_;
  std::vector<double> sum_a2_;
  std::vector<cplx> sum_ai_;
  std::vector<cplx> sum_i2_;
};

struct SpectrumReport {
  SpaceTimeGrid grid;
  double phi = 0.0;
  std::vector<double> estimated;
  std::vector<double> analytic;
  std::vector<double> standard_error;
  std::uint64_t trials = 0;
  std::string source = "monte_carlo";
};

inline SpectrumReport make_spectrum_report(const SpectrumAccumulator& acc, double phi,
                                           std::vector<double> analytic = {}) {
  auto e = acc.estimate();
  return {acc.grid(), phi, std::move(e.value), std::move(analytic), std::move(e.standard_error), acc.count(),
          "monte_carlo"};
}

/// Estimated noise spectrum of a set of photocurrent realizations.
inline SpectrumReport spectrum_estimate(std::span<const std::vector<double>> currents, const SpaceTimeGrid& grid,
                                        double phi = 0.0) {
  SpectrumAccumulator acc(grid);
  for (const auto& c : currents) acc.add_current(c);
  return make_spectrum_report(acc, phi);
}

/// Flat input spectrum of a coherent state plus vacuum: A0^2 everywhere.
inline std::vector<double> coherent_input_spectrum(const SpaceTimeGrid& grid, double a0) {
  return std::vector<double>(grid.size(), a0 * a0);
}

/// Aggregate regions used by the verdicts. "In band" is the shrunken
/// squeezing band |q| <= s q_c/2, |Omega| <= s Omega_c/2 (s = 0.8 by default)
/// so band-edge bins of the flat-band model are excluded.
inline std::vector<char> in_band_mask(const SpaceTimeGrid& grid, const KernelParams& band, double shrink = 0.8) {
  std::vector<char> mask(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto k = grid.unravel(i);
    mask[i] = band.in_band(grid.q_norm(k), grid.omega(k.it), shrink) ? 1 : 0;
  }
  return mask;
}

/// Bins strictly outside the squeezing band.
inline std::vector<char> out_of_band_mask(const SpaceTimeGrid& grid, const KernelParams& band) {
  std::vector<char> mask(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto k = grid.unravel(i);
    mask[i] = band.in_band(grid.q_norm(k), grid.omega(k.it)) ? 0 : 1;
  }
  return mask;
}

struct RegionSummary {
  std::size_t bins = 0;
  double mean_ratio = 0.0;
  double analytic_ratio = 0.0;  // mean of the analytic per-bin ratio
  double rms_relative_error = 0.0;
  double max_abs_deviation = 0.0;
};

struct SpectrumComparison {
  std::vector<double> ratio;
  std::vector<double> ratio_standard_error;
  std::vector<double> analytic_ratio;
  RegionSummary all;
  RegionSummary in_band;
  RegionSummary out_of_band;
  double tolerance = 0.0;
  bool passed = false;
};

/// Default RMS tolerance: 5% at 2000 trials, scaling as 1/sqrt(trials).
inline double default_spectrum_tolerance(std::uint64_t trials) {
  return 0.05 * std::sqrt(2000.0 / static_cast<double>(std::max<std::uint64_t>(trials, 1)));
}

/// Per-bin out/in ratio against the analytic ratio (out.analytic / in.analytic).
/// Passes when, overall and in both regions, the RMS relative deviation and the
/// relative error of the mean ratio are within `tolerance` (0 = default).
inline SpectrumComparison compare_spectra(const SpectrumReport& in, const SpectrumReport& out, const KernelPair& pair,
                                          const KernelParams& band, double tolerance = 0.0) {
  require_same_grid(in.grid, out.grid, "compare_spectra");
  require_same_grid(in.grid, pair.grid(), "compare_spectra");
  if (in.phi != out.phi) throw UsageError("compare_spectra: reports were taken at different phi");
  const auto& g = in.grid;
  const std::size_t n = g.size();
  auto in_analytic = in.analytic.empty() ? coherent_input_spectrum(g, 1.0) : in.analytic;
  auto out_analytic = out.analytic;
  if (out_analytic.empty()) {
    // Normalized units: A0 = 1 when the report carries no analytic column.
    out_analytic = analytic_out_spectrum(pair, in.phi, in_analytic, 1.0);
  }
  SpectrumComparison cmp;
  cmp.tolerance = tolerance > 0.0 ? tolerance : default_spectrum_tolerance(std::min(in.trials, out.trials));
  cmp.ratio.resize(n);
  cmp.ratio_standard_error.resize(n);
  cmp.analytic_ratio.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = out.estimated[i] / in.estimated[i];
    cmp.ratio[i] = r;
    const double rel_out = out.standard_error[i] / out.estimated[i];
    const double rel_in = in.standard_error[i] / in.estimated[i];
    // Delta method without the in/out covariance, which is positive when both
    // reports come from the same trials; conservative in that case.
    cmp.ratio_standard_error[i] = std::abs(r) * std::sqrt(rel_out * rel_out + rel_in * rel_in);
    cmp.analytic_ratio[i] = out_analytic[i] / in_analytic[i];
  }
  auto summarize = [&](const std::vector<char>* mask) {
    RegionSummary s;
    double sum = 0.0, sum_analytic = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask && !(*mask)[i]) continue;
      ++s.bins;
      sum += cmp.ratio[i];
      sum_analytic += cmp.analytic_ratio[i];
      const double rel = (cmp.ratio[i] - cmp.analytic_ratio[i]) / cmp.analytic_ratio[i];
      sum_sq += rel * rel;
      s.max_abs_deviation = std::max(s.max_abs_deviation, std::abs(cmp.ratio[i] - cmp.analytic_ratio[i]));
    }
    if (s.bins > 0) {
      s.mean_ratio = sum / static_cast<double>(s.bins);
      s.analytic_ratio = sum_analytic / static_cast<double>(s.bins);
      s.rms_relative_error = std::sqrt(sum_sq / static_cast<double>(s.bins));
    }
    return s;
  };
  const auto in_mask = in_band_mask(g, band);
  const auto out_mask = out_of_band_mask(g, band);
  cmp.all = summarize(nullptr);
  cmp.in_band = summarize(&in_mask);
  cmp.out_of_band = summarize(&out_mask);
  auto region_ok = [&](const RegionSummary& s) {
    if (s.bins == 0) return true;
    return s.rms_relative_error <= cmp.tolerance &&
           std::abs(s.mean_ratio - s.analytic_ratio) <= cmp.tolerance * s.analytic_ratio;
  };
  cmp.passed = region_ok(cmp.all) && region_ok(cmp.in_band) && region_ok(cmp.out_of_band);
  return cmp;
}

// ---------------------------------------------------------------------------
// Green function of the noise field

struct GreenReport;

/// Accumulates the noise spectrum |f(k)|^2 / V and the per-trial lag
/// correlation C(l) = (1/N) sum_x F(x + l) F*(x), which by stationarity
/// estimates <F(rho, t) F*(rho', t')> = G(rho - rho', t - t').
class GreenAccumulator {
public:
  GreenAccumulator() = default;
  explicit GreenAccumulator(const SpaceTimeGrid& grid)
      : grid_(grid), sum_spec_(grid.size()), sum_spec2_(grid.size()), sum_corr_(grid.size()),
        sum_corr_abs2_(grid.size()) {}

  void add(const FieldState& noise) {
    require_domain(noise, Domain::Position, "GreenAccumulator");
    require_same_grid(noise.grid, grid_, "GreenAccumulator");
    add_transform(forward_transform(noise));
  }

  void add_transform(const FieldState& f) {
    require_domain(f, Domain::Fourier, "GreenAccumulator");
    const double inv_v = 1.0 / grid_.volume();
    FieldState periodogram(grid_, Domain::Fourier, Role::Noise);
    for (std::size_t k = 0; k < sum_spec_.size(); ++k) {
      const double p = std::norm(f.values[k]) * inv_v;
      periodogram.values[k] = p;
      sum_spec_[k] += p;
      sum_spec2_[k] += p * p;
    }
    const auto corr = inverse_transform(periodogram);
    for (std::size_t l = 0; l < sum_corr_.size(); ++l) {
      sum_corr_[l] += corr.values[l];
      sum_corr_abs2_[l] += std::norm(corr.values[l]);
    }
    ++count_;
  }

  void merge(const GreenAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0 && sum_spec_.empty()) {
      *this = o;
      return;
    }
    require_same_grid(grid_, o.grid_, "GreenAccumulator::merge");
    for (std::size_t k = 0; k < sum_spec_.size(); ++k) {
      sum_spec_[k] += o.sum_spec_[k];
      sum_spec2_[k] += o.sum_spec2_[k];
      sum_corr_[k] += o.sum_corr_[k];
      sum_corr_abs2_[k] += o.sum_corr_abs2_[k];
    }
    count_ += o.count_;
  }

  std::uint64_t count() const { return count_; }
  const SpaceTimeGrid& grid() const { return grid_; }

private:
  friend GreenReport make_green_report(const GreenAccumulator&, const KernelPair&);

  SpaceTimeGrid grid_;
  std::uint64_t count_ = 0;
  std::vector<double> sum_spec_;
  std::vector<double> sum_spec2_;
  std::vector<cplx> sum_corr_;
  std::vector<double> sum_corr_abs2_;
};

struct GreenReport {
  SpaceTimeGrid grid;
  std::vector<cplx> estimated_correlation;    // over lags (position-domain layout)
  std::vector<double> correlation_standard_error;
  std::vector<double> estimated_spectrum;     // over (q, Omega)
  std::vector<double> spectrum_standard_error;
  GreenKernel analytic_kernel;
  std::vector<cplx> analytic_correlation;     // inverse transform of G
  std::uint64_t trials = 0;
  std::string source = "monte_carlo";
};

/// Lag-domain image of a Fourier-domain kernel.
inline std::vector<cplx> kernel_to_lags(const SpaceTimeGrid& grid, const std::vector<double>& spectrum) {
  FieldState k(grid, Domain::Fourier, Role::Noise);
  for (std::size_t i = 0; i < spectrum.size(); ++i) k.values[i] = spectrum[i];
  return inverse_transform(k).values;
}

inline GreenReport make_green_report(const GreenAccumulator& acc, const KernelPair& pair) {
  if (acc.count_ < 2)
    throw EstimatorError("green estimate needs at least 2 trials, got " + std::to_string(acc.count_));
  const double t = static_cast<double>(acc.count_);
  const std::size_t n = acc.sum_spec_.size();
  GreenReport r;
  r.grid = acc.grid_;
  r.trials = acc.count_;
  r.estimated_correlation.resize(n);
  r.correlation_standard_error.resize(n);
  r.estimated_spectrum.resize(n);
  r.spectrum_standard_error.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.estimated_spectrum[i] = acc.sum_spec_[i] / t;
    r.spectrum_standard_error[i] = standard_error(acc.sum_spec_[i], acc.sum_spec2_[i], t);
    r.estimated_correlation[i] = acc.sum_corr_[i] / t;
    const double var = std::max(0.0, (acc.sum_corr_abs2_[i] - std::norm(acc.sum_corr_[i]) / t) / (t - 1.0));
    r.correlation_standard_error[i] = std::sqrt(var / t);
  }
  r.analytic_kernel = green_kernel(pair);
  r.analytic_correlation = kernel_to_lags(r.grid, r.analytic_kernel.g);
  return r;
}

inline GreenReport green_estimate(std::span<const FieldState> noise_fields, const KernelPair& pair) {
  GreenAccumulator acc(pair.grid());
  for (const auto& f : noise_fields) acc.add(f);
  return make_green_report(acc, pair);
}

/// RMS relative error of the estimated noise spectrum against G over a mask.
inline double green_spectrum_rms_error(const GreenReport& r, const std::vector<char>& mask) {
  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.estimated_spectrum.size(); ++i) {
    if (!mask[i]) continue;
    const double rel = (r.estimated_spectrum[i] - r.analytic_kernel.g[i]) / r.analytic_kernel.g[i];
    sum_sq += rel * rel;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Coarse graining

struct BlockShape {
  std::size_t lx = 1, ly = 1, lt = 1;
};

struct BlockLayout {
  SpaceTimeGrid grid;
  BlockShape shape;
  std::size_t nbx = 0, nby = 0, nbt = 0;

  BlockLayout(const SpaceTimeGrid& g, const BlockShape& s) : grid(g), shape(s) {
    if (s.lx == 0 || s.ly == 0 || s.lt == 0 || g.nx % s.lx != 0 || g.ny % s.ly != 0 || g.nt % s.lt != 0)
      throw ConfigError("block shape " + std::to_string(s.lx) + "x" + std::to_string(s.ly) + "x" +
                        std::to_string(s.lt) + " does not divide grid " + std::to_string(g.nx) + "x" +
                        std::to_string(g.ny) + "x" + std::to_string(g.nt));
    nbx = g.nx / s.lx;
    nby = g.ny / s.ly;
    nbt = g.nt / s.lt;
  }

  std::size_t blocks() const { return nbx * nby * nbt; }
  /// Block j = (bx, by) in space and window i = bt in time, flattened.
  std::size_t block_of(std::size_t ix, std::size_t iy, std::size_t it) const {
    return ((ix / shape.lx) * nby + iy / shape.ly) * nbt + it / shape.lt;
  }
  double area() const { return static_cast<double>(shape.lx) * grid.dx * static_cast<double>(shape.ly) * grid.dy; }
  double duration() const { return static_cast<double>(shape.lt) * grid.dt; }
};

/// Block variables F(j, i) = (S T)^{-1/2} sum_block F dx dy dt and their
/// covariance <F(j, i) F*(j', i')> over trials.
class CoarseGrainAccumulator {
public:
  CoarseGrainAccumulator() = default;
  CoarseGrainAccumulator(const SpaceTimeGrid& grid, const BlockShape& shape)
      : layout_(std::make_shared<BlockLayout>(grid, shape)), sum_(layout_->blocks() * layout_->blocks()),
        sum_abs2_(layout_->blocks() * layout_->blocks()) {}

  std::vector<cplx> block_values(const FieldState& noise) const {
    require_domain(noise, Domain::Position, "coarse_grain");
    require_same_grid(noise.grid, layout_->grid, "coarse_grain");
    const auto& g = layout_->grid;
    std::vector<cplx> b(layout_->blocks());
    for (std::size_t ix = 0; ix < g.nx; ++ix)
      for (std::size_t iy = 0; iy < g.ny; ++iy)
        for (std::size_t it = 0; it < g.nt; ++it) b[layout_->block_of(ix, iy, it)] += noise.values[g.linear(ix, iy, it)];
    const double scale = g.cell_volume() / std::sqrt(layout_->area() * layout_->duration());
    for (auto& v : b) v *= scale;
    return b;
  }

  void add(const FieldState& noise) {
    const auto b = block_values(noise);
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < nb; ++j) {
        const cplx p = b[i] * std::conj(b[j]);
        sum_[i * nb + j] += p;
        sum_abs2_[i * nb + j] += std::norm(p);
      }
    ++count_;
  }

  void merge(const CoarseGrainAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0 && sum_.empty()) {
      *this = o;
      return;
    }
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      sum_[i] += o.sum_[i];
      sum_abs2_[i] += o.sum_abs2_[i];
    }
    count_ += o.count_;
  }

  std::uint64_t count() const { return count_; }
  const BlockLayout& layout() const { return *layout_; }
  const std::vector<cplx>& sums() const { return sum_; }
  const std::vector<double>& sums_abs2() const { return sum_abs2_; }

private:
  std::shared_ptr<const BlockLayout> layout_;
  std::uint64_t count_ = 0;
  std::vector<cplx> sum_;
  std::vector<double> sum_abs2_;
};

struct CoarseGrainReport {
  SpaceTimeGrid grid;
  BlockShape block;
  double block_area = 0.0;      // S
  double block_duration = 0.0;  // T
  std::size_t blocks = 0;
  std::vector<cplx> covariance;  // blocks x blocks, row-major
  std::vector<double> standard_error;
  double predicted_diagonal = 0.0;  // e^{-2 r(0,0)}
  std::uint64_t trials = 0;
  std::string source = "monte_carlo";

  cplx at(std::size_t i, std::size_t j) const { return covariance[i * blocks + j]; }
};

inline CoarseGrainReport make_coarse_grain_report(const CoarseGrainAccumulator& acc, const KernelPair& pair) {
  if (acc.count() < 2)
    throw EstimatorError("coarse-grain covariance needs at least 2 trials, got " + std::to_string(acc.count()));
  const auto& lay = acc.layout();
  const double t = static_cast<double>(acc.count());
  CoarseGrainReport r;
  r.grid = lay.grid;
  r.block = lay.shape;
  r.block_area = lay.area();
  r.block_duration = lay.duration();
  r.blocks = lay.blocks();
  r.trials = acc.count();
  r.covariance.resize(acc.sums().size());
  r.standard_error.resize(acc.sums().size());
  for (std::size_t i = 0; i < r.covariance.size(); ++i) {
    r.covariance[i] = acc.sums()[i] / t;
    const double var = std::max(0.0, (acc.sums_abs2()[i] - std::norm(acc.sums()[i]) / t) / (t - 1.0));
    r.standard_error[i] = std::sqrt(var / t);
  }
  r.predicted_diagonal = std::exp(-2.0 * squeezing_degree(pair.opa1, 0));
  return r;
}

inline CoarseGrainReport coarse_grain(std::span<const FieldState> noise_fields, const BlockShape& block,
                                      const KernelPair& pair) {
  CoarseGrainAccumulator acc(pair.grid(), block);
  for (const auto& f : noise_fields) acc.add(f);
  return make_coarse_grain_report(acc, pair);
}

// ---------------------------------------------------------------------------
// Gaussianity (Wick factorization)

struct LatticeOffset {
  std::int64_t dx = 0, dy = 0, dt = 0;
};

inline LatticeOffset operator-(const LatticeOffset& a, const LatticeOffset& b) {
  return {a.dx - b.dx, a.dy - b.dy, a.dt - b.dt};
}

inline std::size_t shifted(const SpaceTimeGrid& g, std::size_t linear_index, const LatticeOffset& o) {
  auto wrap = [](std::size_t i, std::int64_t d, std::size_t n) {
    const auto m = static_cast<std::int64_t>(n);
    return static_cast<std::size_t>(((static_cast<std::int64_t>(i) + d) % m + m) % m);
  };
  const auto k = g.unravel(linear_index);
  return g.linear(wrap(k.ix, o.dx, g.nx), wrap(k.iy, o.dy, g.ny), wrap(k.it, o.dt, g.nt));
}

/// Fourth moment <F(1) F*(1') F(2) F*(2')> with points given as offsets from a
/// common base point that is averaged over the lattice.
struct WickCheck {
  std::string label;
  LatticeOffset p1, p1c, p2, p2c;
};

struct MomentRow {
  std::string label;
  cplx measured;
  cplx wick;
  double ratio = 0.0;           // Re(measured / wick)
  double ratio_standard_error = 0.0;
};

struct MomentTable {
  std::vector<MomentRow> wick_rows;
  cplx pair_moment;             // <F F> at zero lag
  double pair_moment_standard_error = 0.0;
  double pair_moment_z = 0.0;   // |<F F>| / standard error
  double second_moment = 0.0;   // <|F|^2>
  std::uint64_t trials = 0;
};

class GaussianityAccumulator {
public:
  GaussianityAccumulator() = default;
  GaussianityAccumulator(const SpaceTimeGrid& grid, std::vector<WickCheck> checks)
      : grid_(grid), checks_(std::move(checks)) {
    for (const auto& c : checks_)
      for (const auto& lag : {c.p1 - c.p1c, c.p2 - c.p2c, c.p1 - c.p2c, c.p2 - c.p1c}) lags_.push_back(lag);
    lags_.push_back({});
    sum_fourth_.resize(checks_.size());
    sum_fourth_abs2_.resize(checks_.size());
    sum_lag_.resize(lags_.size());
  }

  void add(const FieldState& noise) {
    require_domain(noise, Domain::Position, "gaussianity_check");
    require_same_grid(noise.grid, grid_, "gaussianity_check");
    const auto& f = noise.values;
    const double inv_n = 1.0 / static_cast<double>(f.size());
    for (std::size_t c = 0; c < checks_.size(); ++c) {
      const auto& w = checks_[c];
      cplx acc{};
      for (std::size_t x = 0; x < f.size(); ++x)
        acc += f[shifted(grid_, x, w.p1)] * std::conj(f[shifted(grid_, x, w.p1c)]) * f[shifted(grid_, x, w.p2)] *
               std::conj(f[shifted(grid_, x, w.p2c)]);
      acc *= inv_n;
      sum_fourth_[c] += acc;
      sum_fourth_abs2_[c] += std::norm(acc);
    }
    for (std::size_t l = 0; l < lags_.size(); ++l) {
      cplx acc{};
      for (std::size_t x = 0; x < f.size(); ++x) acc += f[shifted(grid_, x, lags_[l])] * std::conj(f[x]);
      sum_lag_[l] += acc * inv_n;
    }
    cplx pair{};
    for (const auto& v : f) pair += v * v;
    pair *= inv_n;
    sum_pair_ += pair;
    sum_pair_abs2_ += std::norm(pair);
    ++count_;
  }

  void merge(const GaussianityAccumulator& o) {
    if (o.count_ == 0) return;
    if (count_ == 0 && sum_fourth_.empty() && sum_lag_.empty()) {
      *this = o;
      return;
    }
    for (std::size_t i = 0; i < sum_fourth_.size(); ++i) {
      sum_fourth_[i] += o.sum_fourth_[i];
      sum_fourth_abs2_[i] += o.sum_fourth_abs2_[i];
    }
    for (std::size_t i = 0; i < sum_lag_.size(); ++i) sum_lag_[i] += o.sum_lag_[i];
    sum_pair_ += o.sum_pair_;
    sum_pair_abs2_ += o.sum_pair_abs2_;
    count_ += o.count_;
  }

  MomentTable table() const {
    if (count_ < 2) throw EstimatorError("gaussianity check needs at least 2 trials");
    const double t = static_cast<double>(count_);
    MomentTable out;
    out.trials = count_;
    for (std::size_t c = 0; c < checks_.size(); ++c) {
      const cplx g11 = sum_lag_[4 * c] / t, g22 = sum_lag_[4 * c + 1] / t;
      const cplx g12 = sum_lag_[4 * c + 2] / t, g21 = sum_lag_[4 * c + 3] / t;
      MomentRow row;
      row.label = checks_[c].label;
      row.measured = sum_fourth_[c] / t;
      row.wick = g11 * g22 + g12 * g21;
      row.ratio = std::real(row.measured / row.wick);
      const double var = std::max(0.0, (sum_fourth_abs2_[c] - std::norm(sum_fourth_[c]) / t) / (t - 1.0));
      row.ratio_standard_error = std::sqrt(var / t) / std::abs(row.wick);
      out.wick_rows.push_back(row);
    }
    out.second_moment = std::real(sum_lag_.back() / t);
    out.pair_moment = sum_pair_ / t;
    const double var = std::max(0.0, (sum_pair_abs2_ - std::norm(sum_pair_) / t) / (t - 1.0));
    out.pair_moment_standard_error = std::sqrt(var / t);
    out.pair_moment_z = out.pair_moment_standard_error > 0.0 ? std::abs(out.pair_moment) / out.pair_moment_standard_error : 0.0;
    return out;
  }

  std::uint64_t count() const { return count_; }

private:
  SpaceTimeGrid grid_;
  std::vector<WickCheck> checks_;
  std::vector<LatticeOffset> lags_;
  std::vector<cplx> sum_fourth_;
  std::vector<double> sum_fourth_abs2_;
  std::vector<cplx> sum_lag_;
  cplx sum_pair_{};
  double sum_pair_abs2_ = 0.0;
  std::uint64_t count_ = 0;
};

inline MomentTable gaussianity_check(std::span<const FieldState> noise_fields, std::vector<WickCheck> checks) {
  if (noise_fields.empty()) throw EstimatorError("gaussianity check: no fields");
  GaussianityAccumulator acc(noise_fields.front().grid, std::move(checks));
  for (const auto& f : noise_fields) acc.add(f);
  return acc.table();
}

} // namespace holotele
