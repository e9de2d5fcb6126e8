#pragma once

// Acceptance checks shared by `holotele verify` and the acceptance test
// binary. Each check runs its own experiment at fixed seeds and returns a
// verdict with the numbers behind it.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "holotele/experiment.hpp"
#include "holotele/field_io.hpp"
#include "holotele/oracle.hpp"
#include "holotele/report_io.hpp"

namespace holotele {

struct CheckResult {
  int number = 0;  // 0 for checks outside the numbered list
  std::string key;
  bool passed = false;
  std::string detail;
  nlohmann::json metrics = nlohmann::json::object();

  std::string line() const {
    std::string head = number > 0 ? "criterion " + std::to_string(number) + " " + key : key;
    return head + ": " + (passed ? "PASS" : "FAIL") + " (" + detail + ")";
  }
};

struct AcceptanceContext {
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  std::string executable;   // holotele CLI, needed by the pipeline check
  std::string scratch_dir;  // working directory for pipeline files
  bool inject_broken_kernel = false;
};

namespace acceptance_detail {

inline std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

inline RunConfig base_config(const AcceptanceContext& ctx, std::size_t nx, std::size_t ny, std::size_t nt,
                             double r0, std::uint64_t trials, std::uint64_t seed_offset) {
  RunConfig c;
  c.grid = {nx, ny, nt, 1.0, 1.0, 1.0};
  c.kernel.model = KernelModel::FlatBand;
  c.kernel.r0 = r0;
  c.trials = trials;
  c.seed = ctx.seed + seed_offset;
  c.threads = ctx.threads;
  c.analysis.spectrum = false;
  c.analysis.green = false;
  c.analysis.dump_fields = 0;
  return c;
}

/// Family-wise 3 sigma threshold (two-sided 0.27%) split over m tests.
inline double sidak_level(std::size_t m) { return 1.0 - std::pow(1.0 - 0.0026997960632601866, 1.0 / static_cast<double>(m)); }

/// Tail probability of one complex estimate with total standard error `se`
/// under a zero-mean null; `real_only` marks estimates that are real by
/// symmetry (self-conjugate lags).
inline double null_p_value(cplx value, double se, bool real_only) {
  if (se <= 0.0) return 1.0;
  if (real_only) return std::erfc(std::abs(value.real()) / se / std::numbers::sqrt2);
  return std::exp(-std::norm(value) / (se * se));
}

struct NullTest {
  std::size_t tests = 0;
  double min_p = 1.0;
  double threshold = 0.0;
  double chi2_z = 0.0;  // (chi2 - dof) / sqrt(2 dof)
  bool max_ok = true;
  bool chi2_ok = true;
  bool passed() const { return max_ok && chi2_ok; }
};

/// Joint "consistent with zero at 3 sigma" test: the most extreme entry
/// against a Sidak-corrected level, and the sum of squared z-scores against
/// its chi-square distribution.
inline NullTest zero_consistency(const std::vector<cplx>& values, const std::vector<double>& se,
                                 const std::vector<char>& real_only) {
  NullTest t;
  double chi2 = 0.0, dof = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (se[i] <= 0.0) continue;
    ++t.tests;
    t.min_p = std::min(t.min_p, null_p_value(values[i], se[i], real_only[i]));
    if (real_only[i]) {
      chi2 += std::pow(values[i].real() / se[i], 2);
      dof += 1.0;
    } else {
      chi2 += 2.0 * std::norm(values[i]) / (se[i] * se[i]);
      dof += 2.0;
    }
  }
  t.threshold = sidak_level(std::max<std::size_t>(t.tests, 1));
  t.max_ok = t.min_p >= t.threshold;
  t.chi2_z = dof > 0 ? (chi2 - dof) / std::sqrt(2.0 * dof) : 0.0;
  t.chi2_ok = t.chi2_z <= 3.0;
  return t;
}

inline nlohmann::json null_json(const NullTest& t) {
  return {{"tests", t.tests}, {"min_p", t.min_p}, {"sidak_threshold", t.threshold}, {"chi2_z", t.chi2_z},
          {"passed", t.passed()}};
}

struct ProcessResult {
  int exit_code = -1;
  std::string stderr_text;
};

inline ProcessResult run_shell(const std::string& command, const std::string& stderr_path) {
  const std::string full = "(" + command + ") 2>" + stderr_path;
  const int status = std::system(full.c_str());
  ProcessResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(stderr_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.stderr_text = ss.str();
  return r;
}

inline std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

inline bool same_bytes(const std::string& a, const std::string& b) {
  if (!std::filesystem::exists(a) || !std::filesystem::exists(b)) return false;
  return binio::read_file(a) == binio::read_file(b);
}

} // namespace acceptance_detail

// ---------------------------------------------------------------------------

/// 1. A_out = A_in + F realization by realization over random configurations.
inline CheckResult check_heisenberg_identity(const AcceptanceContext& ctx) {
  std::mt19937_64 gen(ctx.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t sides[] = {2, 3, 4, 6, 8};
  const std::size_t times[] = {4, 5, 8, 16};
  double worst = 0.0;
  std::string worst_config;
  for (int i = 0; i < 100; ++i) {
    SpaceTimeGrid g{sides[gen() % 5], sides[gen() % 5], times[gen() % 4], 0.5 + 1.5 * u01(gen), 0.5 + 1.5 * u01(gen),
                    0.5 + 1.5 * u01(gen)};
    KernelParams kp;
    kp.model = gen() % 2 ? KernelModel::FlatBand : KernelModel::GaussianBand;
    kp.r0 = 3.0 * u01(gen);
    kp.q_c = 0.5 + 3.0 * u01(gen);
    kp.omega_c = 0.5 + 3.0 * u01(gen);
    kp.psi0 = std::numbers::pi * u01(gen);
    TeleportConfig cfg;
    cfg.grid = g;
    cfg.kernels = std::make_shared<const KernelPair>(build_kernel_pair(kp, g));
    cfg.protocol = ProtocolParams::teleporting(0.5 + 1.5 * u01(gen), 0.5 + u01(gen));
    cfg.input = {{6.0 * u01(gen) - 3.0, 6.0 * u01(gen) - 3.0}};
    const auto rec = run_teleport(cfg, {ctx.seed + static_cast<std::uint64_t>(i), gen() % 1000});
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      num = std::max(num, std::abs(rec.a_out.values[k] - rec.a_in.values[k] - rec.f.values[k]));
      den = std::max(den, std::abs(rec.a_out.values[k]));
    }
    const double rel = num / den;
    if (rel > worst) {
      worst = rel;
      worst_config = std::to_string(g.nx) + "x" + std::to_string(g.ny) + "x" + std::to_string(g.nt) +
                     " r0=" + acceptance_detail::fmt(kp.r0) + " model=" + to_string(kp.model);
    }
  }
  CheckResult r{1, "heisenberg_identity", worst < 1e-10, "", {}};
  r.detail = "100 configurations, worst max|A_out - A_in - F| / max|A_out| = " + acceptance_detail::fmt(worst, 3) +
             " (limit 1e-10) at " + worst_config;
  r.metrics = {{"worst_relative_residual", worst}, {"configurations", 100}};
  return r;
}

/// Classical-limit experiment shared by checks 2 and 4.
inline const ExperimentResult& classical_limit_run(const AcceptanceContext& ctx) {
  static std::map<std::pair<std::uint64_t, unsigned>, ExperimentResult> cache;
  auto key = std::make_pair(ctx.seed, ctx.threads);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto c = acceptance_detail::base_config(ctx, 16, 16, 64, 0.0, 2000, 2);
  c.analysis.spectrum = true;
  c.analysis.green = true;
  c.input_amplitude = {2.0, -1.0};
  return cache.emplace(key, run_experiment(c)).first->second;
}

/// 2. r = 0: out/in spectrum ratio 3 within +-0.15 in every bin.
inline CheckResult check_classical_limit(const AcceptanceContext& ctx) {
  const auto& res = classical_limit_run(ctx);
  const auto& cmp = *res.comparison;
  std::size_t outside = 0;
  double max_dev = 0.0, sum_sq = 0.0;
  for (std::size_t k = 0; k < cmp.ratio.size(); ++k) {
    const double dev = std::abs(cmp.ratio[k] - 3.0);
    max_dev = std::max(max_dev, dev);
    if (dev > 0.15) ++outside;
    sum_sq += dev * dev;
  }
  const double n = static_cast<double>(cmp.ratio.size());
  // Bin-to-bin spread of the ratio: the realized per-bin standard error,
  // including the positive correlation of the in and out periodograms.
  const double spread = std::sqrt(sum_sq / n);
  CheckResult r{2, "classical_limit", outside == 0, "", {}};
  r.detail = std::to_string(outside) + " of " + std::to_string(cmp.ratio.size()) +
             " bins outside 3 +- 0.15, max |ratio - 3| = " + acceptance_detail::fmt(max_dev) +
             ", per-bin ratio spread = " + acceptance_detail::fmt(spread) + " so +-0.15 spans " +
             acceptance_detail::fmt(0.15 / spread, 3) + " standard errors, mean ratio = " +
             acceptance_detail::fmt(cmp.all.mean_ratio, 5);
  r.metrics = {{"bins_outside", outside},
               {"bins", cmp.ratio.size()},
               {"max_abs_deviation", max_dev},
               {"per_bin_spread", spread},
               {"comparison", comparison_json(cmp)}};
  return r;
}

/// 3. r0 = 2, psi = 0: in-band 1 + 2e^-4 within 0.05, out-of-band 3 within 0.15.
inline CheckResult check_quantum_regime(const AcceptanceContext& ctx) {
  auto c = acceptance_detail::base_config(ctx, 16, 16, 64, 2.0, 2000, 3);
  c.analysis.spectrum = true;
  c.input_amplitude = {1.0, 0.5};
  const auto res = run_experiment(c);
  const auto& cmp = *res.comparison;
  const double expect_in = 1.0 + 2.0 * std::exp(-4.0);
  const bool in_ok = cmp.in_band.bins > 0 && std::abs(cmp.in_band.mean_ratio - expect_in) <= 0.05;
  const bool out_ok = cmp.out_of_band.bins > 0 && std::abs(cmp.out_of_band.mean_ratio - 3.0) <= 0.15;
  CheckResult r{3, "quantum_regime", in_ok && out_ok, "", {}};
  r.detail = "in-band ratio " + acceptance_detail::fmt(cmp.in_band.mean_ratio, 6) + " over " +
             std::to_string(cmp.in_band.bins) + " bins (expect " + acceptance_detail::fmt(expect_in, 6) +
             " +- 0.05), out-of-band ratio " + acceptance_detail::fmt(cmp.out_of_band.mean_ratio, 6) + " over " +
             std::to_string(cmp.out_of_band.bins) + " bins (expect 3 +- 0.15)";
  r.metrics = {{"expected_in_band", expect_in}, {"comparison", comparison_json(cmp)}};
  return r;
}

/// 4. Noise spectrum vs G in-band; delta-correlated lag estimate at r = 0.
inline CheckResult check_green_function(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  auto c = base_config(ctx, 16, 16, 64, 1.0, 2000, 4);
  c.analysis.green = true;
  const auto res = run_experiment(c);
  const auto& g = *res.green;
  const double rms = green_spectrum_rms_error(g, in_band_mask(c.grid, c.kernel));
  const bool rms_ok = rms < 0.05;

  const auto& g0 = *classical_limit_run(ctx).green;
  const auto& grid = g0.grid;
  const double expect0 = 1.0 / grid.cell_volume();
  const cplx zero = g0.estimated_correlation[0];
  const bool zero_ok = std::abs(zero.real() - expect0) <= 0.05 * expect0;
  std::vector<cplx> vals;
  std::vector<double> ses;
  std::vector<char> real_only;
  for (std::size_t l = 1; l < grid.size(); ++l) {
    const std::size_t m = conjugate_mode_index(grid, l);
    if (m < l) continue;  // C(-l) = C(l)*
    vals.push_back(g0.estimated_correlation[l]);
    ses.push_back(g0.correlation_standard_error[l]);
    real_only.push_back(m == l ? 1 : 0);
  }
  const auto null = zero_consistency(vals, ses, real_only);
  CheckResult r{4, "green_function", rms_ok && zero_ok && null.passed(), "", {}};
  r.detail = "r0=1 in-band RMS rel. error " + fmt(100.0 * rms) + "% (limit 5%); r=0 zero lag " + fmt(zero.real(), 6) +
             " vs " + fmt(expect0, 6) + " (5%); " + std::to_string(null.tests) +
             " independent nonzero lags: min p " + fmt(null.min_p, 3) + " vs family-wise level " +
             fmt(null.threshold, 3) + ", chi2 z " + fmt(null.chi2_z, 3) + " (limit 3)";
  r.metrics = {{"in_band_rms_relative_error", rms},
               {"zero_lag", zero.real()},
               {"zero_lag_expected", expect0},
               {"nonzero_lags", null_json(null)}};
  return r;
}

/// 5. Negative lag correlations at 3 sigma within one coherence length/time.
inline CheckResult check_anticorrelation(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  auto c = base_config(ctx, 16, 16, 64, 1.5, 1000, 5);
  c.analysis.green = true;
  const auto res = run_experiment(c);
  const auto& g = *res.green;
  const auto& grid = g.grid;
  const double lc = std::sqrt(c.kernel.coherence_area());
  const double tc = c.kernel.coherence_time();
  std::size_t significant = 0, checked = 0;
  double best_z = 0.0;
  std::string best_lag;
  for (std::size_t l = 1; l < grid.size(); ++l) {
    const auto i = grid.unravel(l);
    const double x = static_cast<double>(SpaceTimeGrid::signed_index(i.ix, grid.nx)) * grid.dx;
    const double y = static_cast<double>(SpaceTimeGrid::signed_index(i.iy, grid.ny)) * grid.dy;
    const double t = static_cast<double>(SpaceTimeGrid::signed_index(i.it, grid.nt)) * grid.dt;
    if (std::abs(x) > lc || std::abs(y) > lc || std::abs(t) > tc) continue;
    ++checked;
    const double z = g.estimated_correlation[l].real() / g.correlation_standard_error[l];
    if (z < -3.0) ++significant;
    if (z < best_z) {
      best_z = z;
      best_lag = "(" + fmt(x) + ", " + fmt(y) + ", " + fmt(t) + ")";
    }
  }
  const double zero = g.estimated_correlation[0].real();
  CheckResult r{5, "anticorrelation", significant > 0 && zero > 0.0, "", {}};
  r.detail = std::to_string(significant) + " of " + std::to_string(checked) +
             " lags within one coherence length/time negative at 3 sigma; strongest z = " + fmt(best_z) + " at lag " +
             best_lag + "; zero lag " + fmt(zero);
  r.metrics = {{"significant_negative_lags", significant}, {"lags_checked", checked}, {"strongest_z", best_z}};
  return r;
}

/// 6. Coarse-grained covariance for blocks of >= 3 coherence lengths/times.
inline CheckResult check_coarse_grain(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  auto c = base_config(ctx, 24, 24, 24, 1.5, 2000, 6);
  c.analysis.coarse_blocks = {{6, 6, 6}, {8, 8, 8}, {12, 12, 12}};
  const auto res = run_experiment(c);
  const double limit = std::exp(-2.0 * c.kernel.r0);
  bool diag_ok = true, converge_ok = true, monotone_ok = true;
  std::vector<double> diag_mean, diag_se, pred_mean;
  std::vector<cplx> off_vals, off_dev;
  std::vector<double> off_se;
  std::vector<char> off_real;
  double worst_diag = 0.0;
  for (std::size_t b = 0; b < res.coarse.size(); ++b) {
    const auto& rep = res.coarse[b];
    const auto& win = res.coarse_windowed[b];
    double dsum = 0.0, dvar = 0.0, psum = 0.0;
    for (std::size_t i = 0; i < rep.blocks; ++i) {
      const double d = rep.at(i, i).real();
      const double p = win.covariance[i * rep.blocks + i].real();
      worst_diag = std::max(worst_diag, std::abs(d - p) / p);
      if (std::abs(d - p) > 0.2 * p) diag_ok = false;
      dsum += d;
      dvar += std::pow(rep.standard_error[i * rep.blocks + i], 2);
      psum += p;
      for (std::size_t j = i + 1; j < rep.blocks; ++j) {
        off_vals.push_back(rep.at(i, j));
        off_dev.push_back(rep.at(i, j) - win.covariance[i * rep.blocks + j]);
        off_se.push_back(rep.standard_error[i * rep.blocks + j]);
        off_real.push_back(0);
      }
    }
    const double nb = static_cast<double>(rep.blocks);
    diag_mean.push_back(dsum / nb);
    diag_se.push_back(std::sqrt(dvar) / nb);
    pred_mean.push_back(psum / nb);
  }
  for (std::size_t b = 1; b < diag_mean.size(); ++b) {
    if (!(std::abs(pred_mean[b] - limit) < std::abs(pred_mean[b - 1] - limit))) converge_ok = false;
    const double diff = diag_mean[b - 1] - diag_mean[b];
    if (!(diff > 3.0 * std::hypot(diag_se[b - 1], diag_se[b]))) monotone_ok = false;
  }
  const auto off_zero = zero_consistency(off_vals, off_se, off_real);
  const auto off_pred = zero_consistency(off_dev, off_se, off_real);
  double max_off = 0.0;
  for (const auto& v : off_vals) max_off = std::max(max_off, std::abs(v));
  CheckResult r{6, "coarse_grain", diag_ok && converge_ok && monotone_ok && off_zero.passed(), "", {}};
  std::string diags, preds;
  for (std::size_t b = 0; b < diag_mean.size(); ++b) {
    diags += (b ? "/" : "") + fmt(diag_mean[b]);
    preds += (b ? "/" : "") + fmt(pred_mean[b]);
  }
  r.detail = "blocks 6/8/12 (coherence length 2): diagonal " + diags + " vs windowed " + preds + " (worst rel. dev " +
             fmt(100.0 * worst_diag, 3) + "%, limit 20%), e^-2r = " + fmt(limit) + ", windowed converging " +
             (converge_ok ? "yes" : "no") + ", diagonal decreasing at 3 sigma " + (monotone_ok ? "yes" : "no") +
             "; off-diagonals vs 0: max |C| " + fmt(max_off, 3) + ", min p " + fmt(off_zero.min_p, 3) +
             " vs level " + fmt(off_zero.threshold, 3) + " (" + (off_zero.passed() ? "consistent" : "inconsistent") +
             "); off-diagonals vs windowed prediction: min p " + fmt(off_pred.min_p, 3) + ", chi2 z " +
             fmt(off_pred.chi2_z, 3) + " (" + (off_pred.passed() ? "consistent" : "inconsistent") + ")";
  r.metrics = {{"diagonal_mean", diag_mean},
               {"diagonal_standard_error", diag_se},
               {"windowed_diagonal", pred_mean},
               {"limit", limit},
               {"worst_diagonal_relative_deviation", worst_diag},
               {"windowed_converging", converge_ok},
               {"diagonal_monotone", monotone_ok},
               {"off_diagonal_vs_zero", null_json(off_zero)},
               {"off_diagonal_vs_windowed", null_json(off_pred)}};
  return r;
}

/// Commutator residual for one kernel pair, as reported by `verify`.
inline bool commutator_verification(const KernelPair& pair, double& residual, std::string& why) {
  residual = noise_commutator_check(pair);
  if (residual >= 1e-12) {
    why = "commutator residual " + acceptance_detail::fmt(residual, 3);
    return false;
  }
  try {
    (void)green_kernel(pair);
  } catch (const KernelError& e) {
    why = e.what();
    return false;
  }
  return true;
}

/// 7. Commutator kernel vanishes for every shipped model; a broken pair fails.
inline CheckResult check_commutator(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  const SpaceTimeGrid grid{8, 8, 16, 1.0, 1.0, 1.0};
  KernelParams flat;
  flat.r0 = 2.0;
  KernelParams gauss;
  gauss.model = KernelModel::GaussianBand;
  gauss.r0 = 1.5;
  gauss.psi0 = 0.4;
  std::vector<std::pair<std::string, KernelPair>> shipped = {
      {"flat", build_kernel_pair(flat, grid)},
      {"gaussian", build_kernel_pair(gauss, grid)},
      {"tabulated", kernel_pair_from_table(
                        decode_kernel_table(encode_kernel_table(table_from_kernel(build_kernel(gauss, grid, 1)))),
                        grid)}};
  if (ctx.inject_broken_kernel)
    for (auto& [name, pair] : shipped) pair = with_broken_type_ii_symmetry(pair);
  bool shipped_ok = true;
  std::string parts;
  nlohmann::json m;
  for (const auto& [name, pair] : shipped) {
    double res = 0.0;
    std::string why;
    const bool ok = commutator_verification(pair, res, why);
    shipped_ok = shipped_ok && ok;
    parts += name + " " + fmt(res, 3) + (ok ? "" : " [" + why + "]") + ", ";
    m[name] = res;
  }
  // Exact dense cross-check on a tiny lattice.
  const SpaceTimeGrid tiny{4, 4, 8, 1.0, 1.0, 1.0};
  OracleInput oin{tiny, build_kernel_pair(gauss, tiny)};
  if (ctx.inject_broken_kernel) oin.kernels = with_broken_type_ii_symmetry(oin.kernels);
  const double dense = propagate_exact(oin).commutator_residual;

  KernelParams broken_params;
  broken_params.r0 = 1.0;
  const auto broken = with_broken_type_ii_symmetry(build_kernel_pair(broken_params, grid));
  double broken_res = 0.0;
  std::string broken_why;
  const bool broken_passes = commutator_verification(broken, broken_res, broken_why);
  const bool broken_ok = broken_res > 1e-3 && !broken_passes;
  CheckResult r{7, "commutator", shipped_ok && broken_ok, "", {}};
  r.detail = "residuals " + parts + "dense oracle " + fmt(dense, 3) + " (limit 1e-12); injected broken pair residual " +
             fmt(broken_res, 4) + " (needs > 1e-3), verification " + (broken_passes ? "passed" : "failed") +
             (broken_why.empty() ? "" : ": " + broken_why);
  m["dense_oracle"] = dense;
  m["broken_residual"] = broken_res;
  m["broken_rejected"] = !broken_passes;
  r.metrics = m;
  return r;
}

/// 8. Wick factorization of fourth moments at 10^4 trials.
inline CheckResult check_gaussianity(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  auto c = base_config(ctx, 8, 8, 32, 1.5, 10000, 8);
  c.kernel.psi0 = std::numbers::pi / 4.0;
  c.analysis.gaussianity = true;
  const auto res = run_experiment(c);
  const auto& t = *res.gaussianity;
  bool ok = t.wick_rows.size() >= 3;
  std::string parts;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.wick_rows) {
    ok = ok && std::abs(row.ratio - 1.0) <= 0.1;
    parts += row.label + " " + fmt(row.ratio, 5) + " +- " + fmt(row.ratio_standard_error, 2) + ", ";
    rows.push_back({{"label", row.label},
                    {"ratio", row.ratio},
                    {"ratio_standard_error", row.ratio_standard_error},
                    {"measured", {row.measured.real(), row.measured.imag()}},
                    {"wick", {row.wick.real(), row.wick.imag()}}});
  }
  CheckResult r{8, "gaussianity", ok, "", {}};
  r.detail = "measured / Wick: " + parts + "limit 1 +- 0.1; <FF> z = " + fmt(t.pair_moment_z, 3);
  r.metrics = {{"rows", rows}, {"pair_moment_z", t.pair_moment_z}, {"trials", t.trials}};
  return r;
}

/// 9. Dense oracle vs closed form and vs Monte Carlo on a 4x4x8 lattice.
inline CheckResult check_oracle(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  const SpaceTimeGrid grid{4, 4, 8, 1.0, 1.0, 1.0};
  struct Case {
    KernelModel model;
    double r0, psi0, phi;
  };
  const Case cases[] = {{KernelModel::FlatBand, 0.0, 0.0, 0.0},
                        {KernelModel::FlatBand, 1.0, 0.0, 0.7},
                        {KernelModel::FlatBand, 2.0, 0.0, 0.0},
                        {KernelModel::FlatBand, 1.0, std::numbers::pi / 2, 1.3},
                        {KernelModel::GaussianBand, 1.2, 0.3, 0.4}};
  double worst = 0.0;
  for (const auto& cs : cases) {
    KernelParams kp;
    kp.model = cs.model;
    kp.r0 = cs.r0;
    kp.psi0 = cs.psi0;
    const auto pair = build_kernel_pair(kp, grid);
    const auto ex = propagate_exact({grid, pair, ProtocolParams::teleporting(), cs.phi, {}});
    const auto in_flat = coherent_input_spectrum(grid, 1.0);
    const auto closed = analytic_out_spectrum(pair, cs.phi, in_flat, 1.0);
    const auto gk = green_kernel(pair);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      worst = std::max(worst, std::abs(ex.out_spectrum.estimated[k] - closed[k]) / closed[k]);
      worst = std::max(worst, std::abs(ex.in_spectrum.estimated[k] - 1.0));
      worst = std::max(worst, std::abs(ex.green_spectrum[k] - gk.g[k]) / gk.g[k]);
    }
  }
  auto c = base_config(ctx, 4, 4, 8, 1.0, 4000, 9);
  c.analysis.spectrum = true;
  c.input_amplitude = {1.5, -0.5};
  const auto mc = run_experiment(c);
  const auto ex = propagate_exact({grid, *mc.kernels, c.protocol(), c.phi, {}});
  std::size_t in_within = 0, out_within = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(mc.spectrum_in->estimated[k] - ex.in_spectrum.estimated[k]) < 3.0 * mc.spectrum_in->standard_error[k])
      ++in_within;
    if (std::abs(mc.spectrum_out->estimated[k] - ex.out_spectrum.estimated[k]) <
        3.0 * mc.spectrum_out->standard_error[k])
      ++out_within;
  }
  const double n = static_cast<double>(grid.size());
  const double fin = in_within / n, fout = out_within / n;
  CheckResult r{9, "oracle_equivalence", worst < 1e-10 && fin >= 0.95 && fout >= 0.95, "", {}};
  r.detail = "oracle vs closed form worst rel. error " + fmt(worst, 3) + " (limit 1e-10) over 5 configs; MC within 3 SE: in " +
             fmt(100.0 * fin) + "%, out " + fmt(100.0 * fout) + "% of bins (need 95%)";
  r.metrics = {{"closed_form_worst", worst}, {"mc_in_fraction", fin}, {"mc_out_fraction", fout}};
  return r;
}

/// 10. alice | bob reproduces run byte for byte; corrupted streams are rejected.
inline CheckResult check_pipeline(const AcceptanceContext& ctx) {
  using namespace acceptance_detail;
  namespace fs = std::filesystem;
  CheckResult r{10, "pipeline_equivalence", false, "", {}};
  if (ctx.executable.empty() || !fs::exists(ctx.executable)) {
    r.detail = "holotele executable not available";
    return r;
  }
  const fs::path dir = ctx.scratch_dir.empty() ? fs::temp_directory_path() / ("holotele_pipeline_" + std::to_string(::getpid()))
                                               : fs::path(ctx.scratch_dir);
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto c = base_config(ctx, 8, 8, 16, 1.0, 48, 10);
  c.analysis.spectrum = true;
  c.analysis.dump_fields = 3;
  c.input_amplitude = {0.75, 0.25};
  const std::string cfg = (dir / "config.json").string();
  binio::write_file(cfg, to_json(c).dump(2));
  const std::string exe = quote(ctx.executable);
  const std::string err = (dir / "stderr.txt").string();
  auto path = [&](const std::string& name) { return quote((dir / name).string()); };

  std::vector<std::string> problems;
  auto expect_ok = [&](const std::string& what, const ProcessResult& p) {
    if (p.exit_code != 0) problems.push_back(what + " exited " + std::to_string(p.exit_code) + ": " + p.stderr_text);
  };
  expect_ok("run", run_shell(exe + " run --config " + quote(cfg) + " --out " + path("run"), err));
  expect_ok("alice", run_shell(exe + " alice --config " + quote(cfg) + " --stream stdout > " + path("frames.bin"), err));
  expect_ok("bob (file)", run_shell(exe + " bob --config " + quote(cfg) + " --out " + path("bob_file") + " < " +
                                        path("frames.bin"),
                                    err));
  expect_ok("alice | bob", run_shell(exe + " alice --config " + quote(cfg) + " --stream stdout | " + exe +
                                         " bob --config " + quote(cfg) + " --out " + path("bob_pipe"),
                                     err));
  const int port = 20000 + static_cast<int>(::getpid() % 20000);
  const std::string tcp = "tcp:127.0.0.1:" + std::to_string(port);
  expect_ok("tcp", run_shell(exe + " bob --config " + quote(cfg) + " --stream " + tcp + " --out " + path("bob_tcp") +
                                 " & " + exe + " alice --config " + quote(cfg) + " --stream " + tcp +
                                 " && wait $!",
                             err));

  std::size_t compared = 0, identical = 0;
  std::vector<std::string> files = {"spectrum_out.csv", "spectrum_out.hfld"};
  for (int t = 0; t < 3; ++t) files.push_back("a_out_" + std::to_string(t) + ".hfld");
  for (const auto& f : files)
    for (const auto* other : {"bob_file", "bob_pipe", "bob_tcp"}) {
      ++compared;
      if (same_bytes((dir / "run" / f).string(), (dir / other / f).string())) ++identical;
      else problems.push_back(std::string(other) + "/" + f + " differs from run/" + f);
    }

  // Corruptions of the captured stream.
  std::string frames;
  try {
    frames = binio::read_file((dir / "frames.bin").string());
  } catch (const IoError&) {
  }
  const std::size_t frame_size = kFrameHeaderSize + 8 * c.grid.size();
  std::size_t diagnostics_ok = 0;
  auto expect_rejected = [&](const std::string& name, const std::string& bytes, const std::vector<std::string>& needles) {
    binio::write_file((dir / name).string(), bytes);
    const auto p = run_shell(exe + " bob --config " + quote(cfg) + " --out " + path("bob_" + name) + " < " + path(name), err);
    bool ok = p.exit_code == 3;
    for (const auto& n : needles) ok = ok && p.stderr_text.find(n) != std::string::npos;
    if (ok) ++diagnostics_ok;
    else problems.push_back(name + ": exit " + std::to_string(p.exit_code) + ", stderr: " + p.stderr_text);
  };
  if (frames.size() == c.trials * frame_size) {
    std::string bad_magic = frames;
    bad_magic[frame_size + 1] = 'X';
    expect_rejected("bad_magic.bin", bad_magic, {"frame 1", "byte offset " + std::to_string(frame_size), "magic"});
    expect_rejected("truncated.bin", frames.substr(0, 2 * frame_size + kFrameHeaderSize + 100),
                    {"frame 2", "byte offset " + std::to_string(2 * frame_size + kFrameHeaderSize + 100),
                     "end of stream"});
    expect_rejected("short.bin", frames.substr(0, 10 * frame_size), {"ended after 10 frames", "expected 48"});
    std::string bad_grid = frames;
    bad_grid[frame_size + 16] = 9;
    expect_rejected("bad_grid.bin", bad_grid, {"frame 1", "grid"});
  } else {
    problems.push_back("captured stream has " + std::to_string(frames.size()) + " bytes, expected " +
                       std::to_string(c.trials * frame_size));
  }
  r.passed = problems.empty();
  r.detail = std::to_string(identical) + " of " + std::to_string(compared) +
             " output files byte-identical across run, alice > file > bob, alice | bob and TCP; " +
             std::to_string(diagnostics_ok) + " of 4 corrupted streams rejected with exit 3 and located diagnostics";
  if (!problems.empty()) r.detail += "; first problem: " + problems.front();
  r.metrics = {{"identical_files", identical}, {"compared_files", compared}, {"diagnostics_ok", diagnostics_ok}};
  if (r.passed) fs::remove_all(dir);
  return r;
}

using CheckFn = std::function<CheckResult(const AcceptanceContext&)>;

inline const std::vector<std::pair<std::string, CheckFn>>& acceptance_checks() {
  static const std::vector<std::pair<std::string, CheckFn>> checks = {
      {"heisenberg_identity", check_heisenberg_identity}, {"classical_limit", check_classical_limit},
      {"quantum_regime", check_quantum_regime},           {"green_function", check_green_function},
      {"anticorrelation", check_anticorrelation},         {"coarse_grain", check_coarse_grain},
      {"commutator", check_commutator},                   {"gaussianity", check_gaussianity},
      {"oracle_equivalence", check_oracle},               {"pipeline_equivalence", check_pipeline}};
  return checks;
}

/// Spectrum verdict of a user-supplied configuration.
inline CheckResult check_configured_experiment(const RunConfig& c) {
  RunConfig rc = c;
  rc.analysis.spectrum = true;
  rc.analysis.dump_fields = 0;
  CheckResult r{0, "configured_experiment", false, "", {}};
  const auto res = run_experiment(rc);
  const auto& cmp = *res.comparison;
  r.passed = cmp.passed;
  r.detail = "in-band ratio " + acceptance_detail::fmt(cmp.in_band.mean_ratio, 6) + " (analytic " +
             acceptance_detail::fmt(cmp.in_band.analytic_ratio, 6) + "), out-of-band " +
             acceptance_detail::fmt(cmp.out_of_band.mean_ratio, 6) + " (analytic " +
             acceptance_detail::fmt(cmp.out_of_band.analytic_ratio, 6) + "), RMS rel. error " +
             acceptance_detail::fmt(cmp.all.rms_relative_error) + " vs tolerance " +
             acceptance_detail::fmt(cmp.tolerance);
  r.metrics = comparison_json(cmp);
  return r;
}

inline nlohmann::json check_json(const CheckResult& r) {
  return {{"criterion", r.number}, {"key", r.key}, {"passed", r.passed}, {"detail", r.detail}, {"metrics", r.metrics}};
}

} // namespace holotele
