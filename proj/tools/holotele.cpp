// holotele: run the teleportation experiment in one process, split it into
// alice/bob processes over a frame stream, or run the acceptance checks.
//
// Exit codes: 0 ok, 1 verification failure, 2 configuration error, 3 I/O or
// stream protocol error.

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "holotele/acceptance.hpp"
#include "holotele/config.hpp"
#include "holotele/experiment.hpp"
#include "holotele/field_io.hpp"
#include "holotele/report_io.hpp"
#include "holotele/socket_stream.hpp"

namespace fs = std::filesystem;
using namespace holotele;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed, trials;
  std::optional<std::string> grid;
  std::optional<double> r0, qc, omegac, psi0, phi;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::string stream;
  std::vector<std::string> checks;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--trials", o.trials, "number of trials");
  cmd->add_option("--grid", o.grid, "lattice NX,NY,NT");
  cmd->add_option("--r0", o.r0, "peak squeezing parameter");
  cmd->add_option("--qc", o.qc, "spatial bandwidth q_c");
  cmd->add_option("--omegac", o.omegac, "temporal bandwidth Omega_c");
  cmd->add_option("--psi0", o.psi0, "squeezing-ellipse orientation");
  cmd->add_option("--phi", o.phi, "Victor's local-oscillator phase");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.trials) c.trials = *o.trials;
  if (o.grid) {
    std::vector<std::size_t> dims;
    std::stringstream ss(*o.grid);
    try {
      for (std::string p; std::getline(ss, p, ',');) dims.push_back(std::stoul(p));
    } catch (const std::exception&) {
      dims.clear();
    }
    if (dims.size() != 3) throw ConfigError("--grid expects NX,NY,NT, got \"" + *o.grid + "\"");
    c.grid.nx = dims[0];
    c.grid.ny = dims[1];
    c.grid.nt = dims[2];
  }
  if (o.r0) c.kernel.r0 = *o.r0;
  if (o.qc) c.kernel.q_c = *o.qc;
  if (o.omegac) c.kernel.omega_c = *o.omegac;
  if (o.psi0) c.kernel.psi0 = *o.psi0;
  if (o.phi) c.phi = *o.phi;
  if (o.out) c.output = *o.out;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  if (c.cells_per_coherence_area() < 4.0)
    std::clog << "warning: coherence area spans only " << c.cells_per_coherence_area()
              << " lattice cells; pixels should be much smaller than the coherence area\n";
  return c;
}

void write_dumps(const fs::path& dir, const std::vector<DumpedField>& dumps) {
  for (const auto& d : dumps) write_field((dir / ("a_out_" + std::to_string(d.trial) + ".hfld")).string(), d.field);
}

void write_spectrum(const fs::path& dir, const std::string& stem, const SpectrumReport& r, Role role) {
  write_spectrum_csv((dir / (stem + ".csv")).string(), r);
  write_field((dir / (stem + ".hfld")).string(), spectrum_field(r, role));
}

fs::path prepare_output(const RunConfig& c) {
  fs::path dir(c.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

int cmd_run(const Overrides& o) {
  const RunConfig c = resolve(o);
  c.require_estimable();
  auto pair = std::make_shared<const KernelPair>(c.kernels());
  // Photocurrents are rounded exactly as the frame stream rounds them, so
  // the split-process pipeline reproduces these outputs bit for bit.
  const auto res = run_experiment(c, ChannelModel::Float32Wire, pair);
  const auto dir = prepare_output(c);
  write_dumps(dir, res.dumps);
  nlohmann::json summary = {{"config", to_json(c)},
                            {"cells_per_coherence_area", c.cells_per_coherence_area()},
                            {"channel", "float32"}};
  if (res.comparison) {
    write_spectrum(dir, "spectrum_in", *res.spectrum_in, Role::AIn);
    write_spectrum(dir, "spectrum_out", *res.spectrum_out, Role::AOut);
    summary["spectrum"] = comparison_json(*res.comparison);
    summary["passed"] = res.comparison->passed;
  }
  if (res.green) {
    write_csv((dir / "green_lag.csv").string(), green_lag_table(*res.green));
    write_csv((dir / "green_spectrum.csv").string(), green_spectrum_table(*res.green));
    summary["green"] = {{"in_band_rms_relative_error", green_spectrum_rms_error(*res.green, in_band_mask(c.grid, c.kernel))},
                        {"zero_lag", res.green->estimated_correlation[0].real()},
                        {"zero_lag_analytic", res.green->analytic_correlation[0].real()}};
  }
  nlohmann::json coarse = nlohmann::json::array();
  for (std::size_t b = 0; b < res.coarse.size(); ++b) {
    const auto& rep = res.coarse[b];
    const auto& win = res.coarse_windowed[b];
    const std::string name = "coarse_" + std::to_string(rep.block.lx) + "x" + std::to_string(rep.block.ly) + "x" +
                             std::to_string(rep.block.lt) + ".csv";
    write_csv((dir / name).string(), coarse_table(rep, win.covariance));
    double d = 0.0, w = 0.0;
    for (std::size_t i = 0; i < rep.blocks; ++i) {
      d += rep.at(i, i).real();
      w += win.covariance[i * rep.blocks + i].real();
    }
    coarse.push_back({{"block", {rep.block.lx, rep.block.ly, rep.block.lt}},
                      {"diagonal_mean", d / static_cast<double>(rep.blocks)},
                      {"windowed_diagonal", w / static_cast<double>(rep.blocks)},
                      {"predicted_diagonal", rep.predicted_diagonal}});
  }
  if (!coarse.empty()) summary["coarse"] = coarse;
  if (res.gaussianity) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : res.gaussianity->wick_rows)
      rows.push_back({{"label", row.label}, {"ratio", row.ratio}, {"ratio_standard_error", row.ratio_standard_error}});
    summary["gaussianity"] = {{"wick", rows}, {"pair_moment_z", res.gaussianity->pair_moment_z}};
  }
  write_json((dir / "summary.json").string(), summary);
  if (res.comparison)
    std::clog << "in-band ratio " << res.comparison->in_band.mean_ratio << " (analytic "
              << res.comparison->in_band.analytic_ratio << "), out-of-band ratio "
              << res.comparison->out_of_band.mean_ratio << " (analytic "
              << res.comparison->out_of_band.analytic_ratio << ")\n";
  return kExitOk;
}

bool is_pipe_stream(const std::string& s) { return s.empty() || s == "stdout" || s == "stdin" || s == "-"; }

std::string tcp_address(const std::string& s) {
  if (s.rfind("tcp:", 0) != 0) throw ConfigError("--stream must be stdout or tcp:HOST:PORT, got \"" + s + "\"");
  return s.substr(4);
}

int cmd_alice(const Overrides& o) {
  const RunConfig c = resolve(o);
  (void)c.kernels();
  if (is_pipe_stream(o.stream)) {
    std::ios::sync_with_stdio(false);
    run_alice(c, std::cout);
  } else {
    auto ep = net::parse_endpoint(tcp_address(o.stream));
    auto sock = net::connect(ep);
    run_alice(c, *sock);
  }
  return kExitOk;
}

int cmd_bob(const Overrides& o) {
  const RunConfig c = resolve(o);
  c.require_estimable();
  (void)c.kernels();
  BobResult res;
  if (is_pipe_stream(o.stream)) {
    std::ios::sync_with_stdio(false);
    res = run_bob(c, std::cin);
  } else {
    auto ep = net::parse_endpoint(tcp_address(o.stream));
    net::Listener listener(ep);
    auto sock = listener.accept();
    res = run_bob(c, *sock);
  }
  const auto dir = prepare_output(c);
  write_dumps(dir, res.dumps);
  if (res.spectrum_out) write_spectrum(dir, "spectrum_out", *res.spectrum_out, Role::AOut);
  std::clog << "bob: " << res.frames << " frames\n";
  return kExitOk;
}

int cmd_verify(const Overrides& o) {
  std::optional<RunConfig> configured;
  std::vector<std::string> selected = o.checks;
  AcceptanceContext ctx;
  if (!o.config.empty() || o.seed || o.trials || o.grid || o.r0 || o.qc || o.omegac || o.psi0 || o.phi) {
    configured = resolve(o);
    if (selected.empty()) selected = configured->verify.checks;
    ctx.inject_broken_kernel = configured->verify.inject_broken_kernel;
    ctx.threads = configured->threads;
  }
  if (o.threads) ctx.threads = *o.threads;
  for (const auto& s : selected) {
    bool known = s == "configured_experiment";
    for (const auto& [key, fn] : acceptance_checks()) known = known || key == s;
    if (!known) throw ConfigError("unknown check \"" + s + "\"");
  }
  auto wanted = [&](const std::string& key) {
    return selected.empty() || std::find(selected.begin(), selected.end(), key) != selected.end();
  };
  std::error_code ec;
  ctx.executable = fs::read_symlink("/proc/self/exe", ec).string();
  if (o.out) ctx.scratch_dir = (fs::path(*o.out) / "pipeline").string();

  std::vector<CheckResult> results;
  auto record = [&](CheckResult r) {
    std::clog << r.line() << "\n";
    results.push_back(std::move(r));
  };
  auto guarded = [&](int number, const std::string& key, auto&& fn) {
    try {
      record(fn());
    } catch (const Error& e) {
      record({number, key, false, std::string("error: ") + e.what(), {}});
    }
  };
  int number = 0;
  for (const auto& [key, fn] : acceptance_checks()) {
    ++number;
    if (wanted(key)) guarded(number, key, [&] { return fn(ctx); });
  }
  if (configured && wanted("configured_experiment"))
    guarded(0, "configured_experiment", [&] { return check_configured_experiment(*configured); });

  bool all = true;
  nlohmann::json verdict = {{"checks", nlohmann::json::array()}};
  for (const auto& r : results) {
    all = all && r.passed;
    verdict["checks"].push_back(check_json(r));
  }
  verdict["passed"] = all;
  std::cout << verdict.dump(2) << std::endl;
  if (o.out) {
    fs::create_directories(*o.out, ec);
    write_json((fs::path(*o.out) / "verify.json").string(), verdict);
  }
  return all ? kExitOk : kExitVerification;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Holographic teleportation simulator"};
  app.require_subcommand(1);
  Overrides o;
  auto* run = app.add_subcommand("run", "run trials in-process and write reports");
  auto* alice = app.add_subcommand("alice", "measure and stream photocurrent frames");
  auto* bob = app.add_subcommand("bob", "read frames, reconstruct A_out, write reports");
  auto* verify = app.add_subcommand("verify", "run the acceptance checks");
  for (auto* cmd : {run, alice, bob, verify}) add_common(cmd, o);
  for (auto* cmd : {alice, bob})
    cmd->add_option("--stream", o.stream, "stdout (pipe) or tcp:HOST:PORT")->default_str("stdout");
  verify->add_option("--check", o.checks, "run only the named checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o);
    if (*alice) return cmd_alice(o);
    if (*bob) return cmd_bob(o);
    if (*verify) return cmd_verify(o);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const KernelError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GridMismatch& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerification;
  }
  return kExitOk;
}
