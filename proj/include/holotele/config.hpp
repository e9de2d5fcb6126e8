#pragma once

// Run configuration: JSON file plus command-line overrides, validated in
// full before anything is computed or written.
//
// {
//   "grid":     {"nx": 16, "ny": 16, "nt": 64, "dx": 1, "dy": 1, "dt": 1},
//   "kernel":   {"model": "flat" | "gaussian" | "tabulated", "r0": 0, "q_c": 3.14159..,
//                "omega_c": 3.14159.., "psi0": 0, "table": "path.hkrn"},
//   "protocol": {"b0": 1, "a0": 1, "g": null},        g = null: g B0 sqrt 2 = 1
//   "input":    {"amplitude": [re, im]},
//   "trials": 2000, "seed": 1, "phi": 0, "threads": 0,
//   "analysis": {"spectrum": true, "green": true, "coarse_blocks": [[lx, ly, lt], ...],
//                "gaussianity": false, "dump_fields": 1, "tolerance": 0},
//   "verify":   {"checks": ["classical_limit", ...], "inject_broken_kernel": false},
//   "output": "holotele_out"
// }
//
// Unknown keys are rejected.

#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "holotele/analysis.hpp"
#include "holotele/binary_io.hpp"
#include "holotele/kernel.hpp"
#include "holotele/protocol.hpp"

namespace holotele {

struct AnalysisToggles {
  bool spectrum = true;
  bool green = true;
  std::vector<BlockShape> coarse_blocks;
  bool gaussianity = false;
  std::size_t dump_fields = 1;
  double tolerance = 0.0;  // 0: default_spectrum_tolerance(trials)
};

struct VerifyToggles {
  std::vector<std::string> checks;  // empty: all
  bool inject_broken_kernel = false;
};

struct RunConfig {
  SpaceTimeGrid grid{16, 16, 64, 1.0, 1.0, 1.0};
  KernelParams kernel;
  std::string kernel_table;  // required for the tabulated model
  double b0 = 1.0;
  double a0 = 1.0;
  std::optional<double> gain;
  cplx input_amplitude{0.0, 0.0};
  std::uint64_t trials = 2000;
  std::uint64_t seed = 1;
  double phi = 0.0;
  unsigned threads = 0;
  AnalysisToggles analysis;
  VerifyToggles verify;
  std::string output = "holotele_out";

  ProtocolParams protocol() const {
    return gain ? ProtocolParams::with_gain(b0, *gain, a0) : ProtocolParams::teleporting(b0, a0);
  }

  void validate() const {
    grid.validate();
    kernel.validate();
    protocol().validate();
    if (kernel.model == KernelModel::Tabulated && kernel_table.empty())
      throw ConfigError("kernel model \"tabulated\" needs kernel.table");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!std::isfinite(phi)) throw ConfigError("phi must be finite");
    if (!std::isfinite(input_amplitude.real()) || !std::isfinite(input_amplitude.imag()))
      throw ConfigError("input amplitude must be finite");
    for (const auto& b : analysis.coarse_blocks) BlockLayout(grid, b);
    if (analysis.tolerance < 0.0 || !std::isfinite(analysis.tolerance))
      throw ConfigError("analysis.tolerance must be finite and >= 0");
    if (output.empty()) throw ConfigError("output directory must not be empty");
  }

  bool wants_estimates() const {
    return analysis.spectrum || analysis.green || !analysis.coarse_blocks.empty() || analysis.gaussianity;
  }

  /// Estimators refuse single-trial input; commands that write reports check
  /// this up front so no partial output is produced.
  void require_estimable() const {
    if (wants_estimates() && trials < 2)
      throw ConfigError("trials = " + std::to_string(trials) + ": the requested analyses need at least 2 trials");
  }

  /// Lattice cells per coherence area; the pixel should be much smaller.
  double cells_per_coherence_area() const { return kernel.coherence_area() / (grid.dx * grid.dy); }

  /// Kernel pair for this configuration (reads the table file if tabulated).
  KernelPair kernels() const {
    if (kernel.model == KernelModel::Tabulated) return kernel_pair_from_table(read_kernel_table(kernel_table), grid);
    return build_kernel_pair(kernel, grid);
  }
};

namespace config_detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown config key \"" + (where.empty() ? "" : where + ".") + key + "\"");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key \"" + where + key + "\": " + e.what());
  }
}

inline KernelModel parse_model(const std::string& s) {
  if (s == "flat") return KernelModel::FlatBand;
  if (s == "gaussian") return KernelModel::GaussianBand;
  if (s == "tabulated") return KernelModel::Tabulated;
  throw ConfigError("unknown kernel model \"" + s + "\" (flat, gaussian, tabulated)");
}

} // namespace config_detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace config_detail;
  RunConfig c;
  reject_unknown(j, "", {"grid", "kernel", "protocol", "input", "trials", "seed", "phi", "threads", "analysis",
                         "verify", "output"});
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, "grid", {"nx", "ny", "nt", "dx", "dy", "dt"});
    read(g, "nx", c.grid.nx, "grid.");
    read(g, "ny", c.grid.ny, "grid.");
    read(g, "nt", c.grid.nt, "grid.");
    read(g, "dx", c.grid.dx, "grid.");
    read(g, "dy", c.grid.dy, "grid.");
    read(g, "dt", c.grid.dt, "grid.");
  }
  if (j.contains("kernel")) {
    const auto& k = j["kernel"];
    reject_unknown(k, "kernel", {"model", "r0", "q_c", "omega_c", "psi0", "table"});
    std::string model = to_string(c.kernel.model);
    read(k, "model", model, "kernel.");
    c.kernel.model = parse_model(model);
    read(k, "r0", c.kernel.r0, "kernel.");
    read(k, "q_c", c.kernel.q_c, "kernel.");
    read(k, "omega_c", c.kernel.omega_c, "kernel.");
    read(k, "psi0", c.kernel.psi0, "kernel.");
    read(k, "table", c.kernel_table, "kernel.");
  }
  if (j.contains("protocol")) {
    const auto& p = j["protocol"];
    reject_unknown(p, "protocol", {"b0", "a0", "g"});
    read(p, "b0", c.b0, "protocol.");
    read(p, "a0", c.a0, "protocol.");
    if (p.contains("g") && !p["g"].is_null()) {
      double g = 0.0;
      read(p, "g", g, "protocol.");
      c.gain = g;
    }
  }
  if (j.contains("input")) {
    const auto& in = j["input"];
    reject_unknown(in, "input", {"amplitude"});
    std::vector<double> amp{0.0, 0.0};
    read(in, "amplitude", amp, "input.");
    if (amp.size() != 2) throw ConfigError("input.amplitude must be [re, im]");
    c.input_amplitude = {amp[0], amp[1]};
  }
  read(j, "trials", c.trials, "");
  read(j, "seed", c.seed, "");
  read(j, "phi", c.phi, "");
  read(j, "threads", c.threads, "");
  read(j, "output", c.output, "");
  if (j.contains("analysis")) {
    const auto& a = j["analysis"];
    reject_unknown(a, "analysis", {"spectrum", "green", "coarse_blocks", "gaussianity", "dump_fields", "tolerance"});
    read(a, "spectrum", c.analysis.spectrum, "analysis.");
    read(a, "green", c.analysis.green, "analysis.");
    read(a, "gaussianity", c.analysis.gaussianity, "analysis.");
    read(a, "dump_fields", c.analysis.dump_fields, "analysis.");
    read(a, "tolerance", c.analysis.tolerance, "analysis.");
    std::vector<std::vector<std::size_t>> blocks;
    read(a, "coarse_blocks", blocks, "analysis.");
    for (const auto& b : blocks) {
      if (b.size() != 3) throw ConfigError("analysis.coarse_blocks entries must be [lx, ly, lt]");
      c.analysis.coarse_blocks.push_back({b[0], b[1], b[2]});
    }
  }
  if (j.contains("verify")) {
    const auto& v = j["verify"];
    reject_unknown(v, "verify", {"checks", "inject_broken_kernel"});
    read(v, "checks", c.verify.checks, "verify.");
    read(v, "inject_broken_kernel", c.verify.inject_broken_kernel, "verify.");
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = binio::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j);
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : c.analysis.coarse_blocks) blocks.push_back({b.lx, b.ly, b.lt});
  nlohmann::json j = {
      {"grid", {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"nt", c.grid.nt}, {"dx", c.grid.dx}, {"dy", c.grid.dy},
                {"dt", c.grid.dt}}},
      {"kernel", {{"model", to_string(c.kernel.model)}, {"r0", c.kernel.r0}, {"q_c", c.kernel.q_c},
                  {"omega_c", c.kernel.omega_c}, {"psi0", c.kernel.psi0}}},
      {"protocol", {{"b0", c.b0}, {"a0", c.a0}, {"g", c.gain ? nlohmann::json(*c.gain) : nlohmann::json(nullptr)}}},
      {"input", {{"amplitude", {c.input_amplitude.real(), c.input_amplitude.imag()}}}},
      {"trials", c.trials},
      {"seed", c.seed},
      {"phi", c.phi},
      {"threads", c.threads},
      {"analysis", {{"spectrum", c.analysis.spectrum}, {"green", c.analysis.green}, {"coarse_blocks", blocks},
                    {"gaussianity", c.analysis.gaussianity}, {"dump_fields", c.analysis.dump_fields},
                    {"tolerance", c.analysis.tolerance}}},
      {"verify", {{"checks", c.verify.checks}, {"inject_broken_kernel", c.verify.inject_broken_kernel}}},
      {"output", c.output}};
  if (!c.kernel_table.empty()) j["kernel"]["table"] = c.kernel_table;
  return j;
}

} // namespace holotele
