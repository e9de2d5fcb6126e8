#pragma once

// Runs a configured experiment: trials through the chain, reduced into the
// analysis accumulators, plus the two halves used by separate processes
// (Alice producing photocurrent frames, Bob consuming them).

#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "holotele/analysis.hpp"
#include "holotele/config.hpp"
#include "holotele/frame_stream.hpp"
#include "holotele/oracle.hpp"
#include "holotele/protocol.hpp"
#include "holotele/trials.hpp"

namespace holotele {

/// Zero-lag fourth moment plus two mixed-lag checks at `lag`.
inline std::vector<WickCheck> default_wick_checks(const LatticeOffset& lag = {1, 0, 0}) {
  return {{"zero_lag", {}, {}, {}, {}},
          {"intensity_correlation", {}, {}, lag, lag},  // <|F(0)|^2 |F(l)|^2>
          {"pair_exchange", {}, lag, {}, lag}};          // <F(0) F*(l) F(0) F*(l)>
}

inline TeleportConfig make_teleport_config(const RunConfig& c, std::shared_ptr<const KernelPair> pair,
                                           ChannelModel channel) {
  TeleportConfig t;
  t.grid = c.grid;
  t.kernels = std::move(pair);
  t.protocol = c.protocol();
  t.input = {c.input_amplitude};
  t.channel = channel;
  t.validate();
  return t;
}

struct DumpedField {
  std::uint64_t trial = 0;
  FieldState field;
};

struct ExperimentAccumulator {
  SpectrumAccumulator in, out;
  std::optional<GreenAccumulator> green;
  std::vector<CoarseGrainAccumulator> coarse;
  std::optional<GaussianityAccumulator> gauss;
  std::vector<DumpedField> dumps;

  void merge(const ExperimentAccumulator& o) {
    in.merge(o.in);
    out.merge(o.out);
    if (green) green->merge(*o.green);
    for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i].merge(o.coarse[i]);
    if (gauss) gauss->merge(*o.gauss);
    dumps.insert(dumps.end(), o.dumps.begin(), o.dumps.end());
  }
};

struct ExperimentResult {
  RunConfig config;
  std::shared_ptr<const KernelPair> kernels;
  std::optional<SpectrumReport> spectrum_in;
  std::optional<SpectrumReport> spectrum_out;
  std::optional<SpectrumComparison> comparison;
  std::optional<GreenReport> green;
  std::vector<CoarseGrainReport> coarse;
  std::vector<OracleCoarse> coarse_windowed;
  std::optional<MomentTable> gaussianity;
  std::vector<DumpedField> dumps;
};

inline ExperimentAccumulator make_accumulator(const RunConfig& c, bool with_input = true) {
  ExperimentAccumulator acc;
  if (c.analysis.spectrum) {
    if (with_input) acc.in = SpectrumAccumulator(c.grid);
    acc.out = SpectrumAccumulator(c.grid);
  }
  if (c.analysis.green) acc.green.emplace(c.grid);
  for (const auto& b : c.analysis.coarse_blocks) acc.coarse.emplace_back(c.grid, b);
  if (c.analysis.gaussianity) acc.gauss.emplace(c.grid, default_wick_checks());
  return acc;
}

/// Spectrum reports with their analytic columns.
inline std::pair<SpectrumReport, SpectrumReport> spectrum_reports(const RunConfig& c, const KernelPair& pair,
                                                                  const SpectrumAccumulator& in,
                                                                  const SpectrumAccumulator& out) {
  const auto in_analytic = coherent_input_spectrum(c.grid, c.a0);
  auto rin = make_spectrum_report(in, c.phi, in_analytic);
  auto rout = make_spectrum_report(out, c.phi, analytic_out_spectrum(pair, c.phi, in_analytic, c.a0));
  return {std::move(rin), std::move(rout)};
}

/// In-process pipeline. `channel` selects whether the photocurrents are
/// rounded as they would be on the frame stream.
inline ExperimentResult run_experiment(const RunConfig& c, ChannelModel channel = ChannelModel::Exact,
                                       std::shared_ptr<const KernelPair> pair = nullptr) {
  c.validate();
  if (!pair) pair = std::make_shared<const KernelPair>(c.kernels());
  const auto tcfg = make_teleport_config(c, pair, channel);
  const double phi = c.phi;
  const double a0 = c.a0;
  const bool spectrum = c.analysis.spectrum;
  const std::size_t dump = c.analysis.dump_fields;
  auto acc = reduce_trials(
      c.trials, make_accumulator(c),
      [&](std::uint64_t t, ExperimentAccumulator& a) {
        auto rec = run_teleport(tcfg, {c.seed, t});
        if (spectrum) {
          a.in.add_current(homodyne_project(rec.a_in, phi, a0));
          a.out.add_current(homodyne_project(rec.a_out, phi, a0));
        }
        if (a.green) a.green->add(rec.f);
        for (auto& cg : a.coarse) cg.add(rec.f);
        if (a.gauss) a.gauss->add(rec.f);
        if (t < dump) a.dumps.push_back({t, std::move(rec.a_out)});
      },
      c.threads);

  ExperimentResult r;
  r.config = c;
  r.kernels = pair;
  if (spectrum) {
    auto [rin, rout] = spectrum_reports(c, *pair, acc.in, acc.out);
    r.comparison = compare_spectra(rin, rout, *pair, c.kernel, c.analysis.tolerance);
    r.spectrum_in = std::move(rin);
    r.spectrum_out = std::move(rout);
  }
  if (acc.green) r.green = make_green_report(*acc.green, *pair);
  for (const auto& cg : acc.coarse) {
    r.coarse.push_back(make_coarse_grain_report(cg, *pair));
    r.coarse_windowed.push_back(windowed_block_covariance(*pair, cg.layout().shape));
  }
  if (acc.gauss) r.gaussianity = acc.gauss->table();
  r.dumps = std::move(acc.dumps);
  return r;
}

/// Alice: samples the input and her EPR half, measures, and writes one
/// frame per trial in trial order.
inline std::uint64_t run_alice(const RunConfig& c, std::ostream& out) {
  c.validate();
  auto pair = std::make_shared<const KernelPair>(c.kernels());
  const auto tcfg = make_teleport_config(c, pair, ChannelModel::Exact);
  FrameWriter writer(out, tcfg.protocol.b0);
  for (std::uint64_t t = 0; t < c.trials; ++t) {
    const RngSpec rng{c.seed, t};
    const auto epr = make_epr_beams(tcfg, rng);
    auto frame = alice_stage(make_input_field(tcfg, rng), epr.e1, tcfg.protocol);
    frame.trial_index = t;
    writer.write(frame);
  }
  writer.flush();
  return writer.frames_written();
}

struct BobResult {
  std::optional<SpectrumReport> spectrum_out;
  std::vector<DumpedField> dumps;
  std::uint64_t frames = 0;
};

/// Bob: regenerates his EPR half from the shared seed, applies the received
/// photocurrents, and measures A_out. Expects exactly `trials` frames.
inline BobResult run_bob(const RunConfig& c, std::istream& in) {
  c.validate();
  auto pair = std::make_shared<const KernelPair>(c.kernels());
  const auto tcfg = make_teleport_config(c, pair, ChannelModel::Exact);
  FrameReader reader(in, c.grid, tcfg.protocol.b0);
  RunConfig bob_cfg = c;
  bob_cfg.analysis.green = false;
  bob_cfg.analysis.gaussianity = false;
  bob_cfg.analysis.coarse_blocks.clear();
  const std::size_t dump = c.analysis.dump_fields;
  auto acc = reduce_trials(
      c.trials, make_accumulator(bob_cfg, false),
      [&](std::uint64_t t, ExperimentAccumulator& a) {
        auto frame = reader.next();
        if (!frame)
          throw ProtocolError("stream ended after " + std::to_string(t) + " frames, expected " +
                                  std::to_string(c.trials),
                              t, reader.offset());
        const auto epr = make_epr_beams(tcfg, {c.seed, t});
        auto a_out = bob_stage(*frame, epr.e2, tcfg.protocol);
        if (c.analysis.spectrum) a.out.add_current(homodyne_project(a_out, c.phi, c.a0));
        if (t < dump) a.dumps.push_back({t, std::move(a_out)});
      },
      1);
  if (reader.next())
    throw ProtocolError("stream carries more frames than the configured " + std::to_string(c.trials) + " trials",
                        c.trials, reader.offset());
  BobResult r;
  r.frames = reader.frames_read();
  if (c.analysis.spectrum) {
    const auto in_analytic = coherent_input_spectrum(c.grid, c.a0);
    r.spectrum_out = make_spectrum_report(acc.out, c.phi, analytic_out_spectrum(*pair, c.phi, in_analytic, c.a0));
  }
  r.dumps = std::move(acc.dumps);
  return r;
}

} // namespace holotele
