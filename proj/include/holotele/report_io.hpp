#pragma once

// Report files. CSV tables carry "# key=value" metadata lines, one header
// line and one row per bin, lag or block pair; numbers are printed with 17
// significant digits so every value re-parses to the same double. Spectra
// are also exported as HFLD arrays, verdicts as JSON.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "holotele/analysis.hpp"
#include "holotele/field_io.hpp"

namespace holotele {

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
      if (k == key) return v;
    throw IoError("report is missing metadata \"" + key + "\"");
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw IoError("report is missing column \"" + name + "\"");
  }
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string encode_csv(const CsvTable& t) {
  std::string out;
  for (const auto& [k, v] : t.meta) out += "# " + k + "=" + v + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline CsvTable decode_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw IoError("csv line " + std::to_string(line_no) + ": malformed metadata");
      t.meta.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size())
      throw IoError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size()) +
                    " cells, got " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      row[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || *end != '\0')
        throw IoError("csv line " + std::to_string(line_no) + ": bad number \"" + cells[i] + "\"");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw IoError("csv: no header line");
  return t;
}

inline void write_csv(const std::string& path, const CsvTable& t) { binio::write_file(path, encode_csv(t)); }
inline CsvTable read_csv(const std::string& path) { return decode_csv(binio::read_file(path)); }

namespace report_detail {

inline std::string grid_meta(const SpaceTimeGrid& g) {
  return std::to_string(g.nx) + "," + std::to_string(g.ny) + "," + std::to_string(g.nt) + "," +
         format_double(g.dx) + "," + format_double(g.dy) + "," + format_double(g.dt);
}

inline SpaceTimeGrid parse_grid(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ',');) parts.push_back(p);
  if (parts.size() != 6) throw IoError("bad grid metadata \"" + s + "\"");
  SpaceTimeGrid g{std::stoul(parts[0]), std::stoul(parts[1]), std::stoul(parts[2]),
                  std::stod(parts[3]), std::stod(parts[4]), std::stod(parts[5])};
  g.validate();
  return g;
}

inline void check_rows(const CsvTable& t, std::size_t n, const char* what) {
  if (t.rows.size() != n)
    throw IoError(std::string(what) + ": expected " + std::to_string(n) + " rows, got " + std::to_string(t.rows.size()));
}

/// Signed Fourier coordinates of bin k.
inline std::vector<double> bin_coordinates(const SpaceTimeGrid& g, std::size_t k) {
  const auto i = g.unravel(k);
  return {static_cast<double>(i.ix), static_cast<double>(i.iy), static_cast<double>(i.it), g.qx(i.ix), g.qy(i.iy),
          g.omega(i.it)};
}

/// Signed lag coordinates of lag l (wrapped to the nearest image).
inline std::vector<double> lag_coordinates(const SpaceTimeGrid& g, std::size_t l) {
  const auto i = g.unravel(l);
  return {static_cast<double>(i.ix), static_cast<double>(i.iy), static_cast<double>(i.it),
          static_cast<double>(SpaceTimeGrid::signed_index(i.ix, g.nx)) * g.dx,
          static_cast<double>(SpaceTimeGrid::signed_index(i.iy, g.ny)) * g.dy,
          static_cast<double>(SpaceTimeGrid::signed_index(i.it, g.nt)) * g.dt};
}

} // namespace report_detail

// ---------------------------------------------------------------------------
// Spectrum reports

inline CsvTable spectrum_table(const SpectrumReport& r) {
  CsvTable t;
  t.meta = {{"source", r.source}, {"kind", "spectrum"}, {"grid", report_detail::grid_meta(r.grid)},
            {"phi", format_double(r.phi)}, {"trials", std::to_string(r.trials)}};
  t.columns = {"kx", "ky", "kt", "qx", "qy", "omega", "estimate", "analytic", "standard_error"};
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    auto row = report_detail::bin_coordinates(r.grid, k);
    row.push_back(r.estimated[k]);
    row.push_back(r.analytic.empty() ? 0.0 : r.analytic[k]);
    row.push_back(r.standard_error[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline SpectrumReport spectrum_from_table(const CsvTable& t) {
  if (t.meta_value("kind") != "spectrum") throw IoError("not a spectrum report");
  SpectrumReport r;
  r.grid = report_detail::parse_grid(t.meta_value("grid"));
  r.phi = std::stod(t.meta_value("phi"));
  r.trials = std::stoull(t.meta_value("trials"));
  r.source = t.meta_value("source");
  report_detail::check_rows(t, r.grid.size(), "spectrum report");
  const auto ce = t.column("estimate"), ca = t.column("analytic"), cs = t.column("standard_error");
  for (const auto& row : t.rows) {
    r.estimated.push_back(row[ce]);
    r.analytic.push_back(row[ca]);
    r.standard_error.push_back(row[cs]);
  }
  return r;
}

inline void write_spectrum_csv(const std::string& path, const SpectrumReport& r) { write_csv(path, spectrum_table(r)); }
inline SpectrumReport read_spectrum_csv(const std::string& path) { return spectrum_from_table(read_csv(path)); }

/// Estimated spectrum as a Fourier-domain HFLD array (real values).
inline FieldState spectrum_field(const SpectrumReport& r, Role role) {
  FieldState f(r.grid, Domain::Fourier, role);
  for (std::size_t k = 0; k < r.estimated.size(); ++k) f.values[k] = r.estimated[k];
  return f;
}

// ---------------------------------------------------------------------------
// Green reports

inline CsvTable green_lag_table(const GreenReport& r) {
  CsvTable t;
  t.meta = {{"source", r.source}, {"kind", "green_lag"}, {"grid", report_detail::grid_meta(r.grid)},
            {"trials", std::to_string(r.trials)}};
  t.columns = {"lx", "ly", "lt", "x", "y", "t", "estimate_re", "estimate_im", "analytic_re", "analytic_im",
               "standard_error"};
  for (std::size_t l = 0; l < r.grid.size(); ++l) {
    auto row = report_detail::lag_coordinates(r.grid, l);
    row.insert(row.end(), {r.estimated_correlation[l].real(), r.estimated_correlation[l].imag(),
                           r.analytic_correlation[l].real(), r.analytic_correlation[l].imag(),
                           r.correlation_standard_error[l]});
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable green_spectrum_table(const GreenReport& r) {
  CsvTable t;
  t.meta = {{"source", r.source}, {"kind", "green_spectrum"}, {"grid", report_detail::grid_meta(r.grid)},
            {"trials", std::to_string(r.trials)}};
  t.columns = {"kx", "ky", "kt", "qx", "qy", "omega", "estimate", "analytic", "standard_error"};
  for (std::size_t k = 0; k < r.grid.size(); ++k) {
    auto row = report_detail::bin_coordinates(r.grid, k);
    row.insert(row.end(), {r.estimated_spectrum[k], r.analytic_kernel.g[k], r.spectrum_standard_error[k]});
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Rebuilds a GreenReport from its lag and spectrum tables.
inline GreenReport green_from_tables(const CsvTable& lag, const CsvTable& spec) {
  if (lag.meta_value("kind") != "green_lag" || spec.meta_value("kind") != "green_spectrum")
    throw IoError("not a green report pair");
  GreenReport r;
  r.grid = report_detail::parse_grid(lag.meta_value("grid"));
  require_same_grid(r.grid, report_detail::parse_grid(spec.meta_value("grid")), "green report");
  r.trials = std::stoull(lag.meta_value("trials"));
  r.source = lag.meta_value("source");
  report_detail::check_rows(lag, r.grid.size(), "green lag report");
  report_detail::check_rows(spec, r.grid.size(), "green spectrum report");
  const auto er = lag.column("estimate_re"), ei = lag.column("estimate_im");
  const auto ar = lag.column("analytic_re"), ai = lag.column("analytic_im"), ls = lag.column("standard_error");
  for (const auto& row : lag.rows) {
    r.estimated_correlation.emplace_back(row[er], row[ei]);
    r.analytic_correlation.emplace_back(row[ar], row[ai]);
    r.correlation_standard_error.push_back(row[ls]);
  }
  r.analytic_kernel.grid = r.grid;
  const auto se = spec.column("estimate"), sa = spec.column("analytic"), ss = spec.column("standard_error");
  for (const auto& row : spec.rows) {
    r.estimated_spectrum.push_back(row[se]);
    r.analytic_kernel.g.push_back(row[sa]);
    r.spectrum_standard_error.push_back(row[ss]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Coarse-grain reports

inline CsvTable coarse_table(const CoarseGrainReport& r, const std::vector<cplx>& prediction = {}) {
  CsvTable t;
  t.meta = {{"source", r.source},
            {"kind", "coarse"},
            {"grid", report_detail::grid_meta(r.grid)},
            {"block", std::to_string(r.block.lx) + "," + std::to_string(r.block.ly) + "," + std::to_string(r.block.lt)},
            {"block_area", format_double(r.block_area)},
            {"block_duration", format_double(r.block_duration)},
            {"predicted_diagonal", format_double(r.predicted_diagonal)},
            {"trials", std::to_string(r.trials)}};
  t.columns = {"i", "j", "covariance_re", "covariance_im", "standard_error", "windowed_re", "windowed_im"};
  for (std::size_t i = 0; i < r.blocks; ++i)
    for (std::size_t j = 0; j < r.blocks; ++j) {
      const std::size_t e = i * r.blocks + j;
      const cplx p = prediction.empty() ? cplx{} : prediction[e];
      t.rows.push_back({static_cast<double>(i), static_cast<double>(j), r.covariance[e].real(),
                        r.covariance[e].imag(), r.standard_error[e], p.real(), p.imag()});
    }
  return t;
}

inline CoarseGrainReport coarse_from_table(const CsvTable& t) {
  if (t.meta_value("kind") != "coarse") throw IoError("not a coarse-grain report");
  CoarseGrainReport r;
  r.grid = report_detail::parse_grid(t.meta_value("grid"));
  std::stringstream bs(t.meta_value("block"));
  std::vector<std::size_t> dims;
  for (std::string p; std::getline(bs, p, ',');) dims.push_back(std::stoul(p));
  if (dims.size() != 3) throw IoError("bad block metadata");
  r.block = {dims[0], dims[1], dims[2]};
  BlockLayout lay(r.grid, r.block);
  r.blocks = lay.blocks();
  r.block_area = std::stod(t.meta_value("block_area"));
  r.block_duration = std::stod(t.meta_value("block_duration"));
  r.predicted_diagonal = std::stod(t.meta_value("predicted_diagonal"));
  r.trials = std::stoull(t.meta_value("trials"));
  r.source = t.meta_value("source");
  report_detail::check_rows(t, r.blocks * r.blocks, "coarse-grain report");
  const auto cr = t.column("covariance_re"), ci = t.column("covariance_im"), cs = t.column("standard_error");
  for (const auto& row : t.rows) {
    r.covariance.emplace_back(row[cr], row[ci]);
    r.standard_error.push_back(row[cs]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Verdicts

inline nlohmann::json region_json(const RegionSummary& s) {
  return {{"bins", s.bins},
          {"mean_ratio", s.mean_ratio},
          {"analytic_ratio", s.analytic_ratio},
          {"rms_relative_error", s.rms_relative_error},
          {"max_abs_deviation", s.max_abs_deviation}};
}

inline nlohmann::json comparison_json(const SpectrumComparison& c) {
  return {{"passed", c.passed},
          {"tolerance", c.tolerance},
          {"all", region_json(c.all)},
          {"in_band", region_json(c.in_band)},
          {"out_of_band", region_json(c.out_of_band)}};
}

inline void write_json(const std::string& path, const nlohmann::json& j) { binio::write_file(path, j.dump(2) + "\n"); }

} // namespace holotele
