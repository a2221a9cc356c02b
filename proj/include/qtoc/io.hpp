#pragma once

// Text I/O: 12-significant-digit number formatting, CSV tables, the `t,u`
// pulse format and JSON views of the result types.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtoc/errors.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/protocol.hpp"
#include "qtoc/smoothing.hpp"
#include "qtoc/state_prep.hpp"
#include "qtoc/xgate.hpp"

namespace qtoc::io {

using json = nlohmann::json;

inline constexpr int kSignificantDigits = 12;

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, x);
  return buf;
}

/// x rounded to 12 significant digits, so JSON output carries no more.
inline double round_sig(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(format_number(x).c_str(), nullptr);
}

inline json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_sig(x);
}

inline json numbers(const std::vector<double>& xs) {
  json a = json::array();
  for (double x : xs) a.push_back(number(x));
  return a;
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != header.size()) throw ValidationError("csv: row width does not match header");
    rows.push_back(std::move(row));
  }
};

/// Comma separated, `.` decimal, LF endings.
inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) out += (i ? "," : "") + t.header[i];
  out += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_number(r[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path + " for writing");
  f << body;
  if (!f) throw ValidationError("write failed: " + path);
}

inline void write_csv(const std::string& path, const Table& t) { write_text(path, to_csv(t)); }

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Parses a numeric CSV with a header line. Empty lines are skipped.
inline Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table t;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError("csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(t.header.size()) + " fields");
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || *end != '\0' || !std::isfinite(v))
        throw ValidationError("csv line " + std::to_string(line_no) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError("csv: empty input");
  return t;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------
// Pulse CSV
//
// Header `t,u`. Row i holds u_i on [t_i, t_{i+1}); the last row marks the end
// time T and repeats the final value. t_0 = 0 and t strictly increasing.

inline Table pulse_table(const PiecewiseConstant& pc) {
  Table t{{"t", "u"}, {}};
  for (std::size_t i = 0; i < pc.size(); ++i) t.add({pc.edges[i], pc.values[i]});
  t.add({pc.duration(), pc.values.back()});
  return t;
}

inline Table pulse_table(const Protocol& protocol, double points_per_pi = kDefaultPointsPerPi) {
  return pulse_table(to_piecewise(protocol, points_per_pi));
}

/// Validated pulse; `u_max` <= 0 skips the amplitude check.
inline PiecewiseConstant parse_pulse(const std::string& text, double u_max) {
  const Table t = parse_csv(text);
  if (t.header != std::vector<std::string>{"t", "u"}) throw ValidationError("pulse csv: header must be 't,u'");
  if (t.rows.size() < 2) throw ValidationError("pulse csv: need at least two rows");
  if (t.rows.front()[0] != 0.0) throw ValidationError("pulse csv: first time must be 0");
  PiecewiseConstant pc;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && !(t.rows[i][0] > t.rows[i - 1][0]))
      throw ValidationError("pulse csv: times must be strictly increasing (row " + std::to_string(i + 1) + ")");
    pc.edges.push_back(t.rows[i][0]);
    if (i + 1 < t.rows.size()) pc.values.push_back(t.rows[i][1]);
  }
  double peak = 0.0;
  for (const auto& r : t.rows) peak = std::max(peak, std::abs(r[1]));
  if (u_max > 0.0 && peak > u_max * (1.0 + 1e-9))
    throw ValidationError("pulse csv: |u| = " + format_number(peak) + " exceeds u_max = " + format_number(u_max));
  return pc;
}

inline PiecewiseConstant read_pulse(const std::string& path, double u_max) {
  return parse_pulse(read_text(path), u_max);
}

/// True when every cell has width T / n.
inline bool is_uniform(const PiecewiseConstant& pc, double rel = 1e-9) {
  const double dt = pc.duration() / static_cast<double>(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i)
    if (std::abs(pc.width(i) - dt) > rel * pc.duration()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// JSON views

inline json to_json(const ModelParams& p) { return {{"omega0", number(p.omega0)}, {"u_max", number(p.u_max)}}; }

inline json to_json(const BlochPoint& b) { return {{"theta", number(b.theta)}, {"phi", number(b.phi)}}; }

inline json summary_json(const OptimalityReport& r) {
  json segs = json::array();
  for (const auto& s : r.segments)
    segs.push_back({{"t_begin", number(s.t_begin)}, {"t_end", number(s.t_end)}, {"u", number(s.u)},
                    {"hoc_mean", number(s.mean)}, {"hoc_max_dev", number(s.max_dev)}, {"samples", s.samples}});
  return {{"hoc_mean", number(r.hoc_mean)},
          {"hoc_max_dev", number(r.hoc_max_dev)},
          {"max_abs_phi", number(r.max_abs_phi)},
          {"sign_fraction", number(r.sign_fraction)},
          {"sign_samples", r.sign_samples},
          {"lambda0", number(r.lambda0)},
          {"A", number(r.A)},
          {"omega_eff", number(r.omega_eff)},
          {"omega_eff_zeros", number(r.omega_eff_zeros)},
          {"fit_residual", number(r.fit_residual)},
          {"singular_time", number(r.singular_time)},
          {"singular_residence", number(r.singular_residence)},
          {"max_equator_deviation", number(r.max_equator_deviation)},
          {"passes", r.passes()},
          {"segments", segs}};
}

inline Table switching_table(const OptimalityReport& r) {
  Table t{{"t", "u", "phi", "hoc"}, {}};
  for (std::size_t i = 0; i < r.times.size(); ++i) t.add({r.times[i], r.u[i], r.phi[i], r.hoc[i]});
  return t;
}

inline json to_json(const SearchResult& r, const StatePrepProblem& problem) {
  json cands = json::array();
  for (const auto& c : r.candidates)
    cands.push_back({{"structure", c.structure.name()}, {"T_star", number(c.T_star)}, {"T_star_over_pi", number(c.T_star / M_PI)},
                     {"cost", number(c.cost)}, {"accepted", c.accepted}, {"note", c.note}});
  return {{"params", to_json(problem.params)},
          {"init", to_json(problem.init)},
          {"target", to_json(problem.target)},
          {"found", r.found},
          {"T_star", number(r.T_star)},
          {"T_star_over_pi", number(r.T_star / M_PI)},
          {"structure", r.structure.name()},
          {"family", r.structure.family()},
          {"switch_times", numbers(r.switch_times)},
          {"cost", number(r.cost)},
          {"singular_duration", number(r.singular_duration)},
          {"audit_T", number(r.audit_T)},
          {"report", summary_json(r.report)},
          {"candidates", cands}};
}

inline json to_json(const GateSearchResult& r, const GateProblem& problem) {
  return {{"params", to_json(problem.params)},
          {"gate", to_string(problem.kind)},
          {"T_star", number(r.T_star)},
          {"T_rabi", number(r.T_rabi)},
          {"ratio", number(r.ratio)},
          {"omega_eff", number(r.omega_eff)},
          {"cost", number(r.cost)},
          {"cost_flipped", number(r.cost_flipped)},
          {"parity", r.parity == Parity::Even ? "even" : "odd"},
          {"n_switch", r.n_switch},
          {"switch_times", numbers(r.protocol.switch_times)},
          {"audit_T", number(r.audit_T)},
          {"audit_omega_eff", number(r.audit_omega_eff)},
          {"report", summary_json(r.report)}};
}

inline json to_json(const SmoothingRun& r) {
  json j = {{"scheme", to_string(r.scheme)},
            {"params", to_json(r.params)},
            {"T", number(r.T)},
            {"T_over_trabi", number(r.T / r.params.rabi_time())},
            {"c_x_plus_1", number(r.gap)},
            {"converged", r.converged}};
  switch (r.scheme) {
    case SmoothingScheme::Tanh:
      j["beta"] = number(r.beta);
      j["half_times"] = numbers(r.half_times);
      break;
    case SmoothingScheme::ThirdHarmonic:
      j["omega"] = number(r.omega);
      j["R"] = number(r.R);
      break;
    case SmoothingScheme::ConstrainedSmooth:
      j["c_smooth"] = number(r.c_smooth);
      j["iterations"] = r.iterations;
      break;
  }
  return j;
}

inline Table trace_table(const SmoothingRun& r) {
  Table t{{"iter", "c_smooth", "c_x_plus_1"}, {}};
  for (const auto& row : r.trace) t.add({static_cast<double>(row.iteration), row.c_smooth, row.c_x_plus_1});
  return t;
}

inline Table spectrum_table(const std::vector<SpectrumLine>& spec) {
  Table t{{"f", "re", "im", "abs"}, {}};
  for (const auto& l : spec) t.add({l.f, l.amplitude.real(), l.amplitude.imag(), std::abs(l.amplitude)});
  return t;
}

}  // namespace qtoc::io
