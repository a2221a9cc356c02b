#pragma once

// Command-line front end. Every subcommand writes its artifacts plus a
// run.json manifest into the output directory and prints the main JSON
// result on stdout. Exit codes: 0 success, 2 invalid input, 3 optimization
// failure, 1 anything else.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtoc/dynamics.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/io.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/smoothing.hpp"
#include "qtoc/state_prep.hpp"
#include "qtoc/xgate.hpp"

namespace qtoc::cli {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kOutputDirEnv = "QTOC_OUTPUT_DIR";
inline constexpr const char* kDefaultOutputDir = "qtoc-out";

struct RunRecord {
  std::string subcommand;
  json config = json::object();
  std::string version = kVersion;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  std::vector<std::string> outputs;

  [[nodiscard]] json to_json() const {
    return {{"subcommand", subcommand}, {"config", config},         {"version", version},
            {"seed", seed},             {"duration_s", io::number(duration_s)}, {"outputs", outputs}};
  }
};

/// Writes files into one directory and lists each in the record.
class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, RunRecord& record) : dir_(std::move(dir)), record_(record) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ValidationError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void csv(const std::string& name, const io::Table& t) {
    io::write_csv((dir_ / name).string(), t);
    record_.outputs.push_back(name);
  }
  void json_file(const std::string& name, const json& j) {
    io::write_json((dir_ / name).string(), j);
    record_.outputs.push_back(name);
  }
  void manifest() const { io::write_json((dir_ / "run.json").string(), record_.to_json()); }
  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  RunRecord& record_;
};

/// Runs task(i) for i in [0, n) on `jobs` threads; results land by index so
/// the output order never depends on scheduling.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Independent per-task seeds derived from the root seed.
inline std::vector<std::uint64_t> task_seeds(std::uint64_t root, std::size_t n) {
  std::seed_seq seq{static_cast<std::uint32_t>(root), static_cast<std::uint32_t>(root >> 32)};
  std::vector<std::uint32_t> raw(2 * n);
  seq.generate(raw.begin(), raw.end());
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (static_cast<std::uint64_t>(raw[2 * i]) << 32) | raw[2 * i + 1];
  return out;
}

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw ValidationError("need at least one grid point");
  if (n == 1) return {a};
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  return out;
}

inline SmoothObjective parse_objective(const std::string& s) {
  if (s == "smooth") return {1.0, 0.0};
  if (s == "power") return {0.0, 1.0};
  if (s.rfind("mixed:", 0) == 0) {
    char* end = nullptr;
    const double w = std::strtod(s.c_str() + 6, &end);
    if (*end != '\0' || !(w >= 0.0)) throw ValidationError("objective: bad weight in '" + s + "'");
    return {1.0, w};
  }
  throw ValidationError("objective must be smooth, power or mixed:<w>, got '" + s + "'");
}

inline CostSpec parse_cost(const std::string& kind, const StatePrepProblem& sp) {
  if (kind == "state-prep") return sp.cost_spec();
  return CostSpec::gate(gate_kind_from_string(kind));
}

// ---------------------------------------------------------------------------
// Options

struct Common {
  std::string out_dir;
  std::uint64_t seed = 20240611;
  int jobs = 1;
  double omega0 = 2.0;
};

struct StatePrepOptions {
  double u_max = 0.8;
  double init_theta = 0.7, init_phi = 0.0;       // units of pi
  double target_theta = 0.35, target_phi = 1.0;  // units of pi
  double t_max = 0.0;                            // units of pi, 0 = automatic
  bool critical = false;
  double u_lo = 0.4, u_hi = 0.8, resolution = 0.01;
  std::vector<std::string> structures;
};

struct GateOptions {
  double u_max = 0.5;
  std::string gate = "x";
  bool asymptotic = false;
  std::string sweep;
};

struct SmoothOptions {
  std::string scheme = "constrained";
  double u_max = 0.2;
  double t_over_trabi = 0.0;  // 0 = minimum perfect time (tanh, third); T_Rabi for constrained
  double beta = 4.0;
  std::size_t n_t = 1000;
  std::string objective = "smooth";
  std::string init = "rabi";
  int harmonics = 60;
};

struct VerifyOptions {
  std::string pulse;
  double u_max = 0.0;
  std::string cost = "x";
  double init_theta = 0.7, init_phi = 0.0, target_theta = 0.35, target_phi = 1.0;
  std::size_t samples = 4001;
};

struct SpectrumOptions {
  std::string pulse;
  double u_max = 0.0;  // 0 = max |u|
  int harmonics = 60;
};

struct SweepOptions {
  std::string kind = "xgate";
  double u_from = 0.05, u_to = 0.5;
  int points = 10;
  double beta = 4.0;
};

struct ReproOptions {
  std::string dataset;
  int points = 0;  // 0 = dataset default
};

inline StatePrepProblem state_problem(double it, double ip, double tt, double tp, double u, double omega0) {
  StatePrepProblem pr;
  pr.init = {it * M_PI, ip * M_PI};
  pr.target = {tt * M_PI, tp * M_PI};
  pr.params = {omega0, u};
  pr.validate();
  return pr;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

inline json cmd_state_prep(const StatePrepOptions& o, const Common& c, Artifacts& out) {
  StatePrepProblem pr = state_problem(o.init_theta, o.init_phi, o.target_theta, o.target_phi, o.u_max, c.omega0);
  SearchConfig cfg;
  cfg.T_max = o.t_max * M_PI;
  cfg.nm.seed = c.seed;
  for (const auto& name : o.structures) {
    const auto label = parse_structure(name);
    if (!label) throw ValidationError("unknown structure '" + name + "' (expected BB-k+, BB-k-, BSB++, ...)");
    cfg.structures.push_back(*label);
  }
  if (o.critical) {
    const double uc = critical_amplitude(pr, o.u_lo, o.u_hi, cfg, o.resolution);
    json j = {{"init", io::to_json(pr.init)},  {"target", io::to_json(pr.target)}, {"u_lo", io::number(o.u_lo)},
              {"u_hi", io::number(o.u_hi)},   {"resolution", io::number(o.resolution)},
              {"critical_amplitude", io::number(uc)}};
    out.json_file("critical_amplitude.json", j);
    return j;
  }
  const auto r = find_time_optimal(pr, cfg);
  if (!r.found) throw OptimizationError("state-prep: target not reached below T_max");
  json j = io::to_json(r, pr);
  out.json_file("state_prep.json", j);
  out.csv("pulse.csv", io::pulse_table(Protocol{r.protocol(o.u_max)}));
  out.csv("switching.csv", io::switching_table(r.report));
  return j;
}

inline json cmd_sweep(const SweepOptions& o, const Common& c, Artifacts& out);

inline json cmd_xgate(const GateOptions& o, const Common& c, Artifacts& out) {
  if (!o.sweep.empty()) {
    SweepOptions so;
    so.kind = o.gate == "x" ? "xgate" : (o.gate == "y" ? "ygate" : "pt");
    char tail = 0;
    if (std::sscanf(o.sweep.c_str(), "%lf:%lf:%d%c", &so.u_from, &so.u_to, &so.points, &tail) != 3 ||
        !(so.u_from > 0.0) || !(so.u_to > 0.0) || so.points < 1)
      throw ValidationError("--sweep expects lo:hi:n, got '" + o.sweep + "'");
    return cmd_sweep(so, c, out);
  }
  GateProblem pr{gate_kind_from_string(o.gate), {c.omega0, o.u_max}};
  const auto r = min_gate_time(pr);
  json j = io::to_json(r, pr);
  if (o.asymptotic) {
    const auto m = asymptotic_ratio_model(o.u_max, pr.kind);
    j["asymptotic"] = {{"periods", m.periods}, {"ratio", io::number(m.ratio)}, {"gap", io::number(m.gap)},
                       {"within_eps", m.within_eps}};
  }
  out.json_file("xgate.json", j);
  out.csv("pulse.csv", io::pulse_table(Protocol{r.protocol}));
  out.csv("switching.csv", io::switching_table(r.report));
  return j;
}

inline SmoothingRun run_smoothing(const SmoothOptions& o, const Common& c) {
  const ModelParams p{c.omega0, o.u_max};
  p.validate();
  const double tr = p.rabi_time();
  SmoothOptConfig sc;
  sc.seed = c.seed;
  if (o.scheme == "tanh" || o.scheme == "third") {
    auto opt = [&](double T) {
      if (o.scheme == "tanh") {
        auto r = optimize_tanh_auto(o.beta, T, p, sc);
        r.beta = o.beta;
        return r;
      }
      return optimize_third_harmonic(T, p, sc);
    };
    if (o.t_over_trabi > 0.0) return opt(o.t_over_trabi * tr);
    auto r = min_perfect_time(opt, p);
    if (!r) throw OptimizationError("smooth: no perfect gate found below 1.2 T_Rabi");
    return *r;
  }
  if (o.scheme != "constrained") throw ValidationError("scheme must be tanh, third or constrained");
  const double T = (o.t_over_trabi > 0.0 ? o.t_over_trabi : 1.0) * tr;
  ConstrainedConfig cc;
  cc.n_t = o.n_t;
  cc.objective = parse_objective(o.objective);
  Protocol init = Rabi{p.u_max, T, p.omega0};
  if (o.init == "bb") {
    const auto w = optimize_omega_eff(T, GateProblem{GateKind::X, p});
    init = to_bang_sequence(OneParamBB{p.u_max, T, w.omega_eff, 1, w.parity});
  } else if (o.init != "rabi") {
    throw ValidationError("init must be rabi or bb");
  }
  return constrained_smooth_optimize(T, p, init, cc);
}

inline json cmd_smooth(const SmoothOptions& o, const Common& c, Artifacts& out) {
  const auto r = run_smoothing(o, c);
  json j = io::to_json(r);
  out.json_file("smooth.json", j);
  out.csv("pulse.csv", io::pulse_table(r.protocol));
  if (r.scheme == SmoothingScheme::ConstrainedSmooth) out.csv("trace.csv", io::trace_table(r));
  out.csv("spectrum.csv", io::spectrum_table(fourier_spectrum(r.protocol, o.harmonics)));
  return j;
}

inline json cmd_verify(const VerifyOptions& o, const Common& c, Artifacts& out) {
  if (!(o.u_max > 0.0)) throw ValidationError("verify: --umax must be positive");
  const PiecewiseConstant pc = io::read_pulse(o.pulse, o.u_max);
  const ModelParams p{c.omega0, o.u_max};
  const auto sp = state_problem(o.init_theta, o.init_phi, o.target_theta, o.target_phi, o.u_max, c.omega0);
  const CostSpec spec = parse_cost(o.cost, sp);
  ReportConfig rc;
  rc.n_samples = o.samples;
  const auto rep = optimality_report(pc, p, spec, rc);
  const Unitary2 U = total_propagator(pc, p);
  const auto grad = cost_gradient(pc, p, spec);
  double gn = 0.0;
  for (double g : grad) gn += g * g;
  json j = {{"pulse", o.pulse},
            {"cost_kind", to_string(spec.kind)},
            {"params", io::to_json(p)},
            {"T", io::number(pc.duration())},
            {"segments", pc.size()},
            {"cost", io::number(spec.evaluate(U))},
            {"gradient_norm", io::number(std::sqrt(gn))},
            {"unitarity_error", io::number(unitarity_error(U))},
            {"report", io::summary_json(rep)}};
  out.json_file("report.json", j);
  out.csv("switching.csv", io::switching_table(rep));
  return j;
}

inline json cmd_spectrum(const SpectrumOptions& o, const Common&, Artifacts& out) {
  const PiecewiseConstant pc = io::read_pulse(o.pulse, o.u_max);
  double bound = o.u_max;
  if (!(bound > 0.0))
    for (double v : pc.values) bound = std::max(bound, std::abs(v));
  if (!(bound > 0.0)) throw ValidationError("spectrum: pulse is identically zero; pass --umax");
  const auto spec = fourier_spectrum(pc, bound, o.harmonics);
  out.csv("spectrum.csv", io::spectrum_table(spec));
  json j = {{"pulse", o.pulse}, {"T", io::number(pc.duration())}, {"u_norm", io::number(bound)},
            {"lines", spec.size()}};
  out.json_file("spectrum.json", j);
  return j;
}

inline json cmd_sweep(const SweepOptions& o, const Common& c, Artifacts& out) {
  const auto us = linspace(o.u_from, o.u_to, o.points);
  const auto seeds = task_seeds(c.seed, us.size());
  io::Table t;
  std::vector<std::vector<double>> rows(us.size());
  std::function<void(std::size_t)> task;
  if (o.kind == "xgate" || o.kind == "ygate" || o.kind == "pt") {
    const GateKind k = o.kind == "xgate" ? GateKind::X : (o.kind == "ygate" ? GateKind::Y : GateKind::PT);
    t.header = {"u_max", "T_star", "T_rabi", "ratio", "omega_eff", "n_switch"};
    task = [&, k](std::size_t i) {
      const auto r = min_gate_time(GateProblem{k, {c.omega0, us[i]}});
      rows[i] = {us[i], r.T_star, r.T_rabi, r.ratio, r.omega_eff, static_cast<double>(r.n_switch)};
    };
  } else if (o.kind == "state-prep") {
    t.header = {"u_max", "T_star", "T_star_over_pi", "switchings", "bsb", "singular_duration"};
    task = [&](std::size_t i) {
      auto pr = state_problem(0.7, 0.0, 0.35, 1.0, us[i], c.omega0);
      SearchConfig cfg;
      cfg.nm.seed = seeds[i];
      const auto r = find_time_optimal(pr, cfg);
      if (!r.found) throw OptimizationError("sweep: state-prep failed at u_max = " + io::format_number(us[i]));
      rows[i] = {us[i], r.T_star, r.T_star / M_PI, static_cast<double>(r.structure.switchings),
                 r.structure.kind == StructureKind::BSB ? 1.0 : 0.0, r.singular_duration};
    };
  } else if (o.kind == "rabi") {
    t.header = {"u_max", "c_x_plus_1"};
    task = [&](std::size_t i) { rows[i] = {us[i], rabi_fidelity_curve({us[i]}, c.omega0).front().second}; };
  } else if (o.kind == "third" || o.kind == "tanh") {
    const bool tanh = o.kind == "tanh";
    t.header = tanh ? std::vector<std::string>{"u_max", "T_over_trabi", "reduction", "pairs", "c_x_plus_1"}
                    : std::vector<std::string>{"u_max", "T_over_trabi", "reduction", "omega", "R"};
    task = [&, tanh](std::size_t i) {
      SmoothOptions so;
      so.scheme = o.kind;
      so.u_max = us[i];
      so.beta = o.beta;
      Common ci = c;
      ci.seed = seeds[i];
      const auto r = run_smoothing(so, ci);
      const double f = r.T / r.params.rabi_time();
      rows[i] = tanh ? std::vector<double>{us[i], f, 1.0 - f, static_cast<double>(r.half_times.size()), r.gap}
                     : std::vector<double>{us[i], f, 1.0 - f, r.omega, r.R};
    };
  } else {
    throw ValidationError("sweep kind must be xgate, ygate, pt, state-prep, rabi, third or tanh");
  }
  parallel_for(us.size(), c.jobs, task);
  for (auto& r : rows) t.add(std::move(r));
  out.csv("sweep.csv", t);
  json j = {{"kind", o.kind}, {"points", us.size()}, {"jobs", c.jobs}};
  out.json_file("sweep.json", j);
  return j;
}

// ---------------------------------------------------------------------------
// Datasets

inline json repro_gate_point(const std::string& id, double u, const Common& c, Artifacts& out) {
  GateProblem pr{GateKind::X, {c.omega0, u}};
  const auto r = min_gate_time(pr);
  const auto at_star = optimality_report(Protocol{r.protocol}, pr.params, pr.cost_spec());
  json j = io::to_json(r, pr);
  j["report_at_T_star"] = io::summary_json(at_star);
  out.json_file(id + ".json", j);
  out.csv(id + "_pulse.csv", io::pulse_table(Protocol{r.protocol}));
  out.csv(id + "_switching.csv", io::switching_table(at_star));
  return j;
}

inline json cmd_repro(const ReproOptions& o, const Common& c, Artifacts& out) {
  const std::string& id = o.dataset;
  auto pts = [&](int d) { return o.points > 0 ? o.points : d; };
  if (id == "fig2") {
    const auto us = linspace(0.01, 0.5, pts(50));
    io::Table t{{"u_max", "c_x_plus_1"}, {}};
    for (const auto& [u, g] : rabi_fidelity_curve(us, c.omega0)) t.add({u, g});
    out.csv("fig2.csv", t);
    return {{"dataset", id}, {"points", us.size()}};
  }
  if (id == "fig3a") {
    const auto us = linspace(0.05, 0.5, pts(10));
    std::vector<std::vector<double>> rows(us.size());
    parallel_for(us.size(), c.jobs, [&](std::size_t i) {
      const auto x = min_gate_time(GateProblem{GateKind::X, {c.omega0, us[i]}});
      const auto y = min_gate_time(GateProblem{GateKind::Y, {c.omega0, us[i]}});
      const auto m = asymptotic_ratio_model(us[i], GateKind::X);
      rows[i] = {us[i], x.ratio, y.ratio, m.ratio, x.omega_eff, static_cast<double>(x.n_switch)};
    });
    io::Table t{{"u_max", "ratio_x", "ratio_y", "ratio_model", "omega_eff_x", "n_switch_x"}, {}};
    for (auto& r : rows) t.add(std::move(r));
    out.csv("fig3a.csv", t);
    return {{"dataset", id}, {"points", us.size()}};
  }
  if (id == "fig3b") return repro_gate_point(id, 0.5, c, out);
  if (id == "fig3c") return repro_gate_point(id, 0.2, c, out);
  if (id == "fig3d") return repro_gate_point(id, 0.1, c, out);
  if (id == "plateaus") {
    SweepOptions so{"state-prep", 0.1, 1.0, pts(19)};
    return cmd_sweep(so, c, out);
  }
  if (id == "fig4a") {
    SweepOptions so{"third", 0.05, 0.5, pts(10)};
    return cmd_sweep(so, c, out);
  }
  if (id == "fig4b") {
    SmoothOptions so;
    so.scheme = "third";
    so.u_max = 0.2;
    const auto r = run_smoothing(so, c);
    const auto s = sample_uniform(r.protocol, 2000);
    io::Table t{{"t", "u", "u_cos", "abs_diff"}, {}};
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const double tt = (i + 0.5) * s.dt();
      const double uc = s.u_max * std::cos(r.omega * (tt - 0.5 * s.T));
      t.add({tt, s.values[i], uc, std::abs(s.values[i]) - std::abs(uc)});
    }
    out.csv("fig4b.csv", t);
    return io::to_json(r);
  }
  if (id == "fig5a") {
    const std::vector<double> us{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto fs = linspace(0.75, 1.0, pts(26));
    std::vector<std::vector<double>> rows(us.size() * fs.size());
    parallel_for(rows.size(), c.jobs, [&](std::size_t k) {
      const double u = us[k / fs.size()], f = fs[k % fs.size()];
      const ModelParams p{c.omega0, u};
      const auto r = optimize_tanh_auto(4.0, f * p.rabi_time(), p);
      rows[k] = {u, f, r.gap, static_cast<double>(r.half_times.size())};
    });
    io::Table t{{"u_max", "T_over_trabi", "c_x_plus_1", "pairs"}, {}};
    for (auto& r : rows) t.add(std::move(r));
    out.csv("fig5a.csv", t);
    return {{"dataset", id}, {"points", rows.size()}};
  }
  if (id == "fig5b") {
    const auto r = min_gate_time(GateProblem{GateKind::X, {c.omega0, 0.2}});
    out.csv("fig5b.csv", io::spectrum_table(fourier_spectrum(Protocol{r.protocol}, pts(60))));
    return {{"dataset", id}, {"T_star", io::number(r.T_star)}};
  }
  if (id == "fig5c") {
    SmoothOptions so;
    so.scheme = "tanh";
    so.u_max = 0.2;
    so.t_over_trabi = 0.88;
    const auto r = run_smoothing(so, c);
    out.csv("fig5c.csv", io::spectrum_table(fourier_spectrum(r.protocol, pts(60))));
    out.csv("fig5c_pulse.csv", io::pulse_table(r.protocol));
    return io::to_json(r);
  }
  if (id == "fig6") {
    const auto fs = linspace(0.8, 1.0, pts(5));
    io::Table summary{{"T_over_trabi", "c_smooth", "c_x_plus_1", "iterations"}, {}};
    for (double f : fs) {
      SmoothOptions so;
      so.u_max = 0.2;
      so.t_over_trabi = f;
      const auto r = run_smoothing(so, c);
      summary.add({f, r.c_smooth, r.gap, static_cast<double>(r.iterations)});
      out.csv("fig6_pulse_" + io::format_number(f) + ".csv", io::pulse_table(r.protocol));
    }
    out.csv("fig6a.csv", summary);
    for (const std::string init : {"rabi", "bb"}) {
      SmoothOptions so;
      so.u_max = 0.2;
      so.t_over_trabi = 0.9;
      so.init = init;
      out.csv("fig6a_trace_" + init + ".csv", io::trace_table(run_smoothing(so, c)));
    }
    return {{"dataset", id}, {"points", fs.size()}};
  }
  throw ValidationError("unknown dataset '" + id +
                        "' (fig2, fig3a, fig3b, fig3c, fig3d, plateaus, fig4a, fig4b, fig5a, fig5b, fig5c, fig6)");
}

// ---------------------------------------------------------------------------

/// Resolved option values of a parsed subcommand, keyed by long name.
inline json resolved_config(const CLI::App& sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      j[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Time-optimal qubit control toolkit", "qtoc"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file; [subcommand] sections, flags take precedence");
  app.set_version_flag("--version", kVersion);

  Common common;
  app.add_option("--out", common.out_dir, "Output directory (default $QTOC_OUTPUT_DIR or ./qtoc-out)");
  app.add_option("--seed", common.seed, "Root random seed");
  app.add_option("--jobs", common.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_option("--omega0", common.omega0, "Level splitting")->check(CLI::PositiveNumber);

  StatePrepOptions sp;
  auto* s_sp = app.add_subcommand("state-prep", "Minimum-time state preparation");
  s_sp->add_option("--umax", sp.u_max, "Control bound")->check(CLI::PositiveNumber);
  s_sp->add_option("--theta-init", sp.init_theta, "Initial polar angle / pi");
  s_sp->add_option("--phi-init", sp.init_phi, "Initial azimuth / pi");
  s_sp->add_option("--theta-target", sp.target_theta, "Target polar angle / pi");
  s_sp->add_option("--phi-target", sp.target_phi, "Target azimuth / pi");
  s_sp->add_option("--structures", sp.structures, "Candidate structures, e.g. BB-2+ BSB++ (default: all)");
  s_sp->add_option("--tmax", sp.t_max, "Search limit / pi (0 = 2/u_max)");
  s_sp->add_flag("--critical", sp.critical, "Bisect the amplitude where BSB becomes optimal");
  s_sp->add_option("--u-lo", sp.u_lo, "Lower bracket for --critical")->check(CLI::PositiveNumber);
  s_sp->add_option("--u-hi", sp.u_hi, "Upper bracket for --critical")->check(CLI::PositiveNumber);
  s_sp->add_option("--resolution", sp.resolution, "Bracket width for --critical")->check(CLI::PositiveNumber);

  GateOptions gt;
  auto* s_x = app.add_subcommand("xgate", "Minimum-time X / Y gate or population transfer");
  s_x->add_option("--umax", gt.u_max, "Control bound")->check(CLI::PositiveNumber);
  s_x->add_option("--gate", gt.gate, "x, y or pt")->check(CLI::IsMember({"x", "y", "pt"}));
  s_x->add_flag("--asymptotic", gt.asymptotic, "Add the period-counting ratio model");
  s_x->add_option("--sweep", gt.sweep, "lo:hi:n amplitude sweep instead of a single point");

  SmoothOptions sm;
  auto* s_sm = app.add_subcommand("smooth", "Fidelity-preserving pulse smoothing");
  s_sm->add_option("--scheme", sm.scheme, "tanh, third or constrained")
      ->check(CLI::IsMember({"tanh", "third", "constrained"}));
  s_sm->add_option("--umax", sm.u_max, "Control bound")->check(CLI::PositiveNumber);
  s_sm->add_option("--t-over-trabi", sm.t_over_trabi, "Gate time / T_Rabi (0 = minimum perfect time)")
      ->check(CLI::NonNegativeNumber);
  s_sm->add_option("--beta", sm.beta, "tanh switching sharpness")->check(CLI::PositiveNumber);
  s_sm->add_option("--nt", sm.n_t, "Grid size for the constrained scheme")->check(CLI::Range(3, 1000000));
  s_sm->add_option("--objective", sm.objective, "smooth, power or mixed:<w_power>");
  s_sm->add_option("--init", sm.init, "Initial pulse for the constrained scheme: rabi or bb")
      ->check(CLI::IsMember({"rabi", "bb"}));
  s_sm->add_option("--harmonics", sm.harmonics, "Spectrum lines written")->check(CLI::NonNegativeNumber);

  VerifyOptions vf;
  auto* s_vf = app.add_subcommand("verify", "Optimality report for a pulse CSV");
  s_vf->add_option("--pulse", vf.pulse, "Pulse CSV (t,u)")->required();
  s_vf->add_option("--umax", vf.u_max, "Control bound")->required()->check(CLI::PositiveNumber);
  s_vf->add_option("--cost", vf.cost, "x, y, pt or state-prep")->check(CLI::IsMember({"x", "y", "pt", "state-prep"}));
  s_vf->add_option("--theta-init", vf.init_theta, "Initial polar angle / pi (state-prep)");
  s_vf->add_option("--phi-init", vf.init_phi, "Initial azimuth / pi (state-prep)");
  s_vf->add_option("--theta-target", vf.target_theta, "Target polar angle / pi (state-prep)");
  s_vf->add_option("--phi-target", vf.target_phi, "Target azimuth / pi (state-prep)");
  s_vf->add_option("--samples", vf.samples, "Report grid size")->check(CLI::Range(11, 10000000));

  SpectrumOptions spc;
  auto* s_spc = app.add_subcommand("spectrum", "Fourier lines of a pulse CSV");
  s_spc->add_option("--pulse", spc.pulse, "Pulse CSV (t,u)")->required();
  s_spc->add_option("--umax", spc.u_max, "Normalization and bound (0 = max |u|)")->check(CLI::NonNegativeNumber);
  s_spc->add_option("--harmonics", spc.harmonics, "Lines written")->check(CLI::NonNegativeNumber);

  SweepOptions sw;
  auto* s_sw = app.add_subcommand("sweep", "Amplitude sweep");
  s_sw->add_option("--kind", sw.kind, "xgate, ygate, pt, state-prep, rabi, third or tanh")
      ->check(CLI::IsMember({"xgate", "ygate", "pt", "state-prep", "rabi", "third", "tanh"}));
  s_sw->add_option("--u-from", sw.u_from, "First amplitude")->check(CLI::PositiveNumber);
  s_sw->add_option("--u-to", sw.u_to, "Last amplitude")->check(CLI::PositiveNumber);
  s_sw->add_option("--points", sw.points, "Grid points")->check(CLI::PositiveNumber);
  s_sw->add_option("--beta", sw.beta, "tanh switching sharpness")->check(CLI::PositiveNumber);

  ReproOptions rp;
  auto* s_rp = app.add_subcommand("repro", "Regenerate a reference dataset");
  s_rp->add_option("dataset", rp.dataset, "fig2, fig3a-d, plateaus, fig4a, fig4b, fig5a-c, fig6")->required();
  s_rp->add_option("--points", rp.points, "Grid size override")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunRecord record;
  record.subcommand = sub->get_name();
  record.seed = common.seed;
  record.config = resolved_config(*sub);
  record.config["omega0"] = common.omega0;
  record.config["jobs"] = common.jobs;

  std::string dir = common.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    dir = env && *env ? env : kDefaultOutputDir;
  }
  record.config["out"] = dir;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    Artifacts files(dir, record);
    json result;
    const std::string& name = record.subcommand;
    if (name == "state-prep") result = cmd_state_prep(sp, common, files);
    else if (name == "xgate") result = cmd_xgate(gt, common, files);
    else if (name == "smooth") result = cmd_smooth(sm, common, files);
    else if (name == "verify") result = cmd_verify(vf, common, files);
    else if (name == "spectrum") result = cmd_spectrum(spc, common, files);
    else if (name == "sweep") result = cmd_sweep(sw, common, files);
    else result = cmd_repro(rp, common, files);
    record.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    files.manifest();
    out << result.dump(2) << '\n';
    return 0;
  } catch (const OptimizationError& e) {
    err << "optimization failure: " << e.what() << '\n';
    return 3;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qtoc::cli
