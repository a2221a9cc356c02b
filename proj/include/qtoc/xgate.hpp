#pragma once

// Minimum-time X / Y gates and population transfer with the one-parameter
// bang-bang protocol, the Rabi baseline and the small-amplitude model of the
// optimal-to-Rabi time ratio.

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "qtoc/dynamics.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/optim.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/protocol.hpp"

namespace qtoc {

struct GateProblem {
  GateKind kind = GateKind::X;
  ModelParams params{};

  void validate() const { params.validate(); }
  [[nodiscard]] CostSpec cost_spec() const { return CostSpec::gate(kind); }
  /// Parities searched: even (cos) for X, odd (sin) for Y, both for PT.
  [[nodiscard]] std::vector<Parity> parities() const {
    switch (kind) {
      case GateKind::X: return {Parity::Even};
      case GateKind::Y: return {Parity::Odd};
      case GateKind::PT: return {Parity::Even, Parity::Odd};
    }
    return {Parity::Even};
  }
};

inline OneParamBB one_param_protocol(double omega_eff, double T, const GateProblem& problem, int sign = 1,
                                     std::optional<Parity> parity = std::nullopt) {
  if (!(omega_eff > 0.0) || !(T > 0.0)) throw ValidationError("one_param_protocol: omega_eff and T must be positive");
  return OneParamBB{problem.params.u_max, T, omega_eff, sign, parity.value_or(problem.parities().front())};
}

inline double gate_cost_of(const OneParamBB& o, const GateProblem& problem) {
  return gate_cost(total_propagator(to_piecewise(to_bang_sequence(o)), problem.params), problem.kind);
}

struct OmegaSearchConfig {
  double lo_factor = 0.8;   ///< lower end = lo_factor * omega0
  double hi_factor = 1.1;   ///< upper end = hi_factor * Omega
  int coarse_points = 400;
  double x_tolerance = 1e-12;
};

struct OmegaOptimum {
  double omega_eff = 0.0;
  double cost = 0.0;
  double cost_flipped = 0.0;  ///< same omega_eff with the opposite overall sign
  int sign = 1;
  Parity parity = Parity::Even;
};

/// Global minimum of the gate cost over omega_eff at fixed T: dense scan then
/// golden-section refinement in every basin, for each admissible parity.
inline OmegaOptimum optimize_omega_eff(double T, const GateProblem& problem, const OmegaSearchConfig& cfg = {}) {
  problem.validate();
  if (!(T > 0.0)) throw ValidationError("optimize_omega_eff: T must be positive");
  const double lo = cfg.lo_factor * problem.params.omega0;
  const double hi = cfg.hi_factor * problem.params.bang_frequency();
  OmegaOptimum best;
  best.cost = std::numeric_limits<double>::infinity();
  for (Parity par : problem.parities()) {
    auto f = [&](double w) { return gate_cost_of(OneParamBB{problem.params.u_max, T, w, 1, par}, problem); };
    const auto r = optim::scalar_minimize(f, lo, hi, {cfg.coarse_points, cfg.x_tolerance, 64});
    if (r.f < best.cost) {
      best.omega_eff = r.x;
      best.cost = r.f;
      best.parity = par;
    }
  }
  best.cost_flipped = gate_cost_of(OneParamBB{problem.params.u_max, T, best.omega_eff, -1, best.parity}, problem);
  return best;
}

struct GateSearchConfig {
  double tol_fidelity = 1e-6;
  double start_fraction = 0.6;   ///< scan starts at this fraction of T_Rabi
  double coarse_step = 0.01;     ///< in units of T_Rabi
  double resolution = 1e-6;      ///< bisection width, units of T_Rabi
  double max_fraction = 1.2;
  double audit_fraction = 0.999;
  OmegaSearchConfig omega{};
  ReportConfig report{};
};

struct GateSearchResult {
  double T_star = 0.0;
  double T_rabi = 0.0;
  double ratio = 0.0;
  double omega_eff = 0.0;
  double cost = 0.0;
  double cost_flipped = 0.0;
  int sign = 1;
  Parity parity = Parity::Even;
  std::size_t n_switch = 0;
  BangSequence protocol;
  double audit_T = 0.0;
  double audit_omega_eff = 0.0;
  OptimalityReport report;
};

/// Smallest T with min over omega_eff of C + 1 <= tol. C + 1 touches zero in
/// narrow dips, so the coarse scan watches for local minima of the optimized
/// gap, refines each by golden section in T and bisects its left flank.
inline GateSearchResult min_gate_time(const GateProblem& problem, const GateSearchConfig& cfg = {}) {
  problem.validate();
  const double t_rabi = problem.params.rabi_time();
  auto gap = [&](double T) { return optimize_omega_eff(T, problem, cfg.omega).cost + 1.0; };
  const auto hit = optim::first_reach(gap, cfg.start_fraction * t_rabi, cfg.max_fraction * t_rabi,
                                      {cfg.coarse_step * t_rabi, cfg.tol_fidelity, cfg.resolution * t_rabi});
  if (!hit) throw OptimizationError("min_gate_time: gate not completed below " + std::to_string(cfg.max_fraction) +
                                    " T_Rabi");

  GateSearchResult r;
  r.T_star = *hit;
  r.T_rabi = t_rabi;
  r.ratio = r.T_star / t_rabi;
  const auto opt = optimize_omega_eff(r.T_star, problem, cfg.omega);
  r.omega_eff = opt.omega_eff;
  r.cost = opt.cost;
  r.cost_flipped = opt.cost_flipped;
  r.sign = opt.sign;
  r.parity = opt.parity;
  r.protocol = to_bang_sequence(OneParamBB{problem.params.u_max, r.T_star, r.omega_eff, r.sign, r.parity});
  r.n_switch = r.protocol.switch_times.size();

  r.audit_T = cfg.audit_fraction * r.T_star;
  const auto below = optimize_omega_eff(r.audit_T, problem, cfg.omega);
  r.audit_omega_eff = below.omega_eff;
  r.report = optimality_report(
      to_piecewise(to_bang_sequence(OneParamBB{problem.params.u_max, r.audit_T, below.omega_eff, 1, below.parity})),
      problem.params, problem.cost_spec(), cfg.report);
  return r;
}

// ---------------------------------------------------------------------------

struct AsymptoticModel {
  long periods = 0;      ///< N, number of elementary bang-bang periods
  double ratio = 0.0;    ///< N t0 / T_Rabi
  double gap = 0.0;      ///< C + 1 after N periods
  bool within_eps = false;
};

/// Elementary period of duration t0 = pi: U(t0/4,+u) U(t0/2,-u) U(t0/4,+u)
/// for X, U(t0/2,+u) U(t0/2,-u) for Y.
inline Unitary2 elementary_period(double u_max, GateKind kind, double omega0 = 2.0) {
  const ModelParams p{omega0, u_max};
  const double t0 = M_PI;
  if (kind == GateKind::Y)
    return constant_propagator(0.5 * t0, u_max, p) * constant_propagator(0.5 * t0, -u_max, p);
  const Unitary2 q = constant_propagator(0.25 * t0, u_max, p);
  return q * constant_propagator(0.5 * t0, -u_max, p) * q;
}

/// Powers the elementary period until the gate cost reaches -1 + eps_factor *
/// u_max. The discrete period count overshoots by O(u^2), so when no power
/// gets that close the first local minimum of C + 1 in N is returned.
inline AsymptoticModel asymptotic_ratio_model(double u_max, GateKind kind = GateKind::X, double eps_factor = 1e-3,
                                              long max_periods = 1000000) {
  if (!(u_max > 0.0)) throw ValidationError("asymptotic_ratio_model: u_max must be positive");
  const Unitary2 step = elementary_period(u_max, kind);
  const double eps = eps_factor * u_max;
  AsymptoticModel m;
  Unitary2 u = Unitary2::identity();
  double prev_gap = 1.0;
  for (long n = 1; n <= max_periods; ++n) {
    u = step * u;
    const double g = gate_cost(u, kind) + 1.0;
    if (g <= eps) {
      m.periods = n;
      m.gap = g;
      m.within_eps = true;
      break;
    }
    if (g > prev_gap && prev_gap < 0.5) {
      m.periods = n - 1;
      m.gap = prev_gap;
      break;
    }
    prev_gap = g;
  }
  const double t_rabi = M_PI / u_max;
  m.ratio = static_cast<double>(m.periods) * M_PI / t_rabi;
  return m;
}

/// C_X + 1 of the Rabi pi-pulse under the full dynamics for each amplitude.
inline std::vector<std::pair<double, double>> rabi_fidelity_curve(const std::vector<double>& u_values,
                                                                  double omega0 = 2.0,
                                                                  double points_per_pi = kDefaultPointsPerPi) {
  std::vector<std::pair<double, double>> out;
  for (double u : u_values) {
    const ModelParams p{omega0, u};
    p.validate();
    const Protocol rabi = rabi_protocol(p);
    out.emplace_back(u, gate_cost(total_propagator(rabi, p, points_per_pi), GateKind::X) + 1.0);
  }
  return out;
}

}  // namespace qtoc
