#pragma once

// Pontryagin machinery: adjoint fields, switching function Phi(t),
// control-Hamiltonian H_oc(t), exact cost gradients, the analytical
// bang-bang switching-function family and the Bloch-sphere geometry of the
// singular arc.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qtoc/dynamics.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/linalg.hpp"
#include "qtoc/model.hpp"
#include "qtoc/protocol.hpp"

namespace qtoc {

enum class CostKind { StatePrep, X, Y, PT };

inline std::string to_string(CostKind k) {
  switch (k) {
    case CostKind::StatePrep: return "state-prep";
    case CostKind::X: return "x";
    case CostKind::Y: return "y";
    case CostKind::PT: return "pt";
  }
  return "?";
}

inline CostKind cost_kind(GateKind g) {
  switch (g) {
    case GateKind::X: return CostKind::X;
    case GateKind::Y: return CostKind::Y;
    case GateKind::PT: return CostKind::PT;
  }
  return CostKind::X;
}

/// Terminal cost together with the data its adjoint needs: the target for
/// state preparation; gate costs track the trajectories started from |0> and |1>.
struct CostSpec {
  CostKind kind = CostKind::X;
  QubitState init = QubitState::zero();
  QubitState target = QubitState::one();

  static CostSpec state_prep(const QubitState& init, const QubitState& target) {
    return {CostKind::StatePrep, init, target};
  }
  static CostSpec gate(GateKind g) { return {cost_kind(g), QubitState::zero(), QubitState::one()}; }

  [[nodiscard]] std::vector<QubitState> initial_states() const {
    if (kind == CostKind::StatePrep) return {init};
    return {QubitState::zero(), QubitState::one()};
  }

  [[nodiscard]] double evaluate(const Unitary2& u) const {
    switch (kind) {
      case CostKind::StatePrep: return state_prep_cost(u, init, target);
      case CostKind::X: return gate_cost(u, GateKind::X);
      case CostKind::Y: return gate_cost(u, GateKind::Y);
      case CostKind::PT: return gate_cost(u, GateKind::PT);
    }
    return 0.0;
  }
};

/// |lambda_j(T)> = 2 dC / d<psi_j(T)| for each forward trajectory j, given the
/// final states in the order of CostSpec::initial_states().
inline std::vector<QubitState> terminal_adjoints(const CostSpec& spec, std::span<const QubitState> finals) {
  const std::size_t need = spec.kind == CostKind::StatePrep ? 1 : 2;
  if (finals.size() != need) throw ValidationError("terminal_adjoints: wrong number of final states");
  switch (spec.kind) {
    case CostKind::StatePrep: {
      const complex ov = inner(spec.target, finals[0]);
      return {-2.0 * ov * spec.target};
    }
    case CostKind::X: {
      const complex m = finals[0].c1 + finals[1].c0;
      return {-0.5 * m * QubitState::one(), -0.5 * m * QubitState::zero()};
    }
    case CostKind::Y: {
      const complex m = finals[0].c1 - finals[1].c0;
      return {-0.5 * m * QubitState::one(), 0.5 * m * QubitState::zero()};
    }
    case CostKind::PT:
      return {-finals[0].c1 * QubitState::one(), -finals[1].c0 * QubitState::zero()};
  }
  return {};
}

/// Forward trajectories for every initial state of the cost on a common grid.
inline std::vector<Trajectory> forward_trajectories(const PiecewiseConstant& pc, const ModelParams& p,
                                                    const CostSpec& spec, std::span<const double> times) {
  std::vector<Trajectory> out;
  for (const auto& s : spec.initial_states()) out.push_back(propagate(pc, p, s, times));
  return out;
}

/// Adjoint fields on the grid of `forward`. Because lambda obeys the same
/// Schroedinger equation, lambda(t) = U(t) U(T)^dagger lambda(T), evaluated
/// with the exact segment propagators.
inline std::vector<std::vector<QubitState>> adjoint_trajectory(const PiecewiseConstant& pc, const ModelParams& p,
                                                               const CostSpec& spec,
                                                               const std::vector<Trajectory>& forward) {
  const auto inits = spec.initial_states();
  if (forward.size() != inits.size()) throw ValidationError("adjoint_trajectory: forward trajectory count mismatch");
  for (const auto& f : forward)
    if (f.times != forward.front().times || f.states.size() != f.times.size())
      throw ValidationError("adjoint_trajectory: forward trajectories must share one grid");
  std::vector<QubitState> finals;
  for (const auto& f : forward) finals.push_back(f.total * inits[&f - forward.data()]);
  const auto lam_T = terminal_adjoints(spec, finals);
  const Unitary2 back = forward.front().total.adjoint();
  const auto& times = forward.front().times;
  std::vector<std::vector<QubitState>> out;
  for (const auto& l : lam_T) out.push_back(propagate(pc, p, back * l, times).states);
  return out;
}

/// Phi(t) = sum_j Re[-i <lambda_j|sigma_x|psi_j>].
inline std::vector<double> switching_function(const std::vector<Trajectory>& forward,
                                              const std::vector<std::vector<QubitState>>& adjoint) {
  if (forward.size() != adjoint.size()) throw ValidationError("switching_function: trajectory pair mismatch");
  const std::size_t n = forward.empty() ? 0 : forward.front().states.size();
  std::vector<double> phi(n, 0.0);
  for (std::size_t j = 0; j < forward.size(); ++j) {
    if (adjoint[j].size() != n || forward[j].states.size() != n)
      throw ValidationError("switching_function: grids differ");
    for (std::size_t k = 0; k < n; ++k)
      phi[k] += std::real(-kI * expectation(adjoint[j][k], pauli::x, forward[j].states[k]));
  }
  return phi;
}

/// H_oc(t) = sum_j Re[-i <lambda_j|H(t)|psi_j>] with u(t) read from `pc`
/// (right-continuous at switching instants).
inline std::vector<double> control_hamiltonian(const std::vector<Trajectory>& forward,
                                               const std::vector<std::vector<QubitState>>& adjoint,
                                               const PiecewiseConstant& pc, const ModelParams& p) {
  if (forward.size() != adjoint.size()) throw ValidationError("control_hamiltonian: trajectory pair mismatch");
  const auto& times = forward.front().times;
  std::vector<double> hoc(times.size(), 0.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto it = std::upper_bound(pc.edges.begin() + 1, pc.edges.end() - 1, times[k]);
    const double u = pc.values[static_cast<std::size_t>(it - (pc.edges.begin() + 1))];
    const Unitary2 h = hamiltonian(u, p);
    for (std::size_t j = 0; j < forward.size(); ++j)
      hoc[k] += std::real(-kI * expectation(adjoint[j][k], h, forward[j].states[k]));
  }
  return hoc;
}

namespace detail {

using Vec3 = std::array<double, 3>;

inline Unitary2 pauli_dot(const Vec3& v) {
  return {complex{v[2], 0.0}, complex{v[0], -v[1]}, complex{v[0], v[1]}, complex{-v[2], 0.0}};
}

/// int_0^dt e^{iHs} sigma_x e^{-iHs} ds as a Pauli vector, for H = u sigma_x + a sigma_z.
inline Vec3 integrated_sigma_x(double dt, double u, const ModelParams& p) {
  const double a = 0.5 * p.omega0;
  const double w = p.half_gap(u);
  const Vec3 n{u / w, 0.0, a / w};
  const double nx = n[0];
  // Heisenberg rotation of x-hat about n by -2ws, integrated over s.
  const Vec3 par{n[0] * nx, 0.0, n[2] * nx};
  const Vec3 perp{1.0 - par[0], 0.0, -par[2]};
  const Vec3 cross{0.0, n[2], 0.0};  // n x x-hat
  const double s = std::sin(2.0 * w * dt) / (2.0 * w);
  const double c = (1.0 - std::cos(2.0 * w * dt)) / (2.0 * w);
  Vec3 out{};
  for (int i = 0; i < 3; ++i) out[i] = par[i] * dt + perp[i] * s - cross[i] * c;
  return out;
}

}  // namespace detail

/// Exact gradient dC/du_i = int over segment i of Phi(t) dt for every segment
/// of the piecewise-constant control (closed-form segment integrals, no
/// midpoint approximation).
inline std::vector<double> cost_gradient(const PiecewiseConstant& pc, const ModelParams& p, const CostSpec& spec) {
  const auto inits = spec.initial_states();
  const Unitary2 total = total_propagator(pc, p);
  std::vector<QubitState> finals;
  for (const auto& s : inits) finals.push_back(total * s);
  const auto lam_T = terminal_adjoints(spec, finals);
  std::vector<QubitState> psi = inits;
  std::vector<QubitState> lam;
  for (const auto& l : lam_T) lam.push_back(total.adjoint() * l);
  std::vector<double> grad(pc.size(), 0.0);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const double dt = pc.width(i);
    const Unitary2 m = detail::pauli_dot(detail::integrated_sigma_x(dt, pc.values[i], p));
    const Unitary2 step = constant_propagator(dt, pc.values[i], p);
    for (std::size_t j = 0; j < psi.size(); ++j) {
      grad[i] += std::real(-kI * expectation(lam[j], m, psi[j]));
      psi[j] = step * psi[j];
      lam[j] = step * lam[j];
    }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Analytical switching function of bang-bang extremals

/// omega_eff = Omega / (1 + (2/pi) asin(4 lambda0 u_max / (A Omega^2))).
inline double omega_eff(double lambda0_over_A, const ModelParams& p) {
  const double big = p.bang_frequency();
  const double arg = 4.0 * lambda0_over_A * p.u_max / (big * big);
  if (!(std::abs(arg) <= 1.0)) throw DomainError("omega_eff: asin argument outside [-1, 1]");
  return big / (1.0 + (2.0 / M_PI) * std::asin(arg));
}

/// Phi on a bang-bang extremal: segments of width pi/omega_eff centred at
/// T/2 + k pi/omega_eff, each carrying (-1)^k [A cos(Omega (t - c_k)) + 4 u_max lambda0 / Omega^2].
inline std::vector<double> analytical_switching(double A, double lambda0, double omega_eff_value, double T,
                                                const ModelParams& p, std::span<const double> times) {
  if (!(omega_eff_value > 0.0)) throw DomainError("analytical_switching: omega_eff must be positive");
  const double big = p.bang_frequency();
  const double width = M_PI / omega_eff_value;
  const double offset = 4.0 * p.u_max * lambda0 / (big * big);
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const double k = std::round((t - 0.5 * T) / width);
    const double c = 0.5 * T + k * width;
    const double sign = std::fmod(std::abs(k), 2.0) == 0.0 ? 1.0 : -1.0;
    out.push_back(sign * (A * std::cos(big * (t - c)) + offset));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bloch-sphere geometry

/// alpha = 2 cot(theta) / sin(phi); empty on the dividing arcs phi in {0, +-pi}
/// and at the poles, where it is undefined.
inline std::optional<double> alpha(const BlochPoint& b) {
  const double s = std::sin(b.phi);
  const double st = std::sin(b.theta);
  if (std::abs(s) < 1e-14 || std::abs(st) < 1e-14) return std::nullopt;
  return 2.0 * (std::cos(b.theta) / st) / s;
}

/// (dtheta/dt, dphi/dt) = (-2u sin(phi), omega0 - 2u cos(phi) cot(theta)).
inline std::pair<double, double> bloch_velocity(const BlochPoint& b, double u, const ModelParams& p) {
  const double st = std::sin(b.theta);
  if (std::abs(st) < 1e-14) throw DomainError("bloch_velocity: azimuth undefined at the poles");
  return {-2.0 * u * std::sin(b.phi), p.omega0 - 2.0 * u * std::cos(b.phi) * std::cos(b.theta) / st};
}

// ---------------------------------------------------------------------------
// Optimality report

struct ReportConfig {
  std::size_t n_samples = 4001;
  double sign_tolerance = 1e-5;       ///< u Phi / (u_max max|Phi|) allowed above zero
  int switch_exclusion = 2;           ///< grid steps excluded around switching instants
  double equator_tolerance = 1e-6;    ///< |theta - pi/2| for singular residence
};

struct SegmentHoc {
  double t_begin = 0.0;
  double t_end = 0.0;
  double u = 0.0;
  double mean = 0.0;
  double max_dev = 0.0;
  std::size_t samples = 0;
};

struct OptimalityReport {
  std::vector<double> times, u, phi, hoc;
  std::vector<SegmentHoc> segments;
  double hoc_mean = 0.0;
  double hoc_max_dev = 0.0;         ///< max over segments of max_dev / (1 + |mean|)
  double max_abs_phi = 0.0;
  double sign_fraction = 1.0;       ///< share of tested samples where u minimizes u Phi over the box
  std::size_t sign_samples = 0;
  double lambda0 = 0.0;             ///< -mean(H_oc)
  double A = 0.0;
  double omega_eff = 0.0;           ///< from lambda0 / A; 0 when the fit is unavailable
  double omega_eff_zeros = 0.0;     ///< pi / mean spacing of interior zeros of Phi
  double fit_residual = 0.0;        ///< max |Phi - model| / max|Phi| over middle segments
  double singular_residence = 0.0;  ///< time with u = 0 and |theta - pi/2| < tolerance
  double singular_time = 0.0;       ///< total time with u = 0
  double max_equator_deviation = 0.0;

  [[nodiscard]] bool passes(double sign_min = 0.999, double hoc_tol = 1e-8) const {
    return sign_fraction >= sign_min && hoc_max_dev < hoc_tol;
  }
};

namespace detail {

/// Least squares for Phi ~ s_k [A cos(Omega (t - c_k)) + B] over the middle
/// segments (between consecutive interior zeros). Returns (A, B, residual).
inline std::array<double, 3> fit_middle_segments(const std::vector<double>& t, const std::vector<double>& phi,
                                                 const std::vector<double>& zeros, double big, double scale) {
  double saa = 0, sab = 0, sbb = 0, sya = 0, syb = 0;
  std::vector<std::pair<std::size_t, std::array<double, 2>>> rows;
  for (std::size_t z = 0; z + 1 < zeros.size(); ++z) {
    const double lo = zeros[z], hi = zeros[z + 1], c = 0.5 * (lo + hi);
    const double margin = 0.02 * (hi - lo);
    double sgn_sum = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k] > lo && t[k] < hi) sgn_sum += phi[k];
    const double s = sgn_sum >= 0.0 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (t[k] <= lo + margin || t[k] >= hi - margin) continue;
      const double a = s * std::cos(big * (t[k] - c));
      const double b = s;
      saa += a * a;
      sab += a * b;
      sbb += b * b;
      sya += phi[k] * a;
      syb += phi[k] * b;
      rows.push_back({k, {a, b}});
    }
  }
  const double det = saa * sbb - sab * sab;
  if (rows.empty() || std::abs(det) < 1e-300) return {0.0, 0.0, 0.0};
  const double A = (sya * sbb - syb * sab) / det;
  const double B = (saa * syb - sab * sya) / det;
  double res = 0.0;
  for (const auto& [k, r] : rows) res = std::max(res, std::abs(phi[k] - A * r[0] - B * r[1]));
  return {A, B, scale > 0.0 ? res / scale : 0.0};
}

}  // namespace detail

/// Samples Phi and H_oc on a uniform grid and evaluates the first-order
/// optimality diagnostics of a piecewise-constant control.
inline OptimalityReport optimality_report(const PiecewiseConstant& pc, const ModelParams& p, const CostSpec& spec,
                                          const ReportConfig& cfg = {}) {
  OptimalityReport r;
  const double T = pc.duration();
  r.times = uniform_grid(T, cfg.n_samples);
  const auto fwd = forward_trajectories(pc, p, spec, r.times);
  const auto adj = adjoint_trajectory(pc, p, spec, fwd);
  r.phi = switching_function(fwd, adj);
  r.hoc = control_hamiltonian(fwd, adj, pc, p);
  const std::size_t n = r.times.size();
  r.u.resize(n);
  std::vector<std::size_t> seg_of(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto it = std::upper_bound(pc.edges.begin() + 1, pc.edges.end() - 1, r.times[k]);
    seg_of[k] = static_cast<std::size_t>(it - (pc.edges.begin() + 1));
    r.u[k] = pc.values[seg_of[k]];
  }
  for (double v : r.phi) r.max_abs_phi = std::max(r.max_abs_phi, std::abs(v));
  r.hoc_mean = std::accumulate(r.hoc.begin(), r.hoc.end(), 0.0) / static_cast<double>(n);
  r.lambda0 = -r.hoc_mean;

  // H_oc per constant-u segment
  for (std::size_t i = 0; i < pc.size(); ++i) {
    SegmentHoc s{pc.edges[i], pc.edges[i + 1], pc.values[i], 0.0, 0.0, 0};
    for (std::size_t k = 0; k < n; ++k)
      if (seg_of[k] == i) {
        s.mean += r.hoc[k];
        ++s.samples;
      }
    if (s.samples == 0) continue;
    s.mean /= static_cast<double>(s.samples);
    for (std::size_t k = 0; k < n; ++k)
      if (seg_of[k] == i) s.max_dev = std::max(s.max_dev, std::abs(r.hoc[k] - s.mean));
    r.hoc_max_dev = std::max(r.hoc_max_dev, s.max_dev / (1.0 + std::abs(s.mean)));
    r.segments.push_back(s);
  }

  // Minimum condition away from switching instants. Bang samples need u Phi <= 0,
  // samples strictly inside the box need Phi = 0. u = 0 arcs are left to the
  // singular-arc diagnostics below.
  const double dt = T / static_cast<double>(n - 1);
  const double guard = cfg.switch_exclusion * dt;
  std::vector<double> jumps;
  for (std::size_t e = 1; e + 1 < pc.edges.size(); ++e)
    if (std::abs(pc.values[e - 1] - pc.values[e]) > 0.5 * p.u_max) jumps.push_back(pc.edges[e]);
  const double phi_scale = r.max_abs_phi > 0.0 ? r.max_abs_phi : 1.0;
  std::size_t ok = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (r.u[k] == 0.0) continue;
    const auto j = std::lower_bound(jumps.begin(), jumps.end(), r.times[k] - guard);
    if (j != jumps.end() && *j <= r.times[k] + guard) continue;
    ++r.sign_samples;
    const bool saturated = std::abs(r.u[k]) >= p.u_max * (1.0 - 1e-9);
    const double m = saturated ? r.u[k] * r.phi[k] / (p.u_max * phi_scale) : std::abs(r.phi[k]) / phi_scale;
    if (m <= cfg.sign_tolerance) ++ok;
  }
  r.sign_fraction = r.sign_samples ? static_cast<double>(ok) / static_cast<double>(r.sign_samples) : 1.0;

  // interior zeros of Phi and the analytical fit over middle segments
  std::vector<double> zeros;
  for (std::size_t k = 0; k + 1 < n; ++k)
    if ((r.phi[k] < 0.0) != (r.phi[k + 1] < 0.0) && r.phi[k] != r.phi[k + 1])
      zeros.push_back(r.times[k] + (r.times[k + 1] - r.times[k]) * r.phi[k] / (r.phi[k] - r.phi[k + 1]));
  if (zeros.size() >= 2) {
    r.omega_eff_zeros = M_PI * static_cast<double>(zeros.size() - 1) / (zeros.back() - zeros.front());
    const auto [A, B, res] = detail::fit_middle_segments(r.times, r.phi, zeros, p.bang_frequency(), r.max_abs_phi);
    r.A = A;
    r.fit_residual = res;
    if (A != 0.0) {
      const double ratio = r.lambda0 / A;
      try {
        r.omega_eff = omega_eff(ratio, p);
      } catch (const DomainError&) {
        r.omega_eff = 0.0;
      }
    }
    (void)B;
  }

  // singular residence on the equator
  if (n >= 2) {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (r.u[k] != 0.0) continue;
      r.singular_time += r.times[k + 1] - r.times[k];
      const double dev = std::abs(bloch_from_state(fwd.front().states[k]).theta - 0.5 * M_PI);
      r.max_equator_deviation = std::max(r.max_equator_deviation, dev);
      if (dev < cfg.equator_tolerance) r.singular_residence += r.times[k + 1] - r.times[k];
    }
  }
  return r;
}

inline OptimalityReport optimality_report(const Protocol& protocol, const ModelParams& p, const CostSpec& spec,
                                          const ReportConfig& cfg = {}) {
  validate(protocol);
  return optimality_report(to_piecewise(protocol), p, spec, cfg);
}

}  // namespace qtoc
