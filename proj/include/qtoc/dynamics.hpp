#pragma once

// Exact propagation of piecewise-constant controls, Bloch-sphere coordinates
// and terminal costs.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qtoc/errors.hpp"
#include "qtoc/linalg.hpp"
#include "qtoc/model.hpp"
#include "qtoc/protocol.hpp"

namespace qtoc {

/// Ordered product U(dt_N, u_N) ... U(dt_1, u_1).
inline Unitary2 total_propagator(const PiecewiseConstant& pc, const ModelParams& p) {
  Unitary2 u = Unitary2::identity();
  for (std::size_t i = 0; i < pc.size(); ++i) u = constant_propagator(pc.width(i), pc.values[i], p) * u;
  return u;
}

inline Unitary2 total_propagator(const Protocol& protocol, const ModelParams& p,
                                 double points_per_pi = kDefaultPointsPerPi) {
  return total_propagator(to_piecewise(protocol, points_per_pi), p);
}

/// States sampled on a uniform time grid plus the total evolution operator.
struct Trajectory {
  std::vector<double> times;
  std::vector<QubitState> states;
  Unitary2 total;
};

/// Uniform sample grid t_k = k T / (n - 1), k = 0..n-1.
inline std::vector<double> uniform_grid(double T, std::size_t n) {
  if (n < 2) throw ValidationError("sample grid needs at least two points");
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = T * static_cast<double>(k) / static_cast<double>(n - 1);
  g.back() = T;
  return g;
}

/// Evolves `initial` through the piecewise-constant control and records the
/// state at each requested time (nondecreasing, within [0, T]).
inline Trajectory propagate(const PiecewiseConstant& pc, const ModelParams& p, const QubitState& initial,
                            std::span<const double> sample_times) {
  Trajectory tr;
  tr.times.assign(sample_times.begin(), sample_times.end());
  tr.states.reserve(tr.times.size());
  QubitState seg_start = initial;
  Unitary2 total = Unitary2::identity();
  std::size_t seg = 0;
  const std::size_t nseg = pc.size();
  for (double t : tr.times) {
    if (t < 0.0 || t > pc.duration() * (1.0 + 1e-14))
      throw ValidationError("propagate: sample time outside [0, T]");
    while (seg + 1 < nseg && t >= pc.edges[seg + 1]) {
      const Unitary2 step = constant_propagator(pc.width(seg), pc.values[seg], p);
      seg_start = step * seg_start;
      total = step * total;
      ++seg;
    }
    const double local = std::max(0.0, t - pc.edges[seg]);
    tr.states.push_back(constant_propagator(local, pc.values[seg], p) * seg_start);
  }
  for (; seg < nseg; ++seg) total = constant_propagator(pc.width(seg), pc.values[seg], p) * total;
  tr.total = total;
  return tr;
}

inline Trajectory propagate(const Protocol& protocol, const ModelParams& p, const QubitState& initial,
                            std::size_t n_samples, double points_per_pi = kDefaultPointsPerPi) {
  validate(protocol);
  const auto grid = uniform_grid(duration(protocol), n_samples);
  return propagate(to_piecewise(protocol, points_per_pi), p, initial, grid);
}

// ---------------------------------------------------------------------------
// Bloch sphere

struct BlochPoint {
  double theta = 0.0;  ///< polar angle in [0, pi]
  double phi = 0.0;    ///< azimuth in (-pi, pi]
};

/// [cos(theta/2), sin(theta/2) e^{i phi}]
inline QubitState state_from_bloch(const BlochPoint& b) {
  return {complex{std::cos(0.5 * b.theta), 0.0}, std::polar(std::sin(0.5 * b.theta), b.phi)};
}

/// Removes the global phase so that c0 is real and nonnegative (c1 real and
/// positive at the south pole) and reads off (theta, phi). Non-normalized
/// input is normalized first.
inline BlochPoint bloch_from_state(const QubitState& s) {
  const double n = s.norm();
  if (!(n > 0.0)) throw DomainError("bloch_from_state: zero vector has no Bloch point");
  const double r0 = std::abs(s.c0) / n;
  const double r1 = std::abs(s.c1) / n;
  BlochPoint b;
  b.theta = 2.0 * std::atan2(r1, r0);
  if (r1 == 0.0 || r0 == 0.0) {
    b.phi = 0.0;
  } else {
    double phi = std::arg(s.c1) - std::arg(s.c0);
    phi = std::remainder(phi, 2.0 * M_PI);
    if (phi <= -M_PI) phi += 2.0 * M_PI;
    b.phi = phi;
  }
  return b;
}

/// Multiplies by a global phase so that c0 >= 0 (or c1 > 0 when c0 = 0).
inline QubitState canonical_phase(const QubitState& s) {
  const complex ref = std::abs(s.c0) > 0.0 ? s.c0 : s.c1;
  if (std::abs(ref) == 0.0) return s;
  return std::conj(ref / std::abs(ref)) * s;
}

// ---------------------------------------------------------------------------
// Terminal costs

/// -|<target|U|init>|^2
inline double state_prep_cost(const Unitary2& u, const QubitState& init, const QubitState& target) {
  return -std::norm(inner(target, u * init));
}

enum class GateKind { X, Y, PT };

inline std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::X: return "x";
    case GateKind::Y: return "y";
    case GateKind::PT: return "pt";
  }
  return "?";
}

inline GateKind gate_kind_from_string(const std::string& s) {
  if (s == "x" || s == "X") return GateKind::X;
  if (s == "y" || s == "Y") return GateKind::Y;
  if (s == "pt" || s == "PT") return GateKind::PT;
  throw ValidationError("unknown gate kind '" + s + "' (expected x, y or pt)");
}

/// C_X = -1/4 |<1|U|0> + <0|U|1>|^2, C_Y with the minus sign,
/// C_PT = -1/2 (|<1|U|0>|^2 + |<0|U|1>|^2).
inline double gate_cost(const Unitary2& u, GateKind kind) {
  const complex u10 = u.c;
  const complex u01 = u.b;
  switch (kind) {
    case GateKind::X: return -0.25 * std::norm(u10 + u01);
    case GateKind::Y: return -0.25 * std::norm(u10 - u01);
    case GateKind::PT: return -0.5 * (std::norm(u10) + std::norm(u01));
  }
  return 0.0;
}

/// Resonant pi-pulse of duration pi / u_max.
inline Rabi rabi_protocol(const ModelParams& p) {
  p.validate();
  return Rabi{p.u_max, p.rabi_time(), p.omega0};
}

}  // namespace qtoc
