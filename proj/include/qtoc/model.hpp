#pragma once

// Driven qubit H(t) = (omega0/2) sigma_z + u(t) sigma_x and its exact
// constant-control propagator.

#include <cmath>
#include <string>

#include "qtoc/errors.hpp"
#include "qtoc/linalg.hpp"

namespace qtoc {

struct ModelParams {
  double omega0 = 2.0;  ///< level splitting; every regression value assumes 2
  double u_max = 1.0;   ///< control amplitude bound |u(t)| <= u_max

  void validate() const {
    if (!(omega0 > 0.0) || !std::isfinite(omega0))
      throw ValidationError("omega0 must be positive, got " + std::to_string(omega0));
    if (!(u_max > 0.0) || !std::isfinite(u_max))
      throw ValidationError("u_max must be positive, got " + std::to_string(u_max));
  }

  /// Rabi pi-pulse duration pi / u_max.
  [[nodiscard]] double rabi_time() const { return M_PI / u_max; }

  /// Half-gap of the eigenvalues of H at constant u: sqrt(omega0^2/4 + u^2).
  [[nodiscard]] double half_gap(double u) const {
    return std::sqrt(0.25 * omega0 * omega0 + u * u);
  }

  /// Oscillation frequency of the switching function on a bang:
  /// Omega = 2 sqrt(omega0^2/4 + u_max^2), i.e. 2 sqrt(1 + u_max^2) for omega0 = 2.
  [[nodiscard]] double bang_frequency() const { return 2.0 * half_gap(u_max); }
};

inline Unitary2 hamiltonian(double u, const ModelParams& p) {
  const double a = 0.5 * p.omega0;
  return {complex{a, 0}, complex{u, 0}, complex{u, 0}, complex{-a, 0}};
}

/// exp(-i H t) for constant u, in closed form:
///   cos(W t) 1 - i sin(W t) H / W,  W = sqrt(omega0^2/4 + u^2).
inline Unitary2 constant_propagator(double t, double u, const ModelParams& p) {
  if (t < 0.0 || !std::isfinite(t))
    throw DomainError("constant_propagator: duration must be >= 0, got " + std::to_string(t));
  const double w = p.half_gap(u);
  const double c = std::cos(w * t);
  const double s = std::sin(w * t) / w;
  const double a = 0.5 * p.omega0;
  // -i s H = [[-i s a, -i s u], [-i s u, +i s a]]
  return {complex{c, -s * a}, complex{0.0, -s * u}, complex{0.0, -s * u}, complex{c, s * a}};
}

}  // namespace qtoc
