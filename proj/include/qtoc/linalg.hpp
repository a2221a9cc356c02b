#pragma once

// Two-level linear algebra: state vectors and 2x2 complex matrices.

#include <array>
#include <cmath>
#include <complex>

namespace qtoc {

using complex = std::complex<double>;

inline constexpr complex kI{0.0, 1.0};

/// Two-component complex amplitude vector. Wave functions are normalized;
/// adjoint fields share the representation but carry arbitrary norm.
struct QubitState {
  complex c0{1.0, 0.0};
  complex c1{0.0, 0.0};

  static constexpr QubitState zero() { return {complex{1.0, 0.0}, complex{0.0, 0.0}}; }
  static constexpr QubitState one() { return {complex{0.0, 0.0}, complex{1.0, 0.0}}; }
  static constexpr QubitState null() { return {complex{0.0, 0.0}, complex{0.0, 0.0}}; }

  [[nodiscard]] double norm_squared() const { return std::norm(c0) + std::norm(c1); }
  [[nodiscard]] double norm() const { return std::sqrt(norm_squared()); }

  QubitState& operator+=(const QubitState& o) {
    c0 += o.c0;
    c1 += o.c1;
    return *this;
  }
  QubitState& operator*=(complex s) {
    c0 *= s;
    c1 *= s;
    return *this;
  }
};

inline QubitState operator+(QubitState a, const QubitState& b) { return a += b; }
inline QubitState operator-(const QubitState& a, const QubitState& b) {
  return {a.c0 - b.c0, a.c1 - b.c1};
}
inline QubitState operator*(complex s, QubitState a) { return a *= s; }
inline QubitState operator*(double s, QubitState a) { return a *= complex{s, 0.0}; }

/// <a|b>, antilinear in the first argument.
inline complex inner(const QubitState& a, const QubitState& b) {
  return std::conj(a.c0) * b.c0 + std::conj(a.c1) * b.c1;
}

/// Row-major 2x2 complex matrix.
struct Unitary2 {
  complex a{1.0, 0.0}, b{0.0, 0.0};
  complex c{0.0, 0.0}, d{1.0, 0.0};

  static constexpr Unitary2 identity() { return {}; }

  [[nodiscard]] complex operator()(int row, int col) const {
    if (row == 0) return col == 0 ? a : b;
    return col == 0 ? c : d;
  }

  [[nodiscard]] Unitary2 adjoint() const {
    return {std::conj(a), std::conj(c), std::conj(b), std::conj(d)};
  }
  [[nodiscard]] Unitary2 transpose() const { return {a, c, b, d}; }
  [[nodiscard]] complex det() const { return a * d - b * c; }
  [[nodiscard]] complex trace() const { return a + d; }

  /// Largest entrywise modulus difference.
  [[nodiscard]] double max_abs_diff(const Unitary2& o) const {
    return std::max({std::abs(a - o.a), std::abs(b - o.b), std::abs(c - o.c), std::abs(d - o.d)});
  }
};

inline Unitary2 operator*(const Unitary2& x, const Unitary2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
          x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}
inline QubitState operator*(const Unitary2& m, const QubitState& s) {
  return {m.a * s.c0 + m.b * s.c1, m.c * s.c0 + m.d * s.c1};
}
inline Unitary2 operator*(complex s, const Unitary2& m) {
  return {s * m.a, s * m.b, s * m.c, s * m.d};
}
inline Unitary2 operator+(const Unitary2& x, const Unitary2& y) {
  return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
}

/// <l|M|r>
inline complex expectation(const QubitState& l, const Unitary2& m, const QubitState& r) {
  return inner(l, m * r);
}

/// Deviation of U^dagger U from the identity (max entrywise modulus).
inline double unitarity_error(const Unitary2& u) {
  return (u.adjoint() * u).max_abs_diff(Unitary2::identity());
}

namespace pauli {
inline constexpr Unitary2 id{complex{1, 0}, complex{0, 0}, complex{0, 0}, complex{1, 0}};
inline constexpr Unitary2 x{complex{0, 0}, complex{1, 0}, complex{1, 0}, complex{0, 0}};
inline constexpr Unitary2 y{complex{0, 0}, complex{0, -1}, complex{0, 1}, complex{0, 0}};
inline constexpr Unitary2 z{complex{1, 0}, complex{0, 0}, complex{0, 0}, complex{-1, 0}};
}  // namespace pauli

}  // namespace qtoc
