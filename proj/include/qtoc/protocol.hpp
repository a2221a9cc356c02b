#pragma once

// Control protocols u(t) on [0, T]. Every variant can be evaluated pointwise
// and reduced to a piecewise-constant control for exact propagation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qtoc/errors.hpp"
#include "qtoc/model.hpp"

namespace qtoc {

/// Allowed values of a bang-sequence segment, in units of u_max.
enum class Bang : std::int8_t { Minus = -1, Zero = 0, Plus = 1 };

inline double level(Bang b) { return static_cast<double>(static_cast<int>(b)); }

inline Bang flip(Bang b) { return static_cast<Bang>(-static_cast<int>(b)); }

/// Piecewise-constant control with segments [t_{i-1}, t_i]. `switch_times`
/// holds the interior instants t_1 < ... < t_{N-1}; `levels` the N segment
/// values.
struct BangSequence {
  double u_max = 1.0;
  double T = 0.0;
  std::vector<double> switch_times;
  std::vector<Bang> levels;
};

/// Resonant pi-pulse u_max cos(omega0 (t - T/2)).
struct Rabi {
  double u_max = 1.0;
  double T = 0.0;
  double omega0 = 2.0;
};

enum class Parity : std::uint8_t { Even, Odd };

/// sign * u_max * Sgn[cos(omega_eff (t - T/2))] (Even) or with sin (Odd).
struct OneParamBB {
  double u_max = 1.0;
  double T = 0.0;
  double omega_eff = 2.0;
  int sign = 1;
  Parity parity = Parity::Even;
};

/// u_max [sum_{i=1}^{2N} (-1)^{i+1} tanh(beta (t - t_i)) - 1] with the mirror
/// constraint t_i = T - t_{2N+1-i}; only the first-half times are stored.
struct Tanh {
  double u_max = 1.0;
  double T = 0.0;
  double beta = 4.0;
  std::vector<double> half_times;

  /// All 2N switching instants, sorted; mirror-symmetric about T/2.
  [[nodiscard]] std::vector<double> full_times() const {
    std::vector<double> all;
    all.reserve(2 * half_times.size());
    for (double t : half_times) {
      all.push_back(t);
      all.push_back(T - t);
    }
    std::sort(all.begin(), all.end());
    return all;
  }
};

/// u_max [(1 - R) cos(omega (t - T/2)) + R cos(3 omega (t - T/2))], R in [-1/8, 1].
struct ThirdHarmonic {
  double u_max = 1.0;
  double T = 0.0;
  double omega = 2.0;
  double R = 0.0;
};

/// Uniform grid u_1..u_N held on [(i-1) dt, i dt), dt = T / N.
struct Sampled {
  double u_max = 1.0;
  double T = 0.0;
  std::vector<double> values;

  [[nodiscard]] double dt() const { return T / static_cast<double>(values.size()); }
};

using Protocol = std::variant<BangSequence, Rabi, OneParamBB, Tanh, ThirdHarmonic, Sampled>;

inline constexpr double kThirdHarmonicRMin = -0.125;
inline constexpr double kThirdHarmonicRMax = 1.0;

/// Default reduction density for smooth variants: grid points per unit T/pi.
inline constexpr double kDefaultPointsPerPi = 2000.0;

inline double duration(const Protocol& p) {
  return std::visit([](const auto& v) { return v.T; }, p);
}

inline double amplitude_bound(const Protocol& p) {
  return std::visit([](const auto& v) { return v.u_max; }, p);
}

inline std::string_view variant_name(const Protocol& p) {
  struct Namer {
    std::string_view operator()(const BangSequence&) const { return "bang_sequence"; }
    std::string_view operator()(const Rabi&) const { return "rabi"; }
    std::string_view operator()(const OneParamBB&) const { return "one_param_bb"; }
    std::string_view operator()(const Tanh&) const { return "tanh"; }
    std::string_view operator()(const ThirdHarmonic&) const { return "third_harmonic"; }
    std::string_view operator()(const Sampled&) const { return "sampled"; }
  };
  return std::visit(Namer{}, p);
}

namespace detail {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

inline void check_common(double u_max, double T) {
  require(u_max > 0.0 && std::isfinite(u_max), "protocol: u_max must be positive");
  require(T > 0.0 && std::isfinite(T), "protocol: duration T must be positive");
}

/// u_max [sum_i (-1)^{i+1} tanh(beta (t - t_i)) - 1] for sorted instants t_i.
inline double tanh_value(const std::vector<double>& sorted_times, double beta, double u_max, double t) {
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted_times.size(); ++i)
    sum += (i % 2 == 0 ? 1.0 : -1.0) * std::tanh(beta * (t - sorted_times[i]));
  return u_max * (sum - 1.0);
}

}  // namespace detail

/// Switching instants of the one-parameter bang-bang protocol: zeros of
/// cos (Even) or sin (Odd) of omega_eff (t - T/2) strictly inside (0, T),
/// generated symmetrically about T/2.
inline std::vector<double> one_param_switch_times(const OneParamBB& p) {
  const double half = 0.5 * p.T;
  const double spacing = M_PI / p.omega_eff;
  std::vector<double> offsets;
  if (p.parity == Parity::Even) {
    for (int k = 0;; ++k) {
      const double s = (0.5 + k) * spacing;
      if (s >= half) break;
      offsets.push_back(s);
    }
  } else {
    offsets.push_back(0.0);
    for (int k = 1;; ++k) {
      const double s = k * spacing;
      if (s >= half) break;
      offsets.push_back(s);
    }
  }
  std::vector<double> times;
  for (double s : offsets) {
    times.push_back(half - s);
    if (s > 0.0) times.push_back(half + s);
  }
  std::sort(times.begin(), times.end());
  return times;
}

inline BangSequence to_bang_sequence(const OneParamBB& p) {
  BangSequence b{p.u_max, p.T, one_param_switch_times(p), {}};
  std::vector<double> edges{0.0};
  edges.insert(edges.end(), b.switch_times.begin(), b.switch_times.end());
  edges.push_back(p.T);
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double s = 0.5 * (edges[i] + edges[i + 1]) - 0.5 * p.T;
    const double f = p.parity == Parity::Even ? std::cos(p.omega_eff * s) : std::sin(p.omega_eff * s);
    b.levels.push_back(detail::sgn(f) * p.sign > 0 ? Bang::Plus : Bang::Minus);
  }
  return b;
}

/// Throws ValidationError when the protocol violates its invariants.
inline void validate(const Protocol& protocol) {
  using detail::require;
  struct Check {
    void operator()(const BangSequence& b) const {
      detail::check_common(b.u_max, b.T);
      require(b.levels.size() == b.switch_times.size() + 1,
              "bang_sequence: need exactly one more level than switching times");
      double prev = 0.0;
      for (double t : b.switch_times) {
        require(std::isfinite(t) && t > prev, "bang_sequence: switching times must be strictly increasing in (0, T)");
        prev = t;
      }
      require(prev < b.T, "bang_sequence: switching times must lie below T");
    }
    void operator()(const Rabi& r) const {
      detail::check_common(r.u_max, r.T);
      require(r.omega0 > 0.0, "rabi: omega0 must be positive");
    }
    void operator()(const OneParamBB& o) const {
      detail::check_common(o.u_max, o.T);
      require(o.omega_eff > 0.0 && std::isfinite(o.omega_eff), "one_param_bb: omega_eff must be positive");
      require(o.sign == 1 || o.sign == -1, "one_param_bb: sign must be +1 or -1");
    }
    void operator()(const Tanh& h) const {
      detail::check_common(h.u_max, h.T);
      require(h.beta > 0.0 && std::isfinite(h.beta), "tanh: beta must be positive");
      for (double t : h.half_times)
        require(std::isfinite(t) && t >= 0.0 && t <= h.T, "tanh: switching times must lie in [0, T]");
    }
    void operator()(const ThirdHarmonic& h) const {
      detail::check_common(h.u_max, h.T);
      require(h.R >= kThirdHarmonicRMin && h.R <= kThirdHarmonicRMax,
              "third_harmonic: mixing ratio R must lie in [-1/8, 1]");
      require(std::isfinite(h.omega), "third_harmonic: omega must be finite");
    }
    void operator()(const Sampled& s) const {
      detail::check_common(s.u_max, s.T);
      require(!s.values.empty(), "sampled: need at least one grid value");
      for (double v : s.values)
        require(std::isfinite(v) && std::abs(v) <= s.u_max * (1.0 + 1e-12) + 1e-12,
                "sampled: |u| exceeds u_max");
    }
  };
  std::visit(Check{}, protocol);
}

/// u(t). Piecewise variants are right-continuous; u(T) is the last value.
inline double value(const Protocol& protocol, double t) {
  struct Eval {
    double t;
    double operator()(const BangSequence& b) const {
      const auto it = std::upper_bound(b.switch_times.begin(), b.switch_times.end(), t);
      return b.u_max * level(b.levels[static_cast<std::size_t>(it - b.switch_times.begin())]);
    }
    double operator()(const Rabi& r) const { return r.u_max * std::cos(r.omega0 * (t - 0.5 * r.T)); }
    double operator()(const OneParamBB& o) const {
      const double s = t - 0.5 * o.T;
      const double f = o.parity == Parity::Even ? std::cos(o.omega_eff * s) : std::sin(o.omega_eff * s);
      return o.sign * o.u_max * detail::sgn(f);
    }
    double operator()(const Tanh& h) const { return detail::tanh_value(h.full_times(), h.beta, h.u_max, t); }
    double operator()(const ThirdHarmonic& h) const {
      const double s = t - 0.5 * h.T;
      return h.u_max * ((1.0 - h.R) * std::cos(h.omega * s) + h.R * std::cos(3.0 * h.omega * s));
    }
    double operator()(const Sampled& s) const {
      const auto n = s.values.size();
      auto i = static_cast<std::size_t>(std::floor(t / s.dt()));
      return s.values[std::min(i, n - 1)];
    }
  };
  return std::visit(Eval{t}, protocol);
}

/// Piecewise-constant control: `edges` = {0, t_1, ..., T}, `values` one per segment.
struct PiecewiseConstant {
  std::vector<double> edges;
  std::vector<double> values;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  [[nodiscard]] double duration() const { return edges.back(); }
  [[nodiscard]] double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
};

inline PiecewiseConstant to_piecewise(const BangSequence& b) {
  PiecewiseConstant pc;
  pc.edges.reserve(b.switch_times.size() + 2);
  pc.edges.push_back(0.0);
  pc.edges.insert(pc.edges.end(), b.switch_times.begin(), b.switch_times.end());
  pc.edges.push_back(b.T);
  for (Bang l : b.levels) pc.values.push_back(b.u_max * level(l));
  return pc;
}

inline PiecewiseConstant to_piecewise(const Sampled& s) {
  PiecewiseConstant pc;
  const auto n = s.values.size();
  pc.edges.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) pc.edges[i] = s.T * static_cast<double>(i) / static_cast<double>(n);
  pc.values = s.values;
  return pc;
}

/// Number of grid points used when a smooth variant is reduced.
inline std::size_t reduction_points(double T, double points_per_pi = kDefaultPointsPerPi) {
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(points_per_pi * T / M_PI)));
}

/// Midpoint sampling of any protocol onto n uniform cells.
inline Sampled sample_uniform(const Protocol& protocol, std::size_t n) {
  Sampled s{amplitude_bound(protocol), duration(protocol), std::vector<double>(n)};
  const double dt = s.T / static_cast<double>(n);
  if (const auto* h = std::get_if<Tanh>(&protocol)) {
    const auto times = h->full_times();
    for (std::size_t i = 0; i < n; ++i)
      s.values[i] = detail::tanh_value(times, h->beta, h->u_max, (static_cast<double>(i) + 0.5) * dt);
    return s;
  }
  for (std::size_t i = 0; i < n; ++i) s.values[i] = value(protocol, (static_cast<double>(i) + 0.5) * dt);
  return s;
}

/// Exact piecewise-constant form for bang and sampled variants; midpoint grid
/// reduction at `points_per_pi` cells per unit T/pi for smooth variants.
inline PiecewiseConstant to_piecewise(const Protocol& protocol, double points_per_pi = kDefaultPointsPerPi) {
  if (const auto* b = std::get_if<BangSequence>(&protocol)) return to_piecewise(*b);
  if (const auto* o = std::get_if<OneParamBB>(&protocol)) return to_piecewise(to_bang_sequence(*o));
  if (const auto* s = std::get_if<Sampled>(&protocol)) return to_piecewise(*s);
  return to_piecewise(sample_uniform(protocol, reduction_points(duration(protocol), points_per_pi)));
}

}  // namespace qtoc
