#pragma once

// Fidelity-preserving smoothing of the bang-bang X gate: tanh-rounded
// switchings, the first-plus-third harmonic pulse, constrained smoothness
// optimization on a sampled grid, and spectral diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qtoc/dynamics.hpp"
#include "qtoc/errors.hpp"
#include "qtoc/optim.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/protocol.hpp"
#include "qtoc/xgate.hpp"

namespace qtoc {

enum class SmoothingScheme { Tanh, ThirdHarmonic, ConstrainedSmooth };

inline std::string to_string(SmoothingScheme s) {
  switch (s) {
    case SmoothingScheme::Tanh: return "tanh";
    case SmoothingScheme::ThirdHarmonic: return "third";
    case SmoothingScheme::ConstrainedSmooth: return "constrained";
  }
  return "?";
}

struct TraceRow {
  int iteration = 0;
  double c_smooth = 0.0;
  double c_x_plus_1 = 0.0;
};

struct SmoothingRun {
  SmoothingScheme scheme = SmoothingScheme::Tanh;
  double T = 0.0;
  ModelParams params{};
  Protocol protocol = Sampled{};
  double gap = 1.0;            ///< C_X + 1 of the returned protocol
  bool converged = false;
  // tanh
  double beta = 0.0;
  std::vector<double> half_times;
  // third harmonic
  double omega = 0.0;
  double R = 0.0;
  // constrained
  double c_smooth = 0.0;
  int iterations = 0;
  std::vector<TraceRow> trace;

  [[nodiscard]] bool accepted(double tol = 1e-6) const { return gap <= tol; }
};

// ---------------------------------------------------------------------------
// Tanh scheme

/// Mirror-symmetric tanh protocol from the first-half switching instants.
inline Tanh tanh_protocol(std::vector<double> half_times, double beta, double T, const ModelParams& p) {
  Tanh h{p.u_max, T, beta, std::move(half_times)};
  validate(h);
  return h;
}

struct SmoothOptConfig {
  int restarts = 6;
  int max_iterations = 2000;
  double tolerance = 1e-13;
  double target_gap = 1e-10;
  std::uint64_t seed = 7;
  double points_per_pi = kDefaultPointsPerPi;
};

inline double x_gap(const Protocol& protocol, const ModelParams& p, double points_per_pi) {
  return gate_cost(total_propagator(protocol, p, points_per_pi), GateKind::X) + 1.0;
}

/// Minimizes C_X over the N free first-half switching times. The first start
/// is the best one-parameter bang-bang protocol at T when it has 2N
/// switchings, otherwise zeros of cos(omega0 (t - T/2)); later starts jitter
/// the spacing.
inline SmoothingRun optimize_tanh(int N, double beta, double T, const ModelParams& p,
                                  const SmoothOptConfig& cfg = {}, const std::vector<double>* warm = nullptr) {
  if (N < 1) throw ValidationError("optimize_tanh: need at least one switching pair");
  if (!(T > 0.0) || !(beta > 0.0)) throw ValidationError("optimize_tanh: T and beta must be positive");
  const double half = 0.5 * T;
  auto spaced = [&](double omega) {
    std::vector<double> x(N);
    for (int i = 0; i < N; ++i) x[i] = std::clamp(half - (N - i - 0.5) * M_PI / omega, 0.0, half);
    return x;
  };
  std::vector<std::vector<double>> starts;
  if (warm && static_cast<int>(warm->size()) == N) starts.push_back(*warm);
  {
    const GateProblem gp{GateKind::X, p};
    const auto bb = optimize_omega_eff(T, gp);
    const auto times = one_param_switch_times(OneParamBB{p.u_max, T, bb.omega_eff, 1, Parity::Even});
    if (static_cast<int>(times.size()) == 2 * N) starts.emplace_back(times.begin(), times.begin() + N);
  }
  starts.push_back(spaced(p.omega0));
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  for (int r = 0; r < cfg.restarts; ++r) starts.push_back(spaced(p.omega0 * jitter(rng)));

  auto f = [&](std::span<const double> x) {
    return x_gap(Tanh{p.u_max, T, beta, std::vector<double>(x.begin(), x.end())}, p, cfg.points_per_pi);
  };
  optim::OptimizerConfig oc;
  oc.max_iterations = cfg.max_iterations;
  oc.tolerance = cfg.tolerance;
  oc.x_tolerance = 1e-10 * T;
  oc.bounds.assign(N, optim::Bound{0.0, half});
  oc.target = cfg.target_gap;
  optim::Result best;
  for (const auto& s : starts) {
    auto r = optim::nelder_mead(f, s, oc);
    if (best.x.empty() || r.f < best.f) best = std::move(r);
    if (best.f <= cfg.target_gap) break;
  }
  SmoothingRun run;
  run.scheme = SmoothingScheme::Tanh;
  run.T = T;
  run.params = p;
  run.beta = beta;
  run.half_times = best.x;
  std::sort(run.half_times.begin(), run.half_times.end());
  run.protocol = Tanh{p.u_max, T, beta, run.half_times};
  run.gap = best.f;
  run.converged = best.status != optim::Status::MaxIterations;
  return run;
}

/// Number of switching pairs suggested by the resonance estimate 2N ~ omega0 T / pi.
inline int tanh_pairs_estimate(double T, const ModelParams& p) {
  return std::max(1, static_cast<int>(std::lround(0.5 * p.omega0 * T / M_PI)));
}

/// Tries N - 1, N and N + 1 switching pairs around the resonance estimate.
inline SmoothingRun optimize_tanh_auto(double beta, double T, const ModelParams& p, const SmoothOptConfig& cfg = {}) {
  const int n0 = tanh_pairs_estimate(T, p);
  std::optional<SmoothingRun> best;
  for (int n : {n0, n0 - 1, n0 + 1}) {
    if (n < 1) continue;
    auto r = optimize_tanh(n, beta, T, p, cfg);
    if (!best || r.gap < best->gap) best = std::move(r);
    if (best->gap <= cfg.target_gap) break;
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Third-harmonic scheme

inline ThirdHarmonic third_harmonic_protocol(double omega, double R, double T, const ModelParams& p) {
  ThirdHarmonic h{p.u_max, T, omega, R};
  validate(h);
  return h;
}

/// Minimizes C_X over (omega, R), R clipped to [-1/8, 1], from a small grid
/// of starting frequencies around omega0 (plus an optional warm start).
inline SmoothingRun optimize_third_harmonic(double T, const ModelParams& p, const SmoothOptConfig& cfg = {},
                                            const std::vector<double>* warm = nullptr) {
  if (!(T > 0.0)) throw ValidationError("optimize_third_harmonic: T must be positive");
  auto f = [&](std::span<const double> x) {
    return x_gap(ThirdHarmonic{p.u_max, T, x[0], x[1]}, p, cfg.points_per_pi);
  };
  optim::OptimizerConfig oc;
  oc.max_iterations = cfg.max_iterations;
  oc.tolerance = cfg.tolerance;
  oc.x_tolerance = 1e-11;
  const double w_lo = 0.8 * p.omega0, w_hi = 1.1 * p.bang_frequency();
  oc.bounds = {optim::Bound{w_lo, w_hi}, optim::Bound{kThirdHarmonicRMin, kThirdHarmonicRMax}};
  oc.target = cfg.target_gap;
  std::vector<std::vector<double>> starts;
  if (warm && warm->size() == 2) starts.push_back(*warm);
  for (double w : {1.0, 0.98, 1.02, 0.96, 1.04})
    for (double R : {-0.06, 0.0}) starts.push_back({p.omega0 * w, R});
  optim::Result best;
  for (const auto& s : starts) {
    auto r = optim::nelder_mead(f, s, oc);
    if (best.x.empty() || r.f < best.f) best = std::move(r);
    if (best.f <= cfg.target_gap) break;
  }
  SmoothingRun run;
  run.scheme = SmoothingScheme::ThirdHarmonic;
  run.T = T;
  run.params = p;
  run.omega = best.x[0];
  run.R = best.x[1];
  run.protocol = ThirdHarmonic{p.u_max, T, run.omega, run.R};
  run.gap = best.f;
  run.converged = best.status != optim::Status::MaxIterations;
  return run;
}

struct PerfectTimeConfig {
  double start_fraction = 0.75;  ///< of T_Rabi
  double end_fraction = 1.2;
  double step = 0.01;            ///< of T_Rabi
  double resolution = 1e-4;      ///< of T_Rabi
  double tol_fidelity = 1e-6;
};

/// Smallest T (within the scan range) whose optimized smooth run completes
/// the gate. `optimize(T)` returns the run at that T.
template <class Optimize>
std::optional<SmoothingRun> min_perfect_time(Optimize&& optimize, const ModelParams& p,
                                             const PerfectTimeConfig& cfg = {}) {
  const double tr = p.rabi_time();
  auto g = [&](double T) { return optimize(T).gap; };
  const auto hit = optim::first_reach(g, cfg.start_fraction * tr, cfg.end_fraction * tr,
                                      {cfg.step * tr, cfg.tol_fidelity, cfg.resolution * tr, 0.05, 1e-6});
  if (!hit) return std::nullopt;
  return optimize(*hit);
}

// ---------------------------------------------------------------------------
// Smoothness objective

/// 1/2 int udot^2 dt with first differences: 1/2 sum (u_{i+1} - u_i)^2 / dt.
inline double smoothness_cost(const Sampled& s) {
  if (s.values.size() < 3) throw ValidationError("smoothness_cost: need at least three samples");
  const double dt = s.dt();
  double c = 0.0;
  for (std::size_t i = 0; i + 1 < s.values.size(); ++i) {
    const double d = s.values[i + 1] - s.values[i];
    c += d * d;
  }
  return 0.5 * c / dt;
}

/// Exact gradient of smoothness_cost: -(u_{i+1} - 2u_i + u_{i-1}) / dt, i.e.
/// -uddot dt, with the missing neighbour at each end replaced by the sample
/// itself (zero end slope).
inline std::vector<double> smoothness_gradient(const Sampled& s) {
  const std::size_t n = s.values.size();
  if (n < 3) throw ValidationError("smoothness_gradient: need at least three samples");
  const double dt = s.dt();
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? s.values[i - 1] : s.values[i];
    const double right = i + 1 < n ? s.values[i + 1] : s.values[i];
    g[i] = -(right - 2.0 * s.values[i] + left) / dt;
  }
  return g;
}

/// 1/2 int u^2 dt.
inline double power_cost(const Sampled& s) {
  double c = 0.0;
  for (double v : s.values) c += v * v;
  return 0.5 * c * s.dt();
}

inline std::vector<double> power_gradient(const Sampled& s) {
  std::vector<double> g(s.values);
  for (double& v : g) v *= s.dt();
  return g;
}

/// w_smooth C_smooth + w_power C_power.
struct SmoothObjective {
  double w_smooth = 1.0;
  double w_power = 0.0;

  [[nodiscard]] double value(const Sampled& s) const {
    double c = 0.0;
    if (w_smooth != 0.0) c += w_smooth * smoothness_cost(s);
    if (w_power != 0.0) c += w_power * power_cost(s);
    return c;
  }
  [[nodiscard]] std::vector<double> gradient(const Sampled& s) const {
    std::vector<double> g(s.values.size(), 0.0);
    if (w_smooth != 0.0) {
      const auto a = smoothness_gradient(s);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += w_smooth * a[i];
    }
    if (w_power != 0.0) {
      const auto b = power_gradient(s);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += w_power * b[i];
    }
    return g;
  }
};

struct ConstrainedConfig {
  std::size_t n_t = 1000;
  double step_fraction = 0.2;            ///< initial max smoothing step = step_fraction * u_max
  double min_step_fraction = 0.2 / 16.0; ///< the step is halved down to this floor
  double stop_fraction = 1.0 / 4000.0;   ///< stop when max |u(n+1) - u(n)| <= stop_fraction * u_max
  double projection_target = 1e-11;      ///< C_X + 1 reached by every projection
  int projection_iterations = 5000;
  int max_outer = 3000;
  SmoothObjective objective{};
};

/// Gradient projection of a sampled control onto C_X = -1 inside the
/// amplitude box. Throws OptimizationError when the target is not reached.
inline Sampled project_to_gate(Sampled s, const ModelParams& p, double target_gap, int max_iterations,
                               int* iterations = nullptr) {
  const CostSpec spec = CostSpec::gate(GateKind::X);
  auto pc_of = [&](std::span<const double> x) {
    PiecewiseConstant pc = to_piecewise(s);
    pc.values.assign(x.begin(), x.end());
    return pc;
  };
  auto f = [&](std::span<const double> x) { return spec.evaluate(total_propagator(pc_of(x), p)) + 1.0; };
  auto g = [&](std::span<const double> x) { return cost_gradient(pc_of(x), p, spec); };
  optim::GradientConfig gc;
  gc.max_iterations = max_iterations;
  gc.tolerance = 0.0;
  gc.initial_step = 10.0;
  gc.target = target_gap;
  const std::vector<optim::Bound> box(s.values.size(), optim::Bound{-p.u_max, p.u_max});
  auto r = optim::projected_gradient(f, g, s.values, box, gc);
  if (iterations) *iterations = r.iterations;
  if (!(r.f <= target_gap))
    throw OptimizationError("project_to_gate: C_X + 1 stalled at " + std::to_string(r.f) +
                            " (is T below the minimal gate time?)");
  s.values = std::move(r.x);
  return s;
}

namespace detail {

/// Solves (I + tau A) x = b where A is the Hessian of the quadratic objective
/// (tridiagonal: w_smooth * Neumann Laplacian / dt + w_power * dt).
inline std::vector<double> implicit_descent(const std::vector<double>& b, double tau, double dt,
                                            const SmoothObjective& obj) {
  const std::size_t n = b.size();
  const double k = tau * obj.w_smooth / dt;
  const double d0 = 1.0 + tau * obj.w_power * dt;
  std::vector<double> diag(n), off(n, -k), x(b);
  for (std::size_t i = 0; i < n; ++i) diag[i] = d0 + ((i == 0 || i + 1 == n) ? k : 2.0 * k);
  // Thomas algorithm; off-diagonal entries are all -k.
  std::vector<double> c(n, 0.0);
  c[0] = off[0] / diag[0];
  x[0] /= diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag[i] - off[i] * c[i - 1];
    c[i] = off[i] / m;
    x[i] = (x[i] - off[i] * x[i - 1]) / m;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace detail

/// One smoothing move of maximum amplitude `step` on the objective. The move
/// is a backward-Euler step, u - tau grad(u_new), with tau set by bisection so
/// that max |u_new - u| = step; an explicit step of that size is unstable for
/// grid-scale oscillations.
inline Sampled smoothing_step(const Sampled& s, const SmoothObjective& obj, double step) {
  const double dt = s.dt();
  auto change = [&](double tau) {
    const auto x = detail::implicit_descent(s.values, tau, dt, obj);
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - s.values[i]));
    return m;
  };
  double hi = 1.0;
  while (change(hi) < step && hi < 1e12) hi *= 4.0;
  double lo = 0.0;
  for (int i = 0; i < 100 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (change(mid) < step ? lo : hi) = mid;
  }
  Sampled out = s;
  out.values = detail::implicit_descent(s.values, hi, dt, obj);
  return out;
}

/// Alternates projection onto the gate constraint with descent steps on the
/// smoothness objective. The step starts at step_fraction * u_max and is
/// halved whenever the objective rises or the projected iterates stall
/// (max |u(n+1) - u(n)| <= stop_fraction * u_max); a stall at the floor step
/// ends the run. Returns the last projected iterate.
inline SmoothingRun constrained_smooth_optimize(double T, const ModelParams& p, const Protocol& initial,
                                                const ConstrainedConfig& cfg = {}) {
  p.validate();
  if (!(T > 0.0) || cfg.n_t < 3) throw ValidationError("constrained_smooth_optimize: need T > 0 and n_t >= 3");
  if (!(cfg.step_fraction > 0.0) || !(cfg.min_step_fraction > 0.0))
    throw ValidationError("constrained_smooth_optimize: step fractions must be positive");
  Sampled u = sample_uniform(initial, cfg.n_t);
  u.T = T;
  u.u_max = p.u_max;
  for (double& v : u.values) v = std::clamp(v, -p.u_max, p.u_max);

  SmoothingRun run;
  run.scheme = SmoothingScheme::ConstrainedSmooth;
  run.T = T;
  run.params = p;
  Sampled prev = project_to_gate(u, p, cfg.projection_target, cfg.projection_iterations);
  auto record = [&](int it, const Sampled& s) {
    const double gap = x_gap(s, p, kDefaultPointsPerPi);
    run.trace.push_back({it, cfg.objective.value(s), gap});
  };
  record(0, prev);
  double step = cfg.step_fraction;
  const double floor = std::min(cfg.min_step_fraction, cfg.step_fraction);
  for (int it = 1; it <= cfg.max_outer; ++it) {
    Sampled trial = smoothing_step(prev, cfg.objective, step * p.u_max);
    for (double& v : trial.values) v = std::clamp(v, -p.u_max, p.u_max);
    Sampled next = project_to_gate(trial, p, cfg.projection_target, cfg.projection_iterations);
    double change = 0.0;
    for (std::size_t i = 0; i < next.values.size(); ++i)
      change = std::max(change, std::abs(next.values[i] - prev.values[i]));
    prev = std::move(next);
    record(it, prev);
    run.iterations = it;
    const bool stalled = change <= cfg.stop_fraction * p.u_max;
    const bool rose = run.trace[it].c_smooth > run.trace[it - 1].c_smooth;
    if (stalled && step <= floor) {
      run.converged = true;
      break;
    }
    if (stalled || rose) step = std::max(0.5 * step, floor);
  }
  run.protocol = prev;
  run.c_smooth = cfg.objective.value(prev);
  run.gap = run.trace.back().c_x_plus_1;
  return run;
}

/// Least-squares fit of s * u_max cos(omega (t - T/2)) to a sampled pulse
/// (s = +-1). Returns omega and the L2 distance relative to u_max sqrt(T).
struct CosineFit {
  double omega = 0.0;
  int sign = 1;
  double relative_l2 = 0.0;
};

inline CosineFit fit_cosine(const Sampled& s, double omega_lo = 1.5, double omega_hi = 2.5) {
  const double dt = s.dt();
  auto dist = [&](double w, int sign) {
    double d = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const double t = (static_cast<double>(i) + 0.5) * dt;
      const double e = s.values[i] - sign * s.u_max * std::cos(w * (t - 0.5 * s.T));
      d += e * e * dt;
    }
    return std::sqrt(d);
  };
  CosineFit best;
  best.relative_l2 = std::numeric_limits<double>::infinity();
  for (int sign : {1, -1}) {
    const auto r = optim::scalar_minimize([&](double w) { return dist(w, sign); }, omega_lo, omega_hi, {400, 1e-12, 8});
    const double rel = r.f / (s.u_max * std::sqrt(s.T));
    if (rel < best.relative_l2) best = {r.x, sign, rel};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectrumLine {
  double f = 0.0;  ///< n / T
  std::complex<double> amplitude;
};

/// u~(f_n) = int_0^T (u(t)/u_max) e^{-i 2 pi f_n t} dt, f_n = n / T, n = 0..n_max,
/// integrated exactly over each constant segment.
inline std::vector<SpectrumLine> fourier_spectrum(const PiecewiseConstant& pc, double u_max, int n_max) {
  if (!(u_max > 0.0) || n_max < 0 || pc.size() == 0)
    throw ValidationError("fourier_spectrum: need u_max > 0, n_max >= 0 and a non-empty pulse");
  const double T = pc.duration();
  std::vector<SpectrumLine> out;
  for (int n = 0; n <= n_max; ++n) {
    const double w = 2.0 * M_PI * n / T;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < pc.size(); ++i) {
      const double a = pc.edges[i], b = pc.edges[i + 1];
      const double v = pc.values[i] / u_max;
      if (n == 0) {
        acc += v * (b - a);
      } else {
        acc += v * (std::polar(1.0, -w * a) - std::polar(1.0, -w * b)) / std::complex<double>(0.0, w);
      }
    }
    out.push_back({n / T, acc});
  }
  return out;
}

/// Spectrum of any protocol; smooth variants are reduced at `points_per_pi`.
inline std::vector<SpectrumLine> fourier_spectrum(const Protocol& protocol, int n_max,
                                                  double points_per_pi = kDefaultPointsPerPi) {
  validate(protocol);
  return fourier_spectrum(to_piecewise(protocol, points_per_pi), amplitude_bound(protocol), n_max);
}

/// Largest |u~| among lines whose angular frequency lies within omega0/2 of k omega0.
inline double harmonic_peak(const std::vector<SpectrumLine>& spec, double omega0, int k) {
  double peak = 0.0;
  for (const auto& l : spec)
    if (std::abs(2.0 * M_PI * l.f - k * omega0) <= 0.5 * omega0) peak = std::max(peak, std::abs(l.amplitude));
  return peak;
}

/// Largest |u~| among lines with angular frequency strictly above `omega`.
inline double peak_above(const std::vector<SpectrumLine>& spec, double omega) {
  double peak = 0.0;
  for (const auto& l : spec)
    if (2.0 * M_PI * l.f > omega) peak = std::max(peak, std::abs(l.amplitude));
  return peak;
}

// ---------------------------------------------------------------------------

/// First-order rotating-frame amplitude C~_1(t) for
/// u(t) = sum_N V_N cos(N omega t) (V[0] = V_1), from C~_1(0) = 0, C~_2(0) = 1:
/// sum_N V_N/2 [(1 - e^{i x_- t})/x_- + (1 - e^{i x_+ t})/x_+], x_+- = omega0 +- N omega.
inline std::complex<double> perturbative_amplitude(const std::vector<double>& V, double omega, double t,
                                                   const ModelParams& p) {
  auto term = [t](double x) -> std::complex<double> {
    if (std::abs(x * t) < 1e-12) return {0.0, -t};
    return (1.0 - std::polar(1.0, x * t)) / x;
  };
  std::complex<double> c{0.0, 0.0};
  for (std::size_t k = 0; k < V.size(); ++k) {
    const double N = static_cast<double>(k + 1);
    c += 0.5 * V[k] * (term(p.omega0 - N * omega) + term(p.omega0 + N * omega));
  }
  return c;
}

}  // namespace qtoc
