#pragma once

// Generic optimizers shared by the search modules: bounded Nelder-Mead with
// seeded restarts, 1-D scan + golden-section minimization, and projected
// gradient descent with backtracking.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qtoc/errors.hpp"

namespace qtoc::optim {

using Vector = std::vector<double>;
using Objective = std::function<double(std::span<const double>)>;
using Gradient = std::function<Vector(std::span<const double>)>;

struct Bound {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  [[nodiscard]] double clamp(double x) const { return std::clamp(x, lo, hi); }
};

struct OptimizerConfig {
  int max_iterations = 2000;
  double tolerance = 1e-10;  ///< spread of simplex values / objective decrease
  double x_tolerance = 1e-9; ///< simplex diameter (Nelder-Mead only)
  int restarts = 1;
  std::uint64_t seed = 0;
  std::vector<Bound> bounds;  ///< empty = unbounded; else one per dimension
  /// Stop as soon as the objective reaches this value (restarts included).
  std::optional<double> target;

  void validate(std::size_t dim) const {
    if (!(tolerance > 0.0)) throw ValidationError("optimizer tolerance must be positive");
    if (!bounds.empty() && bounds.size() != dim)
      throw ValidationError("optimizer bounds must match the problem dimension");
    for (const auto& b : bounds)
      if (!(b.lo <= b.hi)) throw ValidationError("optimizer bound has lo > hi");
  }
};

enum class Status { Converged, MaxIterations, TargetReached, LineSearchFailed };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::MaxIterations: return "max-iter";
    case Status::TargetReached: return "target-reached";
    case Status::LineSearchFailed: return "line-search-failed";
  }
  return "?";
}

struct Result {
  Vector x;
  double f = std::numeric_limits<double>::infinity();
  Status status = Status::MaxIterations;
  int iterations = 0;
  int evaluations = 0;
};

namespace detail {

inline void project(Vector& x, const std::vector<Bound>& bounds) {
  if (bounds.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = bounds[i].clamp(x[i]);
}

inline double checked(const Objective& f, const Vector& x, int& evals) {
  ++evals;
  const double v = f(x);
  if (std::isnan(v)) throw std::runtime_error("nelder_mead: objective returned NaN");
  return v;
}

}  // namespace detail

/// Bounded Nelder-Mead. Trial points are clipped into the box; the initial
/// simplex takes axis steps of 5% of each bound range (5% of |x0_i|, or
/// 2.5e-4, when unbounded). Deterministic: no randomness inside a single run.
inline Result nelder_mead(const Objective& f, Vector x0, const OptimizerConfig& cfg) {
  const std::size_t n = x0.size();
  cfg.validate(n);
  if (n == 0) {
    Result r;
    r.x = x0;
    r.f = f(x0);
    r.status = Status::Converged;
    r.evaluations = 1;
    return r;
  }
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;

  int evals = 0;
  detail::project(x0, cfg.bounds);
  std::vector<Vector> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) {
    double step;
    if (!cfg.bounds.empty() && cfg.bounds[i].finite()) {
      step = 0.05 * (cfg.bounds[i].hi - cfg.bounds[i].lo);
    } else {
      step = x0[i] != 0.0 ? 0.05 * std::abs(x0[i]) : 2.5e-4;
    }
    Vector& v = simplex[i + 1];
    v[i] += step;
    if (!cfg.bounds.empty() && v[i] > cfg.bounds[i].hi) v[i] = x0[i] - step;
    detail::project(v, cfg.bounds);
  }
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fv[i] = detail::checked(f, simplex[i], evals);

  std::vector<std::size_t> order(n + 1);
  Result res;
  res.status = Status::MaxIterations;
  int it = 0;
  Vector centroid(n), xr(n), xe(n), xc(n);
  for (; it < cfg.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    if (cfg.target && fv[best] <= *cfg.target) {
      res.status = Status::TargetReached;
      break;
    }
    double diam = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t d = 0; d < n; ++d) diam = std::max(diam, std::abs(simplex[i][d] - simplex[best][d]));
    if (fv[worst] - fv[best] <= cfg.tolerance && diam <= cfg.x_tolerance) {
      res.status = Status::Converged;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[order[k]][d];
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + kReflect * (centroid[d] - simplex[worst][d]);
    detail::project(xr, cfg.bounds);
    const double fr = detail::checked(f, xr, evals);

    if (fr < fv[best]) {
      for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + kExpand * (xr[d] - centroid[d]);
      detail::project(xe, cfg.bounds);
      const double fe = detail::checked(f, xe, evals);
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t d = 0; d < n; ++d) {
      const double far = outside ? xr[d] : simplex[worst][d];
      xc[d] = centroid[d] + kContract * (far - centroid[d]);
    }
    detail::project(xc, cfg.bounds);
    const double fc = detail::checked(f, xc, evals);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t d = 0; d < n; ++d)
        simplex[i][d] = simplex[best][d] + kShrink * (simplex[i][d] - simplex[best][d]);
      detail::project(simplex[i], cfg.bounds);
      fv[i] = detail::checked(f, simplex[i], evals);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = simplex[best];
  res.f = fv[best];
  res.iterations = it;
  res.evaluations = evals;
  if (cfg.target && res.f <= *cfg.target) res.status = Status::TargetReached;
  return res;
}

/// Runs `cfg.restarts` Nelder-Mead searches from starting points drawn by
/// `sampler` with a generator seeded from `cfg.seed`; returns the best.
/// Stops early once `cfg.target` is reached.
inline Result nelder_mead_multistart(const Objective& f, const std::function<Vector(std::mt19937_64&)>& sampler,
                                     const OptimizerConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  Result best;
  int evals = 0;
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    Result cur = nelder_mead(f, sampler(rng), cfg);
    evals += cur.evaluations;
    if (best.x.empty() || cur.f < best.f) best = std::move(cur);
    if (cfg.target && best.f <= *cfg.target) break;
  }
  best.evaluations = evals;
  return best;
}

// ---------------------------------------------------------------------------

struct ScalarConfig {
  int coarse_points = 400;
  double x_tolerance = 1e-12;  ///< golden-section bracket width, relative to bracket scale
  int max_basins = 64;         ///< refine at most this many lowest coarse minima
};

struct ScalarResult {
  double x = 0.0;
  double f = std::numeric_limits<double>::infinity();
  int basins = 0;
  int evaluations = 0;
};

/// Golden-section search for a local minimum of f in [a, b].
inline std::pair<double, double> golden_section(const std::function<double(double)>& f, double a, double b,
                                                double tol, int* evals = nullptr) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  int n = 2;
  while (std::abs(b - a) > tol * (1.0 + std::abs(a) + std::abs(b)) && n < 500) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++n;
  }
  if (evals) *evals += n;
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Global 1-D minimization over [lo, hi]: dense uniform scan, then
/// golden-section refinement inside every local-minimum basin of the scan.
inline ScalarResult scalar_minimize(const std::function<double(double)>& f, double lo, double hi,
                                    const ScalarConfig& cfg = {}) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
    throw ValidationError("scalar_minimize: bracket must be finite with lo < hi");
  const int n = std::max(3, cfg.coarse_points);
  std::vector<double> xs(n), fs(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = lo + (hi - lo) * i / (n - 1);
    fs[i] = f(xs[i]);
  }
  ScalarResult res;
  res.evaluations = n;
  std::vector<int> minima;
  for (int i = 0; i < n; ++i) {
    const bool left = i == 0 || fs[i] <= fs[i - 1];
    const bool right = i == n - 1 || fs[i] <= fs[i + 1];
    if (left && right) minima.push_back(i);
  }
  std::sort(minima.begin(), minima.end(), [&](int a, int b) { return fs[a] < fs[b]; });
  if (static_cast<int>(minima.size()) > cfg.max_basins) minima.resize(cfg.max_basins);
  for (int i : minima) {
    const double a = xs[std::max(0, i - 1)];
    const double b = xs[std::min(n - 1, i + 1)];
    auto [x, fx] = golden_section(f, a, b, cfg.x_tolerance, &res.evaluations);
    if (fs[i] < fx) {
      x = xs[i];
      fx = fs[i];
    }
    if (fx < res.f) {
      res.x = x;
      res.f = fx;
    }
    ++res.basins;
  }
  return res;
}

struct ReachConfig {
  double step = 0.01;          ///< coarse grid spacing
  double tolerance = 1e-6;     ///< threshold on g
  double resolution = 1e-6;    ///< final bracket width
  double dip_threshold = std::numeric_limits<double>::infinity();  ///< refine only dips below this
  double golden_tolerance = 1e-12;
};

/// Smallest x in [lo, hi] with g(x) <= tol for a nonnegative g whose
/// sublevel set may consist of narrow windows. A coarse scan either lands in
/// a window or sees a local minimum of g; such minima are refined by golden
/// section, and the left flank of the first window found is bisected.
inline std::optional<double> first_reach(const std::function<double(double)>& g, double lo, double hi,
                                         const ReachConfig& cfg) {
  if (!(lo < hi) || !(cfg.step > 0.0)) throw ValidationError("first_reach: need lo < hi and a positive step");
  auto flank = [&](double a, double b) {
    while (b - a > cfg.resolution) {
      const double mid = 0.5 * (a + b);
      (g(mid) <= cfg.tolerance ? b : a) = mid;
    }
    return b;
  };
  std::vector<std::pair<double, double>> h;
  const int n = static_cast<int>(std::floor((hi - lo) / cfg.step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double x = lo + cfg.step * i;
    const double v = g(x);
    if (v <= cfg.tolerance) {
      if (h.empty()) return x;
      return flank(h.back().first, x);
    }
    h.emplace_back(x, v);
    const std::size_t m = h.size();
    if (m >= 3 && h[m - 2].second <= h[m - 3].second && h[m - 2].second <= h[m - 1].second &&
        h[m - 2].second < cfg.dip_threshold) {
      const auto [xm, gm] = golden_section(g, h[m - 3].first, h[m - 1].first, cfg.golden_tolerance);
      if (gm <= cfg.tolerance) return flank(h[m - 3].first, xm);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

struct GradientConfig {
  int max_iterations = 5000;
  double tolerance = 1e-14;       ///< stop when the accepted decrease falls below this
  double initial_step = 1.0;
  double armijo = 1e-4;
  int max_backtracks = 60;
  std::optional<double> target;   ///< stop once f <= target
};

struct GradientResult {
  Vector x;
  double f = 0.0;
  Status status = Status::MaxIterations;
  int iterations = 0;
  std::vector<double> trace;  ///< accepted objective values, monotone nonincreasing
};

/// Projected gradient descent on a box with Armijo backtracking along the
/// projection arc x(a) = P(x - a g). The step grows by 2 after each accepted
/// iteration.
inline GradientResult projected_gradient(const Objective& f, const Gradient& grad, Vector x0,
                                         const std::vector<Bound>& bounds, const GradientConfig& cfg = {}) {
  if (!bounds.empty() && bounds.size() != x0.size())
    throw ValidationError("projected_gradient: bounds must match the dimension");
  GradientResult res;
  detail::project(x0, bounds);
  res.x = std::move(x0);
  res.f = f(res.x);
  res.trace.push_back(res.f);
  double step = cfg.initial_step;
  Vector trial(res.x.size());
  for (res.iterations = 0; res.iterations < cfg.max_iterations; ++res.iterations) {
    if (cfg.target && res.f <= *cfg.target) {
      res.status = Status::TargetReached;
      return res;
    }
    const Vector g = grad(res.x);
    bool accepted = false;
    bool stationary = false;
    double f_new = res.f;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = res.x[i] - step * g[i];
      detail::project(trial, bounds);
      double decrease = 0.0;
      for (std::size_t i = 0; i < trial.size(); ++i) decrease += g[i] * (trial[i] - res.x[i]);
      if (decrease >= 0.0) {
        stationary = bt == 0;
        break;
      }
      f_new = f(trial);
      if (f_new <= res.f + cfg.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.status = stationary ? Status::Converged : Status::LineSearchFailed;
      return res;
    }
    const double drop = res.f - f_new;
    res.x = trial;
    res.f = f_new;
    res.trace.push_back(res.f);
    if (drop <= cfg.tolerance) {
      res.status = Status::Converged;
      ++res.iterations;
      return res;
    }
    step *= 2.0;
  }
  if (cfg.target && res.f <= *cfg.target) res.status = Status::TargetReached;
  return res;
}

}  // namespace qtoc::optim
